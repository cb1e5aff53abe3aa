use serde::Serialize;

use super::bitstring::BitString;
use super::family::PreparationBases;
use crate::error::{Error, Result};
use crate::measures::{entanglement_of_assistance_2q, max_entanglement_deviation};
use crate::scalar::Scalar;
use crate::statevec::{DensityMatrix, PureState, QubitBasis};

/// One measurement branch of the parties outside `pair`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchCase {
    pub pair: (usize, usize),
    /// Outcomes of the other parties in ascending party order.
    pub outcomes: BitString,
    pub probability: f64,
    /// `max |ρ_A − I/2|` of the normalized residual pair; `None` for branches
    /// below the probability floor.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WebVerificationReport {
    pub n_parties: usize,
    pub tolerance: f64,
    /// Ordered by pair, then outcome string.
    pub cases: Vec<BranchCase>,
    pub worst: Option<BranchCase>,
    pub pass: bool,
}

impl WebVerificationReport {
    pub fn worst_deviation(&self) -> f64 {
        self.worst.as_ref().and_then(|c| c.deviation).unwrap_or(0.0)
    }
}

fn check_register(state: &PureState, bases: &[QubitBasis]) -> Result<()> {
    if state.n_qubits() != bases.len() {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits(),
            found: bases.len(),
        });
    }
    Ok(())
}

/// Every branch of measuring all parties except `pair`, each in `bases[k]`.
/// Entries of `bases` at the pair positions are ignored.
pub fn verify_pair(state: &PureState, pair: (usize, usize), bases: &[QubitBasis]) -> Result<Vec<BranchCase>> {
    check_register(state, bases)?;
    let n = state.n_qubits();
    let (i, j) = (pair.0.min(pair.1), pair.0.max(pair.1));
    if j >= n {
        return Err(Error::QubitOutOfRange { index: j, n_qubits: n });
    }
    if i == j {
        return Err(Error::InvalidParameter(format!("pair ({i}, {j}) repeats a party")));
    }
    let others: Vec<usize> = (0..n).filter(|&q| q != i && q != j).collect();
    let mut cases = Vec::with_capacity(1 << others.len());
    for outcomes in BitString::all(others.len()) {
        let measurements: Vec<(usize, &QubitBasis, u8)> = others
            .iter()
            .zip(outcomes.bits())
            .map(|(&q, &o)| (q, &bases[q], o))
            .collect();
        let (_, amps) = state.project_many(&measurements)?;
        let probability: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let deviation = if probability > f64::PROBABILITY_FLOOR {
            let residual = PureState::from_unnormalized(2, amps)?;
            Some(max_entanglement_deviation(&residual)?)
        } else {
            None
        };
        cases.push(BranchCase {
            pair: (i, j),
            outcomes,
            probability,
            deviation,
        });
    }
    Ok(cases)
}

fn report(n_parties: usize, tolerance: f64, cases: Vec<BranchCase>) -> WebVerificationReport {
    let worst = cases
        .iter()
        .filter(|c| c.deviation.is_some())
        .fold(None::<&BranchCase>, |best, c| match best {
            Some(b) if b.deviation >= c.deviation => Some(b),
            _ => Some(c),
        })
        .cloned();
    let pass = cases.iter().all(|c| c.deviation.is_none_or(|d| d <= tolerance));
    WebVerificationReport {
        n_parties,
        tolerance,
        cases,
        worst,
        pass,
    }
}

/// Exhaustive check that every pair is left maximally entangled by every
/// outcome of the other parties measuring in their preparation bases.
pub fn verify_web_state(state: &PureState, bases: &PreparationBases, tol: f64) -> Result<WebVerificationReport> {
    check_register(state, bases.bases())?;
    if !bases.is_context_free() {
        return Err(Error::InvalidBasis(
            "exhaustive verification needs context-free bases".into(),
        ));
    }
    let n = state.n_qubits();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("web states need N ≥ 3, got {n}")));
    }
    let mut cases = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            cases.extend(verify_pair(state, (i, j), bases.bases())?);
        }
    }
    Ok(report(n, tol, cases))
}

/// Report for a single pair with arbitrary bases on the others.
pub fn verify_pair_report(
    state: &PureState,
    pair: (usize, usize),
    bases: &[QubitBasis],
    tol: f64,
) -> Result<WebVerificationReport> {
    Ok(report(state.n_qubits(), tol, verify_pair(state, pair, bases)?))
}

/// Normalized state of the other parties after `party` measures in its
/// preparation basis and obtains `outcome`.
pub fn residual_after_measurement(
    state: &PureState,
    bases: &PreparationBases,
    party: usize,
    outcome: u8,
) -> Result<PureState> {
    check_register(state, bases.bases())?;
    let branch = state.measure_branch(party, bases.basis(party)?, outcome)?;
    branch.post_state.ok_or(Error::ZeroProbabilityBranch {
        probability: branch.probability,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAssistance {
    pub pair: (usize, usize),
    pub assistance: f64,
}

/// Necessary (not sufficient) conditions for a web state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessaryConditionsReport {
    /// `max |ρ_k − I/2|` per party.
    pub single_party_deviation: Vec<f64>,
    pub single_party_pass: bool,
    pub pair_assistance: Vec<PairAssistance>,
    pub pair_assistance_pass: bool,
    pub tolerance: f64,
    pub assistance_tolerance: f64,
}

impl NecessaryConditionsReport {
    pub fn pass(&self) -> bool {
        self.single_party_pass && self.pair_assistance_pass
    }
}

pub const ASSISTANCE_TOLERANCE: f64 = 1e-3;

/// Every single-party reduction maximally mixed and every pair reduction with
/// unit assistance value.
pub fn necessary_conditions(state: &PureState, tol: f64) -> Result<NecessaryConditionsReport> {
    let n = state.n_qubits();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("web states need N ≥ 3, got {n}")));
    }
    let single_party_deviation = (0..n)
        .map(|k| Ok(state.partial_trace(&[k])?.max_deviation_from_maximally_mixed()))
        .collect::<Result<Vec<f64>>>()?;
    let mut pair_assistance = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = state.partial_trace(&[i, j])?;
            pair_assistance.push(PairAssistance {
                pair: (i, j),
                assistance: entanglement_of_assistance_2q(&rho)?,
            });
        }
    }
    Ok(NecessaryConditionsReport {
        single_party_pass: single_party_deviation.iter().all(|&d| d <= tol),
        pair_assistance_pass: pair_assistance
            .iter()
            .all(|p| (p.assistance - 1.0).abs() <= ASSISTANCE_TOLERANCE),
        single_party_deviation,
        pair_assistance,
        tolerance: tol,
        assistance_tolerance: ASSISTANCE_TOLERANCE,
    })
}

/// Sorted spectra of every reduced state on `sizes`-party subsets, each
/// spectrum descending, with subsets of one size grouped together.
pub fn marginal_spectra(state: &PureState, sizes: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n = state.n_qubits();
    let mut out = Vec::new();
    for &k in sizes {
        if k == 0 || k >= n {
            return Err(Error::InvalidCut(format!("subset size {k} for {n} parties")));
        }
        let mut group: Vec<Vec<f64>> = Vec::new();
        for mask in 0usize..1 << n {
            if mask.count_ones() as usize != k {
                continue;
            }
            let keep: Vec<usize> = (0..n).filter(|q| mask & (1 << (n - 1 - q)) != 0).collect();
            let rho: DensityMatrix = state.partial_trace(&keep)?;
            let mut spectrum = rho.eigenvalues();
            spectrum.reverse();
            group.push(spectrum);
        }
        group.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out.extend(group);
    }
    Ok(out)
}

/// Whether two spectrum multisets differ by more than `tol` anywhere.
pub fn spectra_differ(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() != b.len()
        || a.iter().zip(b).any(|(x, y)| {
            x.len() != y.len() || x.iter().zip(y).any(|(u, v)| (u - v).abs() > tol)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::entropy_of_entanglement;
    use crate::webstates::family::{make_contextual_example, make_ghz, make_web_state, random_web_state, WebStateSpec};
    use crate::webstates::BitString;
    use num_complex::Complex;
    use std::f64::consts::PI;

    #[test]
    fn ghz_passes_for_three_to_six() {
        for n in 3..=6 {
            let r = verify_web_state(&make_ghz(n).unwrap(), &PreparationBases::ghz(n), 1e-9).unwrap();
            assert!(r.pass, "N={n}");
            assert_eq!(r.cases.len(), n * (n - 1) / 2 * (1 << (n - 2)));
        }
    }

    #[test]
    fn ghz_also_passes_with_label_swapped_basis() {
        let bases = PreparationBases::uniform(5, QubitBasis::minus_plus());
        assert!(verify_web_state(&make_ghz(5).unwrap(), &bases, 1e-9).unwrap().pass);
    }

    #[test]
    fn phase_family_passes() {
        for seed in [42, 1, 2] {
            let (_, psi) = random_web_state(4, seed).unwrap();
            assert!(verify_web_state(&psi, &PreparationBases::computational(4), 1e-9).unwrap().pass);
        }
        let spec = WebStateSpec::uniform(4).unwrap().with_phase(&"0000".parse().unwrap(), PI).unwrap();
        assert!(verify_web_state(&make_web_state(&spec), &PreparationBases::computational(4), 1e-9).unwrap().pass);
        let (_, psi) = random_web_state(5, 99).unwrap();
        assert!(verify_web_state(&psi, &PreparationBases::computational(5), 1e-9).unwrap().pass);
    }

    #[test]
    fn perturbed_ghz_fails() {
        let g = make_ghz(4).unwrap();
        let mut amps = g.amplitudes().to_vec();
        amps[0] += Complex::new(0.05, 0.0);
        let psi = PureState::from_unnormalized(4, amps).unwrap();
        let r = verify_web_state(&psi, &PreparationBases::ghz(4), 1e-9).unwrap();
        assert!(!r.pass);
        assert!(r.worst_deviation() > 1e-9);
        // Oracle for one branch: measuring C, D in the x basis with outcome
        // ++ leaves (a|00> + b|11>)/norm with a = amps[0], b = amps[15].
        let a = (std::f64::consts::FRAC_1_SQRT_2 + 0.05) / psi.norm();
        let b = std::f64::consts::FRAC_1_SQRT_2;
        let p = a * a / (a * a + b * b);
        let case = r.cases.iter().find(|c| c.pair == (0, 1) && c.outcomes.to_string() == "00").unwrap();
        assert!((case.deviation.unwrap() - (p - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_bases() {
        let g = make_ghz(4).unwrap();
        assert!(verify_web_state(&g, &PreparationBases::ghz(3), 1e-9).is_err());
        assert!(verify_web_state(&make_ghz(2).unwrap(), &PreparationBases::ghz(2), 1e-9).is_err());
    }

    #[test]
    fn residuals_stay_web_states() {
        let g = make_ghz(4).unwrap();
        let bases = PreparationBases::ghz(4);
        let r = residual_after_measurement(&g, &bases, 2, 0).unwrap();
        assert!(verify_web_state(&r, &bases.without(2).unwrap(), 1e-9).unwrap().pass);

        let (_, psi) = random_web_state(5, 8).unwrap();
        let bases = PreparationBases::computational(5);
        for party in 0..5 {
            for outcome in 0..2 {
                let r = residual_after_measurement(&psi, &bases, party, outcome).unwrap();
                assert!(verify_web_state(&r, &bases.without(party).unwrap(), 1e-9).unwrap().pass);
            }
        }
    }

    #[test]
    fn two_measurements_leave_ghz_class_triple() {
        let (_, psi) = random_web_state(5, 12).unwrap();
        let bases = PreparationBases::computational(5);
        let r1 = residual_after_measurement(&psi, &bases, 4, 1).unwrap();
        let r2 = residual_after_measurement(&r1, &bases.without(4).unwrap(), 0, 0).unwrap();
        assert_eq!(r2.n_qubits(), 3);
        for cut in 0..3 {
            assert!((entropy_of_entanglement(&r2, &[cut]).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_probability_residual_is_an_error() {
        let g = make_ghz(3).unwrap();
        let e = residual_after_measurement(&g, &PreparationBases::computational(3), 0, 0).unwrap();
        assert_eq!(e.n_qubits(), 2);
        let product = PureState::<f64>::zero_state(3);
        assert!(matches!(
            residual_after_measurement(&product, &PreparationBases::computational(3), 0, 1),
            Err(Error::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn contextual_example_behaviour() {
        let psi = make_contextual_example();
        let z = vec![QubitBasis::computational(); 4];
        let x = vec![QubitBasis::x_basis(); 4];

        let ab_z = verify_pair(&psi, (0, 1), &z).unwrap();
        let first = ab_z.iter().find(|c| c.outcomes.to_string() == "00").unwrap();
        assert!(first.deviation.unwrap() < 1e-12);
        assert!(verify_pair_report(&psi, (0, 1), &z, 1e-9).unwrap().pass);
        assert!(verify_pair_report(&psi, (2, 3), &z, 1e-9).unwrap().pass);

        for pair in [(0, 2), (1, 2), (0, 3), (1, 3)] {
            assert!(verify_pair_report(&psi, pair, &x, 1e-9).unwrap().pass, "{pair:?}");
            assert!(!verify_pair_report(&psi, pair, &z, 1e-9).unwrap().pass, "{pair:?}");
        }
        assert!(!verify_pair_report(&psi, (0, 1), &x, 1e-9).unwrap().pass);
        assert!(!verify_pair_report(&psi, (2, 3), &x, 1e-9).unwrap().pass);
    }

    #[test]
    fn necessary_conditions_examples() {
        assert!(necessary_conditions(&make_ghz(5).unwrap(), 1e-9).unwrap().pass());
        let r = necessary_conditions(&PureState::zero_state(4), 1e-9).unwrap();
        assert!(!r.single_party_pass);
        let r = necessary_conditions(&make_contextual_example(), 1e-9).unwrap();
        assert!(r.single_party_pass && r.pair_assistance_pass);
        assert_eq!(r.pair_assistance.len(), 6);
    }

    #[test]
    fn marginal_spectra_distinguish_seeds() {
        for n in [4usize, 5] {
            let mut differing = 0;
            for k in 0..10u64 {
                let (_, a) = random_web_state(n, 100 + 2 * k).unwrap();
                let (_, b) = random_web_state(n, 101 + 2 * k).unwrap();
                let sa = marginal_spectra(&a, &[2, 3]).unwrap();
                let sb = marginal_spectra(&b, &[2, 3]).unwrap();
                if spectra_differ(&sa, &sb, 1e-6) {
                    differing += 1;
                }
            }
            assert!(differing >= 9, "N={n}: {differing}");
        }
        let (_, a) = random_web_state(4, 5).unwrap();
        assert!(!spectra_differ(&marginal_spectra(&a, &[2]).unwrap(), &marginal_spectra(&a, &[2]).unwrap(), 1e-12));
        let _ = BitString::zeros(1);
    }
}
