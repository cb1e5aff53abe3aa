//! Lower-bound estimates of the entanglement of preparation.
//!
//! The strategy class is non-adaptive local projective measurement: every
//! party outside the target pair measures its qubit once in a basis fixed in
//! advance. Each branch then leaves the pair in a pure state, and the
//! estimate is the best branch-averaged entropy found by multistart simplex
//! search over the Bloch angles of those bases.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measures::{
    assistance_report, entanglement_of_assistance_2q, entanglement_of_formation_2q, entropy_of_entanglement,
    AssistanceConfig, AssistanceReport,
};
use crate::optimize::{argmax_with_tie_break, halton_points, multistart, NelderMeadConfig};
use crate::statevec::{BasisAngles, PureState, QubitBasis};
use crate::webstates::BitString;

/// Largest register the estimator enumerates.
pub const MAX_QUBITS: usize = 12;

const BRANCH_FLOOR: f64 = 1e-12;

/// One fixed basis per measuring party.
#[derive(Debug, Clone, PartialEq)]
pub struct LoccStrategy {
    pub measuring_parties: Vec<usize>,
    pub bases: Vec<QubitBasis>,
}

impl LoccStrategy {
    pub fn new(measuring_parties: Vec<usize>, bases: Vec<QubitBasis>) -> Result<Self> {
        if measuring_parties.len() != bases.len() {
            return Err(Error::DimensionMismatch {
                expected: measuring_parties.len(),
                found: bases.len(),
            });
        }
        Ok(Self {
            measuring_parties,
            bases,
        })
    }

    /// The same basis for every party outside `pair`.
    pub fn uniform(n_parties: usize, pair: (usize, usize), basis: QubitBasis) -> Self {
        let parties: Vec<usize> = (0..n_parties).filter(|&p| p != pair.0 && p != pair.1).collect();
        let bases = vec![basis; parties.len()];
        Self {
            measuring_parties: parties,
            bases,
        }
    }

    /// `(polar, azimuthal)` pairs, one per measuring party.
    pub fn from_angles(measuring_parties: Vec<usize>, angles: &[f64]) -> Result<Self> {
        if angles.len() != 2 * measuring_parties.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * measuring_parties.len(),
                found: angles.len(),
            });
        }
        let bases = angles.chunks(2).map(|a| QubitBasis::from_angles(a[0], a[1])).collect();
        Ok(Self {
            measuring_parties,
            bases,
        })
    }

    pub fn angles(&self) -> Vec<BasisAngles> {
        self.bases.iter().map(|b| b.bloch_angles()).collect()
    }
}

impl Serialize for LoccStrategy {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, [f64; 2]> = self
            .measuring_parties
            .iter()
            .zip(self.angles())
            .map(|(p, a)| (p.to_string(), [a.polar, a.azimuthal]))
            .collect();
        map.serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub multistarts: usize,
    pub max_iterations: usize,
    /// Simplex diameter at which a local search stops.
    pub tolerance: f64,
    /// Shifts the low-discrepancy start points.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            multistarts: 16,
            max_iterations: 5_000,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.multistarts == 0 {
            return Err(Error::InvalidParameter("multistarts must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be positive", self.tolerance)));
        }
        Ok(())
    }

    fn search(&self) -> NelderMeadConfig<f64> {
        NelderMeadConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            initial_step: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprepEstimate {
    pub value: f64,
    pub strategy: LoccStrategy,
    pub converged: bool,
    pub evaluations: usize,
}

/// Which qubits form each side of the target cut and which are measured.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    n_qubits: usize,
    side_a: Vec<usize>,
    measured: Vec<usize>,
}

impl Layout {
    fn new(n_qubits: usize, side_a: Vec<usize>, side_b: Vec<usize>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::RegisterTooLarge {
                n_qubits,
                limit: MAX_QUBITS,
            });
        }
        for &q in side_a.iter().chain(&side_b) {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if side_a.is_empty() || side_b.is_empty() || side_a.iter().any(|q| side_b.contains(q)) {
            return Err(Error::InvalidCut(format!("sides {side_a:?} and {side_b:?}")));
        }
        let measured = (0..n_qubits)
            .filter(|q| !side_a.contains(q) && !side_b.contains(q))
            .collect();
        Ok(Self {
            n_qubits,
            side_a,
            measured,
        })
    }

    fn pair(n_qubits: usize, pair: (usize, usize)) -> Result<Self> {
        if pair.0 == pair.1 {
            return Err(Error::InvalidParameter(format!("pair ({}, {}) repeats a party", pair.0, pair.1)));
        }
        Self::new(n_qubits, vec![pair.0], vec![pair.1])
    }

    /// Positions of side A within the unmeasured register.
    fn side_a_positions(&self) -> Vec<usize> {
        let remaining: Vec<usize> = (0..self.n_qubits).filter(|q| !self.measured.contains(q)).collect();
        self.side_a
            .iter()
            .map(|q| remaining.iter().position(|r| r == q).expect("side qubit remains"))
            .collect()
    }

    /// `Σ_o p_o E(ψ_o)` with every measured qubit in `bases[k]`.
    fn average(&self, state: &PureState, bases: &[QubitBasis]) -> Result<f64> {
        let positions = self.side_a_positions();
        let remaining = self.n_qubits - self.measured.len();
        let mut total = 0.0;
        for outcomes in BitString::all(self.measured.len()) {
            let measurements: Vec<(usize, &QubitBasis, u8)> = self
                .measured
                .iter()
                .zip(bases)
                .zip(outcomes.bits())
                .map(|((&q, b), &o)| (q, b, o))
                .collect();
            let (_, amps) = state.project_many(&measurements)?;
            let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if p < BRANCH_FLOOR {
                continue;
            }
            let branch = PureState::from_unnormalized(remaining, amps)?;
            total += p * entropy_of_entanglement(&branch, &positions)?;
        }
        Ok(total)
    }

    fn average_from_angles(&self, state: &PureState, angles: &[f64]) -> f64 {
        let bases: Vec<QubitBasis> = angles.chunks(2).map(|a| QubitBasis::from_angles(a[0], a[1])).collect();
        self.average(state, &bases).unwrap_or(0.0)
    }

    /// Best strategy from `seeds` followed by the standard starts.
    fn optimize(&self, state: &PureState, cfg: &OptimizerConfig, seeds: Vec<Vec<f64>>) -> Result<(Vec<f64>, f64, bool, usize)> {
        cfg.validate()?;
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: state.n_qubits(),
            });
        }
        let m = self.measured.len();
        if m == 0 {
            return Ok((Vec::new(), self.average(state, &[])?, true, 1));
        }
        let dims = 2 * m;
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut starts = seeds;
        starts.push(vec![0.0; dims]);
        starts.push((0..dims).map(|k| if k % 2 == 0 { half_pi } else { 0.0 }).collect());
        starts.push(vec![half_pi; dims]);
        let extra = cfg.multistarts.saturating_sub(starts.len());
        if extra > 0 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let shift: Vec<f64> = (0..dims).map(|_| rng.gen::<f64>()).collect();
            let scaled = |k: usize, u: f64| {
                let u = (u + shift[k]).fract();
                if k.is_multiple_of(2) {
                    u * std::f64::consts::PI
                } else {
                    u * std::f64::consts::TAU
                }
            };
            if dims <= 32 {
                for p in halton_points::<f64>(extra, dims) {
                    starts.push(p.iter().enumerate().map(|(k, &u)| scaled(k, u)).collect());
                }
            } else {
                for _ in 0..extra {
                    starts.push((0..dims).map(|k| scaled(k, rng.gen())).collect());
                }
            }
        }
        starts.truncate(cfg.multistarts.max(1));

        let runs = multistart(|x: &[f64]| -self.average_from_angles(state, x), &starts, &cfg.search());
        let evaluations = runs.iter().map(|r| r.evaluations).sum::<usize>() + runs.len();
        let candidates: Vec<(f64, Vec<f64>)> = runs
            .iter()
            .map(|r| {
                let key = canonical_angles(&r.x);
                (self.average_from_angles(state, &key), key)
            })
            .collect();
        let best = argmax_with_tie_break(&candidates, 1e-12).expect("at least one start");
        let (value, angles) = candidates[best].clone();
        Ok((angles, value, runs[best].converged, evaluations))
    }
}

fn canonical_angles(x: &[f64]) -> Vec<f64> {
    x.chunks(2)
        .flat_map(|a| {
            let c = BasisAngles::new(a[0], a[1]).canonical();
            [c.polar, c.azimuthal]
        })
        .collect()
}

fn check_strategy(n: usize, pair: (usize, usize), strategy: &LoccStrategy) -> Result<()> {
    let expected: Vec<usize> = (0..n).filter(|&p| p != pair.0 && p != pair.1).collect();
    let mut given = strategy.measuring_parties.clone();
    given.sort_unstable();
    if given != expected {
        return Err(Error::InvalidParameter(format!(
            "strategy measures {:?}, expected {expected:?}",
            strategy.measuring_parties
        )));
    }
    Ok(())
}

/// `Σ_i p_i E(|Ψ_AB(o_i)>)` over every outcome of `strategy`.
pub fn average_prep_entanglement(state: &PureState, pair: (usize, usize), strategy: &LoccStrategy) -> Result<f64> {
    let layout = Layout::pair(state.n_qubits(), pair)?;
    check_strategy(state.n_qubits(), pair, strategy)?;
    let mut bases = Vec::with_capacity(layout.measured.len());
    for q in &layout.measured {
        let k = strategy
            .measuring_parties
            .iter()
            .position(|p| p == q)
            .expect("strategy checked");
        bases.push(strategy.bases[k]);
    }
    layout.average(state, &bases)
}

/// Best average found over local projective strategies; a lower bound on
/// the entanglement of preparation. The value is re-evaluated at the
/// returned strategy.
pub fn estimate_entanglement_of_preparation(
    state: &PureState,
    pair: (usize, usize),
    cfg: &OptimizerConfig,
) -> Result<EprepEstimate> {
    estimate_with_seeds(state, pair, cfg, Vec::new())
}

/// As [`estimate_entanglement_of_preparation`], with extra starting
/// strategies tried first.
pub fn estimate_with_seeds(
    state: &PureState,
    pair: (usize, usize),
    cfg: &OptimizerConfig,
    seeds: Vec<LoccStrategy>,
) -> Result<EprepEstimate> {
    let layout = Layout::pair(state.n_qubits(), pair)?;
    let mut seed_angles = Vec::new();
    for s in &seeds {
        check_strategy(state.n_qubits(), pair, s)?;
        seed_angles.push(
            layout
                .measured
                .iter()
                .flat_map(|q| {
                    let k = s.measuring_parties.iter().position(|p| p == q).expect("strategy checked");
                    let a = s.bases[k].bloch_angles();
                    [a.polar, a.azimuthal]
                })
                .collect(),
        );
    }
    let (angles, _, converged, evaluations) = layout.optimize(state, cfg, seed_angles)?;
    let strategy = LoccStrategy::from_angles(layout.measured.clone(), &angles)?;
    let value = average_prep_entanglement(state, pair, &strategy)?;
    Ok(EprepEstimate {
        value,
        strategy,
        converged,
        evaluations,
    })
}

/// Estimate against the two-qubit assistance value of the pair's reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssistanceComparison {
    pub estimate: EprepEstimate,
    pub assistance: AssistanceReport,
    /// `max` of the concurrence-based and ensemble-based assistance values.
    pub reference: f64,
    pub pass: bool,
}

pub fn check_eprep_le_assistance(
    state: &PureState,
    pair: (usize, usize),
    cfg: &OptimizerConfig,
) -> Result<AssistanceComparison> {
    let estimate = estimate_entanglement_of_preparation(state, pair, cfg)?;
    let rho = state.partial_trace(&[pair.0, pair.1])?;
    let assistance = assistance_report(&rho, &AssistanceConfig::default())?;
    let reference = assistance.value;
    Ok(AssistanceComparison {
        pass: estimate.value <= reference + 1e-3,
        estimate,
        assistance,
        reference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperadditivityReport {
    pub first: f64,
    pub second: f64,
    pub joint: f64,
    /// Per-qubit `(polar, azimuthal)` of the joint strategy, keyed by joint
    /// register index.
    pub joint_strategy: BTreeMap<String, [f64; 2]>,
    pub joint_converged: bool,
    pub pass: bool,
}

/// Joint register `psi ⊗ phi`: party `k` holds qubits `k` and `n + k`.
/// The joint search is seeded with the product of the per-copy optima.
pub fn check_superadditivity(
    psi: &PureState,
    phi: &PureState,
    pair: (usize, usize),
    cfg: &OptimizerConfig,
) -> Result<SuperadditivityReport> {
    let n = psi.n_qubits();
    if phi.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: phi.n_qubits(),
        });
    }
    if 2 * n > MAX_QUBITS {
        return Err(Error::RegisterTooLarge {
            n_qubits: 2 * n,
            limit: MAX_QUBITS,
        });
    }
    let first = estimate_entanglement_of_preparation(psi, pair, cfg)?;
    let second = estimate_entanglement_of_preparation(phi, pair, cfg)?;
    let joint_state = psi.tensor(phi);
    let layout = Layout::new(2 * n, vec![pair.0, n + pair.0], vec![pair.1, n + pair.1])?;

    let angle_of = |est: &EprepEstimate, party: usize| {
        let k = est.strategy.measuring_parties.iter().position(|&p| p == party);
        k.map(|k| est.strategy.bases[k].bloch_angles())
    };
    let seed: Vec<f64> = layout
        .measured
        .iter()
        .flat_map(|&q| {
            let a = if q < n { angle_of(&first, q) } else { angle_of(&second, q - n) };
            let a = a.expect("measured qubit belongs to a measuring party");
            [a.polar, a.azimuthal]
        })
        .collect();
    let (angles, _, joint_converged, _) = layout.optimize(&joint_state, cfg, vec![seed])?;
    let bases: Vec<QubitBasis> = angles.chunks(2).map(|a| QubitBasis::from_angles(a[0], a[1])).collect();
    let joint = layout.average(&joint_state, &bases)?;
    let joint_strategy = layout
        .measured
        .iter()
        .zip(angles.chunks(2))
        .map(|(q, a)| (q.to_string(), [a[0], a[1]]))
        .collect();
    Ok(SuperadditivityReport {
        first: first.value,
        second: second.value,
        joint,
        joint_strategy,
        joint_converged,
        pass: joint >= first.value + second.value - 1e-6,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneBranch {
    pub outcome: u8,
    pub probability: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub pre: f64,
    pub post_average: f64,
    pub branches: Vec<MonotoneBranch>,
    /// The pre-measurement estimate reached the pair maximum of 1.
    pub pre_certified: bool,
    /// `post ≤ pre + 1e−6`; asserted only when `pre_certified`, otherwise an
    /// observation about two lower bounds.
    pub holds: bool,
}

/// Estimate before and after `party` measures in `basis`.
pub fn monotone_spot_check(
    state: &PureState,
    pair: (usize, usize),
    local_op: (usize, &QubitBasis),
    cfg: &OptimizerConfig,
) -> Result<MonotoneReport> {
    let (party, basis) = local_op;
    if party == pair.0 || party == pair.1 {
        return Err(Error::InvalidParameter(format!("party {party} belongs to the pair")));
    }
    let pre = estimate_entanglement_of_preparation(state, pair, cfg)?.value;
    let shift = |q: usize| if q > party { q - 1 } else { q };
    let reduced_pair = (shift(pair.0), shift(pair.1));
    let mut branches = Vec::new();
    let mut post_average = 0.0;
    for b in state.measure_enumerate(party, basis)? {
        let estimate = match &b.post_state {
            Some(post) => estimate_entanglement_of_preparation(post, reduced_pair, cfg)?.value,
            None => 0.0,
        };
        post_average += b.probability * estimate;
        branches.push(MonotoneBranch {
            outcome: b.outcome_bit,
            probability: b.probability,
            estimate,
        });
    }
    Ok(MonotoneReport {
        pre,
        post_average,
        branches,
        pre_certified: pre >= 1.0 - 1e-6,
        holds: post_average <= pre + 1e-6,
    })
}

/// `Σ_i p_i E_f(ρ_AB(o_i))` for a strategy that may leave some parties
/// unmeasured; their qubits are traced out of each branch.
pub fn average_prep_formation(state: &PureState, pair: (usize, usize), strategy: &LoccStrategy) -> Result<f64> {
    let n = state.n_qubits();
    Layout::pair(n, pair)?;
    if strategy.measuring_parties.iter().any(|&p| p >= n || p == pair.0 || p == pair.1) {
        return Err(Error::InvalidParameter("strategy measures a pair member".into()));
    }
    let shift = |q: usize| q - strategy.measuring_parties.iter().filter(|&&m| m < q).count();
    let keep = [shift(pair.0), shift(pair.1)];
    let mut total = 0.0;
    for outcomes in BitString::all(strategy.measuring_parties.len()) {
        let measurements: Vec<(usize, &QubitBasis, u8)> = strategy
            .measuring_parties
            .iter()
            .zip(&strategy.bases)
            .zip(outcomes.bits())
            .map(|((&q, b), &o)| (q, b, o))
            .collect();
        let (remaining, amps) = state.project_many(&measurements)?;
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p < BRANCH_FLOOR {
            continue;
        }
        let branch = PureState::from_unnormalized(remaining, amps)?;
        let mut rho = branch.partial_trace(&keep)?;
        if keep[0] > keep[1] {
            rho = branch.permute_qubits(&swap_order(remaining, keep))?.partial_trace(&[keep[1], keep[0]])?;
        }
        total += p * entanglement_of_formation_2q(&rho)?;
    }
    Ok(total)
}

fn swap_order(n: usize, keep: [usize; 2]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.swap(keep[0], keep[1]);
    order
}

/// Two-qubit assistance value of the pair's reduction.
pub fn pair_assistance(state: &PureState, pair: (usize, usize)) -> Result<f64> {
    entanglement_of_assistance_2q(&state.partial_trace(&[pair.0, pair.1])?)
}
