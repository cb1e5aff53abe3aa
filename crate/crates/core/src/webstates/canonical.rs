use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::bitstring::BitString;
use super::family::WebStateSpec;
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::scalar::{angle_distance, wrap_angle};
use crate::statevec::PureState;

const CONSTRAINT_TOLERANCE: f64 = 1e-9;

/// Coefficients of the pair `A, B` conditioned on the string `s` of the
/// other `N − 2` parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTerm {
    pub c: f64,
    pub alpha: f64,
    pub theta: f64,
    pub phi: f64,
    pub omega: f64,
}

/// `Σ_s c_s [cos α_s (e^{iθ_s}|00> + e^{iφ_s}|11>)
///        + sin α_s (e^{iω_s}|01> − e^{i(θ_s+φ_s−ω_s)}|10>)]/√2 ⊗ |s>`,
/// with `A, B` the first two qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFormParams {
    n_parties: usize,
    terms: Vec<CanonicalTerm>,
}

impl CanonicalFormParams {
    /// `terms[k]` belongs to the string with index `k` over the last `N − 2`
    /// parties.
    pub fn new(n_parties: usize, terms: Vec<CanonicalTerm>) -> Result<Self> {
        if !(3..=20).contains(&n_parties) {
            return Err(Error::InvalidParameter(format!(
                "canonical forms need 3..=20 parties, got {n_parties}"
            )));
        }
        let expected = 1usize << (n_parties - 2);
        if terms.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: terms.len(),
            });
        }
        for (k, t) in terms.iter().enumerate() {
            let s = BitString::from_index(k, n_parties - 2);
            if !(t.c >= 0.0) {
                return Err(Error::InvalidParameter(format!("c_{s} = {} is negative", t.c)));
            }
            if !(t.alpha >= -CONSTRAINT_TOLERANCE && t.alpha <= FRAC_PI_2 + CONSTRAINT_TOLERANCE) {
                return Err(Error::InvalidParameter(format!(
                    "alpha_{s} = {} outside [0, π/2]",
                    t.alpha
                )));
            }
            if ![t.theta, t.phi, t.omega].iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite phase for {s}")));
            }
        }
        let weight: f64 = terms.iter().map(|t| t.c * t.c).sum();
        if (weight - 1.0).abs() > CONSTRAINT_TOLERANCE {
            return Err(Error::NotNormalized { norm: weight.sqrt() });
        }
        Ok(Self { n_parties, terms })
    }

    /// The constraint-satisfying family: uniform `c`, `α_s = α_0` on even
    /// and `π/2 − α_0` on odd strings, `ω_s = φ_s + γ + p(s)π`.
    pub fn web_family(n_parties: usize, alpha0: f64, thetas: &[f64], phis: &[f64], gamma: f64) -> Result<Self> {
        let count = 1usize << n_parties.saturating_sub(2);
        if thetas.len() != count || phis.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                found: thetas.len().min(phis.len()),
            });
        }
        let c = (1.0 / count as f64).sqrt();
        let terms = (0..count)
            .map(|k| {
                let parity = BitString::from_index(k, n_parties - 2).parity();
                CanonicalTerm {
                    c,
                    alpha: if parity == 0 { alpha0 } else { FRAC_PI_2 - alpha0 },
                    theta: thetas[k],
                    phi: phis[k],
                    omega: phis[k] + gamma + parity as f64 * PI,
                }
            })
            .collect();
        Self::new(n_parties, terms)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn terms(&self) -> &[CanonicalTerm] {
        &self.terms
    }

    pub fn term(&self, s: &BitString) -> Option<&CanonicalTerm> {
        if s.len() != self.n_parties - 2 {
            return None;
        }
        self.terms.get(s.to_index())
    }

    /// `γ = (ω − φ) mod 2π` read off the all-zero string.
    pub fn gamma(&self) -> f64 {
        let t = &self.terms[0];
        wrap_angle(t.omega - t.phi)
    }
}

pub fn make_canonical_state(p: &CanonicalFormParams) -> Result<PureState> {
    let n = p.n_parties;
    let rest = n - 2;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex::new(0.0, 0.0); 1 << n];
    for (k, t) in p.terms.iter().enumerate() {
        let (s, c) = t.alpha.sin_cos();
        let w = t.c * r;
        let pair = [
            Complex::from_polar(w * c, t.theta),
            Complex::from_polar(w * s, t.omega),
            -Complex::from_polar(w * s, t.theta + t.phi - t.omega),
            Complex::from_polar(w * c, t.phi),
        ];
        for (ab, a) in pair.into_iter().enumerate() {
            amps[(ab << rest) | k] = a;
        }
    }
    PureState::from_unnormalized(n, amps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConstraintViolation {
    NonUniformWeight { s: BitString, c: f64, expected: f64 },
    AlphaNotParityFunction { s: BitString, alpha: f64, expected: f64 },
    AlphaNotComplementary { alpha_even: f64, alpha_odd: f64 },
    PhaseOffsetMismatch { s: BitString, offset: f64, expected: f64 },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonUniformWeight { s, c, expected } => {
                write!(f, "c_{s} = {c}, expected uniform weight {expected}")
            }
            Self::AlphaNotParityFunction { s, alpha, expected } => {
                write!(f, "alpha_{s} = {alpha}, expected {expected} from its parity class")
            }
            Self::AlphaNotComplementary { alpha_even, alpha_odd } => {
                write!(f, "alpha_odd = {alpha_odd} is not π/2 − alpha_even ({alpha_even})")
            }
            Self::PhaseOffsetMismatch { s, offset, expected } => {
                write!(f, "omega_{s} − phi_{s} = {offset}, expected gamma + p(s)π = {expected}")
            }
        }
    }
}

/// Violations of the conditions under which every pair can be left in a
/// maximally entangled state: uniform weights, `α_s` a function of the parity
/// with `α_odd = π/2 − α_even`, and `ω_s − φ_s = γ + p(s)π` for one `γ`.
pub fn check_exchange_constraints(p: &CanonicalFormParams) -> Vec<ConstraintViolation> {
    let tol = CONSTRAINT_TOLERANCE;
    let rest = p.n_parties - 2;
    let uniform = (1.0 / p.terms.len() as f64).sqrt();
    let mut out = Vec::new();

    let mut alpha_of_class: [Option<f64>; 2] = [None, None];
    let gamma = p.gamma();
    for (k, t) in p.terms.iter().enumerate() {
        let s = BitString::from_index(k, rest);
        if (t.c - uniform).abs() > tol {
            out.push(ConstraintViolation::NonUniformWeight {
                s: s.clone(),
                c: t.c,
                expected: uniform,
            });
        }
        let parity = s.parity() as usize;
        match alpha_of_class[parity] {
            None => alpha_of_class[parity] = Some(t.alpha),
            Some(first) if (t.alpha - first).abs() > tol => {
                out.push(ConstraintViolation::AlphaNotParityFunction {
                    s: s.clone(),
                    alpha: t.alpha,
                    expected: first,
                });
            }
            Some(_) => {}
        }
        let expected = wrap_angle(gamma + parity as f64 * PI);
        let offset = wrap_angle(t.omega - t.phi);
        if angle_distance(offset, expected) > tol {
            out.push(ConstraintViolation::PhaseOffsetMismatch { s, offset, expected });
        }
    }
    if let [Some(even), Some(odd)] = alpha_of_class {
        if (even + odd - FRAC_PI_2).abs() > tol {
            out.push(ConstraintViolation::AlphaNotComplementary {
                alpha_even: even,
                alpha_odd: odd,
            });
        }
    }
    out
}

/// A single-qubit unitary applied to one party.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedUnitary {
    pub party: usize,
    pub label: &'static str,
    pub unitary: Unitary2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Canonicalized {
    pub spec: WebStateSpec,
    /// In application order.
    pub unitaries: Vec<AppliedUnitary>,
}

/// Applies `unitaries` in order.
pub fn apply_local_unitaries(state: &PureState, unitaries: &[AppliedUnitary]) -> Result<PureState> {
    unitaries
        .iter()
        .try_fold(state.clone(), |acc, u| acc.apply_one_qubit(&u.unitary, u.party))
}

/// Removes `γ` with `diag(1, e^{iγ})` on A and `diag(1, e^{−iγ})` on B, then
/// rotates A by `α_0`. The result is a member of the phase family:
/// even `s` leaves `θ_s` on `00s` and `φ_s` on `11s`; odd `s` leaves `θ_s` on
/// `10s` and `φ_s + π` on `01s`.
pub fn canonicalize(p: &CanonicalFormParams) -> Result<Canonicalized> {
    let violations = check_exchange_constraints(p);
    if !violations.is_empty() {
        return Err(Error::ConstraintsViolated(
            violations.iter().map(|v| v.to_string()).collect(),
        ));
    }
    let gamma = p.gamma();
    let alpha0 = p.terms[0].alpha;
    let unitaries = vec![
        AppliedUnitary {
            party: 0,
            label: "phase(gamma)",
            unitary: Unitary2::phase(gamma),
        },
        AppliedUnitary {
            party: 1,
            label: "phase(-gamma)",
            unitary: Unitary2::phase(-gamma),
        },
        AppliedUnitary {
            party: 0,
            label: "rotation(alpha_0)",
            unitary: Unitary2::rotation(alpha0),
        },
    ];

    let rest = p.n_parties - 2;
    let mut phases = BTreeMap::new();
    for (k, t) in p.terms.iter().enumerate() {
        let s = BitString::from_index(k, rest);
        let head = |a: u8, b: u8| BitString::new(vec![a, b]).expect("bits").concat(&s);
        if s.parity() == 0 {
            phases.insert(head(0, 0), wrap_angle(t.theta));
            phases.insert(head(1, 1), wrap_angle(t.phi));
        } else {
            phases.insert(head(1, 0), wrap_angle(t.theta));
            phases.insert(head(0, 1), wrap_angle(t.phi + PI));
        }
    }
    Ok(Canonicalized {
        spec: WebStateSpec::new(p.n_parties, phases)?,
        unitaries,
    })
}
