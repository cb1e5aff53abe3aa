//! Scalar entanglement measures and closed-form fidelity bounds.
//!
//! Two-qubit formation and assistance values use the concurrence closed forms
//! (Wootters; concurrence of assistance). The assistance report additionally
//! maximizes the average pure-state entropy over ensembles generated by
//! orthonormal measurements on a four-dimensional purifying system.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, CMatrix};
use crate::optimize::{argmax_with_tie_break, halton_points, multistart, NelderMeadConfig};
use crate::scalar::{binary_entropy, wrap_angle, Scalar};
use crate::statevec::{vn_entropy, DensityMatrix, PureState};

/// Parameters of the general maximally entangled two-qubit state
/// `cos α (e^{iθ}|00> + e^{iφ}|11>)/√2 + sin α (e^{iω}|01> − e^{i(θ+φ−ω)}|10>)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MaxEntangledParams<T: Scalar = f64> {
    pub alpha: T,
    pub theta: T,
    pub phi: T,
    pub omega: T,
}

impl<T: Scalar> MaxEntangledParams<T> {
    pub fn new(alpha: T, theta: T, phi: T, omega: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::FRAC_PI_2()) {
            return Err(Error::InvalidParameter(format!(
                "alpha {alpha} outside [0, π/2]"
            )));
        }
        Ok(Self {
            alpha,
            theta,
            phi,
            omega,
        })
    }

    /// Maps any real `α` to `[0, π/2]` by moving the signs of `cos α` and
    /// `sin α` into the phases, and wraps the phases into `[0, 2π)`.
    pub fn folded(alpha: T, theta: T, phi: T, omega: T) -> Self {
        let (s, c) = alpha.sin_cos();
        let (mut theta, mut phi, mut omega) = (theta, phi, omega);
        if c < T::zero() {
            theta = theta + T::PI();
            phi = phi + T::PI();
        }
        if s < T::zero() {
            omega = omega + T::PI();
        }
        Self {
            alpha: s.abs().atan2(c.abs()),
            theta: wrap_angle(theta),
            phi: wrap_angle(phi),
            omega: wrap_angle(omega),
        }
    }

    fn as_vec(&self) -> Vec<T> {
        vec![self.alpha, self.theta, self.phi, self.omega]
    }
}

/// Reported value of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub measure: String,
    pub value: f64,
    pub method: String,
    pub converged: bool,
    #[serde(skip)]
    pub tolerance: f64,
}

impl MeasureResult {
    pub fn exact(measure: &str, value: f64, method: &str) -> Self {
        Self {
            measure: measure.into(),
            value,
            method: method.into(),
            converged: true,
            tolerance: 1e-9,
        }
    }
}

fn check_cut(n_qubits: usize, cut: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut side: Vec<usize> = cut.to_vec();
    side.sort_unstable();
    side.dedup();
    if side.is_empty() || side.len() >= n_qubits {
        return Err(Error::InvalidCut(format!(
            "cut {cut:?} is not a proper nonempty subset of {n_qubits} qubits"
        )));
    }
    if let Some(&q) = side.iter().find(|&&q| q >= n_qubits) {
        return Err(Error::QubitOutOfRange { index: q, n_qubits });
    }
    let rest = (0..n_qubits).filter(|q| !side.contains(q)).collect();
    Ok((side, rest))
}

/// Entropy of entanglement (bits) across `cut | complement`.
pub fn entropy_of_entanglement<T: Scalar>(psi: &PureState<T>, cut: &[usize]) -> Result<T> {
    let (side, rest) = check_cut(psi.n_qubits(), cut)?;
    let smaller = if side.len() <= rest.len() { side } else { rest };
    Ok(vn_entropy(&psi.partial_trace(&smaller)?))
}

pub fn canonical_max_entangled<T: Scalar>(p: &MaxEntangledParams<T>) -> PureState<T> {
    let r = T::FRAC_1_SQRT_2();
    let (s, c) = p.alpha.sin_cos();
    let amps = vec![
        Complex::from_polar(c * r, p.theta),
        Complex::from_polar(s * r, p.omega),
        -Complex::from_polar(s * r, p.theta + p.phi - p.omega),
        Complex::from_polar(c * r, p.phi),
    ];
    PureState::new(2, amps).expect("maximally entangled parametrization is normalized")
}

/// `max |ρ_A − I/2| ≤ tol` for a two-qubit pure state.
pub fn is_maximally_entangled<T: Scalar>(psi: &PureState<T>, tol: T) -> Result<bool> {
    Ok(max_entanglement_deviation(psi)? <= tol)
}

/// `max |ρ_A − I/2|` for a two-qubit pure state.
pub fn max_entanglement_deviation<T: Scalar>(psi: &PureState<T>) -> Result<T> {
    if psi.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: psi.n_qubits(),
        });
    }
    Ok(psi.partial_trace(&[0])?.max_deviation_from_maximally_mixed())
}

fn check_two_qubit<T: Scalar>(rho: &DensityMatrix<T>) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    Ok(())
}

/// `ρ̃ = (σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y)`.
fn spin_flip<T: Scalar>(rho: &CMatrix<T>) -> CMatrix<T> {
    // σ_y ⊗ σ_y is real: antidiagonal (−1, 1, 1, −1).
    let sign = [-T::one(), T::one(), T::one(), -T::one()];
    let mut out = CMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            out[(i, j)] = rho[(3 - i, 3 - j)].conj() * (sign[i] * sign[j]);
        }
    }
    out
}

/// Square roots of the eigenvalues of `ρ ρ̃`, descending.
fn concurrence_spectrum<T: Scalar>(rho: &DensityMatrix<T>) -> Vec<T> {
    let sqrt_rho = hermitian_eigen(rho.matrix()).map_values(|l| l.max(T::zero()).sqrt());
    let r = sqrt_rho.matmul(&spin_flip(rho.matrix())).matmul(&sqrt_rho);
    let mut lambdas: Vec<T> = hermitian_eigenvalues(&r)
        .into_iter()
        .map(|l| l.max(T::zero()).sqrt())
        .collect();
    lambdas.reverse();
    lambdas
}

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`.
pub fn concurrence_2q<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    check_two_qubit(rho)?;
    let l = concurrence_spectrum(rho);
    Ok((l[0] - l[1] - l[2] - l[3]).max(T::zero()).min(T::one()))
}

/// Concurrence of assistance `Σ λ_i`.
pub fn concurrence_of_assistance<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    check_two_qubit(rho)?;
    let sum = concurrence_spectrum(rho)
        .into_iter()
        .fold(T::zero(), |acc, l| acc + l);
    Ok(sum.min(T::one()))
}

/// `h((1 + √(1 − C²)) / 2)`: entanglement of a pure pair with concurrence `C`.
pub fn entanglement_from_concurrence<T: Scalar>(c: T) -> T {
    let c = c.max(T::zero()).min(T::one());
    binary_entropy((T::one() + (T::one() - c * c).sqrt()) * T::lit(0.5))
}

pub fn entanglement_of_formation_2q<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(entanglement_from_concurrence(concurrence_2q(rho)?))
}

/// Closed-form assistance value from the concurrence of assistance.
pub fn entanglement_of_assistance_2q<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(entanglement_from_concurrence(concurrence_of_assistance(rho)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssistanceConfig<T: Scalar = f64> {
    pub starts: usize,
    pub search: NelderMeadConfig<T>,
}

impl<T: Scalar> Default for AssistanceConfig<T> {
    fn default() -> Self {
        Self {
            starts: 12,
            search: NelderMeadConfig {
                max_iterations: 20_000,
                tolerance: T::lit(1e-8),
                initial_step: T::lit(0.4),
            },
        }
    }
}

/// Both readings of the assistance value for a two-qubit mixed state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssistanceReport {
    pub concurrence_of_assistance: f64,
    /// `h((1 + √(1 − C_a²))/2)`.
    pub concurrence_based: f64,
    /// Best average entropy over four-outcome purification measurements.
    pub ensemble_based: f64,
    pub ensemble_converged: bool,
    /// `max(concurrence_based, ensemble_based)`; both are achievable, so both
    /// bound the true assistance value from below.
    pub value: f64,
    /// `min(S(ρ_A), S(ρ_B))`.
    pub upper_bound: f64,
    pub evaluations: usize,
}

/// Purification amplitudes `Φ[ab][k] = √λ_k v_k[ab]`.
fn purification<T: Scalar>(rho: &DensityMatrix<T>) -> CMatrix<T> {
    let eig = hermitian_eigen(rho.matrix());
    let mut phi = CMatrix::zeros(4);
    for k in 0..4 {
        let w = eig.values[k].max(T::zero()).sqrt();
        for ab in 0..4 {
            phi[(ab, k)] = eig.vectors[(ab, k)] * w;
        }
    }
    phi
}

/// Product of the six complex Givens rotations on `C^4`; 12 parameters.
fn givens_unitary<T: Scalar>(params: &[T]) -> CMatrix<T> {
    let mut u = CMatrix::identity(4);
    let mut k = 0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let (s, c) = params[k].sin_cos();
            let phase = Complex::from_polar(T::one(), params[k + 1]);
            k += 2;
            let mut g = CMatrix::identity(4);
            g[(i, i)] = Complex::new(c, T::zero());
            g[(j, j)] = Complex::new(c, T::zero());
            g[(i, j)] = -(phase.conj() * s);
            g[(j, i)] = phase * s;
            u = u.matmul(&g);
        }
    }
    u
}

fn pure_pair_entropy<T: Scalar>(v: &[Complex<T>]) -> T {
    // ρ_A entries for a two-qubit vector (unnormalized input is fine after
    // division by the norm).
    let norm = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    if norm <= T::PROBABILITY_FLOOR {
        return T::zero();
    }
    let a = (v[0].norm_sqr() + v[1].norm_sqr()) / norm;
    let b = (v[0] * v[2].conj() + v[1] * v[3].conj()) / norm;
    let d = T::one() - a;
    let half = T::lit(0.5);
    let radius = ((a - d) * (a - d) * T::lit(0.25) + b.norm_sqr()).sqrt();
    binary_entropy(half + radius)
}

fn ensemble_objective<T: Scalar>(phi: &CMatrix<T>, params: &[T]) -> T {
    let u = givens_unitary(params);
    let mut total = T::zero();
    for j in 0..4 {
        let v: Vec<Complex<T>> = (0..4)
            .map(|ab| {
                (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                    acc + phi[(ab, k)] * u[(k, j)].conj()
                })
            })
            .collect();
        let p = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        if p > T::PROBABILITY_FLOOR {
            total = total + p * pure_pair_entropy(&v);
        }
    }
    total
}

pub fn assistance_report<T: Scalar>(rho: &DensityMatrix<T>, cfg: &AssistanceConfig<T>) -> Result<AssistanceReport> {
    check_two_qubit(rho)?;
    let ca = concurrence_of_assistance(rho)?;
    let concurrence_based = entanglement_from_concurrence(ca);
    let phi = purification(rho);

    let mut starts = vec![vec![T::zero(); 12]];
    for p in halton_points::<T>(cfg.starts.saturating_sub(1), 12) {
        starts.push(
            p.iter()
                .enumerate()
                .map(|(i, u)| if i % 2 == 0 { *u * T::FRAC_PI_2() } else { *u * T::TAU() })
                .collect(),
        );
    }
    let runs = multistart(|x: &[T]| -ensemble_objective(&phi, x), &starts, &cfg.search);
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let best = runs
        .iter()
        .max_by(|a, b| (-a.value).partial_cmp(&(-b.value)).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least one start");
    let ensemble_based = ensemble_objective(&phi, &best.x);

    let s_a = vn_entropy(&rho.partial_trace(&[0])?);
    let s_b = vn_entropy(&rho.partial_trace(&[1])?);
    Ok(AssistanceReport {
        concurrence_of_assistance: ca.as_f64(),
        concurrence_based: concurrence_based.as_f64(),
        ensemble_based: ensemble_based.as_f64(),
        ensemble_converged: best.converged,
        value: concurrence_based.max(ensemble_based).as_f64(),
        upper_bound: s_a.min(s_b).as_f64(),
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletFractionConfig<T: Scalar = f64> {
    pub starts: usize,
    pub search: NelderMeadConfig<T>,
}

impl<T: Scalar> Default for SingletFractionConfig<T> {
    fn default() -> Self {
        Self {
            starts: 32,
            search: NelderMeadConfig {
                max_iterations: 5_000,
                tolerance: T::lit(1e-8),
                initial_step: T::lit(0.3),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingletFraction<T: Scalar = f64> {
    pub value: T,
    pub params: MaxEntangledParams<T>,
    pub converged: bool,
    pub evaluations: usize,
}

fn overlap<T: Scalar>(rho: &DensityMatrix<T>, p: &MaxEntangledParams<T>) -> T {
    let psi = canonical_max_entangled(p);
    rho.fidelity_with(&psi).unwrap_or_else(|_| T::zero())
}

/// Largest overlap of `rho` with any maximally entangled pair, by multistart
/// local search over `(α, θ, φ, ω)` from a Halton grid.
pub fn singlet_fraction<T: Scalar>(rho: &DensityMatrix<T>, cfg: &SingletFractionConfig<T>) -> Result<SingletFraction<T>> {
    check_two_qubit(rho)?;
    let starts: Vec<Vec<T>> = halton_points::<T>(cfg.starts.max(1), 4)
        .into_iter()
        .map(|p| vec![p[0] * T::FRAC_PI_2(), p[1] * T::TAU(), p[2] * T::TAU(), p[3] * T::TAU()])
        .collect();
    let objective = |x: &[T]| -overlap(rho, &MaxEntangledParams::folded(x[0], x[1], x[2], x[3]));
    let runs = multistart(objective, &starts, &cfg.search);
    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let candidates: Vec<(T, Vec<T>)> = runs
        .iter()
        .map(|r| {
            let p = MaxEntangledParams::folded(r.x[0], r.x[1], r.x[2], r.x[3]);
            (overlap(rho, &p), p.as_vec())
        })
        .collect();
    let best = argmax_with_tie_break(&candidates, T::lit(1e-12)).expect("at least one start");
    let x = &candidates[best].1;
    Ok(SingletFraction {
        value: candidates[best].0,
        params: MaxEntangledParams {
            alpha: x[0],
            theta: x[1],
            phi: x[2],
            omega: x[3],
        },
        converged: runs[best].converged,
        evaluations,
    })
}

/// `N / (2(N − 1))`.
pub fn singlet_fraction_bound<T: Scalar>(n_parties: usize) -> Result<T> {
    if n_parties < 2 {
        return Err(Error::InvalidParameter(format!("N = {n_parties} < 2")));
    }
    let n = T::lit(n_parties as f64);
    Ok(n / (T::lit(2.0) * (n - T::one())))
}

/// `(2N − 1) / (3(N − 1))`.
pub fn cloning_fidelity_bound<T: Scalar>(n_parties: usize) -> Result<T> {
    if n_parties < 2 {
        return Err(Error::InvalidParameter(format!("N = {n_parties} < 2")));
    }
    let n = T::lit(n_parties as f64);
    Ok((T::lit(2.0) * n - T::one()) / (T::lit(3.0) * (n - T::one())))
}
