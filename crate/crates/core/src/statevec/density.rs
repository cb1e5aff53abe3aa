use num_complex::Complex;

use super::state::{normalize_keep, split_indices, PureState};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, CMatrix};
use crate::scalar::{xlog2x, Scalar};

/// Density matrix on `n` qubits, same index convention as [`PureState`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Scalar = f64> {
    n_qubits: usize,
    rho: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    pub(crate) fn from_parts(n_qubits: usize, rho: CMatrix<T>) -> Self {
        debug_assert_eq!(rho.dim(), 1 << n_qubits);
        Self { n_qubits, rho }
    }

    pub fn from_pure(state: &PureState<T>) -> Self {
        Self::from_parts(state.n_qubits(), CMatrix::outer(state.amplitudes()))
    }

    /// Validates hermiticity, unit trace and positivity.
    pub fn from_matrix(rho: CMatrix<T>) -> Result<Self> {
        let dim = rho.dim();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidDensityMatrix(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        let tol = T::TOLERANCE;
        let herm = rho.hermiticity_defect();
        if herm > tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (defect {herm})"
            )));
        }
        let trace = rho.trace();
        if (trace.re - T::one()).abs() > tol || trace.im.abs() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} != 1")));
        }
        let min = hermitian_eigenvalues(&rho)[0];
        if min < -tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min}"
            )));
        }
        Ok(Self::from_parts(dim.trailing_zeros() as usize, rho))
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self::from_parts(
            n_qubits,
            CMatrix::identity(dim).scale(T::one() / T::lit(dim as f64)),
        )
    }

    /// Convex mixture `Σ w_k |ψ_k><ψ_k|` of pure states on the same register.
    pub fn mixture(terms: &[(T, PureState<T>)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::Empty("mixture needs a term"))?;
        let n = first.n_qubits();
        let mut rho = CMatrix::zeros(first.dim());
        for (w, psi) in terms {
            if psi.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: psi.n_qubits(),
                });
            }
            rho = rho.add(&CMatrix::outer(psi.amplitudes()).scale(*w));
        }
        Self::from_matrix(rho)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.rho[(i, j)]
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.rho
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    pub fn purity(&self) -> T {
        self.rho.matmul(&self.rho).trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.rho)
    }

    /// `max |ρ − I/d|` elementwise.
    pub fn max_deviation_from_maximally_mixed(&self) -> T {
        self.rho
            .max_abs_diff(Self::maximally_mixed(self.n_qubits).matrix())
    }

    /// Reduced state on `keep`, given as positions within this register.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let keep = normalize_keep(keep, self.n_qubits)?;
        let (kept_idx, env_idx) = split_indices(self.n_qubits, &keep);
        let dk = kept_idx.len();
        let mut out = CMatrix::zeros(dk);
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &e in &env_idx {
                    acc = acc + self.rho[(kept_idx[i] | e, kept_idx[j] | e)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(Self::from_parts(keep.len(), out))
    }

    /// `<χ|ρ|χ>`, clamped into `[0, 1]`.
    pub fn fidelity_with(&self, chi: &PureState<T>) -> Result<T> {
        if chi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: chi.dim(),
            });
        }
        let rho_chi = self.rho.apply(chi.amplitudes());
        let value = chi
            .amplitudes()
            .iter()
            .zip(&rho_chi)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (c, r)| acc + c.conj() * r);
        Ok(value.re.max(T::zero()).min(T::one()))
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = self.rho.sub(&other.rho);
        let sum = hermitian_eigen(&diff)
            .values
            .iter()
            .fold(T::zero(), |acc, v| acc + v.abs());
        Ok(sum * T::lit(0.5))
    }

    /// `ρ → U ρ U^†`.
    pub fn conjugate_by(&self, u: &CMatrix<T>) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        Ok(Self::from_parts(
            self.n_qubits,
            u.matmul(&self.rho).matmul(&u.adjoint()),
        ))
    }
}

/// `<χ|ρ|χ>`.
pub fn fidelity_state<T: Scalar>(rho: &DensityMatrix<T>, chi: &PureState<T>) -> Result<T> {
    rho.fidelity_with(chi)
}

/// Von Neumann entropy in bits. Eigenvalues are clamped to `[0, 1]`, so the
/// result lies in `[0, log2 dim]`.
pub fn vn_entropy<T: Scalar>(rho: &DensityMatrix<T>) -> T {
    let max = T::lit(rho.n_qubits() as f64);
    rho.eigenvalues()
        .into_iter()
        .map(|l| xlog2x(l.max(T::zero()).min(T::one())))
        .fold(T::zero(), |acc, v| acc + v)
        .max(T::zero())
        .min(max)
}
