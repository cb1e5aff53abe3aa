use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::basis::QubitBasis;
use super::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Unitary2};
use crate::scalar::Scalar;

/// Norm deviation accepted when reading a state from disk.
pub const LOAD_NORM_TOLERANCE: f64 = 1e-6;

/// Dense pure state of `n` qubits. Qubit 0 is the most significant bit of the
/// amplitude index, so basis strings read left to right in qubit order.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Scalar = f64> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

/// One branch of a projective single-qubit measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome<T: Scalar = f64> {
    pub outcome_bit: u8,
    pub probability: T,
    /// Normalized state of the remaining qubits; `None` when the branch
    /// probability is below the probability floor. A one-qubit register
    /// measured down to nothing yields a zero-qubit state.
    pub post_state: Option<PureState<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    Sample { seed: u64 },
    Enumerate,
}

#[inline]
fn czero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Bit mask of `qubit` in an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// Full index obtained by inserting `bit` for `qubit` into an index `rest`
/// over the other `n − 1` qubits.
#[inline]
pub(crate) fn insert_bit(rest: usize, n_qubits: usize, qubit: usize, bit: usize) -> usize {
    let shift = n_qubits - 1 - qubit;
    let low = rest & ((1 << shift) - 1);
    ((rest >> shift) << (shift + 1)) | (bit << shift) | low
}

impl<T: Scalar> PureState<T> {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let state = Self::unchecked(n_qubits, amplitudes)?;
        let norm = state.norm();
        if (norm - T::one()).abs() > T::TOLERANCE {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        Ok(state)
    }

    /// Normalizes the given amplitudes.
    pub fn from_unnormalized(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let mut state = Self::unchecked(n_qubits, amplitudes)?;
        let norm = state.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        for a in &mut state.amps {
            *a = *a / norm;
        }
        Ok(state)
    }

    fn unchecked(n_qubits: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        let expected = 1usize
            .checked_shl(n_qubits as u32)
            .ok_or(Error::RegisterTooLarge { n_qubits, limit: 30 })?;
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: amps.len(),
            });
        }
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![czero(); dim];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0).expect("index 0 always valid")
    }

    /// `a|0> + b|1>`, normalized.
    pub fn qubit(a: Complex<T>, b: Complex<T>) -> Result<Self> {
        Self::from_unnormalized(1, vec![a, b])
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    #[inline]
    pub fn amplitude(&self, index: usize) -> Complex<T> {
        self.amps[index]
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|<self|other>|²`.
    pub fn overlap_probability(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr())
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// `self ⊗ other`; the qubits of `other` follow those of `self`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        }
    }

    /// Tensor product of the factors in list order.
    pub fn embed_product(factors: &[Self]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or(Error::Empty("embed_product needs at least one factor"))?;
        Ok(rest.iter().fold(first.clone(), |acc, f| acc.tensor(f)))
    }

    pub fn apply_one_qubit(&self, u: &Unitary2<T>, target: usize) -> Result<Self> {
        self.check_qubit(target)?;
        let defect = u.unitarity_defect();
        if defect > T::TOLERANCE {
            return Err(Error::NotUnitary {
                deviation: defect.as_f64(),
            });
        }
        let mut out = self.clone();
        let mask = qubit_mask(self.n_qubits, target);
        for i in 0..self.dim() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let [x, y] = u.apply([self.amps[i], self.amps[j]]);
            out.amps[i] = x;
            out.amps[j] = y;
        }
        Ok(out)
    }

    /// Applies a `4×4` unitary with `q1` as the high bit of its index.
    pub fn apply_two_qubit(&self, u: &CMatrix<T>, q1: usize, q2: usize) -> Result<Self> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::InvalidParameter(format!(
                "two-qubit gate targets must differ (both {q1})"
            )));
        }
        if u.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: u.dim(),
            });
        }
        let defect = u.unitarity_defect();
        if defect > T::TOLERANCE {
            return Err(Error::NotUnitary {
                deviation: defect.as_f64(),
            });
        }
        let m1 = qubit_mask(self.n_qubits, q1);
        let m2 = qubit_mask(self.n_qubits, q2);
        let mut out = self.clone();
        for base in 0..self.dim() {
            if base & (m1 | m2) != 0 {
                continue;
            }
            let idx = [base, base | m2, base | m1, base | m1 | m2];
            let v: Vec<_> = idx.iter().map(|&i| self.amps[i]).collect();
            let w = u.apply(&v);
            for (k, &i) in idx.iter().enumerate() {
                out.amps[i] = w[k];
            }
        }
        Ok(out)
    }

    /// Unnormalized projection of `target` onto `basis.vector(outcome)`,
    /// with the measured qubit removed.
    pub fn project(&self, target: usize, basis: &QubitBasis<T>, outcome: u8) -> Result<Vec<Complex<T>>> {
        self.check_qubit(target)?;
        let b = basis.vector(outcome);
        let (c0, c1) = (b[0].conj(), b[1].conj());
        let n = self.n_qubits;
        Ok((0..self.dim() / 2)
            .map(|r| c0 * self.amps[insert_bit(r, n, target, 0)] + c1 * self.amps[insert_bit(r, n, target, 1)])
            .collect())
    }

    /// Unnormalized joint projection of several distinct qubits, each onto
    /// `basis.vector(outcome)`. Unmeasured qubits keep their relative order.
    pub fn project_many(&self, measurements: &[(usize, &QubitBasis<T>, u8)]) -> Result<(usize, Vec<Complex<T>>)> {
        let mut order: Vec<&(usize, &QubitBasis<T>, u8)> = measurements.iter().collect();
        order.sort_by(|a, b| b.0.cmp(&a.0));
        for m in &order {
            self.check_qubit(m.0)?;
        }
        for pair in order.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidParameter(format!("qubit {} measured twice", pair[0].0)));
            }
        }
        let mut current = self.clone();
        for &&(target, basis, outcome) in &order {
            let amps = current.project(target, basis, outcome)?;
            current = Self {
                n_qubits: current.n_qubits - 1,
                amps,
            };
        }
        Ok((current.n_qubits, current.amps))
    }

    /// The branch for a fixed outcome.
    pub fn measure_branch(&self, target: usize, basis: &QubitBasis<T>, outcome: u8) -> Result<BranchOutcome<T>> {
        let projected = self.project(target, basis, outcome)?;
        let probability = projected.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
        let post_state = if probability > T::PROBABILITY_FLOOR {
            let norm = probability.sqrt();
            Some(Self {
                n_qubits: self.n_qubits - 1,
                amps: projected.into_iter().map(|a| a / norm).collect(),
            })
        } else {
            None
        };
        Ok(BranchOutcome {
            outcome_bit: outcome,
            probability,
            post_state,
        })
    }

    /// Both branches with exact probabilities.
    pub fn measure_enumerate(&self, target: usize, basis: &QubitBasis<T>) -> Result<[BranchOutcome<T>; 2]> {
        Ok([
            self.measure_branch(target, basis, 0)?,
            self.measure_branch(target, basis, 1)?,
        ])
    }

    /// Draws one branch from the outcome distribution.
    pub fn measure_sample<R: Rng + ?Sized>(
        &self,
        target: usize,
        basis: &QubitBasis<T>,
        rng: &mut R,
    ) -> Result<BranchOutcome<T>> {
        let [zero, one] = self.measure_enumerate(target, basis)?;
        let total = zero.probability + one.probability;
        let draw: f64 = rng.gen();
        let pick_zero = T::lit(draw) * total < zero.probability;
        Ok(if pick_zero || one.post_state.is_none() {
            zero
        } else {
            one
        })
    }

    pub fn measure_in_basis(
        &self,
        target: usize,
        basis: &QubitBasis<T>,
        mode: MeasureMode,
    ) -> Result<Vec<BranchOutcome<T>>> {
        match mode {
            MeasureMode::Enumerate => Ok(self.measure_enumerate(target, basis)?.to_vec()),
            MeasureMode::Sample { seed } => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                Ok(vec![self.measure_sample(target, basis, &mut rng)?])
            }
        }
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_pure(self)
    }

    /// Reduced state on `keep` (a set: order and duplicates are normalized
    /// away, kept qubits stay in ascending register order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix<T>> {
        let keep = normalize_keep(keep, self.n_qubits)?;
        let (kept_idx, env_idx) = split_indices(self.n_qubits, &keep);
        let dk = kept_idx.len();
        let mut rho = CMatrix::zeros(dk);
        for i in 0..dk {
            for j in i..dk {
                let mut acc = czero();
                for &e in &env_idx {
                    acc = acc + self.amps[kept_idx[i] | e] * self.amps[kept_idx[j] | e].conj();
                }
                rho[(i, j)] = acc;
                rho[(j, i)] = acc.conj();
            }
        }
        Ok(DensityMatrix::from_parts(keep.len(), rho))
    }

    /// Multiplies by the global phase that makes the first amplitude with
    /// modulus above the tolerance real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let pivot = self.amps.iter().find(|a| a.norm() > T::TOLERANCE);
        match pivot {
            None => self.clone(),
            Some(p) => {
                let phase = p.conj() / p.norm();
                Self {
                    n_qubits: self.n_qubits,
                    amps: self.amps.iter().map(|a| a * phase).collect(),
                }
            }
        }
    }

    /// Reorders qubits: qubit `k` of the result is qubit `order[k]` of `self`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        for &q in order {
            self.check_qubit(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidParameter(format!("qubit {q} repeated in permutation")));
            }
        }
        let mut amps = vec![czero(); self.dim()];
        for (old, a) in self.amps.iter().enumerate() {
            let mut new = 0;
            for (k, &src) in order.iter().enumerate() {
                if old & qubit_mask(n, src) != 0 {
                    new |= qubit_mask(n, k);
                }
            }
            amps[new] = *a;
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Scales every amplitude by a global phase.
    pub fn with_global_phase(&self, phase: T) -> Self {
        let p = Complex::from_polar(T::one(), phase);
        Self {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a * p).collect(),
        }
    }
}

/// True iff `min_δ ‖a − e^{iδ} b‖ ≤ tol`.
pub fn states_equal_up_to_phase<T: Scalar>(a: &PureState<T>, b: &PureState<T>, tol: T) -> Result<bool> {
    Ok(phase_aligned_distance(a, b)? <= tol)
}

/// `min_δ ‖a − e^{iδ} b‖`, summed explicitly at the optimal phase.
pub fn phase_aligned_distance<T: Scalar>(a: &PureState<T>, b: &PureState<T>) -> Result<T> {
    let overlap = b.inner(a)?;
    let phase = if overlap.norm() > T::zero() {
        overlap / overlap.norm()
    } else {
        Complex::new(T::one(), T::zero())
    };
    let sum = a
        .amps
        .iter()
        .zip(&b.amps)
        .fold(T::zero(), |acc, (x, y)| acc + (x - y * phase).norm_sqr());
    Ok(sum.sqrt())
}

pub(crate) fn normalize_keep(keep: &[usize], n_qubits: usize) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::InvalidCut("keep set is empty".into()));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&q) = keep.iter().find(|&&q| q >= n_qubits) {
        return Err(Error::QubitOutOfRange { index: q, n_qubits });
    }
    Ok(keep)
}

/// Full-register index fragments for the kept qubits (in kept order) and
/// for every environment configuration.
pub(crate) fn split_indices(n_qubits: usize, keep: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let env: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let spread = |qubits: &[usize], value: usize| {
        let m = qubits.len();
        qubits.iter().enumerate().fold(0usize, |acc, (k, &q)| {
            if value & (1 << (m - 1 - k)) != 0 {
                acc | qubit_mask(n_qubits, q)
            } else {
                acc
            }
        })
    };
    let kept_idx = (0..1usize << keep.len()).map(|v| spread(keep, v)).collect();
    let env_idx = (0..1usize << env.len()).map(|v| spread(&env, v)).collect();
    (kept_idx, env_idx)
}

/// On-disk layout: `{"n_qubits": n, "amplitudes": [[re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StateFile<T: Scalar = f64> {
    pub n_qubits: usize,
    pub amplitudes: Vec<[T; 2]>,
}

impl<T: Scalar> From<&PureState<T>> for StateFile<T> {
    fn from(state: &PureState<T>) -> Self {
        Self {
            n_qubits: state.n_qubits,
            amplitudes: state.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl<T: Scalar> TryFrom<StateFile<T>> for PureState<T> {
    type Error = Error;

    /// Accepts norm deviations up to `LOAD_NORM_TOLERANCE`; amplitudes are
    /// kept bit-exact when already normalized to the kernel tolerance and
    /// renormalized otherwise.
    fn try_from(file: StateFile<T>) -> Result<Self> {
        let amps = file
            .amplitudes
            .iter()
            .map(|[re, im]| Complex::new(*re, *im))
            .collect();
        let state = Self::unchecked(file.n_qubits, amps)?;
        let norm = state.norm();
        if !norm.is_finite() || (norm - T::one()).abs().as_f64() > LOAD_NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        if (norm - T::one()).abs() > T::TOLERANCE {
            return Self::from_unnormalized(state.n_qubits, state.amps);
        }
        Ok(state)
    }
}

impl<T: Scalar> PureState<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&StateFile::from(self)).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile<T> = serde_json::from_str(text)?;
        Self::try_from(file)
    }
}

impl<T: Scalar> Serialize for PureState<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateFile::from(self).serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PureState<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = StateFile::<T>::deserialize(deserializer)?;
        Self::try_from(file).map_err(serde::de::Error::custom)
    }
}
