use std::fmt;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::statevec::{insert_bit, MeasureMode, PureState};

/// Bell-basis outcome as two bits: `type_bit` 0 for φ, 1 for ψ; `sign_bit`
/// 0 for +, 1 for −.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BellOutcome {
    pub type_bit: u8,
    pub sign_bit: u8,
}

impl BellOutcome {
    pub const PHI_PLUS: Self = Self { type_bit: 0, sign_bit: 0 };
    pub const PHI_MINUS: Self = Self { type_bit: 0, sign_bit: 1 };
    pub const PSI_PLUS: Self = Self { type_bit: 1, sign_bit: 0 };
    pub const PSI_MINUS: Self = Self { type_bit: 1, sign_bit: 1 };
    pub const ALL: [Self; 4] = [Self::PHI_PLUS, Self::PHI_MINUS, Self::PSI_PLUS, Self::PSI_MINUS];

    pub fn from_bits(bits: [u8; 2]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter(format!("Bell bits {bits:?}")));
        }
        Ok(Self {
            type_bit: bits[0],
            sign_bit: bits[1],
        })
    }

    pub fn bits(self) -> [u8; 2] {
        [self.type_bit, self.sign_bit]
    }

    /// Amplitudes over `|xy>`, `x` the first measured qubit.
    pub fn vector(self) -> [Complex<f64>; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = if self.sign_bit == 0 { h } else { -h };
        let z = Complex::new(0.0, 0.0);
        if self.type_bit == 0 {
            [Complex::new(h, 0.0), z, z, Complex::new(s, 0.0)]
        } else {
            [z, Complex::new(h, 0.0), Complex::new(s, 0.0), z]
        }
    }

    /// `σ_k` in `|χ>|φ+> = ½ Σ_k |B_k> σ_k|χ>`: I, Z, X, XZ.
    pub fn teleport_operator(self) -> Unitary2 {
        match (self.type_bit, self.sign_bit) {
            (0, 0) => Unitary2::identity(),
            (0, _) => Unitary2::pauli_z(),
            (_, 0) => Unitary2::pauli_x(),
            _ => Unitary2::pauli_x() * Unitary2::pauli_z(),
        }
    }

    /// Receiver correction: I, Z, X, and ZX (X applied first).
    pub fn pauli_correction(self) -> Unitary2 {
        match (self.type_bit, self.sign_bit) {
            (0, 0) => Unitary2::identity(),
            (0, _) => Unitary2::pauli_z(),
            (_, 0) => Unitary2::pauli_x(),
            _ => Unitary2::pauli_z() * Unitary2::pauli_x(),
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.type_bit == 0 { "phi" } else { "psi" };
        let sign = if self.sign_bit == 0 { '+' } else { '-' };
        write!(f, "{kind}{sign}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellBranch {
    pub outcome: BellOutcome,
    pub probability: f64,
    /// Remaining register with both measured qubits removed; `None` below the
    /// probability floor.
    pub post_state: Option<PureState>,
}

/// Unnormalized projection onto `<B_k|` on `(q1, q2)`.
pub fn bell_project(state: &PureState, q1: usize, q2: usize, outcome: BellOutcome) -> Result<Vec<Complex<f64>>> {
    let n = state.n_qubits();
    for q in [q1, q2] {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n_qubits: n });
        }
    }
    if q1 == q2 {
        return Err(Error::InvalidParameter(format!("Bell measurement on qubit {q1} twice")));
    }
    let (lo, hi) = (q1.min(q2), q1.max(q2));
    let b = outcome.vector();
    let amps = state.amplitudes();
    Ok((0..1usize << (n - 2))
        .map(|r| {
            let mut acc = Complex::new(0.0, 0.0);
            for x in 0..2 {
                for y in 0..2 {
                    let (bit_lo, bit_hi) = if q1 < q2 { (x, y) } else { (y, x) };
                    let idx = insert_bit(insert_bit(r, n - 1, lo, bit_lo), n, hi, bit_hi);
                    acc += b[2 * x + y].conj() * amps[idx];
                }
            }
            acc
        })
        .collect())
}

pub fn bell_branch(state: &PureState, q1: usize, q2: usize, outcome: BellOutcome) -> Result<BellBranch> {
    let projected = bell_project(state, q1, q2, outcome)?;
    let probability: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
    let post_state = if probability > 1e-12 {
        Some(PureState::from_unnormalized(state.n_qubits() - 2, projected)?)
    } else {
        None
    };
    Ok(BellBranch {
        outcome,
        probability,
        post_state,
    })
}

/// Samples one outcome from `rng`.
pub fn bell_sample<R: Rng + ?Sized>(state: &PureState, q1: usize, q2: usize, rng: &mut R) -> Result<BellBranch> {
    let branches = BellOutcome::ALL
        .iter()
        .map(|&k| bell_branch(state, q1, q2, k))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mut draw = rng.gen::<f64>() * total;
    let mut last_possible = None;
    for b in branches {
        if b.post_state.is_none() {
            continue;
        }
        if draw < b.probability {
            return Ok(b);
        }
        draw -= b.probability;
        last_possible = Some(b);
    }
    last_possible.ok_or(Error::ZeroProbabilityBranch { probability: 0.0 })
}

/// Bell measurement of `(q1, q2)`; both qubits are removed.
pub fn bell_measure(state: &PureState, q1: usize, q2: usize, mode: MeasureMode) -> Result<Vec<BellBranch>> {
    match mode {
        MeasureMode::Enumerate => BellOutcome::ALL
            .iter()
            .map(|&k| bell_branch(state, q1, q2, k))
            .collect(),
        MeasureMode::Sample { seed } => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            Ok(vec![bell_sample(state, q1, q2, &mut rng)?])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{haar_qubit, states_equal_up_to_phase};
    use rand::SeedableRng;

    fn phi_plus() -> PureState {
        PureState::from_unnormalized(2, BellOutcome::PHI_PLUS.vector().to_vec()).unwrap()
    }

    #[test]
    fn bell_state_is_certain() {
        let b = bell_measure(&phi_plus(), 0, 1, MeasureMode::Enumerate).unwrap();
        assert!((b[0].probability - 1.0).abs() < 1e-15);
        assert!(b[1..].iter().all(|x| x.probability < 1e-15));
        let post = b[0].post_state.as_ref().unwrap();
        assert_eq!(post.n_qubits(), 0);
    }

    #[test]
    fn zero_state_splits_between_phi() {
        // |00> = (φ+ + φ−)/√2.
        let b = bell_measure(&PureState::zero_state(2), 0, 1, MeasureMode::Enumerate).unwrap();
        let p: Vec<f64> = b.iter().map(|x| x.probability).collect();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(p[2] < 1e-15 && p[3] < 1e-15);
    }

    #[test]
    fn teleportation_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let chi = haar_qubit(&mut rng);
            let joint = chi.tensor(&phi_plus());
            for k in BellOutcome::ALL {
                let b = bell_branch(&joint, 0, 1, k).unwrap();
                assert!((b.probability - 0.25).abs() < 1e-12);
                let expected = chi.apply_one_qubit(&k.teleport_operator(), 0).unwrap();
                let post = b.post_state.unwrap();
                assert!(states_equal_up_to_phase(&post, &expected, 1e-12).unwrap());
                let fixed = post.apply_one_qubit(&k.pauli_correction(), 0).unwrap();
                assert!(states_equal_up_to_phase(&fixed, &chi, 1e-12).unwrap());
            }
        }
    }

    #[test]
    fn reversed_qubit_order_transposes_outcome_vector() {
        // ψ− is antisymmetric; measuring (1, 0) instead of (0, 1) keeps the
        // probabilities and flips no outcome.
        let psi = PureState::from_unnormalized(2, BellOutcome::PSI_MINUS.vector().to_vec()).unwrap();
        let b = bell_branch(&psi, 1, 0, BellOutcome::PSI_MINUS).unwrap();
        assert!((b.probability - 1.0).abs() < 1e-15);
        assert!(bell_measure(&psi, 0, 0, MeasureMode::Enumerate).is_err());
        assert!(bell_measure(&psi, 0, 2, MeasureMode::Enumerate).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let joint = haar_qubit(&mut rng).tensor(&phi_plus());
        let a = bell_measure(&joint, 0, 1, MeasureMode::Sample { seed: 9 }).unwrap();
        let b = bell_measure(&joint, 0, 1, MeasureMode::Sample { seed: 9 }).unwrap();
        assert_eq!(a, b);
        let total: f64 = bell_measure(&joint, 0, 1, MeasureMode::Enumerate)
            .unwrap()
            .iter()
            .map(|x| x.probability)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
