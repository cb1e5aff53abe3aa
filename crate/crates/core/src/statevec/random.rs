use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use super::state::PureState;

/// Haar-random pure state on `n_qubits` (normalized complex Gaussian vector).
pub fn random_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> PureState {
    loop {
        let amps = (0..1usize << n_qubits)
            .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(state) = PureState::from_unnormalized(n_qubits, amps) {
            return state;
        }
    }
}

/// Haar-random single-qubit state.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> PureState {
    random_state(1, rng)
}
