//! Dense state-vector and density-matrix kernel.

mod basis;
mod density;
mod random;
mod state;

pub use basis::{BasisAngles, QubitBasis};
pub use density::{fidelity_state, vn_entropy, DensityMatrix};
pub use random::{haar_qubit, random_state};
pub use state::{
    phase_aligned_distance, states_equal_up_to_phase, BranchOutcome, MeasureMode, PureState, StateFile,
    LOAD_NORM_TOLERANCE,
};
pub(crate) use state::insert_bit;
