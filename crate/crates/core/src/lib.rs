//! Simulation toolkit for publishing a qubit to a network of parties through a
//! shared multipartite entangled state.
//!
//! The numerical kernel ([`statevec`], [`measures`], [`optimize`]) is generic
//! over the real scalar type; the protocol-level modules work in `f64`.

pub mod eprep;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod optimize;
pub mod protocol;
pub mod scalar;
pub mod statevec;
pub mod webstates;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PureStateF64 = statevec::PureState<f64>;
pub type PureStateF32 = statevec::PureState<f32>;
pub type DensityMatrixF64 = statevec::DensityMatrix<f64>;
pub type DensityMatrixF32 = statevec::DensityMatrix<f32>;
pub type QubitBasisF64 = statevec::QubitBasis<f64>;
pub type QubitBasisF32 = statevec::QubitBasis<f32>;
pub type Unitary2F64 = linalg::Unitary2<f64>;
pub type Unitary2F32 = linalg::Unitary2<f32>;
