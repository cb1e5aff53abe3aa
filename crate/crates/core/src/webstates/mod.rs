//! Web states: shared states from which any two parties can be left with a
//! maximally entangled pair after the others measure in fixed local bases.

mod bitstring;
mod canonical;
mod family;
mod verify;

pub use bitstring::BitString;
pub use canonical::{
    apply_local_unitaries, canonicalize, check_exchange_constraints, make_canonical_state,
    AppliedUnitary, CanonicalFormParams, CanonicalTerm, Canonicalized, ConstraintViolation,
};
pub use family::{
    expand_in_bases, make_contextual_example, make_ghz, make_web_state, random_web_state,
    PreparationBases, WebStateSpec,
};
pub use verify::{
    marginal_spectra, necessary_conditions, residual_after_measurement, spectra_differ, verify_pair,
    verify_pair_report, verify_web_state, BranchCase, NecessaryConditionsReport, PairAssistance,
    WebVerificationReport, ASSISTANCE_TOLERANCE,
};
