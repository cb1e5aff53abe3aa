//! Message-passing simulation of publishing a qubit into a shared web state
//! and retrieving it at any party.
//!
//! Parties are actors on a single deterministic scheduler. Every classical
//! exchange goes through the [`Transcript`], which doubles as the message bus.

mod analysis;
mod bell;
mod run;
mod session;
mod transcript;

pub use analysis::{
    no_cloning_audit, noncooperative_average_fidelity, noncooperative_retrieve, withheld_message_fidelity,
    NoCloningReport, WithheldGroup, WithheldReport,
};
pub use bell::{bell_branch, bell_measure, bell_project, bell_sample, BellBranch, BellOutcome};
pub use run::{Party, ProtocolRun, Role, SharedState};
pub use session::{
    compute_correction, enumerate_branches, execute, order_independence_check, publish, publish_first, publish_last,
    random_interleaving, replay, retrieve, run_protocol, teleport, BranchResult, ForcedOutcomes, Label, OrderReport,
    ProtocolSession, ReplayOutcome, RunOutcome, Step, CORRECTION_TOLERANCE,
};
pub use transcript::{ClassicalMessage, MeasuredBasis, MeasurementRecord, MessageTag, Scope, Transcript};

#[cfg(test)]
mod tests;
