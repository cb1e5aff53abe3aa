use std::collections::BTreeMap;

use num_complex::Complex;
use serde::Serialize;

use super::bell::BellOutcome;
use super::run::ProtocolRun;
use super::session::{enumerate_branches, publish_first, Label, ProtocolSession, Step};
use super::transcript::{MeasuredBasis, Transcript};
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::statevec::{DensityMatrix, PureState};

/// Retrieval without the assistants: the retriever applies the Pauli
/// correction for the broadcast Bell result and keeps its own reduced state.
pub fn noncooperative_retrieve(
    residual: &PureState,
    run: &ProtocolRun,
    transcript: &Transcript,
) -> Result<(DensityMatrix, f64)> {
    let bell = transcript
        .measurement_records
        .iter()
        .find(|r| r.basis == MeasuredBasis::Bell)
        .ok_or_else(|| Error::Protocol("transcript has no Bell result".into()))
        .and_then(|r| BellOutcome::from_bits([r.outcome[0], r.outcome[1]]))?;
    let session = ProtocolSession::resume(run, residual.clone(), transcript.clone())?;
    let q = session.position(Label::Party(run.retriever))?;
    let corrected = residual.apply_one_qubit(&bell.pauli_correction(), q)?;
    let rho = corrected.partial_trace(&[q])?;
    let fidelity = rho.fidelity_with(&run.chi)?;
    Ok((rho, fidelity))
}

/// Branch-averaged noncooperative fidelity.
pub fn noncooperative_average_fidelity(run: &ProtocolRun) -> Result<f64> {
    let mut total = 0.0;
    let mut session = ProtocolSession::start(run)?;
    let start = session.clone();
    for k in BellOutcome::ALL {
        session.clone_from(&start);
        match session.publish(Some(k)) {
            Ok(_) => {}
            Err(Error::ZeroProbabilityBranch { .. }) => continue,
            Err(e) => return Err(e),
        }
        let (_, f) = noncooperative_retrieve(session.state(), run, session.transcript())?;
        total += session.probability() * f;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCloningReport {
    /// Qubits of the environment: published qubit, publisher, assistants.
    pub environment_qubits: usize,
    pub trace_distance: f64,
    pub pass: bool,
}

/// Branch-weighted state of everyone except the retriever after a completed
/// cooperative retrieval: the collapsed Bell pair of the publisher and each
/// assistant's basis vector.
fn environment_state(run: &ProtocolRun) -> Result<DensityMatrix> {
    if !run.fully_cooperative() {
        return Err(Error::Protocol("the audit needs full cooperation".into()));
    }
    let mut terms = Vec::new();
    for b in enumerate_branches(run, &publish_first(run))? {
        let mut env = PureState::from_unnormalized(2, b.bell.vector().to_vec())?;
        for (&party, &o) in &b.prep {
            let v = run.bases.basis(party)?.vector(o);
            env = env.tensor(&PureState::qubit(v[0], v[1])?);
        }
        terms.push((b.probability, env));
    }
    DensityMatrix::mixture(&terms)
}

/// Trace distance between the environments left by two published qubits.
pub fn no_cloning_audit(run: &ProtocolRun, chi_a: &PureState, chi_b: &PureState) -> Result<NoCloningReport> {
    if run.n_parties > 7 {
        return Err(Error::RegisterTooLarge {
            n_qubits: run.n_parties,
            limit: 7,
        });
    }
    let mut a = run.clone();
    a.chi = chi_a.clone();
    let mut b = run.clone();
    b.chi = chi_b.clone();
    let rho_a = environment_state(&a)?;
    let rho_b = environment_state(&b)?;
    let trace_distance = rho_a.trace_distance(&rho_b)?;
    Ok(NoCloningReport {
        environment_qubits: rho_a.n_qubits(),
        trace_distance,
        pass: trace_distance <= 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithheldGroup {
    pub bell: BellOutcome,
    /// Outcomes the retriever does receive.
    pub known: BTreeMap<usize, u8>,
    pub probability: f64,
    /// Best fidelity over the unitary grid.
    pub best_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WithheldReport {
    pub withheld: usize,
    pub grid_steps: usize,
    pub groups: Vec<WithheldGroup>,
    /// Smallest best-fidelity over all groups.
    pub worst_best_fidelity: f64,
}

/// `R_z(a) R_y(b) R_z(c)`.
fn euler(a: f64, b: f64, c: f64) -> Unitary2 {
    let rz = |t: f64| {
        Unitary2::new([
            [Complex::from_polar(1.0, -t / 2.0), Complex::new(0.0, 0.0)],
            [Complex::new(0.0, 0.0), Complex::from_polar(1.0, t / 2.0)],
        ])
    };
    rz(a) * Unitary2::rotation(b / 2.0) * rz(c)
}

/// Best retriever fidelity when one assistant measures but its message never
/// arrives: the retriever holds a mixture over that assistant's outcomes and
/// picks one unitary per received-information group, searched on a grid.
pub fn withheld_message_fidelity(run: &ProtocolRun, withheld: usize, grid_steps: usize) -> Result<WithheldReport> {
    if !run.cooperating.contains(&withheld) {
        return Err(Error::InvalidParameter(format!("party {withheld} is not an assistant")));
    }
    let steps: Vec<Step> = std::iter::once(Step::Publish)
        .chain(run.cooperating.iter().map(|&p| Step::Measure(p)))
        .collect();
    let mut groups: BTreeMap<(BellOutcome, Vec<(usize, u8)>), Vec<(f64, PureState)>> = BTreeMap::new();
    for b in enumerate_branches(run, &steps)? {
        let known: Vec<(usize, u8)> = b.prep.iter().filter(|(&p, _)| p != withheld).map(|(&p, &o)| (p, o)).collect();
        groups.entry((b.bell, known)).or_default().push((b.probability, b.final_state));
    }
    let steps_n = grid_steps.max(2);
    let grid: Vec<Unitary2> = (0..steps_n)
        .flat_map(|i| (0..=steps_n).flat_map(move |j| (0..steps_n).map(move |k| (i, j, k))))
        .map(|(i, j, k)| {
            let tau = std::f64::consts::TAU;
            euler(
                tau * i as f64 / steps_n as f64,
                std::f64::consts::PI * j as f64 / steps_n as f64,
                tau * k as f64 / steps_n as f64,
            )
        })
        .collect();

    let mut out = Vec::new();
    for ((bell, known), members) in groups {
        let weight: f64 = members.iter().map(|(p, _)| p).sum();
        let normalized: Vec<(f64, PureState)> = members.into_iter().map(|(p, s)| (p / weight, s)).collect();
        let rho = DensityMatrix::mixture(&normalized)?;
        let best = grid
            .iter()
            .map(|u| {
                let m = u.to_matrix();
                rho.conjugate_by(&m).and_then(|r| r.fidelity_with(&run.chi)).unwrap_or(0.0)
            })
            .fold(0.0, f64::max);
        out.push(WithheldGroup {
            bell,
            known: known.into_iter().collect(),
            probability: weight,
            best_fidelity: best,
        });
    }
    let worst_best_fidelity = out.iter().map(|g| g.best_fidelity).fold(1.0, f64::min);
    Ok(WithheldReport {
        withheld,
        grid_steps: steps_n,
        groups: out,
        worst_best_fidelity,
    })
}
