use std::collections::BTreeMap;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bell::{bell_branch, bell_sample, BellOutcome};
use super::run::ProtocolRun;
use super::transcript::{MeasuredBasis, MeasurementRecord, MessageTag, Scope, Transcript};
use crate::error::{Error, Result};
use crate::linalg::Unitary2;
use crate::statevec::{PureState, QubitBasis};
use crate::webstates::{BitString, PreparationBases};

/// Unitary deviation allowed when turning a residual pair into a correction.
pub const CORRECTION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Party(usize),
    Published,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Publish,
    Measure(usize),
    Correct,
}

/// Publish, then every cooperating assistant in ascending order, then correct.
pub fn publish_first(run: &ProtocolRun) -> Vec<Step> {
    let mut steps = vec![Step::Publish];
    steps.extend(run.cooperating.iter().map(|&p| Step::Measure(p)));
    steps.push(Step::Correct);
    steps
}

/// Every cooperating assistant first, then publish, then correct.
pub fn publish_last(run: &ProtocolRun) -> Vec<Step> {
    let mut steps: Vec<Step> = run.cooperating.iter().map(|&p| Step::Measure(p)).collect();
    steps.push(Step::Publish);
    steps.push(Step::Correct);
    steps
}

/// Shuffled publish and measurement steps, correction last.
pub fn random_interleaving(run: &ProtocolRun, seed: u64) -> Vec<Step> {
    let mut steps: Vec<Step> = run.cooperating.iter().map(|&p| Step::Measure(p)).collect();
    steps.push(Step::Publish);
    steps.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    steps.push(Step::Correct);
    steps
}

/// Outcomes to impose instead of sampling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForcedOutcomes {
    pub bell: Option<BellOutcome>,
    pub prep: BTreeMap<usize, u8>,
}

/// The two-qubit state left on `pair` after every other party measures in
/// its basis: `M[a][b]` with `a` the first party's bit. Unnormalized.
fn residual_pair(
    shared: &PureState,
    bases: &PreparationBases,
    prep: &BitString,
    pair: (usize, usize),
) -> Result<[[Complex<f64>; 2]; 2]> {
    let n = shared.n_qubits();
    let others: Vec<usize> = (0..n).filter(|&q| q != pair.0 && q != pair.1).collect();
    if prep.len() != others.len() {
        return Err(Error::DimensionMismatch {
            expected: others.len(),
            found: prep.len(),
        });
    }
    let measurements = others
        .iter()
        .zip(prep.bits())
        .map(|(&q, &o)| Ok((q, bases.basis(q)?, o)))
        .collect::<Result<Vec<(usize, &QubitBasis, u8)>>>()?;
    let (_, v) = shared.project_many(&measurements)?;
    let mut m = [[Complex::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            // `v` is ordered by ascending register position.
            m[a][b] = if pair.0 < pair.1 { v[2 * a + b] } else { v[2 * b + a] };
        }
    }
    Ok(m)
}

/// Local unitary on the retriever that undoes both the Bell-outcome Pauli and
/// the residual pair left by the assistants' outcomes `prep` (ascending
/// party order, publisher and retriever excluded).
///
/// With the residual written `(I ⊗ V)|φ+>`, the retriever holds `V σ_k |χ>`;
/// the correction is `P_k V^†` with `V^† = √2 M^*`.
pub fn compute_correction(
    shared: &PureState,
    bases: &PreparationBases,
    bell: BellOutcome,
    prep: &BitString,
    pair: (usize, usize),
) -> Result<Unitary2> {
    let m = residual_pair(shared, bases, prep, pair)?;
    let weight: f64 = m.iter().flatten().map(|a| a.norm_sqr()).sum();
    if weight <= 1e-12 {
        return Err(Error::ZeroProbabilityBranch { probability: weight });
    }
    let scale = (2.0 / weight).sqrt();
    let v_dagger = Unitary2::new([
        [m[0][0].conj() * scale, m[0][1].conj() * scale],
        [m[1][0].conj() * scale, m[1][1].conj() * scale],
    ]);
    let deviation = v_dagger.unitarity_defect();
    if deviation > CORRECTION_TOLERANCE {
        return Err(Error::NotMaximallyEntangled { deviation });
    }
    Ok(bell.pauli_correction() * v_dagger)
}

/// Protocol state between steps: the live register, its labels, and the
/// transcript so far.
#[derive(Debug, Clone)]
pub struct ProtocolSession<'a> {
    run: &'a ProtocolRun,
    state: PureState,
    labels: Vec<Label>,
    transcript: Transcript,
    probability: f64,
}

impl<'a> ProtocolSession<'a> {
    /// Network state with the published qubit appended.
    pub fn start(run: &'a ProtocolRun) -> Result<Self> {
        run.validate()?;
        let state = run.shared.state().tensor(&run.chi);
        let mut labels: Vec<Label> = (0..run.n_parties).map(Label::Party).collect();
        labels.push(Label::Published);
        Ok(Self {
            run,
            state,
            labels,
            transcript: Transcript::new(run.seed),
            probability: 1.0,
        })
    }

    /// Continues from a register produced by earlier steps recorded in
    /// `transcript`.
    pub fn resume(run: &'a ProtocolRun, residual: PureState, transcript: Transcript) -> Result<Self> {
        run.validate()?;
        let measured: Vec<usize> = transcript
            .measurement_records
            .iter()
            .filter(|r| matches!(r.basis, MeasuredBasis::Single(_)))
            .map(|r| r.party)
            .collect();
        let published = transcript
            .measurement_records
            .iter()
            .any(|r| r.basis == MeasuredBasis::Bell);
        let mut labels: Vec<Label> = (0..run.n_parties)
            .filter(|p| !measured.contains(p) && !(published && *p == run.publisher))
            .map(Label::Party)
            .collect();
        if !published {
            labels.push(Label::Published);
        }
        if residual.n_qubits() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: residual.n_qubits(),
            });
        }
        let probability = transcript.measurement_records.iter().map(|r| r.probability).product();
        Ok(Self {
            run,
            state: residual,
            labels,
            transcript,
            probability,
        })
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Joint probability of the outcomes so far.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn position(&self, label: Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::Protocol(format!("{label:?} is no longer in the register")))
    }

    /// Generator for the next sampled outcome: one stream per record, so a
    /// resumed session draws the same values as an uninterrupted one.
    fn next_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.run.seed);
        rng.set_stream(self.transcript.measurement_records.len() as u64);
        rng
    }

    pub fn publish(&mut self, forced: Option<BellOutcome>) -> Result<BellOutcome> {
        let run = self.run;
        let q_chi = self.position(Label::Published)?;
        let q_pub = self.position(Label::Party(run.publisher))?;
        let branch = match forced {
            Some(k) => bell_branch(&self.state, q_chi, q_pub, k)?,
            None => bell_sample(&self.state, q_chi, q_pub, &mut self.next_rng())?,
        };
        let post = branch.post_state.ok_or(Error::ZeroProbabilityBranch {
            probability: branch.probability,
        })?;
        self.state = post;
        self.labels.retain(|&l| l != Label::Published && l != Label::Party(run.publisher));
        self.probability *= branch.probability;
        let bits = branch.outcome.bits().to_vec();
        self.transcript.measurement_records.push(MeasurementRecord {
            party: run.publisher,
            basis: MeasuredBasis::Bell,
            outcome: bits.clone(),
            probability: branch.probability,
        });
        self.transcript
            .post(run.publisher, Scope::Broadcast, MessageTag::BellResult, bits);
        Ok(branch.outcome)
    }

    pub fn measure_assistant(&mut self, party: usize, forced: Option<u8>) -> Result<u8> {
        let run = self.run;
        if !run.cooperating.contains(&party) {
            return Err(Error::Protocol(format!("party {party} is not a cooperating assistant")));
        }
        let q = self.position(Label::Party(party))?;
        let basis = *run.bases.basis(party)?;
        let branch = match forced {
            Some(o) => self.state.measure_branch(q, &basis, o)?,
            None => self.state.measure_sample(q, &basis, &mut self.next_rng())?,
        };
        let post = branch.post_state.ok_or(Error::ZeroProbabilityBranch {
            probability: branch.probability,
        })?;
        self.state = post;
        self.labels.remove(q);
        self.probability *= branch.probability;
        self.transcript.measurement_records.push(MeasurementRecord {
            party,
            basis: MeasuredBasis::Single(basis),
            outcome: vec![branch.outcome_bit],
            probability: branch.probability,
        });
        self.transcript.post(
            party,
            Scope::Directed(run.retriever),
            MessageTag::PrepOutcome,
            vec![branch.outcome_bit],
        );
        Ok(branch.outcome_bit)
    }

    /// The retriever reads its inbox and applies the correction.
    pub fn correct(&mut self) -> Result<Unitary2> {
        let run = self.run;
        let inbox = self.transcript.deliver_to(run.retriever);
        let bell = inbox
            .iter()
            .find(|m| m.tag == MessageTag::BellResult && m.sender == run.publisher)
            .ok_or_else(|| Error::Protocol("no Bell result has been received".into()))
            .and_then(|m| BellOutcome::from_bits([m.payload[0], m.payload[1]]))?;
        let mut prep = Vec::new();
        for p in run.assistants() {
            let msg = inbox
                .iter()
                .find(|m| m.tag == MessageTag::PrepOutcome && m.sender == p)
                .ok_or_else(|| Error::Protocol(format!("missing cooperation: no outcome from party {p}")))?;
            prep.push(msg.payload[0]);
        }
        let u = compute_correction(
            &run.shared.state(),
            &run.bases,
            bell,
            &BitString::new(prep)?,
            (run.publisher, run.retriever),
        )?;
        let q = self.position(Label::Party(run.retriever))?;
        self.state = self.state.apply_one_qubit(&u, q)?;
        self.transcript
            .post(run.retriever, Scope::Broadcast, MessageTag::Ack, Vec::new());
        Ok(u)
    }

    pub fn step(&mut self, step: Step, forced: &ForcedOutcomes) -> Result<()> {
        match step {
            Step::Publish => self.publish(forced.bell).map(|_| ()),
            Step::Measure(p) => self.measure_assistant(p, forced.prep.get(&p).copied()).map(|_| ()),
            Step::Correct => self.correct().map(|_| ()),
        }
    }

    /// `|<χ|ψ>|²` once only the retriever's qubit remains.
    pub fn fidelity(&self) -> Option<f64> {
        if self.labels == [Label::Party(self.run.retriever)] {
            self.run.chi.overlap_probability(&self.state).ok()
        } else {
            None
        }
    }

    pub fn into_outcome(self) -> RunOutcome {
        RunOutcome {
            fidelity: self.fidelity(),
            final_state: self.state,
            labels: self.labels,
            probability: self.probability,
            transcript: self.transcript,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub final_state: PureState,
    pub labels: Vec<Label>,
    /// `|<χ|final>|²` when only the retriever's qubit remains.
    pub fidelity: Option<f64>,
    pub probability: f64,
    pub transcript: Transcript,
}

pub fn execute(run: &ProtocolRun, steps: &[Step], forced: &ForcedOutcomes) -> Result<RunOutcome> {
    let mut session = ProtocolSession::start(run)?;
    for &s in steps {
        session.step(s, forced)?;
    }
    Ok(session.into_outcome())
}

/// Sampled run: publish, cooperating assistants, correction.
pub fn run_protocol(run: &ProtocolRun) -> Result<RunOutcome> {
    execute(run, &publish_first(run), &ForcedOutcomes::default())
}

/// Teleportation of `chi` through `(|00> + |11>)/√2`.
pub fn teleport(chi: &PureState, seed: u64) -> Result<(PureState, Transcript)> {
    let run = ProtocolRun::ghz(2, chi.clone(), 0, 1, seed)?;
    let out = run_protocol(&run)?;
    Ok((out.final_state, out.transcript))
}

/// Bell measurement by the publisher; returns the register of the other
/// `N − 1` parties.
pub fn publish(run: &ProtocolRun) -> Result<(PureState, Transcript)> {
    let mut session = ProtocolSession::start(run)?;
    session.publish(None)?;
    let out = session.into_outcome();
    Ok((out.final_state, out.transcript))
}

/// Cooperative retrieval from a published register.
pub fn retrieve(residual: &PureState, run: &ProtocolRun, transcript: &Transcript) -> Result<(PureState, f64, Transcript)> {
    if !run.fully_cooperative() {
        return Err(Error::Protocol(
            "missing cooperation: use noncooperative retrieval".into(),
        ));
    }
    let mut session = ProtocolSession::resume(run, residual.clone(), transcript.clone())?;
    let remaining: Vec<usize> = run
        .assistants()
        .into_iter()
        .filter(|&p| session.position(Label::Party(p)).is_ok())
        .collect();
    for p in remaining {
        session.measure_assistant(p, None)?;
    }
    session.correct()?;
    let fidelity = session
        .fidelity()
        .ok_or_else(|| Error::Protocol("register holds more than the retriever".into()))?;
    let out = session.into_outcome();
    Ok((out.final_state, fidelity, out.transcript))
}

/// One fully determined trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchResult {
    pub bell: BellOutcome,
    pub prep: BTreeMap<usize, u8>,
    pub probability: f64,
    pub final_state: PureState,
    pub fidelity: Option<f64>,
}

/// Every outcome combination of `steps` with nonzero probability, in order
/// of (Bell outcome, assistant outcomes).
pub fn enumerate_branches(run: &ProtocolRun, steps: &[Step]) -> Result<Vec<BranchResult>> {
    let measured: Vec<usize> = steps
        .iter()
        .filter_map(|s| match s {
            Step::Measure(p) => Some(*p),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    for bell in BellOutcome::ALL {
        for outcomes in BitString::all(measured.len()) {
            let forced = ForcedOutcomes {
                bell: Some(bell),
                prep: measured.iter().copied().zip(outcomes.bits().iter().copied()).collect(),
            };
            match execute(run, steps, &forced) {
                Ok(o) => out.push(BranchResult {
                    bell,
                    prep: forced.prep,
                    probability: o.probability,
                    final_state: o.final_state,
                    fidelity: o.fidelity,
                }),
                Err(Error::ZeroProbabilityBranch { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub outcome: RunOutcome,
    /// The replayed transcript equals the input transcript.
    pub reproduced: bool,
}

/// Re-executes the steps recorded in `transcript` with their outcomes.
pub fn replay(run: &ProtocolRun, transcript: &Transcript) -> Result<ReplayOutcome> {
    let mut steps = Vec::new();
    let mut forced = ForcedOutcomes::default();
    for r in &transcript.measurement_records {
        match &r.basis {
            MeasuredBasis::Bell => {
                if r.outcome.len() != 2 {
                    return Err(Error::Protocol("Bell record without two bits".into()));
                }
                steps.push(Step::Publish);
                forced.bell = Some(BellOutcome::from_bits([r.outcome[0], r.outcome[1]])?);
            }
            MeasuredBasis::Single(_) => {
                let bit = *r
                    .outcome
                    .first()
                    .ok_or_else(|| Error::Protocol("empty measurement record".into()))?;
                steps.push(Step::Measure(r.party));
                forced.prep.insert(r.party, bit);
            }
        }
    }
    if transcript.count(MessageTag::Ack) > 0 {
        steps.push(Step::Correct);
    }
    let mut run = run.clone();
    run.seed = transcript.seed;
    let outcome = execute(&run, &steps, &forced)?;
    let reproduced = outcome.transcript == *transcript;
    Ok(ReplayOutcome { outcome, reproduced })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub pass: bool,
    pub branches_compared: usize,
    /// Largest phase-aligned distance between matched final states.
    pub max_state_distance: f64,
    pub max_probability_gap: f64,
    pub unmatched: usize,
}

/// Compares branch-matched final states of `steps` against publish-first.
pub fn order_independence_check(run: &ProtocolRun, steps: &[Step]) -> Result<OrderReport> {
    let reference = enumerate_branches(run, &publish_first(run))?;
    let other = enumerate_branches(run, steps)?;
    let mut max_state_distance: f64 = 0.0;
    let mut max_probability_gap: f64 = 0.0;
    let mut unmatched = 0;
    for a in &reference {
        match other.iter().find(|b| b.bell == a.bell && b.prep == a.prep) {
            Some(b) => {
                let d = crate::statevec::phase_aligned_distance(&a.final_state, &b.final_state)?;
                max_state_distance = max_state_distance.max(d);
                max_probability_gap = max_probability_gap.max((a.probability - b.probability).abs());
            }
            None => unmatched += 1,
        }
    }
    unmatched += other.len().saturating_sub(reference.len() - unmatched);
    Ok(OrderReport {
        pass: unmatched == 0 && max_state_distance <= 1e-9 && max_probability_gap <= 1e-9,
        branches_compared: reference.len(),
        max_state_distance,
        max_probability_gap,
        unmatched,
    })
}
