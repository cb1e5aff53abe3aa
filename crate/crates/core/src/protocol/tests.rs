use std::collections::BTreeSet;

use num_complex::Complex;
use rand::SeedableRng;

use super::*;
use crate::linalg::Unitary2;
use crate::measures::cloning_fidelity_bound;
use crate::statevec::{haar_qubit, states_equal_up_to_phase, PureState, QubitBasis};
use crate::webstates::{make_contextual_example, make_ghz, random_web_state, BitString, PreparationBases, WebStateSpec};

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn zero() -> PureState {
    PureState::zero_state(1)
}

fn plus() -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::qubit(c(h, 0.), c(h, 0.)).unwrap()
}

fn plus_i() -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::qubit(c(h, 0.), c(0., h)).unwrap()
}

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn teleport_examples() {
    let (out, t) = teleport(&zero(), 5).unwrap();
    assert!(states_equal_up_to_phase(&out, &zero(), 1e-12).unwrap());
    assert_eq!(t.count(MessageTag::BellResult), 1);

    let run = ProtocolRun::ghz(2, plus_i(), 0, 1, 0).unwrap();
    let branches = enumerate_branches(&run, &publish_first(&run)).unwrap();
    assert_eq!(branches.len(), 4);
    for b in &branches {
        assert!((b.probability - 0.25).abs() < 1e-12);
        assert!((b.fidelity.unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn teleport_haar_sweep() {
    let mut r = rng(2024);
    let mut worst: f64 = 1.0;
    for seed in 0..1000 {
        let chi = haar_qubit(&mut r);
        let (out, _) = teleport(&chi, seed).unwrap();
        worst = worst.min(chi.overlap_probability(&out).unwrap());
    }
    assert!(worst >= 1.0 - 1e-10, "{worst}");
}

#[test]
fn publish_ghz3_phi_plus_branch() {
    // Encoding oracle: α|0> + β|1> published at A leaves α|00> + β|11> on B, C.
    for (chi, expected) in [(zero(), PureState::zero_state(2)), (plus(), make_ghz(2).unwrap())] {
        let run = ProtocolRun::ghz(3, chi, 0, 1, 0).unwrap();
        let mut s = ProtocolSession::start(&run).unwrap();
        s.publish(Some(BellOutcome::PHI_PLUS)).unwrap();
        assert!((s.probability() - 0.25).abs() < 1e-12);
        assert!(states_equal_up_to_phase(s.state(), &expected, 1e-12).unwrap());
        assert_eq!(s.labels(), &[Label::Party(1), Label::Party(2)]);
    }
}

#[test]
fn publish_leaves_pure_residual() {
    let mut r = rng(1);
    for seed in 0..8 {
        let run = ProtocolRun::ghz(4, haar_qubit(&mut r), seed as usize % 4, (seed as usize + 1) % 4, seed).unwrap();
        let (residual, t) = publish(&run).unwrap();
        assert_eq!(residual.n_qubits(), 3);
        assert!((residual.norm() - 1.0).abs() < 1e-12);
        assert!((residual.to_density().purity() - 1.0).abs() < 1e-9);
        assert_eq!(t.count(MessageTag::BellResult), 1);
    }
    let (spec, _) = random_web_state(4, 6).unwrap();
    let run = ProtocolRun::web(spec, haar_qubit(&mut r), 0, 2, 1).unwrap();
    let (_, t) = publish(&run).unwrap();
    assert_eq!(t.messages.len(), 1);
    assert_eq!(t.messages[0].scope, Scope::Broadcast);
}

#[test]
fn correction_table_for_ghz() {
    let g = make_ghz(5).unwrap();
    let bases = PreparationBases::ghz(5);
    for prep in BitString::all(3) {
        let u = compute_correction(&g, &bases, BellOutcome::PHI_PLUS, &prep, (0, 4)).unwrap();
        let expected = if prep.parity() == 0 { Unitary2::identity() } else { Unitary2::pauli_z() };
        assert!(close_up_to_phase(&u, &expected), "{prep}");
    }
}

fn close_up_to_phase(a: &Unitary2, b: &Unitary2) -> bool {
    let prod = a.adjoint() * *b;
    let tr = prod.m[0][0] + prod.m[1][1];
    (tr.norm() - 2.0).abs() < 1e-9
}

#[test]
fn correction_for_phase_family_solves_residual() {
    // Residual oracle: with computational bases the pair is
    // (e^{iθ(00s)}|00> + e^{iθ(11s)}|11>)/√2 for even s, so the correction is
    // diag(e^{-iθ(00s)}, e^{-iθ(11s)}) up to phase; odd s swaps the heads.
    let (spec, psi) = random_web_state(4, 31).unwrap();
    let bases = PreparationBases::computational(4);
    for prep in BitString::all(2) {
        let u = compute_correction(&psi, &bases, BellOutcome::PHI_PLUS, &prep, (0, 1)).unwrap();
        let (head0, head1) = if prep.parity() == 0 { ("00", "11") } else { ("01", "10") };
        let t0 = spec.phase(&format!("{head0}{prep}").parse().unwrap()).unwrap();
        let t1 = spec.phase(&format!("{head1}{prep}").parse().unwrap()).unwrap();
        let expected = if prep.parity() == 0 {
            Unitary2::new([[Complex::from_polar(1.0, -t0), c(0., 0.)], [c(0., 0.), Complex::from_polar(1.0, -t1)]])
        } else {
            Unitary2::new([[c(0., 0.), Complex::from_polar(1.0, -t0)], [Complex::from_polar(1.0, -t1), c(0., 0.)]])
        };
        assert!(close_up_to_phase(&u, &expected), "{prep}");
        assert!(u.unitarity_defect() < 1e-9);
    }
}

#[test]
fn correction_rejects_non_web_input() {
    let product = PureState::zero_state(3);
    let bases = PreparationBases::computational(3);
    let prep: BitString = "0".parse().unwrap();
    assert!(matches!(
        compute_correction(&product, &bases, BellOutcome::PHI_PLUS, &prep, (0, 1)),
        Err(crate::Error::NotMaximallyEntangled { .. })
    ));
}

#[test]
fn ghz4_every_retriever() {
    for retriever in 1..4 {
        let run = ProtocolRun::ghz(4, plus_i(), 0, retriever, 0).unwrap();
        for b in enumerate_branches(&run, &publish_first(&run)).unwrap() {
            assert!((b.fidelity.unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn cooperative_completeness_for_phase_family() {
    let mut r = rng(9);
    for n in [3usize, 4, 5] {
        let (spec, _) = random_web_state(n, 40 + n as u64).unwrap();
        let chi = haar_qubit(&mut r);
        for publisher in 0..n {
            for retriever in (0..n).filter(|&x| x != publisher) {
                let run = ProtocolRun::web(spec.clone(), chi.clone(), publisher, retriever, 0).unwrap();
                let branches = enumerate_branches(&run, &publish_first(&run)).unwrap();
                let total: f64 = branches.iter().map(|b| b.probability).sum();
                assert!((total - 1.0).abs() < 1e-9);
                for b in branches {
                    assert!((b.fidelity.unwrap() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn contextual_state_retrieval() {
    let run = ProtocolRun::explicit(
        SharedState::Explicit(make_contextual_example()),
        PreparationBases::computational(4),
        plus_i(),
        0,
        1,
        0,
    )
    .unwrap();
    for b in enumerate_branches(&run, &publish_first(&run)).unwrap() {
        assert!((b.fidelity.unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn publish_then_retrieve_matches_single_run() {
    let run = ProtocolRun::ghz(4, plus(), 1, 3, 77).unwrap();
    let (residual, t) = publish(&run).unwrap();
    let (final_state, fidelity, t2) = retrieve(&residual, &run, &t).unwrap();
    assert!((fidelity - 1.0).abs() < 1e-9);
    let whole = run_protocol(&run).unwrap();
    assert_eq!(whole.transcript, t2);
    assert_eq!(whole.final_state, final_state);
    assert!(t2.sequence_is_increasing());
    assert_eq!(t2.count(MessageTag::PrepOutcome), 2);
    assert_eq!(t2.count(MessageTag::Ack), 1);
}

#[test]
fn retrieve_requires_cooperation() {
    let mut run = ProtocolRun::ghz(4, plus(), 0, 1, 0).unwrap();
    run.cooperating = BTreeSet::from([2]);
    let (residual, t) = publish(&run).unwrap();
    assert!(retrieve(&residual, &run, &t).is_err());
    assert!(run_protocol(&run).is_err());
}

#[test]
fn runs_are_deterministic_and_replayable() {
    let (spec, _) = random_web_state(5, 3).unwrap();
    let run = ProtocolRun::web(spec, plus_i(), 2, 0, 1234).unwrap();
    let a = run_protocol(&run).unwrap();
    let b = run_protocol(&run).unwrap();
    assert_eq!(a, b);
    let replayed = replay(&run, &a.transcript).unwrap();
    assert!(replayed.reproduced);
    assert_eq!(replayed.outcome.final_state, a.final_state);

    let json = a.transcript.to_json();
    let back = Transcript::from_json(&json).unwrap();
    assert!(replay(&run, &back).unwrap().reproduced);

    let outcomes = |o: &RunOutcome| o.transcript.measurement_records.iter().map(|r| r.outcome.clone()).collect::<Vec<_>>();
    let differs = (0..8).any(|k| {
        let r = ProtocolRun { seed: 2000 + k, ..run.clone() };
        outcomes(&run_protocol(&r).unwrap()) != outcomes(&a)
    });
    assert!(differs);
}

#[test]
fn replay_of_tampered_transcript_is_flagged() {
    let run = ProtocolRun::ghz(3, plus(), 0, 2, 8).unwrap();
    let mut t = run_protocol(&run).unwrap().transcript;
    t.measurement_records[0].probability = 0.5;
    assert!(!replay(&run, &t).unwrap().reproduced);
}

#[test]
fn order_independence() {
    let run = ProtocolRun::ghz(3, plus_i(), 0, 1, 0).unwrap();
    let report = order_independence_check(&run, &publish_last(&run)).unwrap();
    assert!(report.pass, "{report:?}");
    assert_eq!(report.branches_compared, 8);

    let run = ProtocolRun::ghz(5, plus_i(), 1, 3, 0).unwrap();
    let steps = random_interleaving(&run, 3);
    assert!(order_independence_check(&run, &steps).unwrap().pass);

    let (spec, _) = random_web_state(4, 2).unwrap();
    let run = ProtocolRun::web(spec, plus(), 3, 0, 0).unwrap();
    assert!(order_independence_check(&run, &publish_last(&run)).unwrap().pass);

    let run = ProtocolRun::ghz(2, plus(), 0, 1, 0).unwrap();
    assert!(order_independence_check(&run, &publish_last(&run)).unwrap().pass);
}

#[test]
fn noncooperative_examples() {
    for k in BellOutcome::ALL {
        for (chi, expected) in [(zero(), 1.0), (plus(), 0.5)] {
            let run = ProtocolRun::ghz(3, chi, 0, 1, 0).unwrap();
            let mut s = ProtocolSession::start(&run).unwrap();
            s.publish(Some(k)).unwrap();
            let (_, f) = noncooperative_retrieve(s.state(), &run, s.transcript()).unwrap();
            assert!((f - expected).abs() < 1e-12, "{k}: {f}");
        }
    }
}

#[test]
fn noncooperative_average_respects_cloning_bound() {
    let mut r = rng(55);
    for n in [3usize, 4] {
        let mut total = 0.0;
        let trials = 200;
        for _ in 0..trials {
            let run = ProtocolRun::ghz(n, haar_qubit(&mut r), 0, 1, 0).unwrap();
            total += noncooperative_average_fidelity(&run).unwrap();
        }
        let avg = total / trials as f64;
        assert!(avg <= cloning_fidelity_bound::<f64>(n).unwrap() + 0.02, "N={n}: {avg}");
    }
}

#[test]
fn no_cloning() {
    let run = ProtocolRun::ghz(4, zero(), 0, 1, 0).unwrap();
    let r = no_cloning_audit(&run, &zero(), &plus()).unwrap();
    assert!(r.pass && r.trace_distance < 1e-9);
    assert_eq!(r.environment_qubits, 4);

    let (spec, _) = random_web_state(4, 13).unwrap();
    let run = ProtocolRun::web(spec, zero(), 2, 1, 0).unwrap();
    let one = PureState::basis_state(1, 1).unwrap();
    assert!(no_cloning_audit(&run, &zero(), &one).unwrap().pass);

    let run = ProtocolRun::ghz(2, zero(), 0, 1, 0).unwrap();
    assert!(no_cloning_audit(&run, &zero(), &plus_i()).unwrap().pass);
}

#[test]
fn withheld_message_caps_fidelity() {
    let run = ProtocolRun::ghz(4, plus(), 0, 1, 0).unwrap();
    let report = withheld_message_fidelity(&run, 2, 12).unwrap();
    assert!(report.worst_best_fidelity <= 0.95, "{}", report.worst_best_fidelity);
    // Oracle: the best unitary reaches the largest eigenvalue of the mixture.
    for g in &report.groups {
        assert!(g.best_fidelity <= 0.5 + 1e-9);
    }
    assert!(withheld_message_fidelity(&run, 1, 4).is_err());
}

#[test]
fn bases_in_records() {
    let run = ProtocolRun::ghz(3, plus(), 0, 1, 0).unwrap();
    let out = run_protocol(&run).unwrap();
    let rec = &out.transcript.measurement_records[1];
    assert_eq!(rec.basis, MeasuredBasis::Single(QubitBasis::x_basis()));
    assert_eq!(rec.party, 2);
    let _ = WebStateSpec::uniform(3).unwrap();
}
