//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qweb::eprep::{
    check_eprep_le_assistance, check_superadditivity, estimate_entanglement_of_preparation, OptimizerConfig,
};
use qweb::linalg::Unitary2;
use qweb::measures::{
    canonical_max_entangled, cloning_fidelity_bound, entropy_of_entanglement, singlet_fraction,
    singlet_fraction_bound, MaxEntangledParams, SingletFractionConfig,
};
use qweb::protocol::{
    enumerate_branches, no_cloning_audit, noncooperative_average_fidelity, order_independence_check,
    publish_first, random_interleaving, replay, run_protocol, ProtocolRun, SharedState,
};
use qweb::statevec::{haar_qubit, random_state, PureState, QubitBasis};
use qweb::webstates::{
    apply_local_unitaries, canonicalize, check_exchange_constraints, make_canonical_state, make_contextual_example,
    make_ghz, make_web_state, necessary_conditions, random_web_state, residual_after_measurement, verify_pair,
    verify_pair_report, verify_web_state, CanonicalFormParams, PreparationBases,
};
use qweb::statevec::states_equal_up_to_phase;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn ket(re0: f64, im0: f64, re1: f64, im1: f64) -> PureState {
    PureState::qubit(Complex::new(re0, im0), Complex::new(re1, im1)).unwrap()
}

fn teleportation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 1.0;
    let mut branches = 0;
    for k in 0..1000 {
        let chi = haar_qubit(&mut rng);
        let run = ProtocolRun::ghz(2, chi, 0, 1, k).map_err(e)?;
        let all = enumerate_branches(&run, &publish_first(&run)).map_err(e)?;
        if all.len() != 4 {
            return Err(format!("χ #{k}: {} Bell branches", all.len()));
        }
        for b in all {
            worst = worst.min(b.fidelity.ok_or("no fidelity")?);
            branches += 1;
        }
    }
    ensure(worst >= 1.0 - 1e-10, format!("{branches} branches, min fidelity 1 − {:.1e}", 1.0 - worst))
}

fn ghz_protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 3..=6 {
        let chi = haar_qubit(&mut rng);
        for publisher in 0..n {
            for retriever in (0..n).filter(|&r| r != publisher) {
                let run = ProtocolRun::ghz(n, chi.clone(), publisher, retriever, 0).map_err(e)?;
                let all = enumerate_branches(&run, &publish_first(&run)).map_err(e)?;
                if all.len() > 4 << (n - 2) {
                    return Err(format!("N={n}: {} branches", all.len()));
                }
                for b in all {
                    worst = worst.max((1.0 - b.fidelity.ok_or("no fidelity")?).abs());
                    count += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-9, format!("{count} branches over all publisher/retriever pairs, max |1 − F| = {worst:.1e}"))
}

fn phase_family_verification() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=5 {
        let bases = PreparationBases::computational(n);
        for seed in 0..20 {
            let (_, psi) = random_web_state(n, 1000 * n as u64 + seed).map_err(e)?;
            let r = verify_web_state(&psi, &bases, 1e-9).map_err(e)?;
            if !r.pass {
                return Err(format!("N={n} seed {seed} failed, worst {}", r.worst_deviation()));
            }
            worst = worst.max(r.worst_deviation());

            let mut amps = psi.amplitudes().to_vec();
            let idx = seed as usize % amps.len();
            amps[idx] += Complex::new(0.05, 0.0);
            let perturbed = PureState::from_unnormalized(n, amps).map_err(e)?;
            if verify_web_state(&perturbed, &bases, 1e-9).map_err(e)?.pass {
                return Err(format!("N={n} seed {seed}: perturbed state passed"));
            }
        }
    }
    ensure(worst <= 1e-9, format!("60 states pass, worst {worst:.1e}; 60 perturbed controls fail"))
}

/// Preparation bases of the canonical state: each party's computational
/// basis pulled back through the canonicalizing unitaries.
fn pulled_back_bases(n: usize, unitaries: &[qweb::webstates::AppliedUnitary]) -> PreparationBases {
    let mut total = vec![Unitary2::identity(); n];
    for u in unitaries {
        total[u.party] = u.unitary * total[u.party];
    }
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    PreparationBases::context_free(
        total
            .iter()
            .map(|w| {
                let inv = w.adjoint();
                QubitBasis::from_vectors(inv.apply([one, zero]), inv.apply([zero, one])).unwrap()
            })
            .collect(),
    )
}

fn random_family(n: usize, rng: &mut ChaCha8Rng) -> CanonicalFormParams {
    let count = 1 << (n - 2);
    let thetas: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..TAU)).collect();
    let phis: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..TAU)).collect();
    let alpha0 = rng.gen_range(0.05..FRAC_PI_2 - 0.05);
    let gamma = rng.gen_range(0.0..TAU);
    CanonicalFormParams::web_family(n, alpha0, &thetas, &phis, gamma).unwrap()
}

fn canonical_form_constraints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut violations_failed = 0;
    for n in 3..=5 {
        for _ in 0..5 {
            let p = random_family(n, &mut rng);
            let out = canonicalize(&p).map_err(e)?;
            let state = make_canonical_state(&p).map_err(e)?;
            let bases = pulled_back_bases(n, &out.unitaries);
            let r = verify_web_state(&state, &bases, 1e-9).map_err(e)?;
            if !r.pass {
                return Err(format!("N={n}: constraint-satisfying state failed ({})", r.worst_deviation()));
            }
            let transformed = apply_local_unitaries(&state, &out.unitaries).map_err(e)?;
            if !states_equal_up_to_phase(&make_web_state(&out.spec), &transformed, 1e-9).map_err(e)? {
                return Err(format!("N={n}: round trip differs"));
            }
            checked += 1;

            let terms = p.terms().to_vec();
            let mut variants = Vec::new();
            let mut w = terms.clone();
            let shift = 0.15 * w[0].c;
            w[0].c += shift;
            let rest: f64 = w[1..].iter().map(|t| t.c * t.c).sum();
            let scale = ((1.0 - w[0].c * w[0].c) / rest).sqrt();
            for t in &mut w[1..] {
                t.c *= scale;
            }
            variants.push(("uniform-c", w));
            let mut a = terms.clone();
            let last = a.len() - 1;
            a[last].alpha = (a[last].alpha + 0.4).min(FRAC_PI_2);
            if (a[last].alpha - terms[last].alpha).abs() < 0.1 {
                a[last].alpha = terms[last].alpha - 0.4;
            }
            variants.push(("alpha-parity", a));
            let mut o = terms.clone();
            o[last].omega += 0.7;
            variants.push(("phase-offset", o));
            for (name, t) in variants {
                let q = CanonicalFormParams::new(n, t).map_err(e)?;
                if check_exchange_constraints(&q).is_empty() {
                    return Err(format!("N={n} {name}: no violation detected"));
                }
                let psi = make_canonical_state(&q).map_err(e)?;
                if verify_web_state(&psi, &bases, 1e-9).map_err(e)?.pass {
                    return Err(format!("N={n} {name}: violating state passed"));
                }
                violations_failed += 1;
            }
        }
    }
    ensure(
        true,
        format!("{checked} satisfying forms pass and round-trip; {violations_failed} violating forms fail"),
    )
}

fn contextual_example() -> Outcome {
    let psi = make_contextual_example();
    let z = vec![QubitBasis::computational(); 4];
    let x = vec![QubitBasis::x_basis(); 4];
    for pair in [(0, 1), (2, 3)] {
        if !verify_pair_report(&psi, pair, &z, 1e-9).map_err(e)?.pass {
            return Err(format!("{pair:?} fails in the computational basis"));
        }
    }
    for pair in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        if !verify_pair_report(&psi, pair, &x, 1e-9).map_err(e)?.pass {
            return Err(format!("{pair:?} fails in the x basis"));
        }
    }
    let ab = verify_pair(&psi, (0, 1), &x).map_err(e)?;
    let worst = ab.iter().filter_map(|c| c.deviation).fold(0.0, f64::max);
    ensure(worst > 0.1, format!("A–B in the x basis: max ‖ρ_A − I/2‖ = {worst:.3}"))
}

fn verified_web_states() -> Result<Vec<(PureState, PreparationBases)>, String> {
    let mut out = Vec::new();
    for n in 3..=5 {
        out.push((make_ghz(n).map_err(e)?, PreparationBases::ghz(n)));
        for seed in 0..3 {
            out.push((random_web_state(n, 50 + seed).map_err(e)?.1, PreparationBases::computational(n)));
        }
    }
    Ok(out)
}

fn necessary_conditions_hold() -> Outcome {
    let mut worst_single: f64 = 0.0;
    let mut worst_pair: f64 = 0.0;
    let states = verified_web_states()?;
    for (psi, bases) in &states {
        if !verify_web_state(psi, bases, 1e-9).map_err(e)?.pass {
            return Err("a reference web state failed verification".into());
        }
        let r = necessary_conditions(psi, 1e-9).map_err(e)?;
        worst_single = r.single_party_deviation.iter().copied().fold(worst_single, f64::max);
        worst_pair = r
            .pair_assistance
            .iter()
            .map(|p| (p.assistance - 1.0).abs())
            .fold(worst_pair, f64::max);
        if !r.pass() {
            return Err(format!("conditions fail: {r:?}"));
        }
    }
    ensure(
        worst_single <= 1e-9 && worst_pair <= 1e-3,
        format!("{} states: max ‖ρ_k − I/2‖ = {worst_single:.1e}, max |E_a − 1| = {worst_pair:.1e}", states.len()),
    )
}

fn closure() -> Outcome {
    let mut cases = 0;
    for n in [4, 5] {
        let mut states = vec![(make_ghz(n).map_err(e)?, PreparationBases::ghz(n))];
        for seed in 0..3 {
            states.push((random_web_state(n, 70 + seed).map_err(e)?.1, PreparationBases::computational(n)));
        }
        for (psi, bases) in states {
            if !verify_web_state(&psi, &bases, 1e-9).map_err(e)?.pass {
                return Err(format!("N={n}: input not a web state"));
            }
            for party in 0..n {
                for outcome in 0..2 {
                    let rest = residual_after_measurement(&psi, &bases, party, outcome).map_err(e)?;
                    let rest_bases = bases.without(party).map_err(e)?;
                    if !verify_web_state(&rest, &rest_bases, 1e-9).map_err(e)?.pass {
                        return Err(format!("N={n} party {party} outcome {outcome}: residual fails"));
                    }
                    if n == 4 {
                        for cut in 0..3 {
                            let s = entropy_of_entanglement(&rest, &[cut]).map_err(e)?;
                            if (s - 1.0).abs() > 1e-9 {
                                return Err(format!("N=4 residual cut {cut}: entropy {s}"));
                            }
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    ensure(true, format!("{cases} residuals verified; 3-party residuals have unit entropy on every cut"))
}

/// Exact rational `p / q` reduced to f64 once.
fn ratio(p: u64, q: u64) -> f64 {
    p as f64 / q as f64
}

fn singlet_grid(rho: &qweb::statevec::DensityMatrix) -> f64 {
    let steps = 12;
    let mut best: f64 = 0.0;
    for i in 0..=steps / 2 {
        for j in 0..steps {
            for k in 0..steps {
                for l in 0..steps {
                    let a = FRAC_PI_2 * i as f64 / (steps / 2) as f64;
                    let t = |m: usize| TAU * m as f64 / steps as f64;
                    let p = MaxEntangledParams::folded(a, t(j), t(k), t(l));
                    let f = rho.fidelity_with(&canonical_max_entangled(&p)).unwrap();
                    best = best.max(f);
                }
            }
        }
    }
    best
}

fn bounds() -> Outcome {
    for n in 2..=100u64 {
        let s: f64 = singlet_fraction_bound(n as usize).map_err(e)?;
        let c: f64 = cloning_fidelity_bound(n as usize).map_err(e)?;
        if (s - ratio(n, 2 * (n - 1))).abs() > 1e-15 || (c - ratio(2 * n - 1, 3 * (n - 1))).abs() > 1e-15 {
            return Err(format!("N={n}: {s}, {c}"));
        }
        // Cross-multiplied comparison: n·3(n−1) vs (2n−1)·2(n−1).
        let strict = n * 3 * (n - 1) < (2 * n - 1) * 2 * (n - 1);
        if (n >= 3) != strict || (n >= 3 && s >= c) {
            return Err(format!("N={n}: ordering of the two bounds"));
        }
    }
    let rho = make_ghz(3).map_err(e)?.partial_trace(&[0, 1]).map_err(e)?;
    let sf = singlet_fraction(&rho, &SingletFractionConfig::default()).map_err(e)?;
    let grid = singlet_grid(&rho);
    if (sf.value - 0.5).abs() > 1e-6 || (sf.value - grid).abs() > 1e-6 {
        return Err(format!("singlet fraction {} vs grid {grid}", sf.value));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0.0;
    for k in 0..200 {
        let run = ProtocolRun::ghz(3, haar_qubit(&mut rng), 0, 2, k).map_err(e)?;
        total += noncooperative_average_fidelity(&run).map_err(e)?;
    }
    let avg = total / 200.0;
    ensure(
        avg <= 5.0 / 6.0 + 0.02,
        format!("closed forms N=2..100; F_s(GHZ pair) = {:.9} (grid {grid:.9}); noncooperative GHZ_3 mean F = {avg:.4}", sf.value),
    )
}

fn entanglement_of_preparation() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut worst: f64 = 0.0;
    for n in 3..=5 {
        let g = make_ghz(n).map_err(e)?;
        for m in 1..n {
            let v = estimate_entanglement_of_preparation(&g, (0, m), &cfg).map_err(e)?.value;
            worst = worst.max((v - 1.0).abs());
        }
    }
    for seed in 0..10 {
        let (_, psi) = random_web_state(4, 300 + seed).map_err(e)?;
        for m in 1..4 {
            let v = estimate_entanglement_of_preparation(&psi, (0, m), &cfg).map_err(e)?.value;
            worst = worst.max((v - 1.0).abs());
        }
    }
    if worst > 1e-6 {
        return Err(format!("max |E^p − 1| = {worst:.1e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut max_excess = f64::NEG_INFINITY;
    for k in 0..50 {
        let psi = random_state(4, &mut rng);
        let r = check_eprep_le_assistance(&psi, (0, 1), &cfg).map_err(e)?;
        max_excess = max_excess.max(r.estimate.value - r.reference);
        if !r.pass {
            return Err(format!("state #{k}: E^p {} > E^a {} + 1e-3", r.estimate.value, r.reference));
        }
    }
    ensure(
        true,
        format!("max |E^p − 1| = {worst:.1e} on web states; max E^p − E^a = {max_excess:.1e} on 50 random states"),
    )
}

fn superadditivity() -> Outcome {
    let cfg = OptimizerConfig::default();
    let g = make_ghz(3).map_err(e)?;
    let (_, w) = random_web_state(3, 17).map_err(e)?;
    let mut lines = Vec::new();
    for (name, a, b) in [("GHZ⊗GHZ", &g, &g), ("web⊗web", &w, &w)] {
        let r = check_superadditivity(a, b, (0, 1), &cfg).map_err(e)?;
        if !r.pass {
            return Err(format!("{name}: joint {} < {} + {}", r.joint, r.first, r.second));
        }
        lines.push(format!("{name} joint {:.6} ≥ {:.6}", r.joint, r.first + r.second));
    }
    ensure(true, lines.join("; "))
}

fn harness_properties() -> Outcome {
    let mut replays = 0;
    let mut orders = 0;
    for n in 3..=5 {
        let (spec, _) = random_web_state(n, 400 + n as u64).map_err(e)?;
        let runs = [
            ProtocolRun::ghz(n, ket(0.6, 0.0, 0.0, 0.8), 0, n - 1, 11).map_err(e)?,
            ProtocolRun::explicit(
                SharedState::Spec(spec),
                PreparationBases::computational(n),
                ket(FRAC_1_SQRT_2, 0.0, 0.5, 0.5),
                n - 1,
                1,
                12,
            )
            .map_err(e)?,
        ];
        for run in &runs {
            for seed in 0..5 {
                let mut r = run.clone();
                r.seed = seed;
                let out = run_protocol(&r).map_err(e)?;
                let again = replay(&r, &out.transcript).map_err(e)?;
                let bits = |s: &PureState| s.amplitudes().iter().map(|a| (a.re.to_bits(), a.im.to_bits())).collect::<Vec<_>>();
                if !again.reproduced || bits(&again.outcome.final_state) != bits(&out.final_state) {
                    return Err(format!("N={n} seed {seed}: replay differs"));
                }
                replays += 1;
            }
            for k in 0..10 {
                let steps = random_interleaving(run, 1000 + k);
                let report = order_independence_check(run, &steps).map_err(e)?;
                if !report.pass {
                    return Err(format!("N={n} interleaving {k}: {report:?}"));
                }
                orders += 1;
            }
        }
    }
    let chis = [ket(1.0, 0.0, 0.0, 0.0), ket(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0), ket(FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2)];
    let mut worst: f64 = 0.0;
    let mut audits = 0;
    for n in 3..=5 {
        let (spec, _) = random_web_state(n, 500 + n as u64).map_err(e)?;
        let runs = [
            ProtocolRun::ghz(n, chis[0].clone(), 0, 1, 0).map_err(e)?,
            ProtocolRun::web(spec, chis[0].clone(), 1, n - 1, 0).map_err(e)?,
        ];
        for run in &runs {
            for i in 0..3 {
                for j in i + 1..3 {
                    let r = no_cloning_audit(run, &chis[i], &chis[j]).map_err(e)?;
                    worst = worst.max(r.trace_distance);
                    audits += 1;
                }
            }
        }
    }
    ensure(
        worst <= 1e-9,
        format!("{replays} bit-identical replays; {orders} interleavings match; {audits} audits, max trace distance {worst:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("teleportation correctness", teleportation),
        ("GHZ web-page protocol", ghz_protocol),
        ("phase-family verification", phase_family_verification),
        ("canonical-form constraints", canonical_form_constraints),
        ("contextual example", contextual_example),
        ("necessary conditions", necessary_conditions_hold),
        ("closure under measurement", closure),
        ("fidelity bounds", bounds),
        ("entanglement of preparation", entanglement_of_preparation),
        ("superadditivity", superadditivity),
        ("protocol-harness properties", harness_properties),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
