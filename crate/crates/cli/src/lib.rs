//! `qweb` command dispatch. Every verb builds a [`Report`]; exit code 0 means
//! every contained check passed, 1 a failed check or rejected input state,
//! 2 a usage error or unreadable input.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qweb::eprep::{check_eprep_le_assistance, estimate_entanglement_of_preparation, OptimizerConfig};
use qweb::error::Error as CoreError;
use qweb::measures::{
    assistance_report, concurrence_2q, concurrence_of_assistance, entanglement_of_formation_2q,
    entropy_of_entanglement, singlet_fraction, AssistanceConfig, SingletFractionConfig,
};
use qweb::protocol::{replay, run_protocol, teleport, ProtocolRun, SharedState, Transcript};
use qweb::statevec::{fidelity_state, DensityMatrix, PureState, QubitBasis};
use qweb::webstates::{
    make_contextual_example, make_ghz, make_web_state, random_web_state, verify_pair_report, verify_web_state,
    PreparationBases, WebStateSpec,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "qweb", version, about = "Quantum web page states: generate, verify, publish and retrieve")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Write a state file.
    Gen(GenArgs),
    /// Check that every pair can be made maximally entangled.
    Verify(VerifyArgs),
    /// Teleport one qubit through a Bell pair.
    Teleport(TeleportArgs),
    /// Publish a qubit into a network state and retrieve it.
    Run(RunArgs),
    /// Entanglement measures of a state or of a pair reduction.
    Measure(MeasureArgs),
    /// Estimate the entanglement of preparation of a pair.
    Eprep(EprepArgs),
    /// Re-execute a recorded run.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "kind")]
struct GenKind {
    /// GHZ state on N qubits.
    #[arg(long, value_name = "N")]
    ghz: Option<usize>,
    /// Random phase-family web state on N qubits, drawn from --seed.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Phase-family web state from a phase-table file.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// The four-party example whose preparation bases depend on the pair.
    #[arg(long)]
    contextual: bool,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    kind: GenKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    state: PathBuf,
    /// ghz, computational, or a file of `[polar, azimuthal]` per party.
    #[arg(long, default_value = "ghz")]
    bases: String,
    /// Check only this pair, e.g. `A,C` or `0,2`.
    #[arg(long)]
    pair: Option<String>,
}

#[derive(Debug, Args)]
struct TeleportArgs {
    #[arg(long, default_value = "+")]
    chi: String,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "spec")]
    state: Option<PathBuf>,
    /// Phase-table file; implies computational bases.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "ghz")]
    bases: String,
    #[arg(long)]
    publisher: String,
    #[arg(long)]
    retriever: String,
    #[arg(long, default_value = "+")]
    chi: String,
    /// Write the run and its transcript for `replay`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[arg(long)]
    state: PathBuf,
    /// Two-party reduction to evaluate; defaults to the whole register when
    /// it has two qubits.
    #[arg(long)]
    pair: Option<String>,
    /// Parties on one side of the entropy cut; defaults to the first pair
    /// member or party A.
    #[arg(long)]
    cut: Option<String>,
}

#[derive(Debug, Args)]
struct EprepArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    pair: String,
    #[arg(long, default_value_t = 16)]
    starts: usize,
    /// Also compare against the assistance value of the pair reduction.
    #[arg(long)]
    compare: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// File written by `run --out`.
    #[arg(long)]
    record: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Value,
    pub results: Value,
    pub pass: bool,
    pub version: String,
    pub seed: u64,
}

/// What `run --out` writes and `replay` reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: ProtocolRun,
    pub transcript: Transcript,
    pub final_state: PureState,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Usage(String),
    /// Exit 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Failure(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Failure(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Serialization(m) => Self::Usage(format!("malformed input: {m}")),
            e @ (CoreError::InvalidParameter(_)
            | CoreError::QubitOutOfRange { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::InvalidCut(_)
            | CoreError::InvalidBasis(_)
            | CoreError::RegisterTooLarge { .. }) => Self::Usage(e.to_string()),
            e => Self::Failure(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Malformed JSON is a usage error; a norm off by more than 1e−6 is a
/// failure.
pub fn load_state(path: &Path) -> CliResult<PureState> {
    let text = read_file(path)?;
    PureState::from_json(&text).map_err(|e| match e {
        CoreError::NotNormalized { norm } => {
            CliError::Failure(format!("{}: norm {norm} deviates from 1 by more than 1e-6", path.display()))
        }
        e => CliError::Usage(format!("{}: {e}", path.display())),
    })
}

pub fn save_state(state: &PureState, path: &Path) -> CliResult<()> {
    write_file(path, &state.to_json())
}

/// `A`, `b`, ... or a zero-based index.
pub fn parse_party(text: &str, n_parties: usize) -> CliResult<usize> {
    let t = text.trim();
    let index = if let Ok(i) = t.parse::<usize>() {
        i
    } else {
        let mut chars = t.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => (c.to_ascii_uppercase() as u8 - b'A') as usize,
            _ => return Err(CliError::Usage(format!("cannot read party {text:?}"))),
        }
    };
    if index >= n_parties {
        return Err(CliError::Usage(format!("party {text} out of range for {n_parties} parties")));
    }
    Ok(index)
}

fn parse_parties(text: &str, n_parties: usize) -> CliResult<Vec<usize>> {
    text.split(',').map(|p| parse_party(p, n_parties)).collect()
}

fn parse_pair(text: &str, n_parties: usize) -> CliResult<(usize, usize)> {
    match parse_parties(text, n_parties)?.as_slice() {
        &[a, b] if a != b => Ok((a, b)),
        _ => Err(CliError::Usage(format!("pair {text:?} needs two distinct parties"))),
    }
}

fn party_name(p: usize) -> String {
    if p < 26 {
        ((b'A' + p as u8) as char).to_string()
    } else {
        p.to_string()
    }
}

/// Presets `0`, `1`, `+`, `-`, `+/-` (read as `|->`), `i`, `-i`; otherwise
/// `[[re, im], [re, im]]` or four comma-separated numbers.
pub fn parse_chi(text: &str) -> CliResult<PureState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex::new(re, im);
    let (a, b) = match text.trim() {
        "0" => (c(1.0, 0.0), c(0.0, 0.0)),
        "1" => (c(0.0, 0.0), c(1.0, 0.0)),
        "+" => (c(h, 0.0), c(h, 0.0)),
        "-" | "+/-" => (c(h, 0.0), c(-h, 0.0)),
        "i" => (c(h, 0.0), c(0.0, h)),
        "-i" => (c(h, 0.0), c(0.0, -h)),
        t => {
            let numbers: Vec<f64> = if t.starts_with('[') {
                let pairs: Vec<[f64; 2]> =
                    serde_json::from_str(t).map_err(|e| CliError::Usage(format!("chi {t:?}: {e}")))?;
                pairs.into_iter().flatten().collect()
            } else {
                t.split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| CliError::Usage(format!("chi {t:?}: {e}")))?
            };
            if numbers.len() != 4 {
                return Err(CliError::Usage(format!("chi {t:?} needs two complex amplitudes")));
            }
            (c(numbers[0], numbers[1]), c(numbers[2], numbers[3]))
        }
    };
    let state = PureState::from_json(&serde_json::to_string(&json!({
        "n_qubits": 1,
        "amplitudes": [[a.re, a.im], [b.re, b.im]],
    })).expect("chi serializes"));
    state.map_err(|e| match e {
        CoreError::NotNormalized { norm } => CliError::Failure(format!("chi has norm {norm}")),
        e => CliError::Usage(e.to_string()),
    })
}

pub fn parse_bases(text: &str, n_parties: usize) -> CliResult<PreparationBases> {
    match text {
        "ghz" => Ok(PreparationBases::ghz(n_parties)),
        "computational" => Ok(PreparationBases::computational(n_parties)),
        path => {
            let angles: Vec<[f64; 2]> = serde_json::from_str(&read_file(Path::new(path))?)
                .map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            if angles.len() != n_parties {
                return Err(CliError::Usage(format!(
                    "{path}: {} bases for {n_parties} parties",
                    angles.len()
                )));
            }
            Ok(PreparationBases::context_free(
                angles.iter().map(|a| QubitBasis::from_angles(a[0], a[1])).collect(),
            ))
        }
    }
}

fn to_value<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("report value serializes")
}

struct Outcome {
    results: Value,
    pass: bool,
}

fn gen(args: &GenArgs, seed: u64) -> CliResult<Outcome> {
    let k = &args.kind;
    let (kind, state, spec) = if let Some(n) = k.ghz {
        ("ghz", make_ghz(n)?, None)
    } else if let Some(n) = k.n {
        let (spec, state) = random_web_state(n, seed)?;
        ("web", state, Some(spec))
    } else if let Some(path) = &k.spec {
        let spec = WebStateSpec::from_json(&read_file(path)?)?;
        ("web", make_web_state(&spec), Some(spec))
    } else {
        ("contextual", make_contextual_example(), None)
    };
    let mut results = json!({
        "kind": kind,
        "n_qubits": state.n_qubits(),
        "amplitudes": state.dim(),
    });
    if let Some(spec) = spec {
        results["spec"] = serde_json::from_str(&spec.to_json()).expect("spec is JSON");
    }
    match &args.out {
        Some(path) => {
            save_state(&state, path)?;
            results["out"] = json!(path.display().to_string());
        }
        None => results["state"] = to_value(&state),
    }
    Ok(Outcome { results, pass: true })
}

fn verify(args: &VerifyArgs, tol: f64) -> CliResult<Outcome> {
    let state = load_state(&args.state)?;
    let n = state.n_qubits();
    let bases = parse_bases(&args.bases, n)?;
    let report = match &args.pair {
        Some(p) => verify_pair_report(&state, parse_pair(p, n)?, bases.bases(), tol)?,
        None => verify_web_state(&state, &bases, tol)?,
    };
    let results = json!({
        "n_parties": report.n_parties,
        "tolerance": report.tolerance,
        "worst_deviation": report.worst_deviation(),
        "worst": report.worst,
        "branches": report.cases.len(),
        "failing": report.cases.iter().filter(|c| c.deviation.is_some_and(|d| d > tol)).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        results,
        pass: report.pass,
    })
}

fn teleport_verb(args: &TeleportArgs, seed: u64, tol: f64) -> CliResult<Outcome> {
    let chi = parse_chi(&args.chi)?;
    let (out, transcript) = teleport(&chi, seed)?;
    let fidelity = fidelity_state(&DensityMatrix::from_pure(&out), &chi)?;
    Ok(Outcome {
        results: json!({
            "fidelity": fidelity,
            "output": out,
            "transcript": transcript,
        }),
        pass: fidelity >= 1.0 - tol,
    })
}

fn run_verb(args: &RunArgs, seed: u64, tol: f64) -> CliResult<Outcome> {
    let chi = parse_chi(&args.chi)?;
    let (shared, bases) = match (&args.state, &args.spec) {
        (Some(path), None) => {
            let state = load_state(path)?;
            let bases = parse_bases(&args.bases, state.n_qubits())?;
            (SharedState::Explicit(state), bases)
        }
        (None, Some(path)) => {
            let spec = WebStateSpec::from_json(&read_file(path)?)?;
            let n = spec.n_parties();
            (SharedState::Spec(spec), PreparationBases::computational(n))
        }
        _ => return Err(CliError::Usage("run needs --state or --spec".into())),
    };
    let n = shared.n_parties();
    let publisher = parse_party(&args.publisher, n)?;
    let retriever = parse_party(&args.retriever, n)?;
    let run = ProtocolRun::explicit(shared, bases, chi, publisher, retriever, seed)?;
    let outcome = run_protocol(&run)?;
    let fidelity = outcome
        .fidelity
        .ok_or_else(|| CliError::Failure("retrieval left more than one qubit".into()))?;
    let outcomes: BTreeMap<String, Vec<u8>> = outcome
        .transcript
        .measurement_records
        .iter()
        .map(|r| (party_name(r.party), r.outcome.clone()))
        .collect();
    let mut results = json!({
        "publisher": party_name(publisher),
        "retriever": party_name(retriever),
        "fidelity": fidelity,
        "probability": outcome.probability,
        "outcomes": outcomes,
        "final_state": outcome.final_state,
        "messages": outcome.transcript.messages.len(),
    });
    if let Some(path) = &args.out {
        let record = RunRecord {
            run: run.clone(),
            transcript: outcome.transcript.clone(),
            final_state: outcome.final_state.clone(),
        };
        write_file(path, &serde_json::to_string_pretty(&record).expect("record serializes"))?;
        results["out"] = json!(path.display().to_string());
    }
    Ok(Outcome {
        results,
        pass: fidelity >= 1.0 - tol,
    })
}

fn measure_verb(args: &MeasureArgs) -> CliResult<Outcome> {
    let state = load_state(&args.state)?;
    let n = state.n_qubits();
    if n < 2 {
        return Err(CliError::Usage("measures need at least two qubits".into()));
    }
    let pair = match &args.pair {
        Some(p) => Some(parse_pair(p, n)?),
        None if n == 2 => Some((0, 1)),
        None => None,
    };
    let cut = match &args.cut {
        Some(c) => parse_parties(c, n)?,
        None => vec![pair.map_or(0, |p| p.0)],
    };
    let mut results = json!({
        "cut": cut.iter().map(|&p| party_name(p)).collect::<Vec<_>>(),
        "entropy": entropy_of_entanglement(&state, &cut)?,
    });
    if let Some((a, b)) = pair {
        let rho = state.partial_trace(&[a, b])?;
        let sf = singlet_fraction(&rho, &SingletFractionConfig::default())?;
        results["pair"] = json!([party_name(a), party_name(b)]);
        results["concurrence"] = json!(concurrence_2q(&rho)?);
        results["concurrence_of_assistance"] = json!(concurrence_of_assistance(&rho)?);
        results["entanglement_of_formation"] = json!(entanglement_of_formation_2q(&rho)?);
        results["assistance"] = to_value(&assistance_report(&rho, &AssistanceConfig::default())?);
        results["singlet_fraction"] = json!({ "value": sf.value, "converged": sf.converged });
    }
    Ok(Outcome { results, pass: true })
}

fn eprep_verb(args: &EprepArgs, seed: u64) -> CliResult<Outcome> {
    let state = load_state(&args.state)?;
    let pair = parse_pair(&args.pair, state.n_qubits())?;
    let cfg = OptimizerConfig {
        multistarts: args.starts,
        seed,
        ..OptimizerConfig::default()
    };
    if args.compare {
        let report = check_eprep_le_assistance(&state, pair, &cfg)?;
        return Ok(Outcome {
            pass: report.pass,
            results: to_value(&report),
        });
    }
    let estimate = estimate_entanglement_of_preparation(&state, pair, &cfg)?;
    Ok(Outcome {
        results: to_value(&estimate),
        pass: true,
    })
}

fn replay_verb(args: &ReplayArgs) -> CliResult<Outcome> {
    let record: RunRecord = serde_json::from_str(&read_file(&args.record)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.record.display())))?;
    record.run.validate()?;
    let out = replay(&record.run, &record.transcript)?;
    let identical = out.outcome.final_state.amplitudes() == record.final_state.amplitudes();
    Ok(Outcome {
        results: json!({
            "transcript_reproduced": out.reproduced,
            "final_state_identical": identical,
            "fidelity": out.outcome.fidelity,
        }),
        pass: out.reproduced && identical,
    })
}

fn verb_name(verb: &Verb) -> &'static str {
    match verb {
        Verb::Gen(_) => "gen",
        Verb::Verify(_) => "verify",
        Verb::Teleport(_) => "teleport",
        Verb::Run(_) => "run",
        Verb::Measure(_) => "measure",
        Verb::Eprep(_) => "eprep",
        Verb::Replay(_) => "replay",
    }
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    match &cli.verb {
        Verb::Gen(a) => gen(a, cli.seed),
        Verb::Verify(a) => verify(a, cli.tol),
        Verb::Teleport(a) => teleport_verb(a, cli.seed, cli.tol),
        Verb::Run(a) => run_verb(a, cli.seed, cli.tol),
        Verb::Measure(a) => measure_verb(a),
        Verb::Eprep(a) => eprep_verb(a, cli.seed),
        Verb::Replay(a) => replay_verb(a),
    }
}

fn human(report: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    let verb = report.command["verb"].as_str().unwrap_or("?");
    writeln!(out, "{verb}: {}", if report.pass { "PASS" } else { "FAIL" })?;
    if let Value::Object(map) = &report.results {
        for (k, v) in map {
            match v {
                Value::Object(_) | Value::Array(_) => {
                    let text = v.to_string();
                    if text.len() <= 100 {
                        writeln!(out, "  {k}: {text}")?;
                    } else {
                        writeln!(out, "  {k}: <{} bytes, see --json>", text.len())?;
                    }
                }
                _ => writeln!(out, "  {k}: {v}")?,
            }
        }
    }
    writeln!(out, "  seed: {}  version: {}", report.seed, report.version)
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run_cli_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    let command = json!({
        "verb": verb_name(&cli.verb),
        "args": argv.iter().skip(1).collect::<Vec<_>>(),
    });
    let (results, pass, code) = match dispatch(&cli) {
        Ok(o) => {
            let code = if o.pass { 0 } else { 1 };
            (o.results, o.pass, code)
        }
        Err(e @ CliError::Usage(_)) => {
            let _ = writeln!(stderr, "error: {}\n\nRun `qweb --help` for usage.", e.message());
            return e.exit_code();
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            (json!({ "error": e.message() }), false, e.exit_code())
        }
    };
    let report = Report {
        command,
        results,
        pass,
        version: VERSION.to_string(),
        seed: cli.seed,
    };
    let written = if cli.json {
        writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))
    } else {
        human(&report, stdout)
    };
    if written.is_err() {
        return 1;
    }
    code
}

pub fn run_cli(argv: &[String]) -> i32 {
    run_cli_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
