//! `diagnose` — command-line harness for group-based active diagnosis.
//!
//! Subcommands:
//!
//! * `run` — sweep one or more policies over every supported
//!   (state, mode) truth and write experiment artifacts (CSV tables,
//!   `summary.json`, a gnuplot script);
//! * `zeta` — compute the submodularity-factor estimates for a model and
//!   write `factors.json`;
//! * `verify` — run the randomized self-check suites on generated
//!   instances; a violated invariant aborts with the witness;
//! * `timing` — measure first-selection latency while the number of
//!   sensor fault modes grows, and fit a line to it;
//! * `session` — drive one diagnosis episode interactively on stdin;
//! * `validate` — load input files, check them, and print their shape.
//!
//! Exit codes: 0 success, 1 invalid input, 2 violated invariant,
//! 64 usage error.

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use diagnosis_cli::error::{CliError, Result, EXIT_USAGE};
use diagnosis_cli::experiment::{run_experiment, ExperimentConfig};
use diagnosis_cli::{format, session, timing, verify};
use diagnosis_core::factor::{factor_report, FactorReport, FactorWitness};
use diagnosis_core::model::DiagnosisModel;
use diagnosis_core::policy::Policy;

#[derive(Parser)]
#[command(
    name = "diagnose",
    version,
    about = "Active diagnosis under persistent sensor faults",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep policies over every supported truth and write artifacts
    Run(RunArgs),
    /// Compute factor estimates and write factors.json
    Zeta(ZetaArgs),
    /// Run randomized self-check suites on generated instances
    Verify(VerifyArgs),
    /// Measure selection latency as fault modes multiply
    Timing(TimingArgs),
    /// Drive one diagnosis episode interactively
    Session(SessionArgs),
    /// Load input files and print their shape
    Validate(ValidateArgs),
}

/// Where the model comes from: an explicit tabular file, or a circuit
/// description compiled against a sensor fault structure.
#[derive(Args)]
struct ModelArgs {
    /// Circuit description (JSON); requires --faults
    #[arg(long, value_name = "FILE", requires = "faults", conflicts_with = "model")]
    circuit: Option<PathBuf>,
    /// Sensor fault structure (JSON); requires --circuit
    #[arg(long, value_name = "FILE", requires = "circuit", conflicts_with = "model")]
    faults: Option<PathBuf>,
    /// Explicit tabular model (JSON)
    #[arg(long, value_name = "FILE", required_unless_present = "circuit")]
    model: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self) -> Result<DiagnosisModel> {
        if let Some(path) = &self.model {
            format::load_model(path)
        } else {
            let circuit = self.circuit.as_ref().expect("clap enforces the pairing");
            let faults = self.faults.as_ref().expect("clap enforces the pairing");
            let bundle = format::load_circuit(circuit)?;
            let spec = format::load_faults(faults, &bundle)?;
            Ok(format::compile_circuit_model(&bundle, &spec)?.model)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyName {
    /// Greedy on the outcome-partition score (the default)
    Greedy,
    /// Greedy on the directly-expanded benefit (same choices)
    GreedyDirect,
    /// Take every action in index order, ignoring the budget
    Brute,
    /// Uniformly random untaken actions (seeded by --seed)
    Random,
    /// Exhaustive adaptive lookahead (exponential; tiny models only)
    Optimal,
}

impl PolicyName {
    fn into_policy(self, seed: u64) -> Policy {
        match self {
            PolicyName::Greedy => Policy::GreedyPartition,
            PolicyName::GreedyDirect => Policy::GreedyDirect,
            PolicyName::Brute => Policy::BruteForceAll,
            PolicyName::Random => Policy::Random(seed),
            PolicyName::Optimal => Policy::ExactOptimal,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Action budget per episode
    #[arg(short = 'k', long = "budget", value_name = "N")]
    budget: usize,
    /// Policy to sweep (repeatable; default: greedy)
    #[arg(long = "policy", value_enum, value_name = "NAME")]
    policies: Vec<PolicyName>,
    /// Output directory for artifacts
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = one per core)
    #[arg(long, value_name = "N", default_value_t = 0)]
    jobs: usize,
    /// Seed for the random policy
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ZetaArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Horizon for the factor sweep (cost grows fast with it)
    #[arg(short = 'k', long = "budget", value_name = "N", default_value_t = 2)]
    budget: usize,
    /// Enumeration cap for the sweep
    #[arg(long, value_name = "N", default_value_t = verify::DEFAULT_CAP)]
    cap: usize,
    /// Output directory for factors.json
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// First instance seed (instances use seed, seed+1, …)
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    seed: u64,
    /// Instances per suite
    #[arg(long, value_name = "N", default_value_t = 50)]
    instances: usize,
    /// Enumeration cap for factor sweeps
    #[arg(long, value_name = "N", default_value_t = verify::DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct TimingArgs {
    /// Circuit description (JSON)
    #[arg(long, value_name = "FILE")]
    circuit: PathBuf,
    /// Sensor fault structure (JSON); prefixes of its fault-prone
    /// sensors define the sweep
    #[arg(long, value_name = "FILE")]
    faults: PathBuf,
    /// Output directory for timing.csv
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Timed repetitions per point (each the median of 3)
    #[arg(long, value_name = "N", default_value_t = 16)]
    samples: usize,
}

#[derive(Args)]
struct SessionArgs {
    #[command(flatten)]
    source: ModelArgs,
    /// Action budget for the episode
    #[arg(short = 'k', long = "budget", value_name = "N")]
    budget: usize,
    /// Declared ground truth as "STATE_ID,MODE_ID" (optional)
    #[arg(long, value_name = "PAIR")]
    truth: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Circuit description (JSON)
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    circuit: Option<PathBuf>,
    /// Sensor fault structure (JSON); requires --circuit
    #[arg(long, value_name = "FILE", requires = "circuit", conflicts_with = "model")]
    faults: Option<PathBuf>,
    /// Explicit tabular model (JSON)
    #[arg(long, value_name = "FILE", required_unless_present = "circuit")]
    model: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            // clap prints help to stdout and usage errors (with the
            // usage block) to stderr.
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Zeta(args) => cmd_zeta(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Timing(args) => cmd_timing(args),
        Command::Session(args) => cmd_session(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let model = args.source.load()?;
    let names = if args.policies.is_empty() {
        vec![PolicyName::Greedy]
    } else {
        args.policies
    };
    let config = ExperimentConfig {
        budget: args.budget,
        policies: names.iter().map(|n| n.into_policy(args.seed)).collect(),
        jobs: args.jobs,
        out_dir: args.out.clone(),
        pairs: None,
    };
    let summary = run_experiment(&model, &config)?;
    println!(
        "swept {} truth pairs over {} states, budget {}",
        summary.n_pairs, summary.n_states_swept, summary.budget
    );
    for policy in &summary.policies {
        let parity = match policy.parity_fraction {
            Some(p) => format!("{:.4}", p),
            None => "baseline".to_string(),
        };
        println!(
            "  {}: average reward {:.6}, parity {}, exact identification {:.4}, mean {:.2} steps",
            policy.policy, policy.f_avg, parity, policy.exact_identification_fraction, policy.mean_steps
        );
    }
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

/// Serializable mirror of a factor report, with every index replaced by
/// the id it names.
#[derive(Serialize)]
struct FactorsDto {
    horizon: usize,
    zeta_alg: f64,
    zeta_bar: f64,
    zeta_star_empirical: f64,
    zeta_alg_designated: f64,
    designated_pair: (String, String),
    upper_bound: f64,
    witness_alg: Option<WitnessDto>,
    witness_bar: Option<WitnessDto>,
    witness_star: Option<WitnessDto>,
    /// How many benefits rose from an exactly-zero base. No finite
    /// factor covers those pairs, so they are counted instead of folded
    /// into the empirical estimate.
    zero_base_jump_count: usize,
    /// A sample of the zero-base jumps (up to [`JUMP_SAMPLE`]).
    zero_base_jumps: Vec<WitnessDto>,
}

/// Largest number of zero-base-jump witnesses serialized into
/// `factors.json`; real circuits produce tens of thousands.
const JUMP_SAMPLE: usize = 32;

#[derive(Serialize)]
struct WitnessDto {
    history: Vec<(String, String)>,
    action: String,
    outcome: Option<String>,
    sub_history: Option<Vec<(String, String)>>,
    value: f64,
}

impl WitnessDto {
    fn from_core(model: &DiagnosisModel, witness: &FactorWitness) -> Self {
        let name_steps = |steps: &[(usize, usize)]| {
            steps
                .iter()
                .map(|&(v, y)| {
                    (
                        model.action_ids()[v].clone(),
                        model.outcome_ids()[y].clone(),
                    )
                })
                .collect()
        };
        WitnessDto {
            history: name_steps(&witness.steps),
            action: model.action_ids()[witness.action].clone(),
            outcome: witness.outcome.map(|y| model.outcome_ids()[y].clone()),
            sub_history: witness.subset.as_deref().map(name_steps),
            value: witness.value,
        }
    }
}

impl FactorsDto {
    fn from_core(model: &DiagnosisModel, report: &FactorReport) -> Self {
        let (x, q) = report.designated_pair;
        FactorsDto {
            horizon: report.horizon,
            zeta_alg: report.zeta_alg,
            zeta_bar: report.zeta_bar,
            zeta_star_empirical: report.zeta_star_empirical,
            zeta_alg_designated: report.zeta_alg_designated,
            designated_pair: (model.state_ids()[x].clone(), model.mode_ids()[q].clone()),
            upper_bound: report.upper_bound,
            witness_alg: report
                .witness_alg
                .as_ref()
                .map(|w| WitnessDto::from_core(model, w)),
            witness_bar: report
                .witness_bar
                .as_ref()
                .map(|w| WitnessDto::from_core(model, w)),
            witness_star: report
                .witness_star
                .as_ref()
                .map(|w| WitnessDto::from_core(model, w)),
            zero_base_jump_count: report.hard_violations.len(),
            zero_base_jumps: report
                .hard_violations
                .iter()
                .take(JUMP_SAMPLE)
                .map(|w| WitnessDto::from_core(model, w))
                .collect(),
        }
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn cmd_zeta(args: ZetaArgs) -> Result<()> {
    let model = args.source.load()?;
    let report = factor_report(&model, args.budget, args.cap)?;
    let dto = FactorsDto::from_core(&model, &report);
    let path = write_json(&args.out, "factors.json", &dto)?;

    println!("horizon {}", report.horizon);
    println!("  zeta_alg             {:.9}", report.zeta_alg);
    println!("  zeta_bar             {:.9}", report.zeta_bar);
    println!("  zeta_star_empirical  {:.9}", report.zeta_star_empirical);
    println!(
        "  zeta_alg_designated  {:.9}  (pair {}, {})",
        report.zeta_alg_designated, dto.designated_pair.0, dto.designated_pair.1
    );
    println!("  upper_bound          {:.9}", report.upper_bound);
    if report.zeta_star_empirical > report.zeta_alg + diagnosis_core::TOLERANCE {
        println!(
            "  note: the empirical factor exceeds the swept factor here; the sweep bounds \
             per-branch ratios, not realization-pair ratios"
        );
    }
    if !report.hard_violations.is_empty() {
        println!(
            "  note: {} benefit(s) rise from an exactly-zero base (no finite factor); \
             see zero_base_jumps in the report",
            report.hard_violations.len()
        );
    }
    println!("written to {}", path.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let config = verify::VerifyConfig {
        seed: args.seed,
        instances: args.instances,
        cap: args.cap,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    verify::run_all(&config, &mut out)?;
    println!("all suites passed");
    Ok(())
}

fn cmd_timing(args: TimingArgs) -> Result<()> {
    let bundle = format::load_circuit(&args.circuit)?;
    let spec = format::load_faults(&args.faults, &bundle)?;
    let report = timing::timing_scan(&bundle, &spec, args.samples)?;
    print!("{}", timing::render_csv(&report));
    timing::write_csv(&report, &args.out)?;
    println!("written to {}", args.out.join("timing.csv").display());
    Ok(())
}

fn cmd_session(args: SessionArgs) -> Result<()> {
    let model = args.source.load()?;
    let truth = match &args.truth {
        None => None,
        Some(pair) => Some(parse_truth(&model, pair)?),
    };
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    session::interactive_session(&model, args.budget, truth, stdin.lock(), &mut out)?;
    Ok(())
}

fn parse_truth(model: &DiagnosisModel, pair: &str) -> Result<(usize, usize)> {
    let usage = || {
        CliError::invalid(
            "--truth",
            format!("expected \"STATE_ID,MODE_ID\", got {pair:?}"),
        )
    };
    let (state, mode) = pair.split_once(',').ok_or_else(usage)?;
    let x = model.state_index(state.trim()).ok_or_else(|| {
        CliError::invalid("--truth", format!("unknown state id {:?}", state.trim()))
    })?;
    let q = model.mode_index(mode.trim()).ok_or_else(|| {
        CliError::invalid("--truth", format!("unknown mode id {:?}", mode.trim()))
    })?;
    Ok((x, q))
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    if let Some(path) = &args.model {
        let model = format::load_model(path)?;
        println!(
            "model {}: {} states × {} modes, {} actions, {} outcomes",
            path.display(),
            model.n_states(),
            model.n_modes(),
            model.n_actions(),
            model.n_outcomes()
        );
    } else {
        let circuit_path = args.circuit.as_ref().expect("clap enforces the pairing");
        let bundle = format::load_circuit(circuit_path)?;
        let table = bundle.circuit.healthy_table()?;
        println!(
            "circuit {}: {} sensors ({} fault-prone); healthy table {} states × {} switch configurations",
            circuit_path.display(),
            bundle.sensor_ids.len(),
            bundle.fault_prone.len(),
            table.state_ids.len(),
            table.action_ids.len()
        );
        if let Some(faults_path) = &args.faults {
            let spec = format::load_faults(faults_path, &bundle)?;
            let compiled = format::compile_circuit_model(&bundle, &spec)?;
            println!(
                "faults {}: {} sensor fault modes; compiled model {} states × {} modes, {} actions, {} outcomes",
                faults_path.display(),
                spec.mode_count(),
                compiled.model.n_states(),
                compiled.model.n_modes(),
                compiled.model.n_actions(),
                compiled.model.n_outcomes()
            );
        }
    }
    println!("ok");
    Ok(())
}
