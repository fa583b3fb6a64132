//! Command-line front end for `match-advisor`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use match_advisor::advice::{classify, validate_instance, Cost};
use match_advisor::data::{
    gen_er_instance, gen_maxcov_instance, gen_threshold_standin, instance_from_json, instance_to_json,
    load_instance, load_threshold_csv, ChoiceMode, CostScheme, StandinDataset,
};
use match_advisor::matchenum::{MaxMatchingEnumerator, DEFAULT_ENUMERATION_BUDGET};
use match_advisor::prob::{estimate_probability, exact_probability_with_budget, hkuno_estimate, BlockMethod};
use match_advisor::solvers::{advise, advise_with_blocks, AdviseConfig, ProbOracle, Solution, SolverChoice};
use match_advisor::Error;

pub mod experiment;

pub use experiment::{run_experiment, Protocol};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MATCH_ADVISOR_THREADS";

#[derive(Parser, Debug)]
#[command(name = "match-advisor", version, about = "Matching advice for bipartite allocation markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Probability that the special agent is matched.
    Estimate(EstimateArgs),
    /// Best budget-feasible set of restrictions to remove.
    Advise(AdviseArgs),
    /// Stream the maximum matchings of the instance graph as JSON lines.
    Enumerate(EnumerateArgs),
    /// Check an instance file.
    Validate(InstanceArg),
    /// Run an experiment protocol and write CSV tables.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Random Erdős–Rényi instance with the special agent appended last.
    Er(GenErArgs),
    /// Instance encoding a Max-Coverage problem.
    Maxcov(GenMaxcovArgs),
    /// Synthetic stand-in tables in the threshold CSV schema.
    ThresholdStandin(GenStandinArgs),
    /// Threshold instance from resource and agent CSV tables.
    ThresholdCsv(GenCsvArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    McSr,
    ScMr,
}

#[derive(Args, Debug)]
struct GenErArgs {
    #[arg(long, default_value_t = 40)]
    agents: usize,
    #[arg(long, default_value_t = 20)]
    resources: usize,
    #[arg(long, default_value_t = 0.2)]
    edge_prob: f64,
    #[arg(long, default_value_t = 10)]
    restrictions: usize,
    #[arg(long, default_value_t = 4)]
    max_per_resource: usize,
    #[arg(long, value_enum, default_value_t = Mode::McSr)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenMaxcovArgs {
    /// Universe size r; elements are 1..=r.
    #[arg(long)]
    universe: usize,
    /// Sets separated by ';', elements by ',', e.g. "1,2;2,3".
    #[arg(long)]
    family: String,
    /// Number of sets that may be chosen (the budget).
    #[arg(long)]
    q: u64,
    /// Number of elements to cover.
    #[arg(long)]
    t: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Dataset {
    Cocl,
    Passvac,
}

#[derive(Args, Debug)]
struct GenStandinArgs {
    #[arg(long, value_enum)]
    dataset: Dataset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving resources.csv and agents.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scheme {
    CostI,
    CostIi,
}

impl From<Scheme> for CostScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::CostI => CostScheme::CostI,
            Scheme::CostIi => CostScheme::CostII,
        }
    }
}

#[derive(Args, Debug)]
struct GenCsvArgs {
    #[arg(long)]
    resources: PathBuf,
    #[arg(long)]
    agents: PathBuf,
    /// `id` of the agent seeking advice.
    #[arg(long)]
    agent: String,
    #[arg(long, value_enum, default_value_t = Scheme::CostI)]
    scheme: Scheme,
    /// Capacity relaxation step.
    #[arg(long, default_value_t = 10)]
    step: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InstanceArg {
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimateMethod {
    Exact,
    Sample,
    Hkuno,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimateMethod::Exact)]
    method: EstimateMethod,
    /// Agent to evaluate; the instance's special agent when absent.
    #[arg(long)]
    agent: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 32)]
    theta_hk: u64,
    #[arg(long, default_value_t = 2)]
    theta_u: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of maximum matchings exact enumeration may visit.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    enum_budget: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Auto,
    Greedy,
    Threshold,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleArg {
    Exact,
    Sample,
    Hkuno,
    Block,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct AdviseArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Relaxation budget; integer or decimal.
    #[arg(long)]
    budget: String,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value_t = OracleArg::Exact)]
    oracle: OracleArg,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 32)]
    theta_hk: u64,
    #[arg(long, default_value_t = 2)]
    theta_u: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    enum_budget: u64,
    /// Prefer the cheapest witness when relaxing can grow the matching.
    #[arg(long)]
    min_cost_witness: bool,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Stop after this many matchings.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    protocol: Protocol,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit code.
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type CliResult = Result<i32, Failure>;

/// Runs the CLI with stdout and stderr; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI against the given output streams.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            report(err, "usage", &e.to_string(), None);
            return 2;
        }
    };
    let result = configure_workers().and_then(|()| dispatch(cli.command, out));
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            report(err, "usage", &msg, None);
            2
        }
        Err(Failure::Core(e)) => {
            let violations = match &e {
                Error::Validation(v) => Some(v.clone()),
                _ => None,
            };
            report(err, e.kind(), &e.to_string(), violations);
            1
        }
    }
}

fn report(err: &mut dyn Write, kind: &str, message: &str, violations: Option<Vec<String>>) {
    let mut body = json!({ "error": kind, "message": message.trim_end() });
    if let Some(v) = violations {
        body["violations"] = json!(v);
    }
    let _ = writeln!(err, "{body}");
}

/// Sizes the global worker pool from the environment. The pool can only be
/// sized once per process; later calls keep the first size.
fn configure_workers() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Gen(g) => gen(g, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Advise(a) => advise_cmd(a, out),
        Command::Enumerate(a) => enumerate(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Experiment(a) => {
            let summary = run_experiment(a.protocol, &a.config, &a.out)?;
            writeln!(out, "{}", serde_json::to_string(&summary).expect("summary serializes"))?;
            Ok(0)
        }
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => out.write_all(text.as_bytes()),
    }
}

fn gen(cmd: GenCommand, out: &mut dyn Write) -> CliResult {
    match cmd {
        GenCommand::Er(a) => {
            let mode = match a.mode {
                Mode::McSr => ChoiceMode::MultiChoiceSingleRestr,
                Mode::ScMr => ChoiceMode::SingleChoiceMultiRestr,
            };
            let inst = gen_er_instance(
                a.agents,
                a.resources,
                a.edge_prob,
                a.restrictions,
                a.max_per_resource,
                mode,
                a.seed,
            )?;
            emit(&instance_to_json(&inst), a.out.as_deref(), out)?;
        }
        GenCommand::Maxcov(a) => {
            let family = parse_family(&a.family)?;
            let (inst, beta, target) = gen_maxcov_instance(a.universe, &family, a.q, a.t)?;
            emit(&instance_to_json(&inst), a.out.as_deref(), out)?;
            if a.out.is_some() {
                let summary = json!({
                    "budget": beta,
                    "target": { "numerator": target.numer(), "denominator": target.denom() },
                });
                writeln!(out, "{summary}")?;
            }
        }
        GenCommand::ThresholdStandin(a) => {
            let dataset = match a.dataset {
                Dataset::Cocl => StandinDataset::Cocl,
                Dataset::Passvac => StandinDataset::Passvac,
            };
            let (resources, agents) = gen_threshold_standin(dataset, a.seed)?;
            std::fs::create_dir_all(&a.out_dir)?;
            std::fs::write(a.out_dir.join("resources.csv"), resources)?;
            std::fs::write(a.out_dir.join("agents.csv"), agents)?;
        }
        GenCommand::ThresholdCsv(a) => {
            let inst = load_threshold_csv(&a.resources, &a.agents, a.scheme.into(), &a.agent, a.step)?;
            emit(&instance_to_json(&inst), a.out.as_deref(), out)?;
        }
    }
    Ok(0)
}

fn parse_family(text: &str) -> Result<Vec<Vec<usize>>, Failure> {
    text.split(';')
        .map(|set| {
            set.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Failure::Usage(format!("bad family element {s:?}"))))
                .collect()
        })
        .collect()
}

fn estimate(a: EstimateArgs, out: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let agent = a.agent.unwrap_or(inst.x_star);
    let g = &inst.graph;
    let est = match a.method {
        EstimateMethod::Exact => exact_probability_with_budget(g, agent, a.enum_budget)?,
        EstimateMethod::Sample => estimate_probability(g, agent, a.samples, a.seed)?,
        EstimateMethod::Hkuno => hkuno_estimate(g, agent, a.theta_hk, a.theta_u, a.seed)?,
    };
    writeln!(out, "{}", serde_json::to_string(&est).expect("estimate serializes"))?;
    Ok(0)
}

fn advise_cmd(a: AdviseArgs, out: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.instance)?;
    let beta: Cost = a
        .budget
        .parse()
        .map_err(|e: Error| Failure::Usage(format!("--budget: {e}")))?;
    let solver = match a.solver {
        SolverArg::Auto => SolverChoice::Auto,
        SolverArg::Greedy => SolverChoice::Greedy,
        SolverArg::Threshold => SolverChoice::Threshold,
        SolverArg::Exhaustive => SolverChoice::Exhaustive,
    };
    let mut config = AdviseConfig {
        solver,
        oracle: ProbOracle::Exact { budget: a.enum_budget },
        min_cost_witness: a.min_cost_witness,
    };
    let sol = match a.oracle {
        OracleArg::Exact => advise(&inst, beta, &config)?,
        OracleArg::Sample => {
            config.oracle = ProbOracle::Sampling { samples: a.samples, seed: a.seed };
            advise(&inst, beta, &config)?
        }
        OracleArg::Hkuno => {
            config.oracle = ProbOracle::HkUno { theta_hk: a.theta_hk, theta_u: a.theta_u, seed: a.seed };
            advise(&inst, beta, &config)?
        }
        OracleArg::Block => {
            let method = BlockMethod::Sampling { samples: a.samples, seed: a.seed };
            advise_with_blocks(&inst, beta, &config, method)?
        }
    };
    match a.out {
        OutFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&sol).expect("solution serializes"))?,
        OutFormat::Csv => write_solution_csv(&sol, out)?,
    }
    Ok(0)
}

fn write_solution_csv(sol: &Solution, out: &mut dyn Write) -> std::io::Result<()> {
    let chosen: Vec<String> = sol.chosen.iter().map(ToString::to_string).collect();
    writeln!(out, "chosen,cost,probability,baseline,gain,scenario1,solver,oracle_calls")?;
    writeln!(
        out,
        "{},{},{:.6},{:.6},{:.6},{},{},{}",
        chosen.join(";"),
        sol.cost,
        sol.probability.value,
        sol.baseline.value,
        sol.gain,
        sol.scenario1,
        sol.solver,
        sol.oracle_calls
    )
}

fn enumerate(a: EnumerateArgs, out: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.instance)?;
    for m in MaxMatchingEnumerator::new(&inst.graph).take(a.cap.unwrap_or(usize::MAX)) {
        writeln!(out, "{}", serde_json::to_string(&m).expect("matching serializes"))?;
    }
    Ok(0)
}

fn validate(a: InstanceArg, out: &mut dyn Write) -> CliResult {
    let text = std::fs::read_to_string(&a.instance)?;
    let inst = instance_from_json(&text)?;
    let violations: Vec<String> = validate_instance(&inst).iter().map(ToString::to_string).collect();
    let kind = if violations.is_empty() { classify(&inst).ok().map(|k| k.to_string()) } else { None };
    let report = json!({
        "valid": violations.is_empty(),
        "type": kind,
        "violations": violations,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(if violations.is_empty() { 0 } else { 1 })
}
