//! Experiment protocols writing CSV result tables.
//!
//! Every protocol writes `runs.csv` (one row per solver run) and
//! `aggregate.csv` (mean and 95% confidence half-width per parameter cell).
//! Both are byte-identical for identical configs. Wall-clock times go to
//! `timing.csv` and, for the threshold protocol, `runtime.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use match_advisor::advice::{AdviceInstance, Cost};
use match_advisor::data::{
    gen_er_instance, gen_threshold_standin, ChoiceMode, CostScheme, StandinDataset, ThresholdTables,
};
use match_advisor::matchenum::DEFAULT_ENUMERATION_BUDGET;
use match_advisor::prob::{mix_seed, BlockMethod};
use match_advisor::solvers::{advise, advise_with_blocks, AdviseConfig, ProbOracle, Solution, SolverChoice, SolverKind};
use match_advisor::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    SyntheticMcsr,
    SyntheticScmr,
    Threshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    Auto,
    Greedy,
    Threshold,
    Exhaustive,
}

impl SolverName {
    fn choice(self) -> SolverChoice {
        match self {
            SolverName::Auto => SolverChoice::Auto,
            SolverName::Greedy => SolverChoice::Greedy,
            SolverName::Threshold => SolverChoice::Threshold,
            SolverName::Exhaustive => SolverChoice::Exhaustive,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            SolverName::Auto => "auto",
            SolverName::Greedy => "greedy",
            SolverName::Threshold => "threshold",
            SolverName::Exhaustive => "exhaustive",
        }
    }
}

/// Probability oracle of an experiment; seeds derive from the instance seed.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    Exact {
        #[serde(default = "default_enum_budget")]
        budget: u64,
    },
    Sample {
        samples: u64,
    },
    Hkuno {
        theta_hk: u64,
        theta_u: u64,
    },
    /// Block formula over probabilities sampled on the fully relaxed graph.
    Block {
        samples: u64,
    },
}

fn default_enum_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}

fn default_step() -> u64 {
    10
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub graphs: usize,
    pub agents: usize,
    pub resources: usize,
    pub edge_prob: f64,
    /// Inclusive range the restriction count of each graph is drawn from.
    pub restrictions: [usize; 2],
    pub max_per_resource: Vec<usize>,
    pub budgets: Vec<u64>,
    pub solvers: Vec<SolverName>,
    pub oracle: OracleConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Stand-in dataset generated when no CSV paths are given.
    pub dataset: StandinDataset,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default)]
    pub resources_csv: Option<PathBuf>,
    #[serde(default)]
    pub agents_csv: Option<PathBuf>,
    /// Number of advice-seeking agents, drawn among agents with relaxable
    /// incompatibilities.
    pub agents: usize,
    pub schemes: Vec<CostScheme>,
    pub budgets: Vec<u64>,
    #[serde(default = "default_step")]
    pub step: u64,
    pub oracle: OracleConfig,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct ExperimentSummary {
    pub protocol: Protocol,
    pub runs: usize,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
struct SyntheticRow {
    graph: usize,
    instance_seed: u64,
    n_restrictions: usize,
    max_per_resource: usize,
    budget: u64,
    solver: &'static str,
    scenario: u8,
    prob_before: String,
    prob_after: String,
    gain: String,
    cost: Cost,
    chosen: String,
    oracle_calls: u64,
}

#[derive(Clone, Debug, Serialize)]
struct ThresholdRow {
    dataset: StandinDataset,
    agent: String,
    instance_seed: u64,
    scheme: CostScheme,
    blocks: usize,
    budget: u64,
    solver: SolverKind,
    scenario: u8,
    prob_before: String,
    prob_after: String,
    gain: String,
    cost: Cost,
    chosen: String,
    oracle_calls: u64,
}

#[derive(Clone, Debug, Serialize)]
struct AggregateRow {
    group: String,
    budget: u64,
    solver: &'static str,
    runs: usize,
    mean_prob_before: String,
    mean_prob_after: String,
    ci95_prob_after: String,
    mean_gain: String,
    ci95_gain: String,
    mean_cost: String,
}

#[derive(Clone, Debug, Serialize)]
struct ComparisonRow {
    graph: usize,
    instance_seed: u64,
    max_per_resource: usize,
    budget: u64,
    greedy: String,
    exhaustive: String,
    ratio: String,
    within_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
struct TimingRow {
    key: String,
    budget: u64,
    solver: &'static str,
    wall_ms: String,
}

#[derive(Clone, Debug, Serialize)]
struct RuntimeRow {
    dataset: StandinDataset,
    scheme: CostScheme,
    budget: u64,
    runs: usize,
    mean_wall_ms: String,
    max_wall_ms: String,
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of one solver run, before formatting.
struct Run {
    solution: Solution,
    wall_ms: f64,
}

fn solve(inst: &AdviceInstance, budget: u64, solver: SolverName, oracle: OracleConfig, seed: u64) -> Result<Run> {
    let beta = Cost::from_units(budget);
    let mut config = AdviseConfig { solver: solver.choice(), ..AdviseConfig::default() };
    let start = Instant::now();
    let solution = match oracle {
        OracleConfig::Exact { budget } => {
            config.oracle = ProbOracle::Exact { budget };
            advise(inst, beta, &config)?
        }
        OracleConfig::Sample { samples } => {
            config.oracle = ProbOracle::Sampling { samples, seed };
            advise(inst, beta, &config)?
        }
        OracleConfig::Hkuno { theta_hk, theta_u } => {
            config.oracle = ProbOracle::HkUno { theta_hk, theta_u, seed };
            advise(inst, beta, &config)?
        }
        OracleConfig::Block { samples } => {
            advise_with_blocks(inst, beta, &config, BlockMethod::Sampling { samples, seed })?
        }
    };
    Ok(Run { solution, wall_ms: start.elapsed().as_secs_f64() * 1000.0 })
}

fn chosen_text(sol: &Solution) -> String {
    sol.chosen.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Mean and 95% normal-approximation half-width.
fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Per-run values feeding the aggregate table.
struct Cell {
    before: Vec<f64>,
    after: Vec<f64>,
    gain: Vec<f64>,
    cost: Vec<f64>,
}

fn aggregate(cells: BTreeMap<(String, u64, SolverName), Cell>) -> Vec<AggregateRow> {
    cells
        .into_iter()
        .map(|((group, budget, solver), c)| {
            let (after, ci_after) = mean_ci(&c.after);
            let (gain, ci_gain) = mean_ci(&c.gain);
            AggregateRow {
                group,
                budget,
                solver: solver.as_str(),
                runs: c.after.len(),
                mean_prob_before: f6(mean_ci(&c.before).0),
                mean_prob_after: f6(after),
                ci95_prob_after: f6(ci_after),
                mean_gain: f6(gain),
                ci95_gain: f6(ci_gain),
                mean_cost: f6(mean_ci(&c.cost).0),
            }
        })
        .collect()
}

fn add_to_cell(cells: &mut BTreeMap<(String, u64, SolverName), Cell>, key: (String, u64, SolverName), sol: &Solution) {
    let c = cells.entry(key).or_insert_with(|| Cell { before: vec![], after: vec![], gain: vec![], cost: vec![] });
    // Aggregate from the rounded values written to runs.csv.
    let round = |x: f64| f6(x).parse::<f64>().expect("formatted float");
    c.before.push(round(sol.baseline.value));
    c.after.push(round(sol.probability.value));
    c.gain.push(round(sol.gain));
    c.cost.push(sol.cost.as_f64());
}

const AGGREGATE_HEADER: [&str; 10] = [
    "group",
    "budget",
    "solver",
    "runs",
    "mean_prob_before",
    "mean_prob_after",
    "ci95_prob_after",
    "mean_gain",
    "ci95_gain",
    "mean_cost",
];
const TIMING_HEADER: [&str; 4] = ["key", "budget", "solver", "wall_ms"];

/// Runs `protocol` with the JSON config at `config_path`, writing CSV tables
/// into `out_dir`.
pub fn run_experiment(protocol: Protocol, config_path: &Path, out_dir: &Path) -> Result<ExperimentSummary> {
    fs::create_dir_all(out_dir)?;
    match protocol {
        Protocol::SyntheticMcsr | Protocol::SyntheticScmr => {
            let cfg: SyntheticConfig = read_config(config_path)?;
            let mode = if protocol == Protocol::SyntheticMcsr {
                ChoiceMode::MultiChoiceSingleRestr
            } else {
                ChoiceMode::SingleChoiceMultiRestr
            };
            synthetic(protocol, &cfg, mode, out_dir)
        }
        Protocol::Threshold => {
            let cfg: ThresholdConfig = read_config(config_path)?;
            threshold(&cfg, out_dir)
        }
    }
}

fn synthetic(protocol: Protocol, cfg: &SyntheticConfig, mode: ChoiceMode, out_dir: &Path) -> Result<ExperimentSummary> {
    let [lo, hi] = cfg.restrictions;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("bad restriction range [{lo}, {hi}]")));
    }
    let mut solvers = cfg.solvers.clone();
    solvers.sort();
    solvers.dedup();

    let jobs: Vec<(usize, usize)> = (0..cfg.graphs)
        .flat_map(|g| cfg.max_per_resource.iter().map(move |&m| (g, m)))
        .collect();
    let results: Vec<Vec<(SyntheticRow, Run)>> = jobs
        .par_iter()
        .map(|&(graph, max_per)| {
            let graph_seed = mix_seed(cfg.seed, graph as u64);
            let n_restr = lo + (mix_seed(graph_seed, 0) % (hi - lo + 1) as u64) as usize;
            let instance_seed = mix_seed(graph_seed, max_per as u64 + 1);
            let inst = gen_er_instance(cfg.agents, cfg.resources, cfg.edge_prob, n_restr, max_per, mode, instance_seed)?;
            let oracle_seed = mix_seed(instance_seed, u64::MAX);
            let mut rows = Vec::new();
            for &budget in &cfg.budgets {
                for &solver in &solvers {
                    let run = solve(&inst, budget, solver, cfg.oracle, oracle_seed)?;
                    let sol = &run.solution;
                    let row = SyntheticRow {
                        graph,
                        instance_seed,
                        n_restrictions: n_restr,
                        max_per_resource: max_per,
                        budget,
                        solver: solver.as_str(),
                        scenario: if sol.scenario1 { 1 } else { 2 },
                        prob_before: f6(sol.baseline.value),
                        prob_after: f6(sol.probability.value),
                        gain: f6(sol.gain),
                        cost: sol.cost,
                        chosen: chosen_text(sol),
                        oracle_calls: sol.oracle_calls,
                    };
                    rows.push((row, run));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut results: Vec<(SyntheticRow, Run)> = results.into_iter().flatten().collect();
    results.sort_by(|(a, _), (b, _)| {
        (a.graph, a.max_per_resource, a.budget, a.solver).cmp(&(b.graph, b.max_per_resource, b.budget, b.solver))
    });

    let mut cells = BTreeMap::new();
    let mut timing = Vec::new();
    for (row, run) in &results {
        let solver = solvers.iter().copied().find(|s| s.as_str() == row.solver).expect("known solver");
        add_to_cell(&mut cells, (format!("max_per_resource={}", row.max_per_resource), row.budget, solver), &run.solution);
        timing.push(TimingRow {
            key: format!("graph={};max_per_resource={}", row.graph, row.max_per_resource),
            budget: row.budget,
            solver: row.solver,
            wall_ms: format!("{:.3}", run.wall_ms),
        });
    }

    let runs: Vec<SyntheticRow> = results.iter().map(|(r, _)| r.clone()).collect();
    write_csv(
        &out_dir.join("runs.csv"),
        &[
            "graph",
            "instance_seed",
            "n_restrictions",
            "max_per_resource",
            "budget",
            "solver",
            "scenario",
            "prob_before",
            "prob_after",
            "gain",
            "cost",
            "chosen",
            "oracle_calls",
        ],
        &runs,
    )?;
    write_csv(&out_dir.join("aggregate.csv"), &AGGREGATE_HEADER, &aggregate(cells))?;
    write_csv(&out_dir.join("timing.csv"), &TIMING_HEADER, &timing)?;
    let mut files = vec!["runs.csv".to_string(), "aggregate.csv".into(), "timing.csv".into()];

    if solvers.contains(&SolverName::Greedy) && solvers.contains(&SolverName::Exhaustive) {
        let bound = 1.0 - (-1.0f64).exp();
        let mut cmp = Vec::new();
        // (graph, max_per_resource, budget) -> (greedy, exhaustive, instance seed)
        type Pair = (Option<f64>, Option<f64>, u64);
        let mut by_cell: BTreeMap<(usize, usize, u64), Pair> = BTreeMap::new();
        for (row, run) in &results {
            let e = by_cell.entry((row.graph, row.max_per_resource, row.budget)).or_insert((None, None, row.instance_seed));
            match row.solver {
                "greedy" => e.0 = Some(run.solution.probability.value),
                "exhaustive" => e.1 = Some(run.solution.probability.value),
                _ => {}
            }
        }
        for ((graph, max_per, budget), (g, e, seed)) in by_cell {
            let (Some(g), Some(e)) = (g, e) else { continue };
            cmp.push(ComparisonRow {
                graph,
                instance_seed: seed,
                max_per_resource: max_per,
                budget,
                greedy: f6(g),
                exhaustive: f6(e),
                ratio: f6(if e > 0.0 { g / e } else { 1.0 }),
                within_bound: g >= bound * e - 1e-9,
            });
        }
        write_csv(
            &out_dir.join("comparison.csv"),
            &["graph", "instance_seed", "max_per_resource", "budget", "greedy", "exhaustive", "ratio", "within_bound"],
            &cmp,
        )?;
        files.push("comparison.csv".into());
    }
    Ok(ExperimentSummary { protocol, runs: runs.len(), files })
}

fn threshold(cfg: &ThresholdConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    let tables = match (&cfg.resources_csv, &cfg.agents_csv) {
        (Some(r), Some(a)) => ThresholdTables::load(r, a)?,
        (None, None) => {
            let (r, a) = gen_threshold_standin(cfg.dataset, cfg.data_seed)?;
            let dir = out_dir.join("standin");
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("resources.csv"), r)?;
            fs::write(dir.join("agents.csv"), a)?;
            ThresholdTables::load(&dir.join("resources.csv"), &dir.join("agents.csv"))?
        }
        _ => return Err(Error::InvalidArgument("give both resources_csv and agents_csv or neither".into())),
    };

    // Advice seekers: a seeded shuffle of the agents, keeping those with at
    // least one relaxable incompatibility.
    let mut order: Vec<usize> = (0..tables.n_agents()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut seekers = Vec::new();
    for &x in &order {
        if seekers.len() == cfg.agents {
            break;
        }
        if !tables.instance(x, CostScheme::CostI, cfg.step)?.gamma.is_empty() {
            seekers.push(x);
        }
    }

    let jobs: Vec<(usize, CostScheme)> =
        seekers.iter().flat_map(|&x| cfg.schemes.iter().map(move |&s| (x, s))).collect();
    let results: Vec<Vec<(ThresholdRow, Run)>> = jobs
        .par_iter()
        .map(|&(x, scheme)| {
            let inst = tables.instance(x, scheme, cfg.step)?;
            let instance_seed = mix_seed(cfg.seed, x as u64);
            let blocks = inst.threshold_blocks()?.len();
            let mut rows = Vec::new();
            for &budget in &cfg.budgets {
                let run = solve(&inst, budget, SolverName::Auto, cfg.oracle, instance_seed)?;
                let sol = &run.solution;
                let row = ThresholdRow {
                    dataset: cfg.dataset,
                    agent: tables.agent_id(x).to_string(),
                    instance_seed,
                    scheme,
                    blocks,
                    budget,
                    solver: sol.solver,
                    scenario: if sol.scenario1 { 1 } else { 2 },
                    prob_before: f6(sol.baseline.value),
                    prob_after: f6(sol.probability.value),
                    gain: f6(sol.gain),
                    cost: sol.cost,
                    chosen: chosen_text(sol),
                    oracle_calls: sol.oracle_calls,
                };
                rows.push((row, run));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut results: Vec<(ThresholdRow, Run)> = results.into_iter().flatten().collect();
    results.sort_by(|(a, _), (b, _)| {
        (&a.agent, a.scheme.to_string(), a.budget).cmp(&(&b.agent, b.scheme.to_string(), b.budget))
    });

    let mut cells = BTreeMap::new();
    let mut timing = Vec::new();
    let mut runtime: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    for (row, run) in &results {
        add_to_cell(&mut cells, (format!("scheme={}", row.scheme), row.budget, SolverName::Auto), &run.solution);
        timing.push(TimingRow {
            key: format!("agent={};scheme={}", row.agent, row.scheme),
            budget: row.budget,
            solver: "auto",
            wall_ms: format!("{:.3}", run.wall_ms),
        });
        runtime.entry((row.scheme.to_string(), row.budget)).or_default().push(run.wall_ms);
    }
    let runtime: Vec<RuntimeRow> = runtime
        .into_iter()
        .map(|((scheme, budget), ms)| RuntimeRow {
            dataset: cfg.dataset,
            scheme: scheme.parse().expect("scheme round-trips"),
            budget,
            runs: ms.len(),
            mean_wall_ms: format!("{:.3}", mean_ci(&ms).0),
            max_wall_ms: format!("{:.3}", ms.iter().copied().fold(0.0, f64::max)),
        })
        .collect();

    let runs: Vec<ThresholdRow> = results.iter().map(|(r, _)| r.clone()).collect();
    write_csv(
        &out_dir.join("runs.csv"),
        &[
            "dataset",
            "agent",
            "instance_seed",
            "scheme",
            "blocks",
            "budget",
            "solver",
            "scenario",
            "prob_before",
            "prob_after",
            "gain",
            "cost",
            "chosen",
            "oracle_calls",
        ],
        &runs,
    )?;
    write_csv(&out_dir.join("aggregate.csv"), &AGGREGATE_HEADER, &aggregate(cells))?;
    write_csv(&out_dir.join("timing.csv"), &TIMING_HEADER, &timing)?;
    write_csv(
        &out_dir.join("runtime.csv"),
        &["dataset", "scheme", "budget", "runs", "mean_wall_ms", "max_wall_ms"],
        &runtime,
    )?;
    Ok(ExperimentSummary {
        protocol: Protocol::Threshold,
        runs: runs.len(),
        files: vec!["runs.csv".into(), "aggregate.csv".into(), "timing.csv".into(), "runtime.csv".into()],
    })
}
