//! Relaxation optimizers.
//!
//! All solvers treat the matching probability as a black box behind
//! [`ProbOracle`]. The approximation and optimality guarantees of the greedy
//! and threshold solvers assume the exact (uniform over maximum matchings)
//! oracle; the sampling oracles are heuristics and only approximate it.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advice::{classify, AdviceInstance, Cost, IncompatibilityPair, IncompatibilityType};
use crate::bigraph::{dm_decompose, max_matching, BipartiteGraph, DmLabel};
use crate::error::{Error, Result};
use crate::matchenum::DEFAULT_ENUMERATION_BUDGET;
use crate::prob::{
    block_probability, blocks_from_gamma, estimate_probability, exact_probability_with_budget, hkuno_estimate,
    mix_seed, precompute_block_probabilities, BlockMethod, BlockProbabilities, Prob, ProbEstimate, ProbMethod,
};
use crate::scenario::{detect_scenario_with, ScenarioOptions, ScenarioResult};

/// Largest restriction set [`exhaustive_relax`] accepts.
pub const EXHAUSTIVE_LIMIT: usize = 25;

/// Source of `p(G)`, the probability that the special agent is matched.
/// Calls with identical inputs return identical values.
#[derive(Clone, Debug)]
pub enum ProbOracle {
    Exact { budget: u64 },
    Sampling { samples: u64, seed: u64 },
    HkUno { theta_hk: u64, theta_u: u64, seed: u64 },
    BlockFormula(Arc<BlockProbabilities>),
}

impl ProbOracle {
    pub fn exact() -> Self {
        ProbOracle::Exact { budget: DEFAULT_ENUMERATION_BUDGET }
    }

    pub fn evaluate(&self, g: &BipartiteGraph, agent: usize) -> Result<ProbEstimate> {
        match self {
            ProbOracle::Exact { budget } => exact_probability_with_budget(g, agent, *budget),
            ProbOracle::Sampling { samples, seed } => estimate_probability(g, agent, *samples, *seed),
            ProbOracle::HkUno { theta_hk, theta_u, seed } => hkuno_estimate(g, agent, *theta_hk, *theta_u, *seed),
            ProbOracle::BlockFormula(bp) => {
                let active = bp.active_blocks(g, agent);
                let p = match block_probability(bp, &active) {
                    // A sampled table may never see x* unmatched; with no
                    // active mass either, x* was never matched in the samples.
                    Err(Error::UndefinedProbability) if bp.method != ProbMethod::ExactEnumeration => {
                        Prob::from_integer(0)
                    }
                    other => other?,
                };
                Ok(ProbEstimate::from_ratio(p, bp.samples, ProbMethod::BlockFormula))
            }
        }
    }

    /// Same oracle with a seed derived from `round`; seedless oracles are
    /// returned unchanged. Used to give every greedy round its own common
    /// random numbers.
    pub fn for_round(&self, round: u64) -> ProbOracle {
        match self {
            ProbOracle::Sampling { samples, seed } => ProbOracle::Sampling {
                samples: *samples,
                seed: mix_seed(*seed, round),
            },
            ProbOracle::HkUno { theta_hk, theta_u, seed } => ProbOracle::HkUno {
                theta_hk: *theta_hk,
                theta_u: *theta_u,
                seed: mix_seed(*seed, round),
            },
            other => other.clone(),
        }
    }

    fn is_seeded(&self) -> bool {
        matches!(self, ProbOracle::Sampling { .. } | ProbOracle::HkUno { .. })
    }
}

/// Oracle wrapper that counts evaluations.
struct Counted<'a> {
    oracle: &'a ProbOracle,
    calls: AtomicU64,
}

impl<'a> Counted<'a> {
    fn new(oracle: &'a ProbOracle) -> Self {
        Counted { oracle, calls: AtomicU64::new(0) }
    }

    fn eval_with(&self, oracle: &ProbOracle, g: &BipartiteGraph, agent: usize) -> Result<ProbEstimate> {
        self.calls.fetch_add(1, AtomicOrdering::Relaxed);
        oracle.evaluate(g, agent)
    }

    fn eval(&self, g: &BipartiteGraph, agent: usize) -> Result<ProbEstimate> {
        self.eval_with(self.oracle, g, agent)
    }

    fn calls(&self) -> u64 {
        self.calls.load(AtomicOrdering::Relaxed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Nothing affordable could change the graph.
    None,
    Scenario1,
    Greedy,
    Threshold,
    Exhaustive,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::None => "none",
            SolverKind::Scenario1 => "scenario1",
            SolverKind::Greedy => "greedy",
            SolverKind::Threshold => "threshold",
            SolverKind::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Solution {
    pub chosen: Vec<usize>,
    pub cost: Cost,
    pub probability: ProbEstimate,
    pub baseline: ProbEstimate,
    pub gain: f64,
    pub scenario1: bool,
    pub solver: SolverKind,
    pub oracle_calls: u64,
    /// First greedy round whose best candidate did not improve the
    /// probability; the round still spends budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_zero_gain_round: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Solution {
    fn new(
        inst: &AdviceInstance,
        mut chosen: Vec<usize>,
        probability: ProbEstimate,
        baseline: ProbEstimate,
        solver: SolverKind,
        oracle_calls: u64,
    ) -> Result<Solution> {
        chosen.sort_unstable();
        let cost = inst.relaxation_cost(&chosen)?;
        Ok(Solution {
            gain: probability.value - baseline.value,
            chosen,
            cost,
            probability,
            baseline,
            scenario1: false,
            solver,
            oracle_calls,
            first_zero_gain_round: None,
            note: None,
        })
    }
}

fn budget_units(beta: Cost) -> Result<u64> {
    beta.as_units()
        .ok_or_else(|| Error::Solver(format!("budget {beta} is not an integer")))
}

/// Greedy relaxation for unit-cost restrictions: `β` rounds, each adding the
/// remaining restriction whose addition gives the highest probability (ties
/// to the lowest id). Rounds continue even when no candidate helps.
///
/// `inst.gamma` should already be budget-filtered (Scenario-2 output).
pub fn greedy_relax(inst: &AdviceInstance, beta: Cost, oracle: &ProbOracle) -> Result<Solution> {
    let counted = Counted::new(oracle);
    let baseline = counted.eval(&inst.graph, inst.x_star)?;
    greedy_with_baseline(inst, beta, &counted, baseline)
}

fn greedy_with_baseline(
    inst: &AdviceInstance,
    beta: Cost,
    counted: &Counted,
    baseline: ProbEstimate,
) -> Result<Solution> {
    if inst.restrictions.is_empty() {
        return Err(Error::Solver("no restrictions to relax".into()));
    }
    let unit = Cost::from_units(1);
    if let Some(r) = inst.restrictions.iter().find(|r| r.cost != unit) {
        return Err(Error::Solver(format!(
            "greedy needs unit costs; restriction {} costs {}",
            r.id, r.cost
        )));
    }
    let rounds = budget_units(beta)?;
    if rounds == 0 {
        return Err(Error::Solver("greedy needs a budget of at least 1".into()));
    }

    let mut chosen: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..inst.restrictions.len()).collect();
    let mut current = baseline.clone();
    let mut last_best: Option<ProbEstimate> = None;
    let mut zero_gain = None;
    for round in 0..rounds as usize {
        if remaining.is_empty() {
            break;
        }
        let oracle = counted.oracle.for_round(round as u64);
        let scores: Vec<ProbEstimate> = remaining
            .par_iter()
            .map(|&r| {
                let mut a = chosen.clone();
                a.push(r);
                let g = inst.apply_relaxation(&a)?;
                counted.eval_with(&oracle, &g, inst.x_star)
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i].cmp_value(&scores[best]).is_gt() {
                best = i;
            }
        }
        if zero_gain.is_none() && !scores[best].cmp_value(&current).is_gt() {
            zero_gain = Some(round);
        }
        current = scores[best].clone();
        chosen.push(remaining.remove(best));
        last_best = Some(scores[best].clone());
    }

    let probability = match last_best {
        Some(p) if !counted.oracle.is_seeded() => p,
        _ => {
            let g = inst.apply_relaxation(&chosen)?;
            counted.eval(&g, inst.x_star)?
        }
    };
    let mut sol = Solution::new(inst, chosen, probability, baseline, SolverKind::Greedy, counted.calls())?;
    sol.first_zero_gain_round = zero_gain;
    Ok(sol)
}

/// Every non-negative integer `alpha`-tuple summing to `beta`, in
/// lexicographic order. There are `C(beta + alpha - 1, alpha - 1)` of them.
pub fn alpha_partitions(beta: u64, alpha: usize) -> Result<Vec<Vec<u64>>> {
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be at least 1".into()));
    }
    fn fill(rest: u64, slots: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=rest {
            prefix.push(v);
            fill(rest - v, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(beta, alpha, &mut Vec::with_capacity(alpha), &mut out);
    Ok(out)
}

/// Optimal relaxation for threshold-like instances with integer costs.
///
/// For every split of the budget across the attribute blocks, each block
/// relaxes the longest suffix of its ranks that fits its share (found by
/// binary search over precomputed suffix sums). The best candidate wins; ties
/// keep the empty relaxation or the earliest split. Uses at most
/// `C(β + α - 1, α - 1) + 1` oracle calls.
pub fn threshold_relax(inst: &AdviceInstance, beta: Cost, oracle: &ProbOracle) -> Result<Solution> {
    let counted = Counted::new(oracle);
    let baseline = counted.eval(&inst.graph, inst.x_star)?;
    threshold_with_baseline(inst, beta, &counted, baseline)
}

fn threshold_with_baseline(
    inst: &AdviceInstance,
    beta: Cost,
    counted: &Counted,
    baseline: ProbEstimate,
) -> Result<Solution> {
    if classify(inst)? != IncompatibilityType::ThresholdLike {
        return Err(Error::Solver("instance is not threshold-like".into()));
    }
    let budget = budget_units(beta)?;
    let blocks = inst.threshold_blocks()?;
    // suffix[l][i] = cost of ranks i+1..=t of block l, with suffix[l][t] = 0.
    let mut suffix: Vec<Vec<u64>> = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let mut s = vec![0u64; block.len() + 1];
        for i in (0..block.len()).rev() {
            let c = inst.restrictions[block[i]].cost.as_units().ok_or_else(|| {
                Error::Solver(format!("restriction {} has a non-integer cost", block[i]))
            })?;
            s[i] = s[i + 1] + c;
        }
        suffix.push(s);
    }

    let partitions = alpha_partitions(budget, blocks.len().max(1))?;
    let candidates: Vec<Vec<usize>> = partitions
        .iter()
        .map(|shares| {
            let mut a = Vec::new();
            for (l, block) in blocks.iter().enumerate() {
                // Suffix sums decrease with the start index: first start that fits.
                let start = suffix[l].partition_point(|&c| c > shares[l]);
                a.extend_from_slice(&block[start..]);
            }
            a.sort_unstable();
            a
        })
        .collect();
    let scores: Vec<ProbEstimate> = candidates
        .par_iter()
        .map(|a| {
            let g = inst.apply_relaxation(a)?;
            counted.eval(&g, inst.x_star)
        })
        .collect::<Result<_>>()?;

    let mut best: Option<usize> = None;
    let mut best_p = baseline.clone();
    for (i, p) in scores.iter().enumerate() {
        if p.cmp_value(&best_p).is_gt() {
            best = Some(i);
            best_p = p.clone();
        }
    }
    let chosen = best.map(|i| candidates[i].clone()).unwrap_or_default();
    Solution::new(inst, chosen, best_p, baseline, SolverKind::Threshold, counted.calls())
}

/// Exhaustive search over every affordable restriction subset (at most
/// [`EXHAUSTIVE_LIMIT`] restrictions). Subsets that activate the same
/// resources give the same graph and are evaluated once. Ties prefer fewer
/// restrictions, then the lexicographically smallest id list.
pub fn exhaustive_relax(inst: &AdviceInstance, beta: Cost, oracle: &ProbOracle) -> Result<Solution> {
    let counted = Counted::new(oracle);
    let baseline = counted.eval(&inst.graph, inst.x_star)?;
    exhaustive_with_baseline(inst, beta, &counted, baseline)
}

fn exhaustive_with_baseline(
    inst: &AdviceInstance,
    beta: Cost,
    counted: &Counted,
    baseline: ProbEstimate,
) -> Result<Solution> {
    let n = inst.restrictions.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::Solver(format!(
            "exhaustive search is limited to {EXHAUSTIVE_LIMIT} restrictions, got {n}"
        )));
    }
    let costs: Vec<Cost> = inst.restrictions.iter().map(|r| r.cost).collect();

    // Best representative subset per activated-resource set.
    let mut reps: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    let mut stack: Vec<(usize, Vec<usize>, Cost)> = vec![(0, Vec::new(), Cost::ZERO)];
    while let Some((next, subset, cost)) = stack.pop() {
        if next == n {
            let key = inst.activated_resources(&subset)?;
            let entry = reps.entry(key).or_insert_with(|| subset.clone());
            if (subset.len(), &subset) < (entry.len(), &*entry) {
                *entry = subset;
            }
            continue;
        }
        if cost + costs[next] <= beta {
            let mut with = subset.clone();
            with.push(next);
            stack.push((next + 1, with, cost + costs[next]));
        }
        stack.push((next + 1, subset, cost));
    }

    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = reps.into_iter().collect();
    groups.sort_by(|a, b| (a.1.len(), &a.1).cmp(&(b.1.len(), &b.1)));
    let scores: Vec<ProbEstimate> = groups
        .par_iter()
        .map(|(ys, _)| {
            if ys.is_empty() {
                Ok(baseline.clone())
            } else {
                let g = inst.graph.add_agent_edges(inst.x_star, ys.iter().copied())?;
                counted.eval(&g, inst.x_star)
            }
        })
        .collect::<Result<_>>()?;

    // Groups are sorted by tie-break order, so keep the first maximum.
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i].cmp_value(&scores[best]).is_gt() {
            best = i;
        }
    }
    let chosen = groups[best].1.clone();
    Solution::new(inst, chosen, scores[best].clone(), baseline, SolverKind::Exhaustive, counted.calls())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Greedy,
    Threshold,
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct AdviseConfig {
    pub solver: SolverChoice,
    pub oracle: ProbOracle,
    pub min_cost_witness: bool,
}

impl Default for AdviseConfig {
    fn default() -> Self {
        AdviseConfig {
            solver: SolverChoice::Auto,
            oracle: ProbOracle::exact(),
            min_cost_witness: false,
        }
    }
}

/// Full advice pipeline: baseline probability, scenario detection, then the
/// solver matching the incompatibility type (or the configured override).
pub fn advise(inst: &AdviceInstance, beta: Cost, config: &AdviseConfig) -> Result<Solution> {
    let kind = classify(inst)?;
    let counted = Counted::new(&config.oracle);
    let baseline = counted.eval(&inst.graph, inst.x_star)?;

    let opts = ScenarioOptions { min_cost_witness: config.min_cost_witness };
    let gamma_prime = match detect_scenario_with(inst, beta, opts)? {
        ScenarioResult::Scenario1 { witness, .. } => {
            let certain = ProbEstimate::from_ratio(Prob::from_integer(1), 1, baseline.method);
            let mut sol = Solution::new(inst, witness, certain, baseline, SolverKind::Scenario1, counted.calls())?;
            sol.scenario1 = true;
            return Ok(sol);
        }
        ScenarioResult::Scenario2 { gamma_prime } => gamma_prime,
    };
    if gamma_prime.is_empty() {
        let base = baseline.clone();
        return Solution::new(inst, Vec::new(), base, baseline, SolverKind::None, counted.calls());
    }
    let reduced = inst.with_gamma(gamma_prime);

    let unit = Cost::from_units(1);
    let unit_costs = inst.restrictions.iter().all(|r| r.cost == unit);
    let small = inst.restrictions.len() <= EXHAUSTIVE_LIMIT;
    let solver = match config.solver {
        SolverChoice::Greedy => SolverKind::Greedy,
        SolverChoice::Threshold => SolverKind::Threshold,
        SolverChoice::Exhaustive => SolverKind::Exhaustive,
        SolverChoice::Auto => match kind {
            IncompatibilityType::ThresholdLike => SolverKind::Threshold,
            IncompatibilityType::MultiChoiceMultiRestriction => {
                if small {
                    SolverKind::Exhaustive
                } else {
                    return Err(Error::NoSolver(format!(
                        "MC-MR instance with {} restrictions exceeds the exhaustive limit of {EXHAUSTIVE_LIMIT}",
                        inst.restrictions.len()
                    )));
                }
            }
            _ if unit_costs => SolverKind::Greedy,
            _ if small => SolverKind::Exhaustive,
            _ => {
                return Err(Error::NoSolver(
                    "non-unit costs and too many restrictions for exhaustive search".into(),
                ))
            }
        },
    };
    let mut sol = match solver {
        SolverKind::Greedy => greedy_with_baseline(&reduced, beta, &counted, baseline)?,
        SolverKind::Threshold => threshold_with_baseline(&reduced, beta, &counted, baseline)?,
        _ => exhaustive_with_baseline(&reduced, beta, &counted, baseline)?,
    };
    if solver == SolverKind::Greedy && kind == IncompatibilityType::SingleChoiceMultiRestriction {
        sol.note = Some(
            "SC-MR objective is supermodular: greedy carries only a submodularity-ratio guarantee".into(),
        );
    }
    Ok(sol)
}

/// [`advise`] with block-formula probabilities. Blocks come from every pair
/// whose resource cannot grow the maximum matching, independent of the
/// budget, so the baseline and all candidates share one precomputation on the
/// fully relaxed graph and each candidate is scored in time linear in the
/// number of blocks. With no such pair the oracle `method` describes is used.
pub fn advise_with_blocks(
    inst: &AdviceInstance,
    beta: Cost,
    config: &AdviseConfig,
    method: BlockMethod,
) -> Result<Solution> {
    classify(inst)?;
    let dm = dm_decompose(&inst.graph, &max_matching(&inst.graph))?;
    let x_even = dm.agent(inst.x_star) == DmLabel::Even;
    let stable: Vec<IncompatibilityPair> = inst
        .gamma
        .iter()
        .filter(|p| !x_even || dm.resource(p.resource) != DmLabel::Even)
        .cloned()
        .collect();
    let oracle = if stable.is_empty() {
        match method {
            BlockMethod::Exact { budget } => ProbOracle::Exact { budget },
            BlockMethod::Sampling { samples, seed } => ProbOracle::Sampling { samples, seed },
        }
    } else {
        let bp = precompute_block_probabilities(&inst.graph, inst.x_star, &blocks_from_gamma(&stable), method)?;
        ProbOracle::BlockFormula(Arc::new(bp))
    };
    advise(inst, beta, &AdviseConfig { oracle, ..config.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advice::{IncompatibilityPair, Restriction};

    fn r(n: u64, d: u64) -> Prob {
        Prob::new(n, d)
    }

    /// x* = 0 isolated, x_i - y_{i-1}; Γ = {(y0,{r0}), (y1,{r0}), (y2,{r1})}.
    fn mcsr() -> AdviceInstance {
        AdviceInstance {
            graph: BipartiteGraph::from_edges(4, 3, [(1, 0), (2, 1), (3, 2)]).unwrap(),
            x_star: 0,
            restrictions: (0..2).map(Restriction::unit).collect(),
            gamma: vec![
                IncompatibilityPair::new(0, vec![0]),
                IncompatibilityPair::new(1, vec![0]),
                IncompatibilityPair::new(2, vec![1]),
            ],
            type_hint: None,
        }
    }

    #[test]
    fn greedy_examples() {
        let inst = mcsr();
        let s = greedy_relax(&inst, Cost::from_units(1), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0]);
        assert_eq!(s.probability.exact, Some(r(2, 3)));
        assert_eq!(s.baseline.value, 0.0);
        assert!((s.gain - 2.0 / 3.0).abs() < 1e-12);

        let s = greedy_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.probability.exact, Some(r(3, 4)));
        assert_eq!(s.cost, Cost::from_units(2));
        assert_eq!(s.first_zero_gain_round, None);
    }

    #[test]
    fn greedy_single_candidate_and_zero_gain() {
        let mut inst = mcsr();
        inst.restrictions.truncate(1);
        inst.gamma.truncate(2);
        let s = greedy_relax(&inst, Cost::from_units(1), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0]);

        // A restriction that unlocks nothing is still picked in round 2.
        let mut inst = mcsr();
        inst.restrictions.push(Restriction::unit(2));
        inst.gamma.pop();
        let s = greedy_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.first_zero_gain_round, Some(1));
    }

    #[test]
    fn greedy_preconditions() {
        let mut inst = mcsr();
        inst.restrictions[1].cost = Cost::from_units(2);
        assert!(matches!(greedy_relax(&inst, Cost::from_units(2), &ProbOracle::exact()), Err(Error::Solver(_))));
        let mut inst = mcsr();
        inst.restrictions.clear();
        inst.gamma.clear();
        assert!(greedy_relax(&inst, Cost::from_units(1), &ProbOracle::exact()).is_err());
    }

    #[test]
    fn partitions() {
        assert_eq!(alpha_partitions(2, 2).unwrap(), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(alpha_partitions(0, 3).unwrap(), vec![vec![0, 0, 0]]);
        assert_eq!(alpha_partitions(5, 1).unwrap(), vec![vec![5]]);
        assert_eq!(alpha_partitions(4, 3).unwrap().len(), 15);
        assert!(alpha_partitions(1, 0).is_err());
    }

    /// Threshold instance over the same base graph: block 0 has ranks r0 < r1,
    /// block 1 has ranks r2 < r3.
    fn threshold(costs: [u64; 4]) -> AdviceInstance {
        let restrictions = [(0, 1), (0, 2), (1, 1), (1, 2)]
            .iter()
            .enumerate()
            .map(|(id, &(b, s))| Restriction {
                id,
                cost: Cost::from_units(costs[id]),
                block: Some(b),
                rank: Some(s),
            })
            .collect();
        AdviceInstance {
            graph: BipartiteGraph::from_edges(4, 3, [(1, 0), (2, 1), (3, 2)]).unwrap(),
            x_star: 0,
            restrictions,
            gamma: vec![
                IncompatibilityPair::new(0, vec![1]),
                IncompatibilityPair::new(1, vec![0, 1]),
                IncompatibilityPair::new(2, vec![3]),
            ],
            type_hint: None,
        }
    }

    #[test]
    fn threshold_single_block_whole_suffix() {
        let mut inst = threshold([1, 1, 1, 1]);
        inst.restrictions.truncate(2);
        inst.gamma.truncate(2);
        let s = threshold_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.oracle_calls, 2);
    }

    #[test]
    fn threshold_cost_two_scheme() {
        // Top ranks cost 1, next ranks cost 2; β = 2.
        let inst = threshold([2, 1, 2, 1]);
        let s = threshold_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).unwrap();
        let e = exhaustive_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).unwrap();
        assert_eq!(s.probability.exact, e.probability.exact);
        // Top of both blocks unlocks y0 and y2: 3 matchings, 2 with x*.
        assert_eq!(s.chosen, vec![1, 3]);
        assert_eq!(s.probability.exact, Some(r(2, 3)));
        assert!(s.oracle_calls <= 3 + 1);
    }

    #[test]
    fn threshold_rejects_other_instances() {
        assert!(threshold_relax(&mcsr(), Cost::from_units(1), &ProbOracle::exact()).is_err());
        let mut inst = threshold([1, 1, 1, 1]);
        inst.restrictions[0].cost = Cost::from_micros(1_500_000);
        assert!(threshold_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).is_err());
        let inst = threshold([1, 1, 1, 1]);
        assert!(threshold_relax(&inst, Cost::from_micros(1_500_000), &ProbOracle::exact()).is_err());
    }

    #[test]
    fn exhaustive_examples() {
        let inst = mcsr();
        let s = exhaustive_relax(&inst, Cost::ZERO, &ProbOracle::exact()).unwrap();
        assert!(s.chosen.is_empty());
        assert_eq!(s.gain, 0.0);
        let s = exhaustive_relax(&inst, Cost::from_units(1), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0]);
        assert_eq!(s.probability.exact, Some(r(2, 3)));
        let s = exhaustive_relax(&inst, Cost::from_units(10), &ProbOracle::exact()).unwrap();
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.probability.exact, Some(r(3, 4)));
    }

    #[test]
    fn exhaustive_guard() {
        let mut inst = mcsr();
        inst.restrictions = (0..26).map(Restriction::unit).collect();
        assert!(matches!(exhaustive_relax(&inst, Cost::from_units(1), &ProbOracle::exact()), Err(Error::Solver(_))));
    }

    #[test]
    fn advise_dispatch() {
        let inst = mcsr();
        let cfg = AdviseConfig::default();
        let a = advise(&inst, Cost::from_units(2), &cfg).unwrap();
        let g = greedy_relax(&inst, Cost::from_units(2), &ProbOracle::exact()).unwrap();
        assert_eq!(a.chosen, g.chosen);
        assert_eq!(a.solver, SolverKind::Greedy);

        let t = threshold([2, 1, 2, 1]);
        let a = advise(&t, Cost::from_units(2), &cfg).unwrap();
        assert_eq!(a.solver, SolverKind::Threshold);
        assert_eq!(a.chosen, threshold_relax(&t, Cost::from_units(2), &ProbOracle::exact()).unwrap().chosen);

        let z = advise(&inst, Cost::ZERO, &cfg).unwrap();
        assert!(z.chosen.is_empty());
        assert_eq!(z.gain, 0.0);
    }

    #[test]
    fn advise_scenario1() {
        let inst = AdviceInstance {
            graph: BipartiteGraph::from_edges(2, 2, [(1, 0)]).unwrap(),
            x_star: 0,
            restrictions: vec![Restriction::unit(0)],
            gamma: vec![IncompatibilityPair::new(1, vec![0])],
            type_hint: None,
        };
        let s = advise(&inst, Cost::from_units(1), &AdviseConfig::default()).unwrap();
        assert!(s.scenario1);
        assert_eq!(s.chosen, vec![0]);
        assert_eq!(s.probability.value, 1.0);
        let relaxed = inst.apply_relaxation(&s.chosen).unwrap();
        assert_eq!(
            crate::prob::exact_probability(&relaxed, 0).unwrap().exact,
            Some(Prob::from_integer(1))
        );
    }

    #[test]
    fn advise_scmr_note_and_mcmr_guard() {
        let mut inst = mcsr();
        inst.gamma = vec![IncompatibilityPair::new(0, vec![0, 1]), IncompatibilityPair::new(2, vec![1])];
        let s = advise(&inst, Cost::from_units(2), &AdviseConfig::default()).unwrap();
        assert!(s.note.is_some());

        let mut big = mcsr();
        big.restrictions = (0..30).map(Restriction::unit).collect();
        big.gamma = vec![IncompatibilityPair::new(0, vec![0, 1]), IncompatibilityPair::new(0, vec![2, 3])];
        assert!(matches!(advise(&big, Cost::from_units(2), &AdviseConfig::default()), Err(Error::NoSolver(_))));
    }

    #[test]
    fn block_formula_oracle_matches_exact() {
        let inst = mcsr();
        let blocks = crate::prob::blocks_from_gamma(&inst.gamma);
        let bp = crate::prob::precompute_block_probabilities(
            &inst.graph,
            0,
            &blocks,
            crate::prob::BlockMethod::exact(),
        )
        .unwrap();
        let oracle = ProbOracle::BlockFormula(Arc::new(bp));
        let a = exhaustive_relax(&inst, Cost::from_units(1), &oracle).unwrap();
        let b = exhaustive_relax(&inst, Cost::from_units(1), &ProbOracle::exact()).unwrap();
        assert_eq!(a.chosen, b.chosen);
        assert_eq!(a.probability.exact, b.probability.exact);
    }

    #[test]
    fn advise_with_blocks_matches_exact() {
        let inst = mcsr();
        for beta in 0..3 {
            let beta = Cost::from_units(beta);
            let a = advise_with_blocks(&inst, beta, &AdviseConfig::default(), BlockMethod::exact()).unwrap();
            let b = advise(&inst, beta, &AdviseConfig::default()).unwrap();
            assert_eq!(a.chosen, b.chosen);
            assert_eq!(a.probability.exact, b.probability.exact);
            assert_eq!(a.baseline.exact, b.baseline.exact);
        }
    }

    #[test]
    fn sampling_oracle_is_deterministic() {
        let inst = mcsr();
        let oracle = ProbOracle::Sampling { samples: 200, seed: 42 };
        let a = greedy_relax(&inst, Cost::from_units(2), &oracle).unwrap();
        let b = greedy_relax(&inst, Cost::from_units(2), &oracle).unwrap();
        assert_eq!(a.chosen, b.chosen);
        assert_eq!(a.probability, b.probability);
    }
}
