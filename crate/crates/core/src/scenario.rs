//! Detects whether some affordable relaxation grows the maximum matching
//! (Scenario 1, after which `x*` is matched with certainty) and otherwise
//! filters the incompatibility set down to the affordable pairs (Scenario 2).
//!
//! Adding an edge `{x*, y}` increases the maximum matching size exactly when
//! both `x*` and `y` are even in the Dulmage–Mendelsohn decomposition, so one
//! Hopcroft–Karp run plus a linear scan over the pairs decides it.

use crate::advice::{validate_instance, AdviceInstance, Cost, IncompatibilityPair};
use crate::bigraph::{dm_decompose, max_matching, DmLabel};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioResult {
    /// Relaxing `witness` makes `resource` compatible and grows the matching.
    Scenario1 { witness: Vec<usize>, resource: usize },
    /// No affordable pair grows the matching; `gamma_prime` holds the
    /// affordable pairs in their original order.
    Scenario2 { gamma_prime: Vec<IncompatibilityPair> },
}

impl ScenarioResult {
    pub fn is_scenario1(&self) -> bool {
        matches!(self, ScenarioResult::Scenario1 { .. })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ScenarioOptions {
    /// Scan every pair and return the cheapest Scenario-1 witness instead of
    /// the first one in storage order. Ties keep storage order.
    pub min_cost_witness: bool,
}

pub fn detect_scenario(inst: &AdviceInstance, beta: Cost) -> Result<ScenarioResult> {
    detect_scenario_with(inst, beta, ScenarioOptions::default())
}

pub fn detect_scenario_with(inst: &AdviceInstance, beta: Cost, opts: ScenarioOptions) -> Result<ScenarioResult> {
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        return Err(Error::Validation(violations.iter().map(ToString::to_string).collect()));
    }
    let m = max_matching(&inst.graph);
    let dm = dm_decompose(&inst.graph, &m)?;
    // An odd or unreachable x* is matched by every maximum matching already;
    // no new edge at x* can then lie on an augmenting path.
    let x_even = dm.agent(inst.x_star) == DmLabel::Even;

    let mut gamma_prime = Vec::new();
    let mut best: Option<(Cost, &IncompatibilityPair)> = None;
    for pair in &inst.gamma {
        let cost = inst.pair_cost(pair);
        if cost > beta {
            continue;
        }
        if x_even && dm.resource(pair.resource) == DmLabel::Even {
            if !opts.min_cost_witness {
                return Ok(ScenarioResult::Scenario1 {
                    witness: pair.requires.clone(),
                    resource: pair.resource,
                });
            }
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, pair));
            }
        } else {
            gamma_prime.push(pair.clone());
        }
    }
    Ok(match best {
        Some((_, pair)) => ScenarioResult::Scenario1 {
            witness: pair.requires.clone(),
            resource: pair.resource,
        },
        None => ScenarioResult::Scenario2 { gamma_prime },
    })
}
