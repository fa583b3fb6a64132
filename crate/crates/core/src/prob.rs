//! Probability that an agent is matched by a random maximum matching.
//!
//! Three ways to get at it:
//!
//! * exact: the fraction of all maximum matchings that match the agent, by
//!   enumeration (exponential, small graphs only);
//! * permutation sampling: Hopcroft–Karp on a uniformly shuffled agent order,
//!   repeated `n` times. This is the sampler used by a matching principal in
//!   practice, and it is **not** uniform over maximum matchings, so its
//!   long-run mean can differ from the exact value;
//! * HK-Uno: each permutation sample is followed by a few exchange steps of
//!   the maximum-matching enumerator, giving `θ_HK·(θ_U + 1)` matchings.
//!
//! Sample `i` of a run with master seed `s` uses the generator seeded with
//! [`mix_seed`]`(s, i)`, so results do not depend on how samples are spread
//! across threads.
//!
//! The block formula handles Scenario-2 instances whose incompatible
//! resources split into blocks that always become compatible together: from
//! the probabilities of `x*` being unmatched (`p0`) or matched into each block
//! (`p_l`) in the fully relaxed graph, the probability after any relaxation is
//! `Σ_active p_l / (p0 + Σ_active p_l)`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::advice::IncompatibilityPair;
use crate::bigraph::{max_matching, BipartiteGraph, Matching};
use crate::error::{Error, Result};
use crate::matchenum::{MaxMatchingEnumerator, DEFAULT_ENUMERATION_BUDGET};

/// Exact probability.
pub type Prob = Ratio<u64>;

/// SplitMix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `index` under master seed `seed`:
/// `splitmix64(seed ^ splitmix64(index))`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbMethod {
    ExactEnumeration,
    PermutationSampling,
    HkUno,
    BlockFormula,
}

impl fmt::Display for ProbMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbMethod::ExactEnumeration => "exact",
            ProbMethod::PermutationSampling => "sample",
            ProbMethod::HkUno => "hkuno",
            ProbMethod::BlockFormula => "block",
        })
    }
}

/// A probability value with its provenance. `exact` is set whenever the value
/// is a known rational (always for exact enumeration and the block formula;
/// sampling estimates carry `hits/samples`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbEstimate {
    pub value: f64,
    pub samples: u64,
    pub method: ProbMethod,
    pub exact: Option<Prob>,
}

impl Serialize for ProbEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ProbEstimate", 6)?;
        st.serialize_field("value", &self.value)?;
        st.serialize_field("samples", &self.samples)?;
        st.serialize_field("method", &self.method)?;
        match self.exact {
            Some(r) => {
                st.serialize_field("numerator", r.numer())?;
                st.serialize_field("denominator", r.denom())?;
            }
            None => {
                st.skip_field("numerator")?;
                st.skip_field("denominator")?;
            }
        }
        st.end()
    }
}

impl ProbEstimate {
    pub fn from_ratio(r: Prob, samples: u64, method: ProbMethod) -> Self {
        ProbEstimate {
            value: *r.numer() as f64 / *r.denom() as f64,
            samples,
            method,
            exact: Some(r),
        }
    }

    /// Compares exactly when both sides are rational, by float otherwise.
    pub fn cmp_value(&self, other: &ProbEstimate) -> Ordering {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.value.partial_cmp(&other.value).unwrap_or(Ordering::Equal),
        }
    }
}

/// Hopcroft–Karp on a uniformly shuffled agent order, mapped back to the
/// original labels.
pub fn sample_max_matching(g: &BipartiteGraph, seed: u64) -> Matching {
    let mut order: Vec<usize> = (0..g.n_agents()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let permuted = g.reorder_agents(&order);
    let m = max_matching(&permuted);
    Matching::from_pairs(m.pairs().iter().map(|&(k, y)| (order[k], y)).collect())
}

/// Fraction of `n_samples` permutation samples that match `agent`.
pub fn estimate_probability(g: &BipartiteGraph, agent: usize, n_samples: u64, seed: u64) -> Result<ProbEstimate> {
    g.check_agent(agent)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let hits: u64 = (0..n_samples)
        .into_par_iter()
        .map(|i| u64::from(sample_max_matching(g, mix_seed(seed, i)).contains_agent(agent)))
        .sum();
    Ok(ProbEstimate::from_ratio(
        Prob::new(hits, n_samples),
        n_samples,
        ProbMethod::PermutationSampling,
    ))
}

/// HK-Uno estimate: `theta_hk` permutation samples, each extended by
/// `theta_u` exchange steps of the enumerator started at that sample.
///
/// When a graph has fewer than `theta_u + 1` maximum matchings the steps wrap
/// around the matchings already produced, so every draw still contributes
/// exactly `theta_u + 1` matchings.
pub fn hkuno_estimate(
    g: &BipartiteGraph,
    agent: usize,
    theta_hk: u64,
    theta_u: u64,
    seed: u64,
) -> Result<ProbEstimate> {
    g.check_agent(agent)?;
    if theta_hk == 0 {
        return Err(Error::InvalidArgument("theta_hk must be at least 1".into()));
    }
    let per_draw = theta_u + 1;
    let hits: u64 = (0..theta_hk)
        .into_par_iter()
        .map(|i| {
            let start = sample_max_matching(g, mix_seed(seed, i));
            let seen: Vec<bool> = MaxMatchingEnumerator::from_maximum(g, start)
                .take(per_draw as usize)
                .map(|m| m.contains_agent(agent))
                .collect();
            let k = seen.len() as u64;
            (0..per_draw).filter(|&j| seen[(j % k) as usize]).count() as u64
        })
        .sum();
    let samples = theta_hk * per_draw;
    Ok(ProbEstimate::from_ratio(Prob::new(hits, samples), samples, ProbMethod::HkUno))
}

/// Fraction of all maximum matchings that match `agent`.
pub fn exact_probability(g: &BipartiteGraph, agent: usize) -> Result<ProbEstimate> {
    exact_probability_with_budget(g, agent, DEFAULT_ENUMERATION_BUDGET)
}

pub fn exact_probability_with_budget(g: &BipartiteGraph, agent: usize, budget: u64) -> Result<ProbEstimate> {
    let (total, containing) =
        crate::matchenum::count_max_matchings_containing_with_budget(g, agent, budget)?;
    Ok(ProbEstimate::from_ratio(
        Prob::new(containing, total),
        total,
        ProbMethod::ExactEnumeration,
    ))
}

/// How block probabilities are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockMethod {
    Exact { budget: u64 },
    Sampling { samples: u64, seed: u64 },
}

impl BlockMethod {
    pub fn exact() -> Self {
        BlockMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET }
    }
}

/// Probabilities measured on the fully relaxed graph.
///
/// `p_other` is the mass of `x*` being matched to a resource outside every
/// block, i.e. one it was already compatible with. Such resources stay
/// compatible under any relaxation, so they act as a block that is always
/// active; with no prior edges at `x*` it is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockProbabilities {
    pub p0: Prob,
    pub p_other: Prob,
    pub blocks: Vec<Prob>,
    pub block_resources: Vec<Vec<usize>>,
    pub samples: u64,
    pub method: ProbMethod,
}

impl BlockProbabilities {
    /// Indices of blocks whose resources are all adjacent to `agent` in `g`.
    pub fn active_blocks(&self, g: &BipartiteGraph, agent: usize) -> Vec<usize> {
        self.block_resources
            .iter()
            .enumerate()
            .filter(|(_, ys)| !ys.is_empty() && ys.iter().all(|&y| g.has_edge(agent, y)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Probability of `x*` being matched once the blocks in `active` (and only
/// those) have become compatible.
pub fn block_probability(bp: &BlockProbabilities, active: &[usize]) -> Result<Prob> {
    let mut mass = bp.p_other;
    for &l in active {
        mass += *bp
            .blocks
            .get(l)
            .ok_or_else(|| Error::InvalidBlocks(format!("block {l} is not defined")))?;
    }
    let denom = bp.p0 + mass;
    if denom == Prob::from_integer(0) {
        return Err(Error::UndefinedProbability);
    }
    Ok(mass / denom)
}

/// Measures `p0` and every `p_l` on the graph in which `agent` is joined to
/// every block resource.
///
/// Blocks must be disjoint, currently incompatible with `agent`, and must not
/// raise the maximum matching size when relaxed (that would be Scenario 1,
/// where the formula does not apply).
pub fn precompute_block_probabilities(
    g: &BipartiteGraph,
    agent: usize,
    blocks: &[Vec<usize>],
    method: BlockMethod,
) -> Result<BlockProbabilities> {
    g.check_agent(agent)?;
    let mut owner: Vec<Option<usize>> = vec![None; g.n_resources()];
    for (l, ys) in blocks.iter().enumerate() {
        for &y in ys {
            if y >= g.n_resources() {
                return Err(Error::ResourceOutOfRange { index: y, len: g.n_resources() });
            }
            if let Some(other) = owner[y] {
                return Err(Error::InvalidBlocks(format!(
                    "resource {y} belongs to blocks {other} and {l}"
                )));
            }
            if g.has_edge(agent, y) {
                return Err(Error::InvalidBlocks(format!(
                    "resource {y} is already compatible with agent {agent}"
                )));
            }
            owner[y] = Some(l);
        }
    }
    let full = g.add_agent_edges(agent, blocks.iter().flatten().copied())?;
    if max_matching(&full).len() != max_matching(g).len() {
        return Err(Error::InvalidBlocks(
            "relaxing the blocks increases the maximum matching size".into(),
        ));
    }

    let classify = |m: &Matching| -> Slot {
        match m.mate_of_agent(agent) {
            None => Slot::Unmatched,
            Some(y) => owner[y].map_or(Slot::Other, Slot::Block),
        }
    };
    let mut unmatched = 0u64;
    let mut other = 0u64;
    let mut counts = vec![0u64; blocks.len()];
    let mut tally = |slot: Slot| match slot {
        Slot::Unmatched => unmatched += 1,
        Slot::Other => other += 1,
        Slot::Block(l) => counts[l] += 1,
    };
    let (total, prob_method) = match method {
        BlockMethod::Exact { budget } => {
            let mut total = 0u64;
            for m in MaxMatchingEnumerator::new(&full) {
                total += 1;
                if total > budget {
                    return Err(Error::EnumerationBudgetExceeded(budget));
                }
                tally(classify(&m));
            }
            (total, ProbMethod::ExactEnumeration)
        }
        BlockMethod::Sampling { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be at least 1".into()));
            }
            let slots: Vec<Slot> = (0..samples)
                .into_par_iter()
                .map(|i| classify(&sample_max_matching(&full, mix_seed(seed, i))))
                .collect();
            slots.into_iter().for_each(&mut tally);
            (samples, ProbMethod::PermutationSampling)
        }
    };
    Ok(BlockProbabilities {
        p0: Prob::new(unmatched, total),
        p_other: Prob::new(other, total),
        blocks: counts.into_iter().map(|c| Prob::new(c, total)).collect(),
        block_resources: blocks.to_vec(),
        samples: total,
        method: prob_method,
    })
}

#[derive(Clone, Copy)]
enum Slot {
    Unmatched,
    Other,
    Block(usize),
}

/// Groups the resources of an incompatibility set into blocks of resources
/// with identical requirement sets; such resources always become compatible
/// together. Blocks are ordered by their smallest resource.
pub fn blocks_from_gamma(gamma: &[IncompatibilityPair]) -> Vec<Vec<usize>> {
    use std::collections::BTreeMap;
    let mut reqs: BTreeMap<usize, Vec<&[usize]>> = BTreeMap::new();
    for p in gamma {
        reqs.entry(p.resource).or_default().push(&p.requires);
    }
    let mut groups: BTreeMap<Vec<&[usize]>, Vec<usize>> = BTreeMap::new();
    for (y, mut rs) in reqs {
        rs.sort_unstable();
        rs.dedup();
        groups.entry(rs).or_default().push(y);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}
