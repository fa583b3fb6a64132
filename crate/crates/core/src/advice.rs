//! Restrictions, incompatibility sets and relaxations of the special agent.
//!
//! An [`AdviceInstance`] couples a compatibility graph with the agent `x*`
//! seeking advice, its removable restrictions and the incompatibility set:
//! pairs `(y, R')` saying that resource `y` becomes compatible with `x*` once
//! every restriction in `R'` is removed.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::bigraph::BipartiteGraph;
use crate::error::{Error, Result};

/// Exact non-negative decimal amount stored in millionths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(u64);

impl Cost {
    pub const SCALE: u64 = 1_000_000;
    pub const ZERO: Cost = Cost(0);

    pub fn from_units(units: u64) -> Self {
        Cost(units * Self::SCALE)
    }

    pub fn from_micros(micros: u64) -> Self {
        Cost(micros)
    }

    pub fn micros(self) -> u64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0.is_multiple_of(Self::SCALE)
    }

    /// Whole units, if the amount is integral.
    pub fn as_units(self) -> Option<u64> {
        self.is_integer().then_some(self.0 / Self::SCALE)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / Self::SCALE;
        let frac = self.0 % Self::SCALE;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for Cost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Cost> {
        let bad = || Error::InvalidArgument(format!("invalid decimal amount {s:?}"));
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 6 {
            return Err(Error::InvalidArgument(format!(
                "amount {s:?} has more than 6 decimal places"
            )));
        }
        let w: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let f: u64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().map_err(|_| bad())?
        };
        w.checked_mul(Self::SCALE)
            .and_then(|v| v.checked_add(f))
            .map(Cost)
            .ok_or_else(bad)
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.as_units() {
            Some(u) => s.serialize_u64(u),
            None => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Cost, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Cost;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative integer or a decimal string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Cost, E> {
                v.checked_mul(Cost::SCALE)
                    .map(Cost)
                    .ok_or_else(|| E::custom("cost too large"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Cost, E> {
                if v < 0 {
                    return Err(E::custom("cost must be non-negative"));
                }
                self.visit_u64(v as u64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Cost, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// A removable restriction of the special agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction {
    pub id: usize,
    pub cost: Cost,
    /// Attribute block, for threshold-like instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    /// 1-based position inside the block; higher ranks are relaxed first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

impl Restriction {
    pub fn unit(id: usize) -> Self {
        Restriction { id, cost: Cost::from_units(1), block: None, rank: None }
    }
}

/// `(resource, R')`: removing all of `requires` makes `resource` compatible.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IncompatibilityPair {
    pub resource: usize,
    pub requires: Vec<usize>,
}

impl IncompatibilityPair {
    pub fn new(resource: usize, mut requires: Vec<usize>) -> Self {
        requires.sort_unstable();
        requires.dedup();
        IncompatibilityPair { resource, requires }
    }

    /// True when every required restriction is in `chosen` (a membership mask).
    pub fn satisfied_by(&self, chosen: &[bool]) -> bool {
        self.requires.iter().all(|&r| chosen.get(r).copied().unwrap_or(false))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IncompatibilityType {
    #[serde(alias = "SC-SR")]
    SingleChoiceSingleRestriction,
    #[serde(alias = "MC-SR")]
    MultiChoiceSingleRestriction,
    #[serde(alias = "SC-MR")]
    SingleChoiceMultiRestriction,
    #[serde(alias = "MC-MR")]
    MultiChoiceMultiRestriction,
    #[serde(alias = "threshold")]
    ThresholdLike,
}

impl fmt::Display for IncompatibilityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IncompatibilityType::SingleChoiceSingleRestriction => "SC-SR",
            IncompatibilityType::MultiChoiceSingleRestriction => "MC-SR",
            IncompatibilityType::SingleChoiceMultiRestriction => "SC-MR",
            IncompatibilityType::MultiChoiceMultiRestriction => "MC-MR",
            IncompatibilityType::ThresholdLike => "threshold",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdviceInstance {
    pub graph: BipartiteGraph,
    pub x_star: usize,
    pub restrictions: Vec<Restriction>,
    pub gamma: Vec<IncompatibilityPair>,
    pub type_hint: Option<IncompatibilityType>,
}

/// One problem found by [`validate_instance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    SpecialAgentOutOfRange { x_star: usize, n_agents: usize },
    RestrictionIdNotDense { position: usize, id: usize },
    NonPositiveCost { id: usize },
    BlockRankMismatch { id: usize },
    RankOutOfRange { id: usize },
    NonContiguousRanks { block: usize },
    MixedThresholdAndAdHoc,
    ResourceOutOfRange { pair: usize, resource: usize },
    UnknownRestriction { pair: usize, id: usize },
    EmptyRequirement { pair: usize },
    AlreadyCompatible { pair: usize, resource: usize },
    DuplicatePair { pair: usize, first: usize },
    NonMinimal { pair: usize, dominated_by: usize },
    SuffixViolation { pair: usize, block: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SpecialAgentOutOfRange { x_star, n_agents } => {
                write!(f, "special agent {x_star} out of range ({n_agents} agents)")
            }
            Violation::RestrictionIdNotDense { position, id } => {
                write!(f, "restriction at position {position} has id {id}; ids must be 0..n in order")
            }
            Violation::NonPositiveCost { id } => write!(f, "restriction {id} has non-positive cost"),
            Violation::BlockRankMismatch { id } => {
                write!(f, "restriction {id} must have both block and rank or neither")
            }
            Violation::RankOutOfRange { id } => write!(f, "restriction {id} has rank 0; ranks start at 1"),
            Violation::NonContiguousRanks { block } => {
                write!(f, "ranks in block {block} are not a contiguous 1..t ordering")
            }
            Violation::MixedThresholdAndAdHoc => {
                write!(f, "instance mixes threshold blocks with ad-hoc restrictions")
            }
            Violation::ResourceOutOfRange { pair, resource } => {
                write!(f, "incompatibility pair {pair}: resource {resource} out of range")
            }
            Violation::UnknownRestriction { pair, id } => {
                write!(f, "incompatibility pair {pair}: unknown restriction {id}")
            }
            Violation::EmptyRequirement { pair } => {
                write!(f, "incompatibility pair {pair} has an empty restriction set")
            }
            Violation::AlreadyCompatible { pair, resource } => {
                write!(f, "incompatibility pair {pair}: resource {resource} is already compatible")
            }
            Violation::DuplicatePair { pair, first } => {
                write!(f, "incompatibility pair {pair} duplicates pair {first}")
            }
            Violation::NonMinimal { pair, dominated_by } => write!(
                f,
                "incompatibility pair {pair} is not minimal: pair {dominated_by} needs a strict subset"
            ),
            Violation::SuffixViolation { pair, block } => {
                write!(f, "incompatibility pair {pair} is not a suffix of block {block}")
            }
        }
    }
}

fn is_strict_subset(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok())
}

impl AdviceInstance {
    pub fn n_restrictions(&self) -> usize {
        self.restrictions.len()
    }

    fn mask(&self, chosen: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.restrictions.len()];
        for &r in chosen {
            *mask.get_mut(r).ok_or(Error::UnknownRestriction(r))? = true;
        }
        Ok(mask)
    }

    /// Incompatible resources that `chosen` makes compatible, ascending.
    pub fn activated_resources(&self, chosen: &[usize]) -> Result<Vec<usize>> {
        let mask = self.mask(chosen)?;
        let mut ys: Vec<usize> = self
            .gamma
            .iter()
            .filter(|p| p.satisfied_by(&mask))
            .map(|p| p.resource)
            .collect();
        ys.sort_unstable();
        ys.dedup();
        Ok(ys)
    }

    /// The compatibility graph after removing the restrictions in `chosen`.
    pub fn apply_relaxation(&self, chosen: &[usize]) -> Result<BipartiteGraph> {
        let ys = self.activated_resources(chosen)?;
        self.graph.add_agent_edges(self.x_star, ys)
    }

    pub fn relaxation_cost(&self, chosen: &[usize]) -> Result<Cost> {
        chosen
            .iter()
            .map(|&r| self.restrictions.get(r).map(|x| x.cost).ok_or(Error::UnknownRestriction(r)))
            .sum()
    }

    /// Cost of one pair's requirement set; unknown ids count as zero.
    pub fn pair_cost(&self, pair: &IncompatibilityPair) -> Cost {
        pair.requires
            .iter()
            .filter_map(|&r| self.restrictions.get(r))
            .map(|r| r.cost)
            .sum()
    }

    /// True when any restriction carries a threshold block.
    pub fn has_blocks(&self) -> bool {
        self.restrictions.iter().any(|r| r.block.is_some())
    }

    /// Restriction ids of each attribute block ordered by rank `1..=t`.
    pub fn threshold_blocks(&self) -> Result<Vec<Vec<usize>>> {
        let mut blocks: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for r in &self.restrictions {
            match (r.block, r.rank) {
                (Some(b), Some(s)) => blocks.entry(b).or_default().push((s, r.id)),
                _ => {
                    return Err(Error::Solver(format!(
                        "restriction {} has no threshold block/rank",
                        r.id
                    )))
                }
            }
        }
        let n_blocks = blocks.keys().next_back().map_or(0, |&b| b + 1);
        let mut out = vec![Vec::new(); n_blocks];
        for (b, mut members) in blocks {
            members.sort_unstable();
            if members.iter().enumerate().any(|(i, &(s, _))| s != i + 1) {
                return Err(Error::Solver(format!("block {b} ranks are not contiguous")));
            }
            out[b] = members.into_iter().map(|(_, id)| id).collect();
        }
        Ok(out)
    }

    /// Same instance with its incompatibility set replaced.
    pub fn with_gamma(&self, gamma: Vec<IncompatibilityPair>) -> AdviceInstance {
        AdviceInstance { gamma, ..self.clone() }
    }
}

/// Every invariant violation of `inst`; an empty list means the instance is valid.
pub fn validate_instance(inst: &AdviceInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = &inst.graph;
    let x_ok = inst.x_star < g.n_agents();
    if !x_ok {
        out.push(Violation::SpecialAgentOutOfRange { x_star: inst.x_star, n_agents: g.n_agents() });
    }

    let n_r = inst.restrictions.len();
    let mut with_block = 0usize;
    let mut by_block: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, r) in inst.restrictions.iter().enumerate() {
        if r.id != pos {
            out.push(Violation::RestrictionIdNotDense { position: pos, id: r.id });
        }
        if r.cost.is_zero() {
            out.push(Violation::NonPositiveCost { id: r.id });
        }
        match (r.block, r.rank) {
            (Some(b), Some(s)) => {
                with_block += 1;
                if s == 0 {
                    out.push(Violation::RankOutOfRange { id: r.id });
                }
                by_block.entry(b).or_default().push(s);
            }
            (None, None) => {}
            _ => out.push(Violation::BlockRankMismatch { id: r.id }),
        }
    }
    for (b, ranks) in &mut by_block {
        ranks.sort_unstable();
        if ranks.iter().enumerate().any(|(i, &s)| s != i + 1) {
            out.push(Violation::NonContiguousRanks { block: *b });
        }
    }
    if with_block > 0 && with_block < n_r {
        out.push(Violation::MixedThresholdAndAdHoc);
    }

    let mut seen: BTreeMap<(usize, &[usize]), usize> = BTreeMap::new();
    for (i, p) in inst.gamma.iter().enumerate() {
        if p.resource >= g.n_resources() {
            out.push(Violation::ResourceOutOfRange { pair: i, resource: p.resource });
        } else if x_ok && g.has_edge(inst.x_star, p.resource) {
            out.push(Violation::AlreadyCompatible { pair: i, resource: p.resource });
        }
        if p.requires.is_empty() {
            out.push(Violation::EmptyRequirement { pair: i });
        }
        for &id in &p.requires {
            if id >= n_r {
                out.push(Violation::UnknownRestriction { pair: i, id });
            }
        }
        if let Some(&first) = seen.get(&(p.resource, &p.requires[..])) {
            out.push(Violation::DuplicatePair { pair: i, first });
        } else {
            seen.insert((p.resource, &p.requires), i);
        }
    }
    for (i, p) in inst.gamma.iter().enumerate() {
        if let Some(j) = inst
            .gamma
            .iter()
            .position(|q| q.resource == p.resource && is_strict_subset(&q.requires, &p.requires))
        {
            out.push(Violation::NonMinimal { pair: i, dominated_by: j });
        }
    }

    let threshold_claimed =
        with_block > 0 || inst.type_hint == Some(IncompatibilityType::ThresholdLike);
    if threshold_claimed && with_block == n_r {
        out.extend(suffix_violations(inst));
    }
    out
}

fn suffix_violations(inst: &AdviceInstance) -> Vec<Violation> {
    let mut top: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &inst.restrictions {
        if let (Some(b), Some(s)) = (r.block, r.rank) {
            let t = top.entry(b).or_insert(0);
            *t = (*t).max(s);
        }
    }
    let mut out = Vec::new();
    for (i, p) in inst.gamma.iter().enumerate() {
        let mut ranks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &id in &p.requires {
            if let Some(Restriction { block: Some(b), rank: Some(s), .. }) = inst.restrictions.get(id) {
                ranks.entry(*b).or_default().push(*s);
            }
        }
        for (b, mut rs) in ranks {
            rs.sort_unstable();
            let t = top[&b];
            let lo = rs[0];
            let is_suffix = rs.len() == t + 1 - lo && rs.iter().enumerate().all(|(k, &s)| s == lo + k);
            if !is_suffix {
                out.push(Violation::SuffixViolation { pair: i, block: b });
            }
        }
    }
    out
}

/// Classifies the incompatibility set. Threshold structure is tested first.
pub fn classify(inst: &AdviceInstance) -> Result<IncompatibilityType> {
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        return Err(Error::Validation(violations.iter().map(ToString::to_string).collect()));
    }
    if !inst.restrictions.is_empty() && inst.restrictions.iter().all(|r| r.block.is_some()) {
        return Ok(IncompatibilityType::ThresholdLike);
    }
    let mut per_resource: BTreeMap<usize, usize> = BTreeMap::new();
    for p in &inst.gamma {
        *per_resource.entry(p.resource).or_default() += 1;
    }
    let single_choice = per_resource.values().all(|&c| c == 1);
    let single_restriction = inst.gamma.iter().all(|p| p.requires.len() == 1);
    Ok(match (single_choice, single_restriction) {
        (true, true) => IncompatibilityType::SingleChoiceSingleRestriction,
        (false, true) => IncompatibilityType::MultiChoiceSingleRestriction,
        (true, false) => IncompatibilityType::SingleChoiceMultiRestriction,
        (false, false) => IncompatibilityType::MultiChoiceMultiRestriction,
    })
}

/// Copy of `inst` with dominated and duplicate pairs dropped.
pub fn normalize(inst: &AdviceInstance) -> AdviceInstance {
    let mut gamma: Vec<IncompatibilityPair> = Vec::new();
    for p in &inst.gamma {
        let dominated = inst
            .gamma
            .iter()
            .any(|q| q.resource == p.resource && is_strict_subset(&q.requires, &p.requires));
        if !dominated && !gamma.contains(p) {
            gamma.push(p.clone());
        }
    }
    inst.with_gamma(gamma)
}
