//! Instance generators, cost schemes, threshold CSV ingestion and the JSON
//! instance format.

use std::fmt;
use std::path::Path;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::advice::{validate_instance, AdviceInstance, Cost, IncompatibilityPair, IncompatibilityType, Restriction};
use crate::bigraph::BipartiteGraph;
use crate::error::{Error, Result};
use crate::prob::Prob;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceMode {
    /// Every drawn restriction unlocks the resource on its own.
    MultiChoiceSingleRestr,
    /// The resource is unlocked only by removing all drawn restrictions.
    SingleChoiceMultiRestr,
}

/// Erdős–Rényi bipartite graph with independent edges of probability `p`.
pub fn random_bigraph(n_agents: usize, n_resources: usize, p: f64, seed: u64) -> BipartiteGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n_agents {
        for y in 0..n_resources {
            if rng.gen_bool(p.clamp(0.0, 1.0)) {
                edges.push((a, y));
            }
        }
    }
    BipartiteGraph::from_edges(n_agents, n_resources, edges).expect("edges in range")
}

/// Random advice instance: an ER graph over `n_agents` base agents plus the
/// special agent appended last. Each resource draws up to
/// `max_restr_per_resource` restrictions; an empty draw makes it directly
/// compatible with `x*`.
pub fn gen_er_instance(
    n_agents: usize,
    n_resources: usize,
    edge_prob: f64,
    n_restrictions: usize,
    max_restr_per_resource: usize,
    choice_mode: ChoiceMode,
    seed: u64,
) -> Result<AdviceInstance> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidArgument(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    if n_resources == 0 || n_restrictions == 0 {
        return Err(Error::InvalidArgument("need at least one resource and one restriction".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n_agents {
        for y in 0..n_resources {
            if rng.gen_bool(edge_prob) {
                edges.push((a, y));
            }
        }
    }
    let x_star = n_agents;
    let mut gamma = Vec::new();
    let max_k = max_restr_per_resource.min(n_restrictions);
    for y in 0..n_resources {
        let k = rng.gen_range(0..=max_k);
        if k == 0 {
            edges.push((x_star, y));
            continue;
        }
        let mut drawn = sample(&mut rng, n_restrictions, k).into_vec();
        drawn.sort_unstable();
        match choice_mode {
            ChoiceMode::MultiChoiceSingleRestr => {
                gamma.extend(drawn.into_iter().map(|r| IncompatibilityPair::new(y, vec![r])));
            }
            ChoiceMode::SingleChoiceMultiRestr => gamma.push(IncompatibilityPair::new(y, drawn)),
        }
    }
    Ok(AdviceInstance {
        graph: BipartiteGraph::from_edges(n_agents + 1, n_resources, edges)?,
        x_star,
        restrictions: (0..n_restrictions).map(Restriction::unit).collect(),
        gamma,
        type_hint: None,
    })
}

/// Advice instance encoding Max-Coverage over `{1..r}` with family `F`:
/// agent 0 is `x*`, agent `j` is compatible only with resource `j - 1`, and
/// removing restriction `i` unlocks the resources of `F[i]`. Some budget-`q`
/// relaxation reaches probability `t/(t+1)` iff `q` sets cover `t` elements.
pub fn gen_maxcov_instance(
    r: usize,
    family: &[Vec<usize>],
    q: u64,
    t: u64,
) -> Result<(AdviceInstance, Cost, Prob)> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty set family".into()));
    }
    let mut gamma = Vec::new();
    for (i, set) in family.iter().enumerate() {
        let mut set = set.clone();
        set.sort_unstable();
        set.dedup();
        for j in set {
            if j == 0 || j > r {
                return Err(Error::InvalidArgument(format!("element {j} outside 1..={r}")));
            }
            gamma.push(IncompatibilityPair::new(j - 1, vec![i]));
        }
    }
    gamma.sort();
    let inst = AdviceInstance {
        graph: BipartiteGraph::from_edges(r + 1, r, (1..=r).map(|j| (j, j - 1)))?,
        x_star: 0,
        restrictions: (0..family.len()).map(Restriction::unit).collect(),
        gamma,
        type_hint: None,
    };
    Ok((inst, Cost::from_units(q), Prob::new(t, t + 1)))
}

/// Random threshold-like instance: `block_sizes[l]` ranks in block `l`, each
/// with an integer cost in `1..=max_cost`. Every resource not adjacent to the
/// special agent (appended last) draws a relaxation depth per block; an
/// all-zero draw leaves it permanently incompatible.
pub fn gen_threshold_instance(
    n_agents: usize,
    n_resources: usize,
    edge_prob: f64,
    block_sizes: &[usize],
    max_cost: u64,
    seed: u64,
) -> Result<AdviceInstance> {
    if !(0.0..=1.0).contains(&edge_prob) || max_cost == 0 || block_sizes.contains(&0) {
        return Err(Error::InvalidArgument("bad threshold generator parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_star = n_agents;
    let mut edges = Vec::new();
    for a in 0..=n_agents {
        for y in 0..n_resources {
            if rng.gen_bool(edge_prob) {
                edges.push((a, y));
            }
        }
    }
    let mut restrictions = Vec::new();
    let mut ids: Vec<Vec<usize>> = Vec::new();
    for (b, &t) in block_sizes.iter().enumerate() {
        // ids[b][k] holds rank t - k: the top rank comes first.
        let mut block = Vec::with_capacity(t);
        for k in 0..t {
            let id = restrictions.len();
            restrictions.push(Restriction {
                id,
                cost: Cost::from_units(rng.gen_range(1..=max_cost)),
                block: Some(b),
                rank: Some(t - k),
            });
            block.push(id);
        }
        ids.push(block);
    }
    let mut gamma = Vec::new();
    for y in 0..n_resources {
        if edges.contains(&(x_star, y)) {
            continue;
        }
        let requires: Vec<usize> = ids
            .iter()
            .flat_map(|block| {
                let depth = rng.gen_range(0..=block.len());
                block[..depth].to_vec()
            })
            .collect();
        if !requires.is_empty() {
            gamma.push(IncompatibilityPair::new(y, requires));
        }
    }
    Ok(AdviceInstance {
        graph: BipartiteGraph::from_edges(n_agents + 1, n_resources, edges)?,
        x_star,
        restrictions,
        gamma,
        type_hint: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostScheme {
    /// Every relaxation step costs 1.
    #[serde(rename = "cost-i", alias = "CostI")]
    CostI,
    /// The k-th relaxation step of an attribute costs k.
    #[serde(rename = "cost-ii", alias = "CostII")]
    CostII,
}

impl CostScheme {
    /// Cost of the `step`-th relaxation (1-based) of one attribute.
    pub fn step_cost(self, step: u64) -> u64 {
        match self {
            CostScheme::CostI => 1,
            CostScheme::CostII => step,
        }
    }
}

impl fmt::Display for CostScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostScheme::CostI => "cost-i",
            CostScheme::CostII => "cost-ii",
        })
    }
}

impl std::str::FromStr for CostScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cost-i" | "costi" | "i" | "1" => Ok(CostScheme::CostI),
            "cost-ii" | "costii" | "ii" | "2" => Ok(CostScheme::CostII),
            _ => Err(Error::InvalidArgument(format!("unknown cost scheme {s:?}"))),
        }
    }
}

/// Cost of relaxing an attribute by `t` steps.
pub fn cost_scheme_eval(scheme: CostScheme, t: u64) -> u64 {
    (1..=t).map(|k| scheme.step_cost(k)).sum()
}

const RESOURCE_COLUMNS: [&str; 5] = ["id", "capacity", "region", "physical_access", "hearing_access"];
const AGENT_COLUMNS: [&str; 5] = ["id", "min_capacity", "region_prefs", "needs_physical", "needs_hearing"];

#[derive(Clone, Debug, PartialEq, Eq)]
struct ResourceRow {
    id: String,
    capacity: u64,
    region: String,
    physical: bool,
    hearing: bool,
    zoom: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct AgentRow {
    id: String,
    min_capacity: u64,
    region_prefs: Vec<String>,
    needs_physical: bool,
    needs_hearing: bool,
    needs_zoom: bool,
}

struct Table {
    path: String,
    columns: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Table> {
        let name = path.display().to_string();
        let err = |line: u64, message: String| Error::Csv { path: name.clone(), line, message };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| err(0, e.to_string()))?;
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| err(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        for col in required {
            if !columns.iter().any(|c| c == col) {
                return Err(err(1, format!("missing column {col:?}")));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table { path: name, columns, rows })
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, col: &str) -> Option<&'r str> {
        let i = self.columns.iter().position(|c| c == col)?;
        rec.get(i)
    }

    fn err(&self, line: u64, message: String) -> Error {
        Error::Csv { path: self.path.clone(), line, message }
    }

    fn text(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<String> {
        match self.get(rec, col) {
            Some(v) if !v.is_empty() => Ok(v.to_string()),
            _ => Err(self.err(line, format!("empty {col}"))),
        }
    }

    fn number(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<u64> {
        let v = self.get(rec, col).unwrap_or("");
        v.parse().map_err(|_| self.err(line, format!("{col} {v:?} is not a non-negative integer")))
    }

    fn flag(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<bool> {
        match self.get(rec, col) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(self.err(line, format!("{col} {v:?} is not true/false"))),
        }
    }
}

fn read_resources(path: &Path) -> Result<Vec<ResourceRow>> {
    let t = Table::read(path, &RESOURCE_COLUMNS)?;
    let mut out: Vec<ResourceRow> = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let line = *line;
        let extra = match t.get(rec, "extra_chairs") {
            None | Some("") => 0,
            Some(_) => t.number(line, rec, "extra_chairs")?,
        };
        let row = ResourceRow {
            id: t.text(line, rec, "id")?,
            capacity: t.number(line, rec, "capacity")? + extra,
            region: t.text(line, rec, "region")?,
            physical: t.flag(line, rec, "physical_access")?,
            hearing: t.flag(line, rec, "hearing_access")?,
            zoom: t.flag(line, rec, "zoom")?,
        };
        if out.iter().any(|r| r.id == row.id) {
            return Err(t.err(line, format!("duplicate resource id {:?}", row.id)));
        }
        out.push(row);
    }
    Ok(out)
}

fn read_agents(path: &Path) -> Result<Vec<AgentRow>> {
    let t = Table::read(path, &AGENT_COLUMNS)?;
    let mut out: Vec<AgentRow> = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let line = *line;
        let prefs: Vec<String> = t
            .text(line, rec, "region_prefs")?
            .split(';')
            .map(|s| s.trim().to_string())
            .collect();
        if prefs.iter().any(String::is_empty) {
            return Err(t.err(line, "empty entry in region_prefs".into()));
        }
        for (i, p) in prefs.iter().enumerate() {
            if prefs[..i].contains(p) {
                return Err(t.err(line, format!("region_prefs repeats level {p:?}")));
            }
        }
        let row = AgentRow {
            id: t.text(line, rec, "id")?,
            min_capacity: t.number(line, rec, "min_capacity")?,
            region_prefs: prefs,
            needs_physical: t.flag(line, rec, "needs_physical")?,
            needs_hearing: t.flag(line, rec, "needs_hearing")?,
            needs_zoom: t.flag(line, rec, "needs_zoom")?,
        };
        if out.iter().any(|a| a.id == row.id) {
            return Err(t.err(line, format!("duplicate agent id {:?}", row.id)));
        }
        out.push(row);
    }
    Ok(out)
}

fn compatible(a: &AgentRow, y: &ResourceRow) -> bool {
    y.capacity >= a.min_capacity
        && y.region == a.region_prefs[0]
        && (!a.needs_physical || y.physical)
        && (!a.needs_hearing || y.hearing)
        && (!a.needs_zoom || y.zoom)
}

/// Relaxation steps per attribute (capacity, region, physical, hearing,
/// zoom) that make `y` compatible with `a`, or `None` if no relaxation does.
fn steps_needed(a: &AgentRow, y: &ResourceRow, step: u64) -> Option<[u64; 5]> {
    let region = a.region_prefs.iter().position(|p| *p == y.region)? as u64;
    let capacity = a.min_capacity.saturating_sub(y.capacity).div_ceil(step);
    Some([
        capacity,
        region,
        u64::from(a.needs_physical && !y.physical),
        u64::from(a.needs_hearing && !y.hearing),
        u64::from(a.needs_zoom && !y.zoom),
    ])
}

/// Parsed resource and agent tables of the threshold CSV schema.
///
/// Capacity is relaxed in steps of `step` seats; an agent accepts only its
/// first region and may relax to later entries of `region_prefs` in order.
/// An agent's access needs are one-step attributes. The optional
/// `extra_chairs` column adds to the capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdTables {
    resources: Vec<ResourceRow>,
    agents: Vec<AgentRow>,
}

impl ThresholdTables {
    pub fn load(resources_path: &Path, agents_path: &Path) -> Result<Self> {
        Ok(ThresholdTables {
            resources: read_resources(resources_path)?,
            agents: read_agents(agents_path)?,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn agent_id(&self, index: usize) -> &str {
        &self.agents[index].id
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    /// Threshold-like instance with agent `x_star` (a row index) seeking advice.
    pub fn instance(&self, x_star: usize, scheme: CostScheme, step: u64) -> Result<AdviceInstance> {
        if step == 0 {
            return Err(Error::InvalidArgument("capacity step must be positive".into()));
        }
        if x_star >= self.agents.len() {
            return Err(Error::AgentOutOfRange { index: x_star, len: self.agents.len() });
        }
        threshold_instance(&self.resources, &self.agents, x_star, scheme, step)
    }
}

/// Threshold-like instance from the CSV tables with the agent whose `id` is
/// `agent_id` as `x*`; see [`ThresholdTables`] for the relaxation model.
pub fn load_threshold_csv(
    resources_path: &Path,
    agents_path: &Path,
    scheme: CostScheme,
    agent_id: &str,
    step: u64,
) -> Result<AdviceInstance> {
    let tables = ThresholdTables::load(resources_path, agents_path)?;
    let x_star = tables
        .agent_index(agent_id)
        .ok_or_else(|| Error::InvalidArgument(format!("no agent with id {agent_id:?}")))?;
    tables.instance(x_star, scheme, step)
}

fn threshold_instance(
    resources: &[ResourceRow],
    agents: &[AgentRow],
    x_star: usize,
    scheme: CostScheme,
    step: u64,
) -> Result<AdviceInstance> {
    let mut edges = Vec::new();
    for (i, a) in agents.iter().enumerate() {
        for (j, y) in resources.iter().enumerate() {
            if compatible(a, y) {
                edges.push((i, j));
            }
        }
    }
    let me = &agents[x_star];
    let needs: Vec<(usize, [u64; 5])> = resources
        .iter()
        .enumerate()
        .filter(|(_, y)| !compatible(me, y))
        .filter_map(|(j, y)| steps_needed(me, y, step).map(|s| (j, s)))
        .collect();

    // ids[attr][k - 1] is the restriction for the k-th step of that attribute.
    let mut restrictions = Vec::new();
    let mut ids: [Vec<usize>; 5] = Default::default();
    let mut block = 0;
    for attr in 0..5 {
        let depth = needs.iter().map(|(_, s)| s[attr]).max().unwrap_or(0);
        if depth == 0 {
            continue;
        }
        for k in 1..=depth {
            let id = restrictions.len();
            restrictions.push(Restriction {
                id,
                cost: Cost::from_units(scheme.step_cost(k)),
                block: Some(block),
                rank: Some((depth + 1 - k) as usize),
            });
            ids[attr].push(id);
        }
        block += 1;
    }
    let gamma = needs
        .iter()
        .map(|(j, s)| {
            let requires = (0..5).flat_map(|attr| ids[attr][..s[attr] as usize].iter().copied()).collect();
            IncompatibilityPair::new(*j, requires)
        })
        .collect();
    Ok(AdviceInstance {
        graph: BipartiteGraph::from_edges(agents.len(), resources.len(), edges)?,
        x_star,
        restrictions,
        gamma,
        type_hint: Some(IncompatibilityType::ThresholdLike),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StandinDataset {
    /// Classroom allocation: 144 rooms, 154 courses.
    Cocl,
    /// Vaccination slots: 249 centres, 603 people.
    Passvac,
}

impl StandinDataset {
    pub fn dims(self) -> (usize, usize) {
        match self {
            StandinDataset::Cocl => (144, 154),
            StandinDataset::Passvac => (249, 603),
        }
    }
}

const REGIONS: [&str; 4] = ["north", "south", "east", "west"];

/// Synthetic tables in the threshold CSV schema, returned as
/// `(resources_csv, agents_csv)`. These are stand-ins, not the original data.
pub fn gen_threshold_standin(dataset: StandinDataset, seed: u64) -> Result<(String, String)> {
    let (n_res, n_agents) = dataset.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let csv_err = |e: csv::Error| Error::InvalidInstance(e.to_string());

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "capacity", "region", "physical_access", "hearing_access", "zoom", "extra_chairs"])
        .map_err(csv_err)?;
    for i in 0..n_res {
        let capacity = 10 * rng.gen_range(1..=15u64);
        let region = REGIONS[rng.gen_range(0..REGIONS.len())];
        w.write_record([
            format!("R{i:03}"),
            capacity.to_string(),
            region.to_string(),
            rng.gen_bool(0.6).to_string(),
            rng.gen_bool(0.5).to_string(),
            rng.gen_bool(0.5).to_string(),
            rng.gen_range(0..=5u64).to_string(),
        ])
        .map_err(csv_err)?;
    }
    let resources = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidInstance(e.to_string()))?)
        .expect("csv output is utf-8");

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "min_capacity", "region_prefs", "needs_physical", "needs_hearing", "needs_zoom"])
        .map_err(csv_err)?;
    for i in 0..n_agents {
        let mut prefs = REGIONS.to_vec();
        prefs.shuffle(&mut rng);
        prefs.truncate(rng.gen_range(1..=REGIONS.len()));
        w.write_record([
            format!("A{i:03}"),
            (10 * rng.gen_range(2..=10u64)).to_string(),
            prefs.join(";"),
            rng.gen_bool(0.1).to_string(),
            rng.gen_bool(0.1).to_string(),
            rng.gen_bool(0.3).to_string(),
        ])
        .map_err(csv_err)?;
    }
    let agents = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidInstance(e.to_string()))?)
        .expect("csv output is utf-8");
    Ok((resources, agents))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    agents: usize,
    resources: usize,
    edges: Vec<[usize; 2]>,
    special_agent: usize,
    restrictions: Vec<Restriction>,
    incompatibility: Vec<IncompatibilityPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    type_hint: Option<IncompatibilityType>,
}

pub fn instance_to_json(inst: &AdviceInstance) -> String {
    let file = InstanceFile {
        agents: inst.graph.n_agents(),
        resources: inst.graph.n_resources(),
        edges: inst.graph.edges().map(|(a, y)| [a, y]).collect(),
        special_agent: inst.x_star,
        restrictions: inst.restrictions.clone(),
        incompatibility: inst.gamma.clone(),
        type_hint: inst.type_hint,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("instance serializes");
    s.push('\n');
    s
}

/// Parses an instance without validating it.
pub fn instance_from_json(text: &str) -> Result<AdviceInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        Error::Parse {
            offset: byte_offset(text, line, column),
            line,
            column,
            message: e.to_string(),
        }
    })?;
    if file.special_agent >= file.agents {
        return Err(Error::AgentOutOfRange { index: file.special_agent, len: file.agents });
    }
    Ok(AdviceInstance {
        graph: BipartiteGraph::from_edges(file.agents, file.resources, file.edges.iter().map(|e| (e[0], e[1])))?,
        x_star: file.special_agent,
        restrictions: file.restrictions,
        gamma: file.incompatibility,
        type_hint: file.type_hint,
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn save_instance(inst: &AdviceInstance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_json(inst))?;
    Ok(())
}

/// Reads and validates an instance file.
pub fn load_instance(path: &Path) -> Result<AdviceInstance> {
    let text = std::fs::read_to_string(path)?;
    let inst = instance_from_json(&text)?;
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        return Err(Error::Validation(violations.iter().map(ToString::to_string).collect()));
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advice::classify;

    #[test]
    fn cost_schemes() {
        assert_eq!(cost_scheme_eval(CostScheme::CostI, 3), 3);
        assert_eq!(cost_scheme_eval(CostScheme::CostII, 3), 6);
        assert_eq!(cost_scheme_eval(CostScheme::CostI, 0), 0);
        assert_eq!(cost_scheme_eval(CostScheme::CostII, 0), 0);
        assert_eq!("cost-ii".parse::<CostScheme>().unwrap(), CostScheme::CostII);
    }

    #[test]
    fn er_generator() {
        let inst = gen_er_instance(10, 5, 0.0, 3, 2, ChoiceMode::MultiChoiceSingleRestr, 1).unwrap();
        assert!(inst.graph.edges().all(|(a, _)| a == inst.x_star));
        for mode in [ChoiceMode::MultiChoiceSingleRestr, ChoiceMode::SingleChoiceMultiRestr] {
            for seed in 0..20 {
                let n_restr = 5 + seed as usize % 15;
                let a = gen_er_instance(40, 20, 0.2, n_restr, 4, mode, seed).unwrap();
                let b = gen_er_instance(40, 20, 0.2, n_restr, 4, mode, seed).unwrap();
                assert_eq!(instance_to_json(&a), instance_to_json(&b));
                assert_eq!(validate_instance(&a), vec![]);
                assert_eq!(a.x_star, 40);
            }
        }
        assert!(gen_er_instance(3, 3, 1.5, 1, 1, ChoiceMode::MultiChoiceSingleRestr, 0).is_err());
    }

    #[test]
    fn threshold_generator() {
        for seed in 0..30 {
            let inst = gen_threshold_instance(5, 5, 0.3, &[2, 3, 1], 3, seed).unwrap();
            assert_eq!(validate_instance(&inst), vec![]);
            if !inst.gamma.is_empty() {
                assert_eq!(classify(&inst).unwrap(), IncompatibilityType::ThresholdLike);
            }
        }
    }

    #[test]
    fn maxcov_example() {
        let (inst, beta, target) = gen_maxcov_instance(3, &[vec![1, 2], vec![2, 3]], 1, 2).unwrap();
        assert_eq!(beta, Cost::from_units(1));
        assert_eq!(target, Prob::new(2, 3));
        assert_eq!(validate_instance(&inst), vec![]);
        let g = inst.apply_relaxation(&[0]).unwrap();
        let (total, hit) = crate::matchenum::count_max_matchings_containing(&g, 0).unwrap();
        assert_eq!((total, hit), (3, 2));
        assert!(gen_maxcov_instance(3, &[], 1, 1).is_err());
        assert!(gen_maxcov_instance(3, &[vec![4]], 1, 1).is_err());
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn threshold_csv_capacity_suffix() {
        let dir = tempfile::tempdir().unwrap();
        let res = write(
            dir.path(),
            "r.csv",
            "id,capacity,region,physical_access,hearing_access\n\
             big,40,n,true,true\n\
             small,20,n,true,true\n\
             tiny,20,s,false,true\n",
        );
        let ag = write(
            dir.path(),
            "a.csv",
            "id,min_capacity,region_prefs,needs_physical,needs_hearing\n\
             me,40,n;s,true,false\n\
             other,10,s,false,false\n",
        );
        let inst = load_threshold_csv(&res, &ag, CostScheme::CostII, "me", 10).unwrap();
        assert_eq!(validate_instance(&inst), vec![]);
        assert_eq!(classify(&inst).unwrap(), IncompatibilityType::ThresholdLike);
        assert!(inst.graph.has_edge(0, 0));
        // capacity block: ids 0 (relax to 30, rank 2) and 1 (relax to 20, rank 1);
        // region block: id 2; physical block: id 3.
        assert_eq!(inst.restrictions.len(), 4);
        assert_eq!(inst.restrictions[0].rank, Some(2));
        assert_eq!(inst.restrictions[1].cost, Cost::from_units(2));
        assert_eq!(
            inst.gamma,
            vec![IncompatibilityPair::new(1, vec![0, 1]), IncompatibilityPair::new(2, vec![0, 1, 2, 3])]
        );
        assert!(inst.graph.has_edge(1, 2));
    }

    #[test]
    fn threshold_csv_errors_have_lines() {
        let dir = tempfile::tempdir().unwrap();
        let ag = write(dir.path(), "a.csv", "id,min_capacity,region_prefs,needs_physical,needs_hearing\nme,40,n,false,false\n");
        let missing = write(dir.path(), "m.csv", "id,capacity,region,physical_access\nr,1,n,true\n");
        match load_threshold_csv(&missing, &ag, CostScheme::CostI, "me", 10) {
            Err(Error::Csv { line: 1, message, .. }) => assert!(message.contains("hearing_access")),
            other => panic!("{other:?}"),
        }
        let bad = write(
            dir.path(),
            "b.csv",
            "id,capacity,region,physical_access,hearing_access\nr0,10,n,true,true\nr1,lots,n,true,true\n",
        );
        assert!(matches!(load_threshold_csv(&bad, &ag, CostScheme::CostI, "me", 10), Err(Error::Csv { line: 3, .. })));
        let unordered = write(
            dir.path(),
            "u.csv",
            "id,min_capacity,region_prefs,needs_physical,needs_hearing\nme,40,n;s;n,false,false\n",
        );
        let good = write(dir.path(), "g.csv", "id,capacity,region,physical_access,hearing_access\nr0,10,n,true,true\n");
        assert!(matches!(load_threshold_csv(&good, &unordered, CostScheme::CostI, "me", 10), Err(Error::Csv { line: 2, .. })));
    }

    #[test]
    fn standin_loads_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let (r, a) = gen_threshold_standin(StandinDataset::Cocl, 3).unwrap();
        assert_eq!((r, a.clone()), gen_threshold_standin(StandinDataset::Cocl, 3).unwrap());
        let (r, _) = gen_threshold_standin(StandinDataset::Cocl, 3).unwrap();
        assert_eq!(r.lines().count(), 145);
        assert_eq!(a.lines().count(), 155);
        let rp = write(dir.path(), "r.csv", &r);
        let ap = write(dir.path(), "a.csv", &a);
        for id in ["A000", "A017", "A153"] {
            let inst = load_threshold_csv(&rp, &ap, CostScheme::CostI, id, 10).unwrap();
            assert_eq!(validate_instance(&inst), vec![]);
            let back = instance_from_json(&instance_to_json(&inst)).unwrap();
            assert_eq!(back, inst);
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let inst = gen_er_instance(6, 4, 0.3, 4, 2, ChoiceMode::SingleChoiceMultiRestr, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.json");
        save_instance(&inst, &p).unwrap();
        assert_eq!(load_instance(&p).unwrap(), inst);

        let text = "{\"agents\": 2,\n \"resources\": oops}";
        match instance_from_json(text) {
            Err(Error::Parse { offset, line, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(&text[offset..offset + 1], "o");
            }
            other => panic!("{other:?}"),
        }

        let mut bad = inst.clone();
        bad.restrictions[0].block = Some(0);
        save_instance(&bad, &p).unwrap();
        assert!(matches!(load_instance(&p), Err(Error::Validation(v)) if !v.is_empty()));
    }

    #[test]
    fn costs_accept_decimal_strings() {
        let text = r#"{"agents":1,"resources":1,"edges":[],"special_agent":0,
            "restrictions":[{"id":0,"cost":"1.5"}],
            "incompatibility":[{"resource":0,"requires":[0]}]}"#;
        let inst = instance_from_json(text).unwrap();
        assert_eq!(inst.restrictions[0].cost, Cost::from_micros(1_500_000));
        assert!(instance_to_json(&inst).contains("\"1.5\""));
    }
}
