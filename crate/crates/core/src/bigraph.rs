//! Bipartite compatibility graphs, Hopcroft–Karp maximum matching and the
//! Dulmage–Mendelsohn (even/odd/unreachable) decomposition.
//!
//! Agents and resources are dense 0-based indices. The agent-side adjacency is
//! the single source of truth; each row is sorted and duplicate free, so every
//! traversal below visits neighbours in ascending order and the matchings it
//! produces are reproducible.

use std::cell::Cell;
use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static HK_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of Hopcroft–Karp runs performed on the current thread.
pub fn hk_call_count() -> u64 {
    HK_CALLS.with(|c| c.get())
}

/// Immutable bipartite graph. Rows are reference counted so that a derived
/// graph which only touches one agent shares every other row with its parent.
#[derive(Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_resources: usize,
    adj: Vec<Arc<[usize]>>,
}

impl fmt::Debug for BipartiteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BipartiteGraph")
            .field("n_agents", &self.n_agents())
            .field("n_resources", &self.n_resources)
            .field("adj", &self.adj.iter().map(|r| &r[..]).collect::<Vec<_>>())
            .finish()
    }
}

impl BipartiteGraph {
    /// Graph without edges.
    pub fn empty(n_agents: usize, n_resources: usize) -> Self {
        let row: Arc<[usize]> = Arc::from(Vec::new());
        BipartiteGraph {
            n_resources,
            adj: vec![row; n_agents],
        }
    }

    pub fn from_edges<I>(n_agents: usize, n_resources: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows = vec![Vec::new(); n_agents];
        for (a, y) in edges {
            if a >= n_agents {
                return Err(Error::AgentOutOfRange { index: a, len: n_agents });
            }
            if y >= n_resources {
                return Err(Error::ResourceOutOfRange { index: y, len: n_resources });
            }
            rows[a].push(y);
        }
        Ok(Self::from_rows(n_resources, rows))
    }

    fn from_rows(n_resources: usize, rows: Vec<Vec<usize>>) -> Self {
        let adj = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                Arc::from(r)
            })
            .collect();
        BipartiteGraph { n_resources, adj }
    }

    pub fn n_agents(&self) -> usize {
        self.adj.len()
    }

    pub fn n_resources(&self) -> usize {
        self.n_resources
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(|r| r.len()).sum()
    }

    /// Sorted resources adjacent to `agent`.
    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.adj[agent]
    }

    pub fn has_edge(&self, agent: usize, resource: usize) -> bool {
        agent < self.adj.len() && self.adj[agent].binary_search(&resource).is_ok()
    }

    /// All edges as `(agent, resource)`, ordered by agent then resource.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().map(move |&y| (a, y)))
    }

    /// Resource-side view derived from the agent rows; each list is sorted.
    pub fn resource_adjacency(&self) -> Vec<Vec<usize>> {
        let mut radj = vec![Vec::new(); self.n_resources];
        for (a, y) in self.edges() {
            radj[y].push(a);
        }
        radj
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.n_agents() {
            return Err(Error::AgentOutOfRange { index: agent, len: self.n_agents() });
        }
        Ok(())
    }

    /// Returns a new graph with the edges `{agent, y}` for every `y` in
    /// `resources` added. Existing edges are left alone; `self` is untouched.
    pub fn add_agent_edges<I>(&self, agent: usize, resources: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        self.check_agent(agent)?;
        let mut row: Vec<usize> = self.adj[agent].to_vec();
        let before = row.len();
        for y in resources {
            if y >= self.n_resources {
                return Err(Error::ResourceOutOfRange { index: y, len: self.n_resources });
            }
            row.push(y);
        }
        if row.len() == before {
            return Ok(self.clone());
        }
        row.sort_unstable();
        row.dedup();
        let mut adj = self.adj.clone();
        adj[agent] = Arc::from(row);
        Ok(BipartiteGraph { n_resources: self.n_resources, adj })
    }

    /// Relabels agents: agent `k` of the result is agent `order[k]` of `self`.
    pub fn reorder_agents(&self, order: &[usize]) -> Self {
        debug_assert_eq!(order.len(), self.n_agents());
        BipartiteGraph {
            n_resources: self.n_resources,
            adj: order.iter().map(|&a| self.adj[a].clone()).collect(),
        }
    }
}

/// A set of disjoint agent–resource pairs, kept sorted by agent index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    /// Canonicalizes the pair order; does not check disjointness.
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Matching { pairs }
    }

    pub fn from_agent_mates(mates: &[Option<usize>]) -> Self {
        Matching {
            pairs: mates
                .iter()
                .enumerate()
                .filter_map(|(a, m)| m.map(|y| (a, y)))
                .collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mate_of_agent(&self, agent: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&agent, |&(a, _)| a)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    pub fn contains_agent(&self, agent: usize) -> bool {
        self.mate_of_agent(agent).is_some()
    }

    /// Checks that every pair is an edge of `g` and no node is used twice.
    pub fn validate(&self, g: &BipartiteGraph) -> Result<()> {
        let mut agent_used = vec![false; g.n_agents()];
        let mut res_used = vec![false; g.n_resources()];
        for &(a, y) in &self.pairs {
            g.check_agent(a)?;
            if y >= g.n_resources() {
                return Err(Error::ResourceOutOfRange { index: y, len: g.n_resources() });
            }
            if !g.has_edge(a, y) {
                return Err(Error::InvalidMatching(format!("pair ({a}, {y}) is not an edge")));
            }
            if std::mem::replace(&mut agent_used[a], true) {
                return Err(Error::InvalidMatching(format!("agent {a} matched twice")));
            }
            if std::mem::replace(&mut res_used[y], true) {
                return Err(Error::InvalidMatching(format!("resource {y} matched twice")));
            }
        }
        Ok(())
    }

    /// `(agent -> resource, resource -> agent)` lookup tables.
    pub fn mate_tables(&self, n_agents: usize, n_resources: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let mut am = vec![None; n_agents];
        let mut rm = vec![None; n_resources];
        for &(a, y) in &self.pairs {
            am[a] = Some(y);
            rm[y] = Some(a);
        }
        (am, rm)
    }
}

const INF: usize = usize::MAX;

/// Maximum-cardinality matching by Hopcroft–Karp. Free agents are processed in
/// ascending order and neighbours in ascending order, so the result depends
/// only on the graph.
pub fn max_matching(g: &BipartiteGraph) -> Matching {
    HK_CALLS.with(|c| c.set(c.get() + 1));
    let n = g.n_agents();
    let mut agent_mate: Vec<Option<usize>> = vec![None; n];
    let mut res_mate: Vec<Option<usize>> = vec![None; g.n_resources()];
    let mut dist = vec![INF; n];
    let mut queue = VecDeque::with_capacity(n);

    loop {
        // Layering from all free agents.
        queue.clear();
        for a in 0..n {
            if agent_mate[a].is_none() {
                dist[a] = 0;
                queue.push_back(a);
            } else {
                dist[a] = INF;
            }
        }
        let mut found = false;
        while let Some(a) = queue.pop_front() {
            for &y in g.neighbors(a) {
                match res_mate[y] {
                    None => found = true,
                    Some(b) if dist[b] == INF => {
                        dist[b] = dist[a] + 1;
                        queue.push_back(b);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut next_edge = vec![0usize; n];
        for a in 0..n {
            if agent_mate[a].is_none() {
                augment(g, a, &mut agent_mate, &mut res_mate, &mut dist, &mut next_edge);
            }
        }
    }
    Matching::from_agent_mates(&agent_mate)
}

fn augment(
    g: &BipartiteGraph,
    a: usize,
    agent_mate: &mut [Option<usize>],
    res_mate: &mut [Option<usize>],
    dist: &mut [usize],
    next_edge: &mut [usize],
) -> bool {
    let row = g.neighbors(a);
    while next_edge[a] < row.len() {
        let y = row[next_edge[a]];
        next_edge[a] += 1;
        let ok = match res_mate[y] {
            None => true,
            Some(b) => dist[b] == dist[a] + 1 && augment(g, b, agent_mate, res_mate, dist, next_edge),
        };
        if ok {
            agent_mate[a] = Some(y);
            res_mate[y] = Some(a);
            return true;
        }
    }
    dist[a] = INF;
    false
}

/// Dulmage–Mendelsohn class of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DmLabel {
    Even,
    Odd,
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DmLabels {
    pub agent_labels: Vec<DmLabel>,
    pub resource_labels: Vec<DmLabel>,
}

impl DmLabels {
    /// Counts of `(even, odd, unreachable)` over all nodes.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for l in self.agent_labels.iter().chain(&self.resource_labels) {
            match l {
                DmLabel::Even => c.0 += 1,
                DmLabel::Odd => c.1 += 1,
                DmLabel::Unreachable => c.2 += 1,
            }
        }
        c
    }

    pub fn agent(&self, a: usize) -> DmLabel {
        self.agent_labels[a]
    }

    pub fn resource(&self, y: usize) -> DmLabel {
        self.resource_labels[y]
    }
}

/// Labels every node by alternating-path reachability from the nodes left
/// free by `m`. Unmatched nodes are even (path of length zero).
///
/// Fails if `m` is not a matching of `g` or is not maximum. A non-maximum
/// matching shows up as an even–even edge or a node reachable with both
/// parities, either of which yields an augmenting path.
pub fn dm_decompose(g: &BipartiteGraph, m: &Matching) -> Result<DmLabels> {
    m.validate(g)?;
    let (agent_mate, res_mate) = m.mate_tables(g.n_agents(), g.n_resources());
    let radj = g.resource_adjacency();

    let mut agent_labels = vec![DmLabel::Unreachable; g.n_agents()];
    let mut resource_labels = vec![DmLabel::Unreachable; g.n_resources()];

    // From free agents: agents reached are even, resources reached are odd.
    let mut queue: VecDeque<usize> = VecDeque::new();
    for a in 0..g.n_agents() {
        if agent_mate[a].is_none() {
            agent_labels[a] = DmLabel::Even;
            queue.push_back(a);
        }
    }
    while let Some(a) = queue.pop_front() {
        for &y in g.neighbors(a) {
            if agent_mate[a] == Some(y) || resource_labels[y] != DmLabel::Unreachable {
                continue;
            }
            match res_mate[y] {
                None => return Err(Error::NotMaximum { agent: a, resource: y }),
                Some(b) => {
                    resource_labels[y] = DmLabel::Odd;
                    agent_labels[b] = DmLabel::Even;
                    queue.push_back(b);
                }
            }
        }
    }

    // From free resources: resources reached are even, agents reached are odd.
    let mut queue: VecDeque<usize> = VecDeque::new();
    for y in 0..g.n_resources() {
        if res_mate[y].is_none() {
            resource_labels[y] = DmLabel::Even;
            queue.push_back(y);
        }
    }
    let mut seen_agent = vec![false; g.n_agents()];
    while let Some(y) = queue.pop_front() {
        for &a in &radj[y] {
            if res_mate[y] == Some(a) || seen_agent[a] {
                continue;
            }
            seen_agent[a] = true;
            if agent_labels[a] == DmLabel::Even {
                return Err(Error::NotMaximum { agent: a, resource: y });
            }
            // `a` is matched: a free agent would be even.
            let b = agent_mate[a].expect("agent reached from a free resource is matched");
            if resource_labels[b] == DmLabel::Odd {
                return Err(Error::NotMaximum { agent: a, resource: y });
            }
            agent_labels[a] = DmLabel::Odd;
            resource_labels[b] = DmLabel::Even;
            queue.push_back(b);
        }
    }

    Ok(DmLabels { agent_labels, resource_labels })
}

/// Decomposition seeded with the Hopcroft–Karp matching.
pub fn dm_labels(g: &BipartiteGraph) -> DmLabels {
    let m = max_matching(g);
    dm_decompose(g, &m).expect("Hopcroft–Karp output is a maximum matching")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n_a: usize, n_r: usize, edges: &[(usize, usize)]) -> BipartiteGraph {
        BipartiteGraph::from_edges(n_a, n_r, edges.iter().copied()).unwrap()
    }

    #[test]
    fn single_edge() {
        let m = max_matching(&g(1, 1, &[(0, 0)]));
        assert_eq!(m.pairs(), &[(0, 0)]);
    }

    #[test]
    fn one_resource_bounds_size() {
        let m = max_matching(&g(2, 1, &[(0, 0), (1, 0)]));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn empty_graph() {
        assert!(max_matching(&BipartiteGraph::empty(0, 0)).is_empty());
        assert!(max_matching(&BipartiteGraph::empty(3, 2)).is_empty());
    }

    #[test]
    fn identity_edges_form_maximum_matching() {
        // Max-coverage reduction base graph with r = 3 plus isolated x* = agent 0.
        let graph = g(4, 3, &[(1, 0), (2, 1), (3, 2)]);
        assert_eq!(max_matching(&graph).len(), 3);
    }

    #[test]
    fn needs_augmenting_path() {
        // Greedy would match 0-0 and get stuck; HK must reroute.
        let graph = g(2, 2, &[(0, 0), (0, 1), (1, 0)]);
        let m = max_matching(&graph);
        assert_eq!(m.pairs(), &[(0, 1), (1, 0)]);
    }

    #[test]
    fn from_edges_rejects_out_of_range() {
        assert!(matches!(
            BipartiteGraph::from_edges(1, 1, [(0, 1)]),
            Err(Error::ResourceOutOfRange { .. })
        ));
        assert!(matches!(
            BipartiteGraph::from_edges(1, 1, [(2, 0)]),
            Err(Error::AgentOutOfRange { .. })
        ));
    }

    #[test]
    fn add_agent_edges_identity_and_idempotence() {
        let base = g(2, 2, &[(0, 0)]);
        assert_eq!(base.add_agent_edges(0, []).unwrap(), base);
        assert_eq!(base.add_agent_edges(0, [0]).unwrap(), base);
        let more = base.add_agent_edges(1, [1, 1, 0]).unwrap();
        assert_eq!(more.neighbors(1), &[0, 1]);
        assert_eq!(base.neighbors(1), &[] as &[usize]);
        assert!(base.add_agent_edges(1, [5]).is_err());
        assert!(base.add_agent_edges(9, [0]).is_err());
    }

    #[test]
    fn dm_star() {
        let graph = g(2, 1, &[(0, 0), (1, 0)]);
        let m = Matching::from_pairs(vec![(0, 0)]);
        let dm = dm_decompose(&graph, &m).unwrap();
        assert_eq!(dm.agent_labels, vec![DmLabel::Even, DmLabel::Even]);
        assert_eq!(dm.resource_labels, vec![DmLabel::Odd]);
    }

    #[test]
    fn dm_perfect_cycle_is_unreachable() {
        let graph = g(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        let m = Matching::from_pairs(vec![(0, 0), (1, 1)]);
        let dm = dm_decompose(&graph, &m).unwrap();
        assert_eq!(dm.counts(), (0, 0, 4));
    }

    #[test]
    fn dm_isolated_agent_plus_pair() {
        let graph = g(2, 1, &[(1, 0)]);
        let dm = dm_labels(&graph);
        assert_eq!(dm.agent(0), DmLabel::Even);
        assert_eq!(dm.agent(1), DmLabel::Unreachable);
        assert_eq!(dm.resource(0), DmLabel::Unreachable);
    }

    #[test]
    fn dm_rejects_non_maximum() {
        let graph = g(2, 2, &[(0, 0), (1, 1)]);
        let m = Matching::from_pairs(vec![(0, 0)]);
        assert!(matches!(dm_decompose(&graph, &m), Err(Error::NotMaximum { .. })));
        // Longer augmenting path x1 - y0 = x0 - y1.
        let graph = g(2, 2, &[(0, 0), (0, 1), (1, 0)]);
        let m = Matching::from_pairs(vec![(0, 0)]);
        assert!(matches!(dm_decompose(&graph, &m), Err(Error::NotMaximum { .. })));
    }

    #[test]
    fn dm_rejects_invalid_matching() {
        let graph = g(2, 2, &[(0, 0), (1, 0)]);
        let m = Matching::from_pairs(vec![(0, 0), (1, 0)]);
        assert!(matches!(dm_decompose(&graph, &m), Err(Error::InvalidMatching(_))));
        let m = Matching::from_pairs(vec![(0, 1)]);
        assert!(matches!(dm_decompose(&graph, &m), Err(Error::InvalidMatching(_))));
    }

    #[test]
    fn hk_counter_increments() {
        let before = hk_call_count();
        max_matching(&BipartiteGraph::empty(1, 1));
        assert_eq!(hk_call_count(), before + 1);
    }
}
