//! Enumeration of all maximum matchings of a bipartite graph.
//!
//! The enumerator follows Uno's binary partition scheme in its plain form
//! (none of the published speed-ups). Starting from one maximum matching `M`
//! of a subproblem, it looks for a second maximum matching `M'` obtained by
//! exchanging `M` along an even alternating path that starts at a free node
//! or along an alternating cycle. If one exists, an edge `e ∈ M \ M'` splits
//! the subproblem into "matchings that use `e`" (both endpoints removed, `M`
//! still maximum there) and "matchings that avoid `e`" (`e` deleted, `M'`
//! maximum there). The two halves are disjoint, so every maximum matching is
//! produced exactly once and no duplicate filter is needed.
//!
//! Exchange search order: free agents in ascending index, then free
//! resources in ascending index, then the first alternating cycle found by a
//! depth-first search over matched agents in ascending index.

use crate::bigraph::{max_matching, BipartiteGraph, Matching};
use crate::error::{Error, Result};

/// Default cap on how many matchings the counting helpers will visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// Node limit for [`brute_force_max_matchings`].
pub const BRUTE_FORCE_NODE_LIMIT: usize = 20;

#[derive(Clone)]
struct Frame {
    adj: Vec<Vec<usize>>,
    agent_alive: Vec<bool>,
    res_alive: Vec<bool>,
    forced: Vec<(usize, usize)>,
    agent_mate: Vec<Option<usize>>,
    res_mate: Vec<Option<usize>>,
}

impl Frame {
    fn full_matching(&self) -> Matching {
        let mut pairs = self.forced.clone();
        pairs.extend(
            self.agent_mate
                .iter()
                .enumerate()
                .filter_map(|(a, m)| m.map(|y| (a, y))),
        );
        Matching::from_pairs(pairs)
    }

    fn has_edge(&self, a: usize, y: usize) -> bool {
        self.adj[a].binary_search(&y).is_ok()
    }

    /// Another maximum matching of this subproblem, as new mate tables plus
    /// an edge of the current matching that the new one does not use.
    #[allow(clippy::type_complexity)]
    fn alternative(&self) -> Option<(Vec<Option<usize>>, Vec<Option<usize>>, (usize, usize))> {
        let n_a = self.adj.len();
        // Length-2 path from a free agent: u - y = a.
        for u in 0..n_a {
            if !self.agent_alive[u] || self.agent_mate[u].is_some() {
                continue;
            }
            if let Some(&y) = self.adj[u].first() {
                let a = self.res_mate[y].expect("maximum matching leaves no free-free edge");
                let mut am = self.agent_mate.clone();
                let mut rm = self.res_mate.clone();
                am[a] = None;
                am[u] = Some(y);
                rm[y] = Some(u);
                return Some((am, rm, (a, y)));
            }
        }
        // Length-2 path from a free resource: v - a = y.
        for a in 0..n_a {
            let Some(y) = self.agent_mate[a] else { continue };
            if let Some(&v) = self.adj[a]
                .iter()
                .find(|&&v| self.res_alive[v] && self.res_mate[v].is_none())
            {
                let mut am = self.agent_mate.clone();
                let mut rm = self.res_mate.clone();
                am[a] = Some(v);
                rm[v] = Some(a);
                rm[y] = None;
                return Some((am, rm, (a, y)));
            }
        }
        let cycle = self.find_alternating_cycle()?;
        // cycle[i] takes the resource currently matched to cycle[i + 1].
        let mut am = self.agent_mate.clone();
        let mut rm = self.res_mate.clone();
        let k = cycle.len();
        for i in 0..k {
            let a = cycle[i];
            let next = cycle[(i + 1) % k];
            let y = self.agent_mate[next].unwrap();
            am[a] = Some(y);
            rm[y] = Some(a);
        }
        let first = cycle[0];
        Some((am, rm, (first, self.agent_mate[first].unwrap())))
    }

    /// Directed cycle in the exchange digraph `a -> mate(y)` for every
    /// non-matching edge `{a, y}` with `y` matched.
    fn find_alternating_cycle(&self) -> Option<Vec<usize>> {
        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;
        let n_a = self.adj.len();
        let mut color = vec![WHITE; n_a];
        let successors = |a: usize| -> Vec<usize> {
            self.adj[a]
                .iter()
                .filter(|&&y| self.agent_mate[a] != Some(y))
                .filter_map(|&y| self.res_mate[y])
                .collect()
        };
        for root in 0..n_a {
            if color[root] != WHITE || self.agent_mate[root].is_none() {
                continue;
            }
            // (agent, successor list, next index)
            let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(root, successors(root), 0)];
            color[root] = GREY;
            while let Some(top) = stack.last_mut() {
                if top.2 < top.1.len() {
                    let b = top.1[top.2];
                    top.2 += 1;
                    match color[b] {
                        WHITE => {
                            color[b] = GREY;
                            let s = successors(b);
                            stack.push((b, s, 0));
                        }
                        GREY => {
                            let start = stack.iter().position(|f| f.0 == b).unwrap();
                            return Some(stack[start..].iter().map(|f| f.0).collect());
                        }
                        _ => {}
                    }
                } else {
                    color[top.0] = BLACK;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Subproblem of matchings that contain `e`.
    fn with_forced(&self, (a, y): (usize, usize)) -> Frame {
        let mut f = self.clone();
        f.forced.push((a, y));
        f.agent_alive[a] = false;
        f.res_alive[y] = false;
        f.adj[a].clear();
        for row in &mut f.adj {
            if let Ok(i) = row.binary_search(&y) {
                row.remove(i);
            }
        }
        f.agent_mate[a] = None;
        f.res_mate[y] = None;
        f
    }

    /// Subproblem of matchings that avoid `e`, carrying matching `(am, rm)`.
    fn without_edge(&self, (a, y): (usize, usize), am: Vec<Option<usize>>, rm: Vec<Option<usize>>) -> Frame {
        let mut f = self.clone();
        debug_assert!(f.has_edge(a, y));
        let i = f.adj[a].binary_search(&y).unwrap();
        f.adj[a].remove(i);
        f.agent_mate = am;
        f.res_mate = rm;
        f
    }
}

/// Iterator over all maximum matchings of a graph. The first item is the seed
/// matching; each later item differs from an earlier one by an exchange.
pub struct MaxMatchingEnumerator {
    stack: Vec<Frame>,
    seed: Option<Matching>,
}

impl MaxMatchingEnumerator {
    /// Seeds the enumeration with the Hopcroft–Karp matching.
    pub fn new(g: &BipartiteGraph) -> Self {
        let m = max_matching(g);
        Self::from_maximum(g, m)
    }

    /// Seeds the enumeration with a caller-supplied maximum matching.
    pub fn with_seed(g: &BipartiteGraph, seed: Matching) -> Result<Self> {
        seed.validate(g)?;
        let size = max_matching(g).len();
        if seed.len() != size {
            return Err(Error::InvalidMatching(format!(
                "seed has size {} but the maximum is {size}",
                seed.len()
            )));
        }
        Ok(Self::from_maximum(g, seed))
    }

    pub(crate) fn from_maximum(g: &BipartiteGraph, m: Matching) -> Self {
        let (agent_mate, res_mate) = m.mate_tables(g.n_agents(), g.n_resources());
        let root = Frame {
            adj: (0..g.n_agents()).map(|a| g.neighbors(a).to_vec()).collect(),
            agent_alive: vec![true; g.n_agents()],
            res_alive: vec![true; g.n_resources()],
            forced: Vec::new(),
            agent_mate,
            res_mate,
        };
        MaxMatchingEnumerator { stack: vec![root], seed: Some(m) }
    }
}

impl Iterator for MaxMatchingEnumerator {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        if let Some(seed) = self.seed.take() {
            return Some(seed);
        }
        while let Some(frame) = self.stack.pop() {
            let Some((am, rm, e)) = frame.alternative() else { continue };
            let minus = frame.without_edge(e, am, rm);
            let plus = frame.with_forced(e);
            let out = minus.full_matching();
            self.stack.push(plus);
            self.stack.push(minus);
            return Some(out);
        }
        None
    }
}

/// All maximum matchings (or the first `cap` of them) in enumeration order.
pub fn enumerate_max_matchings(g: &BipartiteGraph, cap: Option<usize>) -> Vec<Matching> {
    let it = MaxMatchingEnumerator::new(g);
    match cap {
        Some(c) => it.take(c).collect(),
        None => it.collect(),
    }
}

/// `(total, containing)`: the number of maximum matchings and how many of
/// them match `agent`. Refuses to visit more than `budget` matchings.
pub fn count_max_matchings_containing_with_budget(
    g: &BipartiteGraph,
    agent: usize,
    budget: u64,
) -> Result<(u64, u64)> {
    g.check_agent(agent)?;
    let mut total = 0u64;
    let mut containing = 0u64;
    for m in MaxMatchingEnumerator::new(g) {
        total += 1;
        if total > budget {
            return Err(Error::EnumerationBudgetExceeded(budget));
        }
        if m.contains_agent(agent) {
            containing += 1;
        }
    }
    Ok((total, containing))
}

pub fn count_max_matchings_containing(g: &BipartiteGraph, agent: usize) -> Result<(u64, u64)> {
    count_max_matchings_containing_with_budget(g, agent, DEFAULT_ENUMERATION_BUDGET)
}

/// Number of maximum matchings, bounded by `budget`.
pub fn count_max_matchings(g: &BipartiteGraph, budget: u64) -> Result<u64> {
    let mut total = 0u64;
    for _ in MaxMatchingEnumerator::new(g) {
        total += 1;
        if total > budget {
            return Err(Error::EnumerationBudgetExceeded(budget));
        }
    }
    Ok(total)
}

/// Every maximum matching by exhaustive search, sorted. Independent of the
/// enumerator and of Hopcroft–Karp; meant as a test oracle for tiny graphs.
pub fn brute_force_max_matchings(g: &BipartiteGraph) -> Result<Vec<Matching>> {
    let nodes = g.n_agents() + g.n_resources();
    if nodes > BRUTE_FORCE_NODE_LIMIT {
        return Err(Error::BruteForceGuard { nodes, limit: BRUTE_FORCE_NODE_LIMIT });
    }
    struct Search<'a> {
        g: &'a BipartiteGraph,
        used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: usize,
        found: Vec<Vec<(usize, usize)>>,
    }
    impl Search<'_> {
        fn go(&mut self, agent: usize) {
            let n = self.g.n_agents();
            if self.current.len() + (n - agent) < self.best {
                return;
            }
            if agent == n {
                if self.current.len() > self.best {
                    self.best = self.current.len();
                    self.found.clear();
                }
                self.found.push(self.current.clone());
                return;
            }
            for &y in self.g.neighbors(agent) {
                if !self.used[y] {
                    self.used[y] = true;
                    self.current.push((agent, y));
                    self.go(agent + 1);
                    self.current.pop();
                    self.used[y] = false;
                }
            }
            self.go(agent + 1);
        }
    }
    let mut s = Search {
        g,
        used: vec![false; g.n_resources()],
        current: Vec::new(),
        best: 0,
        found: Vec::new(),
    };
    s.go(0);
    let mut out: Vec<Matching> = s.found.into_iter().map(Matching::from_pairs).collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn g(n_a: usize, n_r: usize, edges: &[(usize, usize)]) -> BipartiteGraph {
        BipartiteGraph::from_edges(n_a, n_r, edges.iter().copied()).unwrap()
    }

    fn complete(n: usize) -> BipartiteGraph {
        BipartiteGraph::from_edges(n, n, (0..n).flat_map(|a| (0..n).map(move |y| (a, y)))).unwrap()
    }

    #[test]
    fn path_has_one_matching() {
        assert_eq!(enumerate_max_matchings(&g(1, 1, &[(0, 0)]), None).len(), 1);
    }

    #[test]
    fn complete_2x2_has_two() {
        let all = enumerate_max_matchings(&complete(2), None);
        assert_eq!(all.len(), 2);
        let bf = brute_force_max_matchings(&complete(2)).unwrap();
        let a: BTreeSet<_> = all.into_iter().collect();
        let b: BTreeSet<_> = bf.into_iter().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn complete_3x3_and_4x4() {
        assert_eq!(brute_force_max_matchings(&complete(3)).unwrap().len(), 6);
        assert_eq!(enumerate_max_matchings(&complete(3), None).len(), 6);
        assert_eq!(enumerate_max_matchings(&complete(4), None).len(), 24);
    }

    #[test]
    fn empty_graph_yields_empty_matching() {
        let e = BipartiteGraph::empty(0, 0);
        assert_eq!(enumerate_max_matchings(&e, None), vec![Matching::default()]);
        assert_eq!(brute_force_max_matchings(&e).unwrap(), vec![Matching::default()]);
        let e = BipartiteGraph::empty(2, 3);
        assert_eq!(enumerate_max_matchings(&e, None), vec![Matching::default()]);
    }

    #[test]
    fn cap_limits_output() {
        assert_eq!(enumerate_max_matchings(&complete(4), Some(5)).len(), 5);
        assert_eq!(enumerate_max_matchings(&complete(2), Some(5)).len(), 2);
    }

    #[test]
    fn maxcov_fan_counts() {
        // x* = agent 0 joined to y0, y1, y2; identity edges x_i - y_{i-1}.
        let graph = g(4, 3, &[(0, 0), (0, 1), (0, 2), (1, 0), (2, 1), (3, 2)]);
        let all = enumerate_max_matchings(&graph, None);
        assert_eq!(all.len(), 4);
        assert_eq!(all.iter().filter(|m| m.contains_agent(0)).count(), 3);
        assert_eq!(count_max_matchings_containing(&graph, 0).unwrap(), (4, 3));
    }

    #[test]
    fn star_counts() {
        let graph = g(2, 1, &[(0, 0), (1, 0)]);
        assert_eq!(count_max_matchings_containing(&graph, 0).unwrap(), (2, 1));
        let graph = g(3, 1, &[(1, 0), (2, 0)]);
        assert_eq!(count_max_matchings_containing(&graph, 0).unwrap(), (2, 0));
    }

    #[test]
    fn budget_is_enforced() {
        let err = count_max_matchings_containing_with_budget(&complete(4), 0, 10).unwrap_err();
        assert!(matches!(err, Error::EnumerationBudgetExceeded(10)));
        assert!(count_max_matchings(&complete(4), 24).is_ok());
    }

    #[test]
    fn brute_force_guard() {
        assert!(matches!(
            brute_force_max_matchings(&BipartiteGraph::empty(11, 10)),
            Err(Error::BruteForceGuard { .. })
        ));
    }

    #[test]
    fn with_seed_starts_from_seed() {
        let graph = complete(3);
        let seed = Matching::from_pairs(vec![(0, 2), (1, 1), (2, 0)]);
        let mut it = MaxMatchingEnumerator::with_seed(&graph, seed.clone()).unwrap();
        assert_eq!(it.next(), Some(seed));
        assert_eq!(it.count(), 5);
        let small = Matching::from_pairs(vec![(0, 0)]);
        assert!(MaxMatchingEnumerator::with_seed(&graph, small).is_err());
    }
}
