use std::collections::BTreeSet;

use match_advisor::bigraph::{dm_decompose, max_matching, BipartiteGraph, DmLabel, Matching};
use match_advisor::matchenum::{brute_force_max_matchings, enumerate_max_matchings, MaxMatchingEnumerator};
use match_advisor::prob::sample_max_matching;
use proptest::prelude::*;

type Pairs = Vec<(usize, usize)>;

/// Every matching of `g`, by plain recursion over agents.
fn all_matchings(g: &BipartiteGraph) -> Vec<Pairs> {
    fn go(g: &BipartiteGraph, a: usize, used: &mut Vec<bool>, cur: &mut Pairs, out: &mut Vec<Pairs>) {
        if a == g.n_agents() {
            out.push(cur.clone());
            return;
        }
        go(g, a + 1, used, cur, out);
        for &y in g.neighbors(a) {
            if !used[y] {
                used[y] = true;
                cur.push((a, y));
                go(g, a + 1, used, cur, out);
                cur.pop();
                used[y] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(g, 0, &mut vec![false; g.n_resources()], &mut Vec::new(), &mut out);
    out
}

fn oracle_max_matchings(g: &BipartiteGraph) -> BTreeSet<Pairs> {
    let all = all_matchings(g);
    let best = all.iter().map(Vec::len).max().unwrap_or(0);
    all.into_iter().filter(|m| m.len() == best).collect()
}

fn graph() -> impl Strategy<Value = BipartiteGraph> {
    (1usize..=6, 1usize..=6, 1u32..=5).prop_flat_map(|(n_a, n_r, p)| {
        proptest::collection::vec(proptest::bool::weighted(f64::from(p) / 10.0), n_a * n_r).prop_map(move |bits| {
            let edges = (0..n_a * n_r).filter(|&i| bits[i]).map(|i| (i / n_r, i % n_r));
            BipartiteGraph::from_edges(n_a, n_r, edges).unwrap()
        })
    })
}

fn set_of(ms: &[Matching]) -> BTreeSet<Pairs> {
    ms.iter().map(|m| m.pairs().to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hk_size_matches_oracle(g in graph()) {
        let m = max_matching(&g);
        prop_assert!(m.validate(&g).is_ok());
        let best = oracle_max_matchings(&g).iter().next().map_or(0, Vec::len);
        prop_assert_eq!(m.len(), best);
    }

    #[test]
    fn enumeration_matches_oracle(g in graph()) {
        let oracle = oracle_max_matchings(&g);
        let listed = enumerate_max_matchings(&g, None);
        prop_assert_eq!(listed.len(), oracle.len());
        prop_assert_eq!(&set_of(&listed), &oracle);
        prop_assert_eq!(&set_of(&brute_force_max_matchings(&g).unwrap()), &oracle);
    }

    #[test]
    fn enumeration_cap(g in graph(), cap in 0usize..6) {
        let total = oracle_max_matchings(&g).len();
        let listed = enumerate_max_matchings(&g, Some(cap));
        prop_assert_eq!(listed.len(), cap.min(total));
        prop_assert_eq!(set_of(&listed).len(), listed.len());
    }

    #[test]
    fn enumeration_from_any_seed(g in graph(), seed in any::<u64>()) {
        let start = sample_max_matching(&g, seed);
        let listed: Vec<Matching> = MaxMatchingEnumerator::with_seed(&g, start).unwrap().collect();
        prop_assert_eq!(set_of(&listed), oracle_max_matchings(&g));
    }

    /// Even nodes are those some maximum matching leaves exposed, Odd nodes
    /// are the other neighbours of Even nodes, everything else is Unreachable.
    #[test]
    fn dm_labels_match_exposure_oracle(g in graph(), seed in any::<u64>()) {
        let maxes = oracle_max_matchings(&g);
        let exposed_agent = |a: usize| maxes.iter().any(|m| m.iter().all(|&(x, _)| x != a));
        let exposed_res = |y: usize| maxes.iter().any(|m| m.iter().all(|&(_, r)| r != y));
        let res_adj = g.resource_adjacency();

        let m1 = max_matching(&g);
        let m2 = sample_max_matching(&g, seed);
        let dm = dm_decompose(&g, &m1).unwrap();
        prop_assert_eq!(&dm, &dm_decompose(&g, &m2).unwrap());

        for a in 0..g.n_agents() {
            let want = if exposed_agent(a) {
                DmLabel::Even
            } else if g.neighbors(a).iter().any(|&y| exposed_res(y)) {
                DmLabel::Odd
            } else {
                DmLabel::Unreachable
            };
            prop_assert_eq!(dm.agent(a), want, "agent {}", a);
        }
        for (y, adj) in res_adj.iter().enumerate() {
            let want = if exposed_res(y) {
                DmLabel::Even
            } else if adj.iter().any(|&a| exposed_agent(a)) {
                DmLabel::Odd
            } else {
                DmLabel::Unreachable
            };
            prop_assert_eq!(dm.resource(y), want, "resource {}", y);
        }

        let (_, odd, unreachable) = dm.counts();
        prop_assert_eq!(m1.len() * 2, 2 * odd + unreachable);
        for (a, y) in g.edges() {
            let (la, ly) = (dm.agent(a), dm.resource(y));
            prop_assert!(!(la == DmLabel::Even && ly == DmLabel::Even));
            prop_assert!(!(la == DmLabel::Even && ly == DmLabel::Unreachable));
            prop_assert!(!(la == DmLabel::Unreachable && ly == DmLabel::Even));
        }
    }

    #[test]
    fn dm_rejects_non_maximum(g in graph()) {
        let m = max_matching(&g);
        if !m.is_empty() {
            let smaller = Matching::from_pairs(m.pairs()[1..].to_vec());
            prop_assert!(dm_decompose(&g, &smaller).is_err());
        }
    }

    /// Adding edges at one agent grows the maximum matching by at most one,
    /// and every new maximum matching uses a new edge.
    #[test]
    fn one_agent_edges(g in graph(), agent_pick in any::<usize>(), extra in proptest::collection::vec(any::<usize>(), 1..4)) {
        let x = agent_pick % g.n_agents();
        let ys: Vec<usize> = extra.iter().map(|v| v % g.n_resources()).collect();
        let h = g.add_agent_edges(x, ys.iter().copied()).unwrap();
        let before = max_matching(&g).len();
        let after = max_matching(&h).len();
        prop_assert!(after >= before && after <= before + 1);

        if after == before {
            let old = oracle_max_matchings(&g);
            for m in oracle_max_matchings(&h) {
                if !old.contains(&m) {
                    prop_assert!(m.iter().any(|&(a, y)| a == x && !g.has_edge(a, y)));
                }
            }
        }
    }
}

#[test]
fn identical_matching_sets_regardless_of_worker_count() {
    let g = BipartiteGraph::from_edges(4, 4, [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 0)]).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let p1 = one.install(|| match_advisor::prob::estimate_probability(&g, 0, 300, 11).unwrap());
    let p4 = many.install(|| match_advisor::prob::estimate_probability(&g, 0, 300, 11).unwrap());
    assert_eq!(p1, p4);
    let h1 = one.install(|| match_advisor::prob::hkuno_estimate(&g, 0, 16, 3, 11).unwrap());
    let h4 = many.install(|| match_advisor::prob::hkuno_estimate(&g, 0, 16, 3, 11).unwrap());
    assert_eq!(h1, h4);
}
