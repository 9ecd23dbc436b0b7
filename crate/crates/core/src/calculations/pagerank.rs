use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mappers::EntityId;
use crate::miners::{CommitInfluenceGraph, MinerResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    /// Iteration stops once the L1 change of the rank vector drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tol: 1e-9,
            max_iter: 100,
        }
    }
}

impl PageRankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must be in (0, 1), got {}",
                self.damping
            )));
        }
        if self.tol.is_nan() || self.tol < 0.0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig("tol must be >= 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PageRankVector(pub BTreeMap<EntityId, f64>);

impl PageRankVector {
    pub fn get(&self, id: EntityId) -> f64 {
        self.0.get(&id).copied().unwrap_or(0.0)
    }
}

impl MinerResult for PageRankVector {
    const FILE_NAME: &'static str = "PageRank.json";
}

/// Power iteration over the commit influence graph.
///
/// Each node spreads its rank uniformly over its out-neighbours; nodes
/// without out-edges spread theirs over all nodes. Every step computes
/// `r' = (1 - d) / N + d * (M^T r + dangling / N)`.
pub fn compute_pagerank(graph: &CommitInfluenceGraph, params: &PageRankParams) -> Result<PageRankVector> {
    params.validate()?;
    let nodes: Vec<EntityId> = graph
        .0
        .iter()
        .flat_map(|(from, to)| std::iter::once(*from).chain(to.iter().copied()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let index: BTreeMap<EntityId, usize> = nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (from, targets) in &graph.0 {
        let targets: BTreeSet<usize> = targets.iter().map(|t| index[t]).collect();
        out[index[from]] = targets.into_iter().collect();
    }

    let n = nodes.len() as f64;
    if out.iter().all(Vec::is_empty) {
        // Every node is dangling: the stationary vector is exactly uniform.
        return Ok(PageRankVector(nodes.into_iter().map(|id| (id, 1.0 / n)).collect()));
    }
    let d = params.damping;
    let mut rank = vec![1.0 / n; nodes.len()];
    let mut next = vec![0.0; nodes.len()];
    for _ in 0..params.max_iter {
        let dangling: f64 = out
            .iter()
            .zip(&rank)
            .filter(|(edges, _)| edges.is_empty())
            .map(|(_, r)| r)
            .sum();
        next.fill((1.0 - d) / n + d * dangling / n);
        for (src, edges) in out.iter().enumerate() {
            if edges.is_empty() {
                continue;
            }
            let share = d * rank[src] / edges.len() as f64;
            for &dst in edges {
                next[dst] += share;
            }
        }
        let delta: f64 = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < params.tol {
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    Ok(PageRankVector(
        nodes.into_iter().zip(rank.into_iter().map(|r| r / total)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(edges: &[(u32, &[u32])]) -> CommitInfluenceGraph {
        CommitInfluenceGraph(edges.iter().map(|(k, v)| (*k, v.to_vec())).collect())
    }

    #[test]
    fn edgeless_graph_is_uniform() {
        let pr = compute_pagerank(&graph(&[(0, &[]), (1, &[]), (2, &[]), (3, &[])]), &PageRankParams::default())
            .unwrap();
        for r in pr.0.values() {
            assert_eq!(*r, 0.25);
        }
        let nodes: Vec<(u32, &[u32])> = (0..7).map(|i| (i, &[][..])).collect();
        let pr = compute_pagerank(&graph(&nodes), &PageRankParams::default()).unwrap();
        assert!(pr.0.values().all(|r| *r == 1.0 / 7.0));
    }

    #[test]
    fn two_node_graph_matches_closed_form() {
        // b is dangling: r_a = (1-d)/2 + d*r_b/2 with r_a + r_b = 1,
        // so r_a = 0.5 / (1 + d/2).
        let d = 0.85;
        let expected_a = 0.5 / (1.0 + d / 2.0);
        let params = PageRankParams { damping: d, tol: 0.0, max_iter: 200 };
        let pr = compute_pagerank(&graph(&[(0, &[1])]), &params).unwrap();
        assert!((pr.get(0) - expected_a).abs() < 1e-9);
        assert!((pr.get(1) - (1.0 - expected_a)).abs() < 1e-9);
    }

    #[test]
    fn chain_sinks_accumulate_rank() {
        let pr = compute_pagerank(&graph(&[(0, &[1]), (1, &[2])]), &PageRankParams::default()).unwrap();
        assert!(pr.get(2) >= pr.get(1) && pr.get(1) >= pr.get(0));
    }

    #[test]
    fn empty_graph_is_an_error() {
        let err = compute_pagerank(&graph(&[]), &PageRankParams::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph));
    }

    #[test]
    fn invalid_damping_is_rejected() {
        let params = PageRankParams { damping: 1.0, ..Default::default() };
        assert!(compute_pagerank(&graph(&[(0, &[])]), &params).is_err());
    }

    proptest! {
        #[test]
        fn relabeling_nodes_does_not_change_ranks(
            edges in proptest::collection::vec((0u32..15, 0u32..15), 1..40),
            shift in 1u32..1000,
        ) {
            let mut g: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
            for (a, b) in edges.iter().filter(|(a, b)| a != b) {
                g.entry(*a).or_default().insert(*b);
            }
            prop_assume!(!g.is_empty());
            // Reverse the id order so nodes are enumerated differently.
            let relabel = |x: u32| shift + 100 - x;
            let original = CommitInfluenceGraph(g.iter().map(|(k, v)| (*k, v.iter().copied().collect())).collect());
            let relabeled = CommitInfluenceGraph(
                g.iter().map(|(k, v)| (relabel(*k), v.iter().map(|x| relabel(*x)).collect())).collect(),
            );
            let a = compute_pagerank(&original, &PageRankParams::default()).unwrap();
            let b = compute_pagerank(&relabeled, &PageRankParams::default()).unwrap();
            let sum: f64 = a.0.values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            for (id, r) in &a.0 {
                prop_assert!(*r >= 0.0);
                prop_assert!((r - b.get(relabel(*id))).abs() < 1e-12);
            }
        }
    }
}
