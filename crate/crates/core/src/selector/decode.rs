//! Edge probabilities to node marks.

use serde::{Deserialize, Serialize};

use crate::error::GuidanceError;
use crate::instance::{NodeId, DEPOT};
use crate::scalar::Scalar;

use super::graph::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkSource {
    Gnn,
    Heuristic,
    Null,
}

/// Customers the destroy phase should keep in place. The depot is never
/// marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkSet {
    marked: Vec<NodeId>,
    flags: Vec<bool>,
    threshold: Option<f64>,
    source: MarkSource,
}

impl MarkSet {
    pub fn empty(num_nodes: usize, source: MarkSource) -> Self {
        Self {
            marked: Vec::new(),
            flags: vec![false; num_nodes],
            threshold: None,
            source,
        }
    }

    /// Marks from an arbitrary node list; the depot and duplicates are dropped.
    pub fn from_nodes(
        num_nodes: usize,
        nodes: impl IntoIterator<Item = NodeId>,
        threshold: Option<f64>,
        source: MarkSource,
    ) -> Self {
        let mut flags = vec![false; num_nodes];
        for c in nodes {
            if c != DEPOT {
                flags[c] = true;
            }
        }
        let marked = (0..num_nodes).filter(|&c| flags[c]).collect();
        Self {
            marked,
            flags,
            threshold,
            source,
        }
    }

    /// Marked customers, ascending.
    pub fn marked(&self) -> &[NodeId] {
        &self.marked
    }

    #[inline]
    pub fn is_marked(&self, c: NodeId) -> bool {
        self.flags.get(c).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.marked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marked.is_empty()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn source(&self) -> MarkSource {
        self.source
    }

    pub fn is_subset_of(&self, other: &MarkSet) -> bool {
        self.marked.iter().all(|&c| other.is_marked(c))
    }
}

/// Undirected E(S0) edges of `g` as `(edge, reverse edge)` index pairs,
/// listed once with the smaller local endpoint first.
pub fn solution_edge_pairs<T: Scalar>(g: &SparseGraph<T>) -> Vec<(usize, usize)> {
    (0..g.num_edges())
        .filter(|&e| g.s0_mask[e] && g.src[e] < g.dst[e])
        .map(|e| (e, g.find_edge(g.dst[e], g.src[e]).unwrap_or(e)))
        .collect()
}

/// Marks both customer endpoints of every E(S0) edge whose mean directed
/// probability exceeds `t`.
pub fn decode_marks<T: Scalar>(probs: &[T], g: &SparseGraph<T>, t: f64) -> Result<MarkSet, GuidanceError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GuidanceError::Threshold(t));
    }
    assert_eq!(probs.len(), g.num_edges(), "one probability per directed edge");
    let num_nodes = g.nodes.iter().copied().max().map_or(1, |m| m + 1);
    let mut chosen = Vec::new();
    for (e, r) in solution_edge_pairs(g) {
        let p = 0.5 * (probs[e].to_f64_lossy() + probs[r].to_f64_lossy());
        if p > t {
            chosen.push(g.nodes[g.src[e]]);
            chosen.push(g.nodes[g.dst[e]]);
        }
    }
    Ok(MarkSet::from_nodes(num_nodes, chosen, Some(t), MarkSource::Gnn))
}
