//! Sparse input graph for the selector.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, NodeId, DEPOT};
use crate::knn::nearest_among;
use crate::scalar::Scalar;
use crate::solution::{solution_edges, Solution};

/// Neighbour count used when the caller does not choose one.
pub const DEFAULT_GRAPH_K: usize = 25;
/// Customers kept around the depot on large instances.
pub const MAX_GRAPH_CUSTOMERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    KnnNeighbor = 0,
    SolutionEdge = 1,
    SelfLoop = 2,
}

impl EdgeKind {
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphOptions {
    pub k: usize,
    /// Drop k-NN edges, keeping only E(S0) and self-loops.
    pub solution_edges_only: bool,
    pub max_customers: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_GRAPH_K,
            solution_edges_only: false,
            max_customers: MAX_GRAPH_CUSTOMERS,
        }
    }
}

/// Directed edges in CSR order: sorted by source, then target. Edge
/// `(i, j)` carries the message from `j` into `i`. Local index 0 is the
/// depot.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T> {
    /// Instance node behind each local index.
    pub nodes: Vec<NodeId>,
    /// `[n, 3]`: x, y scaled into `[0,1]` by the bounding box, and q/Q.
    pub node_features: Array2<T>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// Rounded distance over the largest edge distance.
    pub edge_distance: Vec<T>,
    pub edge_kind: Vec<EdgeKind>,
    pub s0_mask: Vec<bool>,
    /// `offsets[i]..offsets[i+1]` are the edges leaving local node `i`.
    pub offsets: Vec<usize>,
}

impl<T: Scalar> SparseGraph<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    /// Index of the directed edge `(i, j)`, if present.
    pub fn find_edge(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.offsets[i];
        let hi = self.offsets[i + 1];
        self.dst[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    /// Assembles a graph from unsorted directed edges. Duplicates are merged,
    /// keeping the highest-precedence kind (self-loop, then solution edge).
    pub fn from_parts(
        nodes: Vec<NodeId>,
        node_features: Array2<T>,
        mut edges: Vec<(usize, usize, EdgeKind, T)>,
    ) -> Self {
        let n = nodes.len();
        edges.sort_by(|a, b| {
            (a.0, a.1, std::cmp::Reverse(a.2.index())).cmp(&(b.0, b.1, std::cmp::Reverse(b.2.index())))
        });
        edges.dedup_by(|next, kept| next.0 == kept.0 && next.1 == kept.1);
        let mut offsets = vec![0; n + 1];
        for e in &edges {
            offsets[e.0 + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let s0_mask = edges.iter().map(|e| e.2 == EdgeKind::SolutionEdge).collect();
        Self {
            nodes,
            node_features,
            src: edges.iter().map(|e| e.0).collect(),
            dst: edges.iter().map(|e| e.1).collect(),
            edge_distance: edges.iter().map(|e| e.3).collect(),
            edge_kind: edges.iter().map(|e| e.2).collect(),
            s0_mask,
            offsets,
        }
    }
}

/// Customers kept in the graph: all of them, or the `limit` nearest to the
/// depot (ties by index).
pub fn retained_customers(inst: &Instance, limit: usize) -> Vec<NodeId> {
    let mut customers: Vec<NodeId> = inst.customers().collect();
    if customers.len() > limit {
        let key = |c: &NodeId| (inst.distance(DEPOT, *c), *c);
        customers.select_nth_unstable_by_key(limit, key);
        customers.truncate(limit);
        customers.sort_unstable();
    }
    customers
}

pub fn build_graph<T: Scalar>(inst: &Instance, s0: &Solution, k: usize) -> SparseGraph<T> {
    build_graph_with(
        inst,
        s0,
        &GraphOptions {
            k,
            ..GraphOptions::default()
        },
    )
}

/// Builds the selector graph: self-loops, E(S0) in both directions, and,
/// unless disabled, each node's `k` nearest retained nodes.
pub fn build_graph_with<T: Scalar>(inst: &Instance, s0: &Solution, opts: &GraphOptions) -> SparseGraph<T> {
    let mut nodes = vec![DEPOT];
    nodes.extend(retained_customers(inst, opts.max_customers));
    let n = nodes.len();
    let mut local = vec![usize::MAX; inst.num_nodes()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }

    let pts: Vec<_> = nodes.iter().map(|&v| inst.point(v)).collect();
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &pts {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let scale = (max_x - min_x).max(max_y - min_y);
    let norm = |v: f64, lo: f64| if scale > 0.0 { (v - lo) / scale } else { 0.0 };
    let cap = inst.capacity() as f64;
    let mut feats = Array2::<T>::zeros((n, 3));
    for (i, &v) in nodes.iter().enumerate() {
        feats[[i, 0]] = T::of(norm(pts[i].x, min_x));
        feats[[i, 1]] = T::of(norm(pts[i].y, min_y));
        feats[[i, 2]] = T::of(inst.demand(v) as f64 / cap);
    }

    let mut raw: Vec<(usize, usize, EdgeKind)> = (0..n).map(|i| (i, i, EdgeKind::SelfLoop)).collect();
    for (a, b) in solution_edges(s0) {
        let (la, lb) = (local[a], local[b]);
        if la != usize::MAX && lb != usize::MAX {
            raw.push((la, lb, EdgeKind::SolutionEdge));
            raw.push((lb, la, EdgeKind::SolutionEdge));
        }
    }
    if !opts.solution_edges_only && opts.k > 0 {
        let all: Vec<NodeId> = (0..n).collect();
        for (i, list) in nearest_among(&pts, &all, &all, opts.k).into_iter().enumerate() {
            raw.extend(list.into_iter().map(|j| (i, j, EdgeKind::KnnNeighbor)));
        }
    }

    let dist: Vec<i64> = raw.iter().map(|&(i, j, _)| inst.distance(nodes[i], nodes[j])).collect();
    let max_d = dist.iter().copied().max().unwrap_or(0);
    let edges = raw
        .into_iter()
        .zip(dist)
        .map(|((i, j, kind), d)| {
            let x = if max_d > 0 { d as f64 / max_d as f64 } else { 0.0 };
            (i, j, kind, T::of(x))
        })
        .collect();
    SparseGraph::from_parts(nodes, feats, edges)
}
