//! Weight-free selector: short solution edges are assumed worth keeping.

use crate::error::InvalidArgument;
use crate::instance::Instance;
use crate::solution::{solution_edges, Solution};

use super::decode::{MarkSet, MarkSource};

/// Marks the customer endpoints of the shortest `ceil(quantile * |E(S0)|)`
/// edges of `s0`, ties broken by endpoint indices.
pub fn heuristic_selector(inst: &Instance, s0: &Solution, quantile: f64) -> Result<MarkSet, InvalidArgument> {
    if !(0.0..=1.0).contains(&quantile) {
        return Err(InvalidArgument(format!("quantile {quantile} outside [0, 1]")));
    }
    let mut edges: Vec<_> = solution_edges(s0)
        .into_iter()
        .map(|(a, b)| (inst.distance(a, b), a, b))
        .collect();
    edges.sort_unstable();
    let take = (quantile * edges.len() as f64).ceil() as usize;
    let nodes = edges[..take.min(edges.len())].iter().flat_map(|&(_, a, b)| [a, b]);
    Ok(MarkSet::from_nodes(
        inst.num_nodes(),
        nodes,
        Some(quantile),
        MarkSource::Heuristic,
    ))
}
