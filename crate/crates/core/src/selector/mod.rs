//! The node selector: graph construction, network inference, and mark
//! decoding, plus a weight-free heuristic.

pub mod decode;
pub mod forward;
pub mod graph;
pub mod heuristic;
pub mod model;
pub mod weights;

pub use decode::{decode_marks, MarkSet, MarkSource};
pub use forward::{edge_probabilities, forward, gate_sums, gates, ForwardOutput};
pub use graph::{build_graph, build_graph_with, EdgeKind, GraphOptions, SparseGraph};
pub use heuristic::heuristic_selector;
pub use model::{BatchNorm, ConvLayer, Linear, SelectorModel};
pub use weights::{load_weights, parse_weights, save_weights};
