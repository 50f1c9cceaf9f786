//! Large neighbourhood search for the capacitated vehicle routing problem
//! with a learned destroy-phase selector.
//!
//! A graph network scores the edges of an initial solution; endpoints of
//! confidently kept edges are marked, and the LNS destroy operators skip
//! marked customers unless a randomized aspiration admits them.
//!
//! Cost accounting is integer throughout. The selector network is generic
//! over the float type; [`SelectorModelF32`] is what the solver runs.

pub mod bench;
pub mod bks;
pub mod construction;
pub mod error;
pub mod guidance;
pub mod instance;
pub mod knn;
pub mod lns;
pub mod local_search;
pub mod scalar;
pub mod selector;
pub mod solution;

pub use bks::BksRegistry;
pub use construction::{clarke_wright, nearest_neighbor, Constructor};
pub use guidance::{Guidance, GuidanceConfig, RemarkPolicy, SelectorKind};
pub use instance::{generate_instance, parse_instance, Cost, DepotMode, GeneratorSpec, Instance, NodeId};
pub use lns::{run_lns, LnsConfig, RunTrace};
pub use local_search::{run_local_search, NeighborLists};
pub use scalar::Scalar;
pub use selector::{MarkSet, SelectorModel, SparseGraph};
pub use solution::{gap, recompute_cost, validate, PartialSolution, Route, Solution};

pub type SelectorModelF32 = SelectorModel<f32>;
pub type SelectorModelF64 = SelectorModel<f64>;
pub type SparseGraphF32 = SparseGraph<f32>;
pub type SparseGraphF64 = SparseGraph<f64>;
