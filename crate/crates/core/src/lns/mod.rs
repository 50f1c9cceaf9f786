//! Destroy-repair loop with adaptive string intensity and simulated
//! annealing acceptance.

pub mod destroy;
pub mod engine;
pub mod repair;
pub mod shake;

pub use destroy::{destroy_random, destroy_string, Destroyed};
pub use engine::{run_lns, DestroyKind, IterationRecord, LnsConfig, RepairKind, RunTrace, MIN_REMOVE_CAP};
pub use repair::{cheapest_insertion, repair_greedy, repair_regret2, InsertionScope, Placement};
pub use shake::{update_omega, Outcome, ShakeState};
