//! The destroy-repair loop.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::InvalidArgument;
use crate::guidance::Guidance;
use crate::instance::{Cost, Instance, NodeId, MATRIX_CACHE_LIMIT};
use crate::local_search::{improve_routes, NeighborLists, DEFAULT_NEIGHBORS};
use crate::selector::MarkSet;
use crate::solution::Solution;

use super::destroy::{destroy_random, destroy_string, Destroyed};
use super::repair::{repair_greedy, repair_regret2, InsertionScope};
use super::shake::{update_omega, Outcome, ShakeState};

/// Floor on the random-removal cap. With a cap of one, removal and
/// greedy reinsertion can never worsen a solution, so the shaking
/// intensity never grows and small instances stall at the first local
/// optimum.
pub const MIN_REMOVE_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DestroyKind {
    Random,
    String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RepairKind {
    #[default]
    Greedy,
    Regret2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnsConfig {
    /// Iteration budget; zero returns the start solution.
    pub max_iterations: u64,
    pub time_limit: Option<Duration>,
    /// Defaults to 0.1% of the start cost.
    pub sa_initial_temp: Option<f64>,
    /// Defaults to 10^-4 of the start cost.
    pub sa_final_temp: Option<f64>,
    /// `destroy_random` removes up to `ceil(fraction * N)` customers, but
    /// never caps below `min(MIN_REMOVE_CAP, N)` ...
    pub destroy_fraction: f64,
    /// ... capped at this many.
    pub max_remove: usize,
    /// Probability of choosing the string operator.
    pub string_probability: f64,
    pub repair: RepairKind,
    pub neighbors: usize,
    pub seed: u64,
    /// Keep the removed customers of every iteration in the trace.
    pub record_removed: bool,
}

impl Default for LnsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            time_limit: None,
            sa_initial_temp: None,
            sa_final_temp: None,
            destroy_fraction: 0.1,
            max_remove: 100,
            string_probability: 0.5,
            repair: RepairKind::Greedy,
            neighbors: DEFAULT_NEIGHBORS,
            seed: 0,
            record_removed: false,
        }
    }
}

impl LnsConfig {
    pub fn with_iterations(iterations: u64, seed: u64) -> Self {
        Self {
            max_iterations: iterations,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), InvalidArgument> {
        let bad = |m: String| Err(InvalidArgument(m));
        for (name, t) in [("initial", self.sa_initial_temp), ("final", self.sa_final_temp)] {
            if let Some(t) = t {
                if !(t.is_finite() && t > 0.0) {
                    return bad(format!("{name} temperature must be positive, got {t}"));
                }
            }
        }
        if let (Some(t0), Some(tf)) = (self.sa_initial_temp, self.sa_final_temp) {
            if tf > t0 {
                return bad(format!("final temperature {tf} exceeds initial {t0}"));
            }
        }
        if !(self.destroy_fraction > 0.0 && self.destroy_fraction <= 1.0) {
            return bad(format!("destroy fraction {} outside (0, 1]", self.destroy_fraction));
        }
        if self.max_remove == 0 {
            return bad("max_remove must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.string_probability) {
            return bad(format!("string probability {} outside [0, 1]", self.string_probability));
        }
        if self.neighbors == 0 {
            return bad("neighbour list length must be at least 1".into());
        }
        Ok(())
    }

    fn temperatures(&self, start_cost: Cost) -> (f64, f64) {
        let base = (start_cost as f64).max(1.0);
        let t0 = self.sa_initial_temp.unwrap_or(1e-3 * base);
        let tf = self.sa_final_temp.unwrap_or(1e-4 * base).min(t0);
        (t0, tf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub current: Cost,
    pub best: Cost,
    pub accepted: bool,
    pub removed: usize,
    pub temperature: f64,
    pub destroy: DestroyKind,
    pub shortfall: usize,
    /// Removed customers that carried a mark.
    pub removed_marked: usize,
    /// Aspiration draws made for marked customers in this iteration.
    pub aspiration_draws: usize,
    pub aspiration_admits: usize,
    pub removed_customers: Option<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub start_cost: Cost,
    pub records: Vec<IterationRecord>,
    pub best_cost: Cost,
    /// Number of times the selector was invoked.
    pub remarks: usize,
    /// Marks in force at the end of the run, if guided.
    pub final_marks: Option<MarkSet>,
    #[serde(skip)]
    pub elapsed: Duration,
    #[serde(skip)]
    pub guidance_time: Duration,
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,current,best,accepted,removed,temperature\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration, r.current, r.best, r.accepted as u8, r.removed, r.temperature
            );
        }
        out
    }

    /// Records with wall-clock dependent fields left out, for determinism checks.
    pub fn same_search(&self, other: &RunTrace) -> bool {
        self.start_cost == other.start_cost && self.best_cost == other.best_cost && self.records == other.records
    }
}

/// Per-call aspiration mask: unmarked customers are allowed without a draw,
/// marked ones are allowed iff `R > p` for a fresh `R ~ U[0,1)`.
struct AllowedMask {
    allowed: Vec<bool>,
    count: usize,
    draws: usize,
    admits: usize,
}

impl AllowedMask {
    fn new(num_nodes: usize) -> Self {
        Self {
            allowed: vec![true; num_nodes],
            count: num_nodes - 1,
            draws: 0,
            admits: 0,
        }
    }

    fn redraw<R: Rng + ?Sized>(&mut self, marks: Option<&MarkSet>, p: f64, rng: &mut R) {
        self.draws = 0;
        self.admits = 0;
        self.count = self.allowed.len() - 1;
        let Some(marks) = marks else { return };
        for &c in marks.marked() {
            let ok = rng.gen::<f64>() > p;
            self.allowed[c] = ok;
            self.draws += 1;
            if ok {
                self.admits += 1;
            } else {
                self.count -= 1;
            }
        }
    }

    fn reset(&mut self, marks: Option<&MarkSet>) {
        if let Some(marks) = marks {
            for &c in marks.marked() {
                self.allowed[c] = true;
            }
        }
    }
}

/// Runs the destroy-repair loop from `start` and returns the best solution
/// found with the run trace. `guidance` restricts which customers the
/// destroy operators may remove; `None` is the unguided baseline.
///
/// # Panics
/// If `cfg` fails [`LnsConfig::validate`].
pub fn run_lns(
    inst: &Instance,
    start: &Solution,
    cfg: &LnsConfig,
    guidance: Option<&Guidance>,
) -> (Solution, RunTrace) {
    if let Err(e) = cfg.validate() {
        panic!("{e}");
    }
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = start.clone();
    current.prune_empty_routes();
    let mut best = current.clone();
    let mut trace = RunTrace {
        start_cost: current.cost(),
        records: Vec::with_capacity(cfg.max_iterations.min(1 << 20) as usize),
        best_cost: best.cost(),
        remarks: 0,
        final_marks: None,
        elapsed: Duration::ZERO,
        guidance_time: Duration::ZERO,
    };
    let n = inst.num_customers();
    if cfg.max_iterations == 0 || n == 0 {
        trace.elapsed = clock.elapsed();
        return (best, trace);
    }

    let lists = NeighborLists::new(inst, cfg.neighbors);
    let scope = if inst.num_nodes() > MATRIX_CACHE_LIMIT {
        InsertionScope::Granular(&lists)
    } else {
        InsertionScope::Exhaustive
    };
    let mut shake = ShakeState::for_solution(inst, &current);
    let (t0, tf) = cfg.temperatures(current.cost());
    let remove_cap = ((cfg.destroy_fraction * n as f64).ceil() as usize)
        .max(MIN_REMOVE_CAP.min(n))
        .min(cfg.max_remove);
    let aspiration = guidance.map_or(0.0, |g| g.config().aspiration);

    let mut marks: Option<MarkSet> = None;
    let mut mask = AllowedMask::new(inst.num_nodes());
    let mut last_new_best = false;

    for iteration in 0..cfg.max_iterations {
        let progress = {
            let by_iter = iteration as f64 / cfg.max_iterations as f64;
            match cfg.time_limit {
                Some(limit) => {
                    let elapsed = clock.elapsed();
                    if elapsed >= limit {
                        break;
                    }
                    by_iter.max(elapsed.as_secs_f64() / limit.as_secs_f64())
                }
                None => by_iter,
            }
        };
        let temperature = t0 * (tf / t0).powf(progress);

        if let Some(g) = guidance {
            if iteration == 0 || g.should_remark(iteration, last_new_best) {
                let t = Instant::now();
                marks = Some(g.mark(inst, &current));
                trace.guidance_time += t.elapsed();
                trace.remarks += 1;
            }
        }

        let use_string = rng.gen_bool(cfg.string_probability);
        mask.redraw(marks.as_ref(), aspiration, &mut rng);
        let allowed = |c: NodeId| mask.allowed[c];
        let (kind, destroyed) = if use_string {
            let seed = pick_allowed(n, mask.count, &allowed, &mut rng);
            let d = match seed {
                Some(s) => destroy_string(inst, current.clone(), s, &shake, &lists, allowed, &mut rng)
                    .expect("seed drawn from the allowed set"),
                None => identity(&current, shake.omega(1) as usize),
            };
            (DestroyKind::String, d)
        } else {
            let n_remove = rng.gen_range(1..=remove_cap);
            (
                DestroyKind::Random,
                destroy_random(inst, current.clone(), n_remove, allowed, &mut rng),
            )
        };
        debug_assert!(destroyed.partial.absent.iter().all(|&c| mask.allowed[c]));
        mask.reset(marks.as_ref());

        let absent = destroyed.partial.absent.clone();
        let removed_marked = marks
            .as_ref()
            .map_or(0, |m| absent.iter().filter(|&&c| m.is_marked(c)).count());
        let witnesses = route_witnesses(&current, &absent);

        let mut candidate = match cfg.repair {
            RepairKind::Greedy => repair_greedy(inst, destroyed.partial, scope, &mut rng),
            RepairKind::Regret2 => repair_regret2(inst, destroyed.partial, scope),
        };
        let mut touched: Vec<usize> = absent
            .iter()
            .chain(witnesses.iter())
            .filter_map(|&c| candidate.route_of(c))
            .collect();
        touched.sort_unstable();
        touched.dedup();
        improve_routes(inst, &mut candidate, &lists, &touched, None);

        let delta = candidate.cost() - current.cost();
        update_omega(&mut shake, &absent, Outcome::from_delta(delta));
        let accepted = delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / temperature).exp();
        last_new_best = false;
        if accepted {
            current = candidate;
            #[cfg(debug_assertions)]
            {
                let violations = crate::solution::validate(inst, &current);
                debug_assert!(violations.is_empty(), "infeasible accepted solution: {violations:?}");
            }
            if current.cost() < best.cost() {
                best = current.clone();
                last_new_best = true;
            }
        }
        trace.records.push(IterationRecord {
            iteration,
            current: current.cost(),
            best: best.cost(),
            accepted,
            removed: absent.len(),
            temperature,
            destroy: kind,
            shortfall: destroyed.shortfall,
            removed_marked,
            aspiration_draws: mask.draws,
            aspiration_admits: mask.admits,
            removed_customers: cfg.record_removed.then_some(absent),
        });
    }

    trace.best_cost = best.cost();
    trace.final_marks = marks;
    trace.elapsed = clock.elapsed();
    (best, trace)
}

fn identity(sol: &Solution, requested: usize) -> Destroyed {
    Destroyed {
        partial: crate::solution::PartialSolution {
            solution: sol.clone(),
            absent: Vec::new(),
        },
        requested,
        shortfall: requested,
    }
}

/// Uniform draw among allowed customers by rejection; `None` when none is
/// allowed. With every customer allowed this is a single uniform draw.
fn pick_allowed<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    allowed: &impl Fn(NodeId) -> bool,
    rng: &mut R,
) -> Option<NodeId> {
    if count == 0 {
        return None;
    }
    loop {
        let c = rng.gen_range(1..=n);
        if allowed(c) {
            return Some(c);
        }
    }
}

/// For each route that loses a customer, one customer staying in it, so
/// the route can be found again after repair reindexes routes.
fn route_witnesses(before: &Solution, absent: &[NodeId]) -> Vec<NodeId> {
    let gone: HashSet<NodeId> = absent.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &c in absent {
        let Some(r) = before.route_of(c) else { continue };
        if seen.insert(r) {
            if let Some(&w) = before.route(r).customers().iter().find(|v| !gone.contains(v)) {
                out.push(w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::clarke_wright;
    use crate::instance::{generate_instance, DepotMode, GeneratorSpec};
    use crate::solution::{recompute_cost, validate};

    fn inst(n: usize, seed: u64) -> Instance {
        generate_instance(&GeneratorSpec {
            seed,
            customers: n,
            depot_mode: DepotMode::Central,
            demand_min: 1,
            demand_max: 10,
            capacity: 30,
        })
        .unwrap()
    }

    #[test]
    fn zero_iterations_returns_start() {
        let inst = inst(20, 1);
        let start = clarke_wright(&inst);
        let (best, trace) = run_lns(&inst, &start, &LnsConfig::with_iterations(0, 0), None);
        assert_eq!(best, start);
        assert!(trace.records.is_empty());
    }

    #[test]
    fn best_is_monotone_and_feasible() {
        let inst = inst(40, 2);
        let start = clarke_wright(&inst);
        let (best, trace) = run_lns(&inst, &start, &LnsConfig::with_iterations(500, 3), None);
        assert!(validate(&inst, &best).is_empty());
        assert_eq!(recompute_cost(&inst, &best), best.cost());
        assert!(best.cost() <= start.cost());
        assert!(trace.records.windows(2).all(|w| w[1].best <= w[0].best));
        assert_eq!(trace.records.last().unwrap().best, best.cost());
    }

    #[test]
    fn deterministic_for_seed() {
        let inst = inst(30, 4);
        let start = clarke_wright(&inst);
        let cfg = LnsConfig::with_iterations(300, 11);
        let (a, ta) = run_lns(&inst, &start, &cfg, None);
        let (b, tb) = run_lns(&inst, &start, &cfg, None);
        assert_eq!(a, b);
        assert!(ta.same_search(&tb));
    }

    #[test]
    fn regret_repair_runs() {
        let inst = inst(25, 5);
        let start = clarke_wright(&inst);
        let cfg = LnsConfig {
            repair: RepairKind::Regret2,
            ..LnsConfig::with_iterations(200, 0)
        };
        let (best, _) = run_lns(&inst, &start, &cfg, None);
        assert!(validate(&inst, &best).is_empty());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let inst = inst(10, 6);
        let start = clarke_wright(&inst);
        let (_, trace) = run_lns(&inst, &start, &LnsConfig::with_iterations(5, 0), None);
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("iteration,current,best,accepted,removed,temperature"));
    }

    #[test]
    fn rejects_inverted_temperatures() {
        let cfg = LnsConfig {
            sa_initial_temp: Some(1.0),
            sa_final_temp: Some(2.0),
            ..LnsConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
