//! Repair operators: reinsert absent customers at their cheapest feasible
//! positions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::instance::{Cost, Instance, NodeId, DEPOT};
use crate::local_search::NeighborLists;
use crate::solution::{PartialSolution, Solution};

/// Which routes an insertion may consider.
#[derive(Debug, Clone, Copy)]
pub enum InsertionScope<'a> {
    /// Every route.
    Exhaustive,
    /// Only routes holding one of the customer's nearest neighbours.
    Granular(&'a NeighborLists),
}

/// Where to put a customer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    At { route: usize, pos: usize, delta: Cost },
    NewRoute { delta: Cost },
}

impl Placement {
    pub fn delta(&self) -> Cost {
        match *self {
            Placement::At { delta, .. } | Placement::NewRoute { delta } => delta,
        }
    }
}

fn candidate_routes(sol: &Solution, c: NodeId, scope: InsertionScope<'_>, buf: &mut Vec<usize>) {
    buf.clear();
    match scope {
        InsertionScope::Exhaustive => buf.extend(0..sol.num_routes()),
        InsertionScope::Granular(lists) => {
            buf.extend(lists.of(c).iter().filter_map(|&v| sol.route_of(v)));
            buf.sort_unstable();
            buf.dedup();
        }
    }
}

/// Cheapest feasible position inside route `r`, lowest position on ties.
fn best_in_route(inst: &Instance, sol: &Solution, c: NodeId, r: usize) -> Option<(usize, Cost)> {
    let route = sol.route(r);
    if route.load() + inst.demand(c) > inst.capacity() {
        return None;
    }
    let seq = route.customers();
    let mut prev = DEPOT;
    let mut best: Option<(usize, Cost)> = None;
    for pos in 0..=seq.len() {
        let next = seq.get(pos).copied().unwrap_or(DEPOT);
        let delta = inst.distance(prev, c) + inst.distance(c, next) - inst.distance(prev, next);
        if best.is_none_or(|(_, d)| delta < d) {
            best = Some((pos, delta));
        }
        prev = next;
    }
    best
}

/// Per-route best options for `c` in scan order, then the fresh route.
fn options(
    inst: &Instance,
    sol: &Solution,
    c: NodeId,
    scope: InsertionScope<'_>,
    buf: &mut Vec<usize>,
    out: &mut Vec<Placement>,
) {
    out.clear();
    candidate_routes(sol, c, scope, buf);
    for &r in buf.iter() {
        if let Some((pos, delta)) = best_in_route(inst, sol, c, r) {
            out.push(Placement::At { route: r, pos, delta });
        }
    }
    out.push(Placement::NewRoute {
        delta: 2 * inst.distance(DEPOT, c),
    });
}

/// First option with the minimum delta; the fresh route only wins when
/// strictly cheaper than every existing position.
fn cheapest(options: &[Placement]) -> Placement {
    let mut best = options[0];
    for o in &options[1..] {
        if o.delta() < best.delta() {
            best = *o;
        }
    }
    best
}

fn apply(inst: &Instance, sol: &mut Solution, c: NodeId, p: Placement) {
    match p {
        Placement::At { route, pos, .. } => sol.insert_customer(inst, c, route, pos),
        Placement::NewRoute { .. } => {
            sol.push_route(inst, vec![c]);
        }
    }
}

/// Cheapest feasible placement of `c` in `sol` under `scope`.
pub fn cheapest_insertion(inst: &Instance, sol: &Solution, c: NodeId, scope: InsertionScope<'_>) -> Placement {
    let (mut buf, mut out) = (Vec::new(), Vec::new());
    options(inst, sol, c, scope, &mut buf, &mut out);
    cheapest(&out)
}

/// Inserts absent customers in random order, each at its cheapest
/// feasible position or in a new route. Empty routes are pruned.
pub fn repair_greedy<R: Rng + ?Sized>(
    inst: &Instance,
    part: PartialSolution,
    scope: InsertionScope<'_>,
    rng: &mut R,
) -> Solution {
    let PartialSolution {
        mut solution,
        mut absent,
    } = part;
    absent.shuffle(rng);
    let (mut buf, mut out) = (Vec::new(), Vec::new());
    for c in absent {
        options(inst, &solution, c, scope, &mut buf, &mut out);
        let p = cheapest(&out);
        apply(inst, &mut solution, c, p);
    }
    solution.prune_empty_routes();
    solution
}

/// Regret-2 insertion: repeatedly places the customer whose best option
/// beats its second-best route option by the widest margin. Customers with
/// a single option go first. Ties fall to the smaller best delta, then the
/// smaller customer index.
pub fn repair_regret2(inst: &Instance, part: PartialSolution, scope: InsertionScope<'_>) -> Solution {
    let PartialSolution { mut solution, absent } = part;
    let mut pending = absent;
    pending.sort_unstable();
    let (mut buf, mut out) = (Vec::new(), Vec::new());
    while !pending.is_empty() {
        let mut pick: Option<(usize, Cost, Cost, Placement)> = None;
        for (i, &c) in pending.iter().enumerate() {
            options(inst, &solution, c, scope, &mut buf, &mut out);
            let best = cheapest(&out);
            let second = out.iter().filter(|o| **o != best).map(|o| o.delta()).min();
            let regret = second.map_or(Cost::MAX, |s| s - best.delta());
            let better = match pick {
                None => true,
                Some((_, r, d, _)) => regret > r || (regret == r && best.delta() < d),
            };
            if better {
                pick = Some((i, regret, best.delta(), best));
            }
        }
        let (i, _, _, placement) = pick.expect("pending is non-empty");
        let c = pending.remove(i);
        apply(inst, &mut solution, c, placement);
    }
    solution.prune_empty_routes();
    solution
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Point;
    use crate::solution::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid_instance(capacity: u64, demand: u64) -> Instance {
        let pts = [(10.0, 0.0), (20.0, 0.0), (20.0, 10.0), (0.0, 15.0), (30.0, 5.0)];
        Instance::new(
            "g",
            Point::new(0.0, 0.0),
            pts.iter().map(|&(x, y)| (Point::new(x, y), demand)).collect(),
            capacity,
        )
        .unwrap()
    }

    #[test]
    fn empty_absent_set_is_identity() {
        let inst = grid_instance(10, 1);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3], vec![4, 5]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let part = PartialSolution {
            solution: sol.clone(),
            absent: vec![],
        };
        assert_eq!(
            repair_greedy(&inst, part.clone(), InsertionScope::Exhaustive, &mut rng),
            sol
        );
        assert_eq!(repair_regret2(&inst, part, InsertionScope::Exhaustive), sol);
    }

    #[test]
    fn single_insertion_matches_brute_force() {
        let inst = grid_instance(10, 1);
        let mut sol = Solution::from_routes(&inst, vec![vec![1, 2, 5, 3, 4]]);
        sol.remove_customer(&inst, 5);
        let brute = (0..=4)
            .map(|pos| {
                let mut s = sol.clone();
                s.insert_customer(&inst, 5, 0, pos);
                s.cost()
            })
            .min()
            .unwrap()
            .min(sol.cost() + 2 * inst.distance(0, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let part = PartialSolution {
            solution: sol,
            absent: vec![5],
        };
        let out = repair_greedy(&inst, part.clone(), InsertionScope::Exhaustive, &mut rng);
        assert_eq!(out.cost(), brute);
        // regret degenerates to greedy with one customer
        assert_eq!(repair_regret2(&inst, part, InsertionScope::Exhaustive), out);
    }

    #[test]
    fn forced_singletons() {
        let inst = grid_instance(4, 4);
        let sol = Solution::from_routes(&inst, vec![vec![1], vec![2]]);
        let part = PartialSolution {
            solution: sol,
            absent: vec![3, 4, 5],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = repair_greedy(&inst, part.clone(), InsertionScope::Exhaustive, &mut rng);
        assert_eq!(out.num_routes(), 5);
        assert!(validate(&inst, &out).is_empty());
        let out = repair_regret2(&inst, part, InsertionScope::Exhaustive);
        assert_eq!(out.num_routes(), 5);
        assert!(validate(&inst, &out).is_empty());
    }
}
