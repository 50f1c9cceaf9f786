//! Intra- and inter-route improvement: 2-opt, relocate and swap, applied
//! first-improvement over granular neighbour lists.

use crate::instance::{Cost, Instance, NodeId, DEPOT};
use crate::knn::nearest_customers;
use crate::solution::{Route, Solution};

/// Default neighbour list length.
pub const DEFAULT_NEIGHBORS: usize = 10;

/// For each node, its nearest customers ascending by distance. Lists
/// exclude the node itself and the depot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborLists {
    k: usize,
    lists: Vec<Vec<NodeId>>,
}

impl NeighborLists {
    pub fn new(inst: &Instance, k: usize) -> Self {
        Self {
            k,
            lists: nearest_customers(inst, k),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn of(&self, node: NodeId) -> &[NodeId] {
        &self.lists[node]
    }
}

/// Tour position `p` of a route: 0 and `len + 1` are the depot.
#[inline]
fn tour_node(seq: &[NodeId], p: usize) -> NodeId {
    if p == 0 || p > seq.len() {
        DEPOT
    } else {
        seq[p - 1]
    }
}

/// Finds the first improving 2-opt reversal in `seq` scanning from `start_a`.
/// Returns customer positions `(i, j)` to reverse and the cost delta.
fn find_two_opt(inst: &Instance, seq: &[NodeId], start_a: usize) -> Option<(usize, usize, Cost)> {
    let n = seq.len();
    if n < 2 {
        return None;
    }
    for a in start_a..n.saturating_sub(1) {
        let ta = tour_node(seq, a);
        let ta1 = tour_node(seq, a + 1);
        let d_a = inst.distance(ta, ta1);
        for b in (a + 2)..=n {
            let tb = tour_node(seq, b);
            let tb1 = tour_node(seq, b + 1);
            let delta = inst.distance(ta, tb) + inst.distance(ta1, tb1) - d_a - inst.distance(tb, tb1);
            if delta < 0 {
                return Some((a, b - 1, delta));
            }
        }
    }
    None
}

/// 2-opt on a single route until no improving reversal remains.
pub fn two_opt(inst: &Instance, route: &Route) -> Route {
    let mut seq = route.customers().to_vec();
    while let Some((i, j, _)) = find_two_opt(inst, &seq, 0) {
        seq[i..=j].reverse();
    }
    let out = Route::new(inst, seq);
    debug_assert!(out.cost() <= route.cost());
    out
}

/// 2-opt applied in place to route `r` of `sol`; returns the moves made.
fn two_opt_in_place(inst: &Instance, sol: &mut Solution, r: usize, trace: &mut Option<&mut Vec<Cost>>) -> usize {
    let mut moves = 0;
    loop {
        let Some((i, j, delta)) = find_two_opt(inst, sol.route(r).customers(), 0) else {
            break;
        };
        sol.reverse_segment(r, i, j, delta);
        moves += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(sol.cost());
        }
    }
    moves
}

/// Best strictly improving relocation of `u` next to one of its neighbours.
fn best_relocation_of(
    inst: &Instance,
    sol: &Solution,
    lists: &NeighborLists,
    u: NodeId,
) -> Option<(usize, usize, Cost)> {
    let ru = sol.route_of(u)?;
    let pu = sol.position_of(u)?;
    let removal = sol.removal_delta(inst, ru, pu);
    let q = inst.demand(u);
    for &v in lists.of(u) {
        let Some(rv) = sol.route_of(v) else { continue };
        if rv == ru || sol.route(rv).load() + q > inst.capacity() {
            continue;
        }
        let pv = sol.position_of(v).expect("routed");
        for pos in [pv, pv + 1] {
            let delta = removal + sol.insertion_delta(inst, u, rv, pos);
            if delta < 0 {
                return Some((rv, pos, delta));
            }
        }
    }
    None
}

/// Moves single customers to another route next to a neighbour while that
/// strictly lowers the cost. Returns the number of moves applied.
pub fn relocate(inst: &Instance, sol: &mut Solution, lists: &NeighborLists) -> usize {
    let customers: Vec<NodeId> = inst.customers().collect();
    let moves = relocate_from(inst, sol, lists, &customers, &mut None, &mut |_| {});
    sol.prune_empty_routes();
    moves
}

fn relocate_from(
    inst: &Instance,
    sol: &mut Solution,
    lists: &NeighborLists,
    candidates: &[NodeId],
    trace: &mut Option<&mut Vec<Cost>>,
    touched: &mut dyn FnMut(usize),
) -> usize {
    let mut moves = 0;
    for &u in candidates {
        let Some(ru) = sol.route_of(u) else { continue };
        if let Some((rv, pos, delta)) = best_relocation_of(inst, sol, lists, u) {
            let before = sol.cost();
            sol.remove_customer(inst, u);
            sol.insert_customer(inst, u, rv, pos);
            debug_assert_eq!(sol.cost(), before + delta);
            touched(ru);
            touched(rv);
            moves += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(sol.cost());
            }
        }
    }
    moves
}

#[inline]
fn swap_delta(inst: &Instance, sol: &Solution, u: NodeId, v: NodeId) -> Option<(Cost, Cost)> {
    let (ru, pu) = (sol.route_of(u)?, sol.position_of(u)?);
    let (rv, pv) = (sol.route_of(v)?, sol.position_of(v)?);
    if ru == rv {
        return None;
    }
    let (a, b) = (sol.route(ru), sol.route(rv));
    let (qu, qv) = (inst.demand(u), inst.demand(v));
    if a.load() - qu + qv > inst.capacity() || b.load() - qv + qu > inst.capacity() {
        return None;
    }
    let (ua, ub) = (a.pred(pu), a.succ(pu));
    let (va, vb) = (b.pred(pv), b.succ(pv));
    let du = inst.distance(ua, v) + inst.distance(v, ub) - inst.distance(ua, u) - inst.distance(u, ub);
    let dv = inst.distance(va, u) + inst.distance(u, vb) - inst.distance(va, v) - inst.distance(v, vb);
    Some((du, dv))
}

/// Exchanges pairs of customers in different routes while that strictly
/// lowers the cost. Returns the number of moves applied.
pub fn swap(inst: &Instance, sol: &mut Solution, lists: &NeighborLists) -> usize {
    let customers: Vec<NodeId> = inst.customers().collect();
    swap_from(inst, sol, lists, &customers, &mut None, &mut |_| {})
}

fn swap_from(
    inst: &Instance,
    sol: &mut Solution,
    lists: &NeighborLists,
    candidates: &[NodeId],
    trace: &mut Option<&mut Vec<Cost>>,
    touched: &mut dyn FnMut(usize),
) -> usize {
    let mut moves = 0;
    for &u in candidates {
        if !sol.is_routed(u) {
            continue;
        }
        for &v in lists.of(u) {
            let Some((du, dv)) = swap_delta(inst, sol, u, v) else {
                continue;
            };
            if du + dv < 0 {
                let (ru, rv) = (sol.route_of(u).unwrap(), sol.route_of(v).unwrap());
                sol.exchange(inst, u, v, du, dv);
                touched(ru);
                touched(rv);
                moves += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(sol.cost());
                }
                break;
            }
        }
    }
    moves
}

/// Summary of a local search call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalSearchStats {
    pub moves: usize,
    pub initial_cost: Cost,
    pub final_cost: Cost,
}

/// Runs 2-opt, relocate and swap over the whole solution until none of
/// them finds an improving move. Empty routes are pruned.
pub fn run_local_search(inst: &Instance, sol: &mut Solution, lists: &NeighborLists) -> LocalSearchStats {
    let all: Vec<usize> = (0..sol.num_routes()).collect();
    improve_routes(inst, sol, lists, &all, None)
}

/// As [`run_local_search`], additionally recording the cost after every
/// applied move.
pub fn run_local_search_traced(
    inst: &Instance,
    sol: &mut Solution,
    lists: &NeighborLists,
    trace: &mut Vec<Cost>,
) -> LocalSearchStats {
    let all: Vec<usize> = (0..sol.num_routes()).collect();
    improve_routes(inst, sol, lists, &all, Some(trace))
}

/// Local search restricted to moves that start from the given routes;
/// routes changed by a move join the active set. With every route active
/// the result is a fixpoint of all three operators.
pub fn improve_routes(
    inst: &Instance,
    sol: &mut Solution,
    lists: &NeighborLists,
    routes: &[usize],
    trace: Option<&mut Vec<Cost>>,
) -> LocalSearchStats {
    let mut trace = trace;
    let initial_cost = sol.cost();
    let mut active = vec![false; sol.num_routes()];
    let mut queue: Vec<usize> = Vec::new();
    for &r in routes {
        if r < active.len() && !active[r] {
            active[r] = true;
            queue.push(r);
        }
    }
    let mut moves = 0;
    while !queue.is_empty() {
        let batch = std::mem::take(&mut queue);
        for &r in &batch {
            active[r] = false;
        }
        let mut next: Vec<usize> = Vec::new();
        let mut mark = |r: usize| next.push(r);

        for &r in &batch {
            moves += two_opt_in_place(inst, sol, r, &mut trace);
        }
        let candidates: Vec<NodeId> = batch.iter().flat_map(|&r| sol.route(r).customers().to_vec()).collect();
        let relocated = relocate_from(inst, sol, lists, &candidates, &mut trace, &mut mark);
        let swapped = swap_from(inst, sol, lists, &candidates, &mut trace, &mut mark);
        moves += relocated + swapped;

        if relocated + swapped > 0 {
            // every route in the batch gets another look, plus the ones touched
            next.extend(batch.iter().copied());
        }
        for r in next {
            if !active[r] {
                active[r] = true;
                queue.push(r);
            }
        }
        queue.sort_unstable();
    }
    sol.prune_empty_routes();
    LocalSearchStats {
        moves,
        initial_cost,
        final_cost: sol.cost(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Point;
    use crate::solution::{recompute_cost, validate};

    fn square() -> Instance {
        // a convex quadrilateral far from the depot
        let pts = [(100.0, 0.0), (100.0, 10.0), (110.0, 10.0), (110.0, 0.0)];
        Instance::new(
            "square",
            Point::new(0.0, 0.0),
            pts.iter().map(|&(x, y)| (Point::new(x, y), 1)).collect(),
            10,
        )
        .unwrap()
    }

    fn best_order(inst: &Instance, seq: &[NodeId]) -> Cost {
        fn perms(rest: &mut Vec<NodeId>, k: usize, out: &mut Vec<Vec<NodeId>>) {
            if k == rest.len() {
                out.push(rest.clone());
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                perms(rest, k + 1, out);
                rest.swap(k, i);
            }
        }
        let mut all = Vec::new();
        perms(&mut seq.to_vec(), 0, &mut all);
        all.iter().map(|p| Route::new(inst, p.clone()).cost()).min().unwrap()
    }

    #[test]
    fn two_opt_removes_crossing() {
        let inst = square();
        // 1 -> 3 -> 2 -> 4 crosses itself
        let crossing = Route::new(&inst, vec![1, 3, 2, 4]);
        let out = two_opt(&inst, &crossing);
        assert!(out.cost() < crossing.cost());
        assert_eq!(out.cost(), best_order(&inst, &[1, 2, 3, 4]));
    }

    #[test]
    fn two_opt_fixpoint_on_optimal_route() {
        let inst = square();
        let r = Route::new(&inst, vec![1, 4, 3]);
        assert_eq!(r.cost(), best_order(&inst, &[1, 3, 4]));
        assert_eq!(two_opt(&inst, &r), r);
        let short = Route::new(&inst, vec![2]);
        assert_eq!(two_opt(&inst, &short), short);
    }

    #[test]
    fn relocate_rejects_zero_delta() {
        // customer 2 sits exactly between the two routes' ends: moving it is
        // cost-neutral and must not happen
        let inst = Instance::new(
            "tie",
            Point::new(0.0, 0.0),
            vec![
                (Point::new(10.0, 0.0), 1),
                (Point::new(20.0, 0.0), 1),
                (Point::new(30.0, 0.0), 1),
            ],
            10,
        )
        .unwrap();
        let lists = NeighborLists::new(&inst, 2);
        let mut sol = Solution::from_routes(&inst, vec![vec![1, 2, 3]]);
        assert_eq!(relocate(&inst, &mut sol, &lists), 0);
    }

    #[test]
    fn relocate_applies_exact_delta() {
        // customer 3 is far from route 0 and next to route 1
        let inst = Instance::new(
            "rel",
            Point::new(0.0, 0.0),
            vec![
                (Point::new(0.0, 50.0), 1),
                (Point::new(0.0, 60.0), 1),
                (Point::new(50.0, 5.0), 1),
                (Point::new(50.0, 0.0), 1),
                (Point::new(60.0, 0.0), 1),
            ],
            10,
        )
        .unwrap();
        let lists = NeighborLists::new(&inst, 4);
        let mut sol = Solution::from_routes(&inst, vec![vec![1, 3, 2], vec![4, 5]]);
        let before = sol.cost();
        let moves = relocate(&inst, &mut sol, &lists);
        assert!(moves >= 1);
        assert!(sol.cost() < before);
        assert_eq!(sol.cost(), recompute_cost(&inst, &sol));
        assert_eq!(sol.route_of(3), sol.route_of(4));
        assert!(validate(&inst, &sol).is_empty());
    }

    #[test]
    fn swap_needs_two_routes() {
        let inst = square();
        let lists = NeighborLists::new(&inst, 3);
        let mut sol = Solution::from_routes(&inst, vec![vec![1, 2, 3, 4]]);
        assert_eq!(swap(&inst, &mut sol, &lists), 0);
    }

    #[test]
    fn local_search_is_idempotent() {
        let inst = square();
        let lists = NeighborLists::new(&inst, 3);
        let mut sol = Solution::from_routes(&inst, vec![vec![1, 3], vec![2, 4]]);
        run_local_search(&inst, &mut sol, &lists);
        let once = sol.clone();
        let stats = run_local_search(&inst, &mut sol, &lists);
        assert_eq!(stats.moves, 0);
        assert_eq!(sol, once);
    }
}
