//! Initial solution builders.

use crate::instance::{Cost, Demand, Instance, NodeId, DEPOT, MATRIX_CACHE_LIMIT};
use crate::knn::nearest_customers;
use crate::local_search::two_opt;
use crate::solution::Solution;

/// Neighbour count used for savings pairs on instances too large for the
/// full pair list.
const GRANULAR_SAVINGS_NEIGHBORS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Saving {
    value: Cost,
    i: NodeId,
    j: NodeId,
}

/// Savings pairs `(i < j)` with positive saving, sorted by decreasing
/// saving, then by `(i, j)`.
fn savings_list(inst: &Instance) -> Vec<Saving> {
    let n = inst.num_customers();
    let s = |i: NodeId, j: NodeId| inst.distance(DEPOT, i) + inst.distance(DEPOT, j) - inst.distance(i, j);
    let mut out = Vec::new();
    if n <= MATRIX_CACHE_LIMIT {
        for i in 1..=n {
            for j in (i + 1)..=n {
                let value = s(i, j);
                if value > 0 {
                    out.push(Saving { value, i, j });
                }
            }
        }
    } else {
        let lists = nearest_customers(inst, GRANULAR_SAVINGS_NEIGHBORS);
        for i in 1..=n {
            for &j in &lists[i] {
                let (a, b) = (i.min(j), i.max(j));
                let value = s(a, b);
                if value > 0 {
                    out.push(Saving { value, i: a, j: b });
                }
            }
        }
        out.sort_unstable_by_key(|s| (s.i, s.j));
        out.dedup();
    }
    out.sort_unstable_by(|a, b| b.value.cmp(&a.value).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j)));
    out
}

/// Parallel Clarke-Wright savings followed by 2-opt on every route.
///
/// Starts from one out-and-back route per customer and walks the global
/// savings list, joining two routes when both customers are route
/// endpoints and the merged load fits.
pub fn clarke_wright(inst: &Instance) -> Solution {
    let n = inst.num_customers();
    let mut route_id: Vec<usize> = (0..=n).collect();
    let mut members: Vec<Vec<NodeId>> = (0..=n).map(|c| if c == DEPOT { vec![] } else { vec![c] }).collect();
    let mut load: Vec<Demand> = (0..=n).map(|c| inst.demand(c)).collect();

    for Saving { i, j, .. } in savings_list(inst) {
        let (ri, rj) = (route_id[i], route_id[j]);
        if ri == rj || load[ri] + load[rj] > inst.capacity() {
            continue;
        }
        let (a, b) = (&members[ri], &members[rj]);
        let i_head = a.first() == Some(&i);
        let i_tail = a.last() == Some(&i);
        let j_head = b.first() == Some(&j);
        let j_tail = b.last() == Some(&j);
        if !(i_head || i_tail) || !(j_head || j_tail) {
            continue;
        }
        // orient so that i ends route A and j starts route B
        let mut a = std::mem::take(&mut members[ri]);
        let mut b = std::mem::take(&mut members[rj]);
        if !i_tail {
            a.reverse();
        }
        if !j_head {
            b.reverse();
        }
        // keep the merged route under the id of the larger one
        let (keep, drop) = if a.len() >= b.len() { (ri, rj) } else { (rj, ri) };
        for &c in if keep == ri { &b } else { &a } {
            route_id[c] = keep;
        }
        a.extend(b);
        members[keep] = a;
        load[keep] += load[drop];
        load[drop] = 0;
    }

    let mut sol = Solution::empty(inst);
    for seq in members.into_iter().filter(|m| !m.is_empty()) {
        let r = sol.push_route(inst, seq);
        let polished = two_opt(inst, sol.route(r));
        sol.replace_route(inst, r, polished.customers().to_vec());
    }
    sol
}

/// Greedy nearest-feasible-neighbour chains from the depot, opening a new
/// route whenever no unvisited customer fits the remaining capacity.
pub fn nearest_neighbor(inst: &Instance) -> Solution {
    let n = inst.num_customers();
    let lists = nearest_customers(inst, 32.min(n));
    let mut visited = vec![false; n + 1];
    let mut remaining = n;
    let mut routes = Vec::new();
    while remaining > 0 {
        let mut seq = Vec::new();
        let mut at = DEPOT;
        let mut room = inst.capacity();
        loop {
            let fits = |c: NodeId| !visited[c] && inst.demand(c) <= room;
            let next = lists[at].iter().copied().find(|&c| fits(c)).or_else(|| {
                inst.customers()
                    .filter(|&c| fits(c))
                    .min_by_key(|&c| (inst.distance(at, c), c))
            });
            let Some(c) = next else { break };
            visited[c] = true;
            remaining -= 1;
            room -= inst.demand(c);
            seq.push(c);
            at = c;
        }
        routes.push(seq);
    }
    Solution::from_routes(inst, routes)
}

/// Which constructor produces the initial solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Constructor {
    #[default]
    ClarkeWright,
    NearestNeighbor,
}

impl Constructor {
    pub fn build(self, inst: &Instance) -> Solution {
        match self {
            Constructor::ClarkeWright => clarke_wright(inst),
            Constructor::NearestNeighbor => nearest_neighbor(inst),
        }
    }
}

impl std::str::FromStr for Constructor {
    type Err = crate::error::InvalidArgument;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "clarkewright" | "cw" | "savings" => Ok(Constructor::ClarkeWright),
            "nearestneighbor" | "nn" => Ok(Constructor::NearestNeighbor),
            _ => Err(crate::error::InvalidArgument(format!("unknown constructor {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Point;
    use crate::solution::validate;

    #[test]
    fn single_customer() {
        let inst = Instance::new("one", Point::new(0.0, 0.0), vec![(Point::new(5.0, 5.0), 3)], 10).unwrap();
        assert_eq!(clarke_wright(&inst).sequences(), vec![vec![1]]);
        assert_eq!(nearest_neighbor(&inst).sequences(), vec![vec![1]]);
    }

    #[test]
    fn full_demands_force_singletons() {
        let customers = (1..=6).map(|i| (Point::new(i as f64 * 10.0, 3.0), 7)).collect();
        let inst = Instance::new("full", Point::new(0.0, 0.0), customers, 7).unwrap();
        let nn = nearest_neighbor(&inst);
        assert_eq!(nn.num_routes(), 6);
        assert!(validate(&inst, &nn).is_empty());
        let cw = clarke_wright(&inst);
        assert_eq!(cw.num_routes(), 6);
    }

    #[test]
    fn savings_ties_break_on_lower_pair() {
        // symmetric layout: pairs (1,2) and (3,4) have equal savings
        let inst = Instance::new(
            "tie",
            Point::new(0.0, 0.0),
            vec![
                (Point::new(10.0, 1.0), 1),
                (Point::new(10.0, -1.0), 1),
                (Point::new(-10.0, 1.0), 1),
                (Point::new(-10.0, -1.0), 1),
            ],
            2,
        )
        .unwrap();
        let list = savings_list(&inst);
        assert_eq!((list[0].i, list[0].j), (1, 2));
        assert_eq!((list[1].i, list[1].j), (3, 4));
        assert_eq!(list[0].value, list[1].value);
        let sol = clarke_wright(&inst);
        assert_eq!(sol.canonical(), vec![vec![1, 2], vec![3, 4]]);
    }
}
