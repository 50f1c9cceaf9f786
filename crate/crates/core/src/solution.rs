//! Solutions, exact cost accounting, feasibility checks and solution files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GapDomainError, SolutionIoError};
use crate::instance::{Cost, Demand, Instance, NodeId, DEPOT};

const UNROUTED: usize = usize::MAX;

/// A depot-anchored route. The depot is implicit at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Route {
    customers: Vec<NodeId>,
    load: Demand,
    cost: Cost,
}

impl Route {
    pub fn new(inst: &Instance, customers: Vec<NodeId>) -> Self {
        let load = customers.iter().map(|&c| inst.demand(c)).sum();
        let cost = route_cost(inst, &customers);
        Self { customers, load, cost }
    }

    pub fn customers(&self) -> &[NodeId] {
        &self.customers
    }

    pub fn load(&self) -> Demand {
        self.load
    }

    pub fn cost(&self) -> Cost {
        self.cost
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    /// Node before position `pos` (the depot for position 0).
    #[inline]
    pub fn pred(&self, pos: usize) -> NodeId {
        if pos == 0 {
            DEPOT
        } else {
            self.customers[pos - 1]
        }
    }

    /// Node after position `pos` (the depot past the end).
    #[inline]
    pub fn succ(&self, pos: usize) -> NodeId {
        self.customers.get(pos + 1).copied().unwrap_or(DEPOT)
    }

    /// Node at `pos`, treating out-of-range positions as the depot.
    #[inline]
    pub fn at(&self, pos: usize) -> NodeId {
        self.customers.get(pos).copied().unwrap_or(DEPOT)
    }
}

/// Length of the closed tour depot → customers → depot.
pub fn route_cost(inst: &Instance, customers: &[NodeId]) -> Cost {
    let Some((&first, &last)) = customers.first().zip(customers.last()) else {
        return 0;
    };
    let inner: Cost = customers.windows(2).map(|w| inst.distance(w[0], w[1])).sum();
    inst.distance(DEPOT, first) + inner + inst.distance(last, DEPOT)
}

/// Routes plus a customer → (route, position) index and the tracked total
/// cost. Every mutation updates the total by its exact integer delta.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    routes: Vec<Route>,
    total_cost: Cost,
    route_of: Vec<usize>,
    position: Vec<usize>,
}

impl Solution {
    /// Builds a solution from explicit customer sequences. No feasibility
    /// check is made here; see [`validate`].
    pub fn from_routes(inst: &Instance, routes: Vec<Vec<NodeId>>) -> Self {
        let mut sol = Self::empty(inst);
        for seq in routes {
            sol.push_route(inst, seq);
        }
        sol
    }

    /// A solution with no routes (every customer unrouted).
    pub fn empty(inst: &Instance) -> Self {
        Self {
            routes: Vec::new(),
            total_cost: 0,
            route_of: vec![UNROUTED; inst.num_nodes()],
            position: vec![UNROUTED; inst.num_nodes()],
        }
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, r: usize) -> &Route {
        &self.routes[r]
    }

    /// Tracked total cost.
    pub fn cost(&self) -> Cost {
        self.total_cost
    }

    pub fn num_routes(&self) -> usize {
        self.routes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.route_of.len()
    }

    /// Route index holding `c`, if routed.
    #[inline]
    pub fn route_of(&self, c: NodeId) -> Option<usize> {
        match self.route_of.get(c) {
            Some(&r) if r != UNROUTED => Some(r),
            _ => None,
        }
    }

    /// Position of `c` within its route, if routed.
    #[inline]
    pub fn position_of(&self, c: NodeId) -> Option<usize> {
        self.route_of(c).map(|_| self.position[c])
    }

    pub fn is_routed(&self, c: NodeId) -> bool {
        self.route_of(c).is_some()
    }

    fn reindex(&mut self, r: usize, from: usize) {
        let route = &self.routes[r];
        for (p, &c) in route.customers.iter().enumerate().skip(from) {
            self.route_of[c] = r;
            self.position[c] = p;
        }
    }

    /// Appends a new route and returns its index.
    pub fn push_route(&mut self, inst: &Instance, customers: Vec<NodeId>) -> usize {
        let route = Route::new(inst, customers);
        self.total_cost += route.cost;
        self.routes.push(route);
        let r = self.routes.len() - 1;
        self.reindex(r, 0);
        r
    }

    /// Cost change of inserting `c` at `pos` (0..=len) of route `r`.
    #[inline]
    pub fn insertion_delta(&self, inst: &Instance, c: NodeId, r: usize, pos: usize) -> Cost {
        let route = &self.routes[r];
        let a = route.pred(pos);
        let b = route.at(pos);
        inst.distance(a, c) + inst.distance(c, b) - inst.distance(a, b)
    }

    /// Cost change of removing the customer at `pos` of route `r`.
    #[inline]
    pub fn removal_delta(&self, inst: &Instance, r: usize, pos: usize) -> Cost {
        let route = &self.routes[r];
        let a = route.pred(pos);
        let c = route.customers[pos];
        let b = route.succ(pos);
        inst.distance(a, b) - inst.distance(a, c) - inst.distance(c, b)
    }

    pub fn insert_customer(&mut self, inst: &Instance, c: NodeId, r: usize, pos: usize) {
        debug_assert!(!self.is_routed(c), "customer {c} already routed");
        let delta = self.insertion_delta(inst, c, r, pos);
        let route = &mut self.routes[r];
        route.customers.insert(pos, c);
        route.load += inst.demand(c);
        route.cost += delta;
        self.total_cost += delta;
        self.reindex(r, pos);
    }

    /// Removes `c` from its route. Returns false if it was not routed.
    /// Empty routes are kept until [`Solution::prune_empty_routes`].
    pub fn remove_customer(&mut self, inst: &Instance, c: NodeId) -> bool {
        let Some(r) = self.route_of(c) else {
            return false;
        };
        let pos = self.position[c];
        let delta = self.removal_delta(inst, r, pos);
        let route = &mut self.routes[r];
        route.customers.remove(pos);
        route.load -= inst.demand(c);
        route.cost += delta;
        self.total_cost += delta;
        self.route_of[c] = UNROUTED;
        self.position[c] = UNROUTED;
        self.reindex(r, pos);
        true
    }

    /// Replaces the sequence of route `r`. The customer set of the route
    /// may change; callers keep the partition consistent.
    pub fn replace_route(&mut self, inst: &Instance, r: usize, customers: Vec<NodeId>) {
        for &c in &self.routes[r].customers {
            if self.route_of[c] == r {
                self.route_of[c] = UNROUTED;
                self.position[c] = UNROUTED;
            }
        }
        let route = Route::new(inst, customers);
        self.total_cost += route.cost - self.routes[r].cost;
        self.routes[r] = route;
        self.reindex(r, 0);
    }

    /// Reverses positions `i..=j` of route `r`, applying `delta` to the cost.
    pub(crate) fn reverse_segment(&mut self, r: usize, i: usize, j: usize, delta: Cost) {
        let route = &mut self.routes[r];
        route.customers[i..=j].reverse();
        route.cost += delta;
        self.total_cost += delta;
        self.reindex(r, i);
    }

    /// Exchanges customers `u` and `v`, which must sit in different routes.
    /// `delta_u_route` and `delta_v_route` are the cost changes of the
    /// routes currently holding `u` and `v`.
    pub(crate) fn exchange(&mut self, inst: &Instance, u: NodeId, v: NodeId, delta_u_route: Cost, delta_v_route: Cost) {
        let (ru, pu) = (self.route_of[u], self.position[u]);
        let (rv, pv) = (self.route_of[v], self.position[v]);
        debug_assert!(ru != rv && ru != UNROUTED && rv != UNROUTED);
        let (qu, qv) = (inst.demand(u), inst.demand(v));
        let a = &mut self.routes[ru];
        a.customers[pu] = v;
        a.load = a.load - qu + qv;
        a.cost += delta_u_route;
        let b = &mut self.routes[rv];
        b.customers[pv] = u;
        b.load = b.load - qv + qu;
        b.cost += delta_v_route;
        self.total_cost += delta_u_route + delta_v_route;
        self.route_of[v] = ru;
        self.position[v] = pu;
        self.route_of[u] = rv;
        self.position[u] = pv;
    }

    /// Drops routes with no customers. Route indices of the remaining
    /// routes may change.
    pub fn prune_empty_routes(&mut self) {
        let mut r = 0;
        while r < self.routes.len() {
            if self.routes[r].is_empty() {
                self.routes.swap_remove(r);
                if r < self.routes.len() {
                    self.reindex(r, 0);
                }
            } else {
                r += 1;
            }
        }
    }

    /// Customer sequences, one per route.
    pub fn sequences(&self) -> Vec<Vec<NodeId>> {
        self.routes.iter().map(|r| r.customers.clone()).collect()
    }

    /// Routes as sorted sequences in a canonical order, for comparisons
    /// that should ignore route ordering and direction.
    pub fn canonical(&self) -> Vec<Vec<NodeId>> {
        let mut seqs: Vec<Vec<NodeId>> = self
            .routes
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let mut s = r.customers.clone();
                if s.first() > s.last() {
                    s.reverse();
                }
                s
            })
            .collect();
        seqs.sort();
        seqs
    }

    /// Writes the CVRPLIB solution format.
    pub fn to_cvrplib(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.routes.iter().filter(|r| !r.is_empty()).enumerate() {
            let _ = write!(s, "Route #{}:", i + 1);
            for c in &r.customers {
                let _ = write!(s, " {c}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "Cost {}", self.total_cost);
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), SolutionIoError> {
        std::fs::write(path, self.to_cvrplib())?;
        Ok(())
    }

    pub fn read(inst: &Instance, path: impl AsRef<Path>) -> Result<Self, SolutionIoError> {
        parse_solution(inst, &std::fs::read_to_string(path)?)
    }
}

/// Parses the CVRPLIB solution format. The `Cost` line, if present, is
/// ignored; cost is always recomputed.
pub fn parse_solution(inst: &Instance, text: &str) -> Result<Solution, SolutionIoError> {
    let mut routes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.to_ascii_lowercase().starts_with("cost") {
            continue;
        }
        let Some((head, body)) = line.split_once(':') else {
            return Err(SolutionIoError::Malformed {
                line: i + 1,
                msg: format!("expected `Route #k: ...`, found {line:?}"),
            });
        };
        if !head.trim_start().to_ascii_lowercase().starts_with("route") {
            return Err(SolutionIoError::Malformed {
                line: i + 1,
                msg: format!("unexpected line {line:?}"),
            });
        }
        let mut seq = Vec::new();
        for tok in body.split_whitespace() {
            let c: NodeId = tok.parse().map_err(|_| SolutionIoError::Malformed {
                line: i + 1,
                msg: format!("bad customer id {tok:?}"),
            })?;
            if c == DEPOT || c > inst.num_customers() {
                return Err(SolutionIoError::UnknownCustomer(c));
            }
            seq.push(c);
        }
        routes.push(seq);
    }
    Ok(Solution::from_routes(inst, routes))
}

/// A feasibility violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DuplicateVisit(NodeId),
    MissingCustomer(NodeId),
    UnknownNode { route: usize, node: NodeId },
    CapacityExceeded { route: usize, load: Demand },
    RouteCostMismatch { route: usize, tracked: Cost, actual: Cost },
    TotalCostMismatch { tracked: Cost, actual: Cost },
}

/// Lists every violation; empty iff the solution is feasible and its
/// tracked costs are exact.
pub fn validate(inst: &Instance, sol: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = vec![0u32; inst.num_nodes()];
    for (r, route) in sol.routes.iter().enumerate() {
        let mut load = 0;
        for &c in &route.customers {
            if c == DEPOT || c > inst.num_customers() {
                out.push(Violation::UnknownNode { route: r, node: c });
                continue;
            }
            seen[c] += 1;
            if seen[c] == 2 {
                out.push(Violation::DuplicateVisit(c));
            }
            load += inst.demand(c);
        }
        if load > inst.capacity() {
            out.push(Violation::CapacityExceeded { route: r, load });
        }
        let actual = route_cost(inst, &route.customers);
        if actual != route.cost {
            out.push(Violation::RouteCostMismatch {
                route: r,
                tracked: route.cost,
                actual,
            });
        }
    }
    for c in inst.customers() {
        if seen[c] == 0 {
            out.push(Violation::MissingCustomer(c));
        }
    }
    let actual = recompute_cost(inst, sol);
    if actual != sol.total_cost {
        out.push(Violation::TotalCostMismatch {
            tracked: sol.total_cost,
            actual,
        });
    }
    out
}

/// From-scratch total cost.
pub fn recompute_cost(inst: &Instance, sol: &Solution) -> Cost {
    sol.routes.iter().map(|r| route_cost(inst, &r.customers)).sum()
}

/// Percentage gap of `cost` over `bks`.
pub fn gap(cost: f64, bks: f64) -> Result<f64, GapDomainError> {
    if !(bks > 0.0) {
        return Err(GapDomainError(bks));
    }
    Ok((cost - bks) / bks * 100.0)
}

/// Three-decimal rendering used in result tables.
pub fn format_gap(g: f64) -> String {
    format!("{g:.3}")
}

#[inline]
fn undirected(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

/// Every traversed edge, with multiplicity, as normalized pairs.
pub fn solution_edge_list(sol: &Solution) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for r in sol.routes.iter().filter(|r| !r.is_empty()) {
        let mut prev = DEPOT;
        for &c in &r.customers {
            out.push(undirected(prev, c));
            prev = c;
        }
        out.push(undirected(prev, DEPOT));
    }
    out
}

/// The undirected edge set E(S) of a solution.
pub fn solution_edges(sol: &Solution) -> BTreeSet<(NodeId, NodeId)> {
    solution_edge_list(sol).into_iter().collect()
}

/// A solution with some customers removed, awaiting reinsertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSolution {
    pub solution: Solution,
    /// Removed customers in removal order.
    pub absent: Vec<NodeId>,
}

impl PartialSolution {
    /// True iff routed customers and the absent set partition 1..=N.
    pub fn is_partition(&self, inst: &Instance) -> bool {
        let mut count = vec![0u32; inst.num_nodes()];
        for r in self.solution.routes() {
            for &c in r.customers() {
                count[c] += 1;
            }
        }
        for &c in &self.absent {
            count[c] += 1;
        }
        count[DEPOT] == 0 && inst.customers().all(|c| count[c] == 1)
    }
}

/// JSON record of a solved instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub instance: String,
    pub routes: Vec<Vec<NodeId>>,
    pub cost: Cost,
    pub gap: Option<f64>,
    pub seed: Option<u64>,
    pub wall_time_s: Option<f64>,
}

impl SolutionReport {
    pub fn new(inst: &Instance, sol: &Solution) -> Self {
        Self {
            instance: inst.name().to_string(),
            routes: sol
                .routes
                .iter()
                .filter(|r| !r.is_empty())
                .map(|r| r.customers.clone())
                .collect(),
            cost: sol.cost(),
            gap: None,
            seed: None,
            wall_time_s: None,
        }
    }
}
