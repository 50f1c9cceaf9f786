//! Independent oracles shared by the integration tests. Nothing here
//! calls the optimised code paths it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use marklns::instance::{Cost, Instance, NodeId, Point};
use marklns::selector::{EdgeKind, SelectorModel, SparseGraph};
use marklns::{generate_instance, DepotMode, GeneratorSpec};
use rand::Rng;

pub fn generated(seed: u64, customers: usize, depot: DepotMode, capacity: u64) -> Instance {
    generate_instance(&GeneratorSpec {
        seed,
        customers,
        depot_mode: depot,
        demand_min: 1,
        demand_max: 10,
        capacity,
    })
    .expect("valid spec")
}

/// Small random instance with demands in `[1, 10]` and a capacity that
/// forces between one and a few routes.
pub fn tiny_instance<R: Rng>(rng: &mut R, max_customers: usize) -> Instance {
    let n = rng.gen_range(2..=max_customers);
    let depot = Point::new(rng.gen_range(0..=100) as f64, rng.gen_range(0..=100) as f64);
    let customers: Vec<(Point, u64)> = (0..n)
        .map(|_| {
            (
                Point::new(rng.gen_range(0..=100) as f64, rng.gen_range(0..=100) as f64),
                rng.gen_range(1..=10),
            )
        })
        .collect();
    let capacity = rng.gen_range(10..=30);
    Instance::new("tiny", depot, customers, capacity).expect("valid")
}

fn dist(inst: &Instance, a: NodeId, b: NodeId) -> Cost {
    let (p, q) = (inst.point(a), inst.point(b));
    let d = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
    (d + 0.5).floor() as Cost
}

/// Exact CVRP optimum: Held-Karp tour cost for every customer subset, then
/// a set-partition DP over capacity-feasible subsets.
pub fn brute_force_optimum(inst: &Instance) -> Cost {
    let n = inst.num_customers();
    assert!(n <= 12, "oracle is exponential");
    let full = 1usize << n;
    const INF: Cost = Cost::MAX / 4;
    // path[S][j]: depot -> all of S, ending at customer j (j in S)
    let mut path = vec![vec![INF; n]; full];
    for j in 0..n {
        path[1 << j][j] = dist(inst, 0, j + 1);
    }
    for s in 1..full {
        for j in 0..n {
            if s & (1 << j) == 0 || path[s][j] == INF {
                continue;
            }
            for k in 0..n {
                if s & (1 << k) != 0 {
                    continue;
                }
                let t = s | (1 << k);
                let c = path[s][j] + dist(inst, j + 1, k + 1);
                if c < path[t][k] {
                    path[t][k] = c;
                }
            }
        }
    }
    let mut tour = vec![INF; full];
    tour[0] = 0;
    for s in 1..full {
        let load: u64 = (0..n).filter(|j| s & (1 << j) != 0).map(|j| inst.demand(j + 1)).sum();
        if load > inst.capacity() {
            continue;
        }
        tour[s] = (0..n)
            .filter(|j| s & (1 << j) != 0)
            .map(|j| path[s][j] + dist(inst, j + 1, 0))
            .min()
            .unwrap();
    }
    let mut best = vec![INF; full];
    best[0] = 0;
    for s in 1..full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        // subsets of s containing its lowest element
        let mut sub = rest;
        loop {
            let t = sub | low;
            if tour[t] < INF && best[s ^ t] < INF {
                best[s] = best[s].min(tour[t] + best[s ^ t]);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    best[full - 1]
}

pub fn route_len(inst: &Instance, seq: &[NodeId]) -> Cost {
    let mut prev = 0;
    let mut c = 0;
    for &v in seq {
        c += dist(inst, prev, v);
        prev = v;
    }
    c + dist(inst, prev, 0)
}

/// Every route reachable from `seq` by a chain of strictly improving
/// segment reversals that has no improving reversal left.
pub fn two_opt_local_optima(inst: &Instance, seq: &[NodeId]) -> BTreeSet<Vec<NodeId>> {
    let mut seen = BTreeSet::new();
    let mut optima = BTreeSet::new();
    let mut queue = VecDeque::from([seq.to_vec()]);
    seen.insert(seq.to_vec());
    while let Some(cur) = queue.pop_front() {
        let base = route_len(inst, &cur);
        let mut improved = false;
        for i in 0..cur.len() {
            for j in i + 1..cur.len() {
                let mut next = cur.clone();
                next[i..=j].reverse();
                if route_len(inst, &next) < base {
                    improved = true;
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
        if !improved {
            optima.insert(cur);
        }
    }
    optima
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Straight-line scalar forward pass written from the layer equations.
pub fn reference_forward(m: &SelectorModel<f64>, g: &SparseGraph<f64>) -> Vec<f64> {
    let n = g.num_nodes();
    let ne = g.num_edges();
    let h = m.hidden;
    let half = h / 2;
    let lin = |w: &ndarray::Array2<f64>, b: &ndarray::Array1<f64>, v: &[f64]| -> Vec<f64> {
        (0..w.nrows())
            .map(|r| {
                let mut acc = b[r];
                for c in 0..w.ncols() {
                    acc += w[[r, c]] * v[c];
                }
                acc
            })
            .collect()
    };
    let bn = |bn: &marklns::selector::BatchNorm<f64>, v: &[f64]| -> Vec<f64> {
        (0..v.len())
            .map(|k| (v[k] - bn.running_mean[k]) / (bn.running_var[k] + 1e-5).sqrt() * bn.gamma[k] + bn.beta[k])
            .collect()
    };
    let mut x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let f: Vec<f64> = (0..3).map(|k| g.node_features[[i, k]]).collect();
            lin(&m.node_embed.weight, &m.node_embed.bias, &f)
        })
        .collect();
    let mut e: Vec<Vec<f64>> = (0..ne)
        .map(|k| {
            let mut v = lin(&m.dist_embed.weight, &m.dist_embed.bias, &[g.edge_distance[k]]);
            let row = match g.edge_kind[k] {
                EdgeKind::KnnNeighbor => 0,
                EdgeKind::SolutionEdge => 1,
                EdgeKind::SelfLoop => 2,
            };
            v.extend((0..half).map(|c| m.kind_embed[[row, c]]));
            v
        })
        .collect();
    for layer in &m.layers {
        let w = &layer.w;
        let mut new_x = Vec::with_capacity(n);
        for i in 0..n {
            let mut agg = lin(&w[0].weight, &w[0].bias, &x[i]);
            let mut denom = vec![m.eps; h];
            for k in 0..ne {
                if g.src[k] == i {
                    for c in 0..h {
                        denom[c] += sig(e[k][c]);
                    }
                }
            }
            for k in 0..ne {
                if g.src[k] == i {
                    let msg = lin(&w[1].weight, &w[1].bias, &x[g.dst[k]]);
                    for c in 0..h {
                        agg[c] += sig(e[k][c]) / denom[c] * msg[c];
                    }
                }
            }
            let b = bn(&layer.bn_node, &agg);
            new_x.push((0..h).map(|c| x[i][c] + b[c].max(0.0)).collect::<Vec<_>>());
        }
        let mut new_e = Vec::with_capacity(ne);
        for k in 0..ne {
            let a = lin(&w[2].weight, &w[2].bias, &e[k]);
            let b = lin(&w[3].weight, &w[3].bias, &x[g.src[k]]);
            let c = lin(&w[4].weight, &w[4].bias, &x[g.dst[k]]);
            let pre: Vec<f64> = (0..h).map(|t| a[t] + b[t] + c[t]).collect();
            let nb = bn(&layer.bn_edge, &pre);
            new_e.push((0..h).map(|t| e[k][t] + nb[t].max(0.0)).collect::<Vec<_>>());
        }
        x = new_x;
        e = new_e;
    }
    e.iter()
        .map(|v| {
            let mut z = v.clone();
            for (k, l) in m.mlp.iter().enumerate() {
                z = lin(&l.weight, &l.bias, &z);
                if k + 1 < m.mlp.len() {
                    z.iter_mut().for_each(|t| *t = t.max(0.0));
                }
            }
            sig(z[0])
        })
        .collect()
}

/// Random graph in the selector's input format: self-loops plus random
/// directed edges, some flagged as solution edges in both directions.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> SparseGraph<f64> {
    let feats = ndarray::Array2::from_shape_fn((n, 3), |_| rng.gen_range(0.0..1.0));
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, i, EdgeKind::SelfLoop, 0.0));
        for j in 0..n {
            if i < j && rng.gen_bool(0.3) {
                let d = rng.gen_range(0.0..1.0);
                edges.push((i, j, EdgeKind::SolutionEdge, d));
                edges.push((j, i, EdgeKind::SolutionEdge, d));
            } else if i != j && rng.gen_bool(0.2) {
                edges.push((i, j, EdgeKind::KnnNeighbor, rng.gen_range(0.0..1.0)));
            }
        }
    }
    SparseGraph::from_parts((0..n).collect(), feats, edges)
}

/// One-tailed p-value by listing all `2^n` sign patterns of the ranks.
pub fn wilcoxon_enumerated(pairs: &[(f64, f64)]) -> Option<f64> {
    let mut d: Vec<f64> = pairs.iter().map(|(b, v)| b - v).filter(|x| *x != 0.0).collect();
    if d.len() < 5 {
        return None;
    }
    d.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let n = d.len();
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let same: Vec<usize> = (0..n).filter(|&j| d[j].abs() == d[i].abs()).collect();
        ranks[i] = same.iter().map(|&j| (j + 1) as f64).sum::<f64>() / same.len() as f64;
    }
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w >= observed - 1e-9 {
            hits += 1;
        }
    }
    Some(hits as f64 / (1u64 << n) as f64)
}

/// Peak resident set size of this process in bytes, if the platform
/// reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
