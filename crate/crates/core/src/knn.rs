//! k-nearest-neighbour queries over instance points.
//!
//! Orders candidates by (rounded distance, index). Large point sets go
//! through a uniform grid so that 30k-node instances stay near-linear.

use crate::instance::{rounded_euclid, Cost, Instance, NodeId, Point};

const BRUTE_FORCE_LIMIT: usize = 2048;

/// For every node in `0..inst.num_nodes()`, the `k` nearest *customers*
/// (self and depot excluded), ascending.
pub fn nearest_customers(inst: &Instance, k: usize) -> Vec<Vec<NodeId>> {
    let candidates: Vec<NodeId> = inst.customers().collect();
    let queries: Vec<NodeId> = (0..inst.num_nodes()).collect();
    nearest_among(inst.points(), &queries, &candidates, k)
}

/// For each query node, its `k` nearest nodes from `candidates`, self
/// excluded, ascending by (rounded distance, index).
pub fn nearest_among(points: &[Point], queries: &[NodeId], candidates: &[NodeId], k: usize) -> Vec<Vec<NodeId>> {
    if k == 0 || candidates.is_empty() {
        return vec![Vec::new(); queries.len()];
    }
    if candidates.len() <= BRUTE_FORCE_LIMIT {
        return queries
            .iter()
            .map(|&q| {
                let mut c: Vec<(Cost, NodeId)> = candidates
                    .iter()
                    .filter(|&&j| j != q)
                    .map(|&j| (rounded_euclid(points[q], points[j]), j))
                    .collect();
                let take = k.min(c.len());
                if take < c.len() {
                    c.select_nth_unstable(take);
                    c.truncate(take);
                }
                c.sort_unstable();
                c.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
    }
    let grid = Grid::new(points, candidates);
    queries.iter().map(|&q| grid.query(points, q, k)).collect()
}

struct Grid {
    min_x: f64,
    min_y: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<NodeId>>,
}

impl Grid {
    fn new(points: &[Point], candidates: &[NodeId]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &c in candidates {
            let p = points[c];
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let w = (max_x - min_x).max(1.0);
        let h = (max_y - min_y).max(1.0);
        // about two candidates per cell
        let cell = ((w * h) / (candidates.len() as f64 / 2.0)).sqrt().max(1e-9);
        let cols = ((w / cell).floor() as usize + 1).max(1);
        let rows = ((h / cell).floor() as usize + 1).max(1);
        let mut cells = vec![Vec::new(); cols * rows];
        let mut grid = Self {
            min_x,
            min_y,
            cell,
            cols,
            rows,
            cells: Vec::new(),
        };
        for &c in candidates {
            let (cx, cy) = grid.cell_of(points[c]);
            cells[cy * cols + cx].push(c);
        }
        grid.cells = cells;
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let cx = ((p.x - self.min_x) / self.cell)
            .floor()
            .clamp(0.0, (self.cols - 1) as f64) as usize;
        let cy = ((p.y - self.min_y) / self.cell)
            .floor()
            .clamp(0.0, (self.rows - 1) as f64) as usize;
        (cx, cy)
    }

    fn query(&self, points: &[Point], q: NodeId, k: usize) -> Vec<NodeId> {
        let p = points[q];
        let (cx, cy) = self.cell_of(p);
        let (cx, cy) = (cx as i64, cy as i64);
        let mut found: Vec<(Cost, NodeId)> = Vec::new();
        let max_ring = self.cols.max(self.rows) as i64;
        let mut ring = 0i64;
        loop {
            for y in (cy - ring)..=(cy + ring) {
                for x in (cx - ring)..=(cx + ring) {
                    let on_border = (y - cy).abs() == ring || (x - cx).abs() == ring;
                    if !on_border || x < 0 || y < 0 || x >= self.cols as i64 || y >= self.rows as i64 {
                        continue;
                    }
                    for &j in &self.cells[y as usize * self.cols + x as usize] {
                        if j != q {
                            found.push((rounded_euclid(p, points[j]), j));
                        }
                    }
                }
            }
            if found.len() >= k {
                found.sort_unstable();
                found.truncate(k);
                // unseen points lie farther than `ring * cell` from the query
                let kth = found[k - 1].0 as f64;
                if kth + 1.0 < ring as f64 * self.cell {
                    break;
                }
            }
            if ring > max_ring {
                break;
            }
            ring += 1;
        }
        found.sort_unstable();
        found.truncate(k);
        found.into_iter().map(|(_, j)| j).collect()
    }
}
