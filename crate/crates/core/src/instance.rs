//! CVRP instances: CVRPLIB parsing and writing, seeded generation, and the
//! rounded-Euclidean distance oracle.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BoundsError, InvalidArgument, ParseError};

/// Node index; the depot is always 0 and customers are 1..=N.
pub type NodeId = usize;
/// Integer travel cost.
pub type Cost = i64;
pub type Demand = u64;

pub const DEPOT: NodeId = 0;

/// Instances up to this many customers keep a full distance matrix.
pub const MATRIX_CACHE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Depot placement category of the X benchmark family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DepotMode {
    Central,
    Edge,
    Random,
}

impl DepotMode {
    pub fn letter(self) -> char {
        match self {
            DepotMode::Central => 'C',
            DepotMode::Edge => 'E',
            DepotMode::Random => 'R',
        }
    }
}

impl FromStr for DepotMode {
    type Err = InvalidArgument;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" | "central" => Ok(DepotMode::Central),
            "e" | "edge" => Ok(DepotMode::Edge),
            "r" | "random" => Ok(DepotMode::Random),
            _ => Err(InvalidArgument(format!("unknown depot mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeWeightType {
    RoundedEuclid2D,
}

/// Round half-up of a Euclidean length (CVRPLIB `EUC_2D`).
#[inline]
pub fn rounded_euclid(a: Point, b: Point) -> Cost {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    ((dx * dx + dy * dy).sqrt() + 0.5).floor() as Cost
}

/// An immutable CVRP instance.
///
/// Node 0 is the depot. Customers are numbered 1..=N in the order they
/// appear in the source document.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    points: Vec<Point>,
    demands: Vec<Demand>,
    capacity: Demand,
    edge_weight_type: EdgeWeightType,
    depot_mode: Option<DepotMode>,
    matrix: Option<Vec<Cost>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.points == other.points
            && self.demands == other.demands
            && self.capacity == other.capacity
            && self.edge_weight_type == other.edge_weight_type
            && self.depot_mode == other.depot_mode
    }
}

impl Instance {
    /// Builds an instance from a depot and `(point, demand)` customers.
    pub fn new(
        name: impl Into<String>,
        depot: Point,
        customers: Vec<(Point, Demand)>,
        capacity: Demand,
    ) -> Result<Self, InvalidArgument> {
        if capacity == 0 {
            return Err(InvalidArgument("capacity must be positive".into()));
        }
        let mut points = Vec::with_capacity(customers.len() + 1);
        let mut demands = Vec::with_capacity(customers.len() + 1);
        points.push(depot);
        demands.push(0);
        for (i, (p, q)) in customers.into_iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(InvalidArgument(format!(
                    "customer {} has a non-finite coordinate",
                    i + 1
                )));
            }
            if q == 0 || q > capacity {
                return Err(InvalidArgument(format!(
                    "customer {} demand {q} outside (0, {capacity}]",
                    i + 1
                )));
            }
            points.push(p);
            demands.push(q);
        }
        if !(depot.x.is_finite() && depot.y.is_finite()) {
            return Err(InvalidArgument("depot has a non-finite coordinate".into()));
        }
        Ok(Self::from_parts(name.into(), points, demands, capacity, None))
    }

    fn from_parts(
        name: String,
        points: Vec<Point>,
        demands: Vec<Demand>,
        capacity: Demand,
        depot_mode: Option<DepotMode>,
    ) -> Self {
        let mut inst = Self {
            name,
            points,
            demands,
            capacity,
            edge_weight_type: EdgeWeightType::RoundedEuclid2D,
            depot_mode,
            matrix: None,
        };
        if inst.num_customers() <= MATRIX_CACHE_LIMIT {
            let n = inst.points.len();
            let mut m = vec![0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = rounded_euclid(inst.points[i], inst.points[j]);
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            inst.matrix = Some(m);
        }
        inst
    }

    pub fn with_depot_mode(mut self, mode: Option<DepotMode>) -> Self {
        self.depot_mode = mode;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of customers N.
    pub fn num_customers(&self) -> usize {
        self.points.len() - 1
    }

    /// Number of nodes N + 1, depot included.
    pub fn num_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<NodeId> {
        1..=self.num_customers()
    }

    pub fn capacity(&self) -> Demand {
        self.capacity
    }

    pub fn depot(&self) -> Point {
        self.points[DEPOT]
    }

    pub fn point(&self, node: NodeId) -> Point {
        self.points[node]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Demand of `node`; the depot has demand 0.
    pub fn demand(&self, node: NodeId) -> Demand {
        self.demands[node]
    }

    pub fn total_demand(&self) -> Demand {
        self.demands.iter().sum()
    }

    pub fn edge_weight_type(&self) -> EdgeWeightType {
        self.edge_weight_type
    }

    pub fn depot_mode(&self) -> Option<DepotMode> {
        self.depot_mode
    }

    pub fn has_matrix(&self) -> bool {
        self.matrix.is_some()
    }

    /// Travel cost between two nodes. Panics when an index is out of range;
    /// see [`Instance::try_distance`] for the checked form.
    #[inline]
    pub fn distance(&self, i: NodeId, j: NodeId) -> Cost {
        match &self.matrix {
            Some(m) => m[i * self.points.len() + j],
            None => rounded_euclid(self.points[i], self.points[j]),
        }
    }

    pub fn try_distance(&self, i: NodeId, j: NodeId) -> Result<Cost, BoundsError> {
        let nodes = self.num_nodes();
        for index in [i, j] {
            if index >= nodes {
                return Err(BoundsError { index, nodes });
            }
        }
        Ok(self.distance(i, j))
    }

    /// Serializes to a CVRPLIB document. The depot is written as node 1.
    pub fn to_cvrplib(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME : {}", self.name);
        if let Some(mode) = self.depot_mode {
            let _ = writeln!(s, "COMMENT : depot={mode:?}");
        }
        let _ = writeln!(s, "TYPE : CVRP");
        let _ = writeln!(s, "DIMENSION : {}", self.num_nodes());
        let _ = writeln!(s, "EDGE_WEIGHT_TYPE : EUC_2D");
        let _ = writeln!(s, "CAPACITY : {}", self.capacity);
        let _ = writeln!(s, "NODE_COORD_SECTION");
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(s, "{} {} {}", i + 1, p.x, p.y);
        }
        let _ = writeln!(s, "DEMAND_SECTION");
        for (i, q) in self.demands.iter().enumerate() {
            let _ = writeln!(s, "{} {}", i + 1, q);
        }
        let _ = writeln!(s, "DEPOT_SECTION");
        let _ = writeln!(s, " 1");
        let _ = writeln!(s, " -1");
        let _ = writeln!(s, "EOF");
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, InstanceReadError> {
        let text = std::fs::read_to_string(path)?;
        Ok(parse_instance(&text)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
    Done,
}

/// Parses a CVRPLIB document.
///
/// The depot named in `DEPOT_SECTION` becomes node 0; the remaining nodes
/// keep their file order as customers 1..=N.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<Demand> = None;
    let mut depot_mode = None;
    let mut coords: Vec<Option<(Point, usize)>> = Vec::new();
    let mut demands: Vec<Option<(Demand, usize)>> = Vec::new();
    let mut depots: Vec<usize> = Vec::new();
    let mut seen_coords = false;
    let mut seen_demands = false;
    let mut seen_depots = false;
    let mut section = Section::Header;

    let need_dim = |dimension: Option<usize>, line: usize| {
        dimension.ok_or(ParseError::MalformedHeader {
            line,
            msg: "section before DIMENSION".into(),
        })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        match upper.as_str() {
            "NODE_COORD_SECTION" => {
                let n = need_dim(dimension, line_no)?;
                coords = vec![None; n];
                seen_coords = true;
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                let n = need_dim(dimension, line_no)?;
                demands = vec![None; n];
                seen_demands = true;
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                seen_depots = true;
                section = Section::Depots;
                continue;
            }
            "EOF" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        if let Some((key, value)) = line.split_once(':') {
            {
                let key = key.trim().to_ascii_uppercase();
                let value = value.trim();
                match key.as_str() {
                    "NAME" => name = value.to_string(),
                    "COMMENT" => {
                        let v = value.trim_matches('"');
                        if let Some(rest) = v.split("depot=").nth(1) {
                            let word: String = rest.chars().take_while(|c| c.is_alphabetic()).collect();
                            depot_mode = word.parse().ok();
                        }
                    }
                    "TYPE" => {
                        if !value.eq_ignore_ascii_case("CVRP") {
                            return Err(ParseError::MalformedHeader {
                                line: line_no,
                                msg: format!("unsupported TYPE {value}"),
                            });
                        }
                    }
                    "DIMENSION" => {
                        let d: usize = value.parse().map_err(|_| ParseError::MalformedHeader {
                            line: line_no,
                            msg: format!("DIMENSION {value:?} is not an integer"),
                        })?;
                        if d < 2 {
                            return Err(ParseError::MalformedHeader {
                                line: line_no,
                                msg: "DIMENSION must be at least 2".into(),
                            });
                        }
                        dimension = Some(d);
                    }
                    "CAPACITY" => {
                        let c: Demand = value.parse().map_err(|_| ParseError::MalformedHeader {
                            line: line_no,
                            msg: format!("CAPACITY {value:?} is not an integer"),
                        })?;
                        if c == 0 {
                            return Err(ParseError::MalformedHeader {
                                line: line_no,
                                msg: "CAPACITY must be positive".into(),
                            });
                        }
                        capacity = Some(c);
                    }
                    "EDGE_WEIGHT_TYPE" => {
                        if !value.eq_ignore_ascii_case("EUC_2D") {
                            return Err(ParseError::UnsupportedEdgeWeight {
                                line: line_no,
                                value: value.to_string(),
                            });
                        }
                    }
                    _ => {}
                }
                section = Section::Header;
                continue;
            }
        }
        let malformed = |msg: String| ParseError::MalformedEntry { line: line_no, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Coords => {
                if fields.len() != 3 {
                    return Err(malformed(format!("expected `id x y`, found {line:?}")));
                }
                let id = parse_node_id(fields[0], coords.len()).map_err(&malformed)?;
                let x: f64 = fields[1]
                    .parse()
                    .map_err(|_| malformed(format!("bad x {:?}", fields[1])))?;
                let y: f64 = fields[2]
                    .parse()
                    .map_err(|_| malformed(format!("bad y {:?}", fields[2])))?;
                if !(x.is_finite() && y.is_finite()) {
                    return Err(ParseError::NonFiniteCoordinate {
                        line: line_no,
                        node: id,
                    });
                }
                coords[id - 1] = Some((Point::new(x, y), line_no));
            }
            Section::Demands => {
                if fields.len() != 2 {
                    return Err(malformed(format!("expected `id demand`, found {line:?}")));
                }
                let id = parse_node_id(fields[0], demands.len()).map_err(&malformed)?;
                let q: Demand = fields[1]
                    .parse()
                    .map_err(|_| malformed(format!("bad demand {:?}", fields[1])))?;
                demands[id - 1] = Some((q, line_no));
            }
            Section::Depots => {
                let v: i64 = fields[0]
                    .parse()
                    .map_err(|_| malformed(format!("bad depot id {:?}", fields[0])))?;
                if v == -1 {
                    section = Section::Done;
                } else {
                    let n = need_dim(dimension, line_no)?;
                    if v < 1 || v as usize > n {
                        return Err(malformed(format!("depot id {v} out of range")));
                    }
                    depots.push(v as usize);
                }
            }
            Section::Header => {
                return Err(ParseError::MalformedHeader {
                    line: line_no,
                    msg: format!("expected `KEY : value`, found {line:?}"),
                })
            }
            Section::Done => {}
        }
    }

    let dimension = dimension.ok_or(ParseError::Missing("DIMENSION"))?;
    let capacity = capacity.ok_or(ParseError::Missing("CAPACITY"))?;
    if !seen_coords {
        return Err(ParseError::Missing("NODE_COORD_SECTION"));
    }
    if !seen_demands {
        return Err(ParseError::Missing("DEMAND_SECTION"));
    }
    if !seen_depots || depots.is_empty() {
        return Err(ParseError::Missing("DEPOT_SECTION"));
    }
    if depots.len() > 1 {
        return Err(ParseError::MalformedEntry {
            line: 0,
            msg: "multiple depots are not supported".into(),
        });
    }
    let depot_file_id = depots[0];

    let mut order = Vec::with_capacity(dimension);
    order.push(depot_file_id);
    order.extend((1..=dimension).filter(|&id| id != depot_file_id));

    let mut points = Vec::with_capacity(dimension);
    let mut qs = Vec::with_capacity(dimension);
    for (internal, &file_id) in order.iter().enumerate() {
        let (p, _) = coords[file_id - 1].ok_or(ParseError::Missing("coordinates for every node"))?;
        let (q, line) = demands[file_id - 1].ok_or(ParseError::Missing("demand for every node"))?;
        if internal == DEPOT {
            points.push(p);
            qs.push(0);
            continue;
        }
        if q > capacity {
            return Err(ParseError::DemandExceedsCapacity {
                line,
                node: file_id,
                demand: q,
                capacity,
            });
        }
        if q == 0 {
            return Err(ParseError::ZeroDemand { line, node: file_id });
        }
        points.push(p);
        qs.push(q);
    }

    Ok(Instance::from_parts(name, points, qs, capacity, depot_mode))
}

fn parse_node_id(field: &str, dimension: usize) -> Result<usize, String> {
    let id: usize = field.parse().map_err(|_| format!("bad node id {field:?}"))?;
    if id == 0 || id > dimension {
        return Err(format!("node id {id} outside 1..={dimension}"));
    }
    Ok(id)
}

/// Parameters of the seeded instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub customers: usize,
    pub depot_mode: DepotMode,
    pub demand_min: Demand,
    pub demand_max: Demand,
    pub capacity: Demand,
}

/// Side of the square coordinate grid.
pub const GRID_EXTENT: u32 = 1000;

/// Generates an instance with integer coordinates uniform on the
/// `[0, 1000]^2` grid. Pure function of its arguments.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<Instance, InvalidArgument> {
    if spec.customers == 0 {
        return Err(InvalidArgument("customer count must be at least 1".into()));
    }
    if spec.demand_min == 0 || spec.demand_min > spec.demand_max || spec.demand_max > spec.capacity {
        return Err(InvalidArgument(format!(
            "demand range [{}, {}] must lie within [1, {}]",
            spec.demand_min, spec.demand_max, spec.capacity
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid_point = |rng: &mut ChaCha8Rng| {
        Point::new(
            rng.gen_range(0..=GRID_EXTENT) as f64,
            rng.gen_range(0..=GRID_EXTENT) as f64,
        )
    };
    let depot = match spec.depot_mode {
        DepotMode::Central => Point::new(GRID_EXTENT as f64 / 2.0, GRID_EXTENT as f64 / 2.0),
        DepotMode::Edge => Point::new(0.0, 0.0),
        DepotMode::Random => grid_point(&mut rng),
    };
    let customers = (0..spec.customers)
        .map(|_| {
            let p = grid_point(&mut rng);
            let q = rng.gen_range(spec.demand_min..=spec.demand_max);
            (p, q)
        })
        .collect();
    let name = format!("G-n{}-s{}-{}", spec.customers + 1, spec.seed, spec.depot_mode.letter());
    Ok(Instance::new(name, depot, customers, spec.capacity)?.with_depot_mode(Some(spec.depot_mode)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(a: Point, b: Point) -> Instance {
        Instance::new("t", a, vec![(b, 1)], 10).unwrap()
    }

    #[test]
    fn rounded_distances() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(two_point(o, Point::new(3.0, 4.0)).distance(0, 1), 5);
        assert_eq!(two_point(o, Point::new(1.0, 1.0)).distance(0, 1), 1);
        assert_eq!(two_point(o, Point::new(1.0, 2.0)).distance(0, 1), 2);
        // 0.5 rounds up
        assert_eq!(two_point(o, Point::new(2.5, 0.0)).distance(0, 1), 3);
    }

    #[test]
    fn out_of_range_distance_is_an_error() {
        let inst = two_point(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert_eq!(inst.try_distance(0, 2), Err(BoundsError { index: 2, nodes: 2 }));
        assert_eq!(inst.try_distance(1, 0), Ok(1));
    }

    const MINIMAL: &str = "NAME : tiny\nTYPE : CVRP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 10\nNODE_COORD_SECTION\n1 0 0\n2 3 4\nDEMAND_SECTION\n1 0\n2 7\nDEPOT_SECTION\n1\n-1\nEOF\n";

    #[test]
    fn parses_minimal_document() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.name(), "tiny");
        assert_eq!(inst.num_customers(), 1);
        assert_eq!(inst.demand(1), 7);
        assert_eq!(inst.demand(DEPOT), 0);
        assert_eq!(inst.distance(0, 1), 5);
    }

    #[test]
    fn demand_above_capacity_reports_line() {
        let doc = MINIMAL
            .replace("2 7", "2 9999")
            .replace("CAPACITY : 10", "CAPACITY : 100");
        match parse_instance(&doc) {
            Err(ParseError::DemandExceedsCapacity {
                line, demand, capacity, ..
            }) => {
                assert_eq!(line, 11);
                assert_eq!(demand, 9999);
                assert_eq!(capacity, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = parse_instance(&doc).unwrap_err().to_string();
        assert!(msg.contains("demand exceeds capacity"), "{msg}");
    }

    #[test]
    fn missing_sections_and_bad_headers() {
        let no_demand = MINIMAL.replace("DEMAND_SECTION\n1 0\n2 7\n", "");
        assert_eq!(parse_instance(&no_demand), Err(ParseError::Missing("DEMAND_SECTION")));
        let no_cap = MINIMAL.replace("CAPACITY : 10\n", "");
        assert_eq!(parse_instance(&no_cap), Err(ParseError::Missing("CAPACITY")));
        let bad_dim = MINIMAL.replace("DIMENSION : 2", "DIMENSION : two");
        assert!(matches!(
            parse_instance(&bad_dim),
            Err(ParseError::MalformedHeader { line: 3, .. })
        ));
        let explicit = MINIMAL.replace("EUC_2D", "EXPLICIT");
        assert!(matches!(
            parse_instance(&explicit),
            Err(ParseError::UnsupportedEdgeWeight { line: 4, .. })
        ));
        let bad_coord = MINIMAL.replace("2 3 4", "2 3");
        assert!(matches!(
            parse_instance(&bad_coord),
            Err(ParseError::MalformedEntry { line: 8, .. })
        ));
    }

    #[test]
    fn non_first_depot_is_moved_to_index_zero() {
        let doc = "NAME : d2\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 5\nNODE_COORD_SECTION\n1 10 0\n2 0 0\n3 20 0\nDEMAND_SECTION\n1 2\n2 0\n3 3\nDEPOT_SECTION\n2\n-1\nEOF\n";
        let inst = parse_instance(doc).unwrap();
        assert_eq!(inst.depot(), Point::new(0.0, 0.0));
        assert_eq!(inst.point(1), Point::new(10.0, 0.0));
        assert_eq!(inst.demand(2), 3);
    }

    #[test]
    fn generator_is_deterministic_and_seed_sensitive() {
        let spec = GeneratorSpec {
            seed: 0,
            customers: 5,
            depot_mode: DepotMode::Central,
            demand_min: 1,
            demand_max: 10,
            capacity: 100,
        };
        let a = generate_instance(&spec).unwrap();
        let b = generate_instance(&spec).unwrap();
        assert_eq!(a.to_cvrplib(), b.to_cvrplib());
        assert_eq!(a.depot(), Point::new(500.0, 500.0));
        assert_eq!(a.num_customers(), 5);
        let c = generate_instance(&GeneratorSpec {
            seed: 1,
            ..spec.clone()
        })
        .unwrap();
        assert_ne!(a.points()[1..], c.points()[1..]);
        let edge = generate_instance(&GeneratorSpec {
            depot_mode: DepotMode::Edge,
            ..spec
        })
        .unwrap();
        assert_eq!(edge.depot(), Point::new(0.0, 0.0));
    }

    #[test]
    fn generator_rejects_bad_ranges() {
        let spec = GeneratorSpec {
            seed: 0,
            customers: 5,
            depot_mode: DepotMode::Random,
            demand_min: 1,
            demand_max: 200,
            capacity: 100,
        };
        assert!(generate_instance(&spec).is_err());
        assert!(generate_instance(&GeneratorSpec {
            customers: 0,
            demand_max: 10,
            ..spec
        })
        .is_err());
    }

    #[test]
    fn depot_mode_survives_round_trip() {
        let inst = generate_instance(&GeneratorSpec {
            seed: 3,
            customers: 7,
            depot_mode: DepotMode::Edge,
            demand_min: 1,
            demand_max: 5,
            capacity: 20,
        })
        .unwrap();
        let back = parse_instance(&inst.to_cvrplib()).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.depot_mode(), Some(DepotMode::Edge));
    }
}
