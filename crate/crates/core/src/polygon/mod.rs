//! Metric polygons: cyclic chains of sides drawn as edge paths in an ambient
//! graph, plus the finite samples of them that every numerical routine
//! downstream consumes.

mod builders;
mod random;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{AmbientGraph, DistanceMatrix, EdgeJson, FiniteMetric, GraphError, GraphPoint};

pub use builders::{build_example, Example};
pub use random::{random_metric_triangle, random_triangle_polygon, stress_parameters};

/// Side isometry violations above this are reported as invalid.
pub const ISOMETRY_TOL: f64 = 1e-9;
/// Sampled distances below this share of the diameter are treated as zero.
pub const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolygonError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("side {side}: {reason}")]
    MalformedSide { side: usize, reason: String },
    #[error("side {side} does not end where side {next} begins")]
    NotCyclic { side: usize, next: usize },
    #[error("a polygon needs at least 2 sides, got {0}")]
    TooFewSides(usize),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("polygon fails side isometry (worst violation {0:e})")]
    Invalid(f64),
    #[error("expected a triangle, got {0} sides")]
    NotTriangle(usize),
    #[error("random triangle generation gave up: {0}")]
    Exhausted(String),
    #[error("malformed sample data: {0}")]
    BadSamples(String),
    #[error("unknown example `{0}`")]
    UnknownExample(String),
}

/// One side of a polygon: a vertex-contiguous path of ambient edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonSide {
    pub from: usize,
    pub to: usize,
    /// `(edge index, forward)`; forward means traversed from the edge's `u` to `v`.
    pub path: Vec<(usize, bool)>,
    pub length: f64,
    // vertices met along the path with their arc coordinate, endpoints included
    stops: Vec<(usize, f64)>,
}

impl PolygonSide {
    fn new(graph: &AmbientGraph, side: usize, from: usize, path: Vec<(usize, bool)>) -> Result<Self, PolygonError> {
        if path.is_empty() {
            return Err(PolygonError::MalformedSide {
                side,
                reason: "empty path".into(),
            });
        }
        let mut at = from;
        let mut arc = 0.0;
        let mut stops = vec![(from, 0.0)];
        for &(e, forward) in &path {
            let edge = graph.edge(e)?;
            let (start, end) = if forward { (edge.u, edge.v) } else { (edge.v, edge.u) };
            if start != at {
                return Err(PolygonError::MalformedSide {
                    side,
                    reason: format!(
                        "edge {e} starts at `{}` but the path is at `{}`",
                        graph.id(start),
                        graph.id(at)
                    ),
                });
            }
            arc += edge.len;
            at = end;
            stops.push((at, arc));
        }
        Ok(Self {
            from,
            to: at,
            path,
            length: arc,
            stops,
        })
    }

    /// Path vertices with their arc coordinates.
    pub fn stops(&self) -> &[(usize, f64)] {
        &self.stops
    }

    /// Locates arc coordinate `s` on the ambient graph.
    pub fn point_at(&self, graph: &AmbientGraph, s: f64) -> GraphPoint {
        let s = s.clamp(0.0, self.length);
        for (k, &(e, forward)) in self.path.iter().enumerate() {
            let a0 = self.stops[k].1;
            let a1 = self.stops[k + 1].1;
            if s <= a1 || k + 1 == self.path.len() {
                let len = graph.edges()[e].len;
                let t = (s - a0).clamp(0.0, len);
                let offset = if forward { t } else { len - t };
                return GraphPoint::new(e, offset);
            }
        }
        unreachable!("path is non-empty")
    }
}

/// An ambient graph with `n` designated sides forming a closed chain.
#[derive(Debug, Clone)]
pub struct MetricPolygon {
    pub ambient: AmbientGraph,
    pub sides: Vec<PolygonSide>,
}

/// Side given by vertex id and edge path, as used by builders and JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSpec {
    pub from: String,
    pub path: Vec<(usize, bool)>,
}

impl MetricPolygon {
    pub fn new(ambient: AmbientGraph, sides: Vec<SideSpec>) -> Result<Self, PolygonError> {
        if sides.len() < 2 {
            return Err(PolygonError::TooFewSides(sides.len()));
        }
        let mut built = Vec::with_capacity(sides.len());
        for (j, s) in sides.into_iter().enumerate() {
            let from = ambient.vertex_index(&s.from)?;
            built.push(PolygonSide::new(&ambient, j, from, s.path)?);
        }
        let n = built.len();
        for j in 0..n {
            if built[j].to != built[(j + 1) % n].from {
                return Err(PolygonError::NotCyclic {
                    side: j,
                    next: (j + 1) % n,
                });
            }
        }
        Ok(Self {
            ambient,
            sides: built,
        })
    }

    pub fn side_count(&self) -> usize {
        self.sides.len()
    }

    pub fn side_lengths(&self) -> Vec<f64> {
        self.sides.iter().map(|s| s.length).collect()
    }

    /// Polygon vertices `p_1 … p_n` (side start points).
    pub fn vertices(&self) -> Vec<&str> {
        self.sides.iter().map(|s| self.ambient.id(s.from)).collect()
    }

    pub fn to_json(&self) -> PolygonJson {
        let g = self.ambient.to_json();
        PolygonJson {
            vertices: g.vertices,
            edges: g.edges,
            sides: self
                .sides
                .iter()
                .map(|s| SideJson {
                    from: self.ambient.id(s.from).to_string(),
                    to: self.ambient.id(s.to).to_string(),
                    path: s
                        .path
                        .iter()
                        .map(|&(e, f)| (e, if f { 1 } else { -1 }))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PolygonJson) -> Result<Self, PolygonError> {
        let edges: Vec<(&str, &str, f64)> = json
            .edges
            .iter()
            .map(|e| (e.u.as_str(), e.v.as_str(), e.len))
            .collect();
        let ambient = AmbientGraph::new(&json.vertices, &edges)?;
        let mut specs = Vec::with_capacity(json.sides.len());
        for (j, s) in json.sides.iter().enumerate() {
            let mut path = Vec::with_capacity(s.path.len());
            for &(e, o) in &s.path {
                let forward = match o {
                    1 => true,
                    -1 => false,
                    _ => {
                        return Err(PolygonError::MalformedSide {
                            side: j,
                            reason: format!("orientation must be 1 or -1, got {o}"),
                        })
                    }
                };
                path.push((e, forward));
            }
            specs.push(SideSpec {
                from: s.from.clone(),
                path,
            });
        }
        let poly = Self::new(ambient, specs)?;
        for (j, s) in json.sides.iter().enumerate() {
            if poly.ambient.id(poly.sides[j].to) != s.to {
                return Err(PolygonError::MalformedSide {
                    side: j,
                    reason: format!("path ends at `{}`, not `{}`", poly.ambient.id(poly.sides[j].to), s.to),
                });
            }
        }
        Ok(poly)
    }
}

/// Wire form of a polygon: graph JSON plus the side list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonJson {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeJson>,
    pub sides: Vec<SideJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideJson {
    pub from: String,
    pub to: String,
    pub path: Vec<(usize, i8)>,
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonReport {
    pub valid: bool,
    /// Per side, the largest `|arc difference - ambient distance|`.
    pub side_violation: Vec<f64>,
    pub worst_triangle_slack: f64,
    pub diameter: f64,
}

impl PolygonReport {
    pub fn worst_violation(&self) -> f64 {
        self.side_violation.iter().copied().fold(0.0, f64::max)
    }
}

/// Checks that every side is isometric to an interval.
///
/// Two checks run per side. All pairs of path vertices must sit at ambient
/// distance equal to their arc separation; since any route between interior
/// points leaves its edges through endpoints, this already certifies the whole
/// side. The uniform sample of `samples_per_side` points is checked on top.
pub fn validate(p: &MetricPolygon, samples_per_side: usize) -> Result<PolygonReport, PolygonError> {
    if samples_per_side < 2 {
        return Err(PolygonError::BadParameter(format!(
            "samples_per_side must be at least 2, got {samples_per_side}"
        )));
    }
    let g = &p.ambient;
    let mut side_violation = Vec::with_capacity(p.sides.len());
    for side in &p.sides {
        let mut worst: f64 = 0.0;
        let stops = side.stops();
        for (i, &(vi, ai)) in stops.iter().enumerate() {
            for &(vk, ak) in &stops[i + 1..] {
                worst = worst.max(((ak - ai) - g.vdist(vi, vk)).abs());
            }
        }
        let grid = side_grid(g, side, samples_per_side);
        for (i, a) in grid.iter().enumerate() {
            for b in &grid[i + 1..] {
                let d = g.point_distance_unchecked(a.point, b.point);
                worst = worst.max(((b.arc - a.arc) - d).abs());
            }
        }
        side_violation.push(worst);
    }
    let samples = sample_points(p, samples_per_side);
    let matrix = fill_matrix(g, &samples);
    let worst_triangle_slack = matrix.worst_triangle_slack();
    let diameter = matrix.max_entry();
    let valid = side_violation.iter().all(|&v| v <= ISOMETRY_TOL);
    Ok(PolygonReport {
        valid,
        side_violation,
        worst_triangle_slack,
        diameter,
    })
}

#[derive(Debug, Clone)]
struct GridPoint {
    arc: f64,
    point: GraphPoint,
    vertex: Option<usize>,
}

// Uniform arcs merged with every path vertex; vertex arcs win ties.
fn side_grid(g: &AmbientGraph, side: &PolygonSide, m: usize) -> Vec<GridPoint> {
    let mut arcs: Vec<(f64, Option<usize>)> = side.stops().iter().map(|&(v, a)| (a, Some(v))).collect();
    let merge_tol = 1e-9 * side.length.max(1.0);
    for k in 0..m {
        let a = if k + 1 == m {
            side.length
        } else {
            side.length * k as f64 / (m - 1) as f64
        };
        if !arcs.iter().any(|&(b, _)| (a - b).abs() <= merge_tol) {
            arcs.push((a, None));
        }
    }
    arcs.sort_by(|x, y| x.0.total_cmp(&y.0));
    arcs.into_iter()
        .map(|(arc, vertex)| GridPoint {
            arc,
            point: side.point_at(g, arc),
            vertex,
        })
        .collect()
}

/// One sampled point: which side carries it and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub side: usize,
    pub arc: f64,
    /// Ambient vertex id when the sample sits on a graph vertex.
    pub vertex: Option<String>,
}

impl SamplePoint {
    /// `"side:arc"` with 1-based side numbers.
    pub fn label(&self) -> String {
        format!("{}:{}", self.side + 1, fmt_num(self.arc))
    }
}

struct Sampled {
    meta: SamplePoint,
    point: GraphPoint,
}

fn sample_points(p: &MetricPolygon, m: usize) -> Vec<Sampled> {
    let g = &p.ambient;
    let mut out = Vec::new();
    for (j, side) in p.sides.iter().enumerate() {
        for gp in side_grid(g, side, m) {
            out.push(Sampled {
                meta: SamplePoint {
                    side: j,
                    arc: gp.arc,
                    vertex: gp.vertex.map(|v| g.id(v).to_string()),
                },
                point: gp.point,
            });
        }
    }
    out
}

fn fill_matrix(g: &AmbientGraph, samples: &[Sampled]) -> DistanceMatrix {
    use rayon::prelude::*;
    let n = samples.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        g.point_distance_unchecked(samples[i].point, samples[j].point)
                    }
                })
                .collect()
        })
        .collect();
    // symmetrize from the upper triangle so the matrix is bit-exact symmetric
    let mut m = DistanceMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            m.set(i, j, rows[i][j]);
        }
    }
    m
}

/// A finite sample of a metric polygon with its full distance matrix.
///
/// Polygon vertices appear once per carrying side, so adjacent sides share
/// samples at distance zero.
#[derive(Debug, Clone)]
pub struct SampledPolygon {
    pub side_lengths: Vec<f64>,
    pub points: Vec<SamplePoint>,
    pub matrix: DistanceMatrix,
    /// Exact distance from each sample to the union of the sides not
    /// carrying it; present when the sample came from an ambient graph.
    pub opposite: Option<Vec<f64>>,
    /// Largest spacing of the uniform part of the grid.
    pub grid_step: f64,
}

impl FiniteMetric for SampledPolygon {
    fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.matrix.dist(i, j)
    }
}

impl SampledPolygon {
    pub fn side_count(&self) -> usize {
        self.side_lengths.len()
    }

    /// Indices of samples carried by `side`, in arc order.
    pub fn side_indices(&self, side: usize) -> Vec<usize> {
        (0..self.points.len()).filter(|&i| self.points[i].side == side).collect()
    }

    /// Builds a sample from a raw matrix; side lengths are read off as the
    /// largest arc on each side.
    pub fn from_matrix(points: Vec<SamplePoint>, matrix: DistanceMatrix) -> Result<Self, PolygonError> {
        if points.len() != matrix.len() {
            return Err(PolygonError::BadSamples(format!(
                "{} labels for a {}x{} matrix",
                points.len(),
                matrix.len(),
                matrix.len()
            )));
        }
        let n_sides = points.iter().map(|p| p.side + 1).max().unwrap_or(0);
        let mut side_lengths = vec![0.0f64; n_sides];
        for p in &points {
            side_lengths[p.side] = side_lengths[p.side].max(p.arc);
        }
        let grid_step = grid_step_of(&points, &side_lengths);
        let s = Self {
            side_lengths,
            points,
            matrix,
            opposite: None,
            grid_step,
        };
        s.check_invariants()?;
        Ok(s)
    }

    /// Matrix symmetric with zero diagonal, triangle inequality, isometric
    /// sides and coincident shared vertices.
    pub fn check_invariants(&self) -> Result<(), PolygonError> {
        let sym = self.matrix.symmetry_defect();
        if sym > 0.0 {
            return Err(PolygonError::BadSamples(format!("matrix not symmetric (defect {sym:e})")));
        }
        let slack = self.matrix.worst_triangle_slack();
        if slack < -1e-12 * self.matrix.max_entry().max(1.0) {
            return Err(PolygonError::BadSamples(format!("triangle inequality fails by {:e}", -slack)));
        }
        let n = self.points.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&self.points[i], &self.points[j]);
                if a.side == b.side && ((a.arc - b.arc).abs() - self.matrix.dist(i, j)).abs() > ISOMETRY_TOL {
                    return Err(PolygonError::BadSamples(format!(
                        "side {} not isometric between arcs {} and {}",
                        a.side + 1,
                        a.arc,
                        b.arc
                    )));
                }
            }
        }
        let k = self.side_count();
        for j in 0..k {
            let end = self.side_indices(j).into_iter().last();
            let start = self.side_indices((j + 1) % k).into_iter().next();
            if let (Some(e), Some(s)) = (end, start) {
                if self.matrix.dist(e, s) > ISOMETRY_TOL {
                    return Err(PolygonError::BadSamples(format!(
                        "end of side {} and start of side {} do not coincide",
                        j + 1,
                        (j + 1) % k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV: a header of `side:arc` labels, then the full matrix.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.points.iter().map(|p| p.label()))?;
        for i in 0..self.points.len() {
            out.write_record(self.matrix.row(i).iter().map(|&d| fmt_num(d)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self, PolygonError> {
        let bad = |e: csv::Error| PolygonError::BadSamples(e.to_string());
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut points = Vec::new();
        for label in rdr.headers().map_err(bad)?.iter() {
            let (side, arc) = label
                .split_once(':')
                .ok_or_else(|| PolygonError::BadSamples(format!("label `{label}` is not side:arc")))?;
            let side: usize = side
                .trim()
                .parse()
                .map_err(|_| PolygonError::BadSamples(format!("bad side in `{label}`")))?;
            let arc: f64 = arc
                .trim()
                .parse()
                .map_err(|_| PolygonError::BadSamples(format!("bad arc in `{label}`")))?;
            if side == 0 {
                return Err(PolygonError::BadSamples("sides are numbered from 1".into()));
            }
            points.push(SamplePoint {
                side: side - 1,
                arc,
                vertex: None,
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(bad)?;
            let row: Result<Vec<f64>, _> = rec.iter().map(|x| x.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| PolygonError::BadSamples(e.to_string()))?);
        }
        let matrix = DistanceMatrix::from_rows(rows).ok_or_else(|| PolygonError::BadSamples("matrix is not square".into()))?;
        Self::from_matrix(points, matrix)
    }
}

fn grid_step_of(points: &[SamplePoint], side_lengths: &[f64]) -> f64 {
    let mut step: f64 = 0.0;
    for (j, _) in side_lengths.iter().enumerate() {
        let mut arcs: Vec<f64> = points.iter().filter(|p| p.side == j).map(|p| p.arc).collect();
        arcs.sort_by(f64::total_cmp);
        for w in arcs.windows(2) {
            step = step.max(w[1] - w[0]);
        }
    }
    step
}

/// Samples every side with `m` uniform points merged with its graph vertices.
pub fn sample_polygon(p: &MetricPolygon, m: usize) -> Result<SampledPolygon, PolygonError> {
    if m < 2 {
        return Err(PolygonError::BadParameter(format!("need at least 2 samples per side, got {m}")));
    }
    let samples = sample_points(p, m);
    let mut matrix = fill_matrix(&p.ambient, &samples);
    // one ambient point reached from two sides can pick up rounding noise
    let snap = SNAP_TOL * matrix.max_entry().max(1.0);
    let n = samples.len();
    for i in 0..n {
        for j in i + 1..n {
            if matrix.dist(i, j) <= snap {
                matrix.set(i, j, 0.0);
            }
        }
    }
    let side_lengths = p.side_lengths();
    let grid_step = side_lengths
        .iter()
        .map(|l| l / (m - 1) as f64)
        .fold(0.0, f64::max);
    let opposite = if p.side_count() == 3 {
        let edge_sets: Vec<Vec<usize>> = (0..3)
            .map(|j| {
                p.sides
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .flat_map(|(_, s)| s.path.iter().map(|&(e, _)| e))
                    .collect()
            })
            .collect();
        let mut opp = Vec::with_capacity(samples.len());
        for s in &samples {
            let d = p.ambient.dist_to_edge_union(s.point, &edge_sets[s.meta.side])?;
            opp.push(if d <= snap { 0.0 } else { d });
        }
        Some(opp)
    } else {
        None
    };
    Ok(SampledPolygon {
        side_lengths,
        points: samples.into_iter().map(|s| s.meta).collect(),
        matrix,
        opposite,
        grid_step,
    })
}

/// A sampled metric triangle. Sides are `[pq]`, `[qr]`, `[rp]` in that order.
#[derive(Debug, Clone)]
pub struct FiniteMetricTriangle {
    inner: SampledPolygon,
}

impl TryFrom<SampledPolygon> for FiniteMetricTriangle {
    type Error = PolygonError;

    fn try_from(inner: SampledPolygon) -> Result<Self, Self::Error> {
        if inner.side_count() != 3 {
            return Err(PolygonError::NotTriangle(inner.side_count()));
        }
        Ok(Self { inner })
    }
}

impl std::ops::Deref for FiniteMetricTriangle {
    type Target = SampledPolygon;

    fn deref(&self) -> &SampledPolygon {
        &self.inner
    }
}

impl FiniteMetric for FiniteMetricTriangle {
    fn len(&self) -> usize {
        self.inner.points.len()
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.inner.matrix.dist(i, j)
    }
}

impl FiniteMetricTriangle {
    pub fn into_inner(self) -> SampledPolygon {
        self.inner
    }

    pub fn as_polygon(&self) -> &SampledPolygon {
        &self.inner
    }
}

/// Validates a triangle and samples it.
pub fn sample_triangle(p: &MetricPolygon, m: usize) -> Result<FiniteMetricTriangle, PolygonError> {
    if p.side_count() != 3 {
        return Err(PolygonError::NotTriangle(p.side_count()));
    }
    let report = validate(p, m.max(2))?;
    if !report.valid {
        return Err(PolygonError::Invalid(report.worst_violation()));
    }
    FiniteMetricTriangle::try_from(sample_polygon(p, m)?)
}

/// Largest sampled distance; zero for fewer than two points.
pub fn diameter<M: FiniteMetric + ?Sized>(space: &M) -> f64 {
    let n = space.len();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            d = d.max(space.dist(i, j));
        }
    }
    d
}

/// Machine-readable number format: 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x == x.trunc() && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    format!("{:.16e}", x)
}

/// Human-readable number format: 6 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&mag) {
        return format!("{:.5e}", x);
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}
