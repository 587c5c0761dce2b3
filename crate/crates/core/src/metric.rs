//! Weighted graphs carrying a length metric, and exact distances between
//! points that sit anywhere on their edges.
//!
//! A finite metric graph is the model for every space in this crate: the
//! distance between two points is the length of the shortest path joining
//! them. Vertex-to-vertex distances are computed once (Dijkstra from every
//! vertex) and cached, after which a point-to-point query is a constant-time
//! minimum over the four endpoint routings plus the direct same-edge path.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building or querying an [`AmbientGraph`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("edge {index} has non-positive or non-finite length {len}")]
    BadLength { index: usize, len: f64 },
    #[error("edge {index} is a self-loop at `{vertex}`")]
    SelfLoop { index: usize, vertex: String },
    #[error("graph is disconnected: `{0}` is unreachable")]
    Disconnected(String),
    #[error("graph has no vertices")]
    Empty,
    #[error("edge index {0} out of range")]
    UnknownEdge(usize),
    #[error("offset {offset} outside [0, {len}] on edge {edge}")]
    BadOffset { edge: usize, offset: f64, len: f64 },
    #[error("empty vertex set")]
    EmptySet,
    #[error("vertex `{0}` has no incident edge")]
    Isolated(String),
}

/// Offsets within this distance of an edge's ends are accepted and clamped.
const OFFSET_SLACK: f64 = 1e-12;

/// One undirected edge between vertex indices `u` and `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

/// A connected, positively weighted, undirected multigraph with its
/// shortest-path metric precomputed.
///
/// Parallel edges are kept as separate records (the three-petal rose joins
/// the same pair of vertices by two different arcs).
#[derive(Debug, Clone)]
pub struct AmbientGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    // row-major all-pairs vertex distances
    table: Vec<f64>,
}

/// Single-source shortest-path distances to every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub source: usize,
    pub dist: Vec<f64>,
}

/// A point on the graph: an edge together with the distance travelled from
/// that edge's `u` endpoint. Offsets `0` and `len` are the endpoint vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint {
    pub edge: usize,
    pub offset: f64,
}

impl GraphPoint {
    pub fn new(edge: usize, offset: f64) -> Self {
        Self { edge, offset }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on vertex index for a stable pop order
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl AmbientGraph {
    /// Builds the graph and precomputes all vertex-to-vertex distances.
    pub fn new<S, T>(vertices: &[S], edges: &[(T, T, f64)]) -> Result<Self, GraphError>
    where
        S: AsRef<str>,
        T: AsRef<str>,
    {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut ids = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        for v in vertices {
            let id = v.as_ref().to_string();
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(GraphError::DuplicateVertex(id));
            }
            ids.push(id);
        }
        let mut out = Vec::with_capacity(edges.len());
        let mut incident = vec![Vec::new(); ids.len()];
        for (i, (u, v, len)) in edges.iter().enumerate() {
            let ui = *index
                .get(u.as_ref())
                .ok_or_else(|| GraphError::UnknownVertex(u.as_ref().to_string()))?;
            let vi = *index
                .get(v.as_ref())
                .ok_or_else(|| GraphError::UnknownVertex(v.as_ref().to_string()))?;
            if !(len.is_finite() && *len > 0.0) {
                return Err(GraphError::BadLength { index: i, len: *len });
            }
            if ui == vi {
                return Err(GraphError::SelfLoop {
                    index: i,
                    vertex: ids[ui].clone(),
                });
            }
            incident[ui].push(i);
            incident[vi].push(i);
            out.push(Edge {
                u: ui,
                v: vi,
                len: *len,
            });
        }
        let mut graph = Self {
            ids,
            index,
            edges: out,
            incident,
            table: Vec::new(),
        };
        let n = graph.ids.len();
        let mut table = Vec::with_capacity(n * n);
        for s in 0..n {
            let field = graph.dijkstra(s);
            if let Some(bad) = field.dist.iter().position(|d| !d.is_finite()) {
                return Err(GraphError::Disconnected(graph.ids[bad].clone()));
            }
            table.extend_from_slice(&field.dist);
        }
        graph.table = table;
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Result<&Edge, GraphError> {
        self.edges.get(i).ok_or(GraphError::UnknownEdge(i))
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
    }

    fn dijkstra(&self, source: usize) -> DistanceField {
        let mut dist = vec![f64::INFINITY; self.ids.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem {
            dist: 0.0,
            vertex: source,
        });
        while let Some(HeapItem { dist: d, vertex }) = heap.pop() {
            if d > dist[vertex] {
                continue;
            }
            for &e in &self.incident[vertex] {
                let edge = self.edges[e];
                let next = if edge.u == vertex { edge.v } else { edge.u };
                let cand = d + edge.len;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(HeapItem {
                        dist: cand,
                        vertex: next,
                    });
                }
            }
        }
        DistanceField { source, dist }
    }

    /// Exact single-source distances from the vertex named `source`.
    pub fn vertex_distances(&self, source: &str) -> Result<DistanceField, GraphError> {
        let s = self.vertex_index(source)?;
        let n = self.ids.len();
        Ok(DistanceField {
            source: s,
            dist: self.table[s * n..(s + 1) * n].to_vec(),
        })
    }

    /// Cached vertex-to-vertex distance by index.
    #[inline]
    pub fn vdist(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.ids.len() + b]
    }

    /// A point sitting exactly on the named vertex.
    pub fn vertex_point(&self, id: &str) -> Result<GraphPoint, GraphError> {
        let v = self.vertex_index(id)?;
        self.vertex_point_at(v)
    }

    pub(crate) fn vertex_point_at(&self, v: usize) -> Result<GraphPoint, GraphError> {
        let e = *self.incident[v]
            .first()
            .ok_or_else(|| GraphError::Isolated(self.ids[v].clone()))?;
        let edge = self.edges[e];
        let offset = if edge.u == v { 0.0 } else { edge.len };
        Ok(GraphPoint { edge: e, offset })
    }

    /// Checks a point against its edge and clamps offsets that overshoot
    /// the ends by rounding noise.
    pub fn check_point(&self, p: GraphPoint) -> Result<GraphPoint, GraphError> {
        let edge = self.edge(p.edge)?;
        if !p.offset.is_finite()
            || p.offset < -OFFSET_SLACK
            || p.offset > edge.len + OFFSET_SLACK
        {
            return Err(GraphError::BadOffset {
                edge: p.edge,
                offset: p.offset,
                len: edge.len,
            });
        }
        Ok(GraphPoint {
            edge: p.edge,
            offset: p.offset.clamp(0.0, edge.len),
        })
    }

    /// Infimal path length between two points of the graph.
    pub fn point_distance(&self, a: GraphPoint, b: GraphPoint) -> Result<f64, GraphError> {
        let a = self.check_point(a)?;
        let b = self.check_point(b)?;
        Ok(self.point_distance_unchecked(a, b))
    }

    pub(crate) fn point_distance_unchecked(&self, a: GraphPoint, b: GraphPoint) -> f64 {
        let ea = self.edges[a.edge];
        let eb = self.edges[b.edge];
        let ends_a = [(ea.u, a.offset), (ea.v, ea.len - a.offset)];
        let ends_b = [(eb.u, b.offset), (eb.v, eb.len - b.offset)];
        let mut best = if a.edge == b.edge {
            (a.offset - b.offset).abs()
        } else {
            f64::INFINITY
        };
        for &(va, ca) in &ends_a {
            for &(vb, cb) in &ends_b {
                let d = ca + self.vdist(va, vb) + cb;
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    /// Distance from `x` to the nearest vertex of `set`.
    pub fn dist_to_vertex_set(&self, x: GraphPoint, set: &[&str]) -> Result<f64, GraphError> {
        if set.is_empty() {
            return Err(GraphError::EmptySet);
        }
        let x = self.check_point(x)?;
        let mut best = f64::INFINITY;
        for id in set {
            let w = self.vertex_point(id)?;
            best = best.min(self.point_distance_unchecked(x, w));
        }
        Ok(best)
    }

    /// Distance from `x` to the union of whole edges `edges`.
    ///
    /// Any path into an edge enters through one of its endpoints, so the
    /// minimum is zero when `x` lies on one of the edges and is otherwise
    /// attained at an endpoint.
    pub fn dist_to_edge_union(&self, x: GraphPoint, edges: &[usize]) -> Result<f64, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::EmptySet);
        }
        let x = self.check_point(x)?;
        let mut best = f64::INFINITY;
        for &e in edges {
            let edge = *self.edge(e)?;
            if e == x.edge {
                return Ok(0.0);
            }
            for v in [edge.u, edge.v] {
                let w = self.vertex_point_at(v)?;
                best = best.min(self.point_distance_unchecked(x, w));
            }
        }
        Ok(best)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.ids.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    u: self.ids[e.u].clone(),
                    v: self.ids[e.v].clone(),
                    len: e.len,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        let edges: Vec<(&str, &str, f64)> = json
            .edges
            .iter()
            .map(|e| (e.u.as_str(), e.v.as_str(), e.len))
            .collect();
        Self::new(&json.vertices, &edges)
    }
}

/// Wire form of a graph: `{"vertices":[ids],"edges":[{"u":id,"v":id,"len":x}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: String,
    pub v: String,
    pub len: f64,
}

/// Any finite metric space given by indexed points.
pub trait FiniteMetric {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense symmetric distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Fills the upper triangle from `f` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                m.data[i * n + j] = d;
                m.data[j * n + i] = d;
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn set(&mut self, i: usize, j: usize, d: f64) {
        self.data[i * self.n + j] = d;
        self.data[j * self.n + i] = d;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Largest asymmetry and diagonal magnitude.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            worst = worst.max(self.data[i * self.n + i].abs());
            for j in i + 1..self.n {
                worst = worst.max((self.data[i * self.n + j] - self.data[j * self.n + i]).abs());
            }
        }
        worst
    }

    /// Most negative value of `d(i,k) + d(k,j) - d(i,j)`; zero for a metric.
    pub fn worst_triangle_slack(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dij = self.data[i * n + j];
                for k in 0..n {
                    let s = self.data[i * n + k] + self.data[k * n + j] - dij;
                    if s < worst {
                        worst = s;
                    }
                }
            }
        }
        worst
    }
}

impl FiniteMetric for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}
