//! The named example spaces.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{MetricPolygon, PolygonError, SideSpec};
use crate::metric::AmbientGraph;

/// Built-in polygons.
#[derive(Debug, Clone, PartialEq)]
pub enum Example {
    /// Round circle of length 2π cut into three equal sides.
    Circle,
    /// Three circles of length 2π glued at one point.
    Rose,
    /// Tripod with the given leg lengths, at `p`, `q`, `r`.
    Tripod(f64, f64, f64),
    /// Triangle with sides of length 4 whose chords twist the heart.
    Heart,
    /// Circle of length 4 cut into four sides with three short chords.
    QuadQ(f64),
    /// Pentagon with length-2 sides drawn on a subdivided K5.
    PentagonK5,
    /// Pentagon with length-2 sides drawn on a subdivided K3,3.
    PentagonK33,
}

impl Example {
    pub fn all_names() -> &'static [&'static str] {
        &["circle", "rose", "tripod:1,1,1", "heart", "quad:0.1", "k5", "k33"]
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Example::Circle => write!(f, "circle"),
            Example::Rose => write!(f, "rose"),
            Example::Tripod(a, b, c) => write!(f, "tripod:{a},{b},{c}"),
            Example::Heart => write!(f, "heart"),
            Example::QuadQ(e) => write!(f, "quad:{e}"),
            Example::PentagonK5 => write!(f, "k5"),
            Example::PentagonK33 => write!(f, "k33"),
        }
    }
}

impl FromStr for Example {
    type Err = PolygonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |x: &str| -> Result<f64, PolygonError> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| PolygonError::BadParameter(format!("`{x}` is not a number")))
        };
        match (head.to_ascii_lowercase().as_str(), arg) {
            ("circle", None) => Ok(Example::Circle),
            ("rose", None) => Ok(Example::Rose),
            ("heart", None) => Ok(Example::Heart),
            ("k5" | "pentagon_k5", None) => Ok(Example::PentagonK5),
            ("k33" | "pentagon_k33", None) => Ok(Example::PentagonK33),
            ("tripod", Some(a)) => {
                let legs: Result<Vec<f64>, _> = a.split(',').map(num).collect();
                match legs?.as_slice() {
                    [l1, l2, l3] => Ok(Example::Tripod(*l1, *l2, *l3)),
                    _ => Err(PolygonError::BadParameter("tripod takes three leg lengths".into())),
                }
            }
            ("quad" | "quad_q", Some(a)) => Ok(Example::QuadQ(num(a)?)),
            _ => Err(PolygonError::UnknownExample(s.to_string())),
        }
    }
}

/// Builds a named example polygon.
pub fn build_example(which: &Example) -> Result<MetricPolygon, PolygonError> {
    match *which {
        Example::Circle => circle(),
        Example::Rose => rose(),
        Example::Tripod(a, b, c) => tripod(a, b, c),
        Example::Heart => heart(),
        Example::QuadQ(eps) => quad_q(eps),
        Example::PentagonK5 => pentagon_k5(),
        Example::PentagonK33 => pentagon_k33(),
    }
}

fn side(from: &str, path: &[(usize, bool)]) -> SideSpec {
    SideSpec {
        from: from.to_string(),
        path: path.to_vec(),
    }
}

// Side through a vertex sequence, each step taking the unique edge joining
// consecutive vertices.
fn side_through(g: &AmbientGraph, stops: &[&str]) -> Result<SideSpec, PolygonError> {
    let mut path = Vec::with_capacity(stops.len() - 1);
    for w in stops.windows(2) {
        let a = g.vertex_index(w[0])?;
        let b = g.vertex_index(w[1])?;
        let hits: Vec<(usize, bool)> = g
            .edges()
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                if e.u == a && e.v == b {
                    Some((i, true))
                } else if e.u == b && e.v == a {
                    Some((i, false))
                } else {
                    None
                }
            })
            .collect();
        match hits.as_slice() {
            [one] => path.push(*one),
            _ => {
                return Err(PolygonError::BadParameter(format!(
                    "expected exactly one edge between `{}` and `{}`",
                    w[0], w[1]
                )))
            }
        }
    }
    Ok(side(stops[0], &path))
}

fn circle() -> Result<MetricPolygon, PolygonError> {
    let l = 2.0 * PI / 3.0;
    let g = AmbientGraph::new(&["p", "q", "r"], &[("p", "q", l), ("q", "r", l), ("r", "p", l)])?;
    MetricPolygon::new(
        g,
        vec![side("p", &[(0, true)]), side("q", &[(1, true)]), side("r", &[(2, true)])],
    )
}

fn rose() -> Result<MetricPolygon, PolygonError> {
    // petal i is edges 2i (upper half, angle 0..pi from o) and 2i+1 (lower half)
    let g = AmbientGraph::new(
        &["o", "p", "q", "r"],
        &[
            ("o", "p", PI),
            ("o", "p", PI),
            ("o", "q", PI),
            ("o", "q", PI),
            ("o", "r", PI),
            ("o", "r", PI),
        ],
    )?;
    MetricPolygon::new(
        g,
        vec![
            side("p", &[(1, false), (2, true)]),
            side("q", &[(3, false), (4, true)]),
            side("r", &[(5, false), (0, true)]),
        ],
    )
}

fn tripod(l1: f64, l2: f64, l3: f64) -> Result<MetricPolygon, PolygonError> {
    for l in [l1, l2, l3] {
        if !(l.is_finite() && l > 0.0) {
            return Err(PolygonError::BadParameter(format!("tripod legs must be positive, got {l}")));
        }
    }
    let g = AmbientGraph::new(&["o", "p", "q", "r"], &[("o", "p", l1), ("o", "q", l2), ("o", "r", l3)])?;
    MetricPolygon::new(
        g,
        vec![
            side("p", &[(0, false), (1, true)]),
            side("q", &[(1, false), (2, true)]),
            side("r", &[(2, false), (0, true)]),
        ],
    )
}

fn heart() -> Result<MetricPolygon, PolygonError> {
    // a sits mid-[pq], b mid-[rp]; e and c are at distance 1 from q and r on
    // [qr]; the chords a-c and b-e cross over each other
    let g = AmbientGraph::new(
        &["p", "q", "r", "u1", "a", "u2", "e", "g", "c", "u3", "b", "u4"],
        &[
            ("p", "u1", 1.0),
            ("u1", "a", 1.0),
            ("a", "u2", 1.0),
            ("u2", "q", 1.0),
            ("q", "e", 1.0),
            ("e", "g", 1.0),
            ("g", "c", 1.0),
            ("c", "r", 1.0),
            ("r", "u3", 1.0),
            ("u3", "b", 1.0),
            ("b", "u4", 1.0),
            ("u4", "p", 1.0),
            ("a", "c", 1.0),
            ("b", "e", 1.0),
        ],
    )?;
    let sides = vec![
        side_through(&g, &["p", "u1", "a", "u2", "q"])?,
        side_through(&g, &["q", "e", "g", "c", "r"])?,
        side_through(&g, &["r", "u3", "b", "u4", "p"])?,
    ];
    MetricPolygon::new(g, sides)
}

fn quad_q(eps: f64) -> Result<MetricPolygon, PolygonError> {
    if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
        return Err(PolygonError::BadParameter(format!("quad chord length must be in (0, 1], got {eps}")));
    }
    let ids = ["p1", "m1", "p2", "m2", "p3", "m3", "p4", "m4"];
    let mut edges: Vec<(&str, &str, f64)> = (0..8).map(|k| (ids[k], ids[(k + 1) % 8], 0.5)).collect();
    edges.push(("p1", "p3", eps));
    edges.push(("p2", "p4", eps));
    edges.push(("m1", "m3", eps));
    let g = AmbientGraph::new(&ids, &edges)?;
    let sides = (0..4)
        .map(|j| side(ids[2 * j], &[(2 * j, true), (2 * j + 1, true)]))
        .collect();
    MetricPolygon::new(g, sides)
}

fn pentagon_k5() -> Result<MetricPolygon, PolygonError> {
    let mut ids: Vec<String> = (1..=5).map(|i| format!("p{i}")).collect();
    ids.extend((1..=5).map(|i| format!("m{i}")));
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    // boundary edges p_i p_{i+1} are split at m_i
    for i in 1..=5 {
        let next = i % 5 + 1;
        edges.push((format!("p{i}"), format!("m{i}"), 0.5));
        edges.push((format!("m{i}"), format!("p{next}"), 0.5));
    }
    for (a, b) in [(1, 4), (3, 1), (5, 3), (2, 5), (4, 2)] {
        edges.push((format!("p{a}"), format!("p{b}"), 1.0));
    }
    let g = AmbientGraph::new(&ids, &edges)?;
    let sides = vec![
        side_through(&g, &["m1", "p1", "p4", "m3"])?,
        side_through(&g, &["m3", "p3", "p1", "m5"])?,
        side_through(&g, &["m5", "p5", "p3", "m2"])?,
        side_through(&g, &["m2", "p2", "p5", "m4"])?,
        side_through(&g, &["m4", "p4", "p2", "m1"])?,
    ];
    MetricPolygon::new(g, sides)
}

fn pentagon_k33() -> Result<MetricPolygon, PolygonError> {
    // parts {a1,a2,a3} and {b1,b2,b3}; every edge a_i b_j is split at m_ij
    let mut ids: Vec<String> = Vec::new();
    for i in 1..=3 {
        ids.push(format!("a{i}"));
    }
    for j in 1..=3 {
        ids.push(format!("b{j}"));
    }
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    for i in 1..=3 {
        for j in 1..=3 {
            ids.push(format!("m{i}{j}"));
            edges.push((format!("a{i}"), format!("m{i}{j}"), 0.5));
            edges.push((format!("m{i}{j}"), format!("b{j}"), 0.5));
        }
    }
    let g = AmbientGraph::new(&ids, &edges)?;
    // each side leaves a midpoint for its a-end, crosses one full edge and
    // enters the next midpoint from its b-end
    let sides = vec![
        side_through(&g, &["m11", "a1", "m12", "b2", "m22"])?,
        side_through(&g, &["m22", "a2", "m23", "b3", "m33"])?,
        side_through(&g, &["m33", "a3", "m32", "b2", "m12"])?,
        side_through(&g, &["m12", "a1", "m13", "b3", "m23"])?,
        side_through(&g, &["m23", "a2", "m21", "b1", "m11"])?,
    ];
    MetricPolygon::new(g, sides)
}
