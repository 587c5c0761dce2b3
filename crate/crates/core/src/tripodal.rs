//! Comparison tripods and the tripodal planar embedding of a metric triangle.
//!
//! Each side of the triangle is folded onto two legs of its comparison
//! tripod, the tripod is laid flat in the plane with legs at 120°, and every
//! point is then pushed off the tripod by its distance to the other two
//! sides, in a fixed direction per side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::FiniteMetric;
use crate::polygon::{fmt_num, FiniteMetricTriangle, SamplePoint};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Unit directions of the three legs in the plane.
pub const LEG_DIRECTIONS: [PlanarPoint; 3] = [
    PlanarPoint { x: 1.0, y: 0.0 },
    PlanarPoint { x: -0.5, y: SQRT3_2 },
    PlanarPoint { x: -0.5, y: -SQRT3_2 },
];

/// Push-off direction for points of each side; each is perpendicular to the
/// two legs its side folds onto and points away from the third.
pub const DISPLACEMENTS: [PlanarPoint; 3] = [
    PlanarPoint { x: 0.5, y: SQRT3_2 },
    PlanarPoint { x: -1.0, y: 0.0 },
    PlanarPoint { x: 0.5, y: -SQRT3_2 },
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TripodalError {
    #[error("Gromov product at {vertex} is negative ({value:e}); the triangle is invalid")]
    NegativeProduct { vertex: char, value: f64 },
    #[error("arc {arc} is outside side {side} of length {len}")]
    ArcOutOfRange { side: usize, arc: f64, len: f64 },
    #[error("side index {0} out of range")]
    BadSide(usize),
    #[error("malformed embedding file: {0}")]
    BadEmbedding(String),
}

/// Gromov products at the three vertices; these are the leg lengths of the
/// comparison tripod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GromovProducts {
    pub at_p: f64,
    pub at_q: f64,
    pub at_r: f64,
}

impl GromovProducts {
    /// From side lengths `|pq|, |qr|, |rp|`.
    pub fn from_side_lengths(sides: [f64; 3]) -> Result<Self, TripodalError> {
        let [pq, qr, rp] = sides;
        let tol = 1e-12 * (pq + qr + rp).max(1.0);
        let clean = |vertex: char, v: f64| {
            if v < -tol {
                Err(TripodalError::NegativeProduct { vertex, value: v })
            } else {
                Ok(v.max(0.0))
            }
        };
        Ok(Self {
            at_p: clean('p', 0.5 * (pq + rp - qr))?,
            at_q: clean('q', 0.5 * (pq + qr - rp))?,
            at_r: clean('r', 0.5 * (qr + rp - pq))?,
        })
    }

    pub fn legs(&self) -> [f64; 3] {
        [self.at_p, self.at_q, self.at_r]
    }

    pub fn tripod(&self) -> Tripod {
        Tripod { legs: self.legs() }
    }
}

pub fn gromov_products(t: &FiniteMetricTriangle) -> Result<GromovProducts, TripodalError> {
    let s = &t.side_lengths;
    GromovProducts::from_side_lengths([s[0], s[1], s[2]])
}

/// The three legs, named by the triangle vertex at their tip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leg {
    P,
    Q,
    R,
}

impl Leg {
    pub const ALL: [Leg; 3] = [Leg::P, Leg::Q, Leg::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Leg {
        Self::ALL[i % 3]
    }
}

/// Three segments glued at a common center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tripod {
    pub legs: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripodPoint {
    pub leg: Leg,
    pub radius: f64,
}

impl TripodPoint {
    pub fn is_center(&self) -> bool {
        self.radius == 0.0
    }
}

/// Path distance inside a tripod.
pub fn tripod_distance(a: TripodPoint, b: TripodPoint) -> f64 {
    if a.leg == b.leg {
        (a.radius - b.radius).abs()
    } else {
        a.radius + b.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }

    pub fn dist(self, o: Self) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Folds arc `arc` of side `side` onto the tripod. Side `j` runs from the
/// tip of leg `j` to the tip of leg `j+1`; the split point sits at the arc
/// equal to the starting leg length.
pub fn project_to_tripod(
    products: &GromovProducts,
    side: usize,
    arc: f64,
) -> Result<TripodPoint, TripodalError> {
    if side > 2 {
        return Err(TripodalError::BadSide(side));
    }
    let legs = products.legs();
    let (a, b) = (side, (side + 1) % 3);
    let len = legs[a] + legs[b];
    let tol = 1e-12 * len.max(1.0);
    if !arc.is_finite() || arc < -tol || arc > len + tol {
        return Err(TripodalError::ArcOutOfRange { side, arc, len });
    }
    let arc = arc.clamp(0.0, len);
    if arc == len {
        return Ok(TripodPoint {
            leg: Leg::from_index(b),
            radius: legs[b],
        });
    }
    Ok(if arc <= legs[a] {
        TripodPoint {
            leg: Leg::from_index(a),
            radius: legs[a] - arc,
        }
    } else {
        TripodPoint {
            leg: Leg::from_index(b),
            radius: (arc - legs[a]).min(legs[b]),
        }
    })
}

/// Lays the tripod flat with legs along [`LEG_DIRECTIONS`].
pub fn embed_tripod(tp: TripodPoint, _tripod: &Tripod) -> PlanarPoint {
    LEG_DIRECTIONS[tp.leg.index()].scale(tp.radius)
}

/// Distance from sample `i` to the union of the two sides not carrying it.
///
/// Graph-backed samples carry the exact value. Otherwise the minimum over
/// the samples of the other sides is used, which overestimates by at most
/// one grid step.
pub fn dist_to_opposite(t: &FiniteMetricTriangle, i: usize) -> f64 {
    if let Some(opp) = &t.opposite {
        return opp[i];
    }
    let side = t.points[i].side;
    (0..t.len())
        .filter(|&k| t.points[k].side != side)
        .map(|k| t.dist(i, k))
        .fold(f64::INFINITY, f64::min)
}

/// Image of sample `i` under the tripodal embedding.
pub fn tripodal_embed(t: &FiniteMetricTriangle, products: &GromovProducts, i: usize) -> Result<PlanarPoint, TripodalError> {
    let pt = &t.points[i];
    let tp = project_to_tripod(products, pt.side, pt.arc)?;
    let base = embed_tripod(tp, &products.tripod());
    Ok(base.add(DISPLACEMENTS[pt.side].scale(dist_to_opposite(t, i))))
}

/// Images of all samples, in sample order.
pub fn tripodal_images(t: &FiniteMetricTriangle) -> Result<Vec<PlanarPoint>, TripodalError> {
    let products = gromov_products(t)?;
    (0..t.len())
        .into_par_iter()
        .map(|i| tripodal_embed(t, &products, i))
        .collect()
}

/// Writes `side,arc,x,y,label` rows; sides are 1-based.
pub fn write_embedding_csv<W: std::io::Write>(
    points: &[SamplePoint],
    images: &[PlanarPoint],
    w: W,
) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["side", "arc", "x", "y", "label"])?;
    for (p, z) in points.iter().zip(images) {
        out.write_record([
            (p.side + 1).to_string(),
            fmt_num(p.arc),
            fmt_num(z.x),
            fmt_num(z.y),
            p.vertex.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct EmbeddingRow {
    side: usize,
    arc: f64,
    x: f64,
    y: f64,
    #[serde(default)]
    label: Option<String>,
}

/// Reads an embedding file written by [`write_embedding_csv`]; the label
/// column is optional.
pub fn read_embedding_csv<R: std::io::Read>(r: R) -> Result<(Vec<SamplePoint>, Vec<PlanarPoint>), TripodalError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let mut points = Vec::new();
    let mut images = Vec::new();
    for row in rdr.deserialize::<EmbeddingRow>() {
        let row = row.map_err(|e| TripodalError::BadEmbedding(e.to_string()))?;
        if row.side == 0 {
            return Err(TripodalError::BadEmbedding("sides are numbered from 1".into()));
        }
        points.push(SamplePoint {
            side: row.side - 1,
            arc: row.arc,
            vertex: row.label.filter(|l| !l.is_empty()),
        });
        images.push(PlanarPoint::new(row.x, row.y));
    }
    Ok((points, images))
}
