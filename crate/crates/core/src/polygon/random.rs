//! Random metric triangles: a boundary circle with isometry-preserving chords.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sample_triangle, validate, FiniteMetricTriangle, MetricPolygon, PolygonError, SideSpec};
use crate::metric::AmbientGraph;

const MAX_RETRIES: usize = 100;

/// Builds a triangle with sides `lengths` by adding `chords` random chords to
/// the boundary cycle, then samples `m` points per side.
///
/// Each chord joins two uniform boundary points and is shorter than their
/// current distance; chords that would break side isometry are redrawn.
pub fn random_metric_triangle(
    lengths: [f64; 3],
    chords: usize,
    m: usize,
    seed: u64,
) -> Result<FiniteMetricTriangle, PolygonError> {
    let poly = random_triangle_polygon(lengths, chords, seed)?;
    sample_triangle(&poly, m)
}

/// The ambient polygon behind [`random_metric_triangle`].
pub fn random_triangle_polygon(lengths: [f64; 3], chords: usize, seed: u64) -> Result<MetricPolygon, PolygonError> {
    for l in lengths {
        if !(l.is_finite() && l > 0.0) {
            return Err(PolygonError::BadParameter(format!("side lengths must be positive, got {l}")));
        }
    }
    let [a, b, c] = lengths;
    if a > b + c || b > a + c || c > a + b {
        return Err(PolygonError::BadParameter(format!(
            "side lengths {a}, {b}, {c} violate the triangle inequality"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = a + b + c;
    let min_chord = 1e-3 * a.min(b).min(c);
    let mut layout = Layout {
        lengths,
        cuts: Vec::new(),
        chords: Vec::new(),
    };
    let mut current = layout.build()?;
    for k in 0..chords {
        let mut placed = false;
        for _ in 0..MAX_RETRIES {
            let t1 = rng.random_range(0.0..total);
            let t2 = rng.random_range(0.0..total);
            let mut trial = layout.clone();
            trial.cuts.push(t1);
            trial.cuts.push(t2);
            let probe = trial.build()?;
            let d = probe.ambient.vdist(
                probe.ambient.vertex_index(&trial.vertex_at(t1))?,
                probe.ambient.vertex_index(&trial.vertex_at(t2))?,
            );
            if d <= min_chord {
                continue;
            }
            let len = rng.random_range(min_chord..d);
            trial.chords.push((t1, t2, len));
            let candidate = trial.build()?;
            if validate(&candidate, 2)?.valid {
                layout = trial;
                current = candidate;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(PolygonError::Exhausted(format!(
                "chord {} of {chords} rejected {MAX_RETRIES} times",
                k + 1
            )));
        }
    }
    Ok(current)
}

/// Side lengths in `[0.5, 2]` satisfying the triangle inequality and a chord
/// count in `0..=max_chords`, both drawn from `seed`.
pub fn stress_parameters(seed: u64, max_chords: usize) -> ([f64; 3], usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let l: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..=2.0));
        if l[0] < l[1] + l[2] && l[1] < l[0] + l[2] && l[2] < l[0] + l[1] {
            return (l, rng.random_range(0..=max_chords));
        }
    }
}

#[derive(Clone)]
struct Layout {
    lengths: [f64; 3],
    // boundary positions measured from p along pq, qr, rp
    cuts: Vec<f64>,
    chords: Vec<(f64, f64, f64)>,
}

impl Layout {
    fn corners(&self) -> [f64; 3] {
        [0.0, self.lengths[0], self.lengths[0] + self.lengths[1]]
    }

    fn stops(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.corners().to_vec();
        t.extend(self.cuts.iter().copied());
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    fn vertex_at(&self, t: f64) -> String {
        let corners = self.corners();
        for (name, c) in ["p", "q", "r"].iter().zip(corners) {
            if t == c {
                return name.to_string();
            }
        }
        let k = self.stops().iter().position(|&s| s == t).expect("cut is a stop");
        format!("c{k}")
    }

    fn build(&self) -> Result<MetricPolygon, PolygonError> {
        let stops = self.stops();
        let total: f64 = self.lengths.iter().sum();
        let ids: Vec<String> = stops.iter().map(|&t| self.vertex_at(t)).collect();
        let mut edges: Vec<(String, String, f64)> = Vec::new();
        for k in 0..stops.len() {
            let next = (k + 1) % stops.len();
            let end = if next == 0 { total } else { stops[next] };
            edges.push((ids[k].clone(), ids[next].clone(), end - stops[k]));
        }
        let boundary = edges.len();
        for &(t1, t2, len) in &self.chords {
            edges.push((self.vertex_at(t1), self.vertex_at(t2), len));
        }
        let g = AmbientGraph::new(&ids, &edges)?;
        let corners = self.corners();
        let mut sides = Vec::with_capacity(3);
        for j in 0..3 {
            let start = stops.iter().position(|&s| s == corners[j]).expect("corner is a stop");
            let stop = if j == 2 {
                boundary
            } else {
                stops.iter().position(|&s| s == corners[j + 1]).expect("corner is a stop")
            };
            sides.push(SideSpec {
                from: ids[start].clone(),
                path: (start..stop).map(|e| (e, true)).collect(),
            });
        }
        MetricPolygon::new(g, sides)
    }
}
