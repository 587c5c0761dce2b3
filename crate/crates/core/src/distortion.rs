//! Distortion of sampled maps into the plane, pairwise certification of the
//! tripodal embedding, and the four-point lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::FiniteMetric;
use crate::polygon::{fmt_sig, FiniteMetricTriangle};
use crate::tripodal::{GromovProducts, Leg, PlanarPoint};

/// Pairs whose images are closer than this count as coincident.
pub const COINCIDENT_TOL: f64 = 1e-9;
/// Slack on the squared-ratio case bounds.
pub const CASE_TOL: f64 = 1e-9;
/// Quadruple budget for an exhaustive four-point scan.
pub const EXHAUSTIVE_QUADS: u64 = 2_000_000;
/// Quadruples drawn when the scan is subsampled.
pub const SAMPLED_QUADS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("{images} images for {points} points")]
    LengthMismatch { points: usize, images: usize },
    #[error("samples {0} and {1} are at distance 0 but have distinct images")]
    CoincidentSamples(usize, usize),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("distances do not form a metric: {0}")]
    NotMetric(String),
}

/// Worst expansion and contraction of a sampled map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Largest `|f(x)-f(y)| / d(x,y)`.
    #[serde(rename = "L1")]
    pub l1: f64,
    /// Largest `d(x,y) / |f(x)-f(y)|`.
    #[serde(rename = "L0")]
    pub l0: f64,
    pub lip: f64,
    #[serde(rename = "argmaxExpand")]
    pub argmax_expand: [usize; 2],
    #[serde(rename = "argmaxContract")]
    pub argmax_contract: [usize; 2],
    #[serde(rename = "gridStep")]
    pub grid_step: f64,
}

impl DistortionReport {
    pub fn to_markdown(&self) -> String {
        let pair = |p: [usize; 2]| format!("({}, {})", p[0], p[1]);
        format!(
            "| quantity | value |\n|---|---|\n| expansion L1 | {} |\n| contraction L0 | {} |\n| distortion | {} |\n| worst expansion pair | {} |\n| worst contraction pair | {} |\n| grid step | {} |\n",
            fmt_sig(self.l1),
            fmt_sig(self.l0),
            fmt_sig(self.lip),
            pair(self.argmax_expand),
            pair(self.argmax_contract),
            fmt_sig(self.grid_step)
        )
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    pair: [usize; 2],
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        pair: [usize::MAX, usize::MAX],
    };

    // strict improvement keeps the lowest pair on ties
    fn offer(&mut self, value: f64, pair: [usize; 2]) {
        if value > self.value || (value == self.value && pair < self.pair) {
            *self = Best { value, pair };
        }
    }
}

/// Exhaustive pairwise distortion of `images` as a map from `space`.
///
/// Pairs at distance zero are skipped when their images agree; distinct
/// points mapped to one image give an infinite contraction.
pub fn distortion_of_map<M>(space: &M, images: &[PlanarPoint], grid_step: f64) -> Result<DistortionReport, DistortionError>
where
    M: FiniteMetric + Sync + ?Sized,
{
    let n = space.len();
    if images.len() != n {
        return Err(DistortionError::LengthMismatch { points: n, images: images.len() });
    }
    if n < 2 {
        return Err(DistortionError::TooFewPoints { need: 2, got: n });
    }
    let rows: Result<Vec<(Best, Best)>, DistortionError> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut expand = Best::NONE;
            let mut contract = Best::NONE;
            for j in i + 1..n {
                let d = space.dist(i, j);
                let e = images[i].dist(images[j]);
                if d == 0.0 {
                    if e > COINCIDENT_TOL {
                        return Err(DistortionError::CoincidentSamples(i, j));
                    }
                    continue;
                }
                expand.offer(e / d, [i, j]);
                contract.offer(if e == 0.0 { f64::INFINITY } else { d / e }, [i, j]);
            }
            Ok((expand, contract))
        })
        .collect();
    let mut expand = Best::NONE;
    let mut contract = Best::NONE;
    for (e, c) in rows? {
        expand.offer(e.value, e.pair);
        contract.offer(c.value, c.pair);
    }
    if expand.pair[0] == usize::MAX {
        // every pair coincides
        return Ok(DistortionReport {
            l1: 0.0,
            l0: 0.0,
            lip: 1.0,
            argmax_expand: [0, 0],
            argmax_contract: [0, 0],
            grid_step,
        });
    }
    Ok(DistortionReport {
        l1: expand.value,
        l0: contract.value,
        lip: expand.value * contract.value,
        argmax_expand: expand.pair,
        argmax_contract: contract.pair,
        grid_step,
    })
}

/// A half of one side: the points of side `side` no farther (along the side)
/// from triangle vertex `vertex` than its Gromov product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfSide {
    pub side: usize,
    pub vertex: Leg,
}

/// Which of the five pair configurations applies, with the half-sides that
/// realize it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub case: u8,
    pub x: HalfSide,
    pub y: HalfSide,
}

/// Admissible interval for `|F(x)-F(y)|^2 / d(x,y)^2` by case.
pub fn case_interval(case: u8) -> (f64, f64) {
    match case {
        1 | 2 => (0.75, 3.0),
        3 => (3.0 / 16.0, 4.0),
        _ => (3.0 / 16.0, 7.0),
    }
}

// the vertex two sides share
fn shared_vertex(a: usize, b: usize) -> Leg {
    // side j joins legs j and j+1
    let ends = |s: usize| [s, (s + 1) % 3];
    let ea = ends(a);
    let eb = ends(b);
    Leg::from_index(if eb.contains(&ea[0]) { ea[0] } else { ea[1] })
}

fn case_of(x: HalfSide, y: HalfSide) -> u8 {
    if x == y {
        1
    } else if x.side == y.side {
        2
    } else if x.vertex == y.vertex {
        3
    } else {
        let shared = shared_vertex(x.side, y.side);
        if x.vertex == shared || y.vertex == shared {
            4
        } else {
            5
        }
    }
}

/// Every half-side containing the sample with arc `arc` on `side`. Split
/// points lie in both halves; polygon vertices also lie on the neighbouring
/// side.
pub fn half_sides(products: &GromovProducts, side_lengths: &[f64], side: usize, arc: f64) -> Vec<HalfSide> {
    let legs = products.legs();
    let start = legs[side];
    let mut out = Vec::with_capacity(3);
    if arc <= start {
        out.push(HalfSide { side, vertex: Leg::from_index(side) });
    }
    if arc >= start {
        out.push(HalfSide { side, vertex: Leg::from_index(side + 1) });
    }
    if arc == 0.0 {
        let prev = (side + 2) % 3;
        out.push(HalfSide { side: prev, vertex: Leg::from_index(side) });
    }
    if arc == side_lengths[side] {
        let next = (side + 1) % 3;
        out.push(HalfSide { side: next, vertex: Leg::from_index(next) });
    }
    out
}

/// Classifies a pair of samples. Among all memberships the one with the
/// widest admissible interval wins, lowest case number on ties.
pub fn classify_pair(t: &FiniteMetricTriangle, products: &GromovProducts, x: usize, y: usize) -> CaseLabel {
    let (px, py) = (&t.points[x], &t.points[y]);
    let hx = half_sides(products, &t.side_lengths, px.side, px.arc);
    let hy = half_sides(products, &t.side_lengths, py.side, py.arc);
    let mut best: Option<(f64, CaseLabel)> = None;
    for &a in &hx {
        for &b in &hy {
            let case = case_of(a, b);
            let (lo, hi) = case_interval(case);
            let width = hi - lo;
            let better = match best {
                None => true,
                Some((w, l)) => width > w || (width == w && case < l.case),
            };
            if better {
                best = Some((width, CaseLabel { case, x: a, y: b }));
            }
        }
    }
    best.expect("every sample lies on some half-side").1
}

/// Result of checking one pair against its case interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseCheck {
    pub pass: bool,
    pub ratio_sq: f64,
    /// Distance to the nearer end of the interval; negative when outside.
    pub margin: f64,
}

pub fn case_bound_check(label: &CaseLabel, d: f64, image_dist: f64) -> CaseCheck {
    let (lo, hi) = case_interval(label.case);
    let ratio_sq = (image_dist / d).powi(2);
    let margin = (ratio_sq - lo).min(hi - ratio_sq);
    CaseCheck {
        pass: margin >= -CASE_TOL,
        ratio_sq,
        margin,
    }
}

/// Per-case tallies from [`certify_pairs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseStats {
    pub pairs: u64,
    pub min_ratio_sq: f64,
    pub max_ratio_sq: f64,
    pub worst_margin: f64,
}

impl CaseStats {
    const EMPTY: CaseStats = CaseStats {
        pairs: 0,
        min_ratio_sq: f64::INFINITY,
        max_ratio_sq: f64::NEG_INFINITY,
        worst_margin: f64::INFINITY,
    };

    fn add(&mut self, c: &CaseCheck) {
        self.pairs += 1;
        self.min_ratio_sq = self.min_ratio_sq.min(c.ratio_sq);
        self.max_ratio_sq = self.max_ratio_sq.max(c.ratio_sq);
        self.worst_margin = self.worst_margin.min(c.margin);
    }

    fn merge(&mut self, o: &CaseStats) {
        self.pairs += o.pairs;
        self.min_ratio_sq = self.min_ratio_sq.min(o.min_ratio_sq);
        self.max_ratio_sq = self.max_ratio_sq.max(o.max_ratio_sq);
        self.worst_margin = self.worst_margin.min(o.worst_margin);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseFailure {
    pub pair: [usize; 2],
    pub label: CaseLabel,
    pub check: CaseCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub pairs_checked: u64,
    /// Index `k` holds case `k + 1`.
    pub per_case: [CaseStats; 5],
    /// First failures in pair order, at most [`Certification::MAX_LISTED`].
    pub failures: Vec<CaseFailure>,
    pub failure_count: u64,
}

impl Certification {
    pub const MAX_LISTED: usize = 20;

    pub fn all_pass(&self) -> bool {
        self.failure_count == 0
    }
}

/// Checks every pair of distinct samples against its case interval.
pub fn certify_pairs(
    t: &FiniteMetricTriangle,
    products: &GromovProducts,
    images: &[PlanarPoint],
) -> Result<Certification, DistortionError> {
    let n = t.len();
    if images.len() != n {
        return Err(DistortionError::LengthMismatch { points: n, images: images.len() });
    }
    let rows: Vec<([CaseStats; 5], Vec<CaseFailure>, u64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut stats = [CaseStats::EMPTY; 5];
            let mut fails = Vec::new();
            let mut count = 0;
            for j in i + 1..n {
                let d = t.dist(i, j);
                if d == 0.0 {
                    continue;
                }
                let label = classify_pair(t, products, i, j);
                let check = case_bound_check(&label, d, images[i].dist(images[j]));
                stats[(label.case - 1) as usize].add(&check);
                if !check.pass {
                    count += 1;
                    if fails.len() < Certification::MAX_LISTED {
                        fails.push(CaseFailure { pair: [i, j], label, check });
                    }
                }
            }
            (stats, fails, count)
        })
        .collect();
    let mut per_case = [CaseStats::EMPTY; 5];
    let mut failures = Vec::new();
    let mut failure_count = 0;
    for (stats, fails, count) in rows {
        for k in 0..5 {
            per_case[k].merge(&stats[k]);
        }
        failure_count += count;
        for f in fails {
            if failures.len() < Certification::MAX_LISTED {
                failures.push(f);
            }
        }
    }
    Ok(Certification {
        pairs_checked: per_case.iter().map(|s| s.pairs).sum(),
        per_case,
        failures,
        failure_count,
    })
}

/// Lower bound on the distortion of any planar embedding of four points
/// `1,2,3,4`, taken as a quadrilateral with diagonals `13` and `24`.
///
/// In the plane the squared diagonals of a quadrilateral sum to at most the
/// squared sides, so an embedding stretching by at most `L1` and shrinking
/// by at most `L0` needs `(L0 L1)^2 >= (d13^2 + d24^2) / (sum of sides^2)`.
pub fn four_point_lower_bound(d12: f64, d23: f64, d34: f64, d41: f64, d13: f64, d24: f64) -> Result<f64, DistortionError> {
    let all = [d12, d23, d34, d41, d13, d24];
    if all.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(DistortionError::NotMetric("distances must be finite and nonnegative".into()));
    }
    let tol = 1e-12 * all.iter().copied().fold(1.0, f64::max);
    for (name, a, b, c) in [
        ("123", d12, d23, d13),
        ("124", d12, d24, d41),
        ("134", d13, d34, d41),
        ("234", d23, d34, d24),
    ] {
        if a > b + c + tol || b > a + c + tol || c > a + b + tol {
            return Err(DistortionError::NotMetric(format!("triangle {name} fails")));
        }
    }
    Ok(four_point_raw(d12, d23, d34, d41, d13, d24))
}

#[inline]
fn four_point_raw(d12: f64, d23: f64, d34: f64, d41: f64, d13: f64, d24: f64) -> f64 {
    let den = d12 * d12 + d23 * d23 + d34 * d34 + d41 * d41;
    if den == 0.0 {
        return 1.0;
    }
    ((d13 * d13 + d24 * d24) / den).sqrt().max(1.0)
}

/// Best bound over one quadruple's three diagonal pairings; returns the
/// bound and the quadruple in cycle order.
fn best_pairing<M: FiniteMetric + ?Sized>(s: &M, q: [usize; 4]) -> (f64, [usize; 4]) {
    let [a, b, c, d] = q;
    let mut best = (f64::NEG_INFINITY, q);
    for cyc in [[a, b, c, d], [a, c, b, d], [a, b, d, c]] {
        let [w, x, y, z] = cyc;
        let v = four_point_raw(s.dist(w, x), s.dist(x, y), s.dist(y, z), s.dist(z, w), s.dist(w, y), s.dist(x, z));
        if v > best.0 {
            best = (v, cyc);
        }
    }
    best
}

/// Largest four-point bound with its witness in cycle order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourPointWitness {
    pub bound: f64,
    pub cycle: [usize; 4],
    pub exhaustive: bool,
}

/// Maximizes the four-point bound over quadruples of samples: all of them
/// when there are at most [`EXHAUSTIVE_QUADS`], else [`SAMPLED_QUADS`] drawn
/// with `seed`.
pub fn best_four_point_bound<M>(space: &M, seed: u64) -> Result<FourPointWitness, DistortionError>
where
    M: FiniteMetric + Sync + ?Sized,
{
    let n = space.len();
    if n < 4 {
        return Err(DistortionError::TooFewPoints { need: 4, got: n });
    }
    let nn = n as u64;
    let quads = nn * (nn - 1) * (nn - 2) * (nn - 3) / 24;
    let pick = |acc: (f64, [usize; 4]), cand: (f64, [usize; 4])| {
        if cand.0 > acc.0 || (cand.0 == acc.0 && cand.1 < acc.1) {
            cand
        } else {
            acc
        }
    };
    let none = (f64::NEG_INFINITY, [usize::MAX; 4]);
    let best = if quads <= EXHAUSTIVE_QUADS {
        let rows: Vec<(f64, [usize; 4])> = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut acc = none;
                for b in a + 1..n {
                    for c in b + 1..n {
                        for d in c + 1..n {
                            acc = pick(acc, best_pairing(space, [a, b, c, d]));
                        }
                    }
                }
                acc
            })
            .collect();
        rows.into_iter().fold(none, pick)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws = Vec::with_capacity(SAMPLED_QUADS);
        while draws.len() < SAMPLED_QUADS {
            let mut q = [0usize; 4];
            for slot in q.iter_mut() {
                *slot = rng.random_range(0..n);
            }
            q.sort_unstable();
            if q.windows(2).all(|w| w[0] < w[1]) {
                draws.push(q);
            }
        }
        let rows: Vec<(f64, [usize; 4])> = draws.par_iter().map(|&q| best_pairing(space, q)).collect();
        rows.into_iter().fold(none, pick)
    };
    Ok(FourPointWitness {
        bound: best.0,
        cycle: best.1,
        exhaustive: quads <= EXHAUSTIVE_QUADS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DistanceMatrix;
    use crate::polygon::{build_example, sample_triangle, Example};
    use crate::tripodal::{gromov_products, tripodal_images};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn planar(points: &[PlanarPoint]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| points[i].dist(points[j]))
    }

    fn find(t: &FiniteMetricTriangle, id: &str) -> usize {
        t.points.iter().position(|p| p.vertex.as_deref() == Some(id)).unwrap()
    }

    #[test]
    fn identity_on_a_segment_has_distortion_one() {
        let pts: Vec<PlanarPoint> = (0..10).map(|k| PlanarPoint::new(k as f64 * 0.3, 0.0)).collect();
        let r = distortion_of_map(&planar(&pts), &pts, 0.3).unwrap();
        assert_abs_diff_eq!(r.lip, 1.0, epsilon = 1e-12);
        assert_eq!(r.argmax_expand[0], 0);
    }

    #[test]
    fn heart_distortion_is_sharp() {
        let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 5).unwrap();
        let imgs = tripodal_images(&t).unwrap();
        let r = distortion_of_map(&t, &imgs, t.grid_step).unwrap();
        assert_abs_diff_eq!(r.lip, 4.0 * (7.0f64 / 3.0).sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(r.l1, 7f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.l0, 4.0 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn coincident_samples_with_distinct_images_fail() {
        let m = DistanceMatrix::zeros(2);
        let imgs = [PlanarPoint::new(0.0, 0.0), PlanarPoint::new(1.0, 0.0)];
        assert_eq!(distortion_of_map(&m, &imgs, 0.0), Err(DistortionError::CoincidentSamples(0, 1)));
    }

    #[test]
    fn classification_examples() {
        let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 9).unwrap();
        let g = gromov_products(&t).unwrap();
        let at = |side: usize, arc: f64| {
            t.points.iter().position(|p| p.side == side && p.arc == arc).unwrap()
        };
        assert_eq!(classify_pair(&t, &g, at(0, 0.5), at(0, 1.5)).case, 1);
        assert_eq!(classify_pair(&t, &g, at(0, 0.5), at(0, 3.5)).case, 2);
        // side 0 near p and side 2 near p
        assert_eq!(classify_pair(&t, &g, at(0, 0.5), at(2, 3.5)).case, 3);
        assert_eq!(classify_pair(&t, &g, at(0, 0.5), at(2, 0.5)).case, 4);
        assert_eq!(classify_pair(&t, &g, at(0, 3.5), at(2, 0.5)).case, 5);
        for (u, v) in [("p", "q"), ("q", "r"), ("r", "p")] {
            assert_eq!(classify_pair(&t, &g, find(&t, u), find(&t, v)).case, 4);
        }
    }

    #[test]
    fn heart_extremal_pairs_pass_at_the_boundary() {
        let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 5).unwrap();
        let g = gromov_products(&t).unwrap();
        let imgs = tripodal_images(&t).unwrap();
        let (a, b, c) = (find(&t, "a"), find(&t, "b"), find(&t, "c"));
        let lac = classify_pair(&t, &g, a, c);
        let chk = case_bound_check(&lac, t.dist(a, c), imgs[a].dist(imgs[c]));
        assert!(chk.pass);
        assert_abs_diff_eq!(chk.ratio_sq, 7.0, epsilon = 1e-12);
        let lab = classify_pair(&t, &g, a, b);
        let chk = case_bound_check(&lab, t.dist(a, b), imgs[a].dist(imgs[b]));
        assert!(chk.pass);
        assert_abs_diff_eq!(chk.ratio_sq, 3.0 / 16.0, epsilon = 1e-12);
        let cert = certify_pairs(&t, &g, &imgs).unwrap();
        assert!(cert.all_pass(), "{:?}", cert.failures);
    }

    #[test]
    fn four_point_examples() {
        let h = PI / 2.0;
        assert_abs_diff_eq!(four_point_lower_bound(h, h, h, h, PI, PI).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let s2 = 2f64.sqrt();
        assert_eq!(four_point_lower_bound(1.0, 1.0, 1.0, 1.0, s2, s2).unwrap(), 1.0);
        assert!(four_point_lower_bound(1.0, 1.0, 1.0, 1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn heart_quadruple_respects_upper_bound() {
        let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 5).unwrap();
        let (p, a, q, c) = (find(&t, "p"), find(&t, "a"), find(&t, "q"), find(&t, "c"));
        let lb = four_point_lower_bound(t.dist(p, a), t.dist(a, q), t.dist(q, c), t.dist(c, p), t.dist(p, q), t.dist(a, c))
            .unwrap();
        // sides 2, 2, 3, 2 with diagonals 4 and 1
        assert_abs_diff_eq!(lb, (17.0f64 / 21.0).sqrt().max(1.0), epsilon = 1e-15);
        assert!(lb <= 4.0 * (7.0f64 / 3.0).sqrt());
    }

    #[test]
    fn best_bound_on_a_segment_is_one() {
        let pts: Vec<PlanarPoint> = (0..8).map(|k| PlanarPoint::new(k as f64, 0.0)).collect();
        let w = best_four_point_bound(&planar(&pts), 0).unwrap();
        assert_eq!(w.bound, 1.0);
        assert!(w.exhaustive);
    }

    #[test]
    fn rose_scan_reports_witness() {
        let t = sample_triangle(&build_example(&Example::Rose).unwrap(), 5).unwrap();
        let w = best_four_point_bound(&t, 0).unwrap();
        assert!(w.bound >= 1.0);
        assert!(w.cycle.iter().all(|&i| i < t.len()));
    }
}
