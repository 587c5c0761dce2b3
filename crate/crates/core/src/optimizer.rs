//! Derivative-free search for low-distortion planar embeddings of finite
//! metric samples.
//!
//! Candidates come from a supplied hint (usually the tripodal image), a
//! classical-scaling seed and seeded random clouds. Each is improved by a
//! coordinate pattern search on `log L1 + log L0`, which is scale invariant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distortion::{best_four_point_bound, distortion_of_map, DistortionError, DistortionReport};
use crate::metric::{DistanceMatrix, FiniteMetric};
use crate::polygon::{build_example, fmt_num, sample_polygon, Example, PolygonError};
use crate::tripodal::PlanarPoint;

/// Searches stop once the step falls below this fraction of the diameter.
pub const MIN_STEP_FRACTION: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("distance matrix is not a metric: {0}")]
    NotMetric(String),
    #[error("all distances are zero")]
    Degenerate,
    #[error("need at least 2 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("hint has {got} points, problem has {want}")]
    HintMismatch { got: usize, want: usize },
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
}

/// Points to embed, given by their distances, with optional pinned images.
#[derive(Debug, Clone)]
pub struct EmbeddingProblem {
    pub matrix: DistanceMatrix,
    pub fixed: Vec<(usize, PlanarPoint)>,
}

impl EmbeddingProblem {
    pub fn new(matrix: DistanceMatrix, fixed: Vec<(usize, PlanarPoint)>) -> Result<Self, OptimizerError> {
        let n = matrix.len();
        let scale = matrix.max_entry().max(1.0);
        if matrix.symmetry_defect() > 1e-9 * scale {
            return Err(OptimizerError::NotMetric("not symmetric with zero diagonal".into()));
        }
        if matrix.worst_triangle_slack() < -1e-9 * scale {
            return Err(OptimizerError::NotMetric("triangle inequality fails".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if matrix.dist(i, j) <= 0.0 {
                    return Err(OptimizerError::NotMetric(format!("points {i} and {j} coincide")));
                }
            }
        }
        if let Some(&(k, _)) = fixed.iter().find(|(k, _)| *k >= n) {
            return Err(OptimizerError::BadConfig(format!("fixed index {k} out of range")));
        }
        Ok(Self { matrix, fixed })
    }

    /// Collapses samples at distance zero into one point. Returns the
    /// problem and, per sample, the index of its problem point.
    pub fn from_space<M: FiniteMetric + ?Sized>(space: &M) -> Result<(Self, Vec<usize>), OptimizerError> {
        let n = space.len();
        let mut reps: Vec<usize> = Vec::new();
        let mut map = vec![0usize; n];
        'outer: for i in 0..n {
            for (k, &r) in reps.iter().enumerate() {
                if space.dist(i, r) == 0.0 {
                    map[i] = k;
                    continue 'outer;
                }
            }
            map[i] = reps.len();
            reps.push(i);
        }
        let matrix = DistanceMatrix::from_fn(reps.len(), |a, b| space.dist(reps[a], reps[b]));
        Ok((Self::new(matrix, Vec::new())?, map))
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.matrix.max_entry()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    /// Number of random starting clouds.
    pub restarts: usize,
    /// Sweep budget per candidate.
    pub iterations: usize,
    /// Starting step as a fraction of the diameter.
    pub initial_step: f64,
    pub shrink: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 2000,
            initial_step: 0.1,
            shrink: 0.5,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.restarts < 1 {
            return Err(OptimizerError::BadConfig("restarts must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(OptimizerError::BadConfig(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(OptimizerError::BadConfig(format!("initial step must be positive, got {}", self.initial_step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateKind {
    Hint,
    Spectral,
    Random(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub points: Vec<PlanarPoint>,
}

/// Starting points for the search: the hint if given, the spectral seed,
/// then `cfg.restarts` Gaussian clouds.
pub fn initial_candidates(
    p: &EmbeddingProblem,
    hint: Option<&[PlanarPoint]>,
    cfg: &OptimizerConfig,
) -> Result<Vec<Candidate>, OptimizerError> {
    cfg.validate()?;
    let n = p.len();
    let diam = p.diameter();
    if diam <= 0.0 {
        return Err(OptimizerError::Degenerate);
    }
    let mut out = Vec::with_capacity(cfg.restarts + 2);
    if let Some(h) = hint {
        if h.len() != n {
            return Err(OptimizerError::HintMismatch { got: h.len(), want: n });
        }
        out.push(Candidate { kind: CandidateKind::Hint, points: pin(p, h.to_vec()) });
    }
    out.push(Candidate {
        kind: CandidateKind::Spectral,
        points: pin(p, spectral_seed(&p.matrix)),
    });
    let normal = Normal::new(0.0, 0.5 * diam).expect("positive scale");
    for k in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64 + 1);
        let pts = (0..n)
            .map(|_| PlanarPoint::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        out.push(Candidate { kind: CandidateKind::Random(k), points: pin(p, pts) });
    }
    Ok(out)
}

fn pin(p: &EmbeddingProblem, mut pts: Vec<PlanarPoint>) -> Vec<PlanarPoint> {
    for &(k, z) in &p.fixed {
        pts[k] = z;
    }
    pts
}

/// Classical multidimensional scaling onto the top two principal axes.
pub fn spectral_seed(d: &DistanceMatrix) -> Vec<PlanarPoint> {
    let n = d.len();
    if n == 0 {
        return Vec::new();
    }
    // doubly centered -1/2 D^2
    let sq: Vec<f64> = (0..n * n).map(|k| d.dist(k / n, k % n).powi(2)).collect();
    let row_mean: Vec<f64> = (0..n).map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let all_mean = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + all_mean);
        }
    }
    let (vals, vecs) = jacobi_eigen(b, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| vals[c].total_cmp(&vals[a]).then(a.cmp(&c)));
    let axis = |k: usize| -> Vec<f64> {
        match order.get(k) {
            Some(&e) if vals[e] > 0.0 => {
                let s = vals[e].sqrt();
                let mut v: Vec<f64> = (0..n).map(|i| vecs[i * n + e] * s).collect();
                // fix the sign so the first nonzero coordinate is positive
                if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
                    if first < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                v
            }
            _ => vec![0.0; n],
        }
    };
    let (x, y) = (axis(0), axis(1));
    (0..n).map(|i| PlanarPoint::new(x[i], y[i])).collect()
}

/// Cyclic Jacobi rotations on a symmetric row-major matrix. Returns the
/// eigenvalues and the eigenvectors as columns.
fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

// Squared distances and their inverses over the upper triangle.
struct Objective {
    n: usize,
    d2: Vec<f64>,
    inv_d2: Vec<f64>,
}

impl Objective {
    fn new(m: &DistanceMatrix) -> Self {
        let n = m.len();
        let mut d2 = vec![0.0; n * n];
        let mut inv_d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = m.dist(i, j);
                    d2[i * n + j] = d * d;
                    inv_d2[i * n + j] = 1.0 / (d * d);
                }
            }
        }
        Self { n, d2, inv_d2 }
    }

    // largest squared expansion and contraction ratios
    fn extremes(&self, pts: &[PlanarPoint]) -> (f64, f64) {
        let n = self.n;
        let mut expand: f64 = 0.0;
        let mut contract: f64 = 0.0;
        for i in 0..n {
            let zi = pts[i];
            for j in i + 1..n {
                let dx = zi.x - pts[j].x;
                let dy = zi.y - pts[j].y;
                let e2 = dx * dx + dy * dy;
                if e2 == 0.0 {
                    return (f64::INFINITY, f64::INFINITY);
                }
                expand = expand.max(e2 * self.inv_d2[i * n + j]);
                contract = contract.max(self.d2[i * n + j] / e2);
            }
        }
        (expand, contract)
    }

    /// The objective with a soft-max tie-breaker: `(hard, soft)` where soft
    /// replaces each max by a power mean, so it still decreases when one of
    /// several tied worst pairs improves.
    fn score(&self, pts: &[PlanarPoint]) -> (f64, f64) {
        let (expand, contract) = self.extremes(pts);
        if !expand.is_finite() || !contract.is_finite() {
            return (f64::INFINITY, f64::INFINITY);
        }
        let n = self.n;
        let mut se = 0.0;
        let mut sc = 0.0;
        for i in 0..n {
            let zi = pts[i];
            for j in i + 1..n {
                let dx = zi.x - pts[j].x;
                let dy = zi.y - pts[j].y;
                let e2 = dx * dx + dy * dy;
                se += (e2 * self.inv_d2[i * n + j] / expand).powi(SOFT_POWER);
                sc += (self.d2[i * n + j] / e2 / contract).powi(SOFT_POWER);
            }
        }
        let hard = 0.5 * (expand.ln() + contract.ln());
        let soft = hard + 0.5 * (se.ln() + sc.ln()) / SOFT_POWER as f64;
        (hard, soft)
    }
}

// exponent of the power mean used to break ties between worst pairs
const SOFT_POWER: i32 = 16;

/// Outcome of searching from one candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    pub kind: CandidateKind,
    /// Objective after each sweep, starting with the initial value.
    pub objective: Vec<f64>,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: Vec<PlanarPoint>,
    pub report: DistortionReport,
    pub best_candidate: usize,
    pub traces: Vec<RestartTrace>,
}

fn pattern_search(obj: &Objective, p: &EmbeddingProblem, start: Vec<PlanarPoint>, cfg: &OptimizerConfig) -> (Vec<PlanarPoint>, Vec<f64>, usize) {
    let diam = p.diameter();
    let movable: Vec<usize> = (0..p.len()).filter(|k| !p.fixed.iter().any(|(f, _)| f == k)).collect();
    let mut pts = start;
    let (mut best, mut best_soft) = obj.score(&pts);
    let mut trace = vec![best];
    let mut step = cfg.initial_step * diam;
    let mut sweeps = 0;
    while sweeps < cfg.iterations && step >= MIN_STEP_FRACTION * diam {
        sweeps += 1;
        let mut improved = false;
        for &k in &movable {
            for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let old = pts[k];
                pts[k] = PlanarPoint::new(old.x + dx * step, old.y + dy * step);
                let (v, soft) = obj.score(&pts);
                if v < best || (v <= best && soft < best_soft) {
                    best = v;
                    best_soft = soft;
                    improved = true;
                } else {
                    pts[k] = old;
                }
            }
        }
        if !improved {
            step *= cfg.shrink;
        }
        trace.push(best);
    }
    (pts, trace, sweeps)
}

/// Improves every initial candidate and returns the best, with ties going
/// to the earliest candidate.
pub fn min_distortion_search(
    p: &EmbeddingProblem,
    cfg: &OptimizerConfig,
    hint: Option<&[PlanarPoint]>,
) -> Result<SearchResult, OptimizerError> {
    if p.len() < 2 {
        return Err(OptimizerError::TooFewPoints(p.len()));
    }
    let candidates = initial_candidates(p, hint, cfg)?;
    let obj = Objective::new(&p.matrix);
    let runs: Vec<(Vec<PlanarPoint>, RestartTrace, f64)> = candidates
        .into_par_iter()
        .map(|c| {
            let (pts, objective, sweeps) = pattern_search(&obj, p, c.points, cfg);
            let last = *objective.last().expect("trace starts with the initial value");
            (pts, RestartTrace { kind: c.kind, objective, sweeps }, last)
        })
        .collect();
    let mut best_idx = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.2 < runs[best_idx].2 {
            best_idx = k;
        }
    }
    let best = runs[best_idx].0.clone();
    let report = distortion_of_map(&p.matrix, &best, 0.0)?;
    Ok(SearchResult {
        best,
        report,
        best_candidate: best_idx,
        traces: runs.into_iter().map(|r| r.1).collect(),
    })
}

/// One row of the quadrilateral study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadStudyRow {
    pub epsilon: f64,
    pub lip_estimate: f64,
    pub four_point_lb: f64,
    pub restarts: usize,
    pub iterations: usize,
}

/// Best distortion found for the chorded quadrilateral at each chord length.
pub fn quad_growth_study(eps: &[f64], m: usize, cfg: &OptimizerConfig) -> Result<Vec<QuadStudyRow>, OptimizerError> {
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(OptimizerError::BadConfig("chord lengths must be positive".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(OptimizerError::BadConfig("chord lengths must be strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let poly = build_example(&Example::QuadQ(e))?;
        let samples = sample_polygon(&poly, m)?;
        let (problem, _) = EmbeddingProblem::from_space(&samples)?;
        let lb = best_four_point_bound(&problem.matrix, cfg.seed)?;
        let found = min_distortion_search(&problem, cfg, None)?;
        rows.push(QuadStudyRow {
            epsilon: e,
            lip_estimate: found.report.lip,
            four_point_lb: lb.bound,
            restarts: cfg.restarts,
            iterations: cfg.iterations,
        });
    }
    Ok(rows)
}

pub fn write_quad_study_csv<W: std::io::Write>(rows: &[QuadStudyRow], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epsilon", "lipEstimate", "fourPointLB", "restarts", "iterations"])?;
    for r in rows {
        out.write_record([
            fmt_num(r.epsilon),
            fmt_num(r.lip_estimate),
            fmt_num(r.four_point_lb),
            r.restarts.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar(pts: &[(f64, f64)]) -> DistanceMatrix {
        DistanceMatrix::from_fn(pts.len(), |i, j| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1))
    }

    #[test]
    fn spectral_seed_recovers_a_345_triangle() {
        let m = planar(&[(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)]);
        let seed = spectral_seed(&m);
        let r = distortion_of_map(&m, &seed, 0.0).unwrap();
        assert!(r.lip <= 1.0 + 1e-6, "{}", r.lip);
        assert!((r.l1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn square_is_found_exactly() {
        let m = planar(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let p = EmbeddingProblem::new(m, vec![]).unwrap();
        let cfg = OptimizerConfig { restarts: 3, ..Default::default() };
        let r = min_distortion_search(&p, &cfg, None).unwrap();
        assert!(r.report.lip <= 1.0 + 1e-4);
    }

    #[test]
    fn traces_never_increase_and_runs_repeat() {
        let m = planar(&[(0.0, 0.0), (2.0, 0.0), (1.0, 3.0), (4.0, 1.0), (2.0, 2.0)]);
        // perturb into a non-Euclidean metric
        let mut m2 = m.clone();
        m2.set(0, 1, 2.5);
        let p = EmbeddingProblem::new(m2, vec![]).unwrap();
        let cfg = OptimizerConfig { restarts: 4, iterations: 300, seed: 9, ..Default::default() };
        let a = min_distortion_search(&p, &cfg, None).unwrap();
        let b = min_distortion_search(&p, &cfg, None).unwrap();
        assert_eq!(a, b);
        for t in &a.traces {
            assert!(t.objective.windows(2).all(|w| w[1] <= w[0]));
        }
        let again = distortion_of_map(&p.matrix, &a.best, 0.0).unwrap();
        assert_eq!(again, a.report);
    }

    #[test]
    fn fixed_points_stay_put() {
        let m = planar(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let z = PlanarPoint::new(5.0, 5.0);
        let p = EmbeddingProblem::new(m, vec![(0, z)]).unwrap();
        let cfg = OptimizerConfig { restarts: 2, iterations: 100, ..Default::default() };
        let r = min_distortion_search(&p, &cfg, None).unwrap();
        assert_eq!(r.best[0], z);
    }

    #[test]
    fn bad_inputs() {
        assert!(EmbeddingProblem::new(DistanceMatrix::zeros(2), vec![]).is_err());
        let bad = DistanceMatrix::from_rows(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(EmbeddingProblem::new(bad, vec![]), Err(OptimizerError::NotMetric(_))));
        let cfg = OptimizerConfig { shrink: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(quad_growth_study(&[0.1, 0.5], 4, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn duplicate_samples_collapse() {
        let m = DistanceMatrix::from_rows(vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let (p, map) = EmbeddingProblem::from_space(&m).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(map, vec![0, 0, 1]);
    }
}
