//! Closed-form auxiliary functions behind the pairwise distortion bounds,
//! with a brute-force grid oracle that checks each claimed maximum, plus the
//! circle and rose embeddings used as reference examples.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::FiniteMetric;
use crate::polygon::{fmt_num, fmt_sig, SampledPolygon};
use crate::tripodal::PlanarPoint;

/// Unbounded variables are truncated here.
pub const TRUNCATION: f64 = 50.0;
/// Face maxima at the truncation must stay below this share of the claim.
pub const DECAY_SHARE: f64 = 0.95;
/// Grid maxima may exceed the claim by at most this.
pub const OVERSHOOT_TOL: f64 = 1e-9;
/// Grid maxima may fall short of the claim by at most this.
pub const SHORTFALL_TOL: f64 = 1e-3;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error("{id} takes {want} arguments, got {got}")]
    Arity { id: ObjectiveId, want: usize, got: usize },
    #[error("{id}: nonpositive denominator at {point:?}")]
    Denominator { id: ObjectiveId, point: Vec<f64> },
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error("grid resolution must be at least 32 and levels at least 2")]
    BadGrid,
    #[error("{0}: no feasible grid point")]
    EmptyGrid(ObjectiveId),
    #[error("parameter {0} outside [0, pi/3)")]
    BadParameter(f64),
    #[error("objective is not unimodal on the scan near {0}")]
    NotUnimodal(f64),
    #[error("not a rose sample: {0}")]
    NotRose(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ObjectiveId {
    M1,
    M1OverE2,
    M2,
    M2Tilde,
    M3,
    M4,
    M4OverSt2,
    M4OverB2,
    M5,
    M6,
    M7,
    M7OverSt2,
    M8,
    M9,
    TripodM,
}

impl ObjectiveId {
    pub const ALL: [ObjectiveId; 15] = [
        ObjectiveId::M1,
        ObjectiveId::M1OverE2,
        ObjectiveId::M2,
        ObjectiveId::M2Tilde,
        ObjectiveId::M3,
        ObjectiveId::M4,
        ObjectiveId::M4OverSt2,
        ObjectiveId::M4OverB2,
        ObjectiveId::M5,
        ObjectiveId::M6,
        ObjectiveId::M7,
        ObjectiveId::M7OverSt2,
        ObjectiveId::M8,
        ObjectiveId::M9,
        ObjectiveId::TripodM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveId::M1 => "M1",
            ObjectiveId::M1OverE2 => "M1_over_e2",
            ObjectiveId::M2 => "M2",
            ObjectiveId::M2Tilde => "M2tilde",
            ObjectiveId::M3 => "M3",
            ObjectiveId::M4 => "M4",
            ObjectiveId::M4OverSt2 => "M4_over_st2",
            ObjectiveId::M4OverB2 => "M4_over_b2",
            ObjectiveId::M5 => "M5",
            ObjectiveId::M6 => "M6",
            ObjectiveId::M7 => "M7",
            ObjectiveId::M7OverSt2 => "M7_over_st2",
            ObjectiveId::M8 => "M8",
            ObjectiveId::M9 => "M9",
            ObjectiveId::TripodM => "TripodM",
        }
    }

    /// Variables in argument order.
    pub fn variables(self) -> &'static [&'static str] {
        match self {
            ObjectiveId::M1 | ObjectiveId::M1OverE2 | ObjectiveId::M2 | ObjectiveId::M2Tilde => &["b", "e"],
            ObjectiveId::TripodM => &["s"],
            _ => &["b", "s", "t"],
        }
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveId {
    type Err = LemmaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LemmaError::UnknownObjective(s.to_string()))
    }
}

fn quad2(b: f64, e: f64) -> f64 {
    0.25 * (1.0 - b + 2.0 * e).powi(2) + 0.75 * (1.0 + b).powi(2)
}

fn quad4(b: f64, s: f64, t: f64) -> f64 {
    0.25 * (1.0 - b + 2.0 * s + t).powi(2) + 0.75 * (1.0 + t + b).powi(2)
}

fn quad7(b: f64, s: f64, t: f64) -> f64 {
    0.25 * (1.0 - b - s + t).powi(2) + 0.75 * (1.0 + s + t + b).powi(2)
}

/// Exact value of an objective at `x`.
pub fn eval_objective(id: ObjectiveId, x: &[f64]) -> Result<f64, LemmaError> {
    let want = id.variables().len();
    if x.len() != want {
        return Err(LemmaError::Arity { id, want, got: x.len() });
    }
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(LemmaError::Denominator { id, point: x.to_vec() })
        }
    };
    match id {
        ObjectiveId::M1 => Ok(quad2(x[0], x[1])),
        ObjectiveId::M1OverE2 => ratio(quad2(x[0], x[1]), x[1] * x[1]),
        ObjectiveId::M2 => ratio((2.0 + x[1]).powi(2), quad2(x[0], x[1])),
        ObjectiveId::M2Tilde => ratio((2.0 - x[1]).powi(2), quad2(x[0], x[1])),
        ObjectiveId::M3 => {
            let (b, s, t) = (x[0], x[1], x[2]);
            ratio(
                (2.0 + 2.0 * b - s - t).powi(2),
                0.25 * (1.0 - b + 2.0 * s - 2.0 * t).powi(2) + 0.75 * (1.0 + b).powi(2),
            )
        }
        ObjectiveId::M4 => Ok(quad4(x[0], x[1], x[2])),
        ObjectiveId::M4OverSt2 => ratio(quad4(x[0], x[1], x[2]), (x[1] + x[2]).powi(2)),
        ObjectiveId::M4OverB2 => ratio(quad4(x[0], x[1], x[2]), x[0] * x[0]),
        ObjectiveId::M5 => {
            let (b, s, t) = (x[0], x[1], x[2]);
            ratio((2.0f64.max(2.0 * b) + s + t).powi(2), quad4(b, s, t))
        }
        ObjectiveId::M6 => {
            let (b, s, t) = (x[0], x[1], x[2]);
            ratio((2.0 + 2.0 * b + 2.0 * t).powi(2), quad4(b, s, t))
        }
        ObjectiveId::M7 => Ok(quad7(x[0], x[1], x[2])),
        ObjectiveId::M7OverSt2 => ratio(quad7(x[0], x[1], x[2]), (x[1] + x[2]).powi(2)),
        ObjectiveId::M8 => ratio((2.0 + x[1] + x[2]).powi(2), quad7(x[0], x[1], x[2])),
        ObjectiveId::M9 => {
            let (b, s, t) = (x[0], x[1], x[2]);
            ratio((2.0 + 2.0 * b + 2.0 * s + 2.0 * t).powi(2), quad7(b, s, t))
        }
        ObjectiveId::TripodM => ratio((x[0] + 1.0).powi(2), (x[0] + 0.5).powi(2) + 0.75),
    }
}

/// Which distortion bound a lemma feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    /// Bounds the squared expansion.
    Expansion,
    /// Bounds the squared contraction.
    Contraction,
    Tripod,
}

/// `sum coef_i x_i <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub coef: Vec<f64>,
    pub rhs: f64,
}

fn le(coef: &[f64], rhs: f64) -> LinearConstraint {
    LinearConstraint { coef: coef.to_vec(), rhs }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    /// `(low, high)`; `None` means unbounded in that direction.
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
    pub constraints: Vec<LinearConstraint>,
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        const TOL: f64 = 1e-12;
        self.bounds.iter().zip(x).all(|(&(lo, hi), &v)| {
            lo.is_none_or(|l| v >= l - TOL) && hi.is_none_or(|h| v <= h + TOL)
        }) && self
            .constraints
            .iter()
            .all(|c| c.coef.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() <= c.rhs + TOL)
    }

    /// The region's box with infinite ends replaced by `±bound`.
    pub fn truncated_box(&self, bound: f64) -> Vec<(f64, f64)> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (lo.unwrap_or(-bound), hi.unwrap_or(bound)))
            .collect()
    }

    pub fn unbounded_axes(&self) -> Vec<usize> {
        (0..self.bounds.len())
            .filter(|&k| self.bounds[k].0.is_none() || self.bounds[k].1.is_none())
            .collect()
    }
}

/// Where the claimed maximum is attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Claim {
    /// One or more points.
    Points(Vec<Vec<f64>>),
    /// A surface `x_axis = offset + sum coef_i x_i` over the other variables.
    Surface { axis: usize, offset: f64, coef: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSpec {
    pub id: ObjectiveId,
    pub kind: BoundKind,
    pub region: Region,
    pub claimed_max: f64,
    pub claim: Claim,
}

impl LemmaSpec {
    /// Evaluates the objective at every claimed point, or at lattice points
    /// of a claimed surface inside the truncated region.
    pub fn claim_points(&self, count: usize) -> Vec<Vec<f64>> {
        match &self.claim {
            Claim::Points(p) => p.clone(),
            Claim::Surface { axis, offset, coef } => {
                let dim = self.region.bounds.len();
                let free: Vec<usize> = (0..dim).filter(|k| k != axis).collect();
                let mut out = Vec::with_capacity(count);
                // a deterministic low-discrepancy walk over the free variables
                let mut k = 0u64;
                while out.len() < count && k < 100 * count as u64 {
                    k += 1;
                    let mut x = vec![0.0; dim];
                    for (slot, &v) in free.iter().enumerate() {
                        let golden = [0.618_033_988_749_894_9, 0.754_877_666_246_692_7][slot % 2];
                        x[v] = 10.0 * ((k as f64) * golden).fract();
                    }
                    x[*axis] = offset + free.iter().map(|&v| coef[v] * x[v]).sum::<f64>();
                    if self.region.contains(&x) && x[*axis] <= TRUNCATION {
                        out.push(x);
                    }
                }
                out
            }
        }
    }
}

/// The fifteen built-in lemma claims.
pub fn builtin_specs() -> Vec<LemmaSpec> {
    use BoundKind::*;
    use ObjectiveId::*;
    let z = Some(0.0);
    let one = Some(1.0);
    let unit3 = vec![(z, one), (z, one), (z, one)];
    let orthant3 = vec![(z, None), (z, None), (z, None)];
    let pt = |p: &[f64]| Claim::Points(vec![p.to_vec()]);
    let spec = |id, kind, bounds: Vec<(Option<f64>, Option<f64>)>, constraints, claimed_max, claim| LemmaSpec {
        id,
        kind,
        region: Region { bounds, constraints },
        claimed_max,
        claim,
    };
    vec![
        spec(M1, Expansion, vec![(z, one), (z, one)], vec![], 4.0, pt(&[1.0, 1.0])),
        spec(M1OverE2, Expansion, vec![(z, one), (one, None)], vec![], 4.0, pt(&[1.0, 1.0])),
        spec(M2, Contraction, vec![(z, None), (None, None)], vec![], 4.0, pt(&[0.0, 0.0])),
        spec(
            M2Tilde,
            Contraction,
            vec![(z, None), (None, z)],
            vec![le(&[-1.0, -1.0], 0.0)],
            13.0 / 3.0,
            pt(&[1.0 / 6.0, -1.0 / 6.0]),
        ),
        spec(M3, Contraction, unit3.clone(), vec![], 16.0 / 3.0, pt(&[1.0, 0.0, 0.0])),
        spec(M4, Expansion, unit3.clone(), vec![le(&[0.0, 1.0, 1.0], 1.0)], 7.0, pt(&[1.0, 0.0, 1.0])),
        spec(
            M4OverSt2,
            Expansion,
            orthant3.clone(),
            vec![le(&[0.0, -1.0, -1.0], -1.0), le(&[1.0, -1.0, -1.0], 0.0)],
            7.0,
            pt(&[1.0, 0.0, 1.0]),
        ),
        spec(
            M4OverB2,
            Expansion,
            vec![(one, None), (z, None), (z, None)],
            vec![le(&[-1.0, 1.0, 1.0], 0.0)],
            7.0,
            pt(&[1.0, 0.0, 1.0]),
        ),
        spec(
            M5,
            Contraction,
            vec![(z, None), (z, one), (z, None)],
            vec![],
            13.0 / 3.0,
            pt(&[6.0, 1.0, 0.0]),
        ),
        spec(
            M6,
            Contraction,
            orthant3.clone(),
            vec![],
            16.0 / 3.0,
            Claim::Surface { axis: 0, offset: 1.0, coef: vec![0.0, 2.0, 1.0] },
        ),
        spec(
            M7,
            Expansion,
            unit3.clone(),
            vec![le(&[0.0, 1.0, 1.0], 1.0)],
            7.0,
            Claim::Points(vec![vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]),
        ),
        spec(
            M7OverSt2,
            Expansion,
            unit3,
            vec![le(&[0.0, -1.0, -1.0], -1.0)],
            7.0,
            Claim::Points(vec![vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]),
        ),
        spec(M8, Contraction, orthant3.clone(), vec![], 4.0, pt(&[0.0, 0.0, 0.0])),
        spec(
            M9,
            Contraction,
            orthant3,
            vec![],
            16.0 / 3.0,
            Claim::Surface { axis: 2, offset: -1.0, coef: vec![1.0, 1.0, 0.0] },
        ),
        spec(TripodM, Tripod, vec![(z, None)], vec![], 4.0 / 3.0, pt(&[1.0])),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub id: ObjectiveId,
    pub claimed_max: f64,
    pub grid_max: f64,
    pub grid_argmax: Vec<f64>,
    /// `grid_max - claimed_max`.
    pub gap: f64,
    pub levels: usize,
    /// Largest `|objective - claimed|` over the claimed points or surface samples.
    pub claim_deviation: f64,
    /// Largest face value at the truncation as a share of the claim; `None`
    /// when nothing was truncated or the claim is a surface.
    pub decay_share: Option<f64>,
    pub pass: bool,
}

fn best_of(a: (f64, Vec<f64>), b: (f64, Vec<f64>)) -> (f64, Vec<f64>) {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

fn keep(best: &mut Option<(f64, Vec<f64>)>, found: Option<(f64, Vec<f64>)>) {
    if let Some(found) = found {
        *best = Some(match best.take() {
            None => found,
            Some(b) => best_of(b, found),
        });
    }
}

// Max of the objective over a grid on `bx`, keeping only points in the region.
fn scan(spec: &LemmaSpec, bx: &[(f64, f64)], res: usize) -> Option<(f64, Vec<f64>)> {
    let dim = bx.len();
    let coord = |axis: usize, k: usize| -> f64 {
        let (lo, hi) = bx[axis];
        if k == res {
            hi
        } else {
            lo + (hi - lo) * k as f64 / res as f64
        }
    };
    let total = (res + 1).pow(dim as u32 - 1);
    let rows: Vec<(f64, Vec<f64>)> = (0..=res)
        .into_par_iter()
        .map(|k0| {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut x = vec![0.0; dim];
            x[0] = coord(0, k0);
            for flat in 0..total {
                let mut rest = flat;
                for (axis, slot) in x.iter_mut().enumerate().skip(1) {
                    *slot = coord(axis, rest % (res + 1));
                    rest /= res + 1;
                }
                if !spec.region.contains(&x) {
                    continue;
                }
                if let Ok(v) = eval_objective(spec.id, &x) {
                    if v > best.0 {
                        best = (v, x.clone());
                    }
                }
            }
            best
        })
        .collect();
    let best = rows.into_iter().fold((f64::NEG_INFINITY, Vec::new()), best_of);
    (best.0 > f64::NEG_INFINITY).then_some(best)
}

/// Largest objective value on the faces where an unbounded variable sits at
/// `bound`.
fn face_max(spec: &LemmaSpec, bound: f64, res: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for axis in spec.region.unbounded_axes() {
        for side in [-1.0, 1.0] {
            let (lo, hi) = spec.region.bounds[axis];
            let open = if side < 0.0 { lo.is_none() } else { hi.is_none() };
            if !open {
                continue;
            }
            let mut bx = spec.region.truncated_box(bound);
            bx[axis] = (side * bound, side * bound);
            if let Some((v, _)) = scan(spec, &bx, res) {
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

/// Grid scan of the truncated region followed by `levels - 1` zooms, each
/// shrinking the window fourfold around the current best point.
pub fn grid_maximize(spec: &LemmaSpec, res: usize, levels: usize) -> Result<VerificationReport, LemmaError> {
    if res < 32 || levels < 2 {
        return Err(LemmaError::BadGrid);
    }
    let full = spec.region.truncated_box(TRUNCATION);
    let mut best: Option<(f64, Vec<f64>)> = None;
    // first level: the truncated box plus nested boxes anchored near the origin
    let mut width = TRUNCATION;
    while width >= 0.5 {
        let bx: Vec<(f64, f64)> = full
            .iter()
            .map(|&(flo, fhi)| {
                let lo = flo.max(-width);
                (lo, fhi.min(lo.max(0.0) + width))
            })
            .collect();
        keep(&mut best, scan(spec, &bx, res));
        width /= 4.0;
    }
    let mut bx = full.clone();
    for level in 0..levels {
        if level > 0 {
            keep(&mut best, scan(spec, &bx, res));
        }
        let Some((_, ref at)) = best else {
            return Err(LemmaError::EmptyGrid(spec.id));
        };
        bx = full
            .iter()
            .zip(bx.iter())
            .zip(at)
            .map(|((&(flo, fhi), &(lo, hi)), &c)| {
                let half = (hi - lo) / 8.0;
                ((c - half).max(flo), (c + half).min(fhi))
            })
            .collect();
    }
    let (grid_max, grid_argmax) = best.ok_or(LemmaError::EmptyGrid(spec.id))?;
    let mut claim_deviation: f64 = 0.0;
    let claim_pts = spec.claim_points(100);
    for p in &claim_pts {
        claim_deviation = claim_deviation.max((eval_objective(spec.id, p)? - spec.claimed_max).abs());
    }
    let claim_ok = !claim_pts.is_empty() && claim_deviation <= 1e-12 && claim_pts.iter().all(|p| spec.region.contains(p));
    let decay_share = match spec.claim {
        Claim::Surface { .. } => None,
        Claim::Points(_) => {
            let near = face_max(spec, TRUNCATION, res);
            let far = face_max(spec, 4.0 * TRUNCATION, res);
            match (near, far) {
                (Some(a), Some(b)) => Some(a.max(b) / spec.claimed_max),
                (Some(a), None) | (None, Some(a)) => Some(a / spec.claimed_max),
                (None, None) => None,
            }
        }
    };
    let gap = grid_max - spec.claimed_max;
    let pass = gap <= OVERSHOOT_TOL && -gap <= SHORTFALL_TOL && claim_ok && decay_share.is_none_or(|d| d <= DECAY_SHARE);
    Ok(VerificationReport {
        id: spec.id,
        claimed_max: spec.claimed_max,
        grid_max,
        grid_argmax,
        gap,
        levels,
        claim_deviation,
        decay_share,
        pass,
    })
}

/// Verifies every built-in spec.
pub fn verify_all(res: usize, levels: usize) -> Result<Vec<VerificationReport>, LemmaError> {
    builtin_specs().iter().map(|s| grid_maximize(s, res, levels)).collect()
}

pub fn write_reports_csv<W: std::io::Write>(reports: &[VerificationReport], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "claimedMax", "gridMax", "argmax", "pass"])?;
    for r in reports {
        let arg: Vec<String> = r.grid_argmax.iter().map(|&v| fmt_num(v)).collect();
        out.write_record([
            r.id.name().to_string(),
            fmt_num(r.claimed_max),
            fmt_num(r.grid_max),
            arg.join(" "),
            r.pass.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn reports_markdown(reports: &[VerificationReport]) -> String {
    let mut s = String::from("| name | claimed max | grid max | argmax | pass |\n|---|---|---|---|---|\n");
    for r in reports {
        let arg: Vec<String> = r.grid_argmax.iter().map(|&v| fmt_sig(v)).collect();
        s.push_str(&format!(
            "| {} | {} | {} | ({}) | {} |\n",
            r.id,
            fmt_sig(r.claimed_max),
            fmt_sig(r.grid_max),
            arg.join(", "),
            if r.pass { "yes" } else { "no" }
        ));
    }
    s
}

/// One-parameter family of length-preserving maps of the unit-speed circle
/// that flatten it toward a triangle; `s = 0` is the standard embedding.
pub fn circle_embed_fs(s: f64, theta: f64) -> Result<PlanarPoint, LemmaError> {
    if !(0.0..PI / 3.0).contains(&s) {
        return Err(LemmaError::BadParameter(s));
    }
    let third = 2.0 * PI / 3.0;
    let theta = theta.rem_euclid(2.0 * PI);
    let turns = ((theta / third).floor() as i32).clamp(0, 2);
    let local = theta - turns as f64 * third;
    let tau = s + (1.0 - 3.0 * s / PI) * local;
    let base = PlanarPoint::new(
        (3.0 * PI * tau.cos() - SQRT3 * PI * s.sin()) / (3.0 * PI - 9.0 * s),
        PI * (tau.sin() - s.sin()) / (PI - 3.0 * s),
    );
    let angle = turns as f64 * third;
    let (sn, cs) = angle.sin_cos();
    Ok(PlanarPoint::new(cs * base.x - sn * base.y, sn * base.x + cs * base.y))
}

/// Distortion of the flattened circle map, from its antipodal pair.
pub fn lip_fs_closed(s: f64) -> f64 {
    (PI - 3.0 * s) / (1.0 + s.cos() - SQRT3 * s.sin())
}

/// Minimizes [`lip_fs_closed`] over the admissible parameter range.
pub fn minimize_lip_fs(tol: f64) -> Result<(f64, f64), LemmaError> {
    minimize_lip_fs_on(0.0, PI / 3.0 - 1e-6, tol)
}

/// Golden-section search on `[lo, hi]` after a 1000-point unimodality scan.
pub fn minimize_lip_fs_on(lo: f64, hi: f64, tol: f64) -> Result<(f64, f64), LemmaError> {
    if !(tol > 0.0) || lo < 0.0 || hi >= PI / 3.0 || lo > hi {
        return Err(LemmaError::BadParameter(if lo < 0.0 { lo } else { hi }));
    }
    if hi - lo <= tol {
        let s = 0.5 * (lo + hi);
        let s = if hi == lo { lo } else { s };
        return Ok((s, lip_fs_closed(s)));
    }
    const SCAN: usize = 1000;
    let vals: Vec<f64> = (0..=SCAN).map(|k| lip_fs_closed(lo + (hi - lo) * k as f64 / SCAN as f64)).collect();
    let mut rising = false;
    for k in 1..vals.len() {
        let step = vals[k] - vals[k - 1];
        if step > 1e-12 {
            rising = true;
        } else if rising && step < -1e-12 {
            return Err(LemmaError::NotUnimodal(lo + (hi - lo) * k as f64 / SCAN as f64));
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (lip_fs_closed(c), lip_fs_closed(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = lip_fs_closed(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = lip_fs_closed(d);
        }
    }
    let s = 0.5 * (a + b);
    Ok((s, lip_fs_closed(s)))
}

/// `m` equally spaced points on a circle of length 2π with the arc metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSamples {
    pub m: usize,
}

impl CircleSamples {
    pub fn angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.m as f64
    }

    pub fn images<F: Fn(f64) -> PlanarPoint>(&self, f: F) -> Vec<PlanarPoint> {
        (0..self.m).map(|k| f(self.angle(k))).collect()
    }
}

impl FiniteMetric for CircleSamples {
    fn len(&self) -> usize {
        self.m
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        let gap = i.abs_diff(j);
        let gap = gap.min(self.m - gap);
        2.0 * PI * gap as f64 / self.m as f64
    }
}

/// Maps each petal of a sampled rose by arc length onto an equilateral
/// triangle with a corner at the origin; the triangles' axes are 120° apart.
pub fn rose_flat_embedding(t: &SampledPolygon) -> Result<Vec<PlanarPoint>, LemmaError> {
    if t.side_count() != 3 {
        return Err(LemmaError::NotRose(format!("{} sides", t.side_count())));
    }
    if t.side_lengths.iter().any(|l| (l - 2.0 * PI).abs() > 1e-9) {
        return Err(LemmaError::NotRose("sides must have length 2pi".into()));
    }
    let edge = 2.0 * PI / 3.0;
    let corners: Vec<(PlanarPoint, PlanarPoint)> = (0..3)
        .map(|i| {
            let axis = 2.0 * PI * i as f64 / 3.0;
            let at = |a: f64| PlanarPoint::new(edge * a.cos(), edge * a.sin());
            (at(axis - PI / 6.0), at(axis + PI / 6.0))
        })
        .collect();
    let lerp = |a: PlanarPoint, b: PlanarPoint, u: f64| PlanarPoint::new(a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u);
    let mut out = Vec::with_capacity(t.points.len());
    for p in &t.points {
        // position on the petal: 0 at the center, pi at the far vertex
        let (petal, phi) = if p.arc <= PI {
            (p.side, PI + p.arc)
        } else {
            ((p.side + 1) % 3, p.arc - PI)
        };
        let (v1, v2) = corners[petal];
        let o = PlanarPoint::default();
        let z = if phi <= edge {
            lerp(o, v1, phi / edge)
        } else if phi <= 2.0 * edge {
            lerp(v1, v2, (phi - edge) / edge)
        } else {
            lerp(v2, o, (phi - 2.0 * edge) / edge)
        };
        out.push(z);
    }
    let centers: Vec<usize> = (0..t.points.len()).filter(|&i| (t.points[i].arc - PI).abs() < 1e-12).collect();
    for w in centers.windows(2) {
        if t.dist(w[0], w[1]) > 1e-9 {
            return Err(LemmaError::NotRose("side midpoints do not coincide".into()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::distortion_of_map;
    use crate::polygon::{build_example, sample_triangle, Example};
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms_at_claimed_points() {
        assert_eq!(eval_objective(ObjectiveId::M1, &[1.0, 1.0]).unwrap(), 4.0);
        assert_abs_diff_eq!(eval_objective(ObjectiveId::M3, &[1.0, 0.0, 0.0]).unwrap(), 16.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_objective(ObjectiveId::M5, &[6.0, 1.0, 0.0]).unwrap(), 13.0 / 3.0, epsilon = 1e-15);
        assert!(eval_objective(ObjectiveId::M1OverE2, &[0.5, 0.0]).is_err());
        assert!(eval_objective(ObjectiveId::M3, &[0.5, 0.0]).is_err());
    }

    #[test]
    fn catalog_shape() {
        let specs = builtin_specs();
        assert_eq!(specs.len(), 15);
        let m8 = specs.iter().find(|s| s.id == ObjectiveId::M8).unwrap();
        assert_eq!(m8.claimed_max, 4.0);
        assert_eq!(m8.claim, Claim::Points(vec![vec![0.0, 0.0, 0.0]]));
        let m2 = specs.iter().find(|s| s.id == ObjectiveId::M2).unwrap();
        assert_eq!(m2.region.bounds, vec![(Some(0.0), None), (None, None)]);
        for s in &specs {
            for p in s.claim_points(100) {
                assert!(s.region.contains(&p), "{}", s.id);
                assert_abs_diff_eq!(eval_objective(s.id, &p).unwrap(), s.claimed_max, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn claims_combine_to_the_tripodal_constant() {
        let specs = builtin_specs();
        let top = |k: BoundKind| specs.iter().filter(|s| s.kind == k).map(|s| s.claimed_max).fold(0.0, f64::max);
        assert_eq!(top(BoundKind::Expansion), 7.0);
        assert_eq!(top(BoundKind::Contraction), 16.0 / 3.0);
        let d = (top(BoundKind::Expansion) * top(BoundKind::Contraction)).sqrt();
        assert_abs_diff_eq!(d, 4.0 * (7.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn grid_confirms_simple_claims() {
        let specs = builtin_specs();
        for id in [ObjectiveId::M1, ObjectiveId::M2Tilde, ObjectiveId::M9] {
            let s = specs.iter().find(|s| s.id == id).unwrap();
            let r = grid_maximize(s, 32, 4).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(grid_maximize(&specs[0], 16, 4).is_err());
    }

    #[test]
    fn misstated_surface_fails() {
        // the surface s + t = 1 + b does not carry the maximum
        let mut s = builtin_specs().into_iter().find(|s| s.id == ObjectiveId::M6).unwrap();
        s.claim = Claim::Surface { axis: 1, offset: 1.0, coef: vec![1.0, 0.0, -1.0] };
        assert!(!grid_maximize(&s, 32, 3).unwrap().pass);
    }

    #[test]
    fn tripod_auxiliary() {
        let m = |s: f64| eval_objective(ObjectiveId::TripodM, &[s]).unwrap();
        assert_abs_diff_eq!(m(1.0), 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m(0.0), 1.0);
        assert!(m(1e6) <= 1.0 + 1e-5);
    }

    #[test]
    fn circle_family_basics() {
        let z = circle_embed_fs(0.0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(z.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.y, 1.0, epsilon = 1e-15);
        // direct substitution at the start of the first arc
        let s = 0.2627;
        let z = circle_embed_fs(s, 0.0).unwrap();
        assert_abs_diff_eq!(z.x, (3.0 * PI * s.cos() - 3f64.sqrt() * PI * s.sin()) / (3.0 * PI - 9.0 * s), epsilon = 1e-15);
        assert_eq!(z.y, 0.0);
        assert!(circle_embed_fs(PI / 3.0, 0.0).is_err());
        for k in 0..20 {
            let s = 0.05 * k as f64 * PI / 3.0;
            for seam in [2.0 * PI / 3.0, 4.0 * PI / 3.0, 2.0 * PI] {
                let a = circle_embed_fs(s, seam - 1e-9).unwrap();
                let b = circle_embed_fs(s, seam).unwrap();
                assert!(a.dist(b) <= 1e-6, "s={s} seam={seam}");
            }
        }
    }

    #[test]
    fn closed_form_matches_sampled_scan() {
        assert_abs_diff_eq!(lip_fs_closed(0.0), PI / 2.0, epsilon = 1e-15);
        let c = CircleSamples { m: 4000 };
        for s in [0.0, 0.1] {
            let imgs = c.images(|th| circle_embed_fs(s, th).unwrap());
            let r = distortion_of_map(&c, &imgs, 2.0 * PI / 4000.0).unwrap();
            let corner_to_mid = PI / imgs[0].dist(imgs[2000]);
            assert_abs_diff_eq!(corner_to_mid, lip_fs_closed(s), epsilon = 1e-12);
            assert!(r.lip >= corner_to_mid - 1e-6);
        }
        // for s > 0 the quarter-turn antipodal pair is worse than corner to mid-arc
        let imgs = c.images(|th| circle_embed_fs(0.1, th).unwrap());
        assert!(PI / imgs[1000].dist(imgs[3000]) > lip_fs_closed(0.1) + 1e-2);
    }

    #[test]
    fn optimal_parameter() {
        let (s0, v) = minimize_lip_fs(1e-6).unwrap();
        assert!((s0 - 0.2627).abs() < 1e-3);
        assert!((v - 1.5525).abs() < 1e-3);
        assert!(v < PI / 2.0);
        assert_eq!(minimize_lip_fs_on(0.0, 0.0, 1e-6).unwrap(), (0.0, PI / 2.0));
    }

    #[test]
    fn rose_flat_map_preserves_arc_length() {
        let t = sample_triangle(&build_example(&Example::Rose).unwrap(), 25).unwrap();
        let imgs = rose_flat_embedding(&t).unwrap();
        let o = t.points.iter().position(|p| p.vertex.as_deref() == Some("o")).unwrap();
        assert!(imgs[o].dist(PlanarPoint::default()) < 1e-12);
        for j in 0..3 {
            let idx = t.side_indices(j);
            for w in idx.windows(2) {
                let gap = t.points[w[1]].arc - t.points[w[0]].arc;
                assert_abs_diff_eq!(imgs[w[0]].dist(imgs[w[1]]), gap, epsilon = 1e-9);
            }
        }
        let circle = sample_triangle(&build_example(&Example::Circle).unwrap(), 5).unwrap();
        assert!(rose_flat_embedding(&circle).is_err());
    }
}
