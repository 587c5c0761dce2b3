//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and
//! fails with the list of sub-checks that did not hold.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use polyembed::cli::{run, stress_case, tripodal_bound};
use polyembed::distortion::{best_four_point_bound, distortion_of_map};
use polyembed::lemma_lab::{
    builtin_specs, circle_embed_fs, eval_objective, grid_maximize, lip_fs_closed, minimize_lip_fs, rose_flat_embedding,
    verify_all, CircleSamples, ObjectiveId,
};
use polyembed::metric::{DistanceMatrix, FiniteMetric};
use polyembed::optimizer::{min_distortion_search, quad_growth_study, EmbeddingProblem, OptimizerConfig};
use polyembed::polygon::{build_example, sample_polygon, sample_triangle, validate, Example, FiniteMetricTriangle};
use polyembed::tripodal::{tripodal_images, PlanarPoint};

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn within(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, format!("{what}: got {got}, want {want} ± {tol}"));
    }

    fn timed(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(took < limit, format!("runtime {took:?} under {limit:?}"));
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("{} PASS ({})", self.name, self.notes.join("; "));
        } else {
            println!("{} FAIL ({})", self.name, self.failures.join("; "));
            panic!("{} failed: {}", self.name, self.failures.join("; "));
        }
    }
}

fn vertex(t: &FiniteMetricTriangle, id: &str) -> usize {
    t.points.iter().position(|p| p.vertex.as_deref() == Some(id)).expect("vertex is sampled")
}

#[test]
fn ac01_twisted_heart_exactness() {
    let mut c = Criterion::new("AC1 twisted heart");
    let start = Instant::now();
    let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 5).unwrap();
    let f = tripodal_images(&t).unwrap();
    let s3 = 3f64.sqrt();
    let (a, b, cc) = (vertex(&t, "a"), vertex(&t, "b"), vertex(&t, "c"));
    for (name, i, want) in [("F(a)", a, (0.5, s3 / 2.0)), ("F(b)", b, (0.5, -s3 / 2.0)), ("F(c)", cc, (-1.5, -s3 / 2.0))] {
        c.within(&format!("{name}.x"), f[i].x, want.0, 1e-12);
        c.within(&format!("{name}.y"), f[i].y, want.1, 1e-12);
    }
    c.within("ratio(a,b)", f[a].dist(f[b]) / t.dist(a, b), s3 / 4.0, 1e-12);
    c.within("ratio(a,c)", f[a].dist(f[cc]) / t.dist(a, cc), 7f64.sqrt(), 1e-12);
    let r = distortion_of_map(&t, &f, t.grid_step).unwrap();
    c.within("distortion", r.lip, tripodal_bound(), 1e-9);
    c.timed(start, Duration::from_secs(1));
    c.finish();
}

#[test]
fn ac02_random_triangle_stress() {
    let mut c = Criterion::new("AC2 random triangles");
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 1..=200 {
        let s = stress_case(seed, 4, 8).unwrap();
        worst = worst.max(s.lip);
        if s.lip > tripodal_bound() + 1e-9 {
            c.check(false, format!("seed {seed}: distortion {} above bound", s.lip));
        }
        if s.case_failures > 0 {
            c.check(false, format!("seed {seed}: {} case failures, first {:?}", s.case_failures, s.first_failure));
        }
    }
    c.check(worst <= tripodal_bound() + 1e-9, format!("worst distortion {worst} over 200 triangles"));
    c.timed(start, Duration::from_secs(120));
    c.finish();
}

#[test]
fn ac03_appendix_suite() {
    let mut c = Criterion::new("AC3 appendix lemmas");
    let start = Instant::now();
    let targets = [4.0, 4.0, 4.0, 13.0 / 3.0, 16.0 / 3.0, 7.0, 7.0, 7.0, 13.0 / 3.0, 16.0 / 3.0, 7.0, 7.0, 4.0, 16.0 / 3.0, 4.0 / 3.0];
    let specs = builtin_specs();
    c.check(specs.len() == 15, format!("{} specs", specs.len()));
    for (s, want) in specs.iter().zip(targets) {
        c.within(&format!("{} claim", s.id), s.claimed_max, want, 0.0);
    }
    let reports = verify_all(48, 8).unwrap();
    for r in &reports {
        c.check(r.claim_deviation <= 1e-12, format!("{} value at claimed argmax off by {}", r.id, r.claim_deviation));
        c.check(
            r.grid_max <= r.claimed_max + 1e-9 && r.grid_max >= r.claimed_max - 1e-3,
            format!("{} grid max {} vs {}", r.id, r.grid_max, r.claimed_max),
        );
        c.check(r.pass, format!("{} verified", r.id));
    }
    c.within("constant identity", 7f64.sqrt() * (16.0f64 / 3.0).sqrt(), tripodal_bound(), 1e-12);
    c.timed(start, Duration::from_secs(60));
    c.finish();
}

#[test]
fn ac04_circle() {
    let mut c = Criterion::new("AC4 circle");
    let circle = CircleSamples { m: 3000 };
    let step = 2.0 * PI / 3000.0;
    let identity = circle.images(|th| PlanarPoint::new(th.cos(), th.sin()));
    let r = distortion_of_map(&circle, &identity, step).unwrap();
    c.within("identity distortion", r.lip, PI / 2.0, 1e-3);
    let (s0, v) = minimize_lip_fs(1e-8).unwrap();
    c.within("s0", s0, 0.2627, 1e-3);
    c.within("closed-form minimum", v, 1.5525, 1e-3);
    for s in [0.05, 0.15, 0.2627] {
        let images = circle.images(|th| circle_embed_fs(s, th).unwrap());
        let sampled = distortion_of_map(&circle, &images, step).unwrap();
        c.within(&format!("closed form vs sampled at s={s}"), lip_fs_closed(s), sampled.lip, 2e-3);
    }
    let quads = CircleSamples { m: 48 };
    let w = best_four_point_bound(&quads, 0).unwrap();
    c.check(w.bound >= 2f64.sqrt() - 1e-6, format!("four-point bound {}", w.bound));
    let quarter = PI / 2.0;
    let cyc = w.cycle;
    let even = (0..4).all(|k| (quads.dist(cyc[k], cyc[(k + 1) % 4]) - quarter).abs() < 1e-12);
    c.check(even && w.exhaustive, format!("witness {cyc:?} evenly spaced"));
    c.finish();
}

#[test]
fn ac05_rose() {
    let mut c = Criterion::new("AC5 rose");
    let rose = build_example(&Example::Rose).unwrap();
    let t = sample_triangle(&rose, 400).unwrap();
    let f = tripodal_images(&t).unwrap();
    let r = distortion_of_map(&t, &f, t.grid_step).unwrap();
    c.within("tripodal distortion", r.lip, 2.0, 1e-2);
    let flat = rose_flat_embedding(&t).unwrap();
    let rf = distortion_of_map(&t, &flat, t.grid_step).unwrap();
    c.within("flat distortion", rf.lip, 2.0, 1e-2);
    let small = sample_triangle(&rose, 9).unwrap();
    let (problem, map) = EmbeddingProblem::from_space(&*small).unwrap();
    let images = tripodal_images(&small).unwrap();
    let mut hint = vec![PlanarPoint::default(); problem.len()];
    for (i, &k) in map.iter().enumerate().rev() {
        hint[k] = images[i];
    }
    let cfg = OptimizerConfig { restarts: 20, seed: 0, ..OptimizerConfig::default() };
    let best = min_distortion_search(&problem, &cfg, Some(&hint)).unwrap();
    c.check(
        (1.95..=2.05).contains(&best.report.lip),
        format!("optimizer best {} in [1.95, 2.05]", best.report.lip),
    );
    c.finish();
}

#[test]
fn ac06_tripods() {
    let mut c = Criterion::new("AC6 tripods");
    for legs in [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0)] {
        let t = sample_triangle(&build_example(&Example::Tripod(legs.0, legs.1, legs.2)).unwrap(), 61).unwrap();
        let f = tripodal_images(&t).unwrap();
        let r = distortion_of_map(&t, &f, t.grid_step).unwrap();
        c.within(&format!("tripod {legs:?} distortion"), r.lip, 2.0 / 3f64.sqrt(), 1e-6);
    }
    let spec = builtin_specs().into_iter().find(|s| s.id == ObjectiveId::TripodM).unwrap();
    let rep = grid_maximize(&spec, 48, 12).unwrap();
    c.within("TripodM max", rep.grid_max, 4.0 / 3.0, 1e-6);
    c.within("TripodM argmax", rep.grid_argmax[0], 1.0, 1e-6);
    c.within("TripodM(1)", eval_objective(ObjectiveId::TripodM, &[1.0]).unwrap(), 4.0 / 3.0, 1e-15);
    c.finish();
}

#[test]
fn ac07_constructions() {
    let mut c = Criterion::new("AC7 constructions");
    let mut cases = vec![Example::Heart, Example::PentagonK5, Example::PentagonK33];
    cases.extend([0.5, 0.25, 0.1].map(Example::QuadQ));
    for ex in &cases {
        let p = build_example(ex).unwrap();
        let rep = validate(&p, 9).unwrap();
        c.check(rep.valid && rep.worst_violation() == 0.0, format!("{ex} violation {}", rep.worst_violation()));
        if let Example::QuadQ(eps) = ex {
            for (u, v) in [("p1", "p3"), ("p2", "p4"), ("m1", "m3")] {
                let g = &p.ambient;
                let d = g.vdist(g.vertex_index(u).unwrap(), g.vertex_index(v).unwrap());
                c.check(d == *eps, format!("{ex} d({u},{v}) = {d}"));
            }
        }
        if matches!(ex, Example::PentagonK5 | Example::PentagonK33) {
            c.check(p.side_count() == 5, format!("{ex} has {} sides", p.side_count()));
            c.check(p.side_lengths().iter().all(|&l| l == 2.0), format!("{ex} sides {:?}", p.side_lengths()));
            c.check(rep.diameter == 2.0, format!("{ex} diameter {}", rep.diameter));
        }
    }
    c.finish();
}

#[test]
fn ac08_quad_growth() {
    let mut c = Criterion::new("AC8 quadrilateral study");
    let start = Instant::now();
    let cfg = OptimizerConfig { restarts: 30, seed: 7, ..OptimizerConfig::default() };
    let rows = quad_growth_study(&[0.5, 0.25, 0.1], 6, &cfg).unwrap();
    for r in &rows {
        c.check(
            r.lip_estimate >= r.four_point_lb - 1e-6,
            format!("eps {}: estimate {} vs four-point {}", r.epsilon, r.lip_estimate, r.four_point_lb),
        );
    }
    c.check(
        rows[2].lip_estimate >= rows[0].lip_estimate - 0.1,
        format!("estimate(0.1) {} vs estimate(0.5) {}", rows[2].lip_estimate, rows[0].lip_estimate),
    );
    c.timed(start, Duration::from_secs(300));
    c.finish();
}

#[test]
fn ac09_optimizer_soundness() {
    let mut c = Criterion::new("AC9 optimizer soundness");
    let cfg = OptimizerConfig::default();
    for (name, pts) in [
        ("3-4-5", vec![(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)]),
        ("unit square", vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
    ] {
        let m = DistanceMatrix::from_fn(pts.len(), |i, j| {
            let (a, b): ((f64, f64), (f64, f64)) = (pts[i], pts[j]);
            (a.0 - b.0).hypot(a.1 - b.1)
        });
        let p = EmbeddingProblem::new(m, Vec::new()).unwrap();
        let r = min_distortion_search(&p, &cfg, None).unwrap();
        c.check(r.report.lip <= 1.0 + 1e-4, format!("{name} best {}", r.report.lip));
    }
    let heart = sample_polygon(&build_example(&Example::Heart).unwrap(), 5).unwrap();
    let (p, map) = EmbeddingProblem::from_space(&heart).unwrap();
    let t = FiniteMetricTriangle::try_from(heart.clone()).unwrap();
    let images = tripodal_images(&t).unwrap();
    let mut hint = vec![PlanarPoint::default(); p.len()];
    for (i, &k) in map.iter().enumerate().rev() {
        hint[k] = images[i];
    }
    let cfg = OptimizerConfig { restarts: 40, seed: 0, ..OptimizerConfig::default() };
    let r = min_distortion_search(&p, &cfg, Some(&hint)).unwrap();
    c.check(r.report.lip <= 4.5, format!("heart best {}", r.report.lip));
    c.finish();
}

#[test]
fn ac10_determinism() {
    let mut c = Criterion::new("AC10 determinism");
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).display().to_string();
    let commands: Vec<(Vec<String>, Vec<String>)> = vec![
        (
            vec!["stress", "--count", "5", "--seed", "11", "--chords", "3", "--m", "5", "--out", &path("stress.csv")],
            vec![path("stress.csv")],
        ),
        (
            vec!["optimize", "--space", "heart", "--m", "3", "--restarts", "4", "--seed", "3", "--iterations", "300", "--out", &path("opt.json"), "--embedding-out", &path("opt.csv")],
            vec![path("opt.json"), path("opt.csv")],
        ),
        (
            vec!["quad-study", "--eps", "0.5,0.25", "--m", "3", "--restarts", "3", "--seed", "7", "--iterations", "300", "--out", &path("quad.csv")],
            vec![path("quad.csv")],
        ),
        (
            vec!["embed", "--space", "heart", "--m", "5", "--out", &path("heart.csv")],
            vec![path("heart.csv")],
        ),
        (
            vec!["export-svg", "--embedding", &path("heart.csv"), "--out", &path("heart.svg")],
            vec![path("heart.svg")],
        ),
        (
            vec!["distortion", "--space", "rose", "--method", "flat", "--m", "20", "--out", &path("rose.json")],
            vec![path("rose.json")],
        ),
        (vec!["verify-lemmas", "--out", &path("lemmas.csv")], vec![path("lemmas.csv")]),
    ]
    .into_iter()
    .map(|(a, o)| (a.into_iter().map(String::from).collect(), o))
    .collect();
    for (args, outputs) in &commands {
        let argv = || std::iter::once("polyembed".to_string()).chain(args.iter().cloned());
        let mut runs = Vec::new();
        for _ in 0..2 {
            let code = run(argv());
            let bytes: Vec<Vec<u8>> = outputs
                .iter()
                .flat_map(|o| [std::fs::read(o).unwrap_or_default(), std::fs::read(format!("{o}.manifest.json")).unwrap_or_default()])
                .collect();
            runs.push((code, bytes));
        }
        let same = runs[0] == runs[1] && runs[0].0 == 0 && runs[0].1.iter().all(|b| !b.is_empty());
        c.check(same, format!("`{}` reproducible", args[0]));
    }
    c.finish();
}
