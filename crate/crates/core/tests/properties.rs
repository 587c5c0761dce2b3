use proptest::prelude::*;

use polyembed::cli::tripodal_bound;
use polyembed::distortion::{best_four_point_bound, certify_pairs, distortion_of_map, four_point_lower_bound};
use polyembed::metric::{FiniteMetric, GraphPoint};
use polyembed::optimizer::{min_distortion_search, EmbeddingProblem, OptimizerConfig};
use polyembed::polygon::{build_example, random_metric_triangle, sample_triangle, stress_parameters, Example};
use polyembed::tripodal::{
    embed_tripod, gromov_products, project_to_tripod, tripod_distance, tripodal_images, Leg, PlanarPoint, TripodPoint,
};

fn examples() -> Vec<Example> {
    vec![
        Example::Circle,
        Example::Rose,
        Example::Tripod(1.0, 2.0, 3.0),
        Example::Heart,
        Example::QuadQ(0.2),
        Example::PentagonK5,
        Example::PentagonK33,
    ]
}

#[test]
fn vertex_distances_match_point_distances() {
    for ex in examples() {
        let g = build_example(&ex).unwrap().ambient;
        for a in g.vertex_ids() {
            let field = g.vertex_distances(a).unwrap();
            let pa = g.vertex_point(a).unwrap();
            for b in g.vertex_ids() {
                let pb = g.vertex_point(b).unwrap();
                let via_field = field.dist[g.vertex_index(b).unwrap()];
                assert_eq!(g.point_distance(pa, pb).unwrap(), via_field, "{ex}: {a} to {b}");
            }
        }
    }
}

#[test]
fn edge_interiors_are_reached_through_endpoints() {
    for ex in examples() {
        let g = build_example(&ex).unwrap().ambient;
        let probes: Vec<GraphPoint> = (0..g.edges().len()).map(|e| GraphPoint::new(e, 0.3 * g.edges()[e].len)).collect();
        for (k, e) in g.edges().iter().enumerate() {
            let u = g.vertex_point(g.id(e.u)).unwrap();
            let v = g.vertex_point(g.id(e.v)).unwrap();
            for x in &probes {
                let (du, dv) = (g.point_distance(*x, u).unwrap(), g.point_distance(*x, v).unwrap());
                for step in 1..=10 {
                    let t = e.len * step as f64 / 11.0;
                    let y = GraphPoint::new(k, t);
                    let mut want = (du + t).min(dv + e.len - t);
                    if x.edge == k {
                        want = want.min((x.offset - t).abs());
                    }
                    let got = g.point_distance(*x, y).unwrap();
                    assert!((got - want).abs() <= 1e-12, "{ex}: edge {k} offset {t}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn every_example_triangle_respects_the_bound() {
    for ex in [Example::Circle, Example::Rose, Example::Tripod(1.0, 2.0, 3.0), Example::Heart] {
        let t = sample_triangle(&build_example(&ex).unwrap(), 9).unwrap();
        let f = tripodal_images(&t).unwrap();
        let r = distortion_of_map(&t, &f, t.grid_step).unwrap();
        assert!(r.lip <= tripodal_bound() + 1e-9, "{ex}: {}", r.lip);
        assert!(certify_pairs(&t, &gromov_products(&t).unwrap(), &f).unwrap().all_pass(), "{ex}");
    }
}

fn rotate(z: PlanarPoint, angle: f64, shift: (f64, f64)) -> PlanarPoint {
    let (s, c) = angle.sin_cos();
    PlanarPoint::new(c * z.x - s * z.y + shift.0, s * z.x + c * z.y + shift.1)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn random_triangles_satisfy_every_invariant(seed in 0u64..1_000_000) {
        let (sides, chords) = stress_parameters(seed, 4);
        let t = random_metric_triangle(sides, chords, 5, seed).unwrap();
        t.check_invariants().unwrap();
        let n = t.len();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(t.dist(i, j), t.dist(j, i));
            }
        }
        prop_assert!(t.matrix.worst_triangle_slack() >= -1e-12);

        let g = gromov_products(&t).unwrap();
        let [lp, lq, lr] = g.legs();
        let tol = 1e-12 * sides.iter().fold(1.0f64, |a, &b| a.max(b));
        prop_assert!((lp + lq - t.side_lengths[0]).abs() <= tol);
        prop_assert!((lq + lr - t.side_lengths[1]).abs() <= tol);
        prop_assert!((lr + lp - t.side_lengths[2]).abs() <= tol);

        let f = tripodal_images(&t).unwrap();
        let r = distortion_of_map(&t, &f, t.grid_step).unwrap();
        prop_assert!(r.lip <= tripodal_bound() + 1e-9, "distortion {}", r.lip);
        let cert = certify_pairs(&t, &g, &f).unwrap();
        prop_assert!(cert.all_pass(), "{:?}", cert.failures.first());

        // the tripod projection does not expand distances
        let proj: Vec<TripodPoint> = t.points.iter().map(|p| project_to_tripod(&g, p.side, p.arc).unwrap()).collect();
        for i in 0..n {
            for j in i + 1..n {
                prop_assert!(tripod_distance(proj[i], proj[j]) <= t.dist(i, j) + 1e-9);
            }
        }
        // along one side the map expands by at most sqrt 3
        for side in 0..3 {
            let idx = t.side_indices(side);
            for w in idx.windows(2) {
                prop_assert!(f[w[0]].dist(f[w[1]]) <= 3f64.sqrt() * t.dist(w[0], w[1]) + 1e-9);
            }
        }
    }
}

proptest! {
    #[test]
    fn flat_tripod_is_bilipschitz(
        la in 0usize..3, ra in 0.0f64..5.0,
        lb in 0usize..3, rb in 0.0f64..5.0,
    ) {
        let a = TripodPoint { leg: Leg::from_index(la), radius: ra };
        let b = TripodPoint { leg: Leg::from_index(lb), radius: rb };
        let g = polyembed::tripodal::GromovProducts::from_side_lengths([10.0, 10.0, 10.0]).unwrap();
        let tri = g.tripod();
        let planar = embed_tripod(a, &tri).dist(embed_tripod(b, &tri));
        let along = tripod_distance(a, b);
        prop_assert!(planar <= along + 1e-9);
        prop_assert!(3f64.sqrt() / 2.0 * along <= planar + 1e-12);
    }

    #[test]
    fn four_point_bound_is_scale_invariant(
        d in prop::array::uniform6(0.1f64..10.0),
        k in -8i32..8,
        lambda in 0.01f64..100.0,
    ) {
        let base = four_point_lower_bound(d[0], d[1], d[2], d[3], d[4], d[5]);
        let p = 2f64.powi(k);
        let pow2 = four_point_lower_bound(p * d[0], p * d[1], p * d[2], p * d[3], p * d[4], p * d[5]);
        prop_assert_eq!(base.is_ok(), pow2.is_ok());
        if let (Ok(a), Ok(b)) = (base, pow2) {
            prop_assert_eq!(a, b);
            let any = four_point_lower_bound(
                lambda * d[0], lambda * d[1], lambda * d[2], lambda * d[3], lambda * d[4], lambda * d[5],
            ).unwrap();
            prop_assert!((any - a).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn distortion_ignores_rigid_motions_of_examples(
        which in 0usize..3,
        angle in 0.0f64..std::f64::consts::TAU,
        dx in -10.0f64..10.0,
        dy in -10.0f64..10.0,
    ) {
        let ex = [Example::Heart, Example::Tripod(1.0, 2.0, 3.0), Example::Circle][which].clone();
        let t = sample_triangle(&build_example(&ex).unwrap(), 5).unwrap();
        let f = tripodal_images(&t).unwrap();
        let base = distortion_of_map(&t, &f, t.grid_step).unwrap();
        let moved: Vec<PlanarPoint> = f.iter().map(|&z| rotate(z, angle, (dx, dy))).collect();
        let r = distortion_of_map(&t, &moved, t.grid_step).unwrap();
        prop_assert!((r.lip - base.lip).abs() <= 1e-12, "{}: {:e}", ex, r.lip - base.lip);
    }

    #[test]
    fn distortion_ignores_rigid_motions_and_scale(
        seed in 0u64..10_000,
        angle in 0.0f64..std::f64::consts::TAU,
        dx in -10.0f64..10.0,
        dy in -10.0f64..10.0,
        scale in 0.1f64..10.0,
    ) {
        let t = random_metric_triangle([1.0, 1.3, 0.8], 2, 4, seed).unwrap();
        let f = tripodal_images(&t).unwrap();
        let base = distortion_of_map(&t, &f, t.grid_step).unwrap();
        let moved: Vec<PlanarPoint> = f.iter().map(|&z| rotate(z, angle, (dx, dy))).collect();
        let r = distortion_of_map(&t, &moved, t.grid_step).unwrap();
        // rounding in the motion is relative to the coordinates, so it is
        // amplified by the ratio of their size to the closest image pair
        let reach = moved.iter().map(|z| z.x.abs().max(z.y.abs())).fold(1.0f64, f64::max);
        let closest = (0..f.len())
            .flat_map(|i| (i + 1..f.len()).map(move |j| (i, j)))
            .map(|(i, j)| f[i].dist(f[j]))
            .filter(|&e| e > 0.0)
            .fold(f64::INFINITY, f64::min);
        prop_assert!((r.lip - base.lip).abs() <= 1e-12 * base.lip * (1.0 + reach / closest));
        let scaled: Vec<PlanarPoint> = f.iter().map(|z| z.scale(scale)).collect();
        let s = distortion_of_map(&t, &scaled, t.grid_step).unwrap();
        prop_assert!((s.lip - base.lip).abs() <= 1e-12 * base.lip);
        prop_assert!((s.l1 - scale * base.l1).abs() <= 1e-12 * s.l1);
        prop_assert!((s.l0 - base.l0 / scale).abs() <= 1e-12 * s.l0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn search_results_are_consistent(seed in 0u64..1000) {
        let (sides, chords) = stress_parameters(seed, 3);
        let t = random_metric_triangle(sides, chords, 3, seed).unwrap();
        let (problem, _) = EmbeddingProblem::from_space(&*t).unwrap();
        let cfg = OptimizerConfig { restarts: 2, iterations: 200, seed, ..OptimizerConfig::default() };
        let a = min_distortion_search(&problem, &cfg, None).unwrap();
        let again = distortion_of_map(&problem.matrix, &a.best, 0.0).unwrap();
        prop_assert_eq!(&a.report, &again);
        let lb = best_four_point_bound(&problem.matrix, seed).unwrap();
        prop_assert!(a.report.lip >= lb.bound - 1e-6);
        for tr in &a.traces {
            prop_assert!(tr.objective.windows(2).all(|w| w[1] <= w[0]));
        }
        let b = min_distortion_search(&problem, &cfg, None).unwrap();
        prop_assert_eq!(a, b);
    }
}
