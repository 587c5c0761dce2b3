//! Searches for a lower-distortion embedding of the twisted heart, starting
//! from the tripodal map among other candidates.

use polyembed::distortion::best_four_point_bound;
use polyembed::optimizer::{min_distortion_search, EmbeddingProblem, OptimizerConfig};
use polyembed::polygon::{build_example, sample_triangle, Example};
use polyembed::tripodal::{tripodal_images, PlanarPoint};

fn main() {
    let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 5).unwrap();
    let (problem, map) = EmbeddingProblem::from_space(&*t).unwrap();
    let images = tripodal_images(&t).unwrap();
    let mut hint = vec![PlanarPoint::default(); problem.len()];
    for (i, &k) in map.iter().enumerate() {
        hint[k] = images[i];
    }
    let cfg = OptimizerConfig { restarts: 16, seed: 1, ..OptimizerConfig::default() };
    let found = min_distortion_search(&problem, &cfg, Some(&hint)).unwrap();
    let lb = best_four_point_bound(&problem.matrix, 1).unwrap();
    for tr in &found.traces {
        println!("{:<12} {:.4} -> {:.4} in {} sweeps", format!("{:?}", tr.kind), tr.objective[0].exp(), tr.objective.last().unwrap().exp(), tr.sweeps);
    }
    println!("best distortion {:.4}; four-point lower bound {:.4}", found.report.lip, lb.bound);
}
