//! Tripods embed with distortion 2/sqrt 3 whatever their leg lengths.

use polyembed::distortion::distortion_of_map;
use polyembed::lemma_lab::{eval_objective, ObjectiveId};
use polyembed::polygon::{build_example, sample_triangle, Example};
use polyembed::tripodal::tripodal_images;

fn main() {
    for legs in [(1.0, 1.0, 1.0), (1.0, 2.0, 3.0), (0.5, 4.0, 2.5)] {
        let t = sample_triangle(&build_example(&Example::Tripod(legs.0, legs.1, legs.2)).unwrap(), 61).unwrap();
        let r = distortion_of_map(&t, &tripodal_images(&t).unwrap(), t.grid_step).unwrap();
        println!("legs {legs:?}: distortion {:.9}", r.lip);
    }
    println!("2/sqrt 3 = {:.9}", 2.0 / 3f64.sqrt());
    let m = |s: f64| eval_objective(ObjectiveId::TripodM, &[s]).unwrap();
    println!("squared contraction profile: M(0) = {}, M(1) = {:.6}, M(100) = {:.6}", m(0.0), m(1.0), m(100.0));
}
