//! The tripodal embedding of the twisted heart attains the sharp bound.

use polyembed::distortion::distortion_of_map;
use polyembed::metric::FiniteMetric;
use polyembed::polygon::{build_example, sample_triangle, Example};
use polyembed::tripodal::{gromov_products, tripodal_images};

fn main() {
    let t = sample_triangle(&build_example(&Example::Heart).unwrap(), 5).unwrap();
    let g = gromov_products(&t).unwrap();
    println!("comparison tripod legs {:?}", g.legs());
    let f = tripodal_images(&t).unwrap();
    let mut shown = std::collections::BTreeSet::new();
    for (p, z) in t.points.iter().zip(&f) {
        if let Some(v) = p.vertex.as_ref().filter(|v| shown.insert(v.to_string())) {
            println!("F({v}) = ({:.4}, {:.4})", z.x, z.y);
        }
    }
    let r = distortion_of_map(&t, &f, t.grid_step).unwrap();
    let [i, j] = r.argmax_contract;
    println!("distortion {} (bound {})", r.lip, 4.0 * (7.0f64 / 3.0).sqrt());
    println!("worst contraction between {} and {} at distance {}", t.points[i].label(), t.points[j].label(), t.dist(i, j));
}
