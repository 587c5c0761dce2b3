//! The three-petal rose under the tripodal map and the petal-flattening map.

use polyembed::distortion::distortion_of_map;
use polyembed::lemma_lab::rose_flat_embedding;
use polyembed::polygon::{build_example, sample_triangle, Example};
use polyembed::tripodal::tripodal_images;

fn main() {
    let t = sample_triangle(&build_example(&Example::Rose).unwrap(), 200).unwrap();
    let tri = distortion_of_map(&t, &tripodal_images(&t).unwrap(), t.grid_step).unwrap();
    let flat = distortion_of_map(&t, &rose_flat_embedding(&t).unwrap(), t.grid_step).unwrap();
    println!("tripodal: L1 {:.4} L0 {:.4} distortion {:.4} (sqrt 7 = {:.4})", tri.l1, tri.l0, tri.lip, 7f64.sqrt());
    println!("flattened petals: distortion {:.4}", flat.lip);
}
