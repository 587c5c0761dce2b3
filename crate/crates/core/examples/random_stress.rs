//! Certifies the tripodal bound on a batch of random chorded triangles.

use polyembed::cli::{stress_case, tripodal_bound};

fn main() {
    let mut worst: f64 = 0.0;
    for seed in 1..=50 {
        let c = stress_case(seed, 4, 8).unwrap();
        assert!(c.pass(), "seed {seed} fails: {c:?}");
        worst = worst.max(c.lip);
    }
    println!("50 random triangles pass; worst distortion {worst:.4} of {:.4}", tripodal_bound());
}
