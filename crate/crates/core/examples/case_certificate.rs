//! Sorts every sampled pair of a random triangle into its case and checks
//! the per-case bounds on the squared expansion ratio.

use polyembed::distortion::{case_interval, certify_pairs};
use polyembed::polygon::random_metric_triangle;
use polyembed::tripodal::{gromov_products, tripodal_images};

fn main() {
    let t = random_metric_triangle([1.0, 1.4, 0.9], 3, 12, 2024).unwrap();
    let f = tripodal_images(&t).unwrap();
    let cert = certify_pairs(&t, &gromov_products(&t).unwrap(), &f).unwrap();
    for (k, s) in cert.per_case.iter().enumerate() {
        let (lo, hi) = case_interval(k as u8 + 1);
        if s.pairs > 0 {
            println!(
                "case {}: {:>5} pairs, squared ratio in [{:.4}, {:.4}] within [{lo:.4}, {hi}]",
                k + 1,
                s.pairs,
                s.min_ratio_sq,
                s.max_ratio_sq
            );
        } else {
            println!("case {}: no pairs", k + 1);
        }
    }
    println!("{} pairs, {} failures", cert.pairs_checked, cert.failure_count);
}
