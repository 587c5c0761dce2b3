//! Best distortion found for the chorded quadrilateral as its chords shrink.

use polyembed::optimizer::{quad_growth_study, write_quad_study_csv, OptimizerConfig};

fn main() {
    let cfg = OptimizerConfig { restarts: 8, iterations: 1000, seed: 7, ..OptimizerConfig::default() };
    let rows = quad_growth_study(&[0.5, 0.25, 0.1], 5, &cfg).unwrap();
    write_quad_study_csv(&rows, std::io::stdout()).unwrap();
}
