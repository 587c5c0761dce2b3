//! Builds every example space, validates it and prints its shape.

use polyembed::polygon::{build_example, validate, Example};

fn main() {
    for name in Example::all_names() {
        let ex: Example = name.parse().expect("built-in name");
        let p = build_example(&ex).expect("example builds");
        let report = validate(&p, 17).expect("validation runs");
        println!(
            "{ex:<14} sides {:?} diameter {:.4} worst isometry violation {:e}",
            p.side_lengths(),
            report.diameter,
            report.worst_violation()
        );
    }
}
