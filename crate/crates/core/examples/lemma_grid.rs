//! Checks the claimed maxima of the auxiliary functions on refined grids.

use polyembed::lemma_lab::{reports_markdown, verify_all};

fn main() {
    let reports = verify_all(48, 8).unwrap();
    print!("{}", reports_markdown(&reports));
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("{passed}/{} verified", reports.len());
}
