//! Draws the flattened circle and the heart's tripodal image as SVG files
//! in the system temporary directory.

use polyembed::cli::{circle_images, export_svg, SvgStyle};
use polyembed::polygon::{build_example, sample_polygon, sample_triangle, Example};
use polyembed::tripodal::tripodal_images;

fn main() {
    let dir = std::env::temp_dir();
    let circle = sample_polygon(&build_example(&Example::Circle).unwrap(), 120).unwrap();
    let fs = circle_images(&circle, 0.2627).unwrap();
    let heart = sample_triangle(&build_example(&Example::Heart).unwrap(), 9).unwrap();
    let hf = tripodal_images(&heart).unwrap();
    for (name, pts, imgs) in [("circle_fs.svg", &circle.points, fs), ("heart.svg", &heart.points, hf)] {
        let svg = export_svg(pts, &imgs, &SvgStyle::default()).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, svg).unwrap();
        println!("wrote {}", path.display());
    }
}
