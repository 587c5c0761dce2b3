//! The intrinsic circle: identity map, the flattened family and the
//! four-point lower bound.

use std::f64::consts::PI;

use polyembed::distortion::{best_four_point_bound, distortion_of_map};
use polyembed::lemma_lab::{circle_embed_fs, lip_fs_closed, minimize_lip_fs, CircleSamples};
use polyembed::tripodal::PlanarPoint;

fn main() {
    let c = CircleSamples { m: 2000 };
    let step = 2.0 * PI / c.m as f64;
    let id = c.images(|th| PlanarPoint::new(th.cos(), th.sin()));
    println!("identity: {:.6}", distortion_of_map(&c, &id, step).unwrap().lip);
    let (s0, v) = minimize_lip_fs(1e-9).unwrap();
    println!("corner-to-mid-arc ratio is smallest at s = {s0:.4}: {v:.4}");
    println!("     s   corner-to-mid   sampled distortion");
    for s in [0.0, 0.05, 0.15, s0, 0.5] {
        let f = c.images(|th| circle_embed_fs(s, th).unwrap());
        let r = distortion_of_map(&c, &f, step).unwrap();
        println!("{s:>6.4}   {:>13.6}   {:>18.6}", lip_fs_closed(s), r.lip);
    }
    let w = best_four_point_bound(&CircleSamples { m: 48 }, 0).unwrap();
    println!("four-point lower bound {:.6} from samples {:?}", w.bound, w.cycle);
}
