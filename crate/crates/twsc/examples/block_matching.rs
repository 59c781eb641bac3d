//! Nonlocal grouping in action: plant exact copies of a patch around an
//! image, then show that block matching ranks them first.
//!
//! Run: cargo run --release --example block_matching

use twsc::image::PlanarImage;
use twsc::patch::{block_match, extract_patch_grid};

fn main() {
    let n = 48;
    let mut img = PlanarImage::new(n, n, 1, 0.0);
    for r in 0..n {
        for c in 0..n {
            img.set(0, r, c, ((r * 29 + c * 53) % 211) as f64);
        }
    }
    // Plant the reference pattern at four distant locations.
    let pattern: Vec<f64> = (0..25).map(|i| ((i * 37) % 193) as f64).collect();
    // All sites sit inside the 48-wide search window around (4, 4).
    let plant_sites = [(4usize, 4usize), (4, 26), (26, 4), (26, 26)];
    for &(r0, c0) in &plant_sites {
        for pr in 0..5 {
            for pc in 0..5 {
                img.set(0, r0 + pr, c0 + pc, pattern[pr * 5 + pc]);
            }
        }
    }

    let grid = extract_patch_grid(&img, 5, 3).expect("grid");
    println!("patch grid: {} reference locations (5x5 patches, stride 3)", grid.len());

    let group = block_match(&img, (4, 4), 5, 8, 48).expect("block match");
    println!("nearest patches to the reference at (4, 4):");
    let reference = group.y.column(0).clone_owned();
    for (j, loc) in group.locations.iter().enumerate() {
        let dist = (group.y.column(j) - &reference).norm_squared();
        let planted = plant_sites.contains(&(loc.0, loc.1));
        println!(
            "  column {j}: location {:>8} squared distance {dist:10.1} {}",
            format!("{loc:?}"),
            if planted { "<- planted copy" } else { "" }
        );
    }
}
