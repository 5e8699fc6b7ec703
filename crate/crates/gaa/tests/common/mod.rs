#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gaa::io::png::{save_mask, save_rgb};
use gaa_core::{BinaryMask, RgbImage};

pub const SIZE: usize = 64;

fn hash(a: u64, b: u64, c: u64) -> u64 {
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ c.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z = z.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    z ^ (z >> 29)
}

fn in_body(x: usize, y: usize) -> bool {
    (8..56).contains(&x) && (8..56).contains(&y)
}

fn in_part(x: usize, y: usize) -> bool {
    (20..44).contains(&x) && (36..52).contains(&y)
}

/// Gray textured plate with a blue part, slightly different per image.
pub fn normal_image(i: u64) -> RgbImage {
    RgbImage::from_fn(SIZE, SIZE, |x, y| {
        let n = (hash(i, x as u64, y as u64) % 13) as u8;
        if in_part(x, y) {
            [40 + n, 60 + n, 170 + n]
        } else if in_body(x, y) {
            [150 + n, 150 + n, 140 + n]
        } else {
            [30 + n, 30 + n, 30 + n]
        }
    })
    .unwrap()
}

fn crack(i: u64) -> BinaryMask {
    let (cx, cy) = (24.0 + 3.0 * i as f64, 20.0 + 2.0 * i as f64);
    BinaryMask::from_fn(SIZE, SIZE, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let (u, v) = ((dx + dy) / 2f64.sqrt(), (dx - dy) / 2f64.sqrt());
        (u / 6.5).powi(2) + (v / 1.8).powi(2) <= 1.0
    })
    .unwrap()
}

fn hole(i: u64) -> BinaryMask {
    let (cx, cy) = (30.0 + 4.0 * i as f64, 22.0 + i as f64);
    BinaryMask::from_fn(SIZE, SIZE, |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= 16.0).unwrap()
}

fn defect_image(base: u64, mask: &BinaryMask, color: [u8; 3]) -> RgbImage {
    let img = normal_image(base);
    RgbImage::from_fn(SIZE, SIZE, |x, y| if mask.get(x, y) { color } else { img.get(x, y) }).unwrap()
}

pub const PLAN: &str = "\
# kind      region     strategy             count cluster
structural  body       anywhere,rotation=uniform,scale=0.8:1.2  6
structural  body       tangent              3
structural  body       skeleton             2
logical     part       -                    2
combined    body+part  anywhere             3
combined    body       anywhere             2
";

/// Writes an MVTec-AD style tree with 8 normal images, 3 cracks and 3 holes,
/// two region maps per normal image, a plan and a configuration. Returns the
/// configuration path.
pub fn tiny_dataset(dir: &Path) -> PathBuf {
    let root = dir.join("data").join("plate");
    for i in 0..8u64 {
        let name = format!("{i:03}.png");
        save_rgb(root.join("train/good").join(&name), &normal_image(i)).unwrap();
        save_mask(dir.join("regions/body").join(&name), &BinaryMask::from_fn(SIZE, SIZE, in_body).unwrap()).unwrap();
        save_mask(dir.join("regions/part").join(&name), &BinaryMask::from_fn(SIZE, SIZE, in_part).unwrap()).unwrap();
    }
    std::fs::create_dir_all(root.join("test/good")).unwrap();
    for i in 0..3u64 {
        for (label, mask, color) in [("crack", crack(i), [20, 20, 20]), ("hole", hole(i), [90, 40, 20])] {
            save_rgb(root.join("test").join(label).join(format!("{i:03}.png")), &defect_image(100 + i, &mask, color))
                .unwrap();
            save_mask(root.join("ground_truth").join(label).join(format!("{i:03}_mask.png")), &mask).unwrap();
        }
    }
    std::fs::write(dir.join("plan.txt"), PLAN).unwrap();
    let config = dir.join("gaa.toml");
    std::fs::write(
        &config,
        r#"seed = 7
output = "out"

[dataset]
root = "data"
category = "plate"
regions = "regions"

[enhance]
delta = 1.0
perturb_sigma = 0.5

[placement]
plan = "plan.txt"
overlap_threshold = 0.05

[filter]
top = 4

[filter.training]
epochs = 20
hidden = 64
batch = 2
"#,
    )
    .unwrap();
    config
}
