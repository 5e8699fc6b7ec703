use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::{BinaryMask, RgbImage};

/// Circular neighborhood of `neighbors` samples at integer `radius`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LbpParams {
    pub neighbors: usize,
    pub radius: usize,
}

impl Default for LbpParams {
    fn default() -> Self {
        Self { neighbors: 8, radius: 1 }
    }
}

/// `P(P-1) + 2` uniform codes plus one bin shared by every non-uniform code.
pub fn uniform_bin_count(neighbors: usize) -> usize {
    neighbors * (neighbors - 1) + 3
}

fn transitions(code: u32, p: usize) -> u32 {
    let rotated = (code >> 1) | ((code & 1) << (p - 1));
    (code ^ rotated).count_ones()
}

/// Code -> bin. Uniform codes get consecutive bins in increasing code order;
/// all others share the last bin.
fn uniform_table(p: usize) -> Vec<u16> {
    let other = (uniform_bin_count(p) - 1) as u16;
    let mut next = 0u16;
    (0..1u32 << p)
        .map(|code| {
            if transitions(code, p) <= 2 {
                next += 1;
                next - 1
            } else {
                other
            }
        })
        .collect()
}

fn snap(v: f64) -> f64 {
    let r = libm::round(v);
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Bilinear sample written as nested lerps so equal corners reproduce their
/// value exactly.
fn sample(gray: &[f64], width: usize, x: f64, y: f64) -> f64 {
    let (x0, y0) = (libm::floor(x), libm::floor(y));
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let at = |xx: usize, yy: usize| gray[yy * width + xx];
    let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
    let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
    let lerp = |a: f64, b: f64, t: f64| if a == b { a } else { a + t * (b - a) };
    let top = lerp(at(x0, y0), at(x1, y0), fx);
    let bottom = lerp(at(x0, y1), at(x1, y1), fx);
    lerp(top, bottom, fy)
}

/// Normalized histogram of uniform LBP codes over the masked pixels whose full
/// neighborhood lies inside the image.
///
/// Grayscale is BT.601 luma. Bit `p` is set when neighbor `p` (at angle
/// `2πp/P`, counter-clockwise from +x) is `>=` the center. Returns all zeros
/// when no masked pixel has an in-bounds neighborhood.
pub fn lbp_histogram(image: &RgbImage, mask: &BinaryMask, params: LbpParams) -> Result<Vec<f64>> {
    image.check_mask(mask)?;
    let LbpParams { neighbors: p, radius: r } = params;
    if !(2..=24).contains(&p) {
        return Err(invalid("LBP neighbor count must be in 2..=24"));
    }
    if r == 0 {
        return Err(invalid("LBP radius must be at least 1"));
    }
    let (w, h) = image.dims();
    let gray = image.luma();
    let table = uniform_table(p);
    let offsets: Vec<(f64, f64)> = (0..p)
        .map(|i| {
            let theta = 2.0 * core::f64::consts::PI * i as f64 / p as f64;
            (snap(r as f64 * libm::cos(theta)), snap(-(r as f64) * libm::sin(theta)))
        })
        .collect();

    let mut hist = vec![0.0; uniform_bin_count(p)];
    let mut count = 0usize;
    for (x, y) in mask.pixels() {
        if x < r || y < r || x + r >= w || y + r >= h {
            continue;
        }
        let center = gray[y * w + x];
        let code = offsets.iter().enumerate().fold(0u32, |code, (i, (dx, dy))| {
            let v = sample(&gray, w, x as f64 + dx, y as f64 + dy);
            code | (((v >= center) as u32) << i)
        });
        hist[table[code as usize] as usize] += 1.0;
        count += 1;
    }
    if count > 0 {
        hist.iter_mut().for_each(|v| *v /= count as f64);
    }
    Ok(hist)
}
