use crate::error::{Error, Result};
use crate::{BinaryMask, RgbImage};

// sRGB (D65) to XYZ.
const M: [[f64; 3]; 3] =
    [[0.4124564, 0.3575761, 0.1804375], [0.2126729, 0.7151522, 0.0721750], [0.0193339, 0.1191920, 0.9503041]];

fn linearize(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        libm::pow((c + 0.055) / 1.055, 2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        libm::cbrt(t)
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIE L*a*b* of an sRGB triple under D65.
///
/// The reference white is the image of sRGB white under the conversion
/// matrix, so `[255, 255, 255]` maps to exactly `(100, 0, 0)`.
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(linearize);
    let xyz = M.map(|row| row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]);
    let white = M.map(|row| row[0] + row[1] + row[2]);
    let f = [0, 1, 2].map(|i| lab_f(xyz[i] / white[i]));
    [116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])]
}

/// `(mean L*, mean a*, mean b*, std L*, std a*, std b*)` over the masked
/// pixels, with population standard deviations.
pub fn lab_stats(image: &RgbImage, mask: &BinaryMask) -> Result<[f64; 6]> {
    image.check_mask(mask)?;
    let n = mask.area();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let labs: alloc::vec::Vec<[f64; 3]> = mask.pixels().map(|(x, y)| srgb_to_lab(image.get(x, y))).collect();
    let mut out = [0.0; 6];
    for c in 0..3 {
        let mean = labs.iter().map(|l| l[c]).sum::<f64>() / n as f64;
        let var = labs.iter().map(|l| (l[c] - mean) * (l[c] - mean)).sum::<f64>() / n as f64;
        out[c] = mean;
        out[c + 3] = libm::sqrt(var);
    }
    Ok(out)
}
