use std::path::Path;

use gaa_core::filtering::{extract_local_features, score_image, ScoreMap, Upsample};
use gaa_core::{BinaryMask, RgbImage};

use crate::error::{GaaError, Result};
use crate::io::png::{load_mask, load_rgb, save_rgb};
use crate::model_file::load_model;

pub const MASK_TINT: [u8; 3] = [255, 0, 0];
pub const MASK_ALPHA: f64 = 0.5;
pub const SCORE_ALPHA: f64 = 0.4;

fn blend(base: [u8; 3], tint: [f64; 3], alpha: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = ((1.0 - alpha) * base[c] as f64 + alpha * tint[c]).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Blue-to-red ramp for a score in [0, 1].
fn heat(s: f64) -> [f64; 3] {
    let s = s.clamp(0.0, 1.0);
    [255.0 * s, 0.0, 255.0 * (1.0 - s)]
}

/// Tints masked pixels red at a fixed alpha. With a score map, every pixel is
/// first blended toward a blue-to-red heat ramp of its score.
pub fn render_overlay(image: &RgbImage, mask: &BinaryMask, scores: Option<&ScoreMap>) -> Result<RgbImage> {
    let dims = image.dims();
    let mismatch =
        |found: (usize, usize)| GaaError::Algorithm(gaa_core::Error::DimensionMismatch { expected: dims, found });
    if mask.dims() != dims {
        return Err(mismatch(mask.dims()));
    }
    if let Some(s) = scores.filter(|s| s.dims() != dims) {
        return Err(mismatch(s.dims()));
    }
    let mut out = image.clone();
    let (w, h) = dims;
    for y in 0..h {
        for x in 0..w {
            let mut px = image.get(x, y);
            if let Some(s) = scores {
                px = blend(px, heat(s.get(x, y)), SCORE_ALPHA);
            }
            if mask.get(x, y) {
                px = blend(px, MASK_TINT.map(f64::from), MASK_ALPHA);
            }
            out.set(x, y, px);
        }
    }
    Ok(out)
}

/// File-level overlay: reads the image and mask, optionally scores the image
/// with a saved filter, and writes the tinted PNG.
pub fn overlay_files(image: &Path, mask: &Path, model: Option<&Path>, threshold: u8, output: &Path) -> Result<()> {
    let img = load_rgb(image)?;
    let m = load_mask(mask, threshold)?;
    let scores = match model {
        Some(path) => {
            let (model, geometry) = load_model(path)?;
            let features =
                extract_local_features(&img, geometry.patch, geometry.stride).map_err(|e| GaaError::core(image, e))?;
            let (w, h) = img.dims();
            Some(score_image(&model, &features, h, w, Upsample::Bilinear).map_err(|e| GaaError::core(image, e))?)
        }
        None => None,
    };
    save_rgb(output, &render_overlay(&img, &m, scores.as_ref())?)
}
