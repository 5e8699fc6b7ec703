use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::model::{sigmoid, FilterModel};
use super::patch::PatchFeatureMap;
use crate::error::{invalid, Error, Result};
use crate::BinaryMask;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upsample {
    /// Half-pixel bilinear resampling with edge clamping.
    #[default]
    Bilinear,
    Nearest,
}

/// Per-patch scores and their resampling to image resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    grid_h: usize,
    grid_w: usize,
    grid: Vec<f64>,
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

/// Source coordinate of output index `i` when resizing `n_in` to `n_out`
/// samples, clamped to the input range.
fn source_coord(i: usize, n_in: usize, n_out: usize) -> f64 {
    let s = (i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5;
    s.clamp(0.0, (n_in - 1) as f64)
}

fn resample(grid: &[f64], gh: usize, gw: usize, out_h: usize, out_w: usize, mode: Upsample) -> Vec<f64> {
    let mut out = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        for x in 0..out_w {
            let v = match mode {
                Upsample::Nearest => {
                    let gy = ((y * gh) / out_h).min(gh - 1);
                    let gx = ((x * gw) / out_w).min(gw - 1);
                    grid[gy * gw + gx]
                }
                Upsample::Bilinear => {
                    let (sy, sx) = (source_coord(y, gh, out_h), source_coord(x, gw, out_w));
                    let (y0, x0) = (sy as usize, sx as usize);
                    let (y1, x1) = ((y0 + 1).min(gh - 1), (x0 + 1).min(gw - 1));
                    let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
                    let at = |r: usize, c: usize| grid[r * gw + c];
                    let top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
                    let bottom = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
                    top + fy * (bottom - top)
                }
            };
            out.push(v);
        }
    }
    out
}

impl ScoreMap {
    pub fn new(
        grid_h: usize,
        grid_w: usize,
        grid: Vec<f64>,
        out_h: usize,
        out_w: usize,
        mode: Upsample,
    ) -> Result<Self> {
        if grid_h == 0 || grid_w == 0 || out_h == 0 || out_w == 0 {
            return Err(invalid("score grid and output dimensions must be positive"));
        }
        if grid.len() != grid_h * grid_w {
            return Err(invalid("score grid length mismatch"));
        }
        if let Some(index) = grid.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let pixels = resample(&grid, grid_h, grid_w, out_h, out_w, mode);
        Ok(Self { grid_h, grid_w, grid, width: out_w, height: out_h, pixels })
    }

    /// A map given directly at pixel resolution.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::new(height, width, pixels, height, width, Upsample::Nearest)
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_h, self.grid_w)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Logistic scores of every patch, resampled to `out_h x out_w`.
pub fn score_image(
    model: &FilterModel,
    features: &PatchFeatureMap,
    out_h: usize,
    out_w: usize,
    mode: Upsample,
) -> Result<ScoreMap> {
    if features.dim() != model.dim() {
        return Err(invalid(alloc::format!(
            "feature dimension {} does not match model dimension {}",
            features.dim(),
            model.dim()
        )));
    }
    let grid: Vec<f64> = features.vectors().map(|v| sigmoid(model.logit(&model.standardize(v)))).collect();
    ScoreMap::new(features.grid_h(), features.grid_w(), grid, out_h, out_w, mode)
}

/// Anomaly region score: the mean resampled score over the mask.
///
/// Accumulated as deviations from the first masked score, so a constant map
/// returns that constant exactly.
pub fn ars(score: &ScoreMap, mask: &BinaryMask) -> Result<f64> {
    if score.dims() != mask.dims() {
        return Err(Error::DimensionMismatch { expected: score.dims(), found: mask.dims() });
    }
    let mut it = mask.pixels().map(|(x, y)| score.get(x, y));
    let base = it.next().ok_or(Error::EmptyMask)?;
    let (mut sum, mut n) = (0.0, 1usize);
    for v in it {
        sum += v - base;
        n += 1;
    }
    Ok(base + sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn bilinear_center_of_checker() {
        let m = ScoreMap::new(2, 2, vec![0.0, 1.0, 1.0, 0.0], 3, 3, Upsample::Bilinear).unwrap();
        assert_eq!(m.get(1, 1), 0.5);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(2, 0), 1.0);
    }

    #[test]
    fn single_cell_is_constant() {
        let m = ScoreMap::new(1, 1, vec![0.37], 5, 7, Upsample::Bilinear).unwrap();
        assert!(m.pixels().iter().all(|v| *v == 0.37));
        assert_eq!(m.dims(), (7, 5));
    }

    #[test]
    fn ars_cases() {
        let mask = BinaryMask::from_fn(10, 10, |x, y| x < 5 && y < 4).unwrap();
        let flat = ScoreMap::from_pixels(10, 10, vec![0.7; 100]).unwrap();
        assert_eq!(ars(&flat, &mask).unwrap(), 0.7);
        let ind = ScoreMap::from_pixels(10, 10, mask.bits().iter().map(|b| *b as u8 as f64).collect()).unwrap();
        assert_eq!(ars(&ind, &mask).unwrap(), 1.0);
        let hundred = BinaryMask::full(10, 10).unwrap();
        let sixty = ScoreMap::from_pixels(10, 10, (0..100).map(|i| if i < 60 { 1.0 } else { 0.0 }).collect()).unwrap();
        assert!((ars(&sixty, &hundred).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(ars(&flat, &BinaryMask::new(10, 10).unwrap()), Err(Error::EmptyMask));
        assert!(ars(&flat, &BinaryMask::full(9, 10).unwrap()).is_err());
    }
}
