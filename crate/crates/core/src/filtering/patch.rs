use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::RgbImage;

pub const LOCAL_FEATURE_DIM: usize = 14;
const ORIENTATION_BINS: usize = 8;

/// Feature vectors on a regular patch grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchFeatureMap {
    grid_h: usize,
    grid_w: usize,
    dim: usize,
    values: Vec<f64>,
    stride: usize,
    patch: usize,
}

impl PatchFeatureMap {
    pub fn new(
        grid_h: usize,
        grid_w: usize,
        dim: usize,
        values: Vec<f64>,
        stride: usize,
        patch: usize,
    ) -> Result<Self> {
        if grid_h == 0 || grid_w == 0 || dim == 0 || stride == 0 || patch == 0 {
            return Err(invalid("feature map dimensions, stride and patch must be positive"));
        }
        if values.len() != grid_h * grid_w * dim {
            return Err(invalid(alloc::format!(
                "feature map holds {} values, expected {}x{}x{}",
                values.len(),
                grid_h,
                grid_w,
                dim
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid_h, grid_w, dim, values, stride, patch })
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Feature vector of grid cell `(row, col)`.
    pub fn vector(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.grid_w + col) * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Whether the grid could come from a `width x height` image.
    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.patch <= width.min(height)
            && (self.grid_w - 1) * self.stride + self.patch <= width
            && (self.grid_h - 1) * self.stride + self.patch <= height
    }
}

/// Central differences inside, one-sided differences on the border.
fn gradient(luma: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let at = |x: usize, y: usize| luma[y * w + x];
            gx[y * w + x] = if w == 1 {
                0.0
            } else if x == 0 {
                at(1, y) - at(0, y)
            } else if x == w - 1 {
                at(x, y) - at(x - 1, y)
            } else {
                (at(x + 1, y) - at(x - 1, y)) / 2.0
            };
            gy[y * w + x] = if h == 1 {
                0.0
            } else if y == 0 {
                at(x, 1) - at(x, 0)
            } else if y == h - 1 {
                at(x, y) - at(x, y - 1)
            } else {
                (at(x, y + 1) - at(x, y - 1)) / 2.0
            };
        }
    }
    (gx, gy)
}

/// Hand-computable 14-dim patch descriptor: RGB means (3) and population
/// stds (3) on the [0, 1] scale, then an 8-bin unsigned orientation histogram
/// of luma gradients weighted by magnitude and divided by the patch pixel
/// count. Bin `b` covers orientations `[b, b+1) * pi/8`; a horizontal
/// gradient (a vertical edge) lands in bin 0.
pub fn extract_local_features(image: &RgbImage, patch: usize, stride: usize) -> Result<PatchFeatureMap> {
    let (w, h) = image.dims();
    if patch == 0 || stride == 0 {
        return Err(invalid("patch and stride must be positive"));
    }
    if patch > w.min(h) {
        return Err(invalid(alloc::format!("patch {patch} exceeds image {w}x{h}")));
    }
    let luma: Vec<f64> = image.luma().iter().map(|v| v / 255.0).collect();
    let (gx, gy) = gradient(&luma, w, h);
    let grid_w = (w - patch) / stride + 1;
    let grid_h = (h - patch) / stride + 1;
    let npix = (patch * patch) as f64;
    let mut values = Vec::with_capacity(grid_h * grid_w * LOCAL_FEATURE_DIM);
    for gr in 0..grid_h {
        for gc in 0..grid_w {
            let (x0, y0) = (gc * stride, gr * stride);
            // Integer moments keep constant patches exact.
            let mut sum = [0u64; 3];
            let mut sq = [0u64; 3];
            let mut hist = [0.0f64; ORIENTATION_BINS];
            for y in y0..y0 + patch {
                for x in x0..x0 + patch {
                    let px = image.get(x, y);
                    for c in 0..3 {
                        sum[c] += px[c] as u64;
                        sq[c] += px[c] as u64 * px[c] as u64;
                    }
                    let (dx, dy) = (gx[y * w + x], gy[y * w + x]);
                    let mag = libm::hypot(dx, dy);
                    if mag > 0.0 {
                        let theta = libm::atan2(dy, dx).rem_euclid(core::f64::consts::PI);
                        let bin = ((theta / (core::f64::consts::PI / ORIENTATION_BINS as f64)) as usize)
                            .min(ORIENTATION_BINS - 1);
                        hist[bin] += mag / npix;
                    }
                }
            }
            let n = (patch * patch) as u64;
            for s in sum {
                values.push(s as f64 / (255.0 * npix));
            }
            for c in 0..3 {
                let spread = (n * sq[c] - sum[c] * sum[c]) as f64;
                values.push(libm::sqrt(spread) / (255.0 * npix));
            }
            values.extend_from_slice(&hist);
        }
    }
    PatchFeatureMap::new(grid_h, grid_w, LOCAL_FEATURE_DIM, values, stride, patch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image() {
        let img = RgbImage::filled(8, 8, [51, 102, 204]).unwrap();
        let f = extract_local_features(&img, 4, 2).unwrap();
        assert_eq!((f.grid_h(), f.grid_w()), (3, 3));
        for v in f.vectors() {
            assert_eq!(&v[..3], &[0.2, 0.4, 0.8]);
            assert!(v[3..].iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn non_overlapping_grid() {
        let img = RgbImage::filled(64, 64, [0, 0, 0]).unwrap();
        let f = extract_local_features(&img, 16, 16).unwrap();
        assert_eq!((f.grid_h(), f.grid_w(), f.dim()), (4, 4, 14));
        assert!(f.fits(64, 64));
    }

    #[test]
    fn vertical_edge_fills_bin_zero() {
        // Columns 0-1 black, 2-3 white.
        let img = RgbImage::from_fn(4, 4, |x, _| if x < 2 { [0; 3] } else { [255; 3] }).unwrap();
        let f = extract_local_features(&img, 4, 4).unwrap();
        let v = f.vector(0, 0);
        // gx per row: [0, 0.5, 0.5, 0] (luma of white is 1 up to rounding).
        let white = img.luma()[2] / 255.0;
        assert!((v[6] - 4.0 * white / 16.0).abs() < 1e-12);
        assert!(v[7..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn bad_geometry() {
        let img = RgbImage::filled(8, 6, [0; 3]).unwrap();
        assert!(extract_local_features(&img, 7, 1).is_err());
        assert!(extract_local_features(&img, 0, 1).is_err());
        assert!(extract_local_features(&img, 2, 0).is_err());
    }
}
