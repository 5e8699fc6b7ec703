//! Geometric enhancement of ground-truth anomaly masks.
//!
//! A mask is closed, traced, simplified, jittered, rasterized and finally
//! rescaled toward the average anomaly area of its cluster, producing a
//! structurally varied pseudo-mask of plausible size.

mod contour;
mod morphology;
mod perturb;
mod polygon;
mod raster;
mod scale;
mod simplify;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;
use crate::BinaryMask;

pub use contour::extract_contours;
pub use morphology::{dilate, erode, morphological_close, ElementShape, StructuringElement};
pub use perturb::perturb_polygon;
pub use polygon::{point_segment_distance, segments_intersect, Point, Polygon};
pub use raster::rasterize;
pub use scale::{scale_adapt, scale_factor};
pub use simplify::{approximate_polygon, distance_to_ring, simplify_polyline};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceConfig {
    pub close_b1: StructuringElement,
    pub erode_b2: StructuringElement,
    /// Polygon approximation tolerance, pixels.
    pub delta: f64,
    /// Per-axis vertex jitter, pixels.
    pub perturb_sigma: f64,
    /// Blend between square-root and cube-root area correction.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            close_b1: StructuringElement::square(1),
            erode_b2: StructuringElement::square(1),
            delta: 2.0,
            perturb_sigma: 1.5,
            alpha: 0.5,
            seed: 0,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        self.close_b1.validate()?;
        self.erode_b2.validate()?;
        if !(self.delta >= 0.0) || !(self.perturb_sigma >= 0.0) {
            return Err(invalid("delta and perturb_sigma must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Full enhancement: close, trace every component, approximate, perturb,
/// rasterize, union, then rescale toward `a_avg`.
///
/// Component `i` is perturbed with the stream `(seed, i)`.
pub fn enhance(mask: &BinaryMask, cfg: &EnhanceConfig, a_avg: f64) -> Result<BinaryMask> {
    cfg.validate()?;
    let closed = morphological_close(mask, &cfg.close_b1, &cfg.erode_b2)?;
    let (w, h) = closed.dims();
    let mut union = BinaryMask::new(w, h)?;
    for (i, contour) in extract_contours(&closed)?.iter().enumerate() {
        let approx = approximate_polygon(contour, cfg.delta)?;
        let moved = perturb_polygon(&approx, cfg.perturb_sigma, derive_seed(cfg.seed, &[i as u64]))?;
        union = union.union(&rasterize(&moved, w, h)?)?;
    }
    if union.is_empty() {
        return Err(Error::DegenerateEnhancement);
    }
    scale_adapt(&union, a_avg, cfg.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(r: f64, canvas: usize) -> BinaryMask {
        let c = canvas as f64 / 2.0;
        BinaryMask::from_fn(canvas, canvas, |x, y| {
            let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
            dx * dx + dy * dy <= r * r
        })
        .unwrap()
    }

    #[test]
    fn no_randomization_reduces_to_closing() {
        let m = BinaryMask::from_ascii(
            "..........
             ..####....
             .######...
             .#######..
             ..#####...
             ...###....
             ..........",
        )
        .unwrap();
        let cfg = EnhanceConfig { delta: 0.0, perturb_sigma: 0.0, ..EnhanceConfig::default() };
        let closed = morphological_close(&m, &cfg.close_b1, &cfg.erode_b2).unwrap();
        let out = enhance(&m, &cfg, closed.area() as f64).unwrap();
        assert_eq!(out, closed);
    }

    #[test]
    fn deterministic() {
        let m = disk(8.0, 32);
        let cfg = EnhanceConfig { seed: 5, ..EnhanceConfig::default() };
        assert_eq!(enhance(&m, &cfg, 200.0).unwrap(), enhance(&m, &cfg, 200.0).unwrap());
    }

    #[test]
    fn thin_line_is_degenerate() {
        let m = BinaryMask::from_fn(12, 5, |x, y| y == 2 && (2..9).contains(&x)).unwrap();
        let cfg = EnhanceConfig { perturb_sigma: 0.0, ..EnhanceConfig::default() };
        assert_eq!(enhance(&m, &cfg, 7.0), Err(Error::DegenerateEnhancement));
    }
}
