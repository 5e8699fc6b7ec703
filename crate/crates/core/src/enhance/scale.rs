use crate::error::{invalid, Error, Result};
use crate::BinaryMask;

/// `α·√(a_avg/A) + (1-α)·∛(a_avg/A)`.
pub fn scale_factor(a_avg: f64, area: f64, alpha: f64) -> f64 {
    let ratio = a_avg / area;
    alpha * libm::sqrt(ratio) + (1.0 - alpha) * libm::cbrt(ratio)
}

/// Rescales the mask about its centroid so its area moves toward `a_avg`.
///
/// Coordinates are scaled by [`scale_factor`] with nearest-neighbor inverse
/// mapping, which keeps the output strictly binary; the result is clipped to
/// the canvas.
pub fn scale_adapt(mask: &BinaryMask, a_avg: f64, alpha: f64) -> Result<BinaryMask> {
    let area = mask.area();
    if area == 0 {
        return Err(Error::EmptyMask);
    }
    if !(a_avg > 0.0) || !a_avg.is_finite() {
        return Err(invalid("average anomaly area must be positive"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha must lie in [0, 1]"));
    }
    let s = scale_factor(a_avg, area as f64, alpha);
    if (s - 1.0).abs() <= 1e-12 {
        return Ok(mask.clone());
    }
    let (w, h) = mask.dims();
    let (cx, cy) = mask.centroid().expect("non-empty");
    let (x0, y0, x1, y1) = mask.bounding_box().expect("non-empty");
    // Output support: scaled bounding box, padded by a pixel.
    let lo_x = libm::floor(cx + (x0 as f64 - 0.5 - cx) * s) - 1.0;
    let hi_x = libm::ceil(cx + (x1 as f64 + 0.5 - cx) * s) + 1.0;
    let lo_y = libm::floor(cy + (y0 as f64 - 0.5 - cy) * s) - 1.0;
    let hi_y = libm::ceil(cy + (y1 as f64 + 0.5 - cy) * s) + 1.0;

    let mut out = BinaryMask::new(w, h)?;
    let xs = (lo_x.max(0.0) as usize)..=(hi_x.min(w as f64 - 1.0).max(0.0) as usize);
    let ys = (lo_y.max(0.0) as usize)..=(hi_y.min(h as f64 - 1.0).max(0.0) as usize);
    for y in ys {
        let sy = libm::round((y as f64 - cy) / s + cy);
        for x in xs.clone() {
            let sx = libm::round((x as f64 - cx) / s + cx);
            if mask.get_or_false(sx as isize, sy as isize) {
                out.set(x, y, true);
            }
        }
    }
    Ok(out)
}
