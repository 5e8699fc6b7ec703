use alloc::vec::Vec;

use super::polygon::Polygon;
use crate::BinaryMask;

const EPS: f64 = 1e-9;

/// Sets every pixel whose center lies inside the polygon (even-odd rule) or
/// on its boundary, clipped to the canvas. Zero-area polygons give an empty
/// mask.
///
/// Counting boundary centers as inside makes a contour traced through pixel
/// centers rasterize back onto the pixels it came from.
pub fn rasterize(p: &Polygon, width: usize, height: usize) -> crate::Result<BinaryMask> {
    let mut out = BinaryMask::new(width, height)?;
    if p.len() < 3 || p.area() <= EPS {
        return Ok(out);
    }
    let edges: Vec<_> = p.edges().collect();
    let ymin = p.vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let ymax = p.vertices.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = libm::ceil(ymin - 0.5 - EPS).max(0.0) as usize;
    let row_hi = libm::floor(ymax - 0.5 + EPS);
    if row_hi < 0.0 {
        return Ok(out);
    }
    let row_hi = (row_hi as usize).min(height - 1);

    let mark = |out: &mut BinaryMask, lo: f64, hi: f64, row: usize| {
        let first = libm::ceil(lo - 0.5 - EPS).max(0.0);
        let last = libm::floor(hi - 0.5 + EPS);
        if last < first || last < 0.0 {
            return;
        }
        let last = (last as usize).min(width - 1);
        for col in first as usize..=last {
            out.set(col, row, true);
        }
    };

    let mut xs = Vec::new();
    for row in row_lo..=row_hi {
        let yc = row as f64 + 0.5;
        xs.clear();
        for &(a, b) in &edges {
            if (a.1 <= yc && yc < b.1) || (b.1 <= yc && yc < a.1) {
                xs.push(a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            mark(&mut out, pair[0], pair[1], row);
        }
        // Boundary pass: centers lying exactly on an edge.
        for &(a, b) in &edges {
            if (a.1 - yc).abs() <= EPS && (b.1 - yc).abs() <= EPS {
                mark(&mut out, a.0.min(b.0), a.0.max(b.0), row);
            } else if yc >= a.1.min(b.1) - EPS && yc <= a.1.max(b.1) + EPS && a.1 != b.1 {
                let x = a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1);
                let c = libm::round(x - 0.5);
                if (x - 0.5 - c).abs() <= EPS {
                    mark(&mut out, x, x, row);
                }
            }
        }
    }
    Ok(out)
}
