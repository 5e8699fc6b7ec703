use alloc::vec;
use alloc::vec::Vec;

use super::polygon::{point_segment_distance, Point, Polygon};
use crate::error::{invalid, Error, Result};

/// Marks, in `keep`, the vertices of `pts[lo..=hi]` that Ramer-Douglas-Peucker
/// retains at tolerance `delta`. Endpoints are assumed kept.
fn rdp_mark(pts: &[Point], lo: usize, hi: usize, delta: f64, keep: &mut [bool]) {
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (mut far, mut far_d) = (a, -1.0);
        for i in a + 1..b {
            let d = point_segment_distance(pts[i], pts[a], pts[b]);
            if d > far_d {
                far = i;
                far_d = d;
            }
        }
        if far_d > delta {
            keep[far] = true;
            stack.push((a, far));
            stack.push((far, b));
        }
    }
}

/// Ramer-Douglas-Peucker on an open chain; both endpoints are always kept.
pub fn simplify_polyline(points: &[Point], delta: f64) -> Result<Vec<Point>> {
    if !(delta >= 0.0) {
        return Err(invalid("delta must be nonnegative"));
    }
    if points.len() <= 2 {
        return Ok(points.to_vec());
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    rdp_mark(points, 0, points.len() - 1, delta, &mut keep);
    Ok(points.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect())
}

/// Ramer-Douglas-Peucker on a closed ring, split at the two mutually farthest
/// vertices. Every dropped vertex ends up within `delta` of the retained
/// ring, and at least three vertices are always kept.
pub fn approximate_polygon(contour: &Polygon, delta: f64) -> Result<Polygon> {
    if !(delta >= 0.0) {
        return Err(invalid("delta must be nonnegative"));
    }
    let v = &contour.vertices;
    let n = v.len();
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }

    let (mut ia, mut ib, mut best) = (0, 1, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (v[i].0 - v[j].0, v[i].1 - v[j].1);
            let d = dx * dx + dy * dy;
            if d > best {
                (ia, ib, best) = (i, j, d);
            }
        }
    }

    // Rotate so the ring starts at `ia`; `ib` lands at `split`, and the
    // closing vertex is appended at the end so both halves are open chains.
    let mut ring: Vec<Point> = (0..n).map(|k| v[(ia + k) % n]).collect();
    ring.push(ring[0]);
    let split = (ib + n - ia) % n;
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[split] = true;
    keep[n] = true;
    rdp_mark(&ring, 0, split, delta, &mut keep);
    rdp_mark(&ring, split, n, delta, &mut keep);

    if keep[..n].iter().filter(|k| **k).count() < 3 {
        // Floor rule: add the vertex farthest from the chord, then refine the
        // half that now has an extra anchor so the tolerance still holds.
        let (mut far, mut far_d) = (None, -1.0);
        for (i, p) in ring.iter().enumerate().take(n) {
            if keep[i] {
                continue;
            }
            let d = point_segment_distance(*p, ring[0], ring[split]);
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        if let Some(f) = far {
            keep[f] = true;
            let (lo, hi) = if f < split { (0, split) } else { (split, n) };
            rdp_mark(&ring, lo, f, delta, &mut keep);
            rdp_mark(&ring, f, hi, delta, &mut keep);
        }
    }

    let mut out: Vec<Point> = ring[..n].iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
    // Restore the original starting vertex when it survived.
    if let Some(pos) = out.iter().position(|p| *p == v[0]) {
        out.rotate_left(pos);
    }
    Ok(Polygon::new(out))
}

/// Distance from `p` to the closed ring `poly`.
pub fn distance_to_ring(p: Point, poly: &Polygon) -> f64 {
    poly.edges().map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
}
