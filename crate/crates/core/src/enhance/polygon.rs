use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Point in canvas coordinates: pixel `(i, j)` covers `[i, i+1) x [j, j+1)`,
/// so its center is `(i + 0.5, j + 0.5)`.
pub type Point = (f64, f64);

/// Implicitly closed vertex ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace sum in y-down canvas coordinates. A ring that runs
    /// counter-clockwise on screen has negative signed area.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// No two edges meet except consecutive edges at their shared vertex.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        if self.area() == 0.0 {
            return false;
        }
        (0..n).all(|i| edge_is_clear(&self.vertices, i))
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Edge `i` (from vertex `i` to `i+1`) crosses no non-adjacent edge, and does
/// not fold back onto either neighbor.
pub(crate) fn edge_is_clear(v: &[Point], i: usize) -> bool {
    let n = v.len();
    let (a, b) = (v[i], v[(i + 1) % n]);
    if a == b {
        return false;
    }
    for j in 0..n {
        if j == i {
            continue;
        }
        let (c, d) = (v[j], v[(j + 1) % n]);
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        if j == prev || j == next {
            // Adjacent: they share one vertex; reject only collinear overlap.
            let shared = if j == prev { a } else { b };
            let other = if j == prev { c } else { d };
            let far = if j == prev { b } else { a };
            if orient(shared, far, other) == 0.0 {
                let dot = (far.0 - shared.0) * (other.0 - shared.0) + (far.1 - shared.1) * (other.1 - shared.1);
                if dot > 0.0 {
                    return false;
                }
            }
            continue;
        }
        if segments_intersect(a, b, c, d) {
            return false;
        }
    }
    true
}

/// Euclidean distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    libm::hypot(p.0 - cx, p.1 - cy)
}
