use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::polygon::Polygon;
use crate::error::{Error, Result};
use crate::BinaryMask;

// Moore neighborhood, clockwise on screen (y down), starting west.
const DIRS: [(isize, isize); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

fn dir_index(from: (isize, isize), to: (isize, isize)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|&x| x == d).expect("backtrack is a Moore neighbor")
}

/// 8-connected component labels; components are numbered in raster order of
/// their first pixel.
fn label_components(mask: &BinaryMask) -> (Vec<usize>, usize) {
    let (w, h) = mask.dims();
    let mut labels = vec![usize::MAX; w * h];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for (x, y) in mask.pixels() {
        if labels[y * w + x] != usize::MAX {
            continue;
        }
        labels[y * w + x] = count;
        queue.push_back((x, y));
        while let Some((cx, cy)) = queue.pop_front() {
            for &(dx, dy) in &DIRS {
                let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                if mask.get_or_false(nx, ny) {
                    let idx = ny as usize * w + nx as usize;
                    if labels[idx] == usize::MAX {
                        labels[idx] = count;
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
        }
        count += 1;
    }
    (labels, count)
}

/// Moore-neighbor trace from `start` (the raster-first pixel of its
/// component). The walk stops when it is back at `start` about to repeat its
/// first move, which also handles start pixels that are only ever re-entered
/// diagonally. Returns boundary pixels in screen-clockwise order.
fn moore_trace(mask: &BinaryMask, start: (usize, usize)) -> Vec<(usize, usize)> {
    let s = (start.0 as isize, start.1 as isize);
    let mut boundary = vec![start];
    let (mut p, mut back) = (s, (s.0 - 1, s.1));
    let mut first_move = None;
    let cap = 8 * mask.width() * mask.height() + 8;
    for _ in 0..cap {
        let first = dir_index(p, back);
        let mut found = None;
        let mut prev = back;
        for step in 1..=8 {
            let (dx, dy) = DIRS[(first + step) % 8];
            let c = (p.0 + dx, p.1 + dy);
            if mask.get_or_false(c.0, c.1) {
                found = Some(c);
                break;
            }
            prev = c;
        }
        let Some(c) = found else {
            break; // isolated pixel
        };
        match first_move {
            None => first_move = Some(c),
            Some(f) if p == s && c == f => {
                boundary.pop(); // `start` was pushed again on arrival
                break;
            }
            _ => {}
        }
        p = c;
        back = prev;
        boundary.push((p.0 as usize, p.1 as usize));
    }
    boundary
}

/// Outer boundary of every 8-connected component as a polygon through the
/// boundary pixel centers, counter-clockwise on screen. Components are ordered
/// by their top-left-most pixel; holes are ignored.
///
/// A trace with fewer than three distinct pixels (a single pixel, or two
/// adjacent ones) becomes the rectangle enclosing those pixels' squares.
pub fn extract_contours(mask: &BinaryMask) -> Result<Vec<Polygon>> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let w = mask.width();
    let (labels, count) = label_components(mask);
    let mut starts = vec![None; count];
    for (x, y) in mask.pixels() {
        let l = labels[y * w + x];
        if starts[l].is_none() {
            starts[l] = Some((x, y));
        }
    }
    Ok(starts
        .into_iter()
        .map(|s| {
            let trace = moore_trace(mask, s.expect("every component has a pixel"));
            trace_to_polygon(&trace)
        })
        .collect())
}

fn trace_to_polygon(trace: &[(usize, usize)]) -> Polygon {
    let mut distinct = trace.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        let x0 = distinct.iter().map(|p| p.0).min().unwrap_or(0) as f64;
        let x1 = distinct.iter().map(|p| p.0).max().unwrap_or(0) as f64 + 1.0;
        let y0 = distinct.iter().map(|p| p.1).min().unwrap_or(0) as f64;
        let y1 = distinct.iter().map(|p| p.1).max().unwrap_or(0) as f64 + 1.0;
        return Polygon::new(vec![(x0, y0), (x0, y1), (x1, y1), (x1, y0)]);
    }
    // Reverse the clockwise trace, keeping the start vertex first.
    let mut ordered = Vec::with_capacity(trace.len());
    ordered.push(trace[0]);
    ordered.extend(trace[1..].iter().rev());
    Polygon::new(ordered.into_iter().map(|(x, y)| (x as f64 + 0.5, y as f64 + 0.5)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_becomes_unit_square() {
        let mut m = BinaryMask::new(4, 4).unwrap();
        m.set(2, 1, true);
        let c = extract_contours(&m).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].vertices, vec![(2.0, 1.0), (2.0, 2.0), (3.0, 2.0), (3.0, 1.0)]);
        assert!(c[0].signed_area() < 0.0);
    }

    #[test]
    fn filled_square_traces_eight_boundary_pixels() {
        let m = BinaryMask::from_ascii(
            ".....
             .###.
             .###.
             .###.
             .....",
        )
        .unwrap();
        let c = extract_contours(&m).unwrap();
        assert_eq!(c.len(), 1);
        let v = &c[0].vertices;
        assert_eq!(v.len(), 8);
        assert!(!v.contains(&(2.5, 2.5)));
        assert!(c[0].signed_area() < 0.0, "counter-clockwise on screen");
        assert_eq!(c[0].area(), 4.0);
    }

    #[test]
    fn two_blobs_two_polygons_in_raster_order() {
        let m = BinaryMask::from_ascii(
            "......##
             .##...##
             .##.....",
        )
        .unwrap();
        let c = extract_contours(&m).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].vertices[0], (6.5, 0.5));
        assert_eq!(c[1].vertices[0], (1.5, 1.5));
    }

    #[test]
    fn diagonal_pixels_are_one_component() {
        let m = BinaryMask::from_ascii(
            "#..
             .#.
             ..#",
        )
        .unwrap();
        assert_eq!(extract_contours(&m).unwrap().len(), 1);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(extract_contours(&BinaryMask::new(2, 2).unwrap()), Err(Error::EmptyMask));
    }
}
