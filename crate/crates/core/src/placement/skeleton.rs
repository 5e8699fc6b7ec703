use alloc::vec::Vec;

use crate::BinaryMask;

/// Zhang-Suen thinning. Pixels outside the canvas count as background.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut m = mask.clone();
    let mut doomed: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for (x, y) in m.pixels() {
                let (xi, yi) = (x as isize, y as isize);
                // P2..P9 clockwise from north.
                let p = [
                    m.get_or_false(xi, yi - 1),
                    m.get_or_false(xi + 1, yi - 1),
                    m.get_or_false(xi + 1, yi),
                    m.get_or_false(xi + 1, yi + 1),
                    m.get_or_false(xi, yi + 1),
                    m.get_or_false(xi - 1, yi + 1),
                    m.get_or_false(xi - 1, yi),
                    m.get_or_false(xi - 1, yi - 1),
                ];
                let b = p.iter().filter(|v| **v).count();
                let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                if !(2..=6).contains(&b) || a != 1 {
                    continue;
                }
                let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                let ok = if pass == 0 {
                    !(p2 && p4 && p6) && !(p4 && p6 && p8)
                } else {
                    !(p2 && p4 && p8) && !(p2 && p6 && p8)
                };
                if ok {
                    doomed.push((x, y));
                }
            }
            for &(x, y) in &doomed {
                m.set(x, y, false);
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_thins_to_its_midline() {
        let m = BinaryMask::from_fn(12, 7, |x, y| (1..11).contains(&x) && (2..5).contains(&y)).unwrap();
        let s = skeletonize(&m);
        assert!(!s.is_empty());
        assert!(s.is_subset_of(&m).unwrap());
        assert!(s.pixels().all(|(_, y)| y == 3), "{s:?}");
    }

    #[test]
    fn single_pixel_survives() {
        let mut m = BinaryMask::new(3, 3).unwrap();
        m.set(1, 1, true);
        assert_eq!(skeletonize(&m), m);
    }

    #[test]
    fn idempotent() {
        let m = BinaryMask::from_fn(15, 15, |x, y| {
            let (dx, dy) = (x as f64 - 7.0, y as f64 - 7.0);
            dx * dx + dy * dy <= 36.0
        })
        .unwrap();
        let s = skeletonize(&m);
        assert_eq!(skeletonize(&s), s);
    }
}
