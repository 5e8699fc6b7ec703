use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementShape {
    /// `(2r+1) x (2r+1)` square.
    Square,
    /// Offsets with `dx² + dy² <= r²`.
    Disk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    pub shape: ElementShape,
    pub radius: usize,
}

impl StructuringElement {
    pub fn square(radius: usize) -> Self {
        Self { shape: ElementShape::Square, radius }
    }

    pub fn disk(radius: usize) -> Self {
        Self { shape: ElementShape::Disk, radius }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(invalid("structuring element radius must be at least 1"));
        }
        Ok(())
    }

    /// Symmetric offset set of the element.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if self.shape == ElementShape::Square || dx * dx + dy * dy <= r * r {
                    out.push((dx, dy));
                }
            }
        }
        out
    }
}

/// Binary dilation; the canvas exterior is background.
pub fn dilate(mask: &BinaryMask, element: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let offsets = element.offsets();
    let mut out = BinaryMask::new(w, h).expect("non-empty canvas");
    for (x, y) in mask.pixels() {
        for &(dx, dy) in &offsets {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                out.set(nx as usize, ny as usize, true);
            }
        }
    }
    out
}

/// Binary erosion; the canvas exterior counts as foreground.
///
/// Paired with [`dilate`] (exterior as background) this is the adjoint
/// erosion on the canvas, the same border convention OpenCV uses by default.
pub fn erode(mask: &BinaryMask, element: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let offsets = element.offsets();
    BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y)
            && offsets.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h || mask.get(nx as usize, ny as usize)
            })
    })
    .expect("non-empty canvas")
}

/// Dilation by `b1` followed by erosion by `b2`. With `b1 == b2` the result
/// is extensive and idempotent.
pub fn morphological_close(mask: &BinaryMask, b1: &StructuringElement, b2: &StructuringElement) -> Result<BinaryMask> {
    b1.validate()?;
    b2.validate()?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(erode(&dilate(mask, b1), b2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq() -> StructuringElement {
        StructuringElement::square(1)
    }

    #[test]
    fn element_offsets() {
        assert_eq!(sq().offsets().len(), 9);
        assert_eq!(StructuringElement::disk(1).offsets().len(), 5);
        assert_eq!(StructuringElement::disk(2).offsets().len(), 13);
    }

    #[test]
    fn full_mask_stays_full() {
        let m = BinaryMask::full(7, 5).unwrap();
        assert_eq!(morphological_close(&m, &sq(), &StructuringElement::disk(2)).unwrap(), m);
    }

    #[test]
    fn fills_single_hole() {
        let m = BinaryMask::from_ascii(
            ".........
             .........
             ..#####..
             ..#####..
             ..##.##..
             ..#####..
             ..#####..
             .........
             .........",
        )
        .unwrap();
        let c = morphological_close(&m, &sq(), &sq()).unwrap();
        let mut expect = m.clone();
        expect.set(4, 4, true);
        assert_eq!(c, expect);
    }

    #[test]
    fn bridges_one_pixel_gap() {
        let m = BinaryMask::from_ascii(
            "........
             .##.##..
             .##.##..
             ........",
        )
        .unwrap();
        let c = morphological_close(&m, &sq(), &sq()).unwrap();
        assert!(c.get(3, 1) && c.get(3, 2));
    }

    #[test]
    fn empty_mask_rejected() {
        let m = BinaryMask::new(3, 3).unwrap();
        assert_eq!(morphological_close(&m, &sq(), &sq()), Err(Error::EmptyMask));
    }
}
