//! Region-guided placement of enhanced masks onto normal images.
//!
//! Structural masks are embedded inside a semantic region (anywhere, along
//! its skeleton, or hugging its edge), logical masks are the region itself,
//! and combined masks are unions of non-overlapping members.

mod skeleton;
mod synth;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::manifest::AnomalyKind;
use crate::rng::{stream, StreamRng};
use crate::BinaryMask;

pub use skeleton::skeletonize;
pub use synth::{synthesize_aligned, AlignedEntry, NormalSample, PlanRow, PoolMask, Synthesis, SynthesisConfig};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 200;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    #[default]
    AnywhereInRegion,
    CenterOnRegionSkeleton,
    TangentToRegionEdge,
}

impl AnchorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AnywhereInRegion => "anywhere_in_region",
            Self::CenterOnRegionSkeleton => "center_on_region_skeleton",
            Self::TangentToRegionEdge => "tangent_to_region_edge",
        }
    }

    /// Accepts the full names and the short forms `anywhere`, `skeleton`,
    /// `tangent`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "anywhere_in_region" | "anywhere" => Some(Self::AnywhereInRegion),
            "center_on_region_skeleton" | "skeleton" => Some(Self::CenterOnRegionSkeleton),
            "tangent_to_region_edge" | "tangent" => Some(Self::TangentToRegionEdge),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotation {
    #[default]
    None,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementStrategy {
    pub kind: AnchorKind,
    pub rotation: Rotation,
    /// Scale factor drawn uniformly from `[lo, hi]`.
    pub size_jitter: (f64, f64),
    /// Largest admissible fraction of the placed mask outside the region.
    pub offset_tolerance: f64,
}

impl Default for PlacementStrategy {
    fn default() -> Self {
        Self {
            kind: AnchorKind::AnywhereInRegion,
            rotation: Rotation::None,
            size_jitter: (1.0, 1.0),
            offset_tolerance: 0.1,
        }
    }
}

impl PlacementStrategy {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.size_jitter;
        if !(0.5 <= lo && lo <= hi && hi <= 2.0) {
            return Err(invalid("size_jitter must satisfy 0.5 <= lo <= hi <= 2"));
        }
        if !(0.0..=0.5).contains(&self.offset_tolerance) {
            return Err(invalid("offset_tolerance must lie in [0, 0.5]"));
        }
        Ok(())
    }
}

/// Placement applied to the source mask: its reference pixel moved by
/// `(dx, dy)` after rotation and scaling about its centroid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub dx: isize,
    pub dy: isize,
    pub rotation_deg: f64,
    pub scale: f64,
}

impl Transform {
    pub const IDENTITY: Self = Self { dx: 0, dy: 0, rotation_deg: 0.0, scale: 1.0 };
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacedMask {
    pub mask: BinaryMask,
    pub kind: AnomalyKind,
    /// Region name; members of a combined mask are joined with `+`.
    pub source_region: String,
    pub transform: Transform,
    /// Accepted member masks of a combined mask, empty otherwise.
    pub members: Vec<BinaryMask>,
}

impl PlacedMask {
    pub fn in_region(mut self, name: impl Into<String>) -> Self {
        self.source_region = name.into();
        self
    }

    /// Fraction of the mask lying outside `region`.
    pub fn outside_fraction(&self, region: &BinaryMask) -> Result<f64> {
        let area = self.mask.area();
        if area == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(self.mask.difference_area(region)? as f64 / area as f64)
    }
}

/// Pixels of the rotated and scaled mask as offsets from its reference pixel,
/// plus the reference pixel of the untransformed mask.
struct Patch {
    offsets: Vec<(isize, isize)>,
    source_ref: (isize, isize),
}

/// The pixel of `pts` nearest their mean; ties go to the first in order.
fn reference_pixel(pts: &[(isize, isize)]) -> (isize, isize) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let mut best = pts[0];
    let mut best_d = f64::INFINITY;
    for &p in pts {
        let (dx, dy) = (p.0 as f64 - mx, p.1 as f64 - my);
        let d = dx * dx + dy * dy;
        if d < best_d {
            best = p;
            best_d = d;
        }
    }
    best
}

fn transform_patch(mg: &BinaryMask, scale: f64, rotation_deg: f64) -> Patch {
    let src: Vec<(isize, isize)> = mg.pixels().map(|(x, y)| (x as isize, y as isize)).collect();
    let source_ref = reference_pixel(&src);
    let pixels = if scale == 1.0 && rotation_deg == 0.0 {
        src
    } else {
        let (mx, my) = mg.centroid().expect("mask is non-empty");
        let (cx, cy) = (mx + 0.5, my + 0.5);
        let t = rotation_deg.to_radians();
        let (sin, cos) = (libm::sin(t), libm::cos(t));
        let (x0, y0, x1, y1) = mg.bounding_box().expect("mask is non-empty");
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (px, py) in [(x0, y0), (x1 + 1, y0), (x0, y1 + 1), (x1 + 1, y1 + 1)] {
            let (ux, uy) = (px as f64 - cx, py as f64 - cy);
            let qx = cx + scale * (cos * ux - sin * uy);
            let qy = cy + scale * (sin * ux + cos * uy);
            lo_x = lo_x.min(qx);
            lo_y = lo_y.min(qy);
            hi_x = hi_x.max(qx);
            hi_y = hi_y.max(qy);
        }
        let mut out = Vec::new();
        for v in libm::floor(lo_y) as isize - 1..=libm::ceil(hi_y) as isize {
            for u in libm::floor(lo_x) as isize - 1..=libm::ceil(hi_x) as isize {
                // Inverse map of the output pixel center.
                let (ux, uy) = ((u as f64 + 0.5 - cx) / scale, (v as f64 + 0.5 - cy) / scale);
                let sx = cx + cos * ux + sin * uy;
                let sy = cy - sin * ux + cos * uy;
                if mg.get_or_false(libm::floor(sx) as isize, libm::floor(sy) as isize) {
                    out.push((u, v));
                }
            }
        }
        if out.is_empty() {
            out.push((libm::floor(cx) as isize, libm::floor(cy) as isize));
        }
        out
    };
    let r = reference_pixel(&pixels);
    Patch { offsets: pixels.iter().map(|p| (p.0 - r.0, p.1 - r.1)).collect(), source_ref }
}

fn outside_count(offsets: &[(isize, isize)], anchor: (isize, isize), region: &BinaryMask) -> usize {
    offsets.iter().filter(|o| !region.get_or_false(anchor.0 + o.0, anchor.1 + o.1)).count()
}

/// Region pixels with a 4-neighbor outside the region or the canvas.
fn boundary_pixels(region: &BinaryMask) -> Vec<(isize, isize)> {
    region
        .pixels()
        .map(|(x, y)| (x as isize, y as isize))
        .filter(|&(x, y)| {
            [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|(dx, dy)| !region.get_or_false(x + dx, y + dy))
        })
        .collect()
}

/// Unit vector from `b` toward the mean of nearby region pixels.
fn inward_normal(region: &BinaryMask, b: (isize, isize)) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for dy in -3..=3isize {
        for dx in -3..=3isize {
            if region.get_or_false(b.0 + dx, b.1 + dy) {
                sx += dx as f64;
                sy += dy as f64;
                n += 1;
            }
        }
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let len = libm::hypot(mx, my);
    (len > 1e-12).then(|| (mx / len, my / len))
}

/// Embeds `mg` into `region`. Only the shape of `mg` matters, so it may come
/// from a canvas of another size.
///
/// The scale and rotation are drawn first, then anchors are sampled until
/// the fraction of the placed mask outside the region (off-canvas pixels
/// included) is at most `offset_tolerance`. A tangent anchor is a boundary
/// pixel from which the mask slides inward along the local normal until it
/// fits. At most [`MAX_PLACEMENT_ATTEMPTS`] anchors are tried.
pub fn place_structural(
    mg: &BinaryMask,
    region: &BinaryMask,
    strategy: &PlacementStrategy,
    seed: u64,
) -> Result<PlacedMask> {
    strategy.validate()?;
    if mg.is_empty() || region.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut rng = stream(seed, &[]);
    let (lo, hi) = strategy.size_jitter;
    let scale = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    let rotation_deg = match strategy.rotation {
        Rotation::None => 0.0,
        Rotation::Uniform => rng.random::<f64>() * 360.0,
    };
    let patch = transform_patch(mg, scale, rotation_deg);
    let area = patch.offsets.len();
    let budget = strategy.offset_tolerance * area as f64 + 1e-9;

    let anchors: Vec<(isize, isize)> = match strategy.kind {
        AnchorKind::AnywhereInRegion => region.pixels().map(|(x, y)| (x as isize, y as isize)).collect(),
        AnchorKind::CenterOnRegionSkeleton => {
            let s = skeletonize(region);
            s.pixels().map(|(x, y)| (x as isize, y as isize)).collect()
        }
        AnchorKind::TangentToRegionEdge => boundary_pixels(region),
    };
    let reach = patch.offsets.iter().map(|o| o.0.unsigned_abs().max(o.1.unsigned_abs())).max().unwrap_or(0) as f64
        * core::f64::consts::SQRT_2
        + 1.0;

    let mut best_outside = usize::MAX;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let a = anchors[rng.random_range(0..anchors.len())];
        let candidates: Vec<(isize, isize)> = match strategy.kind {
            AnchorKind::TangentToRegionEdge => match inward_normal(region, a) {
                Some((nx, ny)) => (0..=libm::ceil(reach) as usize)
                    .map(|t| {
                        let t = t as f64;
                        (a.0 + libm::round(t * nx) as isize, a.1 + libm::round(t * ny) as isize)
                    })
                    .collect(),
                None => vec![a],
            },
            _ => vec![a],
        };
        for c in candidates {
            let out = outside_count(&patch.offsets, c, region);
            best_outside = best_outside.min(out);
            if out as f64 <= budget {
                return Ok(finish(region, &patch, c, scale, rotation_deg));
            }
        }
    }
    Err(Error::InfeasiblePlacement {
        attempts: MAX_PLACEMENT_ATTEMPTS,
        mask_area: area,
        region_area: region.area(),
        best_outside: best_outside as f64 / area as f64,
    })
}

fn finish(region: &BinaryMask, patch: &Patch, anchor: (isize, isize), scale: f64, rotation_deg: f64) -> PlacedMask {
    let (w, h) = region.dims();
    let mut mask = BinaryMask::new(w, h).expect("canvas dims are valid");
    for o in &patch.offsets {
        let (x, y) = (anchor.0 + o.0, anchor.1 + o.1);
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            mask.set(x as usize, y as usize, true);
        }
    }
    PlacedMask {
        mask,
        kind: AnomalyKind::Structural,
        source_region: String::new(),
        transform: Transform {
            dx: anchor.0 - patch.source_ref.0,
            dy: anchor.1 - patch.source_ref.1,
            rotation_deg,
            scale,
        },
        members: Vec::new(),
    }
}

/// The region itself, as a logical anomaly mask.
pub fn make_logical(region: &BinaryMask) -> Result<PlacedMask> {
    if region.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(PlacedMask {
        mask: region.clone(),
        kind: AnomalyKind::Logical,
        source_region: String::new(),
        transform: Transform::IDENTITY,
        members: Vec::new(),
    })
}

/// Greedy non-overlapping union: masks are visited in a seeded shuffle and
/// accepted unless their IoU with an accepted mask exceeds
/// `overlap_threshold`.
pub fn combine(masks: &[PlacedMask], overlap_threshold: f64, seed: u64) -> Result<PlacedMask> {
    if masks.len() < 2 {
        return Err(invalid("combine needs at least two masks"));
    }
    if !(0.0..=1.0).contains(&overlap_threshold) {
        return Err(invalid("overlap_threshold must lie in [0, 1]"));
    }
    let dims = masks[0].mask.dims();
    if let Some(m) = masks.iter().find(|m| m.mask.dims() != dims) {
        return Err(Error::DimensionMismatch { expected: dims, found: m.mask.dims() });
    }
    let mut order: Vec<usize> = (0..masks.len()).collect();
    let mut rng: StreamRng = stream(seed, &[]);
    order.shuffle(&mut rng);

    let mut accepted: Vec<usize> = Vec::new();
    for i in order {
        let mut ok = true;
        for &j in &accepted {
            if masks[i].mask.iou(&masks[j].mask)? > overlap_threshold {
                ok = false;
                break;
            }
        }
        if ok {
            accepted.push(i);
        }
    }
    if accepted.len() < 2 {
        return Err(Error::IncompatibleMasks { accepted: accepted.len() });
    }
    let mut union = masks[accepted[0]].mask.clone();
    for &i in &accepted[1..] {
        union = union.union(&masks[i].mask)?;
    }
    let names: Vec<&str> = accepted.iter().map(|&i| masks[i].source_region.as_str()).collect();
    Ok(PlacedMask {
        mask: union,
        kind: AnomalyKind::Combined,
        source_region: names.join("+"),
        transform: Transform::IDENTITY,
        members: accepted.iter().map(|&i| masks[i].mask.clone()).collect(),
    })
}
