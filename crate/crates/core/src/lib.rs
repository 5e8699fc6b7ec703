//! Allocation-only building blocks for region-guided anomaly synthesis.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every numerical and
//! geometric routine of the pipeline: fused anomaly descriptors, multi-round
//! k-means with Calinski-Harabasz / Davies-Bouldin selection, geometric mask
//! enhancement, region-guided placement, and the noise-trained discriminator
//! used to rank generated image/mask pairs. File formats, dataset trees and the
//! command line live in the `gaa` crate.

#![no_std]
// `!(x >= 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clustering;
pub mod enhance;
mod error;
pub mod features;
pub mod filtering;
pub mod manifest;
mod mask;
mod matrix;
pub mod placement;
pub mod rng;

pub use error::{Error, Result};
pub use mask::{BinaryMask, RgbImage};
pub use matrix::FeatureMatrix;
