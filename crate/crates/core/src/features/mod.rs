//! Low-level anomaly descriptors and their weighted fusion.

mod fuse;
mod lab;
mod lbp;

pub use fuse::{fuse_features, FeatureBlock, DEFAULT_DEEP_WEIGHT, DEFAULT_LAB_WEIGHT, DEFAULT_LBP_WEIGHT};
pub use lab::{lab_stats, srgb_to_lab};
pub use lbp::{lbp_histogram, uniform_bin_count, LbpParams};
