//! Files on disk: PNG rasters, GAAT tensors, dataset trees, manifests and
//! placement plans.

pub mod dataset;
pub mod gaat;
pub mod manifest;
pub mod plan;
pub mod png;

use std::path::Path;

use crate::error::{IoContext, Result};

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    std::fs::write(path, bytes).at(path)
}
