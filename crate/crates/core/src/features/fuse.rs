use alloc::string::String;

use crate::error::{invalid, Result};
use crate::FeatureMatrix;

pub const DEFAULT_DEEP_WEIGHT: f64 = 1.0;
pub const DEFAULT_LAB_WEIGHT: f64 = 0.5;
pub const DEFAULT_LBP_WEIGHT: f64 = 0.5;

/// One named descriptor family (deep, LAB, LBP, ...) for every anomaly record.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBlock {
    pub name: String,
    pub vectors: FeatureMatrix,
    pub weight: f64,
}

impl FeatureBlock {
    pub fn new(name: impl Into<String>, vectors: FeatureMatrix, weight: f64) -> Self {
        Self { name: name.into(), vectors, weight }
    }
}

/// Z-scores every column of every block (constant columns become 0), scales
/// each block by `weight / Σ weights` and concatenates the blocks column-wise.
pub fn fuse_features(blocks: &[FeatureBlock]) -> Result<FeatureMatrix> {
    let first = blocks.first().ok_or_else(|| invalid("no feature blocks"))?;
    let n = first.vectors.rows();
    if let Some(b) = blocks.iter().find(|b| b.vectors.rows() != n) {
        return Err(invalid(alloc::format!("block '{}' has {} rows, expected {}", b.name, b.vectors.rows(), n)));
    }
    if blocks.iter().any(|b| !(b.weight >= 0.0) || !b.weight.is_finite()) {
        return Err(invalid("block weights must be finite and nonnegative"));
    }
    let total: f64 = blocks.iter().map(|b| b.weight).sum();
    if total <= 0.0 {
        return Err(invalid("all block weights are zero"));
    }

    let width: usize = blocks.iter().map(|b| b.vectors.cols()).sum();
    let mut out = FeatureMatrix::zeros(n, width);
    let mut offset = 0;
    for block in blocks {
        let scale = block.weight / total;
        let m = &block.vectors;
        for j in 0..m.cols() {
            let mean = (0..n).map(|i| m.get(i, j)).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (m.get(i, j) - mean) * (m.get(i, j) - mean)).sum::<f64>() / n as f64;
            let std = libm::sqrt(var);
            if std <= 1e-12 * (1.0 + mean.abs()) {
                continue;
            }
            for i in 0..n {
                out.set(i, offset + j, scale * (m.get(i, j) - mean) / std);
            }
        }
        offset += m.cols();
    }
    Ok(out)
}
