use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{calinski_harabasz, davies_bouldin, kmeans, Assignment, ClusterConfig, Objective};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::FeatureMatrix;

/// Index values for one candidate `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    /// `+inf` when the within-cluster scatter vanishes.
    pub calinski_harabasz: f64,
    /// `+inf` when two centroids coincide.
    pub davies_bouldin: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub k: usize,
    pub assignment: Assignment,
    pub sweep: Vec<SweepPoint>,
}

/// Min-max scaling over the finite entries; infinite entries map to 1 and a
/// flat series maps to 0.
fn min_max(values: &[f64]) -> Vec<f64> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                1.0
            } else if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                0.0
            }
        })
        .collect()
}

fn weighted(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v
    }
}

/// Sweeps `k` over `[k_min, min(k_max, N)]` and keeps the minimizer of the
/// configured objective; ties go to the smaller `k`.
pub fn select_k(x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<Selection> {
    cfg.validate()?;
    let n = x.rows();
    let upper = cfg.resolved_k_max(n).min(n);
    if cfg.k_min > upper {
        return Err(Error::EmptySweep { k_min: cfg.k_min, upper });
    }

    let mut candidates = Vec::new();
    for k in cfg.k_min..=upper {
        let a = kmeans(x, k, derive_seed(cfg.seed, &[k as u64]), cfg.restarts)?;
        let ch = calinski_harabasz(x, &a)?;
        let db = match davies_bouldin(x, &a) {
            Ok(v) => v,
            Err(Error::CoincidentCentroids { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        candidates.push((k, a, ch, db));
    }

    let objectives: Vec<f64> = match cfg.objective {
        Objective::Normalized => {
            let ch = min_max(&candidates.iter().map(|c| c.2).collect::<Vec<_>>());
            let db = min_max(&candidates.iter().map(|c| c.3).collect::<Vec<_>>());
            ch.iter().zip(&db).map(|(c, d)| -weighted(cfg.w1, *c) + weighted(cfg.w2, *d)).collect()
        }
        Objective::Literal => candidates.iter().map(|c| weighted(cfg.w1, c.2) + weighted(cfg.w2, c.3)).collect(),
    };

    let mut best = 0;
    for (i, &j) in objectives.iter().enumerate() {
        if j < objectives[best] {
            best = i;
        }
    }
    let sweep = candidates
        .iter()
        .zip(&objectives)
        .map(|(c, &objective)| SweepPoint { k: c.0, calinski_harabasz: c.2, davies_bouldin: c.3, objective })
        .collect();
    let (k, assignment, ..) = candidates.swap_remove(best);
    Ok(Selection { k, assignment, sweep })
}
