//! Fine-grained refinement of coarse anomaly labels.
//!
//! [`select_k`] picks the number of clusters by trading the
//! Calinski-Harabasz index (larger is better) against the Davies-Bouldin index
//! (smaller is better); [`multi_round_cluster`] keeps splitting clusters that
//! are dense relative to the population they came from.

mod indices;
mod kmeans;
mod select;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use indices::{calinski_harabasz, davies_bouldin};
pub use kmeans::{kmeans, Assignment};
pub use select::{select_k, Selection, SweepPoint};
pub use tree::{dense_threshold, multi_round_cluster, ClusterRound, ClusterTree, ParentRef};

/// Logarithm used by [`dense_threshold`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

/// How the two indices are combined when choosing `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `-w1·CH~ + w2·DB~` on min-max scaled indices.
    #[default]
    Normalized,
    /// `w1·CH + w2·DB` on raw values, minimized as written.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub k_min: usize,
    /// `None` means `min(10, ⌊N/2⌋)` (never below `k_min`).
    pub k_max: Option<usize>,
    pub w1: f64,
    pub w2: f64,
    /// Maximum depth of the cluster tree; 1 disables re-clustering.
    pub max_rounds: usize,
    pub restarts: usize,
    pub seed: u64,
    pub log_base: LogBase,
    pub objective: Objective,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: None,
            w1: 1.0,
            w2: 1.0,
            max_rounds: 2,
            restarts: 10,
            seed: 0,
            log_base: LogBase::Natural,
            objective: Objective::Normalized,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 2 {
            return Err(invalid("k_min must be at least 2"));
        }
        if self.k_max.is_some_and(|k| k < self.k_min) {
            return Err(invalid("k_max must be at least k_min"));
        }
        if self.restarts == 0 || self.max_rounds == 0 {
            return Err(invalid("restarts and max_rounds must be at least 1"));
        }
        if !(self.w1.is_finite() && self.w2.is_finite()) {
            return Err(invalid("index weights must be finite"));
        }
        Ok(())
    }

    pub fn resolved_k_max(&self, n: usize) -> usize {
        self.k_max.unwrap_or_else(|| (n / 2).min(10).max(self.k_min))
    }
}
