use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{select_k, Assignment, ClusterConfig, LogBase};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::FeatureMatrix;

/// `N / (log(0.1 N) + 0.4)`; `None` where the denominator is not positive, in
/// which case no cluster counts as dense.
pub fn dense_threshold(n: usize, base: LogBase) -> Option<f64> {
    if n == 0 {
        return None;
    }
    let arg = 0.1 * n as f64;
    let log = match base {
        LogBase::Natural => libm::log(arg),
        LogBase::Ten => libm::log10(arg),
    };
    let denom = log + 0.4;
    (denom > 0.0).then(|| n as f64 / denom)
}

/// The local cluster of an earlier round that a round re-clusters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentRef {
    pub round: usize,
    pub cluster: usize,
}

/// One clustering pass over a subset of the samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRound {
    /// 1 for the pass over every sample.
    pub depth: usize,
    pub parent: Option<ParentRef>,
    /// Global sample indices, ascending; `assignment.labels[i]` refers to
    /// `members[i]`.
    pub members: Vec<usize>,
    pub assignment: Assignment,
    /// Threshold the clusters of this round were judged against, computed on
    /// `members.len()`.
    pub dense_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub rounds: Vec<ClusterRound>,
    /// Final cluster id per sample, dense in `0..leaf_count`, numbered by the
    /// smallest member index.
    pub leaf_labels: Vec<usize>,
    pub leaf_count: usize,
}

impl ClusterTree {
    /// Members of each leaf, indexed by leaf id.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.leaf_count];
        for (i, &l) in self.leaf_labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Tree depth below the first round.
    pub fn additional_rounds(&self) -> usize {
        self.rounds.iter().map(|r| r.depth).max().unwrap_or(1) - 1
    }
}

/// Recursive refinement: every cluster larger than the dense threshold of the
/// round that produced it (and holding at least `2 k_min` samples) is
/// re-clustered with [`select_k`], up to `max_rounds` levels deep.
pub fn multi_round_cluster(x: &FeatureMatrix, cfg: &ClusterConfig) -> Result<ClusterTree> {
    cfg.validate()?;
    let n = x.rows();
    let all: Vec<usize> = (0..n).collect();

    if n < 2 * cfg.k_min {
        let round = ClusterRound {
            depth: 1,
            parent: None,
            members: all,
            assignment: Assignment::trivial(x),
            dense_threshold: dense_threshold(n, cfg.log_base),
        };
        return Ok(ClusterTree { rounds: vec![round], leaf_labels: vec![0; n], leaf_count: usize::from(n > 0) });
    }

    let mut rounds: Vec<ClusterRound> = Vec::new();
    let mut leaves: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([(all, 1usize, None::<ParentRef>)]);

    while let Some((members, depth, parent)) = queue.pop_front() {
        let sub = x.select_rows(&members);
        let seed = match parent {
            None => cfg.seed,
            Some(p) => derive_seed(cfg.seed, &[p.round as u64, p.cluster as u64]),
        };
        let selection = select_k(&sub, &ClusterConfig { seed, ..cfg.clone() })?;
        let threshold = dense_threshold(members.len(), cfg.log_base);
        let round_index = rounds.len();

        let mut groups = vec![Vec::new(); selection.k];
        for (local, &label) in selection.assignment.labels.iter().enumerate() {
            groups[label].push(members[local]);
        }
        for (cluster, group) in groups.into_iter().enumerate() {
            let dense = threshold.is_some_and(|t| group.len() as f64 > t);
            if dense && depth < cfg.max_rounds && group.len() >= 2 * cfg.k_min {
                queue.push_back((group, depth + 1, Some(ParentRef { round: round_index, cluster })));
            } else {
                leaves.push(group);
            }
        }
        rounds.push(ClusterRound {
            depth,
            parent,
            members,
            assignment: selection.assignment,
            dense_threshold: threshold,
        });
    }

    leaves.sort_by_key(|g| g[0]);
    let mut leaf_labels = vec![0; n];
    for (id, group) in leaves.iter().enumerate() {
        for &i in group {
            leaf_labels[i] = id;
        }
    }
    Ok(ClusterTree { rounds, leaf_labels, leaf_count: leaves.len() })
}
