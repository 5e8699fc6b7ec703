use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::sq_dist;
use crate::rng::{derive_seed, stream, StreamRng};
use crate::FeatureMatrix;

const MAX_ITERATIONS: usize = 300;

/// Hard partition of the rows of a feature matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<usize>,
    pub centroids: FeatureMatrix,
    pub inertia: f64,
}

impl Assignment {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Single cluster holding every row.
    pub fn trivial(x: &FeatureMatrix) -> Self {
        let labels = vec![0; x.rows()];
        let centroids = centroids_of(x, &labels, 1);
        let inertia = inertia_of(x, &labels, &centroids);
        Self { labels, centroids, inertia }
    }
}

pub(crate) fn centroids_of(x: &FeatureMatrix, labels: &[usize], k: usize) -> FeatureMatrix {
    let d = x.cols();
    let mut sums = FeatureMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (j, v) in x.row(i).iter().enumerate() {
            sums.set(l, j, sums.get(l, j) + v);
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 {
            for j in 0..d {
                sums.set(c, j, sums.get(c, j) / n as f64);
            }
        }
    }
    sums
}

pub(crate) fn inertia_of(x: &FeatureMatrix, labels: &[usize], centroids: &FeatureMatrix) -> f64 {
    labels.iter().enumerate().map(|(i, &l)| sq_dist(x.row(i), centroids.row(l))).sum()
}

/// Nearest centroid per row; ties go to the lower centroid index.
fn assign(x: &FeatureMatrix, centroids: &FeatureMatrix) -> Vec<usize> {
    (0..x.rows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for c in 0..centroids.rows() {
                let d = sq_dist(x.row(i), centroids.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster. Returns whether anything moved.
fn repair_empty(x: &FeatureMatrix, labels: &mut [usize], centroids: &mut FeatureMatrix) -> bool {
    let k = centroids.rows();
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let mut moved = false;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = sq_dist(x.row(i), centroids.row(l));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        sizes[labels[i]] -= 1;
        sizes[empty] = 1;
        labels[i] = empty;
        for j in 0..x.cols() {
            centroids.set(empty, j, x.get(i, j));
        }
        moved = true;
    }
    moved
}

fn plus_plus_init(x: &FeatureMatrix, k: usize, rng: &mut StreamRng) -> FeatureMatrix {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    x.select_rows(&chosen)
}

/// Lloyd iterations from `centroids`; records the inertia after every
/// recentering step in `trace` when given.
fn lloyd(x: &FeatureMatrix, mut centroids: FeatureMatrix, mut trace: Option<&mut Vec<f64>>) -> Assignment {
    let k = centroids.rows();
    let mut labels = assign(x, &centroids);
    for _ in 0..MAX_ITERATIONS {
        repair_empty(x, &mut labels, &mut centroids);
        centroids = centroids_of(x, &labels, k);
        if let Some(t) = trace.as_deref_mut() {
            t.push(inertia_of(x, &labels, &centroids));
        }
        let next = assign(x, &centroids);
        if next == labels {
            break;
        }
        labels = next;
    }
    if repair_empty(x, &mut labels, &mut centroids) {
        centroids = centroids_of(x, &labels, k);
    }
    let inertia = inertia_of(x, &labels, &centroids);
    Assignment { labels, centroids, inertia }
}

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
///
/// Restart `r` draws from the stream `(seed, r)`, so the result depends only
/// on `(x, k, seed, restarts)`.
pub fn kmeans(x: &FeatureMatrix, k: usize, seed: u64, restarts: usize) -> Result<Assignment> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > x.rows() {
        return Err(Error::TooManyClusters { k, n: x.rows() });
    }
    if restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    let mut best: Option<Assignment> = None;
    for r in 0..restarts {
        let mut rng = stream(derive_seed(seed, &[k as u64]), &[r as u64]);
        let a = lloyd(x, plus_plus_init(x, k, &mut rng), None);
        if best.as_ref().is_none_or(|b| a.inertia < b.inertia) {
            best = Some(a);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
