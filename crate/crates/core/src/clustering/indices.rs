use alloc::vec::Vec;

use super::kmeans::{centroids_of, Assignment};
use crate::error::{invalid, Error, Result};
use crate::matrix::sq_dist;
use crate::FeatureMatrix;

fn validated(x: &FeatureMatrix, a: &Assignment) -> Result<(usize, FeatureMatrix, Vec<usize>)> {
    let k = a.k();
    if k < 2 {
        return Err(invalid("cluster validity indices need k >= 2"));
    }
    if a.labels.len() != x.rows() {
        return Err(invalid("label count does not match the number of rows"));
    }
    if a.labels.iter().any(|&l| l >= k) {
        return Err(invalid("label out of range"));
    }
    let sizes = a.sizes();
    if sizes.contains(&0) {
        return Err(invalid("assignment has an empty cluster"));
    }
    Ok((k, centroids_of(x, &a.labels, k), sizes))
}

/// `Tr(B)(N - k) / (Tr(W)(k - 1))`, with scatter taken about the label means
/// and the global mean. Returns `f64::INFINITY` when every cluster has zero
/// within-scatter.
pub fn calinski_harabasz(x: &FeatureMatrix, a: &Assignment) -> Result<f64> {
    let (k, centroids, sizes) = validated(x, a)?;
    let n = x.rows();
    let mean: Vec<f64> = (0..x.cols()).map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64).collect();
    let trace_b: f64 = (0..k).map(|c| sizes[c] as f64 * sq_dist(centroids.row(c), &mean)).sum();
    let trace_w: f64 = (0..n).map(|i| sq_dist(x.row(i), centroids.row(a.labels[i]))).sum();
    if trace_w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(trace_b * (n - k) as f64 / (trace_w * (k - 1) as f64))
}

/// `(1/k) Σ_i max_{j≠i} (σ_i + σ_j) / d_ij` where `σ_i` is the mean member
/// distance to centroid `i` and `d_ij` the centroid separation.
pub fn davies_bouldin(x: &FeatureMatrix, a: &Assignment) -> Result<f64> {
    let (k, centroids, sizes) = validated(x, a)?;
    let mut spread = alloc::vec![0.0; k];
    for (i, &l) in a.labels.iter().enumerate() {
        spread[l] += libm::sqrt(sq_dist(x.row(i), centroids.row(l)));
    }
    for (s, &n) in spread.iter_mut().zip(&sizes) {
        *s /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            let d = libm::sqrt(sq_dist(centroids.row(i), centroids.row(j)));
            if d == 0.0 {
                return Err(Error::CoincidentCentroids { a: i.min(j), b: i.max(j) });
            }
            worst = worst.max((spread[i] + spread[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn setup(points: &[(f64, f64)], labels: &[usize]) -> (FeatureMatrix, Assignment) {
        let x = FeatureMatrix::from_rows(&points.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap();
        let k = labels.iter().max().unwrap() + 1;
        let centroids = centroids_of(&x, labels, k);
        let a = Assignment {
            labels: labels.to_vec(),
            inertia: super::super::kmeans::inertia_of(&x, labels, &centroids),
            centroids,
        };
        (x, a)
    }

    const FOUR: [(f64, f64); 4] = [(0.0, 0.0), (0.0, 2.0), (10.0, 0.0), (10.0, 2.0)];

    #[test]
    fn worked_example() {
        let (x, a) = setup(&FOUR, &[0, 0, 1, 1]);
        assert_eq!(calinski_harabasz(&x, &a).unwrap(), 50.0);
        assert_eq!(davies_bouldin(&x, &a).unwrap(), 0.2);
    }

    #[test]
    fn duplicated_dataset() {
        let pts: Vec<_> = FOUR.iter().chain(FOUR.iter()).copied().collect();
        let (x, a) = setup(&pts, &[0, 0, 1, 1, 0, 0, 1, 1]);
        assert_eq!(calinski_harabasz(&x, &a).unwrap(), 150.0);
    }

    #[test]
    fn collapsed_clusters_give_infinite_ch() {
        let (x, a) = setup(&[(0.0, 0.0), (0.0, 0.0), (5.0, 5.0)], &[0, 0, 1]);
        assert_eq!(calinski_harabasz(&x, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn singletons_have_zero_db() {
        let (x, a) = setup(&[(0.0, 0.0), (3.0, 4.0)], &[0, 1]);
        assert_eq!(davies_bouldin(&x, &a).unwrap(), 0.0);
    }

    #[test]
    fn close_clusters_db_one() {
        let (x, a) = setup(&[(0.0, 0.0), (0.0, 2.0), (2.0, 0.0), (2.0, 2.0)], &[0, 0, 1, 1]);
        assert_eq!(davies_bouldin(&x, &a).unwrap(), 1.0);
    }

    #[test]
    fn coincident_centroids_rejected() {
        let (x, a) = setup(&[(0.0, 0.0), (2.0, 0.0), (1.0, 1.0), (1.0, -1.0)], &[0, 0, 1, 1]);
        assert_eq!(davies_bouldin(&x, &a), Err(Error::CoincidentCentroids { a: 0, b: 1 }));
    }

    #[test]
    fn k_below_two_rejected() {
        let (x, a) = setup(&FOUR, &[0, 0, 0, 0]);
        assert!(calinski_harabasz(&x, &a).is_err());
        assert!(davies_bouldin(&x, &a).is_err());
    }
}
