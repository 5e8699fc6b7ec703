use rand_distr::{Distribution, Normal};

use super::polygon::{edge_is_clear, Polygon};
use crate::error::{invalid, Result};
use crate::rng::stream;

const MAX_ATTEMPTS: usize = 10;

/// Jitters every vertex by independent `N(0, sigma²)` offsets per axis.
///
/// Vertices are visited in order; a proposal that makes either incident edge
/// cross another edge is redrawn, and after ten failed draws the vertex stays
/// where it was. `sigma = 0` returns the input unchanged.
pub fn perturb_polygon(p: &Polygon, sigma: f64, seed: u64) -> Result<Polygon> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid("perturbation sigma must be finite and nonnegative"));
    }
    if sigma == 0.0 || p.len() < 3 {
        return Ok(p.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| invalid("bad sigma"))?;
    let mut rng = stream(seed, &[]);
    let mut v = p.vertices.clone();
    let n = v.len();
    for i in 0..n {
        let original = v[i];
        let mut accepted = false;
        for _ in 0..MAX_ATTEMPTS {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            v[i] = (original.0 + dx, original.1 + dy);
            if edge_is_clear(&v, (i + n - 1) % n) && edge_is_clear(&v, i) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            v[i] = original;
        }
    }
    Ok(Polygon::new(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square() -> Polygon {
        Polygon::new(vec![(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)])
    }

    #[test]
    fn zero_sigma_is_identity() {
        assert_eq!(perturb_polygon(&square(), 0.0, 4).unwrap(), square());
    }

    #[test]
    fn deterministic_for_seed() {
        let a = perturb_polygon(&square(), 1.0, 42).unwrap();
        assert_eq!(a, perturb_polygon(&square(), 1.0, 42).unwrap());
        assert_ne!(a, perturb_polygon(&square(), 1.0, 43).unwrap());
    }

    #[test]
    fn stays_simple_under_large_noise() {
        for seed in 0..200 {
            let q = perturb_polygon(&square(), 4.0, seed).unwrap();
            assert!(q.is_simple(), "seed {seed}: {q:?}");
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(perturb_polygon(&square(), -1.0, 0).is_err());
    }
}
