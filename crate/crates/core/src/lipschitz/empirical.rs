use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::VectorMetric;
use crate::rng;

/// Largest observed slope over the sampled pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub pairs: usize,
    /// Pairs skipped because the two points coincided.
    pub skipped: usize,
    /// Always true: sampling can only under-estimate the true constant.
    pub is_lower_estimate: bool,
}

/// Source of point pairs; pair `k` must depend only on `k` and `rng`.
pub trait DomainSampler {
    fn dim(&self) -> usize;

    fn sample_pair(&self, k: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>);
}

/// Even-numbered pairs are two perturbations of a random anchor (one of them
/// often the anchor itself); odd-numbered pairs are uniform in a box.
#[derive(Clone, Debug)]
pub struct AnchorSampler {
    pub anchors: Vec<Vec<f64>>,
    /// Perturbation radius per coordinate around anchors.
    pub radius: f64,
    pub lo: f64,
    pub hi: f64,
}

impl AnchorSampler {
    /// Box spanning the anchors, perturbation radius `0.1·separation`.
    pub fn around(anchors: Vec<Vec<f64>>, separation: f64) -> Self {
        let lo = anchors.iter().flatten().copied().fold(0.0, f64::min);
        let hi = anchors.iter().flatten().copied().fold(0.0, f64::max);
        AnchorSampler { anchors, radius: 0.1 * separation, lo, hi }
    }

    fn perturb(&self, a: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        if rng.random::<bool>() {
            return a.to_vec();
        }
        a.iter().map(|v| v + self.radius * (2.0 * rng.random::<f64>() - 1.0)).collect()
    }
}

impl DomainSampler for AnchorSampler {
    fn dim(&self) -> usize {
        self.anchors.first().map_or(0, Vec::len)
    }

    fn sample_pair(&self, k: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        if k % 2 == 0 && !self.anchors.is_empty() {
            let a = &self.anchors[rng.random_range(0..self.anchors.len())];
            (self.perturb(a, rng), self.perturb(a, rng))
        } else {
            let d = self.dim();
            let mut draw = || (0..d).map(|_| rng.random_range(self.lo..=self.hi)).collect::<Vec<_>>();
            let u = draw();
            (u, draw())
        }
    }
}

/// `max |f(u) − f(v)| / d(u, v)` over `pairs` sampled pairs.
pub fn empirical_lipschitz(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    sampler: &dyn DomainSampler,
    metric: VectorMetric,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if pairs == 0 {
        return Err(invalid("at least one pair is required"));
    }
    let mut value = 0.0f64;
    let mut skipped = 0;
    for k in 0..pairs {
        let mut r = rng::stream(seed, k as u64);
        let (u, v) = sampler.sample_pair(k, &mut r);
        let d = metric.distance(&u, &v);
        if d == 0.0 {
            skipped += 1;
            continue;
        }
        value = value.max((f(&u)? - f(&v)?).abs() / d);
    }
    Ok(LipschitzEstimate { value, pairs, skipped, is_lower_estimate: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_slope() {
        let w = [2.0, 0.0];
        let f = |x: &[f64]| Ok(w[0] * x[0] + w[1] * x[1]);
        let s = AnchorSampler { anchors: vec![vec![0.0, 0.0]], radius: 1.0, lo: -1.0, hi: 1.0 };
        let est = empirical_lipschitz(&f, &s, VectorMetric::Euclidean, 2000, 1).unwrap();
        assert!(est.value <= 2.0 + 1e-12);
        assert!(est.value > 1.9);
        assert!(est.is_lower_estimate);
    }

    #[test]
    fn constant_and_degenerate() {
        let f = |_: &[f64]| Ok(4.0);
        let s = AnchorSampler { anchors: vec![vec![1.0]], radius: 0.0, lo: 1.0, hi: 1.0 };
        let est = empirical_lipschitz(&f, &s, VectorMetric::Infinity, 50, 0).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.skipped, 50);
        assert!(empirical_lipschitz(&f, &s, VectorMetric::Infinity, 0, 0).is_err());
    }
}
