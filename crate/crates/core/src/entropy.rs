//! Gaussian entropy estimates for vertex subsets, memoized across threads.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::set::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    Plugin,
    /// Plug-in estimate with the exact expected log-determinant bias of the
    /// Wishart-distributed sample covariance removed.
    Debiased,
}

/// Sample covariance with the `N - 1` denominator. `data` is samples × variables.
pub fn sample_covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let denom = (n.max(2) - 1) as f64;
    (centered.transpose() * &centered) / denom
}

pub fn submatrix(m: &DMatrix<f64>, s: VertexSet) -> DMatrix<f64> {
    let idx = s.to_vec();
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// `log det` through a Cholesky factor; `None` when not positive definite.
pub fn log_det_pd(m: DMatrix<f64>) -> Option<f64> {
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        acc += 2.0 * d.ln();
    }
    Some(acc)
}

/// Entropy in nats of a `p`-variate Gaussian whose covariance has log-determinant `log_det`.
pub fn gaussian_entropy(p: usize, log_det: f64) -> f64 {
    0.5 * (p as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + log_det)
}

/// `E[log det S] - log det Σ` for a sample covariance with the `N - 1` denominator.
pub fn log_det_bias(p: usize, n_samples: usize) -> f64 {
    let df = (n_samples - 1) as f64;
    (1..=p).map(|j| digamma((n_samples - j) as f64 / 2.0) + (2.0 / df).ln()).sum()
}

pub struct EntropyCache {
    cov: DMatrix<f64>,
    n_samples: usize,
    estimator: Estimator,
    memo: RwLock<HashMap<VertexSet, f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl EntropyCache {
    pub fn from_data(data: &DMatrix<f64>, estimator: Estimator) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InsufficientSamples { size: data.ncols(), samples: data.nrows() });
        }
        Self::from_covariance(sample_covariance(data), data.nrows(), estimator)
    }

    pub fn from_covariance(cov: DMatrix<f64>, n_samples: usize, estimator: Estimator) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::Domain("covariance matrix must be square".into()));
        }
        if cov.nrows() > crate::graph::MAX_VERTICES {
            return Err(Error::TooManyVertices(cov.nrows()));
        }
        Ok(EntropyCache {
            cov,
            n_samples,
            estimator,
            memo: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.cov.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn entropy(&self, s: VertexSet) -> Result<f64> {
        if s.is_empty() {
            return Ok(0.0);
        }
        if let Some(&h) = self.memo.read().expect("entropy memo poisoned").get(&s) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(h);
        }
        let h = self.compute(s)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        let mut memo = self.memo.write().expect("entropy memo poisoned");
        Ok(*memo.entry(s).or_insert(h))
    }

    fn compute(&self, s: VertexSet) -> Result<f64> {
        if s.max().is_some_and(|v| v >= self.n_vars()) {
            return Err(Error::Domain(format!("{s:?} is outside the {} variables", self.n_vars())));
        }
        let p = s.len();
        if p >= self.n_samples {
            return Err(Error::InsufficientSamples { size: p, samples: self.n_samples });
        }
        let log_det = log_det_pd(submatrix(&self.cov, s)).ok_or(Error::DegenerateData { subset: s })?;
        let plug = gaussian_entropy(p, log_det);
        Ok(match self.estimator {
            Estimator::Plugin => plug,
            Estimator::Debiased => plug - 0.5 * log_det_bias(p, self.n_samples),
        })
    }

    /// Number of lookups answered from the memo.
    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Number of entropies actually computed.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_entropy() {
        let cache = EntropyCache::from_covariance(DMatrix::identity(3, 3), 100, Estimator::Plugin).unwrap();
        let h = cache.entropy(VertexSet::from([0, 1, 2])).unwrap();
        let expect = 1.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h - expect).abs() < 1e-12);
        assert_eq!(cache.entropy(VertexSet::EMPTY).unwrap(), 0.0);
    }

    #[test]
    fn memo_counts_hits() {
        let cache = EntropyCache::from_covariance(DMatrix::identity(2, 2), 100, Estimator::Plugin).unwrap();
        let s = VertexSet::from([0, 1]);
        cache.entropy(s).unwrap();
        cache.entropy(s).unwrap();
        assert_eq!((cache.hits(), cache.misses()), (1, 1));
    }

    #[test]
    fn singular_and_small_samples_fail() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let cache = EntropyCache::from_covariance(cov, 100, Estimator::Plugin).unwrap();
        assert!(matches!(cache.entropy(VertexSet::from([0, 1])), Err(Error::DegenerateData { .. })));
        let cache = EntropyCache::from_covariance(DMatrix::identity(3, 3), 3, Estimator::Debiased).unwrap();
        assert!(matches!(cache.entropy(VertexSet::from([0, 1, 2])), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn bias_shrinks_with_sample_size() {
        let small = log_det_bias(3, 50).abs();
        let large = log_det_bias(3, 5000).abs();
        assert!(log_det_bias(3, 50) < 0.0);
        assert!(large < small / 50.0);
    }

    #[test]
    fn sample_covariance_uses_n_minus_one() {
        let data = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!((sample_covariance(&data)[(0, 0)] - 1.0).abs() < 1e-12);
    }
}
