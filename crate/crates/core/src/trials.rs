//! Bookkeeping for geometric trial counts.

use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Number of (proposal, flip) rounds each accepted draw needed. Entries are ≥ 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct TrialCounter(Vec<u64>);

impl TrialCounter {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with_capacity(n: usize) -> Self {
        Self(Vec::with_capacity(n))
    }

    /// Panics if any count is zero; a draw always takes at least one trial.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        assert!(counts.iter().all(|&c| c >= 1), "trial counts must be >= 1");
        Self(counts)
    }

    pub fn push(&mut self, count: u64) {
        assert!(count >= 1, "trial counts must be >= 1");
        self.0.push(count);
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Sample mean and unbiased sample variance of the counts. A single count
    /// has variance 0.
    pub fn mean_variance(&self) -> Result<(f64, f64)> {
        geometric_sample_mean_variance(&self.0)
    }
}

pub fn geometric_sample_mean_variance(counts: &[u64]) -> Result<(f64, f64)> {
    if counts.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    if counts.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
    Ok((mean, ss / (n - 1.0)))
}

/// Number of Bernoulli(`rho`) trials up to and including the first success.
pub fn sample_geometric(rho: f64, stream: &mut RandomStream) -> Result<u64> {
    let geom = Geometric::new(rho)
        .map_err(|e| Error::InvalidParameter(format!("geometric success probability {rho}: {e}")))?;
    Ok(geom.sample(stream) + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_counts() {
        assert_eq!(geometric_sample_mean_variance(&[1, 1, 1, 1]).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn two_counts() {
        assert_eq!(geometric_sample_mean_variance(&[1, 3]).unwrap(), (2.0, 2.0));
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(geometric_sample_mean_variance(&[]), Err(Error::EmptyInput));
        assert_eq!(TrialCounter::new().mean_variance(), Err(Error::EmptyInput));
    }

    #[test]
    fn simulated_geometric_moments() {
        let mut s = RandomStream::new(5, 0);
        let counts: Vec<u64> = (0..100_000).map(|_| sample_geometric(0.5, &mut s).unwrap()).collect();
        let (mean, var) = geometric_sample_mean_variance(&counts).unwrap();
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    #[should_panic]
    fn zero_count_rejected() {
        TrialCounter::from_counts(vec![1, 0]);
    }
}
