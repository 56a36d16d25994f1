use super::RANGE_TOLERANCE;
use crate::error::{Error, Result};
use crate::race::Coin;
use crate::rng::RandomStream;

/// Source of `[0, 1]`-valued unbiased estimates of some probability `b`.
pub trait UnitEstimator: Send + Sync {
    fn estimate(&self, stream: &mut RandomStream) -> Result<f64>;
}

impl<F> UnitEstimator for F
where
    F: Fn(&mut RandomStream) -> Result<f64> + Send + Sync,
{
    fn estimate(&self, stream: &mut RandomStream) -> Result<f64> {
        self(stream)
    }
}

/// Coin with success probability `E[b̂]`: `1{V < b̂}` for a fresh estimate
/// `b̂` and an independent uniform `V`.
#[derive(Debug, Clone)]
pub struct UnitEstimateCoin<E> {
    estimator: E,
}

pub fn coin_from_unit_estimate<E: UnitEstimator>(estimator: E) -> UnitEstimateCoin<E> {
    UnitEstimateCoin { estimator }
}

impl<E: UnitEstimator> Coin for UnitEstimateCoin<E> {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        let b = self.estimator.estimate(stream)?;
        if !(-RANGE_TOLERANCE..=1.0 + RANGE_TOLERANCE).contains(&b) {
            return Err(Error::EstimatorRangeViolation { value: b });
        }
        Ok(stream.uniform() < b)
    }
}
