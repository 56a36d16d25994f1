use serde::Serialize;

use super::engine::StepRecord;
use super::model::Strategy;
use crate::error::{Error, Result};
use crate::race::mvue_rho;

/// Product-form estimate of the marginal likelihood `p(y_{1:T})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodEstimate {
    pub per_step_factors: Vec<f64>,
    pub log_value: f64,
}

impl LikelihoodEstimate {
    pub fn from_factors(per_step_factors: Vec<f64>) -> Self {
        let log_value = per_step_factors.iter().map(|f| f.ln()).sum();
        Self {
            per_step_factors,
            log_value,
        }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Per-step factors for the given strategy:
///
/// * EWPF / RWPF: `(1/N) Σ_k w_{t,k}` with exact or estimated weights.
/// * BRPF: `(1/N) Σ_k c_{t,k} · (N − 1)/(Σ_k C_{k,N} − 1)`, the trial counts
///   standing in for the unknown `Σ c b / Σ c`.
pub fn estimate_likelihood(strategy: Strategy, records: &[StepRecord], particles: usize) -> Result<LikelihoodEstimate> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = particles as f64;
    let factors = records
        .iter()
        .map(|r| match strategy {
            Strategy::ExactWeight | Strategy::RandomWeight => Ok(r.weight_sum / n),
            Strategy::BernoulliRace => {
                let trials = r
                    .trials
                    .as_ref()
                    .ok_or(Error::InsufficientDraws { required: 2, got: 0 })?;
                if trials.len() < 2 {
                    return Err(Error::InsufficientDraws {
                        required: 2,
                        got: trials.len(),
                    });
                }
                Ok(r.weight_sum / n * mvue_rho(trials.len(), trials.total()))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LikelihoodEstimate::from_factors(factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trials::TrialCounter;

    fn record(weight_sum: f64, trials: Option<Vec<u64>>) -> StepRecord {
        let trials = trials.map(TrialCounter::from_counts);
        StepRecord {
            step: 0,
            weight_sum,
            total_flips: trials.as_ref().map_or(0, |t| t.total()),
            trials,
            rho: None,
            propose_seconds: 0.0,
            weight_seconds: 0.0,
            resample_seconds: 0.0,
        }
    }

    #[test]
    fn equal_exact_weights() {
        let w_star = 0.37;
        let est = estimate_likelihood(Strategy::ExactWeight, &[record(4.0 * w_star, None)], 4).unwrap();
        assert!((est.value() - w_star).abs() < 1e-15);
    }

    #[test]
    fn race_with_first_flip_acceptance_returns_constant() {
        let c_star = 0.2;
        let est = estimate_likelihood(Strategy::BernoulliRace, &[record(5.0 * c_star, Some(vec![1; 5]))], 5).unwrap();
        assert!((est.value() - c_star).abs() < 1e-15);
    }

    #[test]
    fn race_needs_two_draws() {
        assert_eq!(
            estimate_likelihood(Strategy::BernoulliRace, &[record(1.0, Some(vec![3]))], 1),
            Err(Error::InsufficientDraws { required: 2, got: 1 })
        );
    }

    #[test]
    fn log_value_is_sum_of_log_factors() {
        let recs = [record(1.5, None), record(0.25, None), record(3.0, None)];
        let est = estimate_likelihood(Strategy::RandomWeight, &recs, 3).unwrap();
        let direct: f64 = est.per_step_factors.iter().map(|f| f.ln()).sum();
        assert!((est.log_value - direct).abs() < 1e-12);
        assert!((est.per_step_factors[1] - 0.25 / 3.0).abs() < 1e-16);
    }
}
