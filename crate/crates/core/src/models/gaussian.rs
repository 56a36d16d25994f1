//! Linear Gaussian state-space model run with the locally optimal proposal.
//!
//! `X_1 ~ N(0, init_var)`, `X_t = a X_{t−1} + V_t`, `Y_t = X_t + W_t` with
//! `V_t ~ N(0, state_var)` and `W_t ~ N(0, obs_var)`. The proposal is
//! `q*(x | x_prev, y) ∝ g(y | x) f(x | x_prev)`, sampled by rejection from the
//! state equation, and the weight is the predictive `p(y | x_prev)`, factored
//! as `c · b` with `c = 1/√(2π obs_var)` and
//! `b = E[exp(−(y − ξ)²/(2 obs_var))]`, `ξ ~ f(· | x_prev)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Capabilities, StateSpaceModel};
use crate::race::Coin;
use crate::rng::RandomStream;

pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSsmParams {
    pub a: f64,
    pub state_var: f64,
    pub obs_var: f64,
    pub init_var: f64,
}

impl Default for GaussianSsmParams {
    fn default() -> Self {
        Self {
            a: 0.8,
            state_var: 5.0,
            obs_var: 5.0,
            init_var: 5.0,
        }
    }
}

impl GaussianSsmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("state_var", self.state_var),
            ("obs_var", self.obs_var),
            ("init_var", self.init_var),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!("a = {}", self.a)));
        }
        Ok(())
    }

    /// Mean and variance of `f(· | x_prev)`, or of the initial law when `prev` is `None`.
    pub fn prior(&self, prev: Option<f64>) -> (f64, f64) {
        match prev {
            Some(x) => (self.a * x, self.state_var),
            None => (0.0, self.init_var),
        }
    }

    /// Known constant of the weight factorization, `1/√(2π obs_var)`.
    pub fn weight_constant(&self) -> f64 {
        1.0 / (2.0 * PI * self.obs_var).sqrt()
    }

    /// Closed-form mean and variance of the locally optimal proposal.
    pub fn optimal_proposal_moments(&self, prev: Option<f64>, y: f64) -> (f64, f64) {
        let (m, v) = self.prior(prev);
        let precision = 1.0 / v + 1.0 / self.obs_var;
        ((m / v + y / self.obs_var) / precision, 1.0 / precision)
    }

    /// `p(y | x_prev) = N(y; a x_prev, state_var + obs_var)`.
    pub fn predictive_density(&self, prev: Option<f64>, y: f64) -> f64 {
        let (m, v) = self.prior(prev);
        normal_pdf(y, m, v + self.obs_var)
    }

    #[inline]
    fn acceptance(&self, y: f64, x: f64) -> f64 {
        (-(y - x).powi(2) / (2.0 * self.obs_var)).exp()
    }

    /// Exact draw from the locally optimal proposal: propose from the state
    /// equation and accept with probability `exp(−(y − ξ)²/(2 obs_var))`.
    pub fn sample_optimal_proposal(
        &self,
        prev: Option<f64>,
        y: f64,
        stream: &mut RandomStream,
        budget: u64,
    ) -> Result<f64> {
        let (m, v) = self.prior(prev);
        let sd = v.sqrt();
        for _ in 0..budget {
            let xi = stream.normal(m, sd);
            if stream.uniform() < self.acceptance(y, xi) {
                return Ok(xi);
            }
        }
        Err(Error::StoppingBudgetExceeded {
            budget,
            draw: 0,
            step: None,
        })
    }

    /// `(c, coin)` with `c · P(coin = 1) = p(y | x_prev)`.
    pub fn weight_coin(&self, prev: Option<f64>, y: f64) -> (f64, GaussianWeightCoin) {
        let (mean, var) = self.prior(prev);
        (
            self.weight_constant(),
            GaussianWeightCoin {
                mean,
                sd: var.sqrt(),
                y,
                obs_var: self.obs_var,
            },
        )
    }
}

pub(crate) fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

pub(crate) fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -(x - mean).powi(2) / (2.0 * var) - 0.5 * (2.0 * PI * var).ln()
}

/// `1{U < exp(−(y − ξ)²/(2 obs_var))}` with `ξ` drawn from the state equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWeightCoin {
    mean: f64,
    sd: f64,
    y: f64,
    obs_var: f64,
}

impl Coin for GaussianWeightCoin {
    #[inline]
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        let xi = stream.normal(self.mean, self.sd);
        Ok(stream.uniform() < (-(self.y - xi).powi(2) / (2.0 * self.obs_var)).exp())
    }
}

/// Latent path and observations of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub observations: Vec<f64>,
}

/// Gaussian model bound to an observation sequence.
#[derive(Debug, Clone)]
pub struct GaussianSsm {
    params: GaussianSsmParams,
    observations: Vec<f64>,
    rejection_budget: u64,
    estimate_replicates: usize,
}

impl GaussianSsm {
    pub fn new(params: GaussianSsmParams, observations: Vec<f64>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            observations,
            rejection_budget: DEFAULT_REJECTION_BUDGET,
            estimate_replicates: 1,
        })
    }

    /// Number of state-equation draws averaged per RWPF weight estimate.
    pub fn with_estimate_replicates(mut self, replicates: usize) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidParameter("estimate replicates must be ≥ 1".into()));
        }
        self.estimate_replicates = replicates;
        Ok(self)
    }

    pub fn with_rejection_budget(mut self, budget: u64) -> Self {
        self.rejection_budget = budget;
        self
    }

    pub fn params(&self) -> &GaussianSsmParams {
        &self.params
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn simulate(params: &GaussianSsmParams, steps: usize, stream: &mut RandomStream) -> Result<Dataset> {
        params.validate()?;
        let x1 = stream.normal(0.0, params.init_var.sqrt());
        Ok(Self::simulate_from(params, x1, steps, stream))
    }

    /// Run started from a given `x_1`.
    pub fn simulate_from(params: &GaussianSsmParams, x1: f64, steps: usize, stream: &mut RandomStream) -> Dataset {
        let mut states = Vec::with_capacity(steps);
        let mut observations = Vec::with_capacity(steps);
        let mut x = x1;
        for t in 0..steps {
            if t > 0 {
                x = stream.normal(params.a * x, params.state_var.sqrt());
            }
            states.push(x);
            observations.push(stream.normal(x, params.obs_var.sqrt()));
        }
        Dataset {
            times: (1..=steps).map(|t| t as f64).collect(),
            states,
            observations,
        }
    }
}

impl StateSpaceModel for GaussianSsm {
    type State = f64;
    type Coin = GaussianWeightCoin;

    fn num_steps(&self) -> usize {
        self.observations.len()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            exact_weights: true,
            weight_estimates: true,
            factorizations: true,
        }
    }

    fn propose(&self, step: usize, prev: Option<&f64>, stream: &mut RandomStream) -> Result<f64> {
        self.params
            .sample_optimal_proposal(prev.copied(), self.observations[step], stream, self.rejection_budget)
    }

    fn summary(&self, state: &f64) -> f64 {
        *state
    }

    fn exact_weight(&self, step: usize, prev: Option<&f64>, _: &f64) -> Result<f64> {
        Ok(self.params.predictive_density(prev.copied(), self.observations[step]))
    }

    fn weight_estimate(&self, step: usize, prev: Option<&f64>, _: &f64, stream: &mut RandomStream) -> Result<f64> {
        let y = self.observations[step];
        let (m, v) = self.params.prior(prev.copied());
        let sd = v.sqrt();
        let total: f64 = (0..self.estimate_replicates)
            .map(|_| self.params.acceptance(y, stream.normal(m, sd)))
            .sum();
        Ok(self.params.weight_constant() * total / self.estimate_replicates as f64)
    }

    fn factorize(&self, step: usize, prev: Option<&f64>, _: &f64) -> Result<(f64, GaussianWeightCoin)> {
        Ok(self.params.weight_coin(prev.copied(), self.observations[step]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, sample_variance};

    fn draws(params: &GaussianSsmParams, prev: Option<f64>, y: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut s = RandomStream::new(seed, 0);
        (0..n)
            .map(|_| {
                params
                    .sample_optimal_proposal(prev, y, &mut s, DEFAULT_REJECTION_BUDGET)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn paper_constant() {
        let c = GaussianSsmParams::default().weight_constant();
        assert!((c - 1.0 / (10.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wide_observation_noise_recovers_the_prior() {
        let params = GaussianSsmParams {
            obs_var: 1e12,
            ..Default::default()
        };
        let xs = draws(&params, Some(2.0), 0.0, 100_000, 1);
        let (m, v) = (mean(&xs), sample_variance(&xs).unwrap());
        assert!((m - 1.6).abs() < 3.0 * (5.0f64 / 1e5).sqrt(), "{m}");
        assert!((v - 5.0).abs() < 3.0 * 5.0 * (2.0f64 / 1e5).sqrt(), "{v}");
    }

    #[test]
    fn symmetric_case_is_centred() {
        let params = GaussianSsmParams::default();
        let xs = draws(&params, Some(0.0), 0.0, 100_000, 2);
        assert!(mean(&xs).abs() < 3.0 * (2.5f64 / 1e5).sqrt());
    }

    #[test]
    fn rejection_sampler_matches_closed_form() {
        let params = GaussianSsmParams::default();
        let (m_true, v_true) = params.optimal_proposal_moments(Some(1.0), 3.0);
        assert!((m_true - 1.9).abs() < 1e-12);
        assert!((v_true - 2.5).abs() < 1e-12);
        let n = 100_000;
        let xs = draws(&params, Some(1.0), 3.0, n, 3);
        let (m, v) = (mean(&xs), sample_variance(&xs).unwrap());
        assert!((m - 1.9).abs() < 3.0 * (2.5 / n as f64).sqrt(), "{m}");
        assert!((v - 2.5).abs() < 3.0 * 2.5 * (2.0 / (n - 1) as f64).sqrt(), "{v}");
    }

    #[test]
    fn rejection_budget_is_enforced() {
        let params = GaussianSsmParams::default();
        let mut s = RandomStream::new(4, 0);
        let err = params.sample_optimal_proposal(Some(0.0), 1e3, &mut s, 10).unwrap_err();
        assert!(matches!(err, Error::StoppingBudgetExceeded { budget: 10, .. }));
    }

    #[test]
    fn far_observation_rarely_succeeds() {
        let params = GaussianSsmParams::default();
        let (_, coin) = params.weight_coin(Some(0.0), 100.0);
        let mut s = RandomStream::new(5, 0);
        let hits = (0..100_000).filter(|_| coin.flip(&mut s).unwrap()).count();
        assert!((hits as f64) / 1e5 < 1e-4);
    }

    #[test]
    fn coin_times_constant_is_predictive_density() {
        let params = GaussianSsmParams::default();
        let (c, coin) = params.weight_coin(Some(0.0), 0.0);
        let mut s = RandomStream::new(6, 0);
        let n = 1_000_000;
        let b = (0..n).filter(|_| coin.flip(&mut s).unwrap()).count() as f64 / n as f64;
        // Independent oracle: N(0; 0, 10).
        let target = 1.0 / (20.0 * PI).sqrt();
        let se = c * (b * (1.0 - b) / n as f64).sqrt();
        assert!((c * b - target).abs() < 3.0 * se, "{} vs {target}", c * b);
        assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn zero_noise_dataset_follows_the_recursion() {
        let params = GaussianSsmParams {
            a: 0.8,
            state_var: 1e-300,
            obs_var: 1e-300,
            init_var: 1.0,
        };
        let x0 = 3.0;
        let d = GaussianSsm::simulate_from(&params, params.a * x0, 6, &mut RandomStream::new(7, 0));
        for (t, y) in d.observations.iter().enumerate() {
            assert!((y - 0.8f64.powi(t as i32 + 1) * x0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_variances() {
        let p = GaussianSsmParams {
            obs_var: 0.0,
            ..Default::default()
        };
        assert!(GaussianSsm::new(p, vec![0.0]).is_err());
    }
}
