//! Partially observed sine diffusion `dX_s = sin(X_s) ds + dB_s`.
//!
//! Observations `Y_k = X_{kΔt} + N(0, obs_sd²)`. The proposal is one
//! Euler–Maruyama step and the transition density is
//! `φ(x'; x, Δt) exp(cos x − cos x') E[exp(−∫₀^Δt ϕ(W_s) ds)]` with
//! `ϕ(x) = (sin²x + cos x)/2` and `W` a Brownian bridge from `x` to `x'`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gaussian::{normal_log_pdf, Dataset};
use crate::coins::{pgf_coin, BrownianBridge, PgfCoin, PoissonCoinConfig};
use crate::error::{Error, Result};
use crate::filter::{Capabilities, StateSpaceModel};
use crate::rng::RandomStream;

/// `ϕ(x) = (sin²x + cos x)/2`.
pub fn sine_phi(x: f64) -> f64 {
    let s = x.sin();
    0.5 * (s * s + x.cos())
}

/// Range of [`sine_phi`]: `cos x = −1` gives `−1/2`, `cos x = 1/2` gives `5/8`.
pub const SINE_PHI_RANGE: (f64, f64) = (-0.5, 0.625);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineDiffusionParams {
    pub obs_sd: f64,
    /// Spacing `Δt` of the observation grid.
    pub obs_interval: f64,
    pub num_obs: usize,
    /// Known state at time 0.
    pub x0: f64,
    /// Poisson rate `λ` of the coin and estimator.
    pub rate: f64,
    /// Shift `c ≥ sup ϕ`.
    pub shift: f64,
    /// Euler step of the ground-truth simulator.
    pub truth_step: f64,
}

impl Default for SineDiffusionParams {
    fn default() -> Self {
        Self {
            obs_sd: 5.0,
            obs_interval: 1.0,
            num_obs: 15,
            x0: 0.0,
            rate: SINE_PHI_RANGE.1 - SINE_PHI_RANGE.0,
            shift: SINE_PHI_RANGE.1,
            truth_step: 1e-3,
        }
    }
}

impl SineDiffusionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("obs_sd", self.obs_sd),
            ("obs_interval", self.obs_interval),
            ("truth_step", self.truth_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter(format!("x0 = {}", self.x0)));
        }
        self.coin_config().map(|_| ())
    }

    pub fn coin_config(&self) -> Result<PoissonCoinConfig> {
        PoissonCoinConfig::new(self.rate, self.shift, Arc::new(sine_phi), SINE_PHI_RANGE)
    }

    pub fn horizon(&self) -> f64 {
        self.obs_interval * self.num_obs as f64
    }

    pub fn observation_times(&self) -> Vec<f64> {
        (1..=self.num_obs).map(|k| k as f64 * self.obs_interval).collect()
    }
}

/// Euler–Maruyama step `x + Δt sin x + √Δt Z`.
pub fn euler_step(x: f64, dt: f64, stream: &mut RandomStream) -> f64 {
    x + dt * x.sin() + dt.sqrt() * stream.standard_normal()
}

/// Known constant of the factorization,
/// `φ(y; x', σ²) φ(x'; x, Δt)/φ(x'; x + Δt sin x, Δt) · exp(cos x − cos x' − (c − λ)Δt)`.
///
/// The Gaussian ratio reduces to `exp(−(x' − x) sin x + Δt sin²x / 2)`, which
/// stays finite as `Δt → 0`.
pub fn sine_weight_constant(x_prev: f64, x_prop: f64, y: f64, params: &SineDiffusionParams) -> f64 {
    let dt = params.obs_interval;
    let s = x_prev.sin();
    let log_ratio = -(x_prop - x_prev) * s + 0.5 * dt * s * s;
    let log_c = normal_log_pdf(y, x_prop, params.obs_sd * params.obs_sd) + log_ratio + x_prev.cos()
        - x_prop.cos()
        - (params.shift - params.rate) * dt;
    log_c.exp()
}

/// `(c, coin)` whose product in expectation is the intractable weight.
pub fn sine_factorization(x_prev: f64, x_prop: f64, y: f64, params: &SineDiffusionParams) -> Result<(f64, PgfCoin)> {
    let bridge = BrownianBridge::new(x_prev, x_prop, params.obs_interval)?;
    Ok((
        sine_weight_constant(x_prev, x_prop, y, params),
        pgf_coin(bridge, params.coin_config()?),
    ))
}

/// Sine diffusion bound to an observation sequence.
#[derive(Debug, Clone)]
pub struct SineDiffusion {
    params: SineDiffusionParams,
    config: PoissonCoinConfig,
    observations: Vec<f64>,
    estimate_replicates: usize,
}

impl SineDiffusion {
    pub fn new(params: SineDiffusionParams, observations: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if observations.len() != params.num_obs {
            return Err(Error::InvalidParameter(format!(
                "{} observations for a grid of {}",
                observations.len(),
                params.num_obs
            )));
        }
        Ok(Self {
            config: params.coin_config()?,
            params,
            observations,
            estimate_replicates: 1,
        })
    }

    /// Number of Poisson estimates averaged per RWPF weight.
    pub fn with_estimate_replicates(mut self, replicates: usize) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidParameter("estimate replicates must be ≥ 1".into()));
        }
        self.estimate_replicates = replicates;
        Ok(self)
    }

    pub fn params(&self) -> &SineDiffusionParams {
        &self.params
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    /// Fine Euler path from `x0`, recorded on the observation grid, plus noisy
    /// observations.
    pub fn simulate(params: &SineDiffusionParams, stream: &mut RandomStream) -> Result<Dataset> {
        params.validate()?;
        let substeps = (params.obs_interval / params.truth_step).round().max(1.0) as usize;
        let h = params.obs_interval / substeps as f64;
        let mut x = params.x0;
        let mut states = Vec::with_capacity(params.num_obs);
        let mut observations = Vec::with_capacity(params.num_obs);
        for _ in 0..params.num_obs {
            for _ in 0..substeps {
                x = euler_step(x, h, stream);
            }
            states.push(x);
            observations.push(stream.normal(x, params.obs_sd));
        }
        Ok(Dataset {
            times: params.observation_times(),
            states,
            observations,
        })
    }

    fn prev_state(&self, prev: Option<&f64>) -> f64 {
        prev.copied().unwrap_or(self.params.x0)
    }
}

impl StateSpaceModel for SineDiffusion {
    type State = f64;
    type Coin = PgfCoin;

    fn num_steps(&self) -> usize {
        self.observations.len()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            exact_weights: false,
            weight_estimates: true,
            factorizations: true,
        }
    }

    fn propose(&self, _: usize, prev: Option<&f64>, stream: &mut RandomStream) -> Result<f64> {
        Ok(euler_step(self.prev_state(prev), self.params.obs_interval, stream))
    }

    fn summary(&self, state: &f64) -> f64 {
        *state
    }

    fn weight_estimate(&self, step: usize, prev: Option<&f64>, state: &f64, stream: &mut RandomStream) -> Result<f64> {
        let x_prev = self.prev_state(prev);
        let bridge = BrownianBridge::new(x_prev, *state, self.params.obs_interval)?;
        let mut total = 0.0;
        for _ in 0..self.estimate_replicates {
            total += self.config.unit_estimate(&bridge, stream)?;
        }
        let c = sine_weight_constant(x_prev, *state, self.observations[step], &self.params);
        Ok(c * total / self.estimate_replicates as f64)
    }

    fn factorize(&self, step: usize, prev: Option<&f64>, state: &f64) -> Result<(f64, PgfCoin)> {
        let x_prev = self.prev_state(prev);
        let bridge = BrownianBridge::new(x_prev, *state, self.params.obs_interval)?;
        Ok((
            sine_weight_constant(x_prev, *state, self.observations[step], &self.params),
            pgf_coin(bridge, self.config.clone()),
        ))
    }
}
