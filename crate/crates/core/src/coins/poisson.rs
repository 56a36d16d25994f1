//! Poisson-estimator and probability-generating-function coins for
//! `E[exp(-∫₀^Δt φ(W_s) ds)]` over a Brownian bridge `W`.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::bridge::{BridgeCursor, BrownianBridge};
use super::RANGE_TOLERANCE;
use crate::error::{Error, Result};
use crate::race::Coin;
use crate::rng::RandomStream;

/// Expected Poisson counts above this make every flip expensive.
const COSTLY_INTENSITY: f64 = 50.0;
static COSTLY_WARNED: AtomicBool = AtomicBool::new(false);

/// Rate `λ`, shift `c` and the function `φ` of a Poisson estimator, with
/// the analytic range of `φ` used to validate `(c − φ)/λ ∈ [0, 1]`.
#[derive(Clone)]
pub struct PoissonCoinConfig {
    rate: f64,
    shift: f64,
    phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    phi_range: (f64, f64),
}

impl fmt::Debug for PoissonCoinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonCoinConfig")
            .field("rate", &self.rate)
            .field("shift", &self.shift)
            .field("phi_range", &self.phi_range)
            .finish_non_exhaustive()
    }
}

impl PoissonCoinConfig {
    /// `phi_range = (inf φ, sup φ)` over the reachable states. Requires
    /// `shift ≥ sup φ` and `rate ≥ shift − inf φ`.
    pub fn new(
        rate: f64,
        shift: f64,
        phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        phi_range: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = phi_range;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("Poisson rate {rate}")));
        }
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!("φ range ({lo}, {hi})")));
        }
        if shift < hi {
            return Err(Error::ConfigBoundViolation(format!(
                "shift {shift} is below sup φ = {hi}"
            )));
        }
        if rate < shift - lo {
            return Err(Error::ConfigBoundViolation(format!(
                "rate {rate} is below shift − inf φ = {}",
                shift - lo
            )));
        }
        Ok(Self {
            rate,
            shift,
            phi,
            phi_range,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn phi(&self, x: f64) -> f64 {
        (self.phi)(x)
    }

    pub fn phi_range(&self) -> (f64, f64) {
        self.phi_range
    }

    #[inline]
    fn threshold(&self, w: f64) -> Result<f64> {
        let thr = (self.shift - (self.phi)(w)) / self.rate;
        if !(-RANGE_TOLERANCE..=1.0 + RANGE_TOLERANCE).contains(&thr) {
            return Err(Error::ConfigBoundViolation(format!(
                "(c − φ({w}))/λ = {thr} lies outside [0, 1]"
            )));
        }
        Ok(thr)
    }

    /// Poisson count and sorted uniform times on `(0, Δt)` for one evaluation.
    fn poisson_times(&self, length: f64, stream: &mut RandomStream) -> Result<Vec<f64>> {
        let mean = self.rate * length;
        if mean > COSTLY_INTENSITY && !COSTLY_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!("Poisson coin with λΔt = {mean:.1}; flips will be expensive");
        }
        let kappa = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
            .sample(stream) as usize;
        let mut times: Vec<f64> = (0..kappa).map(|_| stream.uniform() * length).collect();
        times.sort_by(f64::total_cmp);
        Ok(times)
    }

    /// `Π (c − φ(W_{U_i}))/λ`, a `[0, 1]`-valued unbiased estimate of
    /// `exp((c − λ)Δt) E[exp(−∫φ)]`.
    pub fn unit_estimate(&self, bridge: &BrownianBridge, stream: &mut RandomStream) -> Result<f64> {
        let times = self.poisson_times(bridge.length(), stream)?;
        let mut cursor = BridgeCursor::new(bridge);
        let mut product = 1.0;
        for t in times {
            product *= self.threshold(cursor.advance(t, stream))?;
        }
        Ok(product)
    }
}

/// A non-negative weight estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightEstimate {
    pub value: f64,
}

/// Poisson estimator `exp((λ − c)Δt) Π (c − φ(W_{U_i}))/λ`, unbiased for
/// `E[exp(−∫₀^Δt φ(W_s) ds)]`.
pub fn poisson_weight_estimate(
    bridge: &BrownianBridge,
    config: &PoissonCoinConfig,
    stream: &mut RandomStream,
) -> Result<WeightEstimate> {
    let unit = config.unit_estimate(bridge, stream)?;
    let scale = ((config.rate - config.shift) * bridge.length()).exp();
    Ok(WeightEstimate { value: scale * unit })
}

/// Coin with success probability `exp((c − λ)Δt) E[exp(−∫₀^Δt φ(W_s) ds)]`.
///
/// Each flip draws `κ ~ Poisson(λΔt)` uniform times, samples a fresh bridge at
/// them and succeeds if every `V_i < (c − φ(W_{U_i}))/λ`. The bridge is not
/// reused across flips.
#[derive(Debug, Clone)]
pub struct PgfCoin {
    bridge: BrownianBridge,
    config: PoissonCoinConfig,
}

pub fn pgf_coin(bridge: BrownianBridge, config: PoissonCoinConfig) -> PgfCoin {
    PgfCoin { bridge, config }
}

impl PgfCoin {
    pub fn bridge(&self) -> &BrownianBridge {
        &self.bridge
    }
}

impl Coin for PgfCoin {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        let times = self.config.poisson_times(self.bridge.length(), stream)?;
        let mut cursor = BridgeCursor::new(&self.bridge);
        for t in times {
            let thr = self.config.threshold(cursor.advance(t, stream))?;
            if stream.uniform() >= thr {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
