use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::race::Coin;
use crate::rng::RandomStream;

/// How a step's particles are resampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Multinomial resampling on exact weights.
    #[serde(rename = "EWPF")]
    ExactWeight,
    /// Multinomial resampling on unbiased weight estimates.
    #[serde(rename = "RWPF")]
    RandomWeight,
    /// Bernoulli race on `(c, coin)` factorizations.
    #[serde(rename = "BRPF")]
    BernoulliRace,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::ExactWeight, Strategy::RandomWeight, Strategy::BernoulliRace];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::ExactWeight => "EWPF",
            Strategy::RandomWeight => "RWPF",
            Strategy::BernoulliRace => "BRPF",
        }
    }

    fn capability(self) -> &'static str {
        match self {
            Strategy::ExactWeight => "exact weights",
            Strategy::RandomWeight => "unbiased weight estimates",
            Strategy::BernoulliRace => "weight factorizations",
        }
    }

    pub(crate) fn missing(self) -> Error {
        Error::CapabilityMissing {
            strategy: self.label(),
            capability: self.capability(),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EWPF" => Ok(Strategy::ExactWeight),
            "RWPF" => Ok(Strategy::RandomWeight),
            "BRPF" => Ok(Strategy::BernoulliRace),
            _ => Err(Error::InvalidParameter(format!(
                "unknown strategy `{s}` (expected EWPF, RWPF or BRPF)"
            ))),
        }
    }
}

/// Which weighting routes a model supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub exact_weights: bool,
    pub weight_estimates: bool,
    pub factorizations: bool,
}

impl Capabilities {
    pub fn supports(&self, strategy: Strategy) -> bool {
        match strategy {
            Strategy::ExactWeight => self.exact_weights,
            Strategy::RandomWeight => self.weight_estimates,
            Strategy::BernoulliRace => self.factorizations,
        }
    }
}

/// A state-space model together with its proposal and weighting routes.
///
/// `step` counts from 0. `prev` is the resampled ancestor and is `None` at
/// the first step, where the proposal targets the initial distribution.
/// The weight of a proposed state is `ϖ(x_t | y_t, x_{t−1}) / q(x_t | x_{t−1}, y_t)`.
pub trait StateSpaceModel: Sync {
    type State: Clone + Send + Sync;
    type Coin: Coin;

    fn num_steps(&self) -> usize;

    fn capabilities(&self) -> Capabilities;

    fn propose(&self, step: usize, prev: Option<&Self::State>, stream: &mut RandomStream) -> Result<Self::State>;

    /// Scalar image of a state used by test functions and tracking output.
    fn summary(&self, state: &Self::State) -> f64;

    fn exact_weight(&self, _step: usize, _prev: Option<&Self::State>, _state: &Self::State) -> Result<f64> {
        Err(Strategy::ExactWeight.missing())
    }

    /// Non-negative unbiased estimate of the weight.
    fn weight_estimate(
        &self,
        _step: usize,
        _prev: Option<&Self::State>,
        _state: &Self::State,
        _stream: &mut RandomStream,
    ) -> Result<f64> {
        Err(Strategy::RandomWeight.missing())
    }

    /// Known constant `c` and a coin for `b ∈ [0, 1]` with `c·b` the weight.
    fn factorize(&self, _step: usize, _prev: Option<&Self::State>, _state: &Self::State) -> Result<(f64, Self::Coin)> {
        Err(Strategy::BernoulliRace.missing())
    }
}
