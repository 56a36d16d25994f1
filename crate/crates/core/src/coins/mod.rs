//! Constructions of unbiased coins and weight estimators.

mod bridge;
mod poisson;
mod thinning;
mod unit;

pub use bridge::BrownianBridge;
pub use poisson::{pgf_coin, poisson_weight_estimate, PgfCoin, PoissonCoinConfig, WeightEstimate};
pub use thinning::{cox_thinning_coin, sigmoid, CoxThinningCoin, FixedPath, LatentPath};
pub use unit::{coin_from_unit_estimate, UnitEstimateCoin, UnitEstimator};

/// Slack allowed when checking that an estimate or threshold lies in `[0, 1]`.
pub(crate) const RANGE_TOLERANCE: f64 = 1e-12;
