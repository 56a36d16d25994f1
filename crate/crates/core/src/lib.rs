//! Particle filters with exact multinomial resampling for intractable
//! weights.
//!
//! When a particle weight factors as `w = c · b` with `c` known and `b` only
//! available through coin flips of success probability `b`, the Bernoulli
//! race in [`race`] draws offspring exactly from `w / Σ w`. The trial counts
//! it leaves behind yield an unbiased estimate of the marginal likelihood.
//! [`filter`] runs the full particle filter with exact weights, weight
//! estimates or races, [`coins`] builds the coins and [`models`] packages the
//! example state-space models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alias;
pub mod coins;
pub mod error;
pub mod filter;
pub mod models;
pub mod race;
pub mod rng;
pub mod series;
pub mod stats;
pub mod trials;

pub use error::{Error, Result};
pub use rng::RandomStream;
