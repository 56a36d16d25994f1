//! Concrete state-space models: a linear Gaussian model with its Kalman
//! oracle, the sine diffusion and a Cox process with an OU prior.

mod cox;
mod gaussian;
mod kalman;
mod ou;
mod sine;

pub use cox::{
    cox_step_factorization, reference_intensity, simulate_arrivals, CoxState, OuCoxModel, OuCoxParams, OuSkeleton,
};
pub use gaussian::{Dataset, GaussianSsm, GaussianSsmParams, GaussianWeightCoin, DEFAULT_REJECTION_BUDGET};
pub use kalman::{kalman_reference, KalmanOutput};
pub use ou::{sample_gaussian2, GaussianTransition, OuParams};
pub use sine::{
    euler_step, sine_factorization, sine_phi, sine_weight_constant, SineDiffusion, SineDiffusionParams, SINE_PHI_RANGE,
};
