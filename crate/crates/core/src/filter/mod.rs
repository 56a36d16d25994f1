//! Sequential importance resampling with exact, estimated or raced weights.

mod engine;
mod functionals;
mod likelihood;
mod model;

pub use engine::{resample, run_filter, FilterConfig, FilterOutput, StepRecord, Weighting};
pub use functionals::{estimate_functionals, Genealogy, TestFunction};
pub use likelihood::{estimate_likelihood, LikelihoodEstimate};
pub use model::{Capabilities, StateSpaceModel, Strategy};
