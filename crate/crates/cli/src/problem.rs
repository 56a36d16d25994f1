//! Turns a configuration into a model with its simulated data set.

use brpf::filter::StateSpaceModel;
use brpf::models::{kalman_reference, reference_intensity, simulate_arrivals, GaussianSsm, OuCoxModel, SineDiffusion};
use brpf::RandomStream;

use crate::config::{Loaded, ModelKind};
use crate::error::CliError;

/// Stream ids under the experiment seed.
pub const DATA_STREAM: u64 = 0;
pub const REPLICATE_STREAM: u64 = 1;
pub const BOOTSTRAP_STREAM: u64 = 2;
pub const BENCH_STREAM: u64 = 3;

pub enum Problem {
    Gaussian(GaussianSsm),
    Sine(SineDiffusion),
    Cox(OuCoxModel),
}

/// Runs `$body` with `$m` bound to the concrete model.
macro_rules! with_model {
    ($problem:expr, $m:ident => $body:expr) => {
        match $problem {
            $crate::problem::Problem::Gaussian($m) => $body,
            $crate::problem::Problem::Sine($m) => $body,
            $crate::problem::Problem::Cox($m) => $body,
        }
    };
}
pub(crate) use with_model;

pub struct Built {
    pub problem: Problem,
    /// Time of each filter step.
    pub times: Vec<f64>,
    /// What the per-step particle summary estimates: the latent state, or
    /// the intensity for the Cox model.
    pub truth: Vec<f64>,
    /// Exact log-likelihood where one exists (Kalman filter).
    pub reference_log_likelihood: Option<f64>,
}

pub fn build(loaded: &Loaded) -> Result<Built, CliError> {
    let c = &loaded.config;
    let mut data_stream = RandomStream::new(loaded.seed(), DATA_STREAM);
    let replicates = c.estimate_replicates;
    let built = match c.model {
        ModelKind::Gaussian => {
            let params = loaded.gaussian_params();
            let data = GaussianSsm::simulate(&params, loaded.gaussian_steps(), &mut data_stream)?;
            let reference = kalman_reference(&params, &data.observations)?.log_likelihood;
            let model = GaussianSsm::new(params, data.observations)?.with_estimate_replicates(replicates)?;
            Built {
                problem: Problem::Gaussian(model),
                times: data.times,
                truth: data.states,
                reference_log_likelihood: Some(reference),
            }
        }
        ModelKind::Sine => {
            let params = loaded.sine_params();
            let data = SineDiffusion::simulate(&params, &mut data_stream)?;
            let model = SineDiffusion::new(params, data.observations)?.with_estimate_replicates(replicates)?;
            Built {
                problem: Problem::Sine(model),
                times: data.times,
                truth: data.states,
                reference_log_likelihood: None,
            }
        }
        ModelKind::Cox => {
            if replicates != 1 {
                return Err(loaded.error("estimate_replicates", "the Cox model supports a single draw only"));
            }
            let params = loaded.cox_params();
            let arrivals = simulate_arrivals(reference_intensity, params.lambda_max, params.horizon, &mut data_stream)?;
            let model = OuCoxModel::new(params, arrivals)?;
            let times = model.grid()[1..].to_vec();
            let truth = times.iter().map(|&t| reference_intensity(t)).collect();
            Built {
                problem: Problem::Cox(model),
                times,
                truth,
                reference_log_likelihood: None,
            }
        }
        ModelKind::Synthetic => unreachable!("checked by require_filter_model"),
    };
    for &s in &c.strategies {
        let supported = with_model!(&built.problem, m => m.capabilities().supports(s));
        if !supported {
            return Err(loaded.error("strategies", format!("the {} model cannot run {s}", c.model)));
        }
    }
    Ok(built)
}
