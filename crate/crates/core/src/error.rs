use thiserror::Error;

/// Errors raised by the sampling primitives, the coin factories and the filter engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {time} outside the admissible range ({lower}, {upper})")]
    InvalidTime { time: f64, lower: f64, upper: f64 },

    /// A Bernoulli race (or rejection sampler) exhausted its trial budget.
    #[error("stopping budget of {budget} trials exceeded at draw {draw}{}", step_suffix(*.step))]
    StoppingBudgetExceeded {
        budget: u64,
        draw: usize,
        step: Option<usize>,
    },

    #[error("at least {required} draws are needed, got {got}")]
    InsufficientDraws { required: usize, got: usize },

    #[error("estimate {value} lies outside [0, 1]")]
    EstimatorRangeViolation { value: f64 },

    #[error("configured bound violated: {0}")]
    ConfigBoundViolation(String),

    #[error("strategy {strategy} needs {capability}, which the model does not provide")]
    CapabilityMissing {
        strategy: &'static str,
        capability: &'static str,
    },

    #[error("all weights are zero at step {step}")]
    DegenerateStep { step: usize },

    #[error("step {step} is not available (run has {available} steps)")]
    InvalidStep { step: usize, available: usize },
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(s) => format!(" of step {s}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a filter step index to errors that carry one.
    pub(crate) fn at_step(self, t: usize) -> Self {
        match self {
            Error::StoppingBudgetExceeded { budget, draw, .. } => Error::StoppingBudgetExceeded {
                budget,
                draw,
                step: Some(t),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
