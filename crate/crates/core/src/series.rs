//! Per-step summaries of the resampled particle cloud, for tracking plots.

use serde::Serialize;

use crate::error::Result;
use crate::filter::Genealogy;
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Mean and 10%/90% quantiles of the resampled summaries at every step.
pub fn step_summaries(genealogy: &Genealogy) -> Result<Vec<StepSummary>> {
    (0..genealogy.num_steps())
        .map(|step| {
            let mut xs = genealogy.snapshot(step)?;
            xs.sort_by(f64::total_cmp);
            Ok(StepSummary {
                step,
                mean: xs.iter().sum::<f64>() / xs.len() as f64,
                q10: quantile_sorted(&xs, 0.1),
                q90: quantile_sorted(&xs, 0.9),
            })
        })
        .collect()
}
