use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use super::functionals::{estimate_functionals, Genealogy, TestFunction};
use super::likelihood::{estimate_likelihood, LikelihoodEstimate};
use super::model::{StateSpaceModel, Strategy};
use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::race::{race_resample, rho_from_trials, RhoEstimate, WeightFactorization, Workers, DEFAULT_STOPPING_BUDGET};
use crate::rng::RandomStream;
use crate::trials::TrialCounter;

const PROPOSE: u64 = 0;
const WEIGHT: u64 = 1;
const RESAMPLE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub particles: usize,
    pub strategy: Strategy,
    /// Per-draw trial cap for Bernoulli races.
    pub stopping_budget: u64,
}

impl FilterConfig {
    pub fn new(particles: usize, strategy: Strategy) -> Self {
        Self {
            particles,
            strategy,
            stopping_budget: DEFAULT_STOPPING_BUDGET,
        }
    }
}

/// What one step leaves behind for likelihood estimation and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// `Σ w`, `Σ ŵ` or `Σ c` depending on the strategy.
    pub weight_sum: f64,
    /// Per-draw race trial counts (BRPF only).
    pub trials: Option<TrialCounter>,
    pub total_flips: u64,
    pub rho: Option<RhoEstimate>,
    pub propose_seconds: f64,
    pub weight_seconds: f64,
    pub resample_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilterOutput {
    pub strategy: Strategy,
    pub particles: usize,
    pub functionals: BTreeMap<String, f64>,
    pub likelihood: LikelihoodEstimate,
    /// Mean of the resampled particle summaries at each step.
    pub filtering_means: Vec<f64>,
    pub steps: Vec<StepRecord>,
    #[serde(skip)]
    pub genealogy: Genealogy,
}

impl FilterOutput {
    pub fn total_flips(&self) -> u64 {
        self.steps.iter().map(|s| s.total_flips).sum()
    }
}

/// Weighted ensemble awaiting resampling.
pub enum Weighting<C> {
    /// Exact weights or their unbiased estimates.
    Weights(Vec<f64>),
    Factorization(WeightFactorization<C>),
}

/// Draws `particles` offspring indices and the step's record fields.
/// Weights go through an alias table; factorizations through the race.
pub fn resample<C: crate::race::Coin>(
    weighting: &Weighting<C>,
    particles: usize,
    stream: &RandomStream,
    workers: &Workers,
    stopping_budget: u64,
) -> Result<(Vec<usize>, Option<TrialCounter>)> {
    match weighting {
        Weighting::Weights(w) => {
            let table = AliasTable::new(w)?;
            let mut s = stream.clone();
            Ok(((0..particles).map(|_| table.draw(&mut s)).collect(), None))
        }
        Weighting::Factorization(f) => {
            let outcome = race_resample(f, particles, stream, workers, stopping_budget)?;
            Ok((outcome.indices, Some(outcome.trials)))
        }
    }
}

/// Propagate, weight and resample at every step, then assemble the test
/// functionals and the likelihood estimate of the chosen strategy.
///
/// Particle `i` at step `t` draws from `stream.derive(&[t, phase]).substream(i)`,
/// so output does not depend on the worker count, and runs of different
/// strategies from one stream share their proposal randomness.
pub fn run_filter<M: StateSpaceModel>(
    model: &M,
    config: &FilterConfig,
    stream: &RandomStream,
    workers: &Workers,
    functions: &[TestFunction],
) -> Result<FilterOutput> {
    let n = config.particles;
    if n < 2 {
        return Err(Error::InsufficientDraws { required: 2, got: n });
    }
    let steps = model.num_steps();
    if steps == 0 {
        return Err(Error::EmptyInput);
    }
    if !model.capabilities().supports(config.strategy) {
        return Err(config.strategy.missing());
    }

    let mut live: Vec<M::State> = Vec::new();
    let mut genealogy = Genealogy::new();
    let mut records = Vec::with_capacity(steps);
    let mut filtering_means = Vec::with_capacity(steps);

    for t in 0..steps {
        let phase = |p: u64| stream.derive(&[t as u64, p]);
        let parent = |i: usize| if t == 0 { None } else { Some(&live[i]) };

        let clock = Instant::now();
        let propose_stream = phase(PROPOSE);
        let proposed: Vec<M::State> = workers
            .map(n, |i| {
                model.propose(t, parent(i), &mut propose_stream.substream(i as u64))
            })
            .into_iter()
            .collect::<Result<_>>()
            .map_err(|e| e.at_step(t))?;
        let propose_seconds = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let weight_stream = phase(WEIGHT);
        let weighting: Weighting<M::Coin> = match config.strategy {
            Strategy::ExactWeight => Weighting::Weights(
                workers
                    .map(n, |i| model.exact_weight(t, parent(i), &proposed[i]))
                    .into_iter()
                    .collect::<Result<_>>()?,
            ),
            Strategy::RandomWeight => Weighting::Weights(
                workers
                    .map(n, |i| {
                        model.weight_estimate(t, parent(i), &proposed[i], &mut weight_stream.substream(i as u64))
                    })
                    .into_iter()
                    .collect::<Result<_>>()?,
            ),
            Strategy::BernoulliRace => {
                let (constants, coins): (Vec<f64>, Vec<M::Coin>) = workers
                    .map(n, |i| model.factorize(t, parent(i), &proposed[i]))
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                if constants.iter().all(|&c| c == 0.0) {
                    return Err(Error::DegenerateStep { step: t });
                }
                Weighting::Factorization(WeightFactorization::new(constants, coins)?)
            }
        };
        let weight_sum = match &weighting {
            Weighting::Weights(w) => {
                let sum: f64 = w.iter().sum();
                if sum == 0.0 {
                    return Err(Error::DegenerateStep { step: t });
                }
                sum
            }
            Weighting::Factorization(f) => f.constants().iter().sum(),
        };
        let weight_seconds = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let (selection, trials) =
            resample(&weighting, n, &phase(RESAMPLE), workers, config.stopping_budget).map_err(|e| e.at_step(t))?;
        let resample_seconds = clock.elapsed().as_secs_f64();

        let rho = trials.as_ref().map(rho_from_trials).transpose()?;
        records.push(StepRecord {
            step: t,
            weight_sum,
            total_flips: trials.as_ref().map_or(0, TrialCounter::total),
            trials,
            rho,
            propose_seconds,
            weight_seconds,
            resample_seconds,
        });

        let values: Vec<f64> = proposed.iter().map(|x| model.summary(x)).collect();
        filtering_means.push(selection.iter().map(|&k| values[k]).sum::<f64>() / n as f64);
        live = selection.iter().map(|&k| proposed[k].clone()).collect();
        genealogy.push(values, selection);
    }

    let likelihood = estimate_likelihood(config.strategy, &records, n)?;
    Ok(FilterOutput {
        strategy: config.strategy,
        particles: n,
        functionals: estimate_functionals(&genealogy, functions),
        likelihood,
        filtering_means,
        steps: records,
        genealogy,
    })
}
