//! Bernoulli race: exact multinomial sampling from `p(i) ∝ c_i b_i` when the
//! constants `c_i` are known but each `b_i ∈ [0, 1]` is only available as a
//! coin with that success probability.
//!
//! Each round proposes `I` from the alias table over `c` and flips coin `I`;
//! the first success is returned. Rounds per draw are geometric with success
//! probability `ρ = Σ c_k b_k / Σ c_k`, so the trial counts double as an
//! estimator of the normalising constant (see [`estimate_rho`]).

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::trials::{sample_geometric, TrialCounter};

/// Default per-draw cap on (proposal, flip) rounds.
pub const DEFAULT_STOPPING_BUDGET: u64 = 10_000_000;

/// A Bernoulli factory: every flip is an independent draw with a fixed,
/// possibly unknown, success probability.
///
/// Flips take their randomness from the supplied stream only, so a coin can
/// be flipped from several threads at once as long as each uses its own stream.
pub trait Coin: Send + Sync {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool>;
}

impl<C: Coin + ?Sized> Coin for &C {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        (**self).flip(stream)
    }
}

impl<C: Coin + ?Sized> Coin for Box<C> {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        (**self).flip(stream)
    }
}

/// Coin with a known success probability. Used for synthetic workloads and
/// as a test double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedCoin {
    probability: f64,
}

impl FixedCoin {
    pub fn new(probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::InvalidParameter(format!("coin probability {probability}")));
        }
        Ok(Self { probability })
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }
}

impl Coin for FixedCoin {
    #[inline]
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        Ok(stream.uniform() < self.probability)
    }
}

/// [`FixedCoin`] that busy-waits for `cost` before every flip, standing in
/// for an expensive Bernoulli factory in run-time studies.
#[derive(Debug, Clone, Copy)]
pub struct CostlyCoin {
    coin: FixedCoin,
    cost: Duration,
}

impl CostlyCoin {
    pub fn new(probability: f64, cost: Duration) -> Result<Self> {
        Ok(Self {
            coin: FixedCoin::new(probability)?,
            cost,
        })
    }
}

impl Coin for CostlyCoin {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        if !self.cost.is_zero() {
            let start = Instant::now();
            while start.elapsed() < self.cost {
                std::hint::spin_loop();
            }
        }
        self.coin.flip(stream)
    }
}

/// Per-particle weights written as `w_i = c_i b_i`: known constants plus one
/// coin per particle.
#[derive(Debug, Clone)]
pub struct WeightFactorization<C> {
    constants: Vec<f64>,
    coins: Vec<C>,
}

impl<C: Coin> WeightFactorization<C> {
    pub fn new(constants: Vec<f64>, coins: Vec<C>) -> Result<Self> {
        if constants.len() != coins.len() {
            return Err(Error::InvalidParameter(format!(
                "{} constants but {} coins",
                constants.len(),
                coins.len()
            )));
        }
        if constants.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(c) = constants.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidWeights(format!("constant {c}")));
        }
        if constants.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidWeights("all constants are zero".into()));
        }
        Ok(Self { constants, coins })
    }

    pub fn len(&self) -> usize {
        self.constants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constants.is_empty()
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn coins(&self) -> &[C] {
        &self.coins
    }

    /// Alias table over the constants, the proposal used by every round.
    pub fn proposal_table(&self) -> Result<AliasTable> {
        AliasTable::new(&self.constants)
    }
}

/// Thread pool handle for the parallel paths; one worker means sequential.
#[derive(Debug)]
pub struct Workers {
    pool: Option<rayon::ThreadPool>,
    count: usize,
}

impl Workers {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("worker count must be at least 1".into()));
        }
        let pool = if count > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(count)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { pool, count })
    }

    pub fn sequential() -> Self {
        Self { pool: None, count: 1 }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `f(i)` for `i in 0..n`, collected in index order regardless of scheduling.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::sequential()
    }
}

/// One Bernoulli race. Returns the accepted index and the number of rounds.
pub fn race_once<C: Coin>(
    factorization: &WeightFactorization<C>,
    table: &AliasTable,
    stream: &mut RandomStream,
    budget: u64,
) -> Result<(usize, u64)> {
    debug_assert_eq!(table.len(), factorization.len());
    let coins = factorization.coins();
    for trial in 1..=budget {
        let i = table.draw(stream);
        if coins[i].flip(stream)? {
            return Ok((i, trial));
        }
    }
    Err(Error::StoppingBudgetExceeded {
        budget,
        draw: 0,
        step: None,
    })
}

/// Selected indices and the per-draw trial counts of a resampling round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RaceOutcome {
    pub indices: Vec<usize>,
    pub trials: TrialCounter,
    pub total_flips: u64,
}

/// `draw_count` independent races against one alias table. Draw `j` runs on
/// `stream.substream(j)`, so the result is the same for any worker count.
pub fn race_resample<C: Coin>(
    factorization: &WeightFactorization<C>,
    draw_count: usize,
    stream: &RandomStream,
    workers: &Workers,
    budget: u64,
) -> Result<RaceOutcome> {
    if draw_count == 0 {
        return Err(Error::InvalidParameter("draw count must be at least 1".into()));
    }
    let table = factorization.proposal_table()?;
    let draws = workers.map(draw_count, |j| {
        let mut s = stream.substream(j as u64);
        race_once(factorization, &table, &mut s, budget).map_err(|e| match e {
            Error::StoppingBudgetExceeded { budget, step, .. } => {
                Error::StoppingBudgetExceeded { budget, draw: j, step }
            }
            other => other,
        })
    });
    let mut indices = Vec::with_capacity(draw_count);
    let mut trials = TrialCounter::with_capacity(draw_count);
    for d in draws {
        let (i, t) = d?;
        indices.push(i);
        trials.push(t);
    }
    let total_flips = trials.total();
    Ok(RaceOutcome {
        indices,
        trials,
        total_flips,
    })
}

/// Estimates of the stopping probability `ρ` from one round of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEstimate {
    /// `1 / mean(C)`; consistent but biased.
    pub naive: f64,
    /// `(N - 1) / (ΣC - 1)`; the minimum variance unbiased estimator.
    pub mvue: f64,
    pub draw_count: usize,
}

/// `1 / mean(C)`. Defined for a single draw, unlike the unbiased estimator.
pub fn naive_rho(trials: &TrialCounter) -> Result<f64> {
    let (mean, _) = trials.mean_variance()?;
    Ok(1.0 / mean)
}

/// Both estimators of `ρ`; needs at least two draws.
pub fn estimate_rho(outcome: &RaceOutcome) -> Result<RhoEstimate> {
    rho_from_trials(&outcome.trials)
}

pub fn rho_from_trials(trials: &TrialCounter) -> Result<RhoEstimate> {
    let n = trials.len();
    if n < 2 {
        return Err(Error::InsufficientDraws { required: 2, got: n });
    }
    Ok(RhoEstimate {
        naive: naive_rho(trials)?,
        mvue: mvue_rho(n, trials.total()),
        draw_count: n,
    })
}

#[inline]
pub(crate) fn mvue_rho(draws: usize, total_trials: u64) -> f64 {
    (draws - 1) as f64 / (total_trials - 1) as f64
}

/// Empirical check of the two central limit theorems for the trial counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltReport {
    pub rho: f64,
    pub draws: usize,
    pub replicates: usize,
    /// Empirical variance of `√N (C̄ − 1/ρ)`.
    pub mean_trials_variance: f64,
    /// `(1 − ρ) / ρ²`.
    pub mean_trials_target: f64,
    /// Empirical variance of `√N (ρ̂_mvue − ρ)`.
    pub mvue_variance: f64,
    /// `(1 − ρ) ρ²`.
    pub mvue_target: f64,
}

/// Simulates geometric trial counts directly (no coins) and reports the
/// empirical variances of the scaled mean and of the unbiased estimator.
pub fn clt_diagnostics(
    replicates: usize,
    draws: usize,
    rho: f64,
    stream: &RandomStream,
    workers: &Workers,
) -> Result<CltReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    if draws < 2 {
        return Err(Error::InsufficientDraws {
            required: 2,
            got: draws,
        });
    }
    if replicates < 2 {
        return Err(Error::InsufficientDraws {
            required: 2,
            got: replicates,
        });
    }
    let root_n = (draws as f64).sqrt();
    let pairs = workers.map(replicates, |r| -> Result<(f64, f64)> {
        let mut s = stream.substream(r as u64);
        let mut total = 0u64;
        for _ in 0..draws {
            total += sample_geometric(rho, &mut s)?;
        }
        let mean = total as f64 / draws as f64;
        Ok((root_n * (mean - 1.0 / rho), root_n * (mvue_rho(draws, total) - rho)))
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let first: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let second: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(CltReport {
        rho,
        draws,
        replicates,
        mean_trials_variance: crate::stats::sample_variance(&first).unwrap_or(0.0),
        mean_trials_target: (1.0 - rho) / (rho * rho),
        mvue_variance: crate::stats::sample_variance(&second).unwrap_or(0.0),
        mvue_target: (1.0 - rho) * rho * rho,
    })
}
