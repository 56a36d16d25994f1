//! `brpf bench`: run time against the number of particles.

use std::path::Path;
use std::time::{Duration, Instant};

use brpf::filter::{run_filter, FilterConfig, FilterOutput, StateSpaceModel, Strategy};
use brpf::race::{race_resample, rho_from_trials, CostlyCoin, RaceOutcome, WeightFactorization, Workers};
use brpf::stats::mean;
use brpf::RandomStream;

use crate::config::{resolve_workers, Config, Loaded, ModelKind};
use crate::error::CliError;
use crate::output::{num, opt_num, write_csv, Metadata};
use crate::problem::{build, with_model, BENCH_STREAM, REPLICATE_STREAM};

pub const BENCH_FILE: &str = "bench.csv";
pub const FIT_FILE: &str = "fit.csv";

/// Median timings at one (strategy, N, workers) point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub strategy: Strategy,
    pub n: usize,
    pub workers: usize,
    pub propose_seconds: Option<f64>,
    pub weight_seconds: Option<f64>,
    pub resample_seconds: f64,
    pub total_seconds: f64,
    pub total_flips: u64,
    pub mean_rho: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// One discarded warm-up call, then `repeats` timed calls; returns the
/// output of the median call.
fn timed<T>(
    repeats: usize,
    mut f: impl FnMut() -> Result<T, CliError>,
    seconds: impl Fn(&T) -> f64,
) -> Result<T, CliError> {
    f()?;
    let mut outs = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        outs.push(f()?);
    }
    let target = median(outs.iter().map(&seconds).collect());
    let idx = outs
        .iter()
        .map(|o| (seconds(o) - target).abs())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("at least one repeat");
    Ok(outs.swap_remove(idx))
}

fn synthetic(loaded: &Loaded, n: usize, pool: &Workers) -> Result<BenchRecord, CliError> {
    let c = &loaded.config;
    let mut gen = RandomStream::new(loaded.seed(), BENCH_STREAM).substream(n as u64);
    let cost = Duration::from_secs_f64(c.coin_cost_us * 1e-6);
    let constants: Vec<f64> = (0..n).map(|_| gen.uniform_in(0.5, 1.5)).collect();
    let coins = (0..n)
        .map(|_| CostlyCoin::new(c.coin_probability, cost))
        .collect::<Result<Vec<_>, _>>()?;
    let f = WeightFactorization::new(constants, coins)?;
    let stream = RandomStream::new(loaded.seed(), REPLICATE_STREAM);
    let (outcome, secs): (RaceOutcome, f64) = timed(
        c.bench_repeats,
        || {
            let start = Instant::now();
            let o = race_resample(&f, n, &stream, pool, c.stopping_budget)?;
            Ok((o, start.elapsed().as_secs_f64()))
        },
        |o| o.1,
    )?;
    check_accounting(outcome.total_flips, outcome.trials.total())?;
    Ok(BenchRecord {
        strategy: Strategy::BernoulliRace,
        n,
        workers: pool.count(),
        propose_seconds: None,
        weight_seconds: None,
        resample_seconds: secs,
        total_seconds: secs,
        total_flips: outcome.total_flips,
        mean_rho: rho_from_trials(&outcome.trials).ok().map(|r| r.mvue),
    })
}

fn check_accounting(recorded: u64, summed: u64) -> Result<(), CliError> {
    if recorded != summed {
        return Err(CliError::Runtime(format!(
            "flip accounting mismatch: {recorded} recorded vs {summed} summed over trial counts"
        )));
    }
    Ok(())
}

fn filter_point<M: StateSpaceModel>(
    model: &M,
    loaded: &Loaded,
    strategy: Strategy,
    n: usize,
    pool: &Workers,
) -> Result<BenchRecord, CliError> {
    let c = &loaded.config;
    let config = FilterConfig {
        stopping_budget: c.stopping_budget,
        ..FilterConfig::new(n, strategy)
    };
    let stream = RandomStream::new(loaded.seed(), REPLICATE_STREAM).substream(0);
    let (out, total): (FilterOutput, f64) = timed(
        c.bench_repeats,
        || {
            let start = Instant::now();
            let o = run_filter(model, &config, &stream, pool, &[])?;
            Ok((o, start.elapsed().as_secs_f64()))
        },
        |o| o.1,
    )?;
    let summed: u64 = out
        .steps
        .iter()
        .filter_map(|s| s.trials.as_ref())
        .map(|t| t.total())
        .sum();
    if strategy == Strategy::BernoulliRace {
        check_accounting(out.total_flips(), summed)?;
    }
    let rhos: Vec<f64> = out.steps.iter().filter_map(|s| s.rho.map(|r| r.mvue)).collect();
    let phase = |f: fn(&brpf::filter::StepRecord) -> f64| out.steps.iter().map(f).sum::<f64>();
    Ok(BenchRecord {
        strategy,
        n,
        workers: pool.count(),
        propose_seconds: Some(phase(|s| s.propose_seconds)),
        weight_seconds: Some(phase(|s| s.weight_seconds)),
        resample_seconds: phase(|s| s.resample_seconds),
        total_seconds: total,
        total_flips: out.total_flips(),
        mean_rho: (!rhos.is_empty()).then(|| mean(&rhos)),
    })
}

/// Least-squares slope and intercept of `log y` on `log x`.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub fn bench(loaded: &Loaded, config_path: &Path) -> Result<(), CliError> {
    let clock = Instant::now();
    let c = &loaded.config;
    std::fs::create_dir_all(&c.out)?;
    let mut worker_counts: Vec<usize> = c.bench_workers.iter().map(|&w| resolve_workers(w)).collect();
    worker_counts.sort_unstable();
    worker_counts.dedup();
    let pools = worker_counts
        .iter()
        .map(|&w| Workers::new(w))
        .collect::<Result<Vec<_>, _>>()?;

    let mut records = Vec::new();
    if c.model == ModelKind::Synthetic {
        for &n in &c.grid {
            for pool in &pools {
                records.push(synthetic(loaded, n, pool)?);
            }
        }
    } else {
        loaded.require_filter_model()?;
        let built = build(loaded)?;
        for &s in &c.strategies {
            for &n in &c.grid {
                for pool in &pools {
                    let rec = with_model!(&built.problem, m => filter_point(m, loaded, s, n, pool))?;
                    records.push(rec);
                }
            }
        }
    }

    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                c.model.to_string(),
                r.strategy.to_string(),
                r.n.to_string(),
                r.workers.to_string(),
                opt_num(r.propose_seconds),
                opt_num(r.weight_seconds),
                num(r.resample_seconds),
                num(r.total_seconds),
                r.total_flips.to_string(),
                opt_num(r.mean_rho),
            ]
        })
        .collect();
    write_csv(
        &c.out.join(BENCH_FILE),
        &[
            "model",
            "strategy",
            "n",
            "workers",
            "propose_seconds",
            "weight_seconds",
            "resample_seconds",
            "total_seconds",
            "total_flips",
            "mean_rho_mvue",
        ],
        &rows,
    )?;

    // Synthetic runs time the race alone; filter runs are fitted on the whole step.
    let synthetic_run = c.model == ModelKind::Synthetic;
    let metric = if synthetic_run {
        "resample_seconds"
    } else {
        "total_seconds"
    };
    let mut fits = Vec::new();
    for s in fitted_strategies(c) {
        for &w in &worker_counts {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.strategy == s && r.workers == w)
                .map(|r| {
                    (
                        r.n as f64,
                        if synthetic_run {
                            r.resample_seconds
                        } else {
                            r.total_seconds
                        },
                    )
                })
                .collect();
            if let Some((slope, intercept)) = log_log_fit(&pts) {
                fits.push(vec![
                    s.to_string(),
                    w.to_string(),
                    metric.to_string(),
                    num(slope),
                    num(intercept),
                    pts.len().to_string(),
                ]);
            }
        }
    }
    write_csv(
        &c.out.join(FIT_FILE),
        &["strategy", "workers", "metric", "slope", "intercept", "points"],
        &fits,
    )?;

    let mut meta = Metadata::new("bench", loaded, config_path);
    meta.total_flips = records.iter().map(|r| r.total_flips).sum();
    meta.files = vec![BENCH_FILE.into(), FIT_FILE.into()];
    meta.wall_clock_seconds = clock.elapsed().as_secs_f64();
    meta.write(&c.out)
}

/// Synthetic benchmarks only ever race.
fn fitted_strategies(c: &Config) -> Vec<Strategy> {
    if c.model == ModelKind::Synthetic {
        vec![Strategy::BernoulliRace]
    } else {
        c.strategies.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&n: &f64| (n, 3e-6 * n.powf(1.2)))
            .collect();
        let (slope, intercept) = log_log_fit(&pts).unwrap();
        assert!((slope - 1.2).abs() < 1e-12);
        assert!((intercept - 3e-6f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fit_needs_two_distinct_sizes() {
        assert_eq!(log_log_fit(&[(1.0, 0.5)]), None);
        assert_eq!(log_log_fit(&[(10.0, 0.5), (10.0, 0.7)]), None);
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
