//! `brpf run`: replicated filter runs summarised per strategy.

use std::path::Path;
use std::time::Instant;

use brpf::filter::{run_filter, FilterConfig, StateSpaceModel, Strategy, TestFunction};
use brpf::race::Workers;
use brpf::stats::{bootstrap_sd_ratio_interval, mean, sample_sd};
use brpf::RandomStream;

use crate::config::Loaded;
use crate::error::CliError;
use crate::output::{num, opt_num, write_csv, Metadata, Status};
use crate::problem::{build, with_model, Built, BOOTSTRAP_STREAM, REPLICATE_STREAM};

pub const RESULTS_FILE: &str = "results.csv";
pub const RATIOS_FILE: &str = "ratios.csv";
pub const REPLICATES_FILE: &str = "replicates.csv";

/// Per-replicate quantities, in output order.
const QUANTITIES: [&str; 7] = [
    "h1",
    "h2",
    "h3",
    "h4",
    "log_likelihood",
    "tracking_error",
    "total_flips",
];

/// What is kept of one filter run.
struct Record {
    values: [f64; QUANTITIES.len()],
    flips: u64,
}

struct StrategyRuns {
    strategy: Strategy,
    records: Vec<Record>,
    /// First failing replicate and its error.
    failure: Option<(usize, brpf::Error)>,
}

fn record(out: &brpf::filter::FilterOutput, truth: &[f64]) -> Record {
    let h = |f: TestFunction| out.functionals[f.label()];
    let tracking = out
        .filtering_means
        .iter()
        .zip(truth)
        .map(|(m, x)| (m - x).abs())
        .sum::<f64>()
        / truth.len() as f64;
    let flips = out.total_flips();
    Record {
        values: [
            h(TestFunction::PathMean),
            h(TestFunction::PathNorm),
            h(TestFunction::Terminal),
            h(TestFunction::TerminalSpread),
            out.likelihood.log_value,
            tracking,
            flips as f64,
        ],
        flips,
    }
}

fn replicate<M: StateSpaceModel>(
    model: &M,
    loaded: &Loaded,
    built: &Built,
    strategy: Strategy,
    pool: &Workers,
) -> StrategyRuns {
    let c = &loaded.config;
    let root = RandomStream::new(loaded.seed(), REPLICATE_STREAM);
    let config = FilterConfig {
        stopping_budget: c.stopping_budget,
        ..FilterConfig::new(c.particles, strategy)
    };
    let results = pool.map(c.replications, |r| {
        run_filter(
            model,
            &config,
            &root.substream(r as u64),
            &Workers::sequential(),
            &TestFunction::ALL,
        )
        .map(|out| record(&out, &built.truth))
    });
    let mut records = Vec::with_capacity(results.len());
    let mut failure = None;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) if failure.is_none() => failure = Some((r, e)),
            Err(_) => {}
        }
    }
    StrategyRuns {
        strategy,
        records,
        failure,
    }
}

fn column(runs: &StrategyRuns, q: usize) -> Vec<f64> {
    runs.records.iter().map(|r| r.values[q]).collect()
}

pub fn run(loaded: &Loaded, config_path: &Path) -> Result<(), CliError> {
    loaded.require_filter_model()?;
    let clock = Instant::now();
    let c = &loaded.config;
    let built = build(loaded)?;
    let pool = Workers::new(loaded.workers())?;
    let out_dir = &c.out;
    std::fs::create_dir_all(out_dir)?;

    let all: Vec<StrategyRuns> = c
        .strategies
        .iter()
        .map(|&s| with_model!(&built.problem, m => replicate(m, loaded, &built, s, &pool)))
        .collect();

    let mut results = Vec::new();
    let mut replicates = Vec::new();
    for runs in &all {
        for (q, name) in QUANTITIES.iter().enumerate() {
            let xs = column(runs, q);
            if xs.is_empty() {
                continue;
            }
            let sd = sample_sd(&xs);
            results.push(vec![
                runs.strategy.to_string(),
                name.to_string(),
                num(mean(&xs)),
                opt_num(sd),
                xs.len().to_string(),
                opt_num(sd.map(|s| s / (xs.len() as f64).sqrt())),
            ]);
        }
        for (r, rec) in runs.records.iter().enumerate() {
            for (q, name) in QUANTITIES.iter().enumerate() {
                replicates.push(vec![
                    runs.strategy.to_string(),
                    r.to_string(),
                    name.to_string(),
                    num(rec.values[q]),
                ]);
            }
        }
    }
    write_csv(
        &out_dir.join(RESULTS_FILE),
        &["strategy", "quantity", "estimate", "sd", "replications", "std_error"],
        &results,
    )?;
    write_csv(
        &out_dir.join(REPLICATES_FILE),
        &["strategy", "replicate", "quantity", "value"],
        &replicates,
    )?;
    write_csv(
        &out_dir.join(RATIOS_FILE),
        &[
            "quantity",
            "numerator",
            "denominator",
            "sd_numerator",
            "sd_denominator",
            "ratio",
            "ci_low",
            "ci_high",
            "level",
        ],
        &ratio_rows(loaded, &all)?,
    )?;

    let mut meta = Metadata::new("run", loaded, config_path);
    meta.reference_log_likelihood = built.reference_log_likelihood;
    meta.files = vec![RESULTS_FILE.into(), RATIOS_FILE.into(), REPLICATES_FILE.into()];
    for runs in &all {
        meta.replications_completed
            .insert(runs.strategy.to_string(), runs.records.len());
        meta.total_flips += runs.records.iter().map(|r| r.flips).sum::<u64>();
    }
    let failure = all.iter().find_map(|runs| {
        runs.failure
            .as_ref()
            .map(|(r, e)| format!("{} replicate {r}: {e}", runs.strategy))
    });
    if let Some(msg) = &failure {
        meta.status = Status::Incomplete;
        meta.error = Some(msg.clone());
    }
    meta.wall_clock_seconds = clock.elapsed().as_secs_f64();
    meta.write(out_dir)?;
    match failure {
        Some(msg) => Err(CliError::Runtime(format!("{msg} (partial results marked incomplete)"))),
        None => Ok(()),
    }
}

/// `sd(BRPF) / sd(other)` for every other strategy, with bootstrap intervals.
fn ratio_rows(loaded: &Loaded, all: &[StrategyRuns]) -> Result<Vec<Vec<String>>, CliError> {
    let c = &loaded.config;
    let Some(brpf) = all.iter().find(|r| r.strategy == Strategy::BernoulliRace) else {
        return Ok(Vec::new());
    };
    let mut stream = RandomStream::new(loaded.seed(), BOOTSTRAP_STREAM);
    let mut rows = Vec::new();
    for other in all.iter().filter(|r| r.strategy != Strategy::BernoulliRace) {
        for (q, name) in QUANTITIES.iter().enumerate() {
            let (a, b) = (column(brpf, q), column(other, q));
            let (Some(sa), Some(sb)) = (sample_sd(&a), sample_sd(&b)) else {
                continue;
            };
            if sb == 0.0 {
                continue;
            }
            let (lo, hi) = bootstrap_sd_ratio_interval(&a, &b, c.bootstrap_resamples, c.bootstrap_level, &mut stream)?;
            rows.push(vec![
                name.to_string(),
                brpf.strategy.to_string(),
                other.strategy.to_string(),
                num(sa),
                num(sb),
                num(sa / sb),
                num(lo),
                num(hi),
                num(c.bootstrap_level),
            ]);
        }
    }
    Ok(rows)
}
