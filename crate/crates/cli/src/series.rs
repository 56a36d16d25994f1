//! `brpf series`: per-step particle summaries for plotting.

use std::path::Path;
use std::time::Instant;

use brpf::filter::{run_filter, FilterConfig, Genealogy, StateSpaceModel, Strategy};
use brpf::race::Workers;
use brpf::series::step_summaries;
use brpf::{Error, RandomStream};

use crate::config::Loaded;
use crate::error::CliError;
use crate::output::{num, write_csv, Metadata};
use crate::problem::{build, with_model, REPLICATE_STREAM};

pub const SERIES_FILE: &str = "series.csv";
pub const SNAPSHOT_FILE: &str = "snapshot.csv";

fn genealogy<M: StateSpaceModel>(
    model: &M,
    loaded: &Loaded,
    strategy: Strategy,
    pool: &Workers,
) -> Result<(Genealogy, u64), CliError> {
    let c = &loaded.config;
    let config = FilterConfig {
        stopping_budget: c.stopping_budget,
        ..FilterConfig::new(c.particles, strategy)
    };
    let stream = RandomStream::new(loaded.seed(), REPLICATE_STREAM).substream(0);
    let out = run_filter(model, &config, &stream, pool, &[])?;
    let flips = out.total_flips();
    Ok((out.genealogy, flips))
}

/// Resampled particles at 1-based `step`.
pub fn snapshot(genealogy: &Genealogy, step: usize) -> Result<Vec<f64>, Error> {
    let available = genealogy.num_steps();
    if step == 0 || step > available {
        return Err(Error::InvalidStep { step, available });
    }
    genealogy.snapshot(step - 1)
}

pub fn series(loaded: &Loaded, config_path: &Path) -> Result<(), CliError> {
    loaded.require_filter_model()?;
    let clock = Instant::now();
    let c = &loaded.config;
    let built = build(loaded)?;
    let pool = Workers::new(loaded.workers())?;
    std::fs::create_dir_all(&c.out)?;

    let mut rows = Vec::new();
    let mut snapshot_rows = Vec::new();
    let mut flips = 0;
    for &s in &c.strategies {
        let (g, f) = with_model!(&built.problem, m => genealogy(m, loaded, s, &pool))?;
        flips += f;
        for (t, summary) in step_summaries(&g)?.iter().enumerate() {
            rows.push(vec![
                s.to_string(),
                (t + 1).to_string(),
                num(built.times[t]),
                num(summary.mean),
                num(summary.q10),
                num(summary.q90),
                num(built.truth[t]),
            ]);
        }
        if let Some(step) = c.snapshot_step {
            for (i, v) in snapshot(&g, step)?.iter().enumerate() {
                snapshot_rows.push(vec![s.to_string(), step.to_string(), i.to_string(), num(*v)]);
            }
        }
    }
    write_csv(
        &c.out.join(SERIES_FILE),
        &["strategy", "step", "time", "mean", "q10", "q90", "truth"],
        &rows,
    )?;
    let mut meta = Metadata::new("series", loaded, config_path);
    meta.files.push(SERIES_FILE.into());
    if c.snapshot_step.is_some() {
        write_csv(
            &c.out.join(SNAPSHOT_FILE),
            &["strategy", "step", "particle", "value"],
            &snapshot_rows,
        )?;
        meta.files.push(SNAPSHOT_FILE.into());
    }
    meta.replications = 1;
    meta.total_flips = flips;
    meta.wall_clock_seconds = clock.elapsed().as_secs_f64();
    meta.write(&c.out)
}
