//! Flat TOML experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use brpf::filter::Strategy;
use brpf::models::{reference_intensity, GaussianSsmParams, OuCoxParams, OuParams, SineDiffusionParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gaussian,
    Sine,
    Cox,
    /// Fixed-probability coins with no state-space model; `bench` only.
    Synthetic,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::Sine => "sine",
            ModelKind::Cox => "cox",
            ModelKind::Synthetic => "synthetic",
        })
    }
}

/// Every key of an experiment file. Model keys that do not apply to the
/// selected `model` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub model: ModelKind,
    pub strategies: Vec<Strategy>,
    pub particles: usize,
    pub replications: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    /// Observations (gaussian, sine) or intervals (cox); model default if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Auxiliary draws averaged into each RWPF weight estimate.
    pub estimate_replicates: usize,
    pub stopping_budget: u64,
    pub bootstrap_resamples: usize,
    pub bootstrap_level: f64,

    pub a: f64,
    pub state_var: f64,
    pub obs_var: f64,
    pub init_var: f64,

    pub obs_sd: f64,
    pub obs_interval: f64,
    pub x0: f64,
    pub rate: f64,
    pub shift: f64,
    pub truth_step: f64,

    pub theta: f64,
    pub sigma: f64,
    pub lambda_max: f64,
    pub horizon: f64,

    pub grid: Vec<usize>,
    /// Worker counts to time; 0 means every available core.
    pub bench_workers: Vec<usize>,
    pub bench_repeats: usize,
    pub coin_probability: f64,
    pub coin_cost_us: f64,

    /// 1-based step whose raw particles `series` writes out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_step: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        let g = GaussianSsmParams::default();
        let s = SineDiffusionParams::default();
        let c = OuCoxParams::default();
        Self {
            model: ModelKind::Gaussian,
            strategies: vec![Strategy::RandomWeight, Strategy::BernoulliRace],
            particles: 100,
            replications: 100,
            seed: None,
            workers: 0,
            out: PathBuf::from("results"),
            steps: None,
            estimate_replicates: 1,
            stopping_budget: brpf::race::DEFAULT_STOPPING_BUDGET,
            bootstrap_resamples: 4000,
            bootstrap_level: 0.9,
            a: g.a,
            state_var: g.state_var,
            obs_var: g.obs_var,
            init_var: g.init_var,
            obs_sd: s.obs_sd,
            obs_interval: s.obs_interval,
            x0: s.x0,
            rate: s.rate,
            shift: s.shift,
            truth_step: s.truth_step,
            theta: c.ou.theta,
            sigma: c.ou.sigma,
            lambda_max: c.lambda_max,
            horizon: c.horizon,
            grid: vec![1_000, 10_000, 100_000],
            bench_workers: vec![1, 0],
            bench_repeats: 5,
            coin_probability: 0.5,
            coin_cost_us: 0.0,
            snapshot_step: None,
        }
    }
}

/// Values given on the command line that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct CommandLine {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
}

/// A validated configuration together with where its keys came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    source: Source,
}

#[derive(Debug, Clone)]
struct Source {
    path: PathBuf,
    text: String,
    overridden: Vec<String>,
}

impl Source {
    /// Prefixes `msg` with the place `key` was set.
    fn anchor(&self, key: &str, msg: impl fmt::Display) -> CliError {
        let path = self.path.display();
        if self.overridden.iter().any(|k| k == key) {
            return CliError::Config(format!("--override {key}: {msg}"));
        }
        match key_line(&self.text, key) {
            Some(line) => CliError::Config(format!("{path}:{line}: {key}: {msg}")),
            None => CliError::Config(format!("{path}: {key}: {msg}")),
        }
    }
}

/// 1-based line on which `key` is assigned at top level.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        })
        .map(|i| i + 1)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl Loaded {
    pub fn from_file(path: &Path, cli: &CommandLine) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read: {e}", path.display())))?;
        Self::from_text(path, text, cli)
    }

    pub fn from_text(path: &Path, text: String, cli: &CommandLine) -> Result<Self, CliError> {
        let mut config: Config = toml::from_str(&text).map_err(|e| {
            let msg = e.message().trim_end().to_string();
            match e.span() {
                Some(span) => {
                    let (line, col) = line_col(&text, span.start);
                    CliError::Config(format!("{}:{line}:{col}: {msg}", path.display()))
                }
                None => CliError::Config(format!("{}: {msg}", path.display())),
            }
        })?;

        let mut overridden = Vec::new();
        if !cli.overrides.is_empty() {
            let mut table = toml::Table::try_from(&config).map_err(|e| CliError::Config(e.to_string()))?;
            for item in &cli.overrides {
                let (key, raw) = item
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("--override {item}: expected key=value")))?;
                let key = key.trim();
                table.insert(key.to_string(), parse_value(raw.trim()));
                config = Config::deserialize(table.clone())
                    .map_err(|e| CliError::Config(format!("--override {item}: {}", e.message().trim_end())))?;
                overridden.push(key.to_string());
            }
        }
        if let Some(seed) = cli.seed {
            config.seed = Some(seed);
        }
        if let Some(w) = cli.workers {
            config.workers = w;
        }
        if let Some(out) = &cli.out {
            config.out = out.clone();
        }

        let loaded = Self {
            config,
            source: Source {
                path: path.to_path_buf(),
                text,
                overridden,
            },
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn error(&self, key: &str, msg: impl fmt::Display) -> CliError {
        self.source.anchor(key, msg)
    }

    pub fn seed(&self) -> u64 {
        self.config.seed.expect("validated")
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(self.error(key, msg)) };
        if c.seed.is_none() {
            return Err(CliError::Config(format!(
                "{}: seed: required (set `seed = ...` or pass --seed)",
                self.source.path.display()
            )));
        }
        check(c.replications >= 1, "replications", "must be at least 1")?;
        check(c.particles >= 2, "particles", "must be at least 2")?;
        check(c.estimate_replicates >= 1, "estimate_replicates", "must be at least 1")?;
        check(c.stopping_budget >= 1, "stopping_budget", "must be at least 1")?;
        check(c.bootstrap_resamples >= 1, "bootstrap_resamples", "must be at least 1")?;
        check(
            c.bootstrap_level > 0.0 && c.bootstrap_level < 1.0,
            "bootstrap_level",
            "must lie in (0, 1)",
        )?;
        check(c.steps != Some(0), "steps", "must be at least 1")?;
        check(c.snapshot_step != Some(0), "snapshot_step", "steps are numbered from 1")?;
        check(
            !c.grid.is_empty() && c.grid.iter().all(|&n| n >= 1),
            "grid",
            "needs one or more sizes ≥ 1",
        )?;
        check(!c.bench_workers.is_empty(), "bench_workers", "must not be empty")?;
        check(c.bench_repeats >= 1, "bench_repeats", "must be at least 1")?;
        check(
            c.coin_probability > 0.0 && c.coin_probability <= 1.0,
            "coin_probability",
            "must lie in (0, 1]",
        )?;
        check(
            c.coin_cost_us >= 0.0 && c.coin_cost_us.is_finite(),
            "coin_cost_us",
            "must be ≥ 0",
        )?;

        match c.model {
            ModelKind::Gaussian => {
                for (key, v) in [
                    ("state_var", c.state_var),
                    ("obs_var", c.obs_var),
                    ("init_var", c.init_var),
                ] {
                    check(v > 0.0 && v.is_finite(), key, "must be positive")?;
                }
                check(c.a.is_finite(), "a", "must be finite")?;
            }
            ModelKind::Sine => {
                check(c.obs_sd > 0.0 && c.obs_sd.is_finite(), "obs_sd", "must be positive")?;
                check(
                    c.obs_interval > 0.0 && c.obs_interval.is_finite(),
                    "obs_interval",
                    "must be positive",
                )?;
                check(
                    c.truth_step > 0.0 && c.truth_step <= c.obs_interval,
                    "truth_step",
                    "must lie in (0, obs_interval]",
                )?;
                self.sine_params().validate().map_err(|e| self.error("rate", e))?;
            }
            ModelKind::Cox => {
                check(c.theta < 0.0 && c.theta.is_finite(), "theta", "must be negative")?;
                check(c.sigma > 0.0 && c.sigma.is_finite(), "sigma", "must be positive")?;
                check(c.horizon > 0.0 && c.horizon.is_finite(), "horizon", "must be positive")?;
                // The simulated data come from the reference intensity, so
                // thinning needs lambda_max above its supremum.
                let sup = (0..=10_000)
                    .map(|k| reference_intensity(c.horizon * k as f64 / 10_000.0))
                    .fold(0.0, f64::max);
                check(
                    c.lambda_max >= sup,
                    "lambda_max",
                    &format!("must be at least the data intensity's maximum {sup:.4}"),
                )?;
                self.cox_params().validate().map_err(|e| self.error("lambda_max", e))?;
            }
            ModelKind::Synthetic => {}
        }
        Ok(())
    }

    /// Checks run by the filter-based subcommands only.
    pub fn require_filter_model(&self) -> Result<(), CliError> {
        if self.config.model == ModelKind::Synthetic {
            return Err(self.error("model", "synthetic coins are only available to `bench`"));
        }
        if self.config.strategies.is_empty() {
            return Err(self.error("strategies", "must not be empty"));
        }
        let mut seen = self.config.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.config.strategies.len() {
            return Err(self.error("strategies", "lists a strategy twice"));
        }
        Ok(())
    }

    pub fn gaussian_params(&self) -> GaussianSsmParams {
        let c = &self.config;
        GaussianSsmParams {
            a: c.a,
            state_var: c.state_var,
            obs_var: c.obs_var,
            init_var: c.init_var,
        }
    }

    pub fn sine_params(&self) -> SineDiffusionParams {
        let c = &self.config;
        SineDiffusionParams {
            obs_sd: c.obs_sd,
            obs_interval: c.obs_interval,
            num_obs: c.steps.unwrap_or(SineDiffusionParams::default().num_obs),
            x0: c.x0,
            rate: c.rate,
            shift: c.shift,
            truth_step: c.truth_step,
        }
    }

    pub fn cox_params(&self) -> OuCoxParams {
        let c = &self.config;
        OuCoxParams {
            ou: OuParams {
                theta: c.theta,
                sigma: c.sigma,
            },
            lambda_max: c.lambda_max,
            horizon: c.horizon,
            intervals: c.steps.unwrap_or(OuCoxParams::default().intervals),
            ..OuCoxParams::default()
        }
    }

    /// Gaussian time horizon.
    pub fn gaussian_steps(&self) -> usize {
        self.config.steps.unwrap_or(50)
    }

    /// SHA-256 of the effective configuration, excluding keys that cannot
    /// change results (worker count, output directory).
    pub fn hash(&self) -> String {
        let mut c = self.config.clone();
        c.workers = 0;
        c.out = PathBuf::new();
        let canonical = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn workers(&self) -> usize {
        resolve_workers(self.config.workers)
    }
}

pub fn resolve_workers(requested: usize) -> usize {
    if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    }
}
