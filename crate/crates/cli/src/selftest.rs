//! `brpf selftest`: a quick pass over the library's invariants.

use brpf::alias::AliasTable;
use brpf::filter::{run_filter, FilterConfig, Strategy, TestFunction};
use brpf::models::{kalman_reference, GaussianSsm, GaussianSsmParams};
use brpf::race::{race_resample, FixedCoin, WeightFactorization, Workers, DEFAULT_STOPPING_BUDGET};
use brpf::stats::chi_square_gof;
use brpf::RandomStream;

use crate::error::CliError;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn alias_masses(seed: u64) -> Check {
    let mut s = RandomStream::new(seed, 0);
    let mut worst = 0.0f64;
    for n in [1, 2, 10, 1000] {
        let w: Vec<f64> = (0..n).map(|_| s.uniform() * 10.0).collect();
        let total: f64 = w.iter().sum();
        let table = AliasTable::new(&w).expect("positive weights");
        for (m, x) in table.reconstructed_masses().iter().zip(&w) {
            worst = worst.max((m - x / total).abs() / (x / total));
        }
    }
    Check {
        name: "alias mass reconstruction",
        passed: worst <= 1e-12,
        detail: format!("max relative error {worst:.2e}"),
    }
}

fn race_law(seed: u64, workers: &Workers) -> Check {
    let c = vec![1.0, 2.0, 0.5, 3.0, 1.5];
    let b = [0.9, 0.2, 0.6, 0.35, 1.0];
    let coins = b.iter().map(|&p| FixedCoin::new(p).expect("valid")).collect();
    let f = WeightFactorization::new(c.clone(), coins).expect("valid");
    let draws = 200_000;
    let out =
        race_resample(&f, draws, &RandomStream::new(seed, 1), workers, DEFAULT_STOPPING_BUDGET).expect("terminates");
    let mut counts = vec![0u64; c.len()];
    out.indices.iter().for_each(|&i| counts[i] += 1);
    let target: Vec<f64> = c.iter().zip(&b).map(|(c, b)| c * b).collect();
    let (_, p) = chi_square_gof(&counts, &target).expect("valid counts");
    let accounted = out.total_flips == out.trials.total();
    Check {
        name: "race draws follow c·b",
        passed: p > 1e-3 && accounted,
        detail: format!("chi-square p = {p:.3}, {} flips for {draws} draws", out.total_flips),
    }
}

fn worker_invariance(seed: u64, workers: &Workers) -> Check {
    let params = GaussianSsmParams::default();
    let data = GaussianSsm::simulate(&params, 10, &mut RandomStream::new(seed, 2)).expect("valid params");
    let model = GaussianSsm::new(params, data.observations).expect("valid model");
    let stream = RandomStream::new(seed, 3);
    let mut same = true;
    for s in Strategy::ALL {
        let config = FilterConfig::new(64, s);
        let a = run_filter(&model, &config, &stream, &Workers::sequential(), &TestFunction::ALL).expect("run");
        let b = run_filter(&model, &config, &stream, workers, &TestFunction::ALL).expect("run");
        same &= a.functionals == b.functionals && a.likelihood == b.likelihood && a.genealogy == b.genealogy;
    }
    Check {
        name: "output independent of workers",
        passed: same,
        detail: format!("1 vs {} workers, all strategies", workers.count()),
    }
}

fn likelihood(seed: u64, workers: &Workers) -> Check {
    let params = GaussianSsmParams::default();
    let data = GaussianSsm::simulate(&params, 5, &mut RandomStream::new(seed, 4)).expect("valid params");
    let truth = kalman_reference(&params, &data.observations)
        .expect("valid")
        .log_likelihood;
    let model = GaussianSsm::new(params, data.observations).expect("valid model");
    let root = RandomStream::new(seed, 5);
    let reps = 2000;
    let runs = workers.map(reps, |r| {
        run_filter(
            &model,
            &FilterConfig::new(50, Strategy::BernoulliRace),
            &root.substream(r as u64),
            &Workers::sequential(),
            &[],
        )
        .expect("run")
    });
    let logsum_ok = runs.iter().all(|o| {
        let direct: f64 = o.likelihood.per_step_factors.iter().map(|f| f.ln()).sum();
        (o.likelihood.log_value - direct).abs() <= 1e-12 * direct.abs().max(1.0)
    });
    let ratios: Vec<f64> = runs.iter().map(|o| (o.likelihood.log_value - truth).exp()).collect();
    let m = brpf::stats::mean(&ratios);
    let se = brpf::stats::std_error(&ratios).unwrap_or(f64::INFINITY);
    // Five standard errors: a smoke check, not the acceptance test.
    Check {
        name: "BRPF likelihood unbiased",
        passed: logsum_ok && (m - 1.0).abs() < 5.0 * se,
        detail: format!("p̂/p = {m:.4} ± {se:.4} over {reps} runs"),
    }
}

pub fn selftest(seed: u64, workers: usize) -> Result<(), CliError> {
    let pool = Workers::new(workers.max(2))?;
    let checks = [
        alias_masses(seed),
        race_law(seed, &pool),
        worker_invariance(seed, &pool),
        likelihood(seed, &pool),
    ];
    let mut failed = 0;
    for c in &checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
