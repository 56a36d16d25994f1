//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use brpf::RandomStream;

/// Monte Carlo mean and standard error of `exp(−∫₀^Δt φ(W_s) ds)` for a
/// Brownian bridge from `x` to `x_end`.
///
/// Bridges are built on a uniform grid as `x + (x_end − x)s/Δt + B_s − (s/Δt)B_Δt`
/// from an independent random walk and the integral uses the trapezoid rule.
pub fn bridge_expectation(
    phi: impl Fn(f64) -> f64,
    x: f64,
    x_end: f64,
    dt: f64,
    paths: usize,
    grid: usize,
    seed: u64,
) -> (f64, f64) {
    let mut s = RandomStream::new(seed, 0x0bac1e);
    let h = dt / grid as f64;
    let mut walk = vec![0.0; grid + 1];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..paths {
        for k in 1..=grid {
            walk[k] = walk[k - 1] + h.sqrt() * s.standard_normal();
        }
        let end = walk[grid];
        let mut integral = 0.0;
        let mut prev = phi(x);
        for k in 1..=grid {
            let frac = k as f64 / grid as f64;
            let cur = phi(x + (x_end - x) * frac + walk[k] - frac * end);
            integral += 0.5 * h * (prev + cur);
            prev = cur;
        }
        let v = (-integral).exp();
        sum += v;
        sum_sq += v * v;
    }
    let n = paths as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Composite trapezoid rule on `n` panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Frequency of successes over `n` flips and its binomial standard error.
pub fn success_rate(mut flip: impl FnMut() -> bool, n: usize) -> (f64, f64) {
    let hits = (0..n).filter(|_| flip()).count() as f64;
    let p = hits / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}
