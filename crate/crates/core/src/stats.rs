//! Summary statistics and goodness-of-fit tests used by diagnostics, the
//! experiment tables and the statistical test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; `None` for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    sample_variance(xs).map(f64::sqrt)
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> Option<f64> {
    sample_sd(xs).map(|sd| sd / (xs.len() as f64).sqrt())
}

/// Quantile with linear interpolation between order statistics
/// (`h = (n - 1) q`, the "type 7" convention).
pub fn quantile(xs: &[f64], q: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile level {q}")));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pearson goodness-of-fit of observed counts against (unnormalised) expected
/// weights. Categories with zero expected weight must have zero counts and
/// are dropped. Returns `(statistic, p_value)`.
pub fn chi_square_gof(counts: &[u64], weights: &[f64]) -> Result<(f64, f64)> {
    if counts.len() != weights.len() || counts.is_empty() {
        return Err(Error::InvalidParameter("counts and weights differ in length".into()));
    }
    let n: u64 = counts.iter().sum();
    let total: f64 = weights.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &w) in counts.iter().zip(weights) {
        if w == 0.0 {
            if c > 0 {
                return Ok((f64::INFINITY, 0.0));
            }
            continue;
        }
        let e = n as f64 * w / total;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    Ok((stat, chi_square_upper_tail(stat, cells.saturating_sub(1))))
}

/// Pearson test that two count vectors over the same categories come from one
/// distribution (2 × k contingency table). Empty columns are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidParameter("count vectors differ in length".into()));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        let ea = col * na as f64 / n;
        let eb = col * nb as f64 / n;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
        cells += 1;
    }
    Ok((stat, chi_square_upper_tail(stat, cells.saturating_sub(1))))
}

fn chi_square_upper_tail(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    dist.sf(stat)
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// One-sample Kolmogorov–Smirnov test for integer-valued data against a
/// discrete CDF evaluated on the support. Conservative for discrete laws.
pub fn ks_discrete(samples: &[u64], cdf: impl Fn(u64) -> f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let k = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == k {
            j += 1;
        }
        // Empirical CDF just below k and at k against F(k-1), F(k).
        let below = if k == 0 { 0.0 } else { cdf(k - 1) };
        d = d.max((i as f64 / n - below).abs());
        d = d.max((j as f64 / n - cdf(k)).abs());
        i = j;
    }
    Ok((d, ks_p_value(d, n)))
}

/// Two-sample Kolmogorov–Smirnov test. Returns `(D, p_value)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok((d, ks_p_value(d, na * nb / (na + nb))))
}

/// Percentile bootstrap interval for `sd(a) / sd(b)` with the two samples
/// resampled independently.
pub fn bootstrap_sd_ratio_interval(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    level: f64,
    stream: &mut RandomStream,
) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientDraws {
            required: 2,
            got: a.len().min(b.len()),
        });
    }
    let mut ratios = Vec::with_capacity(resamples);
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for _ in 0..resamples {
        for x in ra.iter_mut() {
            *x = a[stream.index(a.len())];
        }
        for x in rb.iter_mut() {
            *x = b[stream.index(b.len())];
        }
        let sb = sample_sd(&rb).unwrap_or(0.0);
        if sb > 0.0 {
            ratios.push(sample_sd(&ra).unwrap_or(0.0) / sb);
        }
    }
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("denominator sample has zero spread".into()));
    }
    ratios.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&ratios, alpha), quantile_sorted(&ratios, 1.0 - alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate_linearly() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile(&xs, 0.1).unwrap() - 10.9).abs() < 1e-12);
        assert!((quantile(&xs, 0.9).unwrap() - 90.1).abs() < 1e-12);
        assert_eq!(quantile(&[3.0], 0.1).unwrap(), 3.0);
        assert!(quantile(&[], 0.5).is_err());
    }

    #[test]
    fn variance_matches_hand_computation() {
        assert_eq!(sample_variance(&[1.0, 3.0]), Some(2.0));
        assert_eq!(sample_variance(&[1.0]), None);
    }

    #[test]
    fn chi_square_exact_counts_have_p_one() {
        let (stat, p) = chi_square_gof(&[20, 30, 50], &[0.2, 0.3, 0.5]).unwrap();
        assert!(stat.abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = chi_square_gof(&[90, 5, 5], &[1.0, 1.0, 1.0]).unwrap();
        assert!(p < 1e-10);
        let (_, p) = chi_square_gof(&[1, 5], &[0.0, 1.0]).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn kolmogorov_tail_known_value() {
        // Q(1.3581) ≈ 0.05 and Q(1.6276) ≈ 0.01.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn two_sample_ks_separates_shifted_samples() {
        let mut s = RandomStream::new(1, 0);
        let a: Vec<f64> = (0..500).map(|_| s.standard_normal()).collect();
        let b: Vec<f64> = (0..500).map(|_| s.standard_normal()).collect();
        let c: Vec<f64> = (0..500).map(|_| s.standard_normal() + 0.5).collect();
        assert!(ks_two_sample(&a, &b).unwrap().1 > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().1 < 0.01);
    }

    #[test]
    fn bootstrap_interval_brackets_true_ratio() {
        let mut s = RandomStream::new(3, 0);
        let a: Vec<f64> = (0..400).map(|_| 0.5 * s.standard_normal()).collect();
        let b: Vec<f64> = (0..400).map(|_| s.standard_normal()).collect();
        let (lo, hi) = bootstrap_sd_ratio_interval(&a, &b, 2000, 0.9, &mut s).unwrap();
        assert!(lo < 0.5 && 0.5 < hi, "({lo}, {hi})");
    }
}
