//! Cox process with intensity `λ(s) = λ_max sigmoid(X_{1,s})` driven by the
//! integrated OU prior, filtered on an equispaced grid of the horizon.
//!
//! Particles are proposed from the prior and sampled exactly at the arrivals
//! inside each interval and at its right end. The weight of an interval is
//! `exp(−∫λ) Π λ(s_i)`: the product is the known constant and the exponential
//! is a thinning coin whose latent path is filled in by OU bridges between
//! the stored knots.

use nalgebra::Vector2;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::ou::OuParams;
use crate::coins::{cox_thinning_coin, sigmoid, CoxThinningCoin, LatentPath};
use crate::error::{Error, Result};
use crate::filter::{Capabilities, StateSpaceModel};
use crate::race::Coin;
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuCoxParams {
    pub ou: OuParams,
    pub lambda_max: f64,
    pub horizon: f64,
    pub intervals: usize,
    /// Mean and marginal variances of the independent Gaussian law of `X_0`.
    pub init_mean: [f64; 2],
    pub init_var: [f64; 2],
}

impl Default for OuCoxParams {
    fn default() -> Self {
        Self {
            ou: OuParams::default(),
            lambda_max: 2.1,
            horizon: 50.0,
            intervals: 10,
            init_mean: [0.0, 0.0],
            init_var: [4.0, 0.5],
        }
    }
}

impl OuCoxParams {
    pub fn validate(&self) -> Result<()> {
        self.ou.validate()?;
        if !(self.lambda_max > 0.0) || !self.lambda_max.is_finite() {
            return Err(Error::InvalidParameter(format!("λ_max = {}", self.lambda_max)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon = {}", self.horizon)));
        }
        if self.intervals == 0 {
            return Err(Error::InvalidParameter("interval count must be ≥ 1".into()));
        }
        if self.init_var.iter().any(|&v| !(v >= 0.0)) || self.init_mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("initial law".into()));
        }
        Ok(())
    }

    /// Interval end points `t_0 = 0 < t_1 < … < t_K = horizon`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.horizon / self.intervals as f64;
        (0..=self.intervals).map(|k| k as f64 * h).collect()
    }

    pub fn intensity(&self, x1: f64) -> f64 {
        self.lambda_max * sigmoid(x1)
    }
}

/// Intensity used to simulate the Cox data set, `2e^{−s/15} + e^{−((s−25)/10)²}`.
pub fn reference_intensity(s: f64) -> f64 {
    2.0 * (-s / 15.0).exp() + (-((s - 25.0) / 10.0).powi(2)).exp()
}

/// Arrivals of a Poisson process with intensity `λ ≤ lambda_max` on
/// `[0, horizon]`, by thinning a homogeneous process.
pub fn simulate_arrivals(
    intensity: impl Fn(f64) -> f64,
    lambda_max: f64,
    horizon: f64,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    let mean = lambda_max * horizon;
    let k = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
        .sample(stream) as usize;
    let mut times: Vec<f64> = (0..k).map(|_| stream.uniform() * horizon).collect();
    times.sort_by(f64::total_cmp);
    let mut kept = Vec::new();
    for t in times {
        let lam = intensity(t);
        if lam > lambda_max * (1.0 + 1e-12) {
            return Err(Error::ConfigBoundViolation(format!(
                "intensity {lam} at {t} exceeds λ_max = {lambda_max}"
            )));
        }
        if stream.uniform() * lambda_max < lam {
            kept.push(t);
        }
    }
    Ok(kept)
}

/// Latent path over one interval, known exactly at ascending knot times
/// (the interval ends and every arrival inside it).
#[derive(Debug, Clone, PartialEq)]
pub struct OuSkeleton {
    ou: OuParams,
    knots: Vec<(f64, Vector2<f64>)>,
}

impl OuSkeleton {
    /// Requires at least two knots with strictly increasing times.
    pub fn new(ou: OuParams, knots: Vec<(f64, Vector2<f64>)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InsufficientDraws {
                required: 2,
                got: knots.len(),
            });
        }
        if let Some(w) = knots.windows(2).find(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidTime {
                time: w[1].0,
                lower: w[0].0,
                upper: f64::INFINITY,
            });
        }
        Ok(Self { ou, knots })
    }

    pub fn knots(&self) -> &[(f64, Vector2<f64>)] {
        &self.knots
    }

    pub fn last(&self) -> &Vector2<f64> {
        &self.knots[self.knots.len() - 1].1
    }
}

impl LatentPath for OuSkeleton {
    fn interval(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Knot times return the stored value; other times are drawn jointly by
    /// conditioning on the previous sampled point and the next knot.
    fn sample_sorted(&self, times: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>> {
        let (t0, t1) = self.interval();
        let mut out = Vec::with_capacity(times.len());
        let mut left = self.knots[0];
        let mut next = 1;
        for &u in times {
            if !(u >= t0 && u <= t1) {
                return Err(Error::InvalidTime {
                    time: u,
                    lower: t0,
                    upper: t1,
                });
            }
            while next < self.knots.len() && self.knots[next].0 <= u {
                left = self.knots[next];
                next += 1;
            }
            if u == left.0 {
                out.push(left.1[0]);
                continue;
            }
            let right = &self.knots[next];
            let x = self
                .ou
                .bridge((left.0, &left.1), (right.0, &right.1), u)?
                .sample(stream);
            left = (u, x);
            out.push(x[0]);
        }
        Ok(out)
    }
}

/// `(c, coin)` for one interval: `c = Π λ(s_i)` over the arrivals and the
/// coin has success probability `exp(−∫λ)` over the path's interval.
pub fn cox_step_factorization<P: LatentPath>(
    path: P,
    arrivals: &[f64],
    lambda_max: f64,
    stream: &mut RandomStream,
) -> Result<(f64, CoxThinningCoin<P>)> {
    let (t0, t1) = path.interval();
    if let Some(&time) = arrivals.iter().find(|&&s| !(s >= t0 && s <= t1)) {
        return Err(Error::InvalidTime {
            time,
            lower: t0,
            upper: t1,
        });
    }
    let xs = path.sample_sorted(arrivals, stream)?;
    let c = xs.iter().map(|&x| lambda_max * sigmoid(x)).product();
    Ok((c, cox_thinning_coin(path, lambda_max)?))
}

/// Particle state: the path skeleton over the latest interval.
pub type CoxState = OuSkeleton;

/// Cox model bound to a set of arrival times.
#[derive(Debug, Clone)]
pub struct OuCoxModel {
    params: OuCoxParams,
    grid: Vec<f64>,
    /// Arrivals in `(t_k, t_{k+1}]`, with the first interval closed on the left.
    arrivals: Vec<Vec<f64>>,
}

impl OuCoxModel {
    pub fn new(params: OuCoxParams, mut arrivals: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if let Some(&time) = arrivals.iter().find(|&&s| !(s >= 0.0 && s <= params.horizon)) {
            return Err(Error::InvalidTime {
                time,
                lower: 0.0,
                upper: params.horizon,
            });
        }
        arrivals.sort_by(f64::total_cmp);
        let grid = params.grid();
        let per_interval = grid
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                arrivals
                    .iter()
                    .copied()
                    .filter(|&s| (s > w[0] || (k == 0 && s == w[0])) && s <= w[1])
                    .collect()
            })
            .collect();
        Ok(Self {
            params,
            grid,
            arrivals: per_interval,
        })
    }

    pub fn params(&self) -> &OuCoxParams {
        &self.params
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn arrivals_in(&self, step: usize) -> &[f64] {
        &self.arrivals[step]
    }

    fn initial(&self, stream: &mut RandomStream) -> Vector2<f64> {
        let p = &self.params;
        Vector2::new(
            p.init_mean[0] + p.init_var[0].sqrt() * stream.standard_normal(),
            p.init_mean[1] + p.init_var[1].sqrt() * stream.standard_normal(),
        )
    }
}

impl StateSpaceModel for OuCoxModel {
    type State = CoxState;
    type Coin = CoxThinningCoin<OuSkeleton>;

    fn num_steps(&self) -> usize {
        self.params.intervals
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            exact_weights: false,
            weight_estimates: true,
            factorizations: true,
        }
    }

    fn propose(&self, step: usize, prev: Option<&CoxState>, stream: &mut RandomStream) -> Result<CoxState> {
        let (t0, t1) = (self.grid[step], self.grid[step + 1]);
        let start = match prev {
            Some(p) => *p.last(),
            None => self.initial(stream),
        };
        let mut knots = vec![(t0, start)];
        let times = self.arrivals[step].iter().copied().chain(std::iter::once(t1));
        for t in times {
            let (tl, xl) = knots[knots.len() - 1];
            if t > tl {
                let x = self.params.ou.transition(&xl, tl, t)?.sample(stream);
                knots.push((t, x));
            }
        }
        OuSkeleton::new(self.params.ou, knots)
    }

    /// Intensity at the interval's right end.
    fn summary(&self, state: &CoxState) -> f64 {
        self.params.intensity(state.last()[0])
    }

    /// `c · Z` with `Z` one thinning-coin flip.
    fn weight_estimate(
        &self,
        step: usize,
        prev: Option<&CoxState>,
        state: &CoxState,
        stream: &mut RandomStream,
    ) -> Result<f64> {
        let (c, coin) = self.factorize(step, prev, state)?;
        Ok(if coin.flip(stream)? { c } else { 0.0 })
    }

    fn factorize(&self, step: usize, _: Option<&CoxState>, state: &CoxState) -> Result<(f64, Self::Coin)> {
        // Arrivals are knots, so evaluating them consumes no randomness.
        let mut unused = RandomStream::new(0, 0);
        cox_step_factorization(state.clone(), &self.arrivals[step], self.params.lambda_max, &mut unused)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coins::FixedPath;

    #[test]
    fn no_arrivals_and_vanishing_intensity() {
        let path = FixedPath::new(0.0, 1.0, |_| -1e6).unwrap();
        let (c, coin) = cox_step_factorization(path, &[], 2.0, &mut RandomStream::new(0, 0)).unwrap();
        assert_eq!(c, 1.0);
        let mut s = RandomStream::new(1, 0);
        assert!((0..1000).all(|_| coin.flip(&mut s).unwrap()));
    }

    #[test]
    fn single_arrival_half_intensity() {
        let lmax = 2.0;
        let path = FixedPath::new(0.0, 1.0, |_| 0.0).unwrap();
        let (c, coin) = cox_step_factorization(path, &[0.4], lmax, &mut RandomStream::new(0, 0)).unwrap();
        assert!((c - lmax / 2.0).abs() < 1e-15);
        let n = 1_000_000;
        let mut s = RandomStream::new(2, 0);
        let b = (0..n).filter(|_| coin.flip(&mut s).unwrap()).count() as f64 / n as f64;
        let target = (lmax / 2.0) * (-lmax / 2.0f64).exp();
        let se = c * (b * (1.0 - b) / n as f64).sqrt();
        assert!((c * b - target).abs() < 3.0 * se, "{} vs {target}", c * b);
    }

    #[test]
    fn arrival_outside_interval() {
        let path = FixedPath::new(0.0, 1.0, |_| 0.0).unwrap();
        assert!(matches!(
            cox_step_factorization(path, &[1.5], 2.0, &mut RandomStream::new(0, 0)),
            Err(Error::InvalidTime { .. })
        ));
    }

    #[test]
    fn homogeneous_thinning_count() {
        let (lmax, horizon, reps) = (2.0, 5.0, 10_000);
        let mut s = RandomStream::new(3, 0);
        let counts: Vec<f64> = (0..reps)
            .map(|_| simulate_arrivals(|_| lmax, lmax, horizon, &mut s).unwrap().len() as f64)
            .collect();
        let m = crate::stats::mean(&counts);
        let mu = lmax * horizon;
        assert!((m - mu).abs() < 3.0 * (mu / reps as f64).sqrt(), "{m}");
    }

    #[test]
    fn reference_intensity_below_default_bound() {
        let p = OuCoxParams::default();
        let sup = (0..=50_000)
            .map(|k| reference_intensity(k as f64 * 1e-3))
            .fold(0.0, f64::max);
        assert!(sup < p.lambda_max, "{sup}");
        assert!(sup > 2.0);
    }

    #[test]
    fn skeleton_returns_knot_values() {
        let ou = OuParams::default();
        let knots = vec![
            (0.0, Vector2::new(0.1, 0.0)),
            (0.5, Vector2::new(0.7, 0.2)),
            (1.0, Vector2::new(-0.3, 0.1)),
        ];
        let sk = OuSkeleton::new(ou, knots).unwrap();
        let mut s = RandomStream::new(4, 0);
        let xs = sk.sample_sorted(&[0.0, 0.25, 0.5, 0.75, 1.0], &mut s).unwrap();
        assert_eq!(xs[0], 0.1);
        assert_eq!(xs[2], 0.7);
        assert_eq!(xs[4], -0.3);
        assert!(xs[1].is_finite() && xs[3].is_finite());
    }

    #[test]
    fn arrivals_split_by_interval() {
        let p = OuCoxParams {
            horizon: 10.0,
            intervals: 2,
            ..Default::default()
        };
        let m = OuCoxModel::new(p, vec![0.0, 4.0, 5.0, 6.0, 10.0]).unwrap();
        assert_eq!(m.arrivals_in(0), &[0.0, 4.0, 5.0]);
        assert_eq!(m.arrivals_in(1), &[6.0, 10.0]);
    }

    #[test]
    fn proposals_pin_arrivals() {
        let p = OuCoxParams {
            horizon: 10.0,
            intervals: 2,
            ..Default::default()
        };
        let m = OuCoxModel::new(p, vec![1.0, 3.0, 7.0]).unwrap();
        let mut s = RandomStream::new(5, 0);
        let x0 = m.propose(0, None, &mut s).unwrap();
        let times: Vec<f64> = x0.knots().iter().map(|k| k.0).collect();
        assert_eq!(times, vec![0.0, 1.0, 3.0, 5.0]);
        let x1 = m.propose(1, Some(&x0), &mut s).unwrap();
        assert_eq!(x1.knots()[0].1, *x0.last());
        let (c, _) = m.factorize(1, Some(&x0), &x1).unwrap();
        let expect = p.intensity(x1.knots()[1].1[0]);
        assert!((c - expect).abs() < 1e-15);
    }
}
