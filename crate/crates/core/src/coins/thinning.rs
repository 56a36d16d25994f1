use super::RANGE_TOLERANCE;
use crate::error::{Error, Result};
use crate::race::Coin;
use crate::rng::RandomStream;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A latent path on `[t0, t1]` whose first coordinate drives the intensity
/// `λ(s) = λ_max · sigmoid(X_{1,s})`.
pub trait LatentPath: Send + Sync {
    fn interval(&self) -> (f64, f64);

    /// Joint draw of `X_1` at ascending `times` inside the interval. Paths
    /// that are already fully known just evaluate themselves.
    fn sample_sorted(&self, times: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>>;
}

/// A deterministic path given as a function of time.
#[derive(Clone)]
pub struct FixedPath<F> {
    t0: f64,
    t1: f64,
    x: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FixedPath<F> {
    pub fn new(t0: f64, t1: f64, x: F) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::InvalidTime {
                time: t1,
                lower: t0,
                upper: f64::INFINITY,
            });
        }
        Ok(Self { t0, t1, x })
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> LatentPath for FixedPath<F> {
    fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn sample_sorted(&self, times: &[f64], _: &mut RandomStream) -> Result<Vec<f64>> {
        Ok(times.iter().map(|&t| (self.x)(t)).collect())
    }
}

/// Coin with success probability `exp(−∫_{t0}^{t1} λ(s) ds)` by thinning:
/// `K ~ Poisson(λ_max (t1 − t0))` uniform times `U_i`, success iff every
/// `V_i < (λ_max − λ(U_i))/λ_max`.
#[derive(Debug, Clone)]
pub struct CoxThinningCoin<P> {
    path: P,
    lambda_max: f64,
}

pub fn cox_thinning_coin<P: LatentPath>(path: P, lambda_max: f64) -> Result<CoxThinningCoin<P>> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::InvalidParameter(format!("λ_max {lambda_max}")));
    }
    Ok(CoxThinningCoin { path, lambda_max })
}

impl<P> CoxThinningCoin<P> {
    pub fn path(&self) -> &P {
        &self.path
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }
}

impl<P: LatentPath> Coin for CoxThinningCoin<P> {
    fn flip(&self, stream: &mut RandomStream) -> Result<bool> {
        use rand_distr::{Distribution, Poisson};

        let (t0, t1) = self.path.interval();
        let mean = self.lambda_max * (t1 - t0);
        let k = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
            .sample(stream) as usize;
        if k == 0 {
            return Ok(true);
        }
        let mut times: Vec<f64> = (0..k).map(|_| stream.uniform_in(t0, t1)).collect();
        times.sort_by(f64::total_cmp);
        let xs = self.path.sample_sorted(&times, stream)?;
        for x in xs {
            let intensity = self.lambda_max * sigmoid(x);
            if intensity > self.lambda_max * (1.0 + RANGE_TOLERANCE) {
                return Err(Error::ConfigBoundViolation(format!(
                    "intensity {intensity} exceeds λ_max = {}",
                    self.lambda_max
                )));
            }
            if stream.uniform() >= (self.lambda_max - intensity) / self.lambda_max {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
