//! Integrated Ornstein–Uhlenbeck prior `dX = A X dt + h dB` with
//! `A = [[0, 1], [0, θ]]`, `h = (0, σ)ᵀ` and `θ < 0`.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub theta: f64,
    pub sigma: f64,
}

impl Default for OuParams {
    fn default() -> Self {
        Self {
            theta: -1.0,
            sigma: 1.0,
        }
    }
}

/// Gaussian law of `X_s` given `X_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTransition {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl GaussianTransition {
    pub fn sample(&self, stream: &mut RandomStream) -> Vector2<f64> {
        sample_gaussian2(&self.mean, &self.cov, stream)
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta < 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "θ must be negative, got {}",
                self.theta
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "σ must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn drift(&self) -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, 0.0, self.theta)
    }

    pub fn diffusion(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.sigma)
    }

    /// `exp(A t) = [[1, (e^{θt} − 1)/θ], [0, e^{θt}]]`.
    pub fn transition_matrix(&self, t: f64) -> Matrix2<f64> {
        let th = self.theta;
        Matrix2::new(1.0, (th * t).exp_m1() / th, 0.0, (th * t).exp())
    }

    /// `Q(r, s) = ∫_r^s e^{−At} h hᵀ e^{−Aᵀt} dt` in closed form.
    pub fn q_matrix(&self, r: f64, s: f64) -> Matrix2<f64> {
        let (th, s2) = (self.theta, self.sigma * self.sigma);
        let e = |k: f64, t: f64| (-k * th * t).exp();
        let q11 =
            s2 / (2.0 * th.powi(3)) * (e(2.0, r) - e(2.0, s) - 4.0 * e(1.0, r) + 4.0 * e(1.0, s) + 2.0 * th * (s - r));
        let q12 = s2 / (2.0 * th * th) * (e(2.0, r) - e(2.0, s)) - s2 / (th * th) * (e(1.0, r) - e(1.0, s));
        let q22 = s2 / (2.0 * th) * (e(2.0, r) - e(2.0, s));
        Matrix2::new(q11, q12, q12, q22)
    }

    /// Covariance of `X_{r+t}` given `X_r`, `∫₀^t e^{Au} h hᵀ e^{Aᵀu} du`.
    ///
    /// Equal to `e^{At} Q(0, t) e^{Aᵀt}` but evaluated with `expm1` so that it
    /// neither overflows for long steps nor cancels for short ones.
    pub fn transition_covariance(&self, t: f64) -> Matrix2<f64> {
        let (th, s2) = (self.theta, self.sigma * self.sigma);
        let e1 = (th * t).exp_m1();
        let e2 = (2.0 * th * t).exp_m1();
        let c22 = s2 * e2 / (2.0 * th);
        let c12 = s2 / (th * th) * (0.5 * e2 - e1);
        let c11 = s2 / (th * th) * (e2 / (2.0 * th) - 2.0 * e1 / th + t);
        Matrix2::new(c11, c12, c12, c22)
    }

    /// Exact law of `X_s` given `X_r = x`.
    pub fn transition(&self, x: &Vector2<f64>, r: f64, s: f64) -> Result<GaussianTransition> {
        if !(s > r) {
            return Err(Error::InvalidTime {
                time: s,
                lower: r,
                upper: f64::INFINITY,
            });
        }
        let dt = s - r;
        Ok(GaussianTransition {
            mean: self.transition_matrix(dt) * x,
            cov: self.transition_covariance(dt),
        })
    }

    /// Law of `X_u` given `X_l = x_l` and `X_r = x_r` for `l < u < r`.
    pub fn bridge(
        &self,
        (l, x_l): (f64, &Vector2<f64>),
        (r, x_r): (f64, &Vector2<f64>),
        u: f64,
    ) -> Result<GaussianTransition> {
        if !(u > l && u < r) {
            return Err(Error::InvalidTime {
                time: u,
                lower: l,
                upper: r,
            });
        }
        let phi1 = self.transition_matrix(u - l);
        let c1 = self.transition_covariance(u - l);
        let phi2 = self.transition_matrix(r - u);
        let c2 = self.transition_covariance(r - u);
        let s = phi2 * c1 * phi2.transpose() + c2;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter(format!("singular bridge covariance on ({l}, {r})")))?;
        let gain = c1 * phi2.transpose() * s_inv;
        let prior_mean = phi1 * x_l;
        let mean = prior_mean + gain * (x_r - phi2 * prior_mean);
        let cov = c1 - gain * phi2 * c1;
        Ok(GaussianTransition {
            mean,
            cov: 0.5 * (cov + cov.transpose()),
        })
    }
}

/// Draw from `N(mean, cov)` through the symmetric eigendecomposition, with
/// round-off negative eigenvalues clipped to zero.
pub fn sample_gaussian2(mean: &Vector2<f64>, cov: &Matrix2<f64>, stream: &mut RandomStream) -> Vector2<f64> {
    let eig = SymmetricEigen::new(*cov);
    let z = Vector2::new(
        eig.eigenvalues[0].max(0.0).sqrt() * stream.standard_normal(),
        eig.eigenvalues[1].max(0.0).sqrt() * stream.standard_normal(),
    );
    mean + eig.eigenvectors * z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tiny_step_is_identity() {
        let p = OuParams::default();
        let m = p.transition_matrix(1e-12);
        assert_relative_eq!(m, Matrix2::identity(), epsilon = 1e-11);
        assert!(p.transition_covariance(1e-12).abs().max() < 1e-11);
    }

    #[test]
    fn unit_step_matrix() {
        let p = OuParams::default();
        let e = (-1.0f64).exp();
        assert_relative_eq!(
            p.transition_matrix(1.0),
            Matrix2::new(1.0, 1.0 - e, 0.0, e),
            epsilon = 1e-15
        );
    }

    #[test]
    fn covariance_agrees_with_q_form() {
        for (theta, sigma, t) in [(-1.0, 1.0, 1.0), (-0.5, 2.0, 0.3), (-2.0, 0.7, 2.5)] {
            let p = OuParams { theta, sigma };
            let phi = p.transition_matrix(t);
            let via_q = phi * p.q_matrix(0.0, t) * phi.transpose();
            assert_relative_eq!(p.transition_covariance(t), via_q, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn q_is_additive() {
        let p = OuParams {
            theta: -0.8,
            sigma: 1.3,
        };
        let whole = p.q_matrix(0.2, 1.7);
        let parts = p.q_matrix(0.2, 0.9) + p.q_matrix(0.9, 1.7);
        assert_relative_eq!(whole, parts, max_relative = 1e-12);
    }

    #[test]
    fn covariances_are_psd() {
        let mut s = RandomStream::new(1, 0);
        for _ in 0..20 {
            let p = OuParams {
                theta: -s.uniform_in(0.05, 3.0),
                sigma: s.uniform_in(0.1, 3.0),
            };
            let r = s.uniform_in(0.0, 10.0);
            let dt = s.uniform_in(0.01, 5.0);
            let tr = p.transition(&Vector2::new(0.3, -0.2), r, r + dt).unwrap();
            assert_eq!(tr.cov[(0, 1)], tr.cov[(1, 0)]);
            let eig = SymmetricEigen::new(tr.cov);
            assert!(eig.eigenvalues.iter().all(|&v| v >= -1e-12), "{:?}", eig.eigenvalues);
        }
    }

    #[test]
    fn non_increasing_times_rejected() {
        let p = OuParams::default();
        assert!(matches!(
            p.transition(&Vector2::zeros(), 1.0, 1.0),
            Err(Error::InvalidTime { .. })
        ));
    }

    #[test]
    fn bridge_matches_joint_conditioning() {
        // Condition the joint law of (X_u, X_r) using the one-shot covariance
        // over [l, r] rather than the composed two-step form.
        let p = OuParams {
            theta: -0.7,
            sigma: 1.4,
        };
        let xl = Vector2::new(0.5, -0.3);
        let xr = Vector2::new(1.0, 0.4);
        let (l, u, r) = (0.0, 0.7, 2.0);
        let b = p.bridge((l, &xl), (r, &xr), u).unwrap();

        let c_u = p.transition_covariance(u - l);
        let cross = p.transition_matrix(r - u) * c_u;
        let c_r = p.transition_covariance(r - l);
        let k = cross.transpose() * c_r.try_inverse().unwrap();
        let mean = p.transition_matrix(u - l) * xl + k * (xr - p.transition_matrix(r - l) * xl);
        let cov = c_u - k * cross;
        assert_relative_eq!(b.mean, mean, max_relative = 1e-10);
        assert_relative_eq!(b.cov, cov, max_relative = 1e-8, epsilon = 1e-12);

        let mut s = RandomStream::new(2, 0);
        let n = 200_000;
        let mut acc = Vector2::zeros();
        for _ in 0..n {
            acc += b.sample(&mut s);
        }
        let m = acc / n as f64;
        for k in 0..2 {
            assert!((m[k] - b.mean[k]).abs() < 4.0 * (b.cov[(k, k)] / n as f64).sqrt());
        }
    }

    #[test]
    fn bridge_collapses_at_endpoints() {
        let p = OuParams::default();
        let xl = Vector2::new(0.5, -0.3);
        let xr = Vector2::new(1.0, 0.4);
        let near = p.bridge((0.0, &xl), (2.0, &xr), 2.0 - 1e-7).unwrap();
        assert!((near.mean - xr).norm() < 1e-4);
    }

    #[test]
    fn invalid_params() {
        assert!(OuParams { theta: 0.0, sigma: 1.0 }.validate().is_err());
        assert!(OuParams {
            theta: -1.0,
            sigma: 0.0
        }
        .validate()
        .is_err());
    }
}
