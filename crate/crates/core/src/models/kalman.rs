use serde::Serialize;

use super::gaussian::{normal_log_pdf, GaussianSsmParams};
use crate::error::Result;

/// Exact filtering moments and log-likelihood of the linear Gaussian model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KalmanOutput {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub log_likelihood: f64,
}

/// Kalman filter started from `X_1 ~ N(0, init_var)`.
pub fn kalman_reference(params: &GaussianSsmParams, observations: &[f64]) -> Result<KalmanOutput> {
    params.validate()?;
    let mut means = Vec::with_capacity(observations.len());
    let mut variances = Vec::with_capacity(observations.len());
    let mut log_likelihood = 0.0;
    let (mut m, mut p) = (0.0, params.init_var);
    for (t, &y) in observations.iter().enumerate() {
        if t > 0 {
            m *= params.a;
            p = params.a * params.a * p + params.state_var;
        }
        let s = p + params.obs_var;
        log_likelihood += normal_log_pdf(y, m, s);
        let gain = p / s;
        m += gain * (y - m);
        p *= 1.0 - gain;
        means.push(m);
        variances.push(p);
    }
    Ok(KalmanOutput {
        means,
        variances,
        log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_step_by_hand() {
        let out = kalman_reference(&GaussianSsmParams::default(), &[0.0]).unwrap();
        assert_eq!(out.means, vec![0.0]);
        assert!((out.variances[0] - 2.5).abs() < 1e-15);
        assert!((out.log_likelihood + 0.5 * (20.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn uncoupled_steps() {
        let params = GaussianSsmParams {
            a: 0.0,
            state_var: 5.0,
            obs_var: 5.0,
            init_var: 5.0,
        };
        let ys = [1.0, -2.0, 3.0];
        let out = kalman_reference(&params, &ys).unwrap();
        for (k, &y) in ys.iter().enumerate() {
            assert!((out.means[k] - y / 2.0).abs() < 1e-15);
        }
        let ll: f64 = ys.iter().map(|&y| normal_log_pdf(y, 0.0, 10.0)).sum();
        assert!((out.log_likelihood - ll).abs() < 1e-12);
    }

    #[test]
    fn variances_ignore_data() {
        let p = GaussianSsmParams::default();
        let a = kalman_reference(&p, &[0.0, 1.0, 2.0]).unwrap();
        let b = kalman_reference(&p, &[9.0, -4.0, 0.5]).unwrap();
        assert_eq!(a.variances, b.variances);
    }

    #[test]
    fn rejects_bad_variance() {
        let p = GaussianSsmParams {
            init_var: -1.0,
            ..Default::default()
        };
        assert!(kalman_reference(&p, &[0.0]).is_err());
    }
}
