use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Brownian bridge from `start` at time 0 to `end` at time `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianBridge {
    start: f64,
    end: f64,
    length: f64,
}

impl BrownianBridge {
    pub fn new(start: f64, end: f64, length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!("bridge length {length}")));
        }
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidParameter(format!("bridge endpoints {start}, {end}")));
        }
        Ok(Self { start, end, length })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Exact joint draw at `times` (any order, duplicates allowed), returned
    /// in the order given.
    pub fn sample_at(&self, times: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>> {
        self.check_times(times)?;
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out = vec![0.0; times.len()];
        let mut cursor = BridgeCursor::new(self);
        for i in order {
            out[i] = cursor.advance(times[i], stream);
        }
        Ok(out)
    }

    /// As [`sample_at`](Self::sample_at) for times already sorted ascending.
    pub fn sample_sorted(&self, times: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>> {
        self.check_times(times)?;
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        let mut cursor = BridgeCursor::new(self);
        Ok(times.iter().map(|&t| cursor.advance(t, stream)).collect())
    }

    fn check_times(&self, times: &[f64]) -> Result<()> {
        match times.iter().find(|&&t| !(t > 0.0 && t < self.length)) {
            Some(&time) => Err(Error::InvalidTime {
                time,
                lower: 0.0,
                upper: self.length,
            }),
            None => Ok(()),
        }
    }
}

/// Sequential conditioning: the next point given the last sampled one and the
/// pinned endpoint.
pub(crate) struct BridgeCursor {
    time: f64,
    value: f64,
    end: f64,
    length: f64,
}

impl BridgeCursor {
    pub(crate) fn new(bridge: &BrownianBridge) -> Self {
        Self {
            time: 0.0,
            value: bridge.start,
            end: bridge.end,
            length: bridge.length,
        }
    }

    /// `t` must not precede the previous call's time.
    #[inline]
    pub(crate) fn advance(&mut self, t: f64, stream: &mut RandomStream) -> f64 {
        let remaining = self.length - self.time;
        let step = t - self.time;
        if step > 0.0 {
            let frac = step / remaining;
            let mean = self.value + frac * (self.end - self.value);
            let var = step * (self.length - t) / remaining;
            self.value = mean + var.max(0.0).sqrt() * stream.standard_normal();
            self.time = t;
        }
        self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_times() {
        let b = BrownianBridge::new(0.0, 1.0, 1.0).unwrap();
        assert!(b.sample_at(&[], &mut RandomStream::new(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn times_outside_interval_rejected() {
        let b = BrownianBridge::new(0.0, 1.0, 2.0).unwrap();
        let mut s = RandomStream::new(0, 0);
        assert!(matches!(
            b.sample_at(&[0.5, 2.0], &mut s),
            Err(Error::InvalidTime { .. })
        ));
        assert!(matches!(b.sample_at(&[0.0], &mut s), Err(Error::InvalidTime { .. })));
        assert!(BrownianBridge::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn duplicates_share_a_value() {
        let b = BrownianBridge::new(0.0, 1.0, 1.0).unwrap();
        let v = b.sample_at(&[0.7, 0.3, 0.7], &mut RandomStream::new(4, 0)).unwrap();
        assert_eq!(v[0], v[2]);
    }

    fn moments(b: &BrownianBridge, t: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut s = RandomStream::new(seed, 0);
        let xs: Vec<f64> = (0..n).map(|_| b.sample_at(&[t], &mut s).unwrap()[0]).collect();
        let m = crate::stats::mean(&xs);
        (m, crate::stats::sample_variance(&xs).unwrap())
    }

    #[test]
    fn midpoint_variance() {
        let b = BrownianBridge::new(0.0, 0.0, 1.0).unwrap();
        let (_, v) = moments(&b, 0.5, 100_000, 1);
        assert!((v - 0.25).abs() < 0.005, "{v}");
    }

    #[test]
    fn midpoint_mean() {
        let b = BrownianBridge::new(0.0, 2.0, 1.0).unwrap();
        let (m, _) = moments(&b, 0.5, 100_000, 2);
        assert!((m - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn marginal_law_random_configurations() {
        let mut gen = RandomStream::new(77, 0);
        let n = 40_000;
        for k in 0..5 {
            let x = gen.uniform_in(-2.0, 2.0);
            let y = gen.uniform_in(-2.0, 2.0);
            let dt = gen.uniform_in(0.2, 3.0);
            let t = dt * gen.uniform_in(0.05, 0.95);
            let b = BrownianBridge::new(x, y, dt).unwrap();
            // Sample jointly with an earlier point so the sequential path is exercised.
            let mut s = RandomStream::new(k, 1);
            let xs: Vec<f64> = (0..n).map(|_| b.sample_at(&[t, t / 2.0], &mut s).unwrap()[0]).collect();
            let m = crate::stats::mean(&xs);
            let v = crate::stats::sample_variance(&xs).unwrap();
            let true_m = x + t / dt * (y - x);
            let true_v = t * (dt - t) / dt;
            assert!(
                (m - true_m).abs() < 3.0 * (true_v / n as f64).sqrt(),
                "mean {m} vs {true_m}"
            );
            // sd of the sample variance for Gaussian data is v·sqrt(2/(n-1)).
            assert!(
                (v - true_v).abs() < 3.0 * true_v * (2.0 / (n - 1) as f64).sqrt(),
                "var {v} vs {true_v}"
            );
        }
    }
}
