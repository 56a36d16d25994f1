use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Ancestry of a particle system stored as per-step values plus the
/// resampling selections, so full paths cost O(NT) indices and are only
/// materialised on demand.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Genealogy {
    /// `values[t][i]`: summary of proposed particle `i` at step `t`.
    values: Vec<Vec<f64>>,
    /// `selections[t][j]`: proposed index kept in slot `j` after resampling at step `t`.
    /// Proposed particle `i` at step `t + 1` descends from slot `i` at step `t`.
    selections: Vec<Vec<usize>>,
}

impl Genealogy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, values: Vec<f64>, selection: Vec<usize>) {
        debug_assert_eq!(values.len(), selection.len());
        self.values.push(values);
        self.selections.push(selection);
    }

    pub fn num_steps(&self) -> usize {
        self.values.len()
    }

    pub fn num_particles(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn selections(&self) -> &[Vec<usize>] {
        &self.selections
    }

    /// Path `x_{1:T}` of the particle in final slot `slot`.
    pub fn trajectory(&self, slot: usize) -> Vec<f64> {
        let steps = self.num_steps();
        let mut path = vec![0.0; steps];
        let mut s = slot;
        for t in (0..steps).rev() {
            let idx = self.selections[t][s];
            path[t] = self.values[t][idx];
            s = idx;
        }
        path
    }

    pub fn trajectories(&self) -> Vec<Vec<f64>> {
        (0..self.num_particles()).map(|j| self.trajectory(j)).collect()
    }

    /// Resampled (equally weighted) particle values at `step`.
    pub fn snapshot(&self, step: usize) -> Result<Vec<f64>> {
        if step >= self.num_steps() {
            return Err(Error::InvalidStep {
                step,
                available: self.num_steps(),
            });
        }
        Ok(self.selections[step].iter().map(|&k| self.values[step][k]).collect())
    }

    /// Every selection points at a valid proposed index.
    pub fn is_consistent(&self) -> bool {
        let n = self.num_particles();
        self.values.iter().all(|v| v.len() == n)
            && self.selections.iter().all(|s| s.len() == n && s.iter().all(|&k| k < n))
    }
}

/// Test functions of a full path `x_{1:T}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TestFunction {
    /// `h1 = (1/T) Σ_t x_t`
    PathMean,
    /// `h2 = ‖x_{1:T}‖₂`
    PathNorm,
    /// `h3 = x_T`
    Terminal,
    /// `h4 = (x_T − x̄_T)²` with `x̄_T` the ensemble mean at `T`
    TerminalSpread,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::PathMean,
        TestFunction::PathNorm,
        TestFunction::Terminal,
        TestFunction::TerminalSpread,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TestFunction::PathMean => "h1",
            TestFunction::PathNorm => "h2",
            TestFunction::Terminal => "h3",
            TestFunction::TerminalSpread => "h4",
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Equally weighted averages `(1/N) Σ_i h(X^i_{1:T})` over the resampled paths.
pub fn estimate_functionals(genealogy: &Genealogy, functions: &[TestFunction]) -> BTreeMap<String, f64> {
    let paths = genealogy.trajectories();
    estimate_on_paths(&paths, functions)
}

pub(crate) fn estimate_on_paths(paths: &[Vec<f64>], functions: &[TestFunction]) -> BTreeMap<String, f64> {
    let n = paths.len() as f64;
    let terminal_mean = paths.iter().map(|p| *p.last().unwrap()).sum::<f64>() / n;
    functions
        .iter()
        .map(|&h| {
            let total: f64 = paths
                .iter()
                .map(|p| {
                    let last = *p.last().unwrap();
                    match h {
                        TestFunction::PathMean => p.iter().sum::<f64>() / p.len() as f64,
                        TestFunction::PathNorm => p.iter().map(|x| x * x).sum::<f64>().sqrt(),
                        TestFunction::Terminal => last,
                        TestFunction::TerminalSpread => (last - terminal_mean).powi(2),
                    }
                })
                .sum();
            (h.label().to_string(), total / n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_paths() {
        let v = 1.5;
        let paths = vec![vec![v; 4]; 3];
        let est = estimate_on_paths(&paths, &TestFunction::ALL);
        assert_eq!(est["h1"], v);
        assert_eq!(est["h3"], v);
        assert_eq!(est["h4"], 0.0);
        assert!((est["h2"] - 2.0 * v).abs() < 1e-15);
    }

    #[test]
    fn two_terminal_values() {
        let paths = vec![vec![0.0], vec![2.0]];
        let est = estimate_on_paths(&paths, &[TestFunction::Terminal, TestFunction::TerminalSpread]);
        assert_eq!(est["h3"], 1.0);
        assert_eq!(est["h4"], 1.0);
    }

    #[test]
    fn trajectories_follow_selections() {
        let mut g = Genealogy::new();
        g.push(vec![10.0, 11.0], vec![1, 1]);
        g.push(vec![20.0, 21.0], vec![0, 0]);
        g.push(vec![30.0, 31.0], vec![1, 0]);
        assert!(g.is_consistent());
        // slot 0 at the end holds proposed 1 at step 2, whose parent is slot 1 at step 1
        // (proposed 0 there), whose parent is slot 0 at step 0 (proposed 1).
        assert_eq!(g.trajectory(0), vec![11.0, 20.0, 31.0]);
        assert_eq!(g.trajectory(1), vec![11.0, 20.0, 30.0]);
        assert_eq!(g.snapshot(0).unwrap(), vec![11.0, 11.0]);
        assert_eq!(g.snapshot(3), Err(Error::InvalidStep { step: 3, available: 3 }));
    }
}
