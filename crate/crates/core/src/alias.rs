//! Walker alias tables built with Vose's two-worklist construction.

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Cells scaled to within this distance of 1 are treated as full.
const FULL_CELL_TOLERANCE: f64 = 1e-12;

/// Preprocessed categorical distribution with constant-time draws.
///
/// Cell `i` keeps index `i` with probability `probabilities[i]` and otherwise
/// hands the draw to `aliases[i]`. Immutable once built and `Sync`, so one
/// table can serve any number of workers.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    probabilities: Vec<f64>,
    aliases: Vec<usize>,
    total_weight: f64,
}

impl AliasTable {
    /// Builds the table in O(N). Zero weights are allowed as long as at least
    /// one weight is positive; zero-weight indices are never drawn.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
        }
        let total_weight: f64 = weights.iter().sum();
        if !(total_weight > 0.0) || !total_weight.is_finite() {
            return Err(Error::InvalidWeights(format!(
                "weights must have a finite positive sum, got {total_weight}"
            )));
        }

        let n = weights.len();
        let scale = n as f64 / total_weight;
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let mut probabilities = vec![1.0; n];
        let mut aliases: Vec<usize> = (0..n).collect();

        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 - FULL_CELL_TOLERANCE {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&l), Some(&g)) = (small.last(), large.last()) {
            small.pop();
            probabilities[l] = scaled[l];
            aliases[l] = g;
            // (p_g + p_l) - 1 loses less than p_g - (1 - p_l) when p_l is tiny.
            scaled[g] = (scaled[g] + scaled[l]) - 1.0;
            if scaled[g] < 1.0 - FULL_CELL_TOLERANCE {
                large.pop();
                small.push(g);
            }
        }

        // Leftovers are full cells up to rounding.
        for g in large {
            probabilities[g] = 1.0;
            aliases[g] = g;
        }
        let fallback = weights.iter().position(|&w| w > 0.0).unwrap_or(0);
        for l in small {
            if weights[l] > 0.0 {
                probabilities[l] = 1.0;
                aliases[l] = l;
            } else {
                probabilities[l] = 0.0;
                aliases[l] = fallback;
            }
        }

        Ok(Self {
            probabilities,
            aliases,
            total_weight,
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Sum of the input weights.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn aliases(&self) -> &[usize] {
        &self.aliases
    }

    /// One index with probability proportional to its weight: a uniform cell
    /// and a uniform threshold.
    #[inline]
    pub fn draw(&self, stream: &mut RandomStream) -> usize {
        let cell = stream.index(self.probabilities.len());
        if stream.uniform() < self.probabilities[cell] {
            cell
        } else {
            self.aliases[cell]
        }
    }

    /// Probability mass each index receives from the table (own cell plus
    /// alias contributions). Matches the normalised input weights.
    pub fn reconstructed_masses(&self) -> Vec<f64> {
        let n = self.len();
        let cell = 1.0 / n as f64;
        let mut mass: Vec<f64> = self.probabilities.iter().map(|p| p * cell).collect();
        for (i, (&p, &a)) in self.probabilities.iter().zip(&self.aliases).enumerate() {
            if a != i {
                mass[a] += (1.0 - p) * cell;
            }
        }
        mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_gof;
    use proptest::prelude::*;

    fn assert_masses(weights: &[f64]) {
        let table = AliasTable::new(weights).unwrap();
        let total: f64 = weights.iter().sum();
        for (i, m) in table.reconstructed_masses().iter().enumerate() {
            let target = weights[i] / total;
            let err = (m - target).abs();
            assert!(
                err <= 1e-12 * target.max(f64::MIN_POSITIVE) || (target == 0.0 && *m == 0.0),
                "index {i}: mass {m} vs {target}"
            );
        }
    }

    #[test]
    fn single_category() {
        let table = AliasTable::new(&[1.0]).unwrap();
        let mut s = RandomStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(table.draw(&mut s), 0);
        }
    }

    #[test]
    fn uniform_weights_reconstruct_quarter_mass() {
        let table = AliasTable::new(&[1.0; 4]).unwrap();
        for m in table.reconstructed_masses() {
            assert_eq!(m, 0.25);
        }
    }

    #[test]
    fn zero_mass_category_never_drawn() {
        let table = AliasTable::new(&[0.0, 1.0]).unwrap();
        let mut s = RandomStream::new(2, 0);
        for _ in 0..100_000 {
            assert_eq!(table.draw(&mut s), 1);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(AliasTable::new(&[]), Err(Error::InvalidWeights(_))));
        assert!(matches!(AliasTable::new(&[1.0, -0.1]), Err(Error::InvalidWeights(_))));
        assert!(matches!(AliasTable::new(&[f64::NAN]), Err(Error::InvalidWeights(_))));
        assert!(matches!(
            AliasTable::new(&[f64::INFINITY, 1.0]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(AliasTable::new(&[0.0, 0.0]), Err(Error::InvalidWeights(_))));
    }

    #[test]
    fn frequencies_match_three_categories() {
        let weights = [0.2, 0.3, 0.5];
        let table = AliasTable::new(&weights).unwrap();
        let mut s = RandomStream::new(11, 0);
        let mut counts = [0u64; 3];
        let n = 1_000_000;
        for _ in 0..n {
            counts[table.draw(&mut s)] += 1;
        }
        let (_, p) = chi_square_gof(&counts, &weights).unwrap();
        assert!(p > 0.01, "chi-square p = {p}");
        for (c, w) in counts.iter().zip(weights) {
            let f = *c as f64 / n as f64;
            let sd = (w * (1.0 - w) / n as f64).sqrt();
            assert!((f - w).abs() < 3.0 * sd, "{f} vs {w}");
        }
    }

    #[test]
    fn two_to_one_frequency() {
        let table = AliasTable::new(&[2.0, 1.0]).unwrap();
        let mut s = RandomStream::new(12, 0);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| table.draw(&mut s) == 0).count();
        let f = zeros as f64 / n as f64;
        assert!((f - 2.0 / 3.0).abs() < 0.0015, "{f}");
    }

    #[test]
    fn randomized_weight_vectors_pass_chi_square() {
        // 60 tests at level 0.01: the rejection count is Binomial(60, 0.01)
        // under a correct sampler, and P(count ≥ 4) ≈ 0.003.
        let mut gen = RandomStream::new(99, 1);
        let mut rejected = Vec::new();
        for &size in &[2usize, 10, 1000] {
            for rep in 0..20 {
                let weights: Vec<f64> = (0..size).map(|_| gen.uniform() + 0.01).collect();
                let table = AliasTable::new(&weights).unwrap();
                let mut s = RandomStream::new(100 + rep, size as u64);
                let draws = 200 * size.max(50);
                let mut counts = vec![0u64; size];
                for _ in 0..draws {
                    counts[table.draw(&mut s)] += 1;
                }
                let (_, p) = chi_square_gof(&counts, &weights).unwrap();
                if p <= 0.01 {
                    rejected.push((size, rep, p));
                }
            }
        }
        assert!(rejected.len() <= 3, "{rejected:?}");
    }

    #[test]
    fn tiny_and_zero_weights_reconstruct() {
        assert_masses(&[1e-300, 1.0, 0.0, 3.5, 1e-9]);
        assert_masses(&[0.0, 0.0, 5.0]);
    }

    proptest! {
        #[test]
        fn mass_reconstruction(weights in prop::collection::vec(0.0f64..1e6, 1..200)) {
            prop_assume!(weights.iter().any(|&w| w > 0.0));
            assert_masses(&weights);
        }
    }
}
