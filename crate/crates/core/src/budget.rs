//! Search budget: seeds, iteration counts, and the tolerances that govern
//! every semi-decision search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Threshold for treating `x_i != y_i` in pair comparisons.
pub const PAIR_TOL: f64 = 1e-9;
/// Near-duplicate roots within this inf-distance are merged.
pub const MERGE_TOL: f64 = 1e-6;
/// Newton stops when the step or the system inf-norm falls below this.
pub const NEWTON_TOL: f64 = 1e-12;

/// Controls for all randomized searches. Identical budgets (including the
/// seed) give bitwise-identical results.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBudget {
    pub seed: u64,
    /// Random starts per support subsystem, in addition to the all-ones point.
    pub multistarts: usize,
    pub newton_max_iter: usize,
    /// Sample count for checker searches (random points, pairs, q vectors).
    pub samples: usize,
    /// Feasibility slack: components may dip this far below zero.
    pub feas_tol: f64,
    /// A point is accepted as a solution when its residual is below this.
    pub accept_tol: f64,
    /// Components above this are counted in the support.
    pub support_tol: f64,
    /// A violation must exceed this before a witness is claimed.
    pub falsify_tol: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            seed: 42,
            multistarts: 8,
            newton_max_iter: 100,
            samples: 200,
            feas_tol: 1e-9,
            accept_tol: 1e-8,
            support_tol: 1e-7,
            falsify_tol: 1e-7,
        }
    }
}

impl SearchBudget {
    pub fn with_seed(seed: u64) -> Self {
        SearchBudget {
            seed,
            ..SearchBudget::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.multistarts == 0 || self.newton_max_iter == 0 || self.samples == 0 {
            return Err("all counts must be at least 1".into());
        }
        for (name, v) in [
            ("feas_tol", self.feas_tol),
            ("accept_tol", self.accept_tol),
            ("support_tol", self.support_tol),
            ("falsify_tol", self.falsify_tol),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Independent random stream for a task; `tag` identifies the task so the
    /// stream does not depend on scheduling order.
    pub(crate) fn stream(&self, tag: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(tag);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn default_budget_is_valid() {
        assert!(SearchBudget::default().validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut b = SearchBudget::default();
        b.multistarts = 0;
        assert!(b.validate().is_err());
        let mut b = SearchBudget::default();
        b.accept_tol = 0.0;
        assert!(b.validate().is_err());
        let mut b = SearchBudget::default();
        b.falsify_tol = -1.0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn streams_are_deterministic_and_independent() {
        let b = SearchBudget::with_seed(9);
        let a: Vec<f64> = b.stream(3).random_iter().take(4).collect();
        let a2: Vec<f64> = b.stream(3).random_iter().take(4).collect();
        assert_eq!(a, a2);
        let c: Vec<f64> = b.stream(4).random_iter().take(4).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn stream_drawing_more_keeps_prefix() {
        let b = SearchBudget::with_seed(5);
        let mut r1 = b.stream(0);
        let mut r2 = b.stream(0);
        let short: Vec<u64> = (0..3).map(|_| r1.random()).collect();
        let long: Vec<u64> = (0..10).map(|_| r2.random()).collect();
        assert_eq!(short, long[..3]);
    }
}
