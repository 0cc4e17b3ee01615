//! Seeded sample sets and residual checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_SAMPLES: usize = 100;
pub const LAW_SAMPLES: usize = 25;
/// Tolerance for identities that hold exactly in jet arithmetic.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for identities routed through the integrator.
pub const NUMERIC_TOL: f64 = 1e-6;
/// Default time grid for flow laws.
pub const TIME_GRID: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` points uniform in `[lo, hi]^dim`.
pub fn uniform_points(seed: u64, count: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| r.random_range(lo..=hi)).collect())
        .collect()
}

/// Default sample set: 100 points in `[-2, 2]^dim`.
pub fn default_points(seed: u64, dim: usize) -> Vec<Vec<f64>> {
    uniform_points(seed, DEFAULT_SAMPLES, dim, -2.0, 2.0)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Outcome of a sampled identity: worst residual and where it occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    pub max_residual: f64,
    pub witness: Vec<f64>,
}

impl Check {
    pub fn new(tol: f64) -> CheckBuilder {
        CheckBuilder {
            tol,
            max_residual: 0.0,
            witness: Vec::new(),
        }
    }

    /// Runs `residual` at every sample and keeps the maximum. A NaN residual
    /// counts as a failure.
    pub fn over<I, F>(tol: f64, samples: I, mut residual: F) -> Result<Check>
    where
        I: IntoIterator<Item = Vec<f64>>,
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let mut b = Check::new(tol);
        for s in samples {
            let r = residual(&s)?;
            b.record(r, &s);
        }
        Ok(b.finish())
    }

    /// Conjunction: passes when both pass, reports the larger residual.
    pub fn and(&self, other: &Check) -> Check {
        let worst = if other.max_residual > self.max_residual || other.max_residual.is_nan() {
            other
        } else {
            self
        };
        Check {
            passed: self.passed && other.passed,
            max_residual: worst.max_residual,
            witness: worst.witness.clone(),
        }
    }

    /// A pass/fail outcome with an indicator residual (0 or 1).
    pub fn flag(passed: bool, witness: Vec<f64>) -> Check {
        Check {
            passed,
            max_residual: if passed { 0.0 } else { 1.0 },
            witness,
        }
    }
}

pub struct CheckBuilder {
    tol: f64,
    max_residual: f64,
    witness: Vec<f64>,
}

impl CheckBuilder {
    pub fn record(&mut self, residual: f64, at: &[f64]) {
        let residual = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual
        };
        if residual > self.max_residual || self.witness.is_empty() {
            self.max_residual = residual;
            self.witness = at.to_vec();
        }
    }

    pub fn finish(self) -> Check {
        Check {
            passed: self.max_residual <= self.tol,
            max_residual: self.max_residual,
            witness: self.witness,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_points_are_reproducible() {
        assert_eq!(default_points(7, 3), default_points(7, 3));
        assert_ne!(default_points(7, 3), default_points(8, 3));
        assert!(default_points(1, 2)
            .iter()
            .flatten()
            .all(|v| (-2.0..=2.0).contains(v)));
    }

    #[test]
    fn check_tracks_worst_witness() {
        let c = Check::over(0.5, vec![vec![1.0], vec![2.0], vec![0.5]], |s| {
            Ok(s[0] / 4.0)
        })
        .unwrap();
        assert_eq!(c.max_residual, 0.5);
        assert_eq!(c.witness, vec![2.0]);
        assert!(c.passed);
        let nan = Check::over(1.0, vec![vec![0.0]], |_| Ok(f64::NAN)).unwrap();
        assert!(!nan.passed);
    }
}
