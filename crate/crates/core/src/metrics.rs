//! Scoring estimates against the generating coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero tolerance matching [`crate::model::is_zero_coefficient`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRates {
    /// Share of the truly zero coefficients estimated as zero.
    pub true_zero_rate: f64,
    /// Share of the truly nonzero coefficients estimated as zero.
    pub false_zero_rate: f64,
}

/// Counts behind [`SelectionRates`], summable across replications.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub true_zero: usize,
    pub zeros: usize,
    pub false_zero: usize,
    pub nonzeros: usize,
}

impl SelectionCounts {
    pub fn add(&mut self, other: &SelectionCounts) {
        self.true_zero += other.true_zero;
        self.zeros += other.zeros;
        self.false_zero += other.false_zero;
        self.nonzeros += other.nonzeros;
    }

    /// Ratios of the pooled counts; an empty denominator gives a rate of 0.
    pub fn rates(&self) -> SelectionRates {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        SelectionRates {
            true_zero_rate: ratio(self.true_zero, self.zeros),
            false_zero_rate: ratio(self.false_zero, self.nonzeros),
        }
    }
}

/// Zero-selection counts; an estimate is zero when `|v| <= zero_tol * (1 + max|estimate|)`.
pub fn selection_counts(estimate: &[f64], truth: &[f64], zero_tol: f64) -> Result<SelectionCounts> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: estimate.len() });
    }
    let norm = estimate.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let is_zero = |v: f64| v.abs() <= zero_tol * (1.0 + norm);
    let mut c = SelectionCounts::default();
    for (&e, &t) in estimate.iter().zip(truth) {
        if t == 0.0 {
            c.zeros += 1;
            c.true_zero += usize::from(is_zero(e));
        } else {
            c.nonzeros += 1;
            c.false_zero += usize::from(is_zero(e));
        }
    }
    Ok(c)
}

/// Rates for one estimate; `truth` must contain both zeros and nonzeros.
pub fn selection_rates(estimate: &[f64], truth: &[f64], zero_tol: f64) -> Result<SelectionRates> {
    let c = selection_counts(estimate, truth, zero_tol)?;
    if c.zeros == 0 || c.nonzeros == 0 {
        return Err(Error::InvalidInput("truth needs at least one zero and one nonzero coefficient".into()));
    }
    Ok(c.rates())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadStats {
    /// Mean of `phi_hat_j - phi_j` over the true support and all replications.
    pub mean_diff: f64,
    pub mean_abs_diff: f64,
    /// `(1/M) sum_m ||(phi_hat_m - phi)_support||^2`.
    pub msqe: f64,
}

/// Bias and spread over the nonzero coordinates of `truth`.
pub fn spread_stats(estimates: &[Vec<f64>], truth: &[f64]) -> Result<SpreadStats> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("spread statistics need at least one estimate".into()));
    }
    let support: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] != 0.0).collect();
    let (mut sum, mut abs, mut sq) = (0.0, 0.0, 0.0);
    for est in estimates {
        if est.len() != truth.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), found: est.len() });
        }
        for &j in &support {
            let d = est[j] - truth[j];
            sum += d;
            abs += d.abs();
            sq += d * d;
        }
    }
    let m = estimates.len() as f64;
    let cells = m * support.len() as f64;
    let mean = |v: f64| if cells == 0.0 { 0.0 } else { v / cells };
    Ok(SpreadStats { mean_diff: mean(sum), mean_abs_diff: mean(abs), msqe: sq / m })
}

/// The lower median: element `(len - 1) / 2` of the sorted values.
pub fn lower_median(values: &[usize]) -> Option<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.get(v.len().checked_sub(1)? / 2).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    const D1: [f64; 10] = [1.0, 0.0, 4.0, 0.0, -3.0, 5.0, 6.0, 0.0, -1.0, 0.0];

    #[test]
    fn rates_examples() {
        let r = selection_rates(&D1, &D1, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((r.true_zero_rate, r.false_zero_rate), (1.0, 0.0));
        let mut est = D1.map(|v| if v == 0.0 { 0.0 } else { v + 0.1 });
        est[9] = 0.3;
        let r = selection_rates(&est, &D1, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((r.true_zero_rate, r.false_zero_rate), (0.75, 0.0));
        let r = selection_rates(&[0.0; 10], &D1, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((r.true_zero_rate, r.false_zero_rate), (1.0, 1.0));
        assert!(selection_rates(&[0.0; 2], &[0.0; 2], DEFAULT_ZERO_TOL).is_err());
        assert!(selection_rates(&[0.0; 2], &[1.0; 2], DEFAULT_ZERO_TOL).is_err());
    }

    #[test]
    fn spread_examples() {
        let s = spread_stats(&[D1.to_vec()], &D1).unwrap();
        assert_eq!((s.mean_diff, s.mean_abs_diff, s.msqe), (0.0, 0.0, 0.0));
        let s = spread_stats(&[vec![1.2, 0.0]], &[1.0, 0.0]).unwrap();
        assert!((s.mean_diff - 0.2).abs() < 1e-12 && (s.mean_abs_diff - 0.2).abs() < 1e-12);
        assert!((s.msqe - 0.04).abs() < 1e-12);
        let s = spread_stats(&[vec![1.2], vec![0.8]], &[1.0]).unwrap();
        assert!(s.mean_diff.abs() < 1e-12);
        assert!((s.mean_abs_diff - 0.2).abs() < 1e-12 && (s.msqe - 0.04).abs() < 1e-12);
    }

    #[test]
    fn medians() {
        assert_eq!(lower_median(&[3, 1, 2]), Some(2));
        assert_eq!(lower_median(&[4, 1, 3, 2]), Some(2));
        assert_eq!(lower_median(&[]), None);
    }
}
