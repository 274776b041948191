//! Two-stage adaptive-LASSO quantile estimation.
//!
//! A pilot unpenalized quantile fit gives `phi_hat`; the penalized fit then uses
//! weights `w_j = max(|phi_hat_j|, floor)^(-g)` and multiplier `lambda_rule(n)`.
//! [`kkt_verify`] certifies the result through the subgradient conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{is_zero_residual, residual, Dataset, FitResult, PenaltySpec, QuantileLevel};
use crate::solver::{self, Basis, FitOptions};

/// Maps a sample size `m` to the penalty multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaRule {
    /// `m^exponent`; the default exponent is `2/5`.
    Power { exponent: f64 },
    Constant { value: f64 },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Power { exponent: 0.4 }
    }
}

impl LambdaRule {
    pub fn eval(&self, m: usize) -> f64 {
        match *self {
            LambdaRule::Power { exponent } => (m as f64).powf(exponent),
            LambdaRule::Constant { value } => value,
        }
    }
}

/// Tuning of the adaptive estimator.
///
/// Sparsity needs `n^(g/2 - 1) * lambda_n -> infinity`; with the default
/// `lambda_n = n^(2/5)` that means `g > 6/5`, which the default `g = 1.225`
/// satisfies and `g = 9/40` does not. Asymptotic normality of the active
/// coefficients uses the weaker `n^((g-1)/2) * lambda_n -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub g: f64,
    #[serde(default)]
    pub lambda_rule: LambdaRule,
    #[serde(default = "default_floor")]
    pub weight_floor: f64,
}

fn default_floor() -> f64 {
    1e-10
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { g: 1.225, lambda_rule: LambdaRule::default(), weight_floor: default_floor() }
    }
}

impl AdaptiveConfig {
    pub fn with_g(g: f64) -> Self {
        Self { g, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::InvalidInput(format!("weight exponent g = {} must be > 0", self.g)));
        }
        if !(self.weight_floor.is_finite() && self.weight_floor > 0.0) {
            return Err(Error::InvalidInput(format!("weight floor {} must be > 0", self.weight_floor)));
        }
        let ok = match self.lambda_rule {
            LambdaRule::Power { exponent } => exponent.is_finite(),
            LambdaRule::Constant { value } => value.is_finite() && value >= 0.0,
        };
        if !ok {
            return Err(Error::InvalidInput(format!("bad lambda rule {:?}", self.lambda_rule)));
        }
        Ok(())
    }
}

/// Unpenalized quantile fit used to build the weights.
pub fn pilot_fit(data: &Dataset, tau: QuantileLevel) -> Result<FitResult> {
    solver::fit(data, tau, &PenaltySpec::zero(data.p()))
}

/// `w_j = max(|phi_j|, floor)^(-g)`.
pub fn compute_weights(pilot_coefficients: &[f64], g: f64, weight_floor: f64) -> Vec<f64> {
    pilot_coefficients.iter().map(|v| v.abs().max(weight_floor).powf(-g)).collect()
}

/// The adaptive fit plus the intermediate pilot and penalty, for diagnostics.
#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    pub pilot: FitResult,
    pub penalty: PenaltySpec,
    pub fit: FitResult,
}

/// Adaptive-LASSO quantile fit on the whole sample.
pub fn fit_adaptive(data: &Dataset, tau: QuantileLevel, cfg: &AdaptiveConfig) -> Result<FitResult> {
    fit_adaptive_detailed(data, tau, cfg).map(|a| a.fit)
}

pub fn fit_adaptive_detailed(data: &Dataset, tau: QuantileLevel, cfg: &AdaptiveConfig) -> Result<AdaptiveFit> {
    let min = data.p() + 2;
    if data.n() < min {
        return Err(Error::SegmentTooShort { l: 0, k: data.n(), len: data.n(), min });
    }
    fit_adaptive_range(data, 0, data.n(), tau, cfg, None).map(|(a, _)| a)
}

/// Warm-start bases for the pilot and penalized solves of a segment.
#[derive(Debug, Clone, Default)]
pub(crate) struct AdaptiveBases {
    pub pilot: Basis,
    pub fit: Basis,
}

/// Adaptive fit on rows `l..k` with `lambda = lambda_rule(k - l)`.
pub(crate) fn fit_adaptive_range(
    data: &Dataset,
    l: usize,
    k: usize,
    tau: QuantileLevel,
    cfg: &AdaptiveConfig,
    warm: Option<&AdaptiveBases>,
) -> Result<(AdaptiveFit, AdaptiveBases)> {
    cfg.validate()?;
    let opts = FitOptions::default();
    let pilot = solver::solve_range(data, l, k, tau, &PenaltySpec::zero(data.p()), opts, warm.map(|w| &w.pilot))?;
    let weights = compute_weights(&pilot.fit.coefficients, cfg.g, cfg.weight_floor);
    let penalty = PenaltySpec::new(cfg.lambda_rule.eval(k - l), weights)?;
    // The pilot vertex is feasible for the penalized problem and usually close to it.
    let start = warm.map(|w| &w.fit).unwrap_or(&pilot.basis);
    let fit = solver::solve_range(data, l, k, tau, &penalty, opts, Some(start))?;
    Ok((
        AdaptiveFit { pilot: pilot.fit, penalty, fit: fit.fit },
        AdaptiveBases { pilot: pilot.basis, fit: fit.basis },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KktSide {
    Active,
    Inactive,
}

/// Subgradient check of one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktEntry {
    pub side: KktSide,
    /// `tau * sum_i X_ij - sum_i X_ij * 1{Y_i < b + X_i'phi}`.
    pub score: f64,
    /// `lambda * w_j`.
    pub bound: f64,
    /// `sum_{i: r_i = 0} |X_ij| + 1e-6`; the check loss has a kink at every interpolated point.
    pub slack_tolerance: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub entries: Vec<KktEntry>,
}

impl KktReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn violations(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, e)| !e.satisfied).map(|(j, _)| j).collect()
    }
}

/// Checks the first-order optimality conditions of `fit` for the problem `(data, tau, penalty)`.
///
/// Active coordinates need `|score_j - lambda w_j sign(phi_j)| <= slack`, inactive
/// ones `|score_j| <= lambda w_j + slack`. The indicator uses the fitted value
/// including the intercept. Violations are reported, never raised.
pub fn kkt_verify(data: &Dataset, tau: QuantileLevel, penalty: &PenaltySpec, fit: &FitResult) -> KktReport {
    let t = tau.value();
    let p = data.p();
    let mut score = vec![0.0; p];
    let mut slack = vec![1e-6; p];
    for i in 0..data.n() {
        let r = residual(data, i, fit.intercept, &fit.coefficients);
        let row = data.row(i);
        let zero = is_zero_residual(r, data.y()[i]);
        let below = !zero && r < 0.0;
        for j in 0..p {
            score[j] += t * row[j];
            if below {
                score[j] -= row[j];
            }
            if zero {
                slack[j] += row[j].abs();
            }
        }
    }
    let entries = (0..p)
        .map(|j| {
            let bound = penalty.effective(j);
            let phi = fit.coefficients[j];
            let active = fit.active_set.contains(&j);
            let satisfied = if active {
                (score[j] - bound * phi.signum()).abs() <= slack[j]
            } else {
                score[j].abs() <= bound + slack[j]
            };
            KktEntry {
                side: if active { KktSide::Active } else { KktSide::Inactive },
                score: score[j],
                bound,
                slack_tolerance: slack[j],
                satisfied,
            }
        })
        .collect();
    KktReport { entries }
}
