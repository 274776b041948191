//! Comparison estimators: least squares with an adaptive LASSO penalty, the
//! LASSO-type absolute-deviation estimator, and SCAD-penalized quantile
//! regression solved by local linear approximation.
//!
//! None of these carries an intercept; their [`FitResult::intercept`] is always 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_loss, dot, residual, Dataset, FitResult, PenaltySpec, QuantileLevel};
use crate::solver::{self, Basis, FitOptions};

/// Floor applied to pilot magnitudes before they are inverted.
pub const PILOT_FLOOR: f64 = 1e-10;

/// Default weight exponent of the least-squares adaptive LASSO.
pub const LS_CHI: f64 = 9.0 / 40.0;

const CD_TOL: f64 = 1e-10;
const CD_MAX_SWEEPS: usize = 10_000;

/// Cholesky solve of `G x = c` for a symmetric positive definite `G` (row-major `p x p`).
fn cholesky_solve(g: &[f64], c: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    let scale = (0..p).map(|j| g[j * p + j]).fold(0.0_f64, f64::max);
    for i in 0..p {
        for j in 0..=i {
            let mut s = g[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i * p + k] * z[k]).sum();
        z[i] = (c[i] - s) / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k * p + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * p + i];
    }
    Some(x)
}

/// `X'X` and `X'y` over rows `l..k`.
fn gram(data: &Dataset, l: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let p = data.p();
    let mut g = vec![0.0; p * p];
    let mut c = vec![0.0; p];
    for i in l..k {
        let row = data.row(i);
        let y = data.y()[i];
        for a in 0..p {
            c[a] += row[a] * y;
            for b in 0..=a {
                g[a * p + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            g[b * p + a] = g[a * p + b];
        }
    }
    (g, c)
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

/// Ordinary least squares without intercept.
pub fn ols(data: &Dataset) -> Result<Vec<f64>> {
    ols_range(data, 0, data.n())
}

fn ols_range(data: &Dataset, l: usize, k: usize) -> Result<Vec<f64>> {
    let (g, c) = gram(data, l, k);
    cholesky_solve(&g, &c, data.p()).ok_or_else(|| Error::Singular("X'X is not positive definite".into()))
}

/// Minimizes `sum_i (y_i - x_i'phi)^2 + lambda * sum_j w_j |phi_j|` with
/// `w_j = max(|phi_ols_j|, 1e-10)^(-chi)` by cyclic coordinate descent.
pub fn fit_ls_adaptive_lasso(data: &Dataset, chi: f64, lambda: f64) -> Result<FitResult> {
    ls_adaptive_range(data, 0, data.n(), chi, lambda)
}

pub(crate) fn ls_adaptive_range(data: &Dataset, l: usize, k: usize, chi: f64, lambda: f64) -> Result<FitResult> {
    if !(chi.is_finite() && chi > 0.0) {
        return Err(Error::InvalidInput(format!("chi = {chi} must be > 0")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda = {lambda} must be >= 0")));
    }
    let p = data.p();
    let (g, c) = gram(data, l, k);
    let pilot = cholesky_solve(&g, &c, p).ok_or_else(|| Error::Singular("X'X is not positive definite".into()))?;
    let thresholds: Vec<f64> = pilot.iter().map(|v| lambda * v.abs().max(PILOT_FLOOR).powf(-chi) / 2.0).collect();
    let phi = coordinate_descent(&g, &c, &thresholds, pilot)?;
    let loss: f64 = (l..k).map(|i| residual(data, i, 0.0, &phi).powi(2)).sum();
    let pen: f64 = phi.iter().zip(&thresholds).map(|(v, t)| 2.0 * t * v.abs()).sum();
    Ok(FitResult::assemble(data, (l, k), 0.0, phi, loss + pen, true))
}

/// Coordinate descent on `phi'G phi - 2 c'phi + 2 sum_j t_j |phi_j|`.
fn coordinate_descent(g: &[f64], c: &[f64], t: &[f64], mut phi: Vec<f64>) -> Result<Vec<f64>> {
    for _ in 0..CD_MAX_SWEEPS {
        if cd_sweep(g, c, t, &mut phi) < CD_TOL {
            return Ok(phi);
        }
    }
    Err(Error::NonConvergence { sweeps: CD_MAX_SWEEPS })
}

/// One cyclic pass of exact coordinate minimizations; returns the largest change.
fn cd_sweep(g: &[f64], c: &[f64], t: &[f64], phi: &mut [f64]) -> f64 {
    let p = c.len();
    let mut change = 0.0_f64;
    for j in 0..p {
        let gjj = g[j * p + j];
        let new = if gjj > 0.0 {
            let z = c[j] - dot(&g[j * p..(j + 1) * p], phi) + gjj * phi[j];
            soft_threshold(z, t[j]) / gjj
        } else {
            0.0
        };
        change = change.max((new - phi[j]).abs());
        phi[j] = new;
    }
    change
}

/// Quantile fit without intercept and with penalty `ln(n) * sum_j |phi_j|`.
pub fn fit_qlasso_pilot(data: &Dataset, tau: QuantileLevel) -> Result<FitResult> {
    qlasso_range(data, 0, data.n(), tau, None).map(|(f, _)| f)
}

fn qlasso_range(
    data: &Dataset,
    l: usize,
    k: usize,
    tau: QuantileLevel,
    warm: Option<&Basis>,
) -> Result<(FitResult, Basis)> {
    let min = data.p() + 2;
    if k - l < min {
        return Err(Error::SegmentTooShort { l, k, len: k - l, min });
    }
    let pen = PenaltySpec::uniform(((k - l) as f64).ln(), data.p())?;
    let s = solver::solve_range(data, l, k, tau, &pen, FitOptions::without_intercept(), warm)?;
    Ok((s.fit, s.basis))
}

/// Minimizes `sum_i |y_i - x_i'phi| + n^(2/5) * sum_j |phi_j| / max(|phi_qlasso_j|, 1e-10)`
/// with the pilot taken at the median.
pub fn fit_lad_lasso_type(data: &Dataset) -> Result<FitResult> {
    fit_lad_lasso_type_with_pilot(data, QuantileLevel::median())
}

/// [`fit_lad_lasso_type`] with the pilot fitted at `pilot_tau`.
pub fn fit_lad_lasso_type_with_pilot(data: &Dataset, pilot_tau: QuantileLevel) -> Result<FitResult> {
    lad_lasso_type_range(data, 0, data.n(), pilot_tau, None).map(|(f, _)| f)
}

/// Warm-start bases of the two solves behind a LASSO-type fit.
#[derive(Debug, Clone, Default)]
pub(crate) struct LadBases {
    pub pilot: Basis,
    pub fit: Basis,
}

pub(crate) fn lad_lasso_type_range(
    data: &Dataset,
    l: usize,
    k: usize,
    pilot_tau: QuantileLevel,
    warm: Option<&LadBases>,
) -> Result<(FitResult, LadBases)> {
    let (pilot, pilot_basis) = qlasso_range(data, l, k, pilot_tau, warm.map(|w| &w.pilot))?;
    let weights = pilot.coefficients.iter().map(|v| 1.0 / v.abs().max(PILOT_FLOOR)).collect();
    let pen = PenaltySpec::new(((k - l) as f64).powf(0.4), weights)?;
    // |r| = 2 rho_{1/2}(r): doubling the loss keeps the penalty on the absolute-deviation scale.
    let opts = FitOptions { loss_scale: 2.0, ..FitOptions::without_intercept() };
    let start = warm.map(|w| &w.fit).unwrap_or(&pilot_basis);
    let s = solver::solve_range(data, l, k, QuantileLevel::median(), &pen, opts, Some(start))?;
    Ok((s.fit, LadBases { pilot: pilot_basis, fit: s.basis }))
}

/// SCAD tuning: shape `a1 > 2` and one threshold per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScadConfig {
    pub a1: f64,
    pub lambda: Vec<f64>,
    /// Local linear approximation steps before giving up.
    #[serde(default = "default_scad_iter")]
    pub max_iter: usize,
}

fn default_scad_iter() -> usize {
    50
}

impl ScadConfig {
    pub fn new(a1: f64, lambda: Vec<f64>) -> Result<Self> {
        let cfg = Self { a1, lambda, max_iter: default_scad_iter() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `a1 = 5` and `lambda_j = 1 / max(|phi_qlasso_j|, 1e-10)`.
    pub fn from_pilot(pilot: &FitResult) -> Self {
        Self {
            a1: 5.0,
            lambda: pilot.coefficients.iter().map(|v| 1.0 / v.abs().max(PILOT_FLOOR)).collect(),
            max_iter: default_scad_iter(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1.is_finite() && self.a1 > 2.0) {
            return Err(Error::InvalidInput(format!("SCAD a1 = {} must exceed 2", self.a1)));
        }
        if let Some(v) = self.lambda.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidInput(format!("SCAD lambda entry {v} must be finite and >= 0")));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("SCAD max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// `p'(t) = lambda * [1{t <= lambda} + (a1 lambda - t)_+ / ((a1 - 1) lambda) 1{t > lambda}]`.
pub fn scad_penalty_derivative(abs_phi: f64, lambda: f64, a1: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else if abs_phi <= lambda {
        lambda
    } else {
        (a1 * lambda - abs_phi).max(0.0) / (a1 - 1.0)
    }
}

/// The SCAD penalty itself, `p(0) = 0`.
pub fn scad_penalty(abs_phi: f64, lambda: f64, a1: f64) -> f64 {
    if abs_phi <= lambda {
        lambda * abs_phi
    } else if abs_phi <= a1 * lambda {
        (2.0 * a1 * lambda * abs_phi - abs_phi * abs_phi - lambda * lambda) / (2.0 * (a1 - 1.0))
    } else {
        lambda * lambda * (a1 + 1.0) / 2.0
    }
}

/// `sum_i rho_tau(y_i - x_i'phi) + sum_j p_{lambda_j}(|phi_j|)`.
pub fn scad_objective(data: &Dataset, tau: QuantileLevel, cfg: &ScadConfig, phi: &[f64]) -> f64 {
    let loss: f64 = (0..data.n()).map(|i| check_loss(residual(data, i, 0.0, phi), tau)).sum();
    let pen: f64 = phi.iter().zip(&cfg.lambda).map(|(v, &lam)| scad_penalty(v.abs(), lam, cfg.a1)).sum();
    loss + pen
}

/// One step of the LLA iteration: the weighted-L1 quantile fit majorizing SCAD at `phi`.
fn lla_step(
    data: &Dataset,
    tau: QuantileLevel,
    cfg: &ScadConfig,
    phi: &[f64],
    warm: Option<&Basis>,
) -> Result<(Vec<f64>, Basis)> {
    let weights = phi.iter().zip(&cfg.lambda).map(|(v, &lam)| scad_penalty_derivative(v.abs(), lam, cfg.a1)).collect();
    let pen = PenaltySpec::new(1.0, weights)?;
    let s = solver::solve_range(data, 0, data.n(), tau, &pen, FitOptions::without_intercept(), warm)?;
    Ok((s.fit.coefficients, s.basis))
}

/// Iterates of the LLA run with their SCAD objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScadTrace {
    pub objectives: Vec<f64>,
    pub converged: bool,
}

/// SCAD-penalized quantile regression without intercept, by local linear
/// approximation started at the QLASSO pilot.
///
/// Stops when no coefficient moves by `1e-8` or more. At the iteration limit the
/// best iterate by SCAD objective is returned with `converged = false`.
pub fn fit_scad_quantile(data: &Dataset, tau: QuantileLevel, cfg: &ScadConfig) -> Result<FitResult> {
    fit_scad_quantile_traced(data, tau, cfg).map(|(f, _)| f)
}

pub fn fit_scad_quantile_traced(data: &Dataset, tau: QuantileLevel, cfg: &ScadConfig) -> Result<(FitResult, ScadTrace)> {
    cfg.validate()?;
    if cfg.lambda.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: cfg.lambda.len() });
    }
    let pilot = fit_qlasso_pilot(data, tau)?;
    let mut phi = pilot.coefficients;
    let mut objectives = vec![scad_objective(data, tau, cfg, &phi)];
    let mut best = (objectives[0], phi.clone());
    let mut basis: Option<Basis> = None;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let (next, b) = lla_step(data, tau, cfg, &phi, basis.as_ref())?;
        let change = next.iter().zip(&phi).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let obj = scad_objective(data, tau, cfg, &next);
        objectives.push(obj);
        if obj < best.0 {
            best = (obj, next.clone());
        }
        phi = next;
        basis = Some(b);
        if change < 1e-8 {
            converged = true;
            break;
        }
    }
    let (obj, coef) = if converged { (*objectives.last().unwrap(), phi) } else { best };
    let fit = FitResult::assemble(data, (0, data.n()), 0.0, coef, obj, converged);
    Ok((fit, ScadTrace { objectives, converged }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scad_derivative_branches() {
        assert_eq!(scad_penalty_derivative(0.5, 1.0, 5.0), 1.0);
        assert!((scad_penalty_derivative(2.0, 1.0, 5.0) - 0.75).abs() < 1e-15);
        assert_eq!(scad_penalty_derivative(6.0, 1.0, 5.0), 0.0);
        assert_eq!(scad_penalty_derivative(0.0, 0.0, 5.0), 0.0);
    }

    #[test]
    fn scad_penalty_is_integral_of_derivative() {
        let (lam, a) = (1.3, 5.0);
        let mut acc = 0.0;
        let h = 1e-4;
        for i in 0..100_000 {
            let t = (i as f64 + 0.5) * h;
            acc += scad_penalty_derivative(t, lam, a) * h;
            if i % 9973 == 0 {
                assert!((acc - scad_penalty(t + h / 2.0, lam, a)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cholesky_matches_direct() {
        let g = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&g, &[6.0, 5.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!(cholesky_solve(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn coordinate_descent_sweeps_never_increase_the_objective() {
        let g = [5.0, 2.0, -1.0, 2.0, 4.0, 0.5, -1.0, 0.5, 3.0];
        let c = [3.0, -2.0, 1.0];
        let t = [0.4, 1.5, 0.1];
        let f = |phi: &[f64]| {
            let quad: f64 = (0..3).map(|a| (0..3).map(|b| phi[a] * g[a * 3 + b] * phi[b]).sum::<f64>()).sum();
            quad - 2.0 * dot(&c, phi) + 2.0 * phi.iter().zip(&t).map(|(v, w)| w * v.abs()).sum::<f64>()
        };
        let mut phi = vec![1.0, 1.0, 1.0];
        let mut prev = f(&phi);
        for _ in 0..50 {
            cd_sweep(&g, &c, &t, &mut phi);
            let now = f(&phi);
            assert!(now <= prev + 1e-12);
            prev = now;
        }
    }

    #[test]
    fn scad_config_validation() {
        assert!(ScadConfig::new(2.0, vec![1.0]).is_err());
        assert!(ScadConfig::new(5.0, vec![-1.0]).is_err());
        assert!(ScadConfig::new(5.0, vec![0.0, 2.0]).is_ok());
    }
}
