mod common;

use common::{random_dataset, rng};
use quantseg_core::baselines::{
    fit_lad_lasso_type, fit_ls_adaptive_lasso, fit_qlasso_pilot, fit_scad_quantile, fit_scad_quantile_traced, ols, ScadConfig, LS_CHI,
    PILOT_FLOOR,
};
use quantseg_core::model::residual;
use quantseg_core::simulation::{catalog, generate_replication};
use quantseg_core::solver::{solve_range, FitOptions};
use quantseg_core::{objective_value, Dataset, PenaltySpec, QuantileLevel};
use rand::Rng;

fn tau(t: f64) -> QuantileLevel {
    QuantileLevel::new(t).unwrap()
}

/// `X'(y - X phi)`.
fn correlations(data: &Dataset, phi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; data.p()];
    for i in 0..data.n() {
        let r = residual(data, i, 0.0, phi);
        for (o, x) in out.iter_mut().zip(data.row(i)) {
            *o += x * r;
        }
    }
    out
}

#[test]
fn ls_zero_lambda_is_ols() {
    let mut g = rng(1);
    let data = random_dataset(&mut g, 50, 4, 1.0);
    let f = fit_ls_adaptive_lasso(&data, LS_CHI, 0.0).unwrap();
    assert!(correlations(&data, &f.coefficients).iter().all(|v| v.abs() < 1e-8));
    let o = ols(&data).unwrap();
    assert!(f.coefficients.iter().zip(&o).all(|(a, b)| (a - b).abs() < 1e-9));
    assert_eq!(f.intercept, 0.0);
}

#[test]
fn ls_orthonormal_single_coordinate_matches_grid() {
    // One unit-norm column: the objective is (z - phi)^2 + const + lambda w |phi| with z = x'y.
    let x = [0.6, 0.0, -0.8];
    let y = [2.0, 1.0, 0.5];
    let data = Dataset::new(y.to_vec(), x.iter().map(|v| vec![*v]).collect()).unwrap();
    let z: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    for lambda in [0.0, 0.3, 1.0, 2.5] {
        let f = fit_ls_adaptive_lasso(&data, LS_CHI, lambda).unwrap();
        let w = z.abs().max(PILOT_FLOOR).powf(-LS_CHI);
        let closed = z.signum() * (z.abs() - lambda * w / 2.0).max(0.0);
        assert!((f.coefficients[0] - closed).abs() < 1e-10);
        let obj = |phi: f64| y.iter().zip(&x).map(|(b, a)| (b - a * phi).powi(2)).sum::<f64>() + lambda * w * phi.abs();
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in -40_000..=40_000 {
            let phi = i as f64 * 5e-5;
            if obj(phi) < best {
                best = obj(phi);
                arg = phi;
            }
        }
        assert!((arg - closed).abs() <= 5e-5, "lambda {lambda}: grid {arg} vs {closed}");
        assert!((f.objective - obj(f.coefficients[0])).abs() < 1e-10);
    }
}

#[test]
fn ls_coordinate_stationarity() {
    let mut g = rng(2);
    for _ in 0..30 {
        let data = random_dataset(&mut g, 60, 6, 1.5);
        let lambda = g.random_range(0.5..20.0);
        let f = fit_ls_adaptive_lasso(&data, LS_CHI, lambda).unwrap();
        let w: Vec<f64> = ols(&data).unwrap().iter().map(|v| v.abs().max(PILOT_FLOOR).powf(-LS_CHI)).collect();
        let corr = correlations(&data, &f.coefficients);
        for j in 0..data.p() {
            // Gradient of the squared loss is -2 x_j'r.
            let grad = -2.0 * corr[j];
            let t = lambda * w[j];
            if f.coefficients[j] != 0.0 {
                assert!((grad + t * f.coefficients[j].signum()).abs() < 1e-8 * (1.0 + t));
            } else {
                assert!(grad.abs() <= t + 1e-8);
            }
        }
    }
}

#[test]
fn qlasso_pilot_uses_log_n() {
    let (data, _) = generate_replication(&catalog("D1").unwrap(), 3, 0).unwrap();
    let f = fit_qlasso_pilot(&data, tau(0.5)).unwrap();
    assert!((200f64.ln() - 5.298).abs() < 1e-3);
    let pen = PenaltySpec::uniform(200f64.ln(), 10).unwrap();
    let at = objective_value(&data, 0.0, &f.coefficients, tau(0.5), &pen).unwrap();
    assert!((at - f.objective).abs() < 1e-9);
    assert_eq!(f.intercept, 0.0);

    let huge = PenaltySpec::uniform(1000.0 * 200f64.ln(), 10).unwrap();
    let s = solve_range(&data, 0, 200, tau(0.5), &huge, FitOptions::without_intercept(), None).unwrap();
    assert!(s.fit.active_set.is_empty());
}

#[test]
fn qlasso_keeps_true_support_on_noiseless_sparse_data() {
    let mut g = rng(4);
    let phi = [1.0, 0.0, 4.0, 0.0, -3.0, 5.0, 6.0, 0.0, -1.0, 0.0];
    let support: Vec<usize> = (0..10).filter(|&j| phi[j] != 0.0).collect();
    let seeds = 100;
    let ok = (0..seeds)
        .filter(|_| {
            let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..10).map(|_| g.random_range(-2.0..2.0)).collect()).collect();
            let y = rows.iter().map(|r| r.iter().zip(&phi).map(|(a, b)| a * b).sum()).collect();
            let f = fit_qlasso_pilot(&Dataset::new(y, rows).unwrap(), tau(0.5)).unwrap();
            support.iter().all(|j| f.active_set.contains(j))
        })
        .count();
    assert!(ok >= 95, "{ok}/{seeds}");
}

#[test]
fn lad_lasso_type_recovers_noiseless_data() {
    let mut g = rng(5);
    let phi = [2.0, 0.0, -1.5, 3.0];
    for _ in 0..10 {
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| g.random_range(-2.0..2.0)).collect()).collect();
        let y = rows.iter().map(|r| r.iter().zip(&phi).map(|(a, b)| a * b).sum()).collect();
        let f = fit_lad_lasso_type(&Dataset::new(y, rows).unwrap()).unwrap();
        for (a, b) in f.coefficients.iter().zip(phi) {
            assert!((a - b).abs() < 1e-8, "{:?}", f.coefficients);
        }
        assert!(f.objective > 0.0, "objective includes the penalty of the nonzero coefficients");
    }
}

#[test]
fn lad_objective_is_absolute_deviation_form() {
    let (data, _) = generate_replication(&catalog("D1-exp").unwrap(), 6, 0).unwrap();
    let f = fit_lad_lasso_type(&data).unwrap();
    let pilot = fit_qlasso_pilot(&data, tau(0.5)).unwrap();
    let w: Vec<f64> = pilot.coefficients.iter().map(|v| 1.0 / v.abs().max(PILOT_FLOOR)).collect();
    let lad: f64 = (0..200).map(|i| residual(&data, i, 0.0, &f.coefficients).abs()).sum();
    let pen: f64 = f.coefficients.iter().zip(&w).filter(|(v, _)| **v != 0.0).map(|(v, w)| 200f64.powf(0.4) * w * v.abs()).sum();
    assert!((f.objective - (lad + pen)).abs() < 1e-8 * (1.0 + f.objective));
}

#[test]
fn scad_zero_lambda_is_unpenalized() {
    let (data, _) = generate_replication(&catalog("D1").unwrap(), 7, 0).unwrap();
    let cfg = ScadConfig::new(5.0, vec![0.0; 10]).unwrap();
    let f = fit_scad_quantile(&data, tau(0.3), &cfg).unwrap();
    let plain = solve_range(&data, 0, 200, tau(0.3), &PenaltySpec::zero(10), FitOptions::without_intercept(), None).unwrap();
    assert!((f.objective - plain.fit.objective).abs() < 1e-9);
    assert!(f.converged);
}

#[test]
fn lla_objective_never_increases() {
    let mut converged_runs = 0;
    for name in ["D1", "D1-exp", "D1-cauchy"] {
        let d = catalog(name).unwrap();
        for r in 0..10 {
            let (data, _) = generate_replication(&d, 8, r).unwrap();
            for t in [0.15, 0.5] {
                let pilot = fit_qlasso_pilot(&data, tau(t)).unwrap();
                let cfg = ScadConfig::from_pilot(&pilot);
                let (f, trace) = fit_scad_quantile_traced(&data, tau(t), &cfg).unwrap();
                if trace.converged {
                    converged_runs += 1;
                    for w in trace.objectives.windows(2) {
                        assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()), "{name} rep {r}: {:?}", trace.objectives);
                    }
                    assert!((f.objective - trace.objectives.last().unwrap()).abs() < 1e-12);
                } else {
                    let best = trace.objectives.iter().copied().fold(f64::INFINITY, f64::min);
                    assert!(f.objective <= best + 1e-12);
                }
            }
        }
    }
    assert!(converged_runs > 0);
}

#[test]
fn scad_iteration_limit_is_flagged() {
    let (data, _) = generate_replication(&catalog("D1-cauchy").unwrap(), 10, 0).unwrap();
    let pilot = fit_qlasso_pilot(&data, tau(0.5)).unwrap();
    let mut cfg = ScadConfig::from_pilot(&pilot);
    cfg.max_iter = 1;
    let (f, trace) = fit_scad_quantile_traced(&data, tau(0.5), &cfg).unwrap();
    assert!(!trace.converged && !f.converged);
    assert_eq!(trace.objectives.len(), 2);
}
