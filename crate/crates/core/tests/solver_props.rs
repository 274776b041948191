//! Optimality properties of the exact quantile fit.

mod common;

use common::{brute_force, random_dataset, rng};
use quantseg_core::model::{is_zero_residual, residual};
use quantseg_core::simulation::{catalog, generate_replication};
use quantseg_core::solver::{fit, fit_subsample};
use quantseg_core::{objective_value, Dataset, FitResult, PenaltySpec, QuantileLevel};
use rand::Rng;

fn tau(t: f64) -> QuantileLevel {
    QuantileLevel::new(t).unwrap()
}

/// `N- <= tau n <= N- + N0`, compared exactly.
fn sign_counts_hold(data: &Dataset, t: QuantileLevel, f: &FitResult) -> bool {
    let (mut neg, mut zero) = (0usize, 0usize);
    for i in 0..data.n() {
        let r = residual(data, i, f.intercept, &f.coefficients);
        if is_zero_residual(r, data.y()[i]) {
            zero += 1;
        } else if r < 0.0 {
            neg += 1;
        }
    }
    let tn = t.value() * data.n() as f64;
    neg as f64 <= tn && tn <= (neg + zero) as f64
}

#[test]
fn residual_sign_counts_random_instances() {
    let mut g = rng(11);
    for case in 0..300 {
        let n = g.random_range(5..60);
        let p = g.random_range(1..5).min(n - 2);
        let noise = if case % 5 == 0 { 0.0 } else { 1.0 };
        let data = random_dataset(&mut g, n, p, noise);
        let t = tau(g.random_range(0.02..0.98));
        let f = fit(&data, t, &PenaltySpec::zero(p)).unwrap();
        assert!(sign_counts_hold(&data, t, &f), "case {case}: n={n} p={p} tau={}", t.value());
        assert!(f.n_zero_residuals >= 1, "case {case}: an optimal vertex interpolates a point");
    }
}

#[test]
fn residual_sign_counts_simulated_designs() {
    for name in ["D1", "D1-exp", "D1-cauchy", "M3"] {
        let d = catalog(name).unwrap();
        for r in 0..5 {
            let (data, _) = generate_replication(&d, 1, r).unwrap();
            for t in [0.15, 0.5, 0.55, 0.95] {
                let f = fit(&data, tau(t), &PenaltySpec::zero(data.p())).unwrap();
                assert!(sign_counts_hold(&data, tau(t), &f), "{name} rep {r} tau {t}");
            }
        }
    }
}

#[test]
fn three_point_line_matches_brute_force() {
    let data = Dataset::new(vec![0.0, 1.0, 3.0], vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
    let pen = PenaltySpec::zero(1);
    let f = fit(&data, tau(0.5), &pen).unwrap();
    let best = brute_force(&data, tau(0.5), &pen).unwrap();
    assert!((f.objective - best).abs() < 1e-12);
    // The line through the first and last points leaves a residual of -0.5, costing 0.25.
    assert!((f.objective - 0.25).abs() < 1e-12);
}

#[test]
fn noiseless_recovery_with_intercept() {
    let mut g = rng(3);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| g.random_range(-3.0..3.0)).collect()).collect();
    let phi = [1.5, -2.0, 0.25];
    let y = rows.iter().map(|r| 0.7 + r.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>()).collect();
    let data = Dataset::new(y, rows).unwrap();
    let f = fit(&data, tau(0.3), &PenaltySpec::zero(3)).unwrap();
    assert!(f.objective.abs() < 1e-9);
    assert!((f.intercept - 0.7).abs() < 1e-8);
    for (a, b) in f.coefficients.iter().zip(phi) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn objective_below_random_points_and_truth() {
    let mut g = rng(5);
    let d = catalog("D1-exp").unwrap();
    for r in 0..3 {
        let (data, truth) = generate_replication(&d, 9, r).unwrap();
        let t = tau(0.3);
        let pen = PenaltySpec::uniform(2.0, data.p()).unwrap();
        let f = fit(&data, t, &pen).unwrap();
        let b0 = truth.intercepts(t)[0].unwrap();
        assert!(f.objective <= objective_value(&data, b0, &truth.phases[0].phi, t, &pen).unwrap() + 1e-9);
        for _ in 0..100 {
            let b = g.random_range(-8.0..2.0);
            let phi: Vec<f64> = truth.phases[0].phi.iter().map(|v| v + g.random_range(-1.0..1.0)).collect();
            assert!(f.objective <= objective_value(&data, b, &phi, t, &pen).unwrap() + 1e-9);
        }
    }
}

#[test]
fn scale_equivariance() {
    let mut g = rng(17);
    for _ in 0..50 {
        let data = random_dataset(&mut g, 25, 3, 1.0);
        let c = g.random_range(0.1..10.0);
        let t = tau(g.random_range(0.1..0.9));
        let pen = PenaltySpec::zero(3);
        let f = fit(&data, t, &pen).unwrap();
        let scaled_y: Vec<f64> = data.y().iter().map(|v| c * v).collect();
        let scaled = Dataset::from_row_major(scaled_y, data.x_row_major().to_vec(), 3).unwrap();
        let fs = fit(&scaled, t, &pen).unwrap();
        assert!((fs.objective - c * f.objective).abs() <= 1e-9 * (1.0 + fs.objective));
        // The scaled original optimum is optimal for the scaled problem.
        let phi: Vec<f64> = f.coefficients.iter().map(|v| c * v).collect();
        let at = objective_value(&scaled, c * f.intercept, &phi, t, &pen).unwrap();
        assert!((at - fs.objective).abs() <= 1e-9 * (1.0 + at));
    }
}

#[test]
fn subsample_properties() {
    // Noiseless single-phase segment fits exactly.
    let mut g = rng(23);
    let data = random_dataset(&mut g, 40, 2, 0.0);
    let f = fit_subsample(&data, 10, 30, tau(0.4), &PenaltySpec::zero(2)).unwrap();
    assert!(f.objective.abs() < 1e-9);

    // A segment straddling a change costs more than its two homogeneous parts.
    let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64 - 3.0]).collect();
    let y: Vec<f64> = x.iter().enumerate().map(|(i, r)| if i < 20 { 2.0 * r[0] } else { -r[0] + 5.0 }).collect();
    let data = Dataset::new(y, x).unwrap();
    let pen = PenaltySpec::zero(1);
    let whole = fit_subsample(&data, 0, 40, tau(0.5), &pen).unwrap().objective;
    let a = fit_subsample(&data, 0, 20, tau(0.5), &pen).unwrap().objective;
    let b = fit_subsample(&data, 20, 40, tau(0.5), &pen).unwrap().objective;
    assert!(whole > a + b + 1.0, "{whole} vs {a} + {b}");

    assert!(fit_subsample(&data, 0, 2, tau(0.5), &pen).is_err());
}
