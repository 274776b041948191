//! Exact weighted-L1-penalized quantile regression.
//!
//! Every quantile-based estimator in the crate funnels through [`solve_range`]:
//! it builds the split-variable linear program for rows `l..k` of a dataset and
//! hands it to the vertex simplex in [`simplex`]. Results are basic (vertex)
//! solutions, so zero coefficients come back as exact zeros.

pub(crate) mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_loss, residual, Dataset, FitResult, PenaltySpec, QuantileLevel};
use simplex::{L1Problem, Termination};

/// Identifies a row of the LP independently of the segment it was built for,
/// so a basis can seed the solve of an overlapping segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowId {
    /// Observation with this zero-based index in the full dataset.
    Data(usize),
    /// Penalty row of coefficient `j`.
    Penalty(usize),
}

/// Basis of an optimal vertex; pass it back as a warm start.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Basis(pub Vec<RowId>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Primal variables of the split LP
/// `min tau*sum(u+) + (1-tau)*sum(u-) + lambda*sum_j w_j (phi+_j + phi-_j)`
/// subject to `y_i = b + x_i'(phi+ - phi-) + u+_i - u-_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub b: f64,
    pub phi_plus: Vec<f64>,
    pub phi_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub status: LpStatus,
}

impl LpSolution {
    pub fn phi(&self) -> Vec<f64> {
        self.phi_plus.iter().zip(&self.phi_minus).map(|(a, b)| a - b).collect()
    }
}

/// Knobs shared by the quantile-type estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Estimate the unpenalized intercept `b`.
    pub intercept: bool,
    /// Multiplies the check loss; `2.0` at `tau = 0.5` gives the absolute-deviation loss.
    pub loss_scale: f64,
    /// Pivot budget; defaults to `50 * (rows + p)`.
    pub max_pivots: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { intercept: true, loss_scale: 1.0, max_pivots: None }
    }
}

impl FitOptions {
    pub fn without_intercept() -> Self {
        Self { intercept: false, ..Self::default() }
    }
}

/// A fit together with the basis that produced it.
#[derive(Debug, Clone)]
pub struct Solved {
    pub fit: FitResult,
    pub basis: Basis,
    pub pivots: usize,
    pub(crate) residuals: Vec<f64>,
    pub(crate) status: LpStatus,
}

/// Global minimizer of `sum_i rho_tau(y_i - b - x_i'phi) + lambda * w'|phi|` over all rows.
pub fn fit(data: &Dataset, tau: QuantileLevel, penalty: &PenaltySpec) -> Result<FitResult> {
    solve_range(data, 0, data.n(), tau, penalty, FitOptions::default(), None).map(|s| s.fit)
}

/// [`fit`] restricted to observations `l+1..=k` (rows `l..k`); needs `k - l >= p + 2`.
pub fn fit_subsample(
    data: &Dataset,
    l: usize,
    k: usize,
    tau: QuantileLevel,
    penalty: &PenaltySpec,
) -> Result<FitResult> {
    check_range(data, l, k)?;
    let min = data.p() + 2;
    if k - l < min {
        return Err(Error::SegmentTooShort { l, k, len: k - l, min });
    }
    solve_range(data, l, k, tau, penalty, FitOptions::default(), None).map(|s| s.fit)
}

/// Raw split-variable view of the full-sample [`fit`].
pub fn solve_lp(data: &Dataset, tau: QuantileLevel, penalty: &PenaltySpec) -> Result<LpSolution> {
    let solved = solve_unchecked(data, 0, data.n(), tau, penalty, FitOptions::default(), None)?;
    let phi = &solved.fit.coefficients;
    Ok(LpSolution {
        b: solved.fit.intercept,
        phi_plus: phi.iter().map(|v| v.max(0.0)).collect(),
        phi_minus: phi.iter().map(|v| (-v).max(0.0)).collect(),
        u_plus: solved.residuals.iter().map(|r| r.max(0.0)).collect(),
        u_minus: solved.residuals.iter().map(|r| (-r).max(0.0)).collect(),
        status: solved.status,
    })
}

fn check_range(data: &Dataset, l: usize, k: usize) -> Result<()> {
    if l >= k || k > data.n() {
        return Err(Error::InvalidInput(format!("row range ({l}, {k}] outside 0..={}", data.n())));
    }
    Ok(())
}

/// Solves the penalized problem on rows `l..k`, optionally warm-started from `warm`.
/// Fails unless the simplex terminates at an optimal vertex.
pub fn solve_range(
    data: &Dataset,
    l: usize,
    k: usize,
    tau: QuantileLevel,
    penalty: &PenaltySpec,
    opts: FitOptions,
    warm: Option<&Basis>,
) -> Result<Solved> {
    let solved = solve_unchecked(data, l, k, tau, penalty, opts, warm)?;
    match solved.status {
        LpStatus::Optimal => Ok(solved),
        LpStatus::IterationLimit => Err(Error::IterationLimit {
            limit: opts.max_pivots.unwrap_or(default_pivot_limit(k - l, data.p())),
        }),
        LpStatus::Unbounded => Err(Error::Unbounded),
        LpStatus::Infeasible => Err(Error::InvalidInput("infeasible LP".into())),
    }
}

fn default_pivot_limit(rows: usize, p: usize) -> usize {
    50 * (rows + p)
}

struct Layout {
    problem: L1Problem,
    ids: Vec<RowId>,
    /// Coefficient index of each non-intercept column.
    cols: Vec<usize>,
}

fn build(
    data: &Dataset,
    (l, k): (usize, usize),
    tau: QuantileLevel,
    penalty: &PenaltySpec,
    opts: FitOptions,
    cols: Vec<usize>,
) -> Layout {
    let off = usize::from(opts.intercept);
    let q = off + cols.len();
    let t = tau.value();
    let mut problem = L1Problem::with_columns(q);
    let mut ids = Vec::with_capacity(k - l + cols.len());
    let mut z = vec![0.0; q];
    for i in l..k {
        if opts.intercept {
            z[0] = 1.0;
        }
        let row = data.row(i);
        for (c, &j) in cols.iter().enumerate() {
            z[off + c] = row[j];
        }
        problem.push_row(&z, data.y()[i], opts.loss_scale * t, opts.loss_scale * (1.0 - t));
        ids.push(RowId::Data(i));
    }
    for (c, &j) in cols.iter().enumerate() {
        let w = penalty.effective(j);
        if w > 0.0 {
            z.iter_mut().for_each(|v| *v = 0.0);
            z[off + c] = 1.0;
            problem.push_row(&z, 0.0, w, w);
            ids.push(RowId::Penalty(j));
        }
    }
    Layout { problem, ids, cols }
}

/// Coefficient columns that are linearly independent of the intercept and of
/// earlier columns over the LP rows; the rest are pinned at zero.
fn independent_columns(problem: &L1Problem, intercept: bool, cols: &[usize]) -> Vec<usize> {
    let m = problem.m();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    let off = usize::from(intercept);
    for c in 0..problem.q {
        let mut v: Vec<f64> = (0..m).map(|i| problem.row(i)[c]).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(b).for_each(|(a, b)| *a -= d * b);
            }
        }
        let rest = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if rest > 1e-9 {
            v.iter_mut().for_each(|a| *a /= rest);
            basis.push(v);
            if c >= off {
                keep.push(cols[c - off]);
            }
        }
    }
    keep
}

fn solve_unchecked(
    data: &Dataset,
    l: usize,
    k: usize,
    tau: QuantileLevel,
    penalty: &PenaltySpec,
    opts: FitOptions,
    warm: Option<&Basis>,
) -> Result<Solved> {
    check_range(data, l, k)?;
    if penalty.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: penalty.len() });
    }
    if !(opts.loss_scale.is_finite() && opts.loss_scale > 0.0) {
        return Err(Error::InvalidInput(format!("loss scale {} must be positive", opts.loss_scale)));
    }
    let max_pivots = opts.max_pivots.unwrap_or(default_pivot_limit(k - l, data.p()));
    let mut layout = build(data, (l, k), tau, penalty, opts, (0..data.p()).collect());
    let hint = |layout: &Layout| -> Vec<usize> {
        warm.map(|b| {
            b.0.iter()
                .filter_map(|id| layout.ids.iter().position(|x| x == id))
                .collect()
        })
        .unwrap_or_default()
    };
    if simplex::complete_basis(&layout.problem, &hint(&layout)).is_none() {
        let cols = independent_columns(&layout.problem, opts.intercept, &layout.cols);
        layout = build(data, (l, k), tau, penalty, opts, cols);
    }
    let vertex = simplex::solve(&layout.problem, &hint(&layout), max_pivots)?;

    let off = usize::from(opts.intercept);
    let mut phi = vec![0.0; data.p()];
    for (c, &j) in layout.cols.iter().enumerate() {
        phi[j] = vertex.theta[off + c];
    }
    for &i in &vertex.basis {
        if let RowId::Penalty(j) = layout.ids[i] {
            phi[j] = 0.0;
        }
    }
    let b = if opts.intercept { vertex.theta[0] } else { 0.0 };
    let residuals: Vec<f64> = (l..k).map(|i| residual(data, i, b, &phi)).collect();
    let loss: f64 = residuals.iter().map(|&r| check_loss(r, tau)).sum();
    let objective = if opts.loss_scale == 1.0 {
        loss + penalty.value(&phi)
    } else {
        opts.loss_scale * loss + penalty.value(&phi)
    };
    let status = match vertex.status {
        Termination::Optimal => LpStatus::Optimal,
        Termination::Unbounded => LpStatus::Unbounded,
        Termination::IterationLimit => LpStatus::IterationLimit,
    };
    Ok(Solved {
        fit: FitResult::assemble(data, (l, k), b, phi, objective, status == LpStatus::Optimal),
        basis: Basis(vertex.basis.iter().map(|&i| layout.ids[i]).collect()),
        pivots: vertex.pivots,
        residuals,
        status,
    })
}
