//! Primal simplex for asymmetric weighted-L1 regression.
//!
//! Minimizes `sum_i c_i(y_i - z_i' theta)` where `c_i(r) = pos_i * r` for `r > 0`
//! and `neg_i * |r|` otherwise. This is the split-variable LP
//!
//! ```text
//! min  sum_i pos_i u+_i + neg_i u-_i
//! s.t. y_i = z_i' theta + u+_i - u-_i,  u+, u- >= 0
//! ```
//!
//! stored in vertex form: a basis is a set `h` of `q` rows whose residuals are held
//! at zero, so `theta = Z_h^{-1} y_h`. Each pivot releases one basic row in the
//! direction with the most negative directional derivative and walks the edge to
//! its minimum; the row whose residual crosses zero at that point enters the basis.
//! Penalty terms `w_j |theta_j|` are rows with `y = 0`, `z = e_j`, `pos = neg = w_j`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct L1Problem {
    pub q: usize,
    /// Row-major `m x q`.
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

impl L1Problem {
    pub fn with_columns(q: usize) -> Self {
        Self { q, z: Vec::new(), y: Vec::new(), pos: Vec::new(), neg: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.z[i * self.q..(i + 1) * self.q]
    }

    pub fn push_row(&mut self, z: &[f64], y: f64, pos: f64, neg: f64) {
        debug_assert_eq!(z.len(), self.q);
        self.z.extend_from_slice(z);
        self.y.push(y);
        self.pos.push(pos);
        self.neg.push(neg);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Optimal,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    pub theta: Vec<f64>,
    pub basis: Vec<usize>,
    pub pivots: usize,
    pub status: Termination,
}

/// Dense LU with partial pivoting for the small `q x q` basis matrix.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(n: usize, mut a: Vec<f64>) -> Option<Lu> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for c in 0..n {
            let (piv, best) = (c..n)
                .map(|r| (r, a[r * n + c].abs()))
                .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= 1e-13 * scale {
                return None;
            }
            if piv != c {
                for j in 0..n {
                    a.swap(c * n + j, piv * n + j);
                }
                perm.swap(c, piv);
            }
            let d = a[c * n + c];
            for r in c + 1..n {
                let f = a[r * n + c] / d;
                a[r * n + c] = f;
                if f != 0.0 {
                    for j in c + 1..n {
                        a[r * n + j] -= f * a[c * n + j];
                    }
                }
            }
        }
        Some(Lu { n, a, perm })
    }

    /// Solves `A x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.a[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.a[r * n + c] * x[c];
            }
            x[r] = s / self.a[r * n + r];
        }
        x
    }

    /// Solves `A' x = b`.
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut w = b.to_vec();
        for c in 0..n {
            let mut s = w[c];
            for r in 0..c {
                s -= self.a[r * n + c] * w[r];
            }
            w[c] = s / self.a[c * n + c];
        }
        for c in (0..n).rev() {
            let mut s = w[c];
            for r in c + 1..n {
                s -= self.a[r * n + c] * w[r];
            }
            w[c] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }
}

/// Greedy selection of `q` linearly independent rows, hint rows first.
/// Returns `None` when the rows span fewer than `q` dimensions.
pub(crate) fn complete_basis(problem: &L1Problem, hint: &[usize]) -> Option<Vec<usize>> {
    let q = problem.q;
    let m = problem.m();
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut chosen = Vec::with_capacity(q);
    let mut taken = vec![false; m];
    let candidates = hint.iter().copied().filter(|&i| i < m).chain(0..m);
    for i in candidates {
        if chosen.len() == q {
            break;
        }
        if taken[i] {
            continue;
        }
        let row = problem.row(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = row.iter().map(|x| x / norm).collect();
        // Two passes of modified Gram-Schmidt keep the test reliable.
        for _ in 0..2 {
            for o in &ortho {
                let d: f64 = v.iter().zip(o).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(o).for_each(|(a, b)| *a -= d * b);
            }
        }
        let rest = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rest > 1e-9 {
            v.iter_mut().for_each(|a| *a /= rest);
            ortho.push(v);
            chosen.push(i);
            taken[i] = true;
        }
    }
    (chosen.len() == q).then_some(chosen)
}

/// Runs the simplex from the basis completed out of `hint`.
pub(crate) fn solve(problem: &L1Problem, hint: &[usize], max_pivots: usize) -> Result<Vertex> {
    let q = problem.q;
    let m = problem.m();
    let mut basis = complete_basis(problem, hint)
        .ok_or_else(|| Error::Singular("design rows do not span the coefficient space".into()))?;
    let mut in_basis = vec![false; m];
    for &i in &basis {
        in_basis[i] = true;
    }

    let mut r = vec![0.0; m];
    let mut zero = vec![false; m];
    // Branch of each row whose residual is held at zero without being basic.
    let mut positive = vec![false; m];
    let mut v = vec![0.0; m];
    let mut kinks: Vec<(f64, usize, f64)> = Vec::with_capacity(m);
    let mut degenerate = 0usize;
    let bland_after = 3 * m;
    let mut pivots = 0usize;

    loop {
        let mut zh = Vec::with_capacity(q * q);
        let mut yh = Vec::with_capacity(q);
        for &i in &basis {
            zh.extend_from_slice(problem.row(i));
            yh.push(problem.y[i]);
        }
        let lu = Lu::factor(q, zh).ok_or_else(|| Error::Singular("basis matrix became singular".into()))?;
        let theta = lu.solve(&yh);

        let mut w = vec![0.0; q];
        for i in 0..m {
            if in_basis[i] {
                r[i] = 0.0;
                zero[i] = true;
                continue;
            }
            let row = problem.row(i);
            let mut fit = 0.0;
            let mut size = problem.y[i].abs();
            for (a, t) in row.iter().zip(&theta) {
                fit += a * t;
                size += (a * t).abs();
            }
            r[i] = problem.y[i] - fit;
            zero[i] = r[i].abs() <= 1e-11 * (1.0 + size);
            if !zero[i] {
                positive[i] = r[i] > 0.0;
            }
            let psi = if positive[i] { problem.pos[i] } else { -problem.neg[i] };
            if psi != 0.0 {
                w.iter_mut().zip(row).for_each(|(acc, a)| *acc += psi * a);
            }
        }
        let u = lu.solve_transpose(&w);

        let bland = degenerate > bland_after;
        let mut entering: Option<(usize, f64, f64)> = None;
        let mut order: Vec<usize> = (0..q).collect();
        if bland {
            order.sort_by_key(|&k| basis[k]);
        }
        for k in order {
            let row = basis[k];
            let tol = 1e-10 * (1.0 + u[k].abs() + problem.pos[row] + problem.neg[row]);
            let g_plus = problem.neg[row] - u[k];
            let g_minus = problem.pos[row] + u[k];
            let (g, s) = if g_plus < g_minus { (g_plus, 1.0) } else { (g_minus, -1.0) };
            if g < -tol {
                if bland {
                    entering = Some((k, s, g));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| g < best) {
                    entering = Some((k, s, g));
                }
            }
        }
        let Some((k, s, g)) = entering else {
            return Ok(Vertex { theta, basis, pivots, status: Termination::Optimal });
        };
        if pivots >= max_pivots {
            return Ok(Vertex { theta, basis, pivots, status: Termination::IterationLimit });
        }

        let mut ek = vec![0.0; q];
        ek[k] = s;
        let delta = lu.solve(&ek);
        let delta_scale = delta.iter().fold(0.0_f64, |a, d| a.max(d.abs()));

        kinks.clear();
        for i in 0..m {
            if in_basis[i] {
                continue;
            }
            let row = problem.row(i);
            let vi: f64 = row.iter().zip(&delta).map(|(a, d)| a * d).sum();
            let row_scale = row.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            if vi.abs() <= 1e-11 * row_scale * delta_scale {
                v[i] = 0.0;
                continue;
            }
            v[i] = vi;
            // The residual moves as `r_i - t v_i`; a kink is where it leaves its branch.
            if positive[i] != (vi > 0.0) {
                continue;
            }
            let t = if zero[i] { 0.0 } else { (r[i] / vi).max(0.0) };
            kinks.push((t, i, (problem.pos[i] + problem.neg[i]) * vi.abs()));
        }
        kinks.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut slope = g;
        let mut step = None;
        for (pos, &(t, i, inc)) in kinks.iter().enumerate() {
            slope += inc;
            if slope >= 0.0 {
                step = Some((t, i, pos));
                break;
            }
        }
        let Some((t, enter, passed)) = step else {
            return Ok(Vertex { theta, basis, pivots, status: Termination::Unbounded });
        };
        if t <= 0.0 {
            degenerate += 1;
        }
        for &(_, i, _) in &kinks[..passed] {
            positive[i] = !positive[i];
        }
        positive[basis[k]] = s < 0.0;
        in_basis[basis[k]] = false;
        in_basis[enter] = true;
        basis[k] = enter;
        pivots += 1;
    }
}
