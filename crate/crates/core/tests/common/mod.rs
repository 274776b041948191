//! Helpers shared by the integration tests.
#![allow(dead_code)]

use quantseg_core::segmentation::SegmentCostTable;
use quantseg_core::{objective_value, Dataset, PenaltySpec, QuantileLevel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform covariates in `[-2, 2]` and responses `y = x'phi + noise` with `phi` uniform in `[-2, 2]`.
pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, p: usize, noise: f64) -> Dataset {
    let phi: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y = rows
        .iter()
        .map(|r| r.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() + noise * rng.random_range(-1.0..1.0))
        .collect();
    Dataset::new(y, rows).unwrap()
}

pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        let pivot = a[c].clone();
        for r in 0..n {
            if r != c {
                let f = a[r][c] / pivot[c];
                for (x, p) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                    *x -= f * p;
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn subsets(m: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, m: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, q, cur, out);
            cur.pop();
        }
    }
    rec(0, m, q, &mut cur, &mut out);
    out
}

/// Minimum objective over all vertices; `None` if no vertex exists.
pub fn brute_force(data: &Dataset, tau: QuantileLevel, pen: &PenaltySpec) -> Option<f64> {
    let p = data.p();
    let q = p + 1;
    let mut rows: Vec<(Vec<f64>, f64)> = (0..data.n())
        .map(|i| {
            let mut z = vec![1.0];
            z.extend_from_slice(data.row(i));
            (z, data.y()[i])
        })
        .collect();
    for j in 0..p {
        if pen.effective(j) > 0.0 {
            let mut z = vec![0.0; q];
            z[j + 1] = 1.0;
            rows.push((z, 0.0));
        }
    }
    let mut best: Option<f64> = None;
    for s in subsets(rows.len(), q) {
        let a = s.iter().map(|&i| rows[i].0.clone()).collect();
        let b = s.iter().map(|&i| rows[i].1).collect();
        if let Some(theta) = solve_dense(a, b) {
            let obj = objective_value(data, theta[0], &theta[1..], tau, pen).unwrap();
            best = Some(best.map_or(obj, |v: f64| v.min(obj)));
        }
    }
    best
}

/// Exhaustive minimizer over `k`-change-point vectors: totals summed left to
/// right, ties to the vector whose last change-point is smallest, then the one before.
pub fn enumerate_segmentations(table: &SegmentCostTable<'_>, k: usize) -> Option<(Vec<usize>, f64)> {
    let n = table.data().n();
    let m = table.config().min_len;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut cur = Vec::new();
    fn rec(
        table: &SegmentCostTable<'_>,
        n: usize,
        m: usize,
        k: usize,
        cur: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if cur.len() == k {
            let mut bounds = vec![0];
            bounds.extend(cur.iter().copied());
            bounds.push(n);
            let mut total = 0.0;
            for w in bounds.windows(2) {
                match table.cost(w[0], w[1]) {
                    Ok(c) => total += c,
                    Err(_) => return,
                }
            }
            let better = match best {
                None => true,
                Some((bv, bt)) => total < *bt || (total == *bt && colex_less(cur, bv)),
            };
            if better {
                *best = Some((cur.clone(), total));
            }
            return;
        }
        let prev = cur.last().copied().unwrap_or(0);
        let remaining = k - cur.len();
        for c in prev + m..=n.saturating_sub(remaining * m) {
            cur.push(c);
            rec(table, n, m, k, cur, best);
            cur.pop();
        }
    }
    rec(table, n, m, k, &mut cur, &mut best);
    best
}

fn colex_less(a: &[usize], b: &[usize]) -> bool {
    a.iter().rev().cmp(b.iter().rev()) == std::cmp::Ordering::Less
}
