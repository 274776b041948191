//! Domain types shared by every estimator: the dataset, the quantile level,
//! penalty specifications, fit results, and the check loss.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response vector plus a dense row-major regressor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    p: usize,
}

impl Dataset {
    /// Builds a dataset from a response vector and one regressor row per observation.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                found: rows.len(),
            });
        }
        let p = rows.first().map_or(0, Vec::len);
        let mut x = Vec::with_capacity(p * rows.len());
        for row in &rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            x.extend_from_slice(row);
        }
        Self::from_row_major(y, x, p)
    }

    /// Builds a dataset from a flat row-major `n x p` matrix.
    pub fn from_row_major(y: Vec<f64>, x: Vec<f64>, p: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one observation".into()));
        }
        if p == 0 {
            return Err(Error::InvalidInput("dataset needs at least one regressor".into()));
        }
        if x.len() != y.len() * p {
            return Err(Error::DimensionMismatch {
                expected: y.len() * p,
                found: x.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("response {} is not finite", i + 1)));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "regressor ({}, {}) is not finite",
                i / p + 1,
                i % p + 1
            )));
        }
        Ok(Self { y, x, p })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Regressor row `i` (zero based).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn x_row_major(&self) -> &[f64] {
        &self.x
    }

    /// Copy of the observations `l+1..=k` in one-based numbering, i.e. rows `l..k`.
    pub fn slice(&self, l: usize, k: usize) -> Result<Dataset> {
        if l >= k || k > self.n() {
            return Err(Error::InvalidInput(format!(
                "row range ({l}, {k}] outside 0..={}",
                self.n()
            )));
        }
        Ok(Dataset {
            y: self.y[l..k].to_vec(),
            x: self.x[l * self.p..k * self.p].to_vec(),
            p: self.p,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    /// Parses the `y,x1,...,xp` CSV layout. Row numbers in errors count the header as row 1.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv { row: 1, message: e.to_string() })?
            .clone();
        if headers.len() < 2 || &headers[0] != "y" {
            return Err(Error::Csv {
                row: 1,
                message: "header must be y,x1,...,xp".into(),
            });
        }
        for (j, name) in headers.iter().enumerate().skip(1) {
            if name != format!("x{j}") {
                return Err(Error::Csv {
                    row: 1,
                    message: format!("expected column x{j}, found {name:?}"),
                });
            }
        }
        let p = headers.len() - 1;
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let row = idx + 2;
            let record = record.map_err(|e| Error::Csv { row, message: e.to_string() })?;
            if record.len() != p + 1 {
                return Err(Error::Csv {
                    row,
                    message: format!("expected {} fields, found {}", p + 1, record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| Error::Csv {
                    row,
                    message: format!("cannot parse {field:?} as a number"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Csv {
                        row,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                if j == 0 {
                    y.push(value);
                } else {
                    x.push(value);
                }
            }
        }
        if y.is_empty() {
            return Err(Error::Csv { row: 2, message: "no observations".into() });
        }
        Dataset::from_row_major(y, x, p)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_csv_writer(file).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let header: Vec<String> = std::iter::once("y".to_string())
            .chain((1..=self.p).map(|j| format!("x{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n() {
            // `{:?}` prints the shortest string that round-trips exactly.
            write!(w, "{:?}", self.y[i])?;
            for v in self.row(i) {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }
}

/// Quantile index strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidInput(format!("quantile level {tau} not in (0, 1)")))
        }
    }

    pub fn median() -> Self {
        Self(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QuantileLevel {
    type Error = Error;
    fn try_from(tau: f64) -> Result<Self> {
        Self::new(tau)
    }
}

impl From<QuantileLevel> for f64 {
    fn from(q: QuantileLevel) -> f64 {
        q.0
    }
}

/// Weighted-L1 penalty `multiplier * sum_j weights[j] * |phi_j|`. The intercept is never penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    multiplier: f64,
    weights: Vec<f64>,
}

impl PenaltySpec {
    pub fn new(multiplier: f64, weights: Vec<f64>) -> Result<Self> {
        if !(multiplier.is_finite() && multiplier >= 0.0) {
            return Err(Error::InvalidInput(format!("penalty multiplier {multiplier} must be finite and >= 0")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!("penalty weight {w} must be finite and >= 0")));
        }
        Ok(Self { multiplier, weights })
    }

    /// The unpenalized problem.
    pub fn zero(p: usize) -> Self {
        Self { multiplier: 0.0, weights: vec![0.0; p] }
    }

    pub fn uniform(multiplier: f64, p: usize) -> Result<Self> {
        Self::new(multiplier, vec![1.0; p])
    }

    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `multiplier * weights[j]`, the per-coordinate cost of `|phi_j|`.
    pub fn effective(&self, j: usize) -> f64 {
        if self.multiplier == 0.0 {
            0.0
        } else {
            self.multiplier * self.weights[j]
        }
    }

    pub fn is_zero(&self) -> bool {
        (0..self.len()).all(|j| self.effective(j) == 0.0)
    }

    /// Value of the penalty term at `phi`.
    pub fn value(&self, phi: &[f64]) -> f64 {
        phi.iter()
            .enumerate()
            .map(|(j, v)| if v.abs() == 0.0 { 0.0 } else { self.effective(j) * v.abs() })
            .sum()
    }
}

/// Output of every estimator in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Estimate of the error quantile (zero for estimators without an intercept).
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Value of the minimized objective at the returned point.
    pub objective: f64,
    /// Indices of coefficients that are nonzero under [`is_zero_coefficient`].
    pub active_set: Vec<usize>,
    pub n_zero_residuals: usize,
    /// False only for iterative estimators that stopped at their iteration limit.
    pub converged: bool,
}

impl FitResult {
    /// Builds a result for a fit on rows `l..k` of `data`.
    pub(crate) fn assemble(
        data: &Dataset,
        (l, k): (usize, usize),
        intercept: f64,
        coefficients: Vec<f64>,
        objective: f64,
        converged: bool,
    ) -> Self {
        let active_set = active_set(&coefficients);
        let n_zero_residuals = (l..k)
            .filter(|&i| is_zero_residual(residual(data, i, intercept, &coefficients), data.y()[i]))
            .count();
        Self {
            intercept,
            coefficients,
            objective,
            active_set,
            n_zero_residuals,
            converged,
        }
    }

    /// Coefficients with exact zeros where the zero tolerance says so.
    pub fn is_zero(&self, j: usize) -> bool {
        !self.active_set.contains(&j)
    }
}

/// A coefficient is treated as zero iff `|phi_j| <= 1e-9 * (1 + ||phi||_inf)`.
pub fn is_zero_coefficient(value: f64, inf_norm: f64) -> bool {
    value.abs() <= 1e-9 * (1.0 + inf_norm)
}

pub fn active_set(coefficients: &[f64]) -> Vec<usize> {
    let inf = coefficients.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    coefficients
        .iter()
        .enumerate()
        .filter(|(_, v)| !is_zero_coefficient(**v, inf))
        .map(|(j, _)| j)
        .collect()
}

/// Residual `r` is counted as zero iff `|r| <= 1e-8 * (1 + |y|)`.
pub fn is_zero_residual(r: f64, y: f64) -> bool {
    r.abs() <= 1e-8 * (1.0 + y.abs())
}

pub fn residual(data: &Dataset, i: usize, b: f64, phi: &[f64]) -> f64 {
    data.y()[i] - b - dot(data.row(i), phi)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Check loss `rho_tau(r) = r * (tau * 1{r > 0} - (1 - tau) * 1{r <= 0})`.
pub fn check_loss(r: f64, tau: QuantileLevel) -> f64 {
    let t = tau.value();
    if r > 0.0 {
        t * r
    } else {
        -(1.0 - t) * r
    }
}

/// Sum of check losses at `(b, phi)` plus the weighted-L1 penalty.
pub fn objective_value(
    data: &Dataset,
    b: f64,
    phi: &[f64],
    tau: QuantileLevel,
    penalty: &PenaltySpec,
) -> Result<f64> {
    if phi.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: phi.len() });
    }
    if penalty.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), found: penalty.len() });
    }
    let loss: f64 = (0..data.n()).map(|i| check_loss(residual(data, i, b, phi), tau)).sum();
    Ok(loss + penalty.value(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tau(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    #[test]
    fn check_loss_examples() {
        assert_eq!(check_loss(2.0, tau(0.5)), 1.0);
        assert_eq!(check_loss(0.0, tau(0.3)), 0.0);
        assert_eq!(check_loss(-4.0, tau(0.25)), 3.0);
    }

    #[test]
    fn objective_hand_sum() {
        let data = Dataset::new(vec![1.0, 2.0, 3.0], vec![vec![0.0]; 3]).unwrap();
        let v = objective_value(&data, 2.0, &[0.0], tau(0.5), &PenaltySpec::zero(1)).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn objective_zero_on_noiseless_truth() {
        let phi = [1.5, -2.0];
        let rows = vec![vec![0.3, 1.0], vec![-1.0, 2.0], vec![4.0, 0.5]];
        let y = rows.iter().map(|r| dot(r, &phi)).collect();
        let data = Dataset::new(y, rows).unwrap();
        let v = objective_value(&data, 0.0, &phi, tau(0.4), &PenaltySpec::zero(2)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn objective_rejects_wrong_length() {
        let data = Dataset::new(vec![1.0], vec![vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            objective_value(&data, 0.0, &[1.0], tau(0.5), &PenaltySpec::zero(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(QuantileLevel::new(0.0).is_err());
        assert!(QuantileLevel::new(1.0).is_err());
        assert!(PenaltySpec::new(-1.0, vec![1.0]).is_err());
        assert!(PenaltySpec::new(1.0, vec![f64::NAN]).is_err());
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![1.0], vec![vec![f64::INFINITY]]).is_err());
        assert!(Dataset::new(vec![1.0, 2.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn csv_reports_row_of_bad_field() {
        let text = "y,x1,x2\n1,2,3\n4,oops,6\n";
        match Dataset::from_csv_reader(text.as_bytes()) {
            Err(Error::Csv { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let bad_header = "y,z1\n1,2\n";
        assert!(matches!(Dataset::from_csv_reader(bad_header.as_bytes()), Err(Error::Csv { row: 1, .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = Dataset::new(
            vec![0.1, -3.25e-7, 1.0 / 3.0],
            vec![vec![1.0, 2.5], vec![-0.0, 7e10], vec![std::f64::consts::PI, -1.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        data.to_csv_writer(&mut buf).unwrap();
        let back = Dataset::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    proptest! {
        #[test]
        fn check_loss_nonnegative_and_zero_only_at_zero(r in -1e6f64..1e6, t in 0.01f64..0.99) {
            let v = check_loss(r, tau(t));
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, r == 0.0);
        }

        #[test]
        fn check_loss_convex(r1 in -100.0f64..100.0, r2 in -100.0f64..100.0, s in 0.0f64..1.0, t in 0.01f64..0.99) {
            let q = tau(t);
            let lhs = check_loss(s * r1 + (1.0 - s) * r2, q);
            let rhs = s * check_loss(r1, q) + (1.0 - s) * check_loss(r2, q);
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn check_loss_lipschitz(r1 in -100.0f64..100.0, r2 in -100.0f64..100.0, t in 0.01f64..0.99) {
            let q = tau(t);
            let diff = (check_loss(r1, q) - check_loss(r2, q)).abs();
            prop_assert!(diff <= t.max(1.0 - t) * (r1 - r2).abs() + 1e-9);
        }

        #[test]
        fn penalty_decomposes(
            phi in prop::collection::vec(-5.0f64..5.0, 3),
            y in prop::collection::vec(-5.0f64..5.0, 4),
            b in -2.0f64..2.0,
        ) {
            let rows = vec![vec![1.0, 0.5, -1.0], vec![0.0, 2.0, 1.0], vec![-1.0, 1.0, 0.3], vec![2.0, -0.5, 0.0]];
            let data = Dataset::new(y, rows).unwrap();
            let q = tau(0.37);
            let plain = objective_value(&data, b, &phi, q, &PenaltySpec::zero(3)).unwrap();
            let pen = objective_value(&data, b, &phi, q, &PenaltySpec::uniform(1.0, 3).unwrap()).unwrap();
            let l1: f64 = phi.iter().map(|v| v.abs()).sum();
            prop_assert!((pen - plain - l1).abs() <= 1e-9 * (1.0 + pen.abs()));
        }

        #[test]
        fn objective_permutation_invariant(seed in 0u64..1000) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.7 - 2.0, (i * i) as f64 * 0.1]).collect();
            let y: Vec<f64> = (0..6).map(|i| (i as f64).sin() * 3.0).collect();
            let mut order: Vec<usize> = (0..6).collect();
            order.shuffle(&mut rng);
            let a = Dataset::new(y.clone(), rows.clone()).unwrap();
            let b = Dataset::new(order.iter().map(|&i| y[i]).collect(), order.iter().map(|&i| rows[i].clone()).collect()).unwrap();
            let pen = PenaltySpec::new(0.7, vec![1.0, 2.0]).unwrap();
            let va = objective_value(&a, 0.2, &[0.5, -1.0], tau(0.6), &pen).unwrap();
            let vb = objective_value(&b, 0.2, &[0.5, -1.0], tau(0.6), &pen).unwrap();
            prop_assert!((va - vb).abs() <= 1e-12 * (1.0 + va.abs()));
        }
    }
}
