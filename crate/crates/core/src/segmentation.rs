//! Multiphase estimation by exact minimization of the segmented objective.
//!
//! The cost of a segment `(l, k]` (rows `l..k`) is the minimized penalized
//! objective of a fit on that segment alone, with the penalty multiplier taken
//! from the segment length. The segmented objective of change-points
//! `l_1 < ... < l_K` is the sum of the `K + 1` segment costs, and
//! [`best_segmentation_with`] minimizes it exactly by dynamic programming over
//! prefixes.
//!
//! Costs live in a [`SegmentCostTable`] that fills one row `l` at a time, sweeping
//! `k` upward and warm-starting each simplex solve from the previous segment's
//! basis. A row is computed at most once and never changes afterwards.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::adaptive::{fit_adaptive_range, AdaptiveBases, AdaptiveConfig};
use crate::baselines::{lad_lasso_type_range, ls_adaptive_range, LadBases, LS_CHI};
use crate::error::{Error, Result};
use crate::model::{Dataset, FitResult, QuantileLevel};
use crate::parallel::{map_indices, Parallelism};

/// Estimator fitted on every segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentMethod {
    /// Adaptive-LASSO quantile regression at the configured `tau`.
    AdaptiveQuantile {
        #[serde(default)]
        config: AdaptiveConfig,
    },
    /// LASSO-type absolute-deviation fit; its QLASSO pilot is taken at `pilot_tau`.
    LadLassoType {
        #[serde(default = "median")]
        pilot_tau: QuantileLevel,
    },
    /// Least squares with adaptive LASSO, weight exponent `chi`.
    LsAdaptiveLasso {
        #[serde(default = "ls_chi")]
        chi: f64,
    },
}

fn median() -> QuantileLevel {
    QuantileLevel::median()
}

fn ls_chi() -> f64 {
    LS_CHI
}

impl Default for SegmentMethod {
    fn default() -> Self {
        SegmentMethod::AdaptiveQuantile { config: AdaptiveConfig::default() }
    }
}

#[derive(Debug, Clone, Default)]
enum Warm {
    #[default]
    Cold,
    Adaptive(AdaptiveBases),
    Lad(LadBases),
}

impl SegmentMethod {
    fn fit_range(&self, data: &Dataset, l: usize, k: usize, tau: QuantileLevel, warm: &Warm) -> Result<(FitResult, Warm)> {
        let lambda = ((k - l) as f64).powf(0.4);
        match self {
            SegmentMethod::AdaptiveQuantile { config } => {
                let w = match warm {
                    Warm::Adaptive(b) => Some(b),
                    _ => None,
                };
                fit_adaptive_range(data, l, k, tau, config, w).map(|(f, b)| (f.fit, Warm::Adaptive(b)))
            }
            SegmentMethod::LadLassoType { pilot_tau } => {
                let w = match warm {
                    Warm::Lad(b) => Some(b),
                    _ => None,
                };
                lad_lasso_type_range(data, l, k, *pilot_tau, w).map(|(f, b)| (f, Warm::Lad(b)))
            }
            SegmentMethod::LsAdaptiveLasso { chi } => ls_adaptive_range(data, l, k, *chi, lambda).map(|f| (f, Warm::Cold)),
        }
    }
}

/// `max(p + 2, ceil(n^0.51))`.
pub fn default_min_len(n: usize, p: usize) -> usize {
    (p + 2).max((n as f64).powf(0.51).ceil() as usize)
}

/// Default quantile level for multiphase fits.
pub const MULTIPHASE_TAU: f64 = 0.55;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub min_len: usize,
    pub tau: QuantileLevel,
    #[serde(default)]
    pub method: SegmentMethod,
}

impl SegmentationConfig {
    /// Adaptive quantile fits at `tau` with the default minimum segment length.
    pub fn new(data: &Dataset, tau: QuantileLevel) -> Self {
        Self { min_len: default_min_len(data.n(), data.p()), tau, method: SegmentMethod::default() }
    }

    pub fn with_method(mut self, method: SegmentMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.min_len < p + 2 {
            return Err(Error::InvalidInput(format!("min_len {} is below p + 2 = {}", self.min_len, p + 2)));
        }
        match &self.method {
            SegmentMethod::AdaptiveQuantile { config } => config.validate(),
            SegmentMethod::LsAdaptiveLasso { chi } if !(chi.is_finite() && *chi > 0.0) => {
                Err(Error::InvalidInput(format!("chi = {chi} must be > 0")))
            }
            _ => Ok(()),
        }
    }
}

/// One computed segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEntry {
    pub cost: f64,
    pub fit: FitResult,
}

type Row = Vec<std::result::Result<SegmentEntry, String>>;

/// Lazily filled segment costs `cost(l, k)` for `k - l >= min_len`.
#[derive(Debug)]
pub struct SegmentCostTable<'a> {
    data: &'a Dataset,
    cfg: SegmentationConfig,
    rows: Vec<OnceLock<Row>>,
}

impl<'a> SegmentCostTable<'a> {
    pub fn new(data: &'a Dataset, cfg: SegmentationConfig) -> Result<Self> {
        cfg.validate(data.p())?;
        let rows = (0..data.n()).map(|_| OnceLock::new()).collect();
        Ok(Self { data, cfg, rows })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn config(&self) -> &SegmentationConfig {
        &self.cfg
    }

    fn row(&self, l: usize) -> &Row {
        self.rows[l].get_or_init(|| self.compute_row(l))
    }

    fn compute_row(&self, l: usize) -> Row {
        let n = self.data.n();
        let start = l + self.cfg.min_len;
        let mut warm = Warm::Cold;
        let mut out = Vec::with_capacity((n + 1).saturating_sub(start));
        for k in start..=n {
            let attempt = self.cfg.method.fit_range(self.data, l, k, self.cfg.tau, &warm);
            // A warm start can only change which optimal vertex is reached; retry cold on failure.
            let attempt = match (attempt, &warm) {
                (Err(_), Warm::Adaptive(_) | Warm::Lad(_)) => {
                    self.cfg.method.fit_range(self.data, l, k, self.cfg.tau, &Warm::Cold)
                }
                (a, _) => a,
            };
            match attempt {
                Ok((fit, next)) => {
                    warm = next;
                    out.push(Ok(SegmentEntry { cost: fit.objective, fit }));
                }
                Err(e) => {
                    log::warn!("segment ({l}, {k}] failed: {e}");
                    warm = Warm::Cold;
                    out.push(Err(e.to_string()));
                }
            }
        }
        out
    }

    /// The fit of rows `l..k`.
    pub fn entry(&self, l: usize, k: usize) -> Result<&SegmentEntry> {
        let n = self.data.n();
        if l >= k || k > n {
            return Err(Error::InvalidInput(format!("segment ({l}, {k}] outside 0..={n}")));
        }
        if k - l < self.cfg.min_len {
            return Err(Error::SegmentTooShort { l, k, len: k - l, min: self.cfg.min_len });
        }
        match &self.row(l)[k - l - self.cfg.min_len] {
            Ok(e) => Ok(e),
            Err(message) => Err(Error::Segment { l, k, message: message.clone() }),
        }
    }

    pub fn cost(&self, l: usize, k: usize) -> Result<f64> {
        self.entry(l, k).map(|e| e.cost)
    }

    /// Computes every row that a segmentation with up to `max_breaks` change-points can touch.
    pub fn prefetch(&self, par: Parallelism, max_breaks: usize) {
        let n = self.data.n();
        let m = self.cfg.min_len;
        if n < m {
            return;
        }
        let last = if max_breaks == 0 { 0 } else { n - m };
        map_indices(par, last + 1, |l| {
            self.row(l);
        });
    }
}

/// Change-points with the per-segment fits they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Strictly increasing; segment `r` covers rows `l_r..l_{r+1}` with `l_0 = 0`, `l_{K+1} = n`.
    pub change_points: Vec<usize>,
    pub segment_fits: Vec<FitResult>,
    /// Sum of the segment objectives, accumulated left to right.
    pub total_objective: f64,
}

impl Segmentation {
    /// Segment boundaries `0, l_1, ..., l_K, n`.
    pub fn bounds(&self, n: usize) -> Vec<usize> {
        std::iter::once(0).chain(self.change_points.iter().copied()).chain(std::iter::once(n)).collect()
    }

    /// Assembles the segmentation at `change_points` from table entries.
    pub fn from_table(table: &SegmentCostTable<'_>, change_points: &[usize]) -> Result<Self> {
        check_breaks(table.data.n(), table.cfg.min_len, change_points)?;
        let n = table.data.n();
        let bounds: Vec<usize> =
            std::iter::once(0).chain(change_points.iter().copied()).chain(std::iter::once(n)).collect();
        let mut fits = Vec::with_capacity(bounds.len() - 1);
        let mut total = 0.0;
        for w in bounds.windows(2) {
            let e = table.entry(w[0], w[1])?;
            total += e.cost;
            fits.push(e.fit.clone());
        }
        Ok(Self { change_points: change_points.to_vec(), segment_fits: fits, total_objective: total })
    }
}

/// The cost of one segment, fitted from scratch.
pub fn segment_cost(data: &Dataset, l: usize, k: usize, cfg: &SegmentationConfig) -> Result<(f64, FitResult)> {
    cfg.validate(data.p())?;
    if l >= k || k > data.n() {
        return Err(Error::InvalidInput(format!("segment ({l}, {k}] outside 0..={}", data.n())));
    }
    if k - l < cfg.min_len {
        return Err(Error::SegmentTooShort { l, k, len: k - l, min: cfg.min_len });
    }
    let (fit, _) = cfg.method.fit_range(data, l, k, cfg.tau, &Warm::Cold)?;
    Ok((fit.objective, fit))
}

fn check_breaks(n: usize, min_len: usize, change_points: &[usize]) -> Result<()> {
    let mut prev = 0;
    for &c in change_points.iter().chain(std::iter::once(&n)) {
        if c <= prev {
            return Err(Error::InadmissibleBreaks(format!("{change_points:?} is not strictly increasing inside (0, {n})")));
        }
        if c - prev < min_len {
            return Err(Error::InadmissibleBreaks(format!(
                "{change_points:?} leaves a segment ({prev}, {c}] shorter than {min_len}"
            )));
        }
        prev = c;
    }
    Ok(())
}

/// Exact minimizer of the segmented objective over all admissible `k`-change-point vectors.
pub fn best_segmentation(data: &Dataset, k: usize, cfg: &SegmentationConfig) -> Result<Segmentation> {
    let table = SegmentCostTable::new(data, cfg.clone())?;
    best_segmentation_with(&table, k)
}

/// [`best_segmentation`] over a shared cost table.
///
/// `D(j, e) = min_l D(j - 1, l) + cost(l, e)` with `l` scanned upward and replaced
/// only on strict improvement, so ties go to the smallest change-point, the last
/// change-point being decided first. Segments whose fit failed are skipped.
pub fn best_segmentation_with(table: &SegmentCostTable<'_>, k: usize) -> Result<Segmentation> {
    let n = table.data.n();
    let m = table.cfg.min_len;
    let required = (k + 1) * m;
    if n < required {
        return Err(Error::Infeasible { k, required, n });
    }
    if k == 0 {
        return Segmentation::from_table(table, &[]);
    }
    // best[j][e]: minimal cost of covering rows 0..e with j + 1 segments.
    let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
    let mut arg = vec![vec![usize::MAX; n + 1]; k + 1];
    for e in m..=n - k * m {
        if let Ok(c) = table.cost(0, e) {
            best[0][e] = c;
        }
    }
    for j in 1..=k {
        let first_end = (j + 1) * m;
        let last_end = if j == k { n } else { n - (k - j) * m };
        let ends: Box<dyn Iterator<Item = usize>> = if j == k { Box::new(std::iter::once(n)) } else { Box::new(first_end..=last_end) };
        for e in ends {
            let mut val = f64::INFINITY;
            let mut at = usize::MAX;
            for l in j * m..=e - m {
                let prev = best[j - 1][l];
                if !prev.is_finite() {
                    continue;
                }
                if let Ok(c) = table.cost(l, e) {
                    let v = prev + c;
                    if v < val {
                        val = v;
                        at = l;
                    }
                }
            }
            best[j][e] = val;
            arg[j][e] = at;
        }
    }
    if !best[k][n].is_finite() {
        return Err(Error::Infeasible { k, required, n });
    }
    let mut cps = vec![0; k];
    let mut e = n;
    for j in (1..=k).rev() {
        let l = arg[j][e];
        cps[j - 1] = l;
        e = l;
    }
    Segmentation::from_table(table, &cps)
}

/// Segment fits at given change-points, each fitted from scratch.
pub fn refit_at_breaks(data: &Dataset, change_points: &[usize], cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate(data.p())?;
    let n = data.n();
    check_breaks(n, cfg.min_len, change_points)?;
    let bounds: Vec<usize> = std::iter::once(0).chain(change_points.iter().copied()).chain(std::iter::once(n)).collect();
    let mut fits = Vec::with_capacity(bounds.len() - 1);
    let mut total = 0.0;
    for w in bounds.windows(2) {
        let (c, fit) = segment_cost(data, w[0], w[1], cfg)?;
        total += c;
        fits.push(fit);
    }
    Ok(Segmentation { change_points: change_points.to_vec(), segment_fits: fits, total_objective: total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_len_default() {
        assert_eq!(default_min_len(200, 10), 15);
        assert_eq!(default_min_len(100, 10), 12);
        assert_eq!(default_min_len(20, 1), 5);
    }

    #[test]
    fn break_validation() {
        assert!(check_breaks(100, 12, &[]).is_ok());
        assert!(check_breaks(100, 12, &[30]).is_ok());
        assert!(check_breaks(100, 12, &[30, 30]).is_err());
        assert!(check_breaks(100, 12, &[5]).is_err());
        assert!(check_breaks(100, 12, &[95]).is_err());
        assert!(check_breaks(100, 12, &[50, 40]).is_err());
        assert!(check_breaks(10, 12, &[]).is_err());
    }
}
