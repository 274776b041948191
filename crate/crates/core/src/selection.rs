//! Choosing the number of change-points.
//!
//! For each candidate `K` the best `K`-change-point segmentation gives the scale
//! estimate `s_K = S_K / n`; the criterion `B(K) = n ln(s_K) + G(K) B_n` trades fit
//! against the number of breaks and the smallest value wins (the smaller `K` on
//! an exact tie). Defaults are `G(K) = K` and `B_n = n^(5/8)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{map_indices, Parallelism};
use crate::segmentation::{best_segmentation_with, SegmentCostTable, Segmentation};

/// Floor for the scale estimate when a segmentation fits perfectly.
pub const SCALE_FLOOR: f64 = 1e-12;

/// `n ln(s_hat) + g_k * b_n`.
pub fn criterion_value(n: usize, s_hat: f64, g_k: f64, b_n: f64) -> Result<f64> {
    if !(s_hat > 0.0) {
        return Err(Error::NonPositiveScale(s_hat));
    }
    Ok(n as f64 * s_hat.ln() + g_k * b_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_max: usize,
    /// `B_n = n^bn_exponent`.
    #[serde(default = "default_bn_exponent")]
    pub bn_exponent: f64,
    /// Assumed exponent `a` of the shortest phase length `n^a`, used only by [`check_bn_regime`].
    #[serde(default = "default_phase_exponent")]
    pub phase_exponent: f64,
}

fn default_bn_exponent() -> f64 {
    0.625
}

fn default_phase_exponent() -> f64 {
    0.75
}

impl SelectionConfig {
    pub fn new(k_max: usize) -> Self {
        Self { k_max, bn_exponent: default_bn_exponent(), phase_exponent: default_phase_exponent() }
    }

    /// `G(K) = K`.
    pub fn g(&self, k: usize) -> f64 {
        k as f64
    }

    pub fn b_n(&self, n: usize) -> f64 {
        (n as f64).powf(self.bn_exponent)
    }
}

/// Consistency needs `n^(-a) B_n -> 0` and `n^(-1/2) B_n -> infinity`, i.e.
/// `1/2 < bn_exponent < a`. Returns the violated conditions; callers warn, since
/// the guarantee is asymptotic.
pub fn check_bn_regime(cfg: &SelectionConfig) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.bn_exponent <= 0.5 {
        out.push(format!("B_n = n^{} does not grow faster than n^(1/2)", cfg.bn_exponent));
    }
    if cfg.bn_exponent >= cfg.phase_exponent {
        out.push(format!(
            "B_n = n^{} does not grow slower than the phase length n^{}",
            cfg.bn_exponent, cfg.phase_exponent
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub s_hat: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionTrace {
    pub rows: Vec<CriterionRow>,
    pub chosen_k: usize,
}

impl CriterionTrace {
    /// Columns `K,s_hat,B`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("serializing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen_k: usize,
    pub trace: CriterionTrace,
    pub segmentation: Segmentation,
}

/// Minimizes the criterion over `K = 0..=k_max`, sharing one cost table.
/// Values of `K` without a feasible segmentation are dropped with a warning.
pub fn select_k(table: &SegmentCostTable<'_>, cfg: &SelectionConfig, par: Parallelism) -> Result<Selection> {
    for w in check_bn_regime(cfg) {
        log::warn!("{w}");
    }
    let n = table.data().n();
    table.prefetch(par, cfg.k_max);
    let segs = map_indices(par, cfg.k_max + 1, |k| best_segmentation_with(table, k));
    let b_n = cfg.b_n(n);
    let mut rows = Vec::new();
    let mut best: Option<(f64, usize, Segmentation)> = None;
    for (k, seg) in segs.into_iter().enumerate() {
        let seg = match seg {
            Ok(s) => s,
            Err(e) => {
                log::warn!("skipping K = {k}: {e}");
                continue;
            }
        };
        let mut s_hat = seg.total_objective / n as f64;
        if !(s_hat > SCALE_FLOOR) {
            log::warn!("K = {k}: scale estimate {s_hat} floored at {SCALE_FLOOR}");
            s_hat = SCALE_FLOOR;
        }
        let b = criterion_value(n, s_hat, cfg.g(k), b_n)?;
        rows.push(CriterionRow { k, s_hat, b });
        if best.as_ref().is_none_or(|(v, _, _)| b < *v) {
            best = Some((b, k, seg));
        }
    }
    let (_, chosen_k, segmentation) =
        best.ok_or(Error::Infeasible { k: 0, required: table.config().min_len, n })?;
    Ok(Selection { chosen_k, trace: CriterionTrace { rows, chosen_k }, segmentation })
}
