//! Seeded Monte Carlo experiments: generate, fit, score, aggregate.
//!
//! An [`ExperimentConfig`] names a design, a task and a replication count.
//! Replication `r` draws its data from stream `r` of the master seed, so each
//! replication is reproducible on its own and the set of outcomes does not
//! depend on how replications are scheduled. Outcomes are reduced in a way
//! that ignores their order: counts are summed as integers and floating-point
//! sums run over sorted values.
//!
//! A [`Suite`] is a list of experiments reported together; the reproduction
//! targets in `configs/` are suites.

use serde::{Deserialize, Serialize};

use crate::adaptive::{fit_adaptive, AdaptiveConfig, LambdaRule};
use crate::baselines::{fit_lad_lasso_type, fit_ls_adaptive_lasso, fit_qlasso_pilot, fit_scad_quantile, ScadConfig, LS_CHI};
use crate::error::{Error, Result};
use crate::metrics::{lower_median, selection_counts, spread_stats, SelectionCounts, SelectionRates, SpreadStats, DEFAULT_ZERO_TOL};
use crate::model::{Dataset, FitResult, QuantileLevel};
use crate::parallel::{map_indices, Parallelism};
use crate::segmentation::{best_segmentation_with, default_min_len, SegmentCostTable, SegmentMethod, Segmentation, SegmentationConfig, MULTIPHASE_TAU};
use crate::selection::{select_k, SelectionConfig};
use crate::simulation::{catalog, generate_replication, Design, GroundTruth};

/// A catalog name or an inline design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignRef {
    Named(String),
    Custom(Design),
}

impl DesignRef {
    pub fn resolve(&self) -> Result<Design> {
        let d = match self {
            DesignRef::Named(name) => catalog(name)?,
            DesignRef::Custom(d) => d.clone(),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Single-phase estimators compared on zero selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitMethod {
    AdaptiveQuantile {
        #[serde(default)]
        config: AdaptiveConfig,
    },
    /// Penalty multiplier `lambda_rule(n)`.
    LsAdaptiveLasso {
        #[serde(default = "ls_chi")]
        chi: f64,
        #[serde(default)]
        lambda_rule: LambdaRule,
    },
    LadLassoType,
    /// LLA from the QLASSO pilot at the experiment's `tau`.
    Scad {
        #[serde(default = "scad_a1")]
        a1: f64,
        #[serde(default = "scad_iter")]
        max_iter: usize,
    },
}

fn ls_chi() -> f64 {
    LS_CHI
}

fn scad_a1() -> f64 {
    5.0
}

fn scad_iter() -> usize {
    50
}

impl FitMethod {
    pub fn fit(&self, data: &Dataset, tau: QuantileLevel) -> Result<FitResult> {
        match self {
            FitMethod::AdaptiveQuantile { config } => fit_adaptive(data, tau, config),
            FitMethod::LsAdaptiveLasso { chi, lambda_rule } => fit_ls_adaptive_lasso(data, *chi, lambda_rule.eval(data.n())),
            FitMethod::LadLassoType => fit_lad_lasso_type(data),
            FitMethod::Scad { a1, max_iter } => {
                let pilot = fit_qlasso_pilot(data, tau)?;
                let mut cfg = ScadConfig::from_pilot(&pilot);
                cfg.a1 = *a1;
                cfg.max_iter = *max_iter;
                cfg.validate()?;
                fit_scad_quantile(data, tau, &cfg)
            }
        }
    }
}

/// A method with the label used for its report columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled<M> {
    pub label: String,
    #[serde(flatten)]
    pub method: M,
}

fn default_multiphase_tau() -> QuantileLevel {
    QuantileLevel::new(MULTIPHASE_TAU).expect("constant lies in (0, 1)")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    /// Zero-selection rates of single-phase fits at each `tau`.
    Selection { taus: Vec<QuantileLevel>, methods: Vec<Labeled<FitMethod>> },
    /// Change-point estimation with a known number of breaks (default: the design's).
    Segmentation {
        #[serde(default)]
        k: Option<usize>,
        #[serde(default = "default_multiphase_tau")]
        tau: QuantileLevel,
        #[serde(default)]
        min_len: Option<usize>,
        methods: Vec<Labeled<SegmentMethod>>,
    },
    /// Histogram of the selected number of change-points.
    SelectK {
        #[serde(default = "default_multiphase_tau")]
        tau: QuantileLevel,
        #[serde(default)]
        min_len: Option<usize>,
        selection: SelectionConfig,
        methods: Vec<Labeled<SegmentMethod>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub design: DesignRef,
    pub replications: usize,
    pub seed: u64,
    pub task: Task,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Design> {
        let design = self.design.resolve()?;
        if self.replications == 0 {
            return Err(Error::InvalidInput(format!("{}: replications must be positive", self.name)));
        }
        let empty = match &self.task {
            Task::Selection { taus, methods } => {
                if design.phases.len() != 1 {
                    return Err(Error::InvalidInput(format!("{}: selection needs a single-phase design", self.name)));
                }
                taus.is_empty() || methods.is_empty()
            }
            Task::Segmentation { k, methods, .. } => {
                if k.is_some_and(|k| k + 1 != design.phases.len()) {
                    log::warn!("{}: fitting {} breaks to a {}-phase design; per-segment rates are skipped", self.name, k.unwrap_or(0), design.phases.len());
                }
                methods.is_empty()
            }
            Task::SelectK { methods, .. } => methods.is_empty(),
        };
        if empty {
            return Err(Error::InvalidInput(format!("{}: nothing to run", self.name)));
        }
        Ok(design)
    }
}

/// Experiments reported together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub experiments: Vec<ExperimentConfig>,
}

impl Suite {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Overrides every experiment's replication count and/or seed.
    pub fn with_overrides(mut self, replications: Option<usize>, seed: Option<u64>) -> Self {
        for e in &mut self.experiments {
            if let Some(r) = replications {
                e.replications = r;
            }
            if let Some(s) = seed {
                e.seed = s;
            }
        }
        self
    }
}

/// A replication that produced no estimate for one method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCell {
    pub tau: f64,
    pub method: String,
    pub rates: SelectionRates,
    pub counts: SelectionCounts,
    pub fits: usize,
    /// Fits flagged `converged = false` (SCAD at its iteration limit); still scored.
    pub non_converged: usize,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRates {
    pub segment: usize,
    pub estimated_breaks: SelectionRates,
    pub true_breaks: SelectionRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationSummary {
    pub method: String,
    /// Lower median of each estimated change-point.
    pub median_breaks: Vec<Option<usize>>,
    /// Empty when the number of breaks differs from the design's.
    pub segments: Vec<SegmentRates>,
    /// Over all segments' true supports at the estimated breaks.
    pub spread: Option<SpreadStats>,
    pub fits: usize,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectKSummary {
    pub method: String,
    /// `counts[k]`: replications choosing `k` change-points.
    pub counts: Vec<usize>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Selection { cells: Vec<SelectionCell> },
    Segmentation { true_breaks: Vec<usize>, methods: Vec<SegmentationSummary> },
    SelectK { true_k: usize, methods: Vec<SelectKSummary> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub design: String,
    pub seed: u64,
    pub replications: usize,
    pub results: Results,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub reports: Vec<Report>,
}

/// Which columns [`SuiteReport::to_csv`] writes for segmentation results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CsvView {
    /// Everything.
    #[default]
    Full,
    /// Per-segment zero-selection rates only.
    Rates,
    /// Break medians and spread only.
    Summary,
}

// Per-replication outcome of one method.
enum Outcome<T> {
    Done(T),
    Failed(String),
}

fn collect_failures<T>(outs: &[(u64, &Outcome<T>)]) -> Vec<Failure> {
    let mut failures: Vec<Failure> = outs
        .iter()
        .filter_map(|(r, o)| match o {
            Outcome::Failed(m) => Some(Failure { replication: *r, message: m.clone() }),
            Outcome::Done(_) => None,
        })
        .collect();
    failures.sort_by_key(|f| f.replication);
    failures
}

/// Runs every replication, in parallel when `par` allows; the report does not depend on `par`.
pub fn run_experiment(cfg: &ExperimentConfig, par: Parallelism) -> Result<Report> {
    let design = cfg.validate()?;
    let reps = cfg.replications;
    let gen = |r: usize| generate_replication(&design, cfg.seed, r as u64);
    let results = match &cfg.task {
        Task::Selection { taus, methods } => {
            let per_rep = map_indices(par, reps, |r| -> Result<Vec<Outcome<(SelectionCounts, bool)>>> {
                let (data, truth) = gen(r)?;
                let phi = &truth.phases[0].phi;
                let mut out = Vec::with_capacity(taus.len() * methods.len());
                for &tau in taus {
                    for m in methods {
                        out.push(match m.method.fit(&data, tau) {
                            Ok(fit) => Outcome::Done((selection_counts(&fit.coefficients, phi, DEFAULT_ZERO_TOL)?, fit.converged)),
                            Err(e) => Outcome::Failed(e.to_string()),
                        });
                    }
                }
                Ok(out)
            });
            let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
            let mut cells = Vec::new();
            for (ti, &tau) in taus.iter().enumerate() {
                for (mi, m) in methods.iter().enumerate() {
                    let idx = ti * methods.len() + mi;
                    let outs: Vec<(u64, &Outcome<_>)> = per_rep.iter().enumerate().map(|(r, v)| (r as u64, &v[idx])).collect();
                    let mut counts = SelectionCounts::default();
                    let (mut fits, mut non_converged) = (0, 0);
                    for (_, o) in &outs {
                        if let Outcome::Done((c, conv)) = o {
                            counts.add(c);
                            fits += 1;
                            non_converged += usize::from(!conv);
                        }
                    }
                    cells.push(SelectionCell {
                        tau: tau.value(),
                        method: m.label.clone(),
                        rates: counts.rates(),
                        counts,
                        fits,
                        non_converged,
                        failures: collect_failures(&outs),
                    });
                }
            }
            Results::Selection { cells }
        }
        Task::Segmentation { k, tau, min_len, methods } => {
            let k = k.unwrap_or(design.phases.len() - 1);
            let matches_design = k + 1 == design.phases.len();
            let per_rep = map_indices(par, reps, |r| -> Result<Vec<Outcome<SegOutcome>>> {
                let (data, truth) = gen(r)?;
                methods
                    .iter()
                    .map(|m| {
                        let scfg = segmentation_config(&data, *tau, *min_len, &m.method);
                        Ok(match segment_once(&data, &truth, scfg, k, matches_design) {
                            Ok(o) => Outcome::Done(o),
                            Err(e) => Outcome::Failed(e.to_string()),
                        })
                    })
                    .collect()
            });
            let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
            let truth_phi: Vec<&[f64]> = design.phases.iter().map(|p| p.phi.as_slice()).collect();
            let methods = methods
                .iter()
                .enumerate()
                .map(|(mi, m)| {
                    let outs: Vec<(u64, &Outcome<SegOutcome>)> = per_rep.iter().enumerate().map(|(r, v)| (r as u64, &v[mi])).collect();
                    summarize_segmentation(&m.label, k, matches_design, &truth_phi, &outs)
                })
                .collect::<Result<Vec<_>>>()?;
            Results::Segmentation { true_breaks: design.breaks(), methods }
        }
        Task::SelectK { tau, min_len, selection, methods } => {
            let per_rep = map_indices(par, reps, |r| -> Result<Vec<Outcome<usize>>> {
                let (data, _) = gen(r)?;
                methods
                    .iter()
                    .map(|m| {
                        let scfg = segmentation_config(&data, *tau, *min_len, &m.method);
                        let chosen = SegmentCostTable::new(&data, scfg)
                            .and_then(|t| select_k(&t, selection, Parallelism::Sequential))
                            .map(|s| s.chosen_k);
                        Ok(match chosen {
                            Ok(k) => Outcome::Done(k),
                            Err(e) => Outcome::Failed(e.to_string()),
                        })
                    })
                    .collect()
            });
            let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
            let methods = methods
                .iter()
                .enumerate()
                .map(|(mi, m)| {
                    let outs: Vec<(u64, &Outcome<usize>)> = per_rep.iter().enumerate().map(|(r, v)| (r as u64, &v[mi])).collect();
                    let mut counts = vec![0; selection.k_max + 1];
                    for (_, o) in &outs {
                        if let Outcome::Done(k) = o {
                            counts[*k] += 1;
                        }
                    }
                    SelectKSummary { method: m.label.clone(), counts, failures: collect_failures(&outs) }
                })
                .collect();
            Results::SelectK { true_k: design.phases.len() - 1, methods }
        }
    };
    Ok(Report { name: cfg.name.clone(), design: design.name.clone(), seed: cfg.seed, replications: reps, results })
}

/// Runs each experiment in order.
pub fn run_suite(suite: &Suite, par: Parallelism) -> Result<SuiteReport> {
    let reports = suite.experiments.iter().map(|e| run_experiment(e, par)).collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport { name: suite.name.clone(), reports })
}

fn segmentation_config(data: &Dataset, tau: QuantileLevel, min_len: Option<usize>, method: &SegmentMethod) -> SegmentationConfig {
    SegmentationConfig {
        min_len: min_len.unwrap_or_else(|| default_min_len(data.n(), data.p())),
        tau,
        method: method.clone(),
    }
}

struct SegOutcome {
    breaks: Vec<usize>,
    // Per segment, at estimated and at true breaks; empty unless the break count matches the design.
    estimated: Vec<SelectionCounts>,
    at_truth: Vec<SelectionCounts>,
    coefficients: Vec<f64>,
}

fn segment_once(data: &Dataset, truth: &GroundTruth, cfg: SegmentationConfig, k: usize, score: bool) -> Result<SegOutcome> {
    let table = SegmentCostTable::new(data, cfg)?;
    let seg = best_segmentation_with(&table, k)?;
    if !score {
        return Ok(SegOutcome { breaks: seg.change_points, estimated: vec![], at_truth: vec![], coefficients: vec![] });
    }
    let at_true = Segmentation::from_table(&table, &truth.breaks)?;
    let counts = |s: &Segmentation| -> Result<Vec<SelectionCounts>> {
        s.segment_fits
            .iter()
            .zip(&truth.phases)
            .map(|(f, ph)| selection_counts(&f.coefficients, &ph.phi, DEFAULT_ZERO_TOL))
            .collect()
    };
    Ok(SegOutcome {
        estimated: counts(&seg)?,
        at_truth: counts(&at_true)?,
        coefficients: seg.segment_fits.iter().flat_map(|f| f.coefficients.iter().copied()).collect(),
        breaks: seg.change_points,
    })
}

fn summarize_segmentation(
    label: &str,
    k: usize,
    score: bool,
    truth_phi: &[&[f64]],
    outs: &[(u64, &Outcome<SegOutcome>)],
) -> Result<SegmentationSummary> {
    let done: Vec<&SegOutcome> = outs
        .iter()
        .filter_map(|(_, o)| match o {
            Outcome::Done(s) => Some(s),
            Outcome::Failed(_) => None,
        })
        .collect();
    let median_breaks = (0..k).map(|j| lower_median(&done.iter().map(|s| s.breaks[j]).collect::<Vec<_>>())).collect();
    let mut segments = Vec::new();
    let mut spread = None;
    if score {
        for (s, _) in truth_phi.iter().enumerate() {
            let (mut est, mut tru) = (SelectionCounts::default(), SelectionCounts::default());
            for o in &done {
                est.add(&o.estimated[s]);
                tru.add(&o.at_truth[s]);
            }
            segments.push(SegmentRates { segment: s, estimated_breaks: est.rates(), true_breaks: tru.rates() });
        }
        if !done.is_empty() {
            // Sorting makes the floating-point sums independent of replication order.
            let mut estimates: Vec<Vec<f64>> = done.iter().map(|o| o.coefficients.clone()).collect();
            estimates.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
            let truth: Vec<f64> = truth_phi.iter().flat_map(|p| p.iter().copied()).collect();
            spread = Some(spread_stats(&estimates, &truth)?);
        }
    }
    Ok(SegmentationSummary {
        method: label.to_string(),
        median_breaks,
        segments,
        spread,
        fits: done.len(),
        failures: collect_failures(outs),
    })
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Tables, one block per result kind in the suite; each row starts with the experiment name.
    ///
    /// * selection: one row per `tau`, columns `<method>_true_zero` and `<method>_false_zero`
    ///   followed by `<method>_non_converged` and `<method>_failures`;
    /// * segmentation: one row per method with break medians, spread, and per-segment rates
    ///   at estimated (`seg<r>_*`) and true (`seg<r>_*_at_true`) breaks;
    /// * select_k: one row per method with the counts `K0`, `K1`, ....
    pub fn to_csv(&self, view: CsvView) -> String {
        let mut blocks: Vec<(Vec<String>, Vec<Vec<String>>)> = Vec::new();
        for rep in &self.reports {
            let (header, rows) = report_table(rep, view);
            match blocks.iter_mut().find(|(h, _)| *h == header) {
                Some((_, acc)) => acc.extend(rows),
                None => blocks.push((header, rows)),
            }
        }
        let mut out = Vec::new();
        for (i, (header, rows)) in blocks.iter().enumerate() {
            if i > 0 {
                out.push(b'\n');
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("writing to memory");
            for r in rows {
                w.write_record(r).expect("writing to memory");
            }
            out.extend(w.into_inner().expect("flushing to memory"));
        }
        String::from_utf8(out).expect("csv output is UTF-8")
    }
}

fn report_table(rep: &Report, view: CsvView) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["experiment".to_string()];
    let mut rows = Vec::new();
    match &rep.results {
        Results::Selection { cells } => {
            header.push("tau".into());
            let mut methods: Vec<&str> = Vec::new();
            for c in cells {
                if !methods.contains(&c.method.as_str()) {
                    methods.push(&c.method);
                }
            }
            for m in &methods {
                header.push(format!("{m}_true_zero"));
                header.push(format!("{m}_false_zero"));
            }
            for m in &methods {
                header.push(format!("{m}_non_converged"));
                header.push(format!("{m}_failures"));
            }
            let mut taus: Vec<f64> = Vec::new();
            for c in cells {
                if !taus.contains(&c.tau) {
                    taus.push(c.tau);
                }
            }
            for t in taus {
                let row_cells: Vec<&SelectionCell> =
                    methods.iter().map(|m| cells.iter().find(|c| c.tau == t && c.method == *m).expect("full grid")).collect();
                let mut row = vec![rep.name.clone(), t.to_string()];
                for c in &row_cells {
                    row.push(c.rates.true_zero_rate.to_string());
                    row.push(c.rates.false_zero_rate.to_string());
                }
                for c in &row_cells {
                    row.push(c.non_converged.to_string());
                    row.push(c.failures.len().to_string());
                }
                rows.push(row);
            }
        }
        Results::Segmentation { true_breaks, methods } => {
            header.push("method".into());
            let k = methods.first().map_or(true_breaks.len(), |m| m.median_breaks.len());
            let nseg = methods.iter().map(|m| m.segments.len()).max().unwrap_or(0);
            if view != CsvView::Rates {
                header.extend((1..=k).map(|j| format!("median_l{j}")));
                header.extend(["mean_diff", "mean_abs_diff", "msqe"].map(String::from));
            }
            if view != CsvView::Summary {
                for s in 1..=nseg {
                    header.extend([
                        format!("seg{s}_true_zero"),
                        format!("seg{s}_false_zero"),
                        format!("seg{s}_true_zero_at_true"),
                        format!("seg{s}_false_zero_at_true"),
                    ]);
                }
            }
            header.push("failures".into());
            for m in methods {
                let mut row = vec![rep.name.clone(), m.method.clone()];
                if view != CsvView::Rates {
                    row.extend(m.median_breaks.iter().map(|b| fmt_opt(*b)));
                    row.push(fmt_opt(m.spread.map(|s| s.mean_diff)));
                    row.push(fmt_opt(m.spread.map(|s| s.mean_abs_diff)));
                    row.push(fmt_opt(m.spread.map(|s| s.msqe)));
                }
                if view != CsvView::Summary {
                    for s in 0..nseg {
                        match m.segments.get(s) {
                            Some(r) => row.extend([
                                r.estimated_breaks.true_zero_rate.to_string(),
                                r.estimated_breaks.false_zero_rate.to_string(),
                                r.true_breaks.true_zero_rate.to_string(),
                                r.true_breaks.false_zero_rate.to_string(),
                            ]),
                            None => row.extend(std::iter::repeat_n(String::new(), 4)),
                        }
                    }
                }
                row.push(m.failures.len().to_string());
                rows.push(row);
            }
        }
        Results::SelectK { methods, .. } => {
            header.push("method".into());
            let kmax = methods.iter().map(|m| m.counts.len()).max().unwrap_or(0);
            header.extend((0..kmax).map(|k| format!("K{k}")));
            header.push("failures".into());
            for m in methods {
                let mut row = vec![rep.name.clone(), m.method.clone()];
                row.extend(m.counts.iter().map(|c| c.to_string()));
                row.push(m.failures.len().to_string());
                rows.push(row);
            }
        }
    }
    (header, rows)
}

/// A reproduction target: a suite file under `configs/` and the CSV columns it reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub id: &'static str,
    pub json: &'static str,
    pub view: CsvView,
}

macro_rules! config {
    ($file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/", $file))
    };
}

/// Tables `1, 2, 3, 5, 5bis, 6, 6bis, 7`.
pub const TABLES: &[Target] = &[
    Target { id: "1", json: config!("table1.json"), view: CsvView::Full },
    Target { id: "2", json: config!("table2.json"), view: CsvView::Full },
    Target { id: "3", json: config!("table3.json"), view: CsvView::Full },
    Target { id: "5", json: config!("table5.json"), view: CsvView::Rates },
    Target { id: "5bis", json: config!("table5.json"), view: CsvView::Summary },
    Target { id: "6", json: config!("table6.json"), view: CsvView::Rates },
    Target { id: "6bis", json: config!("table6.json"), view: CsvView::Summary },
    Target { id: "7", json: config!("table7.json"), view: CsvView::Full },
];

/// Figures `4` to `7`: rates on a `tau` grid.
pub const FIGURES: &[Target] = &[
    Target { id: "4", json: config!("figure4.json"), view: CsvView::Full },
    Target { id: "5", json: config!("figure5.json"), view: CsvView::Full },
    Target { id: "6", json: config!("figure6.json"), view: CsvView::Full },
    Target { id: "7", json: config!("figure7.json"), view: CsvView::Full },
];

pub fn table(id: &str) -> Result<Target> {
    TABLES.iter().copied().find(|t| t.id == id).ok_or_else(|| Error::Unknown { kind: "table", name: id.into() })
}

pub fn figure(id: &str) -> Result<Target> {
    FIGURES.iter().copied().find(|t| t.id == id).ok_or_else(|| Error::Unknown { kind: "figure", name: id.into() })
}

impl Target {
    pub fn suite(&self) -> Result<Suite> {
        Suite::from_json(self.json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segmentation_summary_ignores_replication_order() {
        let phi: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 0.0]];
        let truth_phi: Vec<&[f64]> = phi.iter().map(Vec::as_slice).collect();
        let outcome = |b: usize, c: [f64; 6]| {
            let est = [&c[..3], &c[3..]].map(|v| v.to_vec());
            let counts = |e: &[Vec<f64>; 2]| -> Vec<SelectionCounts> {
                e.iter().zip(&phi).map(|(v, t)| selection_counts(v, t, DEFAULT_ZERO_TOL).unwrap()).collect()
            };
            Outcome::Done(SegOutcome { breaks: vec![b], estimated: counts(&est), at_truth: counts(&est), coefficients: c.to_vec() })
        };
        let outcomes = [
            outcome(9, [1.1, 0.0, 2.0, 0.0, -0.9, 0.3]),
            Outcome::Failed("first".into()),
            outcome(11, [0.9, 0.2, 1.7, 0.1, -1.2, 0.0]),
            outcome(10, [1.0 / 3.0, 0.0, 2.1, 0.0, -1.0, 0.0]),
            Outcome::Failed("second".into()),
        ];
        let forward: Vec<(u64, &Outcome<SegOutcome>)> = outcomes.iter().enumerate().map(|(r, o)| (r as u64, o)).collect();
        let mut reversed = forward.clone();
        reversed.reverse();
        let mut shuffled = forward.clone();
        shuffled.swap(0, 3);
        shuffled.swap(1, 2);
        let a = summarize_segmentation("m", 1, true, &truth_phi, &forward).unwrap();
        for other in [&reversed, &shuffled] {
            let b = summarize_segmentation("m", 1, true, &truth_phi, other).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
        assert_eq!(a.median_breaks, vec![Some(10)]);
        assert_eq!(a.failures.iter().map(|f| f.replication).collect::<Vec<_>>(), [1, 4]);
    }

    #[test]
    fn builtin_targets_parse_and_validate() {
        for t in TABLES.iter().chain(FIGURES) {
            let s = t.suite().unwrap_or_else(|e| panic!("target {}: {e}", t.id));
            for e in &s.experiments {
                e.validate().unwrap_or_else(|err| panic!("{}: {err}", e.name));
            }
        }
        assert!(table("4").is_err() && figure("1").is_err());
    }

    #[test]
    fn design_ref_forms() {
        let named: DesignRef = serde_json::from_str("\"M2\"").unwrap();
        assert_eq!(named.resolve().unwrap().n(), 100);
        let custom = DesignRef::Custom(catalog("D1").unwrap());
        let back: DesignRef = serde_json::from_str(&serde_json::to_string(&custom).unwrap()).unwrap();
        assert_eq!(back, custom);
        assert!(DesignRef::Named("nope".into()).resolve().is_err());
    }

    #[test]
    fn method_labels_flatten() {
        let m: Labeled<FitMethod> = serde_json::from_str(r#"{"label":"aQ","kind":"adaptive_quantile","config":{"g":1.225}}"#).unwrap();
        assert_eq!(m.method, FitMethod::AdaptiveQuantile { config: AdaptiveConfig::with_g(1.225) });
        let s: Labeled<FitMethod> = serde_json::from_str(r#"{"label":"SCAD","kind":"scad"}"#).unwrap();
        assert_eq!(s.method, FitMethod::Scad { a1: 5.0, max_iter: 50 });
    }
}
