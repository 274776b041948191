//! One function per subcommand. Each returns the process exit code.

use std::path::{Path, PathBuf};

use quantseg_core::adaptive::{fit_adaptive_detailed, kkt_verify, pilot_fit, AdaptiveConfig, KktReport};
use quantseg_core::experiment::{figure, run_suite, table, FitMethod, Target};
use quantseg_core::parallel::{with_jobs, Parallelism};
use quantseg_core::segmentation::{best_segmentation_with, SegmentCostTable, SegmentMethod, Segmentation, SegmentationConfig};
use quantseg_core::selection::{select_k, CriterionTrace, SelectionConfig};
use quantseg_core::simulation::{catalog, generate_replication, Design};
use quantseg_core::solver::fit;
use quantseg_core::{Dataset, FitResult, PenaltySpec, QuantileLevel};
use serde::{Deserialize, Serialize};

use crate::output::{emit, fit_csv, json, kkt_csv, segmentation_csv};
use crate::{
    AdaptiveArgs, Command, Failure, FitArgs, FitMethodArg, Format, KktCheckArgs, ReproduceArgs, SegmentArgs, SegmentMethodArg,
    SegmentationArgs, SelectKArgs, SimulateArgs,
};

pub fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Fit(a) => fit_cmd(a),
        Command::Segment(a) => segment_cmd(a),
        Command::SelectK(a) => select_k_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Reproduce(a) => reproduce_cmd(a),
        Command::KktCheck(a) => kkt_check_cmd(a),
    }
}

fn level(tau: f64) -> Result<QuantileLevel, Failure> {
    Ok(QuantileLevel::new(tau)?)
}

fn adaptive_config(a: &AdaptiveArgs) -> Result<AdaptiveConfig, Failure> {
    let cfg = AdaptiveConfig { g: a.g, lambda_rule: a.lambda_rule, ..AdaptiveConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn read_data(path: &Path) -> Result<Dataset, Failure> {
    Ok(Dataset::read_csv(path)?)
}

#[derive(Serialize)]
struct FitOutput {
    method: &'static str,
    tau: f64,
    n: usize,
    p: usize,
    fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    kkt: Option<KktReport>,
}

fn fit_cmd(a: FitArgs) -> Result<u8, Failure> {
    let data = read_data(&a.data)?;
    let tau = level(a.tau)?;
    let (method, fit, kkt) = match a.method {
        FitMethodArg::Quantile => {
            let pen = PenaltySpec::zero(data.p());
            let f = fit(&data, tau, &pen)?;
            let report = kkt_verify(&data, tau, &pen, &f);
            ("quantile", f, Some(report))
        }
        FitMethodArg::AlassoQuantile => {
            let d = fit_adaptive_detailed(&data, tau, &adaptive_config(&a.adaptive)?)?;
            let report = kkt_verify(&data, tau, &d.penalty, &d.fit);
            ("alasso-quantile", d.fit, Some(report))
        }
        FitMethodArg::LsAlasso => {
            let m = FitMethod::LsAdaptiveLasso { chi: a.chi, lambda_rule: a.adaptive.lambda_rule };
            ("ls-alasso", m.fit(&data, tau)?, None)
        }
        FitMethodArg::LadLassotype => ("lad-lassotype", FitMethod::LadLassoType.fit(&data, tau)?, None),
        FitMethodArg::Scad => {
            let m = FitMethod::Scad { a1: a.scad_a1, max_iter: a.scad_max_iter };
            let f = m.fit(&data, tau)?;
            if !f.converged {
                eprintln!("warning: SCAD stopped at its iteration limit of {}", a.scad_max_iter);
            }
            ("scad", f, None)
        }
    };
    let text = match a.output.format {
        Format::Json => json(&FitOutput { method, tau: tau.value(), n: data.n(), p: data.p(), fit, kkt }),
        Format::Csv => fit_csv(&fit),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(0)
}

fn segmentation_config(a: &SegmentationArgs, data: &Dataset) -> Result<SegmentationConfig, Failure> {
    let method = match a.method {
        SegmentMethodArg::AlassoQuantile => SegmentMethod::AdaptiveQuantile { config: adaptive_config(&a.adaptive)? },
        SegmentMethodArg::LsAlasso => SegmentMethod::LsAdaptiveLasso { chi: a.chi },
        SegmentMethodArg::LadLassotype => SegmentMethod::LadLassoType { pilot_tau: level(a.pilot_tau)? },
    };
    let mut cfg = SegmentationConfig::new(data, level(a.tau)?).with_method(method);
    if let Some(m) = a.min_len {
        cfg.min_len = m;
    }
    cfg.validate(data.p())?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SegmentOutput<'a> {
    n: usize,
    config: &'a SegmentationConfig,
    #[serde(flatten)]
    segmentation: Segmentation,
}

fn segment_cmd(a: SegmentArgs) -> Result<u8, Failure> {
    let data = read_data(&a.seg.data)?;
    let cfg = segmentation_config(&a.seg, &data)?;
    let jobs = a.seg.jobs;
    let seg = with_jobs(jobs, || -> Result<Segmentation, Failure> {
        let table = SegmentCostTable::new(&data, cfg.clone())?;
        table.prefetch(Parallelism::from_jobs(jobs), a.k);
        Ok(best_segmentation_with(&table, a.k)?)
    })??;
    let text = match a.output.format {
        Format::Json => json(&SegmentOutput { n: data.n(), config: &cfg, segmentation: seg }),
        Format::Csv => segmentation_csv(&seg, data.n()),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct SelectKOutput<'a> {
    n: usize,
    config: &'a SegmentationConfig,
    selection: &'a SelectionConfig,
    chosen_k: usize,
    trace: CriterionTrace,
    segmentation: Segmentation,
}

fn select_k_cmd(a: SelectKArgs) -> Result<u8, Failure> {
    let data = read_data(&a.seg.data)?;
    let cfg = segmentation_config(&a.seg, &data)?;
    let sel_cfg = SelectionConfig { bn_exponent: a.bn_exponent, ..SelectionConfig::new(a.k_max) };
    let jobs = a.seg.jobs;
    let sel = with_jobs(jobs, || -> Result<_, Failure> {
        let table = SegmentCostTable::new(&data, cfg.clone())?;
        Ok(select_k(&table, &sel_cfg, Parallelism::from_jobs(jobs))?)
    })??;
    let text = match a.output.format {
        Format::Json => json(&SelectKOutput {
            n: data.n(),
            config: &cfg,
            selection: &sel_cfg,
            chosen_k: sel.chosen_k,
            trace: sel.trace,
            segmentation: sel.segmentation,
        }),
        Format::Csv => sel.trace.to_csv(),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(0)
}

fn load_design(spec: &str) -> Result<Design, Failure> {
    if let Ok(d) = catalog(spec) {
        return Ok(d);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::input(format!("{spec} is neither a catalog design nor an existing design file")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {spec}: {e}")))?;
    let d: Design = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{spec}: {e}")))?;
    d.validate()?;
    Ok(d)
}

fn truth_path(out: &Path) -> PathBuf {
    out.with_extension("truth.json")
}

fn simulate_cmd(a: SimulateArgs) -> Result<u8, Failure> {
    let design = load_design(&a.design)?;
    let (data, truth) = generate_replication(&design, a.seed, a.replication)?;
    data.write_csv(&a.out)?;
    let tp = a.truth.unwrap_or_else(|| truth_path(&a.out));
    emit(Some(&tp), &json(&truth))?;
    Ok(0)
}

fn reproduce_cmd(a: ReproduceArgs) -> Result<u8, Failure> {
    let target: Target = match (&a.target.table, &a.target.figure) {
        (Some(id), _) => table(id)?,
        (_, Some(id)) => figure(id)?,
        (None, None) => return Err(Failure::input("pass --table or --figure")),
    };
    if a.reps == Some(0) {
        return Err(Failure::input("--reps must be at least 1"));
    }
    let suite = target.suite()?.with_overrides(a.reps, a.seed);
    let jobs = a.jobs;
    let report = with_jobs(jobs, || run_suite(&suite, Parallelism::from_jobs(jobs)))??;
    let text = match a.output.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(target.view),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(0)
}

/// Accepts the `fit` command's JSON or a bare fit result.
#[derive(Deserialize)]
#[serde(untagged)]
enum SavedFit {
    Wrapped { fit: FitResult },
    Bare(FitResult),
}

#[derive(Serialize)]
struct KktOutput {
    satisfied: bool,
    violations: Vec<usize>,
    #[serde(flatten)]
    report: KktReport,
}

fn kkt_check_cmd(a: KktCheckArgs) -> Result<u8, Failure> {
    let data = read_data(&a.data)?;
    let tau = level(a.tau)?;
    let text = std::fs::read_to_string(&a.fit).map_err(|e| Failure::input(format!("cannot read {}: {e}", a.fit.display())))?;
    let saved = match serde_json::from_str::<SavedFit>(&text).map_err(|e| Failure::input(format!("{}: {e}", a.fit.display())))? {
        SavedFit::Wrapped { fit } | SavedFit::Bare(fit) => fit,
    };
    if saved.coefficients.len() != data.p() {
        return Err(Failure::input(format!("fit has {} coefficients, data has {} regressors", saved.coefficients.len(), data.p())));
    }
    let penalty = if a.unpenalized {
        PenaltySpec::zero(data.p())
    } else {
        let cfg = adaptive_config(&a.adaptive)?;
        let pilot = pilot_fit(&data, tau)?;
        let weights = quantseg_core::adaptive::compute_weights(&pilot.coefficients, cfg.g, cfg.weight_floor);
        PenaltySpec::new(cfg.lambda_rule.eval(data.n()), weights)?
    };
    let report = kkt_verify(&data, tau, &penalty, &saved);
    let satisfied = report.all_satisfied();
    let text = match a.output.format {
        Format::Json => json(&KktOutput { satisfied, violations: report.violations(), report }),
        Format::Csv => kkt_csv(&report),
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(if satisfied { 0 } else { 3 })
}
