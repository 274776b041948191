//! Writing results as JSON or CSV to a file or standard output.

use std::io::Write;
use std::path::Path;

use quantseg_core::adaptive::KktReport;
use quantseg_core::segmentation::Segmentation;
use quantseg_core::FitResult;
use serde::Serialize;

use crate::Failure;

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::input(format!("cannot write to standard output: {e}")))
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

/// `term,estimate,active` with the intercept first.
pub fn fit_csv(fit: &FitResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["term", "estimate", "active"]).expect("writing to memory");
    w.write_record(["intercept".to_string(), format!("{:?}", fit.intercept), String::new()]).expect("writing to memory");
    for (j, v) in fit.coefficients.iter().enumerate() {
        let active = fit.active_set.contains(&j);
        w.write_record([format!("x{}", j + 1), format!("{v:?}"), active.to_string()]).expect("writing to memory");
    }
    finish(w)
}

/// One row per segment: bounds, objective, intercept and coefficients.
pub fn segmentation_csv(seg: &Segmentation, n: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let p = seg.segment_fits.first().map_or(0, |f| f.coefficients.len());
    let mut header = vec!["segment".to_string(), "start".into(), "end".into(), "objective".into(), "intercept".into()];
    header.extend((1..=p).map(|j| format!("x{j}")));
    w.write_record(&header).expect("writing to memory");
    let mut bounds = vec![0];
    bounds.extend(seg.change_points.iter().copied());
    bounds.push(n);
    for (r, (f, b)) in seg.segment_fits.iter().zip(bounds.windows(2)).enumerate() {
        let mut row = vec![(r + 1).to_string(), b[0].to_string(), b[1].to_string(), format!("{:?}", f.objective), format!("{:?}", f.intercept)];
        row.extend(f.coefficients.iter().map(|v| format!("{v:?}")));
        w.write_record(&row).expect("writing to memory");
    }
    finish(w)
}

/// `coefficient,side,score,bound,satisfied`.
pub fn kkt_csv(report: &KktReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in &report.entries {
        w.serialize(e).expect("writing to memory");
    }
    finish(w)
}
