//! Report files.
//!
//! Summary: `key = value` lines, floats in shortest round-trip form.
//! Curves CSV: `epoch,loss,accuracy`. Confusion CSV: header
//! `true\predicted,<class names>`, one row per true class.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::confusion::ConfusionMatrix;
use super::scores::{class_scores, mean_std, Aggregate, ScoreReport, ZeroFlags};
use crate::cnn::EpochRecord;
use crate::error::{Error, Result};
use crate::ingest::{ActivityClass, NUM_CLASSES};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub summary: PathBuf,
    pub curves: PathBuf,
    pub confusion: PathBuf,
}

impl ReportPaths {
    /// `summary.txt`, `curves.csv`, `confusion.csv` under `dir`, with an
    /// optional file-name prefix.
    pub fn in_dir(dir: &Path, prefix: &str) -> Self {
        ReportPaths {
            summary: dir.join(format!("{prefix}summary.txt")),
            curves: dir.join(format!("{prefix}curves.csv")),
            confusion: dir.join(format!("{prefix}confusion.csv")),
        }
    }
}

pub fn class_name(n: usize, c: usize) -> String {
    if n == NUM_CLASSES {
        ActivityClass::ALL[c].name().to_string()
    } else {
        format!("c{c}")
    }
}

pub fn summary_text(r: &ScoreReport) -> String {
    let n = r.confusion.n_classes();
    let mut s = String::new();
    let _ = writeln!(s, "report_version = {REPORT_VERSION}");
    let _ = writeln!(s, "classes = {n}");
    let _ = writeln!(s, "total = {}", r.confusion.total());
    match r.loss {
        Some(l) => _ = writeln!(s, "loss = {l:?}"),
        None => _ = writeln!(s, "loss = none"),
    }
    let _ = writeln!(s, "accuracy = {:?}", r.accuracy);
    for (tag, a) in [("micro", &r.micro), ("macro", &r.macro_avg)] {
        let _ = writeln!(s, "{tag}.precision = {:?}", a.precision);
        let _ = writeln!(s, "{tag}.recall = {:?}", a.recall);
        let _ = writeln!(s, "{tag}.f1 = {:?}", a.f1);
        let _ = writeln!(s, "{tag}.specificity = {:?}", a.specificity);
    }
    for (c, cs) in r.classes.iter().enumerate() {
        let name = class_name(n, c);
        let _ = writeln!(s, "class.{name}.tp = {}", cs.tp);
        let _ = writeln!(s, "class.{name}.fp = {}", cs.fp);
        let _ = writeln!(s, "class.{name}.fn = {}", cs.fn_);
        let _ = writeln!(s, "class.{name}.tn = {}", cs.tn);
        let _ = writeln!(s, "class.{name}.sensitivity = {:?}", cs.sensitivity);
        let _ = writeln!(s, "class.{name}.specificity = {:?}", cs.specificity);
        let _ = writeln!(s, "class.{name}.precision = {:?}", cs.precision);
        let _ = writeln!(s, "class.{name}.accuracy = {:?}", cs.accuracy);
        let _ = writeln!(s, "class.{name}.f1 = {:?}", cs.f1);
        let _ = writeln!(s, "class.{name}.zero_denominator = {}", cs.zero.to_text());
    }
    for t in 0..n {
        let row: Vec<String> = r.confusion.row(t).iter().map(u64::to_string).collect();
        let _ = writeln!(s, "confusion.{} = {}", class_name(n, t), row.join(","));
    }
    s
}

/// Parses a summary back into a report.
pub fn parse_summary(text: &str) -> Result<ScoreReport> {
    let mut kv = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::Input(format!("summary line {}: expected `key = value`", i + 1)))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<&str> {
        kv.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Input(format!("summary lacks `{k}`")))
    };
    let float = |k: &str| -> Result<f64> {
        get(k)?.parse().map_err(|_| Error::Input(format!("summary `{k}` is not a number")))
    };
    let int = |k: &str| -> Result<u64> {
        get(k)?.parse().map_err(|_| Error::Input(format!("summary `{k}` is not an integer")))
    };
    let n = int("classes")? as usize;
    let mut counts = Vec::with_capacity(n * n);
    for t in 0..n {
        let key = format!("confusion.{}", class_name(n, t));
        for cell in get(&key)?.split(',') {
            counts.push(cell.parse().map_err(|_| Error::Input(format!("bad count in `{key}`")))?);
        }
    }
    let confusion = ConfusionMatrix::from_counts(n, counts)?;
    let mut classes = Vec::with_capacity(n);
    for c in 0..n {
        let p = format!("class.{}", class_name(n, c));
        let mut cs = class_scores(
            int(&format!("{p}.tp"))?,
            int(&format!("{p}.fp"))?,
            int(&format!("{p}.fn"))?,
            int(&format!("{p}.tn"))?,
        );
        cs.sensitivity = float(&format!("{p}.sensitivity"))?;
        cs.specificity = float(&format!("{p}.specificity"))?;
        cs.precision = float(&format!("{p}.precision"))?;
        cs.accuracy = float(&format!("{p}.accuracy"))?;
        cs.f1 = float(&format!("{p}.f1"))?;
        cs.zero = ZeroFlags::parse(get(&format!("{p}.zero_denominator"))?)?;
        classes.push(cs);
    }
    let agg = |tag: &str| -> Result<Aggregate> {
        Ok(Aggregate {
            precision: float(&format!("{tag}.precision"))?,
            recall: float(&format!("{tag}.recall"))?,
            f1: float(&format!("{tag}.f1"))?,
            specificity: float(&format!("{tag}.specificity"))?,
        })
    };
    let loss = match get("loss")? {
        "none" => None,
        _ => Some(float("loss")?),
    };
    Ok(ScoreReport {
        confusion,
        classes,
        micro: agg("micro")?,
        macro_avg: agg("macro")?,
        accuracy: float("accuracy")?,
        loss,
    })
}

pub fn curves_csv(curve: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,loss,accuracy\n");
    for r in curve {
        let _ = writeln!(s, "{},{:?},{:?}", r.epoch, r.loss, r.accuracy);
    }
    s
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let n = cm.n_classes();
    let names: Vec<String> = (0..n).map(|c| class_name(n, c)).collect();
    let mut s = format!("true\\predicted,{}\n", names.join(","));
    for (t, name) in names.iter().enumerate() {
        let row: Vec<String> = cm.row(t).iter().map(u64::to_string).collect();
        let _ = writeln!(s, "{name},{}", row.join(","));
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes summary, curves and confusion files. Output depends only on the
/// inputs.
pub fn emit_report(report: &ScoreReport, curve: &[EpochRecord], paths: &ReportPaths) -> Result<()> {
    write(&paths.summary, &summary_text(report))?;
    write(&paths.curves, &curves_csv(curve))?;
    write(&paths.confusion, &confusion_csv(&report.confusion))
}

/// `repeats`, then `<score>.mean` / `<score>.stddev` for each headline score.
pub fn repeat_summary_text(reports: &[ScoreReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "report_version = {REPORT_VERSION}");
    let _ = writeln!(s, "repeats = {}", reports.len());
    if let Some(first) = reports.first() {
        for (i, (name, _)) in first.headline().iter().enumerate() {
            let vals: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.headline().get(i).map(|h| h.1))
                .collect();
            let (m, sd) = mean_std(&vals);
            let _ = writeln!(s, "{name}.mean = {m:?}");
            let _ = writeln!(s, "{name}.stddev = {sd:?}");
        }
    }
    s
}
