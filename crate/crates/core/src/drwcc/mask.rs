//! Text form of a [`FeatureMask`]:
//!
//! ```text
//! # ihards feature mask
//! version = 1
//! threshold = 0.9
//! columns = 571
//! kept_count = 251
//! kept = 0-3,5,9-12
//! ```
//!
//! `kept` lists kept column indices as ascending, comma-separated ranges.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMask {
    keep: Vec<bool>,
    threshold: f64,
}

const MASK_VERSION: u32 = 1;

impl FeatureMask {
    pub fn new(keep: Vec<bool>, threshold: f64) -> Result<Self> {
        if !keep.iter().any(|&k| k) {
            return Err(Error::Input("feature mask must keep at least one column".into()));
        }
        Ok(FeatureMask { keep, threshold })
    }

    /// Keeps every column; used when no pruning was requested.
    pub fn all(cols: usize) -> Self {
        FeatureMask {
            keep: vec![true; cols],
            threshold: 1.0,
        }
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn kept_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn dropped_count(&self) -> usize {
        self.len() - self.kept_count()
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        self.keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# ihards feature mask\n");
        let _ = writeln!(out, "version = {MASK_VERSION}");
        let _ = writeln!(out, "threshold = {:?}", self.threshold);
        let _ = writeln!(out, "columns = {}", self.len());
        let _ = writeln!(out, "kept_count = {}", self.kept_count());
        let _ = writeln!(out, "kept = {}", ranges(&self.kept_indices()));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut threshold = None;
        let mut columns = None;
        let mut kept_count = None;
        let mut kept = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { file: "<mask>".into(), line: n + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value: {line:?}")))?;
            let v = v.trim();
            match k.trim() {
                "version" => {
                    let ver: u32 = v.parse().map_err(|_| err(format!("bad version {v:?}")))?;
                    if ver > MASK_VERSION {
                        return Err(Error::Version { found: ver, supported: MASK_VERSION });
                    }
                }
                "threshold" => threshold = Some(v.parse::<f64>().map_err(|_| err(format!("bad threshold {v:?}")))?),
                "columns" => columns = Some(v.parse::<usize>().map_err(|_| err(format!("bad columns {v:?}")))?),
                "kept_count" => kept_count = Some(v.parse::<usize>().map_err(|_| err(format!("bad kept_count {v:?}")))?),
                "kept" => kept = Some(parse_ranges(v).map_err(err)?),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("mask is missing `{k}`"));
        let columns = columns.ok_or_else(|| missing("columns"))?;
        let kept = kept.ok_or_else(|| missing("kept"))?;
        let mut keep = vec![false; columns];
        for i in kept {
            *keep.get_mut(i).ok_or_else(|| Error::Format(format!("kept index {i} >= columns {columns}")))? = true;
        }
        let mask = FeatureMask::new(keep, threshold.ok_or_else(|| missing("threshold"))?)?;
        if let Some(kc) = kept_count {
            if kc != mask.kept_count() {
                return Err(Error::Format(format!(
                    "kept_count {kc} disagrees with {} listed columns",
                    mask.kept_count()
                )));
            }
        }
        Ok(mask)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn ranges(idx: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let start = idx[i];
        let mut end = start;
        while i + 1 < idx.len() && idx[i + 1] == end + 1 {
            i += 1;
            end = idx[i];
        }
        parts.push(if start == end { start.to_string() } else { format!("{start}-{end}") });
        i += 1;
    }
    parts.join(",")
}

fn parse_ranges(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a, b),
            None => (part, part),
        };
        let a: usize = a.trim().parse().map_err(|_| format!("bad range {part:?}"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad range {part:?}"))?;
        if b < a || out.last().is_some_and(|&l| a <= l) {
            return Err(format!("ranges must ascend: {part:?}"));
        }
        out.extend(a..=b);
    }
    Ok(out)
}
