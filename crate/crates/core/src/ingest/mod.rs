//! Parsers for the three wearable-sensor sources.
//!
//! Each loader turns one on-disk dataset into a [`CanonicalFrame`] whose labels
//! are already mapped onto the five shared [`ActivityClass`]es. Rows whose
//! source label maps to `drop` are filtered and counted; the
//! [`IngestStats`] returned alongside every frame satisfy
//! `rows_in == emitted + label_filtered + malformed`.

mod kuhar;
mod labels;
mod uci;
mod wisdm;

pub use kuhar::{load_ku_har, KuHarColumns, KU_HAR_CLASS_CODES};
pub use labels::{map_to_canonical_labels, LabelMap, LabelTarget};
pub use uci::{load_uci_har, UCI_FEATURES};
pub use wisdm::{load_wisdm_raw, MALFORMED_LIMIT};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const NUM_CLASSES: usize = 5;

/// The five activities every source shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum ActivityClass {
    Stand = 0,
    Sit = 1,
    Walk = 2,
    StairDown = 3,
    StairUp = 4,
}

impl ActivityClass {
    pub const ALL: [ActivityClass; NUM_CLASSES] = [
        ActivityClass::Stand,
        ActivityClass::Sit,
        ActivityClass::Walk,
        ActivityClass::StairDown,
        ActivityClass::StairUp,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityClass::Stand => "stand",
            ActivityClass::Sit => "sit",
            ActivityClass::Walk => "walk",
            ActivityClass::StairDown => "stair-down",
            ActivityClass::StairUp => "stair-up",
        }
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown activity class {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceId {
    UciHar,
    Wisdm,
    KuHar,
}

impl SourceId {
    pub const ALL: [SourceId; 3] = [SourceId::UciHar, SourceId::Wisdm, SourceId::KuHar];

    /// Columns each source contributes after column selection.
    pub fn feature_count(self) -> usize {
        match self {
            SourceId::UciHar => 561,
            SourceId::Wisdm => 3,
            SourceId::KuHar => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SourceId::UciHar => "uci_har",
            SourceId::Wisdm => "wisdm",
            SourceId::KuHar => "ku_har",
        }
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown source {s:?}")))
    }
}

/// Feature rows with class codes `0..5` from a single source.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFrame {
    pub source: SourceId,
    pub features: Matrix<f64>,
    pub labels: Vec<u8>,
}

impl CanonicalFrame {
    pub fn empty(source: SourceId, cols: usize) -> Self {
        CanonicalFrame {
            source,
            features: Matrix::with_cols(cols),
            labels: Vec::new(),
        }
    }

    pub fn row_count(&self) -> usize {
        self.features.rows()
    }

    pub fn col_count(&self) -> usize {
        self.features.cols()
    }

    pub(crate) fn push(&mut self, row: &[f64], class: ActivityClass) -> Result<()> {
        self.features.push_row(row)?;
        self.labels.push(class.code());
        Ok(())
    }

    /// Row indices for each class, in frame order.
    pub fn class_rows(&self) -> [Vec<usize>; NUM_CLASSES] {
        let mut out: [Vec<usize>; NUM_CLASSES] = Default::default();
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// Checks the frame invariants: label count, label range, finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.row_count() {
            return Err(Error::Structural(format!(
                "{}: {} labels for {} rows",
                self.source,
                self.labels.len(),
                self.row_count()
            )));
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::Label(format!("{}: label {bad} out of range", self.source)));
        }
        if !self.features.all_finite() {
            return Err(Error::Numeric(format!("{}: non-finite feature", self.source)));
        }
        Ok(())
    }
}

/// Row accounting for one parse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub rows_in: usize,
    pub emitted: usize,
    pub label_filtered: usize,
    pub malformed: usize,
}

impl IngestStats {
    pub fn is_conserved(&self) -> bool {
        self.rows_in == self.emitted + self.label_filtered + self.malformed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub frame: CanonicalFrame,
    pub stats: IngestStats,
}

pub(crate) fn parse_f64(tok: &str) -> Option<f64> {
    tok.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
