use std::collections::BTreeMap;
use std::path::Path;

use super::{read_text, ActivityClass, SourceId};
use crate::error::{Error, Result};

/// Where a source label goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelTarget {
    Class(ActivityClass),
    Drop,
}

/// Total mapping from one source's raw labels to [`LabelTarget`]s.
///
/// Stored as `key = value` text; values are a class name (`stand`, `sit`,
/// `walk`, `stair-down`, `stair-up`) or `drop`. A `source = <id>` line names
/// the dataset the map belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    source: SourceId,
    entries: BTreeMap<String, LabelTarget>,
}

const UCI_DEFAULT: &str = include_str!("../../data/labelmaps/uci_har.map");
const WISDM_DEFAULT: &str = include_str!("../../data/labelmaps/wisdm.map");
const KU_HAR_DEFAULT: &str = include_str!("../../data/labelmaps/ku_har.map");

impl LabelMap {
    pub fn default_for(source: SourceId) -> Self {
        let text = match source {
            SourceId::UciHar => UCI_DEFAULT,
            SourceId::Wisdm => WISDM_DEFAULT,
            SourceId::KuHar => KU_HAR_DEFAULT,
        };
        Self::parse(text, "<builtin>").expect("builtin label maps are valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut source = None;
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                file: origin.to_string(),
                line: n + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "source" {
                source = Some(value.parse::<SourceId>().map_err(|e| parse_err(e.to_string()))?);
                continue;
            }
            let target = if value.eq_ignore_ascii_case("drop") {
                LabelTarget::Drop
            } else {
                LabelTarget::Class(
                    value
                        .parse::<ActivityClass>()
                        .map_err(|e| parse_err(e.to_string()))?,
                )
            };
            if entries.insert(key.to_string(), target).is_some() {
                return Err(parse_err(format!("duplicate label {key:?}")));
            }
        }
        let source = source
            .ok_or_else(|| Error::Config(format!("{origin}: label map has no `source =` line")))?;
        let map = LabelMap { source, entries };
        map.validate()?;
        Ok(map)
    }

    pub fn from_entries(
        source: SourceId,
        entries: impl IntoIterator<Item = (String, LabelTarget)>,
    ) -> Result<Self> {
        let map = LabelMap {
            source,
            entries: entries.into_iter().collect(),
        };
        map.validate()?;
        Ok(map)
    }

    /// Every shared class must be reachable, otherwise the source cannot be
    /// integrated.
    pub fn validate(&self) -> Result<()> {
        for class in ActivityClass::ALL {
            if !self.entries.values().any(|t| *t == LabelTarget::Class(class)) {
                return Err(Error::Config(format!(
                    "label map for {} has no label mapped to {class}",
                    self.source
                )));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> SourceId {
        self.source
    }

    pub fn get(&self, raw_label: &str) -> Option<LabelTarget> {
        self.entries.get(raw_label).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, LabelTarget)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Canonical text form, parseable by [`LabelMap::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("source = {}\n", self.source);
        for (k, v) in &self.entries {
            let value = match v {
                LabelTarget::Class(c) => c.name(),
                LabelTarget::Drop => "drop",
            };
            out.push_str(&format!("{k} = {value}\n"));
        }
        out
    }
}

pub fn map_to_canonical_labels(raw_label: &str, map: &LabelMap) -> Result<LabelTarget> {
    map.get(raw_label).ok_or_else(|| Error::Mapping {
        label: raw_label.to_string(),
        source_name: map.source.to_string(),
    })
}
