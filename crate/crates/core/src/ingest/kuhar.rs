use std::path::Path;

use super::{
    map_to_canonical_labels, parse_f64, read_text, CanonicalFrame, IngestStats, Ingested,
    LabelMap, LabelTarget, SourceId,
};
use crate::error::{Error, Result};

/// KU-HAR publishes 18 activity codes, `0..=17`.
pub const KU_HAR_CLASS_CODES: u32 = 18;

const KU_HAR_FEATURES: usize = 7;

/// Column selection for a KU-HAR CSV. `None` fields take the defaults: the
/// label is the last column and the features are the seven columns before it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KuHarColumns {
    pub label: Option<usize>,
    pub features: Option<Vec<usize>>,
}

impl KuHarColumns {
    fn resolve(&self, width: usize) -> Result<(usize, Vec<usize>)> {
        let label = match self.label {
            Some(l) => l,
            None => width
                .checked_sub(1)
                .ok_or_else(|| Error::Structural("KU-HAR row has no columns".into()))?,
        };
        let features = match &self.features {
            Some(f) => f.clone(),
            None => {
                if label < KU_HAR_FEATURES {
                    return Err(Error::Structural(format!(
                        "label column {label} leaves fewer than {KU_HAR_FEATURES} feature columns"
                    )));
                }
                (label - KU_HAR_FEATURES..label).collect()
            }
        };
        if features.len() != KU_HAR_FEATURES {
            return Err(Error::Config(format!(
                "KU-HAR needs exactly {KU_HAR_FEATURES} feature columns, got {}",
                features.len()
            )));
        }
        if let Some(&bad) = features.iter().chain([&label]).find(|&&c| c >= width) {
            return Err(Error::Structural(format!(
                "column {bad} out of range for {width}-column KU-HAR rows"
            )));
        }
        Ok((label, features))
    }
}

/// Load a comma-separated KU-HAR file (no header).
pub fn load_ku_har(path: &Path, map: &LabelMap, columns: &KuHarColumns) -> Result<Ingested> {
    let text = read_text(path)?;
    let file = path.display().to_string();
    let mut frame = CanonicalFrame::empty(SourceId::KuHar, KU_HAR_FEATURES);
    let mut stats = IngestStats::default();
    let mut resolved: Option<(usize, Vec<usize>)> = None;
    let mut row = Vec::with_capacity(KU_HAR_FEATURES);
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let (label_col, feature_cols) = match &resolved {
            Some(r) => r.clone(),
            None => {
                let r = columns.resolve(cells.len())?;
                resolved = Some(r.clone());
                r
            }
        };
        stats.rows_in += 1;
        let cell = |c: usize| {
            cells.get(c).copied().ok_or_else(|| Error::Parse {
                file: file.clone(),
                line: line_no,
                msg: format!("row has {} columns, column {c} requested", cells.len()),
            })
        };
        let raw_code = cell(label_col)?.trim();
        let code = raw_code
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v < KU_HAR_CLASS_CODES as f64)
            .ok_or_else(|| Error::Parse {
                file: file.clone(),
                line: line_no,
                msg: format!("class code {raw_code:?} outside 0-17"),
            })? as u32;
        let target = map_to_canonical_labels(&code.to_string(), map)?;
        row.clear();
        for &c in &feature_cols {
            let tok = cell(c)?;
            row.push(parse_f64(tok).ok_or_else(|| Error::Parse {
                file: file.clone(),
                line: line_no,
                msg: format!("column {c}: non-numeric cell {tok:?}"),
            })?);
        }
        match target {
            LabelTarget::Class(c) => {
                frame.push(&row, c)?;
                stats.emitted += 1;
            }
            LabelTarget::Drop => stats.label_filtered += 1,
        }
    }
    Ok(Ingested { frame, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ActivityClass;
    use std::fs;

    fn load(text: &str, cols: &KuHarColumns) -> Result<Ingested> {
        let tmp = tempfile::NamedTempFile::new().unwrap();
        fs::write(tmp.path(), text).unwrap();
        load_ku_har(tmp.path(), &LabelMap::default_for(SourceId::KuHar), cols)
    }

    #[test]
    fn stand_row_kept_run_row_dropped() {
        // code 0 = Stand, code 14 = Run in the published coding
        let got = load(
            "9,1,2,3,4,5,6,7,0\n9,1,2,3,4,5,6,7,14\n",
            &KuHarColumns::default(),
        )
        .unwrap();
        assert_eq!(got.frame.labels, vec![ActivityClass::Stand.code()]);
        assert_eq!(got.frame.features.row(0), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(got.stats.label_filtered, 1);
        assert!(got.stats.is_conserved());
    }

    #[test]
    fn code_out_of_range() {
        let err = load("1,2,3,4,5,6,7,18\n", &KuHarColumns::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn non_numeric_feature_names_row_and_column() {
        let err = load("1,2,3,4,5,6,7,0\n1,2,x,4,5,6,7,0\n", &KuHarColumns::default()).unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("column 2"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_columns() {
        let cols = KuHarColumns { label: Some(0), features: Some(vec![1, 2, 3, 4, 5, 6, 7]) };
        let got = load("11,1,2,3,4,5,6,7,99\n", &cols).unwrap();
        assert_eq!(got.frame.labels, vec![ActivityClass::Walk.code()]);
    }

    #[test]
    fn wrong_feature_count_is_config_error() {
        let cols = KuHarColumns { label: None, features: Some(vec![0, 1]) };
        assert!(matches!(load("1,2,3,4,5,6,7,0\n", &cols), Err(Error::Config(_))));
    }
}
