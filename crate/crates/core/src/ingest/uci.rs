use std::collections::HashMap;
use std::path::Path;

use super::{
    map_to_canonical_labels, parse_f64, read_text, CanonicalFrame, IngestStats, Ingested,
    LabelMap, LabelTarget, SourceId,
};
use crate::error::{Error, Result};

pub const UCI_FEATURES: usize = 561;

/// Load the UCI-HAR directory layout, merging `train/` then `test/`.
///
/// ```text
/// <dir>/activity_labels.txt         "<code> <NAME>" per line
/// <dir>/train/X_train.txt           561 whitespace-separated floats per line
/// <dir>/train/y_train.txt           one activity code per line
/// <dir>/test/X_test.txt, y_test.txt same layout
/// ```
pub fn load_uci_har(dir: &Path, map: &LabelMap) -> Result<Ingested> {
    let names = read_activity_labels(&dir.join("activity_labels.txt"))?;
    let mut frame = CanonicalFrame::empty(SourceId::UciHar, UCI_FEATURES);
    let mut stats = IngestStats::default();
    for part in ["train", "test"] {
        let x_path = dir.join(part).join(format!("X_{part}.txt"));
        let y_path = dir.join(part).join(format!("y_{part}.txt"));
        let x_text = read_text(&x_path)?;
        let y_text = read_text(&y_path)?;
        let x_lines: Vec<(usize, &str)> = non_blank(&x_text);
        let y_lines: Vec<(usize, &str)> = non_blank(&y_text);
        if x_lines.len() != y_lines.len() {
            return Err(Error::Structural(format!(
                "{} has {} rows but {} has {}",
                x_path.display(),
                x_lines.len(),
                y_path.display(),
                y_lines.len()
            )));
        }
        let mut row = Vec::with_capacity(UCI_FEATURES);
        for ((xn, xl), (yn, yl)) in x_lines.into_iter().zip(y_lines) {
            stats.rows_in += 1;
            let code: u32 = yl.trim().parse().map_err(|_| Error::Parse {
                file: y_path.display().to_string(),
                line: yn,
                msg: format!("activity code {:?} is not an integer", yl.trim()),
            })?;
            let name = names.get(&code).ok_or_else(|| Error::Parse {
                file: y_path.display().to_string(),
                line: yn,
                msg: format!("activity code {code} missing from activity_labels.txt"),
            })?;
            let target = map_to_canonical_labels(name, map)?;
            row.clear();
            for tok in xl.split_whitespace() {
                let v = parse_f64(tok).ok_or_else(|| Error::Parse {
                    file: x_path.display().to_string(),
                    line: xn,
                    msg: format!("non-numeric token {tok:?}"),
                })?;
                row.push(v);
            }
            if row.len() != UCI_FEATURES {
                return Err(Error::Parse {
                    file: x_path.display().to_string(),
                    line: xn,
                    msg: format!("expected {UCI_FEATURES} values, found {}", row.len()),
                });
            }
            match target {
                LabelTarget::Class(c) => {
                    frame.push(&row, c)?;
                    stats.emitted += 1;
                }
                LabelTarget::Drop => stats.label_filtered += 1,
            }
        }
    }
    Ok(Ingested { frame, stats })
}

fn non_blank(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect()
}

fn read_activity_labels(path: &Path) -> Result<HashMap<u32, String>> {
    let text = read_text(path)?;
    let mut out = HashMap::new();
    for (n, line) in non_blank(&text) {
        let mut it = line.split_whitespace();
        let (Some(code), Some(name)) = (it.next(), it.next()) else {
            return Err(Error::Parse {
                file: path.display().to_string(),
                line: n,
                msg: "expected `<code> <NAME>`".into(),
            });
        };
        let code: u32 = code.parse().map_err(|_| Error::Parse {
            file: path.display().to_string(),
            line: n,
            msg: format!("bad activity code {code:?}"),
        })?;
        out.insert(code, name.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    const LABELS: &str = "1 WALKING\n2 WALKING_UPSTAIRS\n3 WALKING_DOWNSTAIRS\n4 SITTING\n5 STANDING\n6 LAYING\n";

    fn row(v: f64) -> String {
        let toks: Vec<String> = (0..UCI_FEATURES).map(|i| format!("{:e}", v + i as f64 * 1e-3)).collect();
        format!(" {}\n", toks.join(" "))
    }

    fn write_fixture(dir: &Path, train: &[(f64, u32)], test: &[(f64, u32)]) {
        fs::write(dir.join("activity_labels.txt"), LABELS).unwrap();
        for (part, rows) in [("train", train), ("test", test)] {
            fs::create_dir_all(dir.join(part)).unwrap();
            let x: String = rows.iter().map(|(v, _)| row(*v)).collect();
            let y: String = rows.iter().map(|(_, c)| format!("{c}\n")).collect();
            fs::write(dir.join(part).join(format!("X_{part}.txt")), x).unwrap();
            fs::write(dir.join(part).join(format!("y_{part}.txt")), y).unwrap();
        }
    }

    #[test]
    fn three_row_fixture_drops_laying() {
        let tmp = tempfile::tempdir().unwrap();
        // STANDING, LAYING, WALKING
        write_fixture(tmp.path(), &[(0.1, 5), (0.2, 6)], &[(0.3, 1)]);
        let map = LabelMap::default_for(SourceId::UciHar);
        let got = load_uci_har(tmp.path(), &map).unwrap();
        assert_eq!(got.frame.labels, vec![0, 2]);
        assert_eq!(got.frame.col_count(), 561);
        assert!((got.frame.features.get(1, 0) - 0.3).abs() < 1e-12);
        assert_eq!(
            got.stats,
            IngestStats { rows_in: 3, emitted: 2, label_filtered: 1, malformed: 0 }
        );
    }

    #[test]
    fn empty_files_give_empty_frame() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), &[], &[]);
        let got = load_uci_har(tmp.path(), &LabelMap::default_for(SourceId::UciHar)).unwrap();
        assert_eq!(got.frame.row_count(), 0);
        assert_eq!(got.frame.col_count(), 561);
    }

    #[test]
    fn short_row_reports_file_and_line() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), &[(0.1, 5)], &[(0.3, 1)]);
        fs::write(tmp.path().join("test/X_test.txt"), "1.0 2.0\n").unwrap();
        let err = load_uci_har(tmp.path(), &LabelMap::default_for(SourceId::UciHar)).unwrap_err();
        match err {
            Error::Parse { file, line, .. } => {
                assert!(file.ends_with("X_test.txt"));
                assert_eq!(line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn length_mismatch_is_structural() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), &[(0.1, 5)], &[(0.3, 1)]);
        fs::write(tmp.path().join("train/y_train.txt"), "5\n5\n").unwrap();
        let err = load_uci_har(tmp.path(), &LabelMap::default_for(SourceId::UciHar)).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn missing_file_is_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_uci_har(tmp.path(), &LabelMap::default_for(SourceId::UciHar)).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn non_numeric_token_is_parse_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), &[(0.1, 5)], &[]);
        let mut bad = row(0.1);
        bad = bad.replacen("1e-1", "abc", 1);
        fs::write(tmp.path().join("train/X_train.txt"), bad).unwrap();
        let err = load_uci_har(tmp.path(), &LabelMap::default_for(SourceId::UciHar)).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }
}
