use std::path::Path;

use super::{
    parse_f64, read_text, CanonicalFrame, IngestStats, Ingested, LabelMap, LabelTarget, SourceId,
};
use crate::error::{Error, Result};

/// Files with a larger malformed fraction are rejected as the wrong format.
pub const MALFORMED_LIMIT: f64 = 0.5;

/// Load the WISDM v1.1 raw accelerometer log.
///
/// Records look like `user,activity,timestamp,x,y,z;`. The public file has
/// lines holding several `;`-terminated records and some broken records, so
/// each record is parsed independently. Blank lines and broken records are
/// skipped and counted as malformed; activities outside the label map are
/// malformed too, activities mapped to `drop` are label-filtered.
pub fn load_wisdm_raw(path: &Path, map: &LabelMap) -> Result<Ingested> {
    let text = read_text(path)?;
    let mut frame = CanonicalFrame::empty(SourceId::Wisdm, 3);
    let mut stats = IngestStats::default();
    for line in text.lines() {
        if line.trim().is_empty() {
            stats.rows_in += 1;
            stats.malformed += 1;
            continue;
        }
        for record in line.split(';').filter(|r| !r.trim().is_empty()) {
            stats.rows_in += 1;
            match parse_record(record, map) {
                Some((row, LabelTarget::Class(c))) => {
                    frame.push(&row, c)?;
                    stats.emitted += 1;
                }
                Some((_, LabelTarget::Drop)) => stats.label_filtered += 1,
                None => stats.malformed += 1,
            }
        }
    }
    if stats.rows_in > 0 && stats.malformed as f64 / stats.rows_in as f64 > MALFORMED_LIMIT {
        return Err(Error::Parse {
            file: path.display().to_string(),
            line: 0,
            msg: format!(
                "{} of {} records malformed; not a WISDM raw log?",
                stats.malformed, stats.rows_in
            ),
        });
    }
    if stats.malformed > 0 {
        log::warn!("{}: skipped {} malformed records", path.display(), stats.malformed);
    }
    Ok(Ingested { frame, stats })
}

fn parse_record(record: &str, map: &LabelMap) -> Option<([f64; 3], LabelTarget)> {
    let fields: Vec<&str> = record.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return None;
    }
    fields[0].parse::<u64>().ok()?;
    fields[2].parse::<i64>().ok()?;
    let target = map.get(fields[1])?;
    let row = [parse_f64(fields[3])?, parse_f64(fields[4])?, parse_f64(fields[5])?];
    Some((row, target))
}
