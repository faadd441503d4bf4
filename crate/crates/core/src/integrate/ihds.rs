//! `IHDS` binary container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "IHDS"
//! 4       4     version, u32 LE (= 1)
//! 8       4     feature_count F, u32 LE
//! 12      8     row_count N, u64 LE
//! 20      1     labels_present (0 or 1)
//! 21      ...   N rows: F x f32 LE, then one u8 label if labels_present
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::IhardsDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const IHDS_MAGIC: &[u8; 4] = b"IHDS";
pub const IHDS_VERSION: u32 = 1;
const HEADER_LEN: u64 = 21;

/// Maximum rows [`write_csv`] will export.
pub const CSV_ROW_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IhdsContents {
    pub features: Matrix<f32>,
    pub labels: Option<Vec<u8>>,
}

impl IhdsContents {
    pub fn into_dataset(self, seed_used: u64) -> Result<IhardsDataset> {
        let labels = self
            .labels
            .ok_or_else(|| Error::Structural("IHDS file carries no labels".into()))?;
        IhardsDataset::new(self.features, labels, seed_used)
    }
}

pub fn write_ihds(path: &Path, features: &Matrix<f32>, labels: Option<&[u8]>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ihds_to(&mut w, features, labels).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ihds_to<W: Write>(w: &mut W, features: &Matrix<f32>, labels: Option<&[u8]>) -> std::io::Result<()> {
    if let Some(l) = labels {
        assert_eq!(l.len(), features.rows(), "label count must match rows");
    }
    w.write_all(IHDS_MAGIC)?;
    w.write_all(&IHDS_VERSION.to_le_bytes())?;
    w.write_all(&(features.cols() as u32).to_le_bytes())?;
    w.write_all(&(features.rows() as u64).to_le_bytes())?;
    w.write_all(&[labels.is_some() as u8])?;
    let mut buf = Vec::with_capacity(features.cols() * 4 + 1);
    for r in 0..features.rows() {
        buf.clear();
        for v in features.row(r) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(l) = labels {
            buf.push(l[r]);
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_ihds(path: &Path) -> Result<IhdsContents> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    read_ihds_from(&mut BufReader::new(file), Some(len))
}

pub fn read_ihds_from<R: Read>(r: &mut R, total_len: Option<u64>) -> Result<IhdsContents> {
    let mut header = [0u8; HEADER_LEN as usize];
    read_exact(r, &mut header, "header")?;
    if &header[0..4] != IHDS_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}, expected \"IHDS\"", &header[0..4])));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version > IHDS_VERSION || version == 0 {
        return Err(Error::Version { found: version, supported: IHDS_VERSION });
    }
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let rows = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let has_labels = match header[20] {
        0 => false,
        1 => true,
        b => return Err(Error::Corrupt(format!("labels_present byte is {b}"))),
    };
    let row_bytes = cols as u64 * 4 + has_labels as u64;
    let expected = rows
        .checked_mul(row_bytes)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Corrupt("row_count overflows".into()))?;
    if let Some(len) = total_len {
        if len < expected {
            return Err(Error::Corrupt(format!("truncated: {len} bytes, header implies {expected}")));
        }
        if len > expected {
            return Err(Error::Corrupt(format!("{} trailing bytes", len - expected)));
        }
    }
    let rows = rows as usize;
    let mut data = Vec::with_capacity(rows * cols);
    let mut labels = has_labels.then(|| Vec::with_capacity(rows));
    let mut buf = vec![0u8; row_bytes as usize];
    for _ in 0..rows {
        read_exact(r, &mut buf, "row data")?;
        data.extend(
            buf[..cols * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap())),
        );
        if let Some(l) = labels.as_mut() {
            l.push(buf[cols * 4]);
        }
    }
    Ok(IhdsContents {
        features: Matrix::from_vec(rows, cols, data)?,
        labels,
    })
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Corrupt(format!("truncated while reading {what}")),
        _ => Error::Corrupt(format!("read failed in {what}: {e}")),
    })
}

/// Plain CSV export: header `f0,...,f{F-1}[,label]`, one row per line.
pub fn write_csv(path: &Path, features: &Matrix<f32>, labels: Option<&[u8]>) -> Result<()> {
    if features.rows() > CSV_ROW_LIMIT {
        return Err(Error::Param(format!(
            "CSV export is limited to {CSV_ROW_LIMIT} rows, dataset has {}",
            features.rows()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        let mut head: Vec<String> = (0..features.cols()).map(|c| format!("f{c}")).collect();
        if labels.is_some() {
            head.push("label".into());
        }
        writeln!(w, "{}", head.join(","))?;
        for r in 0..features.rows() {
            let mut cells: Vec<String> = features.row(r).iter().map(|v| v.to_string()).collect();
            if let Some(l) = labels {
                cells.push(l[r].to_string());
            }
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
