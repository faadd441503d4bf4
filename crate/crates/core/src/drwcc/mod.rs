//! Correlation-based feature pruning.
//!
//! Pearson correlations are computed over every column pair; the pruning
//! scan walks columns in ascending index order and keeps a column only if its
//! absolute correlation with every column kept so far is at most the
//! threshold. The kept set is therefore pairwise `|r| <= threshold`.

mod mask;

pub use mask::FeatureMask;

use crate::error::{Error, Result};
use crate::matrix::{Element, Matrix};

/// Population Pearson correlation. Returns 0 when either input is constant.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Shape("correlation needs at least 2 samples".into()));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Symmetric matrix of signed Pearson coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
    constant: Vec<bool>,
}

impl CorrelationMatrix {
    /// Builds from a full row-major `n x n` buffer, checking symmetry and bounds.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!("{} values for {n}x{n}", values.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(v.abs() <= 1.0 + 1e-9) || v != values[j * n + i] {
                    return Err(Error::Input(format!("entry ({i},{j}) = {v} is not a valid correlation")));
                }
            }
        }
        let constant = (0..n).map(|i| values[i * n + i] == 0.0).collect();
        Ok(CorrelationMatrix { n, values, constant })
    }

    pub fn col_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn is_constant(&self, col: usize) -> bool {
        self.constant[col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Off-diagonal statistics relative to `threshold`.
    pub fn summary(&self, threshold: f64) -> CorrelationSummary {
        let mut s = CorrelationSummary {
            columns: self.n,
            max_abs_r: 0.0,
            mean_abs_r: 0.0,
            pairs_above: 0,
            columns_above: 0,
            constant_columns: self.constant.iter().filter(|&&c| c).count(),
        };
        let mut flagged = vec![false; self.n];
        let mut pairs = 0usize;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let r = self.get(i, j).abs();
                s.max_abs_r = s.max_abs_r.max(r);
                s.mean_abs_r += r;
                pairs += 1;
                if r > threshold {
                    s.pairs_above += 1;
                    flagged[i] = true;
                    flagged[j] = true;
                }
            }
        }
        if pairs > 0 {
            s.mean_abs_r /= pairs as f64;
        }
        s.columns_above = flagged.iter().filter(|&&f| f).count();
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSummary {
    pub columns: usize,
    pub max_abs_r: f64,
    pub mean_abs_r: f64,
    /// Column pairs with `|r| > threshold`.
    pub pairs_above: usize,
    /// Columns taking part in at least one such pair.
    pub columns_above: usize,
    pub constant_columns: usize,
}

const ROW_CHUNK: usize = 1024;

/// All pairwise correlations of the columns of `data`.
///
/// Column means come from a first pass; the centred cross-product matrix is
/// then accumulated over fixed row chunks in row order, so the result does
/// not depend on how the work is scheduled.
pub fn correlation_matrix<T: Element>(data: &Matrix<T>) -> Result<CorrelationMatrix> {
    let (rows, cols) = (data.rows(), data.cols());
    if rows < 2 {
        return Err(Error::Shape("correlation needs at least 2 rows".into()));
    }
    let mut mean = vec![0.0f64; cols];
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for r in 0..rows {
        for (c, v) in data.row(r).iter().enumerate() {
            let v = v.to_f64();
            mean[c] += v;
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let constant: Vec<bool> = lo.iter().zip(&hi).map(|(a, b)| a == b).collect();

    // upper triangle of sum (x_i - m_i)(x_j - m_j)
    let mut cross = vec![0.0f64; cols * cols];
    let mut centred = vec![0.0f64; cols * ROW_CHUNK];
    let mut start = 0;
    while start < rows {
        let len = ROW_CHUNK.min(rows - start);
        // column-major chunk: centred[c * len + k]
        for k in 0..len {
            for (c, v) in data.row(start + k).iter().enumerate() {
                centred[c * len + k] = v.to_f64() - mean[c];
            }
        }
        for i in 0..cols {
            let ci = &centred[i * len..(i + 1) * len];
            for j in i..cols {
                let cj = &centred[j * len..(j + 1) * len];
                cross[i * cols + j] += dot(ci, cj);
            }
        }
        start += len;
    }

    let mut values = vec![0.0f64; cols * cols];
    for i in 0..cols {
        values[i * cols + i] = if constant[i] { 0.0 } else { 1.0 };
        for j in i + 1..cols {
            let r = if constant[i] || constant[j] {
                0.0
            } else {
                let denom = (cross[i * cols + i] * cross[j * cols + j]).sqrt();
                (cross[i * cols + j] / denom).clamp(-1.0, 1.0)
            };
            values[i * cols + j] = r;
            values[j * cols + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        n: cols,
        values,
        constant,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Greedy keep-first scan; a column is dropped when `|r| > threshold` against
/// any column already kept.
pub fn drwcc_prune(corr: &CorrelationMatrix, threshold: f64) -> Result<FeatureMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Param(format!("threshold must be in (0, 1), got {threshold}")));
    }
    let n = corr.col_count();
    let mut keep = vec![false; n];
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..n {
        if kept.iter().all(|&k| corr.get(j, k).abs() <= threshold) {
            keep[j] = true;
            kept.push(j);
        }
    }
    FeatureMask::new(keep, threshold)
}

/// Drops the columns whose mask entry is false, keeping column order.
pub fn apply_feature_mask<T: Element>(data: &Matrix<T>, mask: &FeatureMask) -> Result<Matrix<T>> {
    if mask.len() != data.cols() {
        return Err(Error::Shape(format!(
            "mask covers {} columns, data has {}",
            mask.len(),
            data.cols()
        )));
    }
    let kept = mask.kept_indices();
    let mut out = Vec::with_capacity(data.rows() * kept.len());
    for r in 0..data.rows() {
        let row = data.row(r);
        out.extend(kept.iter().map(|&c| row[c]));
    }
    Matrix::from_vec(data.rows(), kept.len(), out)
}
