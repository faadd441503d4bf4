use crate::error::{Error, Result};
use crate::matrix::{Element, Matrix};

/// Per-column z-score parameters (population standard deviation).
///
/// Columns with zero spread are only centred: their divisor is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit<T: Element>(train: &Matrix<T>) -> Result<Self> {
        let (n, cols) = (train.rows(), train.cols());
        if n == 0 {
            return Err(Error::Shape("cannot fit standardization on zero rows".into()));
        }
        let mut mean = vec![0.0f64; cols];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(train.row(r)) {
                *m += v.to_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0f64; cols];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(train.row(r)).zip(&mean) {
                let d = v.to_f64() - m;
                *s += d * d;
            }
        }
        let std = var.into_iter().map(|s| (s / n as f64).sqrt()).collect();
        Ok(StandardizationStats { mean, std })
    }

    /// Identity transform over `cols` columns.
    pub fn identity(cols: usize) -> Self {
        StandardizationStats {
            mean: vec![0.0; cols],
            std: vec![1.0; cols],
        }
    }

    pub fn cols(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    fn divisor(&self, c: usize) -> f64 {
        if self.std[c] == 0.0 {
            1.0
        } else {
            self.std[c]
        }
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.cols() {
            return Err(Error::Shape(format!(
                "standardization fitted on {} columns, data has {cols}",
                self.cols()
            )));
        }
        Ok(())
    }

    pub fn apply<T: Element>(&self, data: &Matrix<T>) -> Result<Matrix<T>> {
        self.check(data.cols())?;
        let mut out = data.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = T::from_f64((v.to_f64() - self.mean[c]) / self.divisor(c));
            }
        }
        Ok(out)
    }

    pub fn invert<T: Element>(&self, data: &Matrix<T>) -> Result<Matrix<T>> {
        self.check(data.cols())?;
        let mut out = data.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = T::from_f64(v.to_f64() * self.divisor(c) + self.mean[c]);
            }
        }
        Ok(out)
    }

    /// Stats restricted to the kept columns of a mask.
    pub fn select(&self, keep: &[bool]) -> Result<Self> {
        self.check(keep.len())?;
        let pick = |v: &[f64]| v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect();
        Ok(StandardizationStats {
            mean: pick(&self.mean),
            std: pick(&self.std),
        })
    }

    /// Stats rounded through `f32`, the precision checkpoints store.
    pub fn rounded_to_f32(&self) -> Self {
        let r = |v: &[f64]| v.iter().map(|&x| x as f32 as f64).collect();
        StandardizationStats {
            mean: r(&self.mean),
            std: r(&self.std),
        }
    }
}
