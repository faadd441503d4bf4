use crate::error::{Error, Result};
use crate::ingest::NUM_CLASSES;

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
    total: u64,
}

/// Five-class confusion matrix of `(labels[i], predictions[i])` pairs.
pub fn confusion_matrix(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    ConfusionMatrix::tally(NUM_CLASSES, labels, predictions)
}

impl ConfusionMatrix {
    pub fn zeros(n: usize) -> Self {
        ConfusionMatrix {
            n,
            counts: vec![0; n * n],
            total: 0,
        }
    }

    pub fn tally(n: usize, labels: &[u8], predictions: &[u8]) -> Result<Self> {
        if labels.len() != predictions.len() {
            return Err(Error::Input(format!(
                "{} labels but {} predictions",
                labels.len(),
                predictions.len()
            )));
        }
        let mut cm = Self::zeros(n);
        for (i, (&t, &p)) in labels.iter().zip(predictions).enumerate() {
            if t as usize >= n || p as usize >= n {
                return Err(Error::Input(format!(
                    "sample {i}: label {t} / prediction {p} outside 0..{n}"
                )));
            }
            cm.counts[t as usize * n + p as usize] += 1;
            cm.total += 1;
        }
        Ok(cm)
    }

    /// Row-major `n x n` counts.
    pub fn from_counts(n: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n * n || n == 0 {
            return Err(Error::Input(format!("{} counts for a {n}x{n} matrix", counts.len())));
        }
        let total = counts.iter().sum();
        Ok(ConfusionMatrix { n, counts, total })
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.n..(truth + 1) * self.n]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// One-vs-rest `(tp, fp, fn, tn)` for class `c`.
    pub fn one_vs_rest(&self, c: usize) -> (u64, u64, u64, u64) {
        let tp = self.get(c, c);
        let fn_ = self.row(c).iter().sum::<u64>() - tp;
        let fp = (0..self.n).map(|t| self.get(t, c)).sum::<u64>() - tp;
        (tp, fp, fn_, self.total - tp - fp - fn_)
    }
}
