//! Builds the integrated dataset from the three sources.
//!
//! For every shared class, `per_class_n` row indices are drawn from that
//! class's rows in each source; the i-th draws of the three sources are
//! concatenated column-wise (UCI ‖ WISDM ‖ KU-HAR) into one output row. The
//! five class blocks are then shuffled together with the root seed.

mod ihds;
pub mod rng;
mod split;
mod standardize;
mod synthetic;

pub use ihds::{read_ihds, write_csv, write_ihds, IhdsContents, CSV_ROW_LIMIT, IHDS_MAGIC, IHDS_VERSION};
pub use rng::SeededRng;
pub use split::stratified_split;
pub use standardize::StandardizationStats;
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticSources};

use crate::error::{Error, Result};
use crate::ingest::{ActivityClass, CanonicalFrame, NUM_CLASSES};
use crate::matrix::Matrix;

/// What to do when a class has fewer source rows than requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplacementPolicy {
    ErrorIfShort,
    #[default]
    ReplaceIfShort,
}

impl std::str::FromStr for ReplacementPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" | "error-if-short" => Ok(ReplacementPolicy::ErrorIfShort),
            "replace" | "replace-if-short" => Ok(ReplacementPolicy::ReplaceIfShort),
            _ => Err(Error::Config(format!(
                "replacement policy must be `error` or `replace`, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for ReplacementPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReplacementPolicy::ErrorIfShort => "error",
            ReplacementPolicy::ReplaceIfShort => "replace",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrationConfig {
    pub per_class_n: usize,
    pub seed: u64,
    pub replacement_policy: ReplacementPolicy,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            per_class_n: 420_000,
            seed: 0,
            replacement_policy: ReplacementPolicy::ReplaceIfShort,
        }
    }
}

/// Labelled rows stored as `f32`, the unit the analysis and training
/// stages consume.
#[derive(Debug, Clone, PartialEq)]
pub struct IhardsDataset {
    pub features: Matrix<f32>,
    pub labels: Vec<u8>,
    pub seed_used: u64,
}

impl IhardsDataset {
    pub fn new(features: Matrix<f32>, labels: Vec<u8>, seed_used: u64) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::Label(format!("label {bad} out of range 0-4")));
        }
        Ok(IhardsDataset {
            features,
            labels,
            seed_used,
        })
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn cols(&self) -> usize {
        self.features.cols()
    }

    pub fn per_class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn select_rows(&self, idx: &[usize]) -> IhardsDataset {
        IhardsDataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            seed_used: self.seed_used,
        }
    }
}

/// Draw `n` indices into a pool of `pool_size` rows.
///
/// Without replacement (partial Fisher-Yates) when the pool is large enough;
/// otherwise uniform with replacement under
/// [`ReplacementPolicy::ReplaceIfShort`], or a capacity error.
pub fn draw_class_indices(
    pool_size: usize,
    n: usize,
    rng: &mut SeededRng,
    policy: ReplacementPolicy,
) -> Result<Vec<usize>> {
    if pool_size == 0 || n == 0 {
        return Err(Error::Param(format!(
            "draw needs pool_size >= 1 and n >= 1 (got {pool_size}, {n})"
        )));
    }
    if n <= pool_size {
        let mut pool: Vec<usize> = (0..pool_size).collect();
        for i in 0..n {
            let j = i + rng.index(pool_size - i);
            pool.swap(i, j);
        }
        pool.truncate(n);
        return Ok(pool);
    }
    match policy {
        ReplacementPolicy::ErrorIfShort => Err(Error::Capacity {
            context: String::new(),
            requested: n,
            available: pool_size,
        }),
        ReplacementPolicy::ReplaceIfShort => Ok((0..n).map(|_| rng.index(pool_size)).collect()),
    }
}

pub fn build_integrated_dataset(
    uci: &CanonicalFrame,
    wisdm: &CanonicalFrame,
    kuhar: &CanonicalFrame,
    cfg: &IntegrationConfig,
) -> Result<IhardsDataset> {
    if cfg.per_class_n == 0 {
        return Err(Error::Param("per_class_n must be >= 1".into()));
    }
    let sources = [uci, wisdm, kuhar];
    let class_rows: Vec<[Vec<usize>; NUM_CLASSES]> =
        sources.iter().map(|f| f.class_rows()).collect();
    let widths: Vec<usize> = sources.iter().map(|f| f.col_count()).collect();
    let total_cols: usize = widths.iter().sum();

    let mut draw_rng = SeededRng::derive(cfg.seed, rng::stream::INDEX_DRAW);
    // (class, [row in uci, row in wisdm, row in kuhar])
    let mut triples: Vec<(u8, [usize; 3])> = Vec::with_capacity(NUM_CLASSES * cfg.per_class_n);
    for class in ActivityClass::ALL {
        let c = class.code() as usize;
        let mut picks: Vec<Vec<usize>> = Vec::with_capacity(3);
        for (s, frame) in sources.iter().enumerate() {
            let pool = &class_rows[s][c];
            if pool.is_empty() {
                return Err(Error::Structural(format!(
                    "class {class} has no rows in {}",
                    frame.source
                )));
            }
            if cfg.per_class_n > pool.len()
                && cfg.replacement_policy == ReplacementPolicy::ReplaceIfShort
            {
                log::warn!(
                    "{}: class {class} has {} rows, drawing {} with replacement",
                    frame.source,
                    pool.len(),
                    cfg.per_class_n
                );
            }
            let idx = draw_class_indices(pool.len(), cfg.per_class_n, &mut draw_rng, cfg.replacement_policy)
                .map_err(|e| match e {
                    Error::Capacity { requested, available, .. } => Error::Capacity {
                        context: format!("class {class} from {}", frame.source),
                        requested,
                        available,
                    },
                    other => other,
                })?;
            picks.push(idx.into_iter().map(|i| pool[i]).collect());
        }
        for i in 0..cfg.per_class_n {
            triples.push((class.code(), [picks[0][i], picks[1][i], picks[2][i]]));
        }
    }

    SeededRng::derive(cfg.seed, rng::stream::SHUFFLE).shuffle(&mut triples);

    let mut data = Vec::with_capacity(triples.len() * total_cols);
    let mut labels = Vec::with_capacity(triples.len());
    for (label, rows) in &triples {
        for (s, frame) in sources.iter().enumerate() {
            data.extend(frame.features.row(rows[s]).iter().map(|&v| v as f32));
        }
        labels.push(*label);
    }
    let features = Matrix::from_vec(triples.len(), total_cols, data)?;
    IhardsDataset::new(features, labels, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SourceId;

    #[test]
    fn exhaustive_draw_is_permutation() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(seed);
            let mut idx = draw_class_indices(5, 5, &mut rng, ReplacementPolicy::ErrorIfShort).unwrap();
            idx.sort_unstable();
            assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let a = draw_class_indices(5, 3, &mut SeededRng::new(42), ReplacementPolicy::ErrorIfShort).unwrap();
        let b = draw_class_indices(5, 3, &mut SeededRng::new(42), ReplacementPolicy::ErrorIfShort).unwrap();
        assert_eq!(a, b);
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn short_pool_errors_or_replaces() {
        let err = draw_class_indices(1945, 420_000, &mut SeededRng::new(1), ReplacementPolicy::ErrorIfShort)
            .unwrap_err();
        assert!(matches!(err, Error::Capacity { requested: 420_000, available: 1945, .. }));
        let idx = draw_class_indices(3, 10, &mut SeededRng::new(1), ReplacementPolicy::ReplaceIfShort).unwrap();
        assert_eq!(idx.len(), 10);
        assert!(idx.iter().all(|&i| i < 3));
    }

    fn one_per_class(source: SourceId, base: f64) -> CanonicalFrame {
        let cols = source.feature_count();
        let mut f = CanonicalFrame::empty(source, cols);
        // reversed class order so provenance can't come from row position
        for c in (0..5u8).rev() {
            let row: Vec<f64> = (0..cols).map(|j| base + c as f64 * 10.0 + j as f64 * 1e-3).collect();
            f.push(&row, ActivityClass::from_code(c).unwrap()).unwrap();
        }
        f
    }

    #[test]
    fn single_row_per_class_concatenates_triples() {
        let uci = one_per_class(SourceId::UciHar, 1000.0);
        let wisdm = one_per_class(SourceId::Wisdm, 2000.0);
        let kuhar = one_per_class(SourceId::KuHar, 3000.0);
        let cfg = IntegrationConfig { per_class_n: 1, seed: 3, replacement_policy: ReplacementPolicy::ErrorIfShort };
        let ds = build_integrated_dataset(&uci, &wisdm, &kuhar, &cfg).unwrap();
        assert_eq!(ds.rows(), 5);
        assert_eq!(ds.cols(), 571);
        assert_eq!(ds.per_class_counts(), [1; 5]);
        for r in 0..5 {
            let c = ds.labels[r];
            let src = 4 - c as usize;
            let row = ds.features.row(r);
            let expect: Vec<f32> = uci.features.row(src).iter()
                .chain(wisdm.features.row(src))
                .chain(kuhar.features.row(src))
                .map(|&v| v as f32)
                .collect();
            assert_eq!(row, &expect[..]);
        }
    }

    #[test]
    fn missing_class_is_structural() {
        let uci = one_per_class(SourceId::UciHar, 0.0);
        let mut wisdm = CanonicalFrame::empty(SourceId::Wisdm, 3);
        wisdm.push(&[1.0, 2.0, 3.0], ActivityClass::Walk).unwrap();
        let kuhar = one_per_class(SourceId::KuHar, 0.0);
        let cfg = IntegrationConfig { per_class_n: 1, seed: 0, replacement_policy: ReplacementPolicy::ReplaceIfShort };
        let err = build_integrated_dataset(&uci, &wisdm, &kuhar, &cfg).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn capacity_error_names_class_and_source() {
        let uci = one_per_class(SourceId::UciHar, 0.0);
        let wisdm = one_per_class(SourceId::Wisdm, 0.0);
        let kuhar = one_per_class(SourceId::KuHar, 0.0);
        let cfg = IntegrationConfig { per_class_n: 2, seed: 0, replacement_policy: ReplacementPolicy::ErrorIfShort };
        let err = build_integrated_dataset(&uci, &wisdm, &kuhar, &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stand") && msg.contains("uci_har"), "{msg}");
    }
}
