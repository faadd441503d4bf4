use super::rng::{stream, SeededRng};
use crate::error::{Error, Result};
use crate::ingest::{ActivityClass, CanonicalFrame, SourceId, NUM_CLASSES};

/// Gaussian class blobs standing in for the three real sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub per_class: usize,
    pub sigma: f64,
    /// Column counts for UCI-HAR, WISDM and KU-HAR.
    pub widths: [usize; 3],
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            per_class: 1000,
            sigma: 0.5,
            widths: [561, 3, 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSources {
    pub uci: CanonicalFrame,
    pub wisdm: CanonicalFrame,
    pub kuhar: CanonicalFrame,
    /// Class means per source, `means[source][class]`.
    pub means: Vec<Vec<Vec<f64>>>,
}

/// Minimum distance between class means, in units of sigma.
const SEPARATION: f64 = 10.0;

/// Each class gets a fixed mean vector per source, drawn uniformly and
/// redrawn until every pair of means is at least `10 * sigma` apart; rows
/// are `mean + N(0, sigma^2)` noise, emitted in class order.
pub fn generate_synthetic(cfg: &SyntheticConfig, rng: &SeededRng) -> Result<SyntheticSources> {
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::Param(format!("sigma must be >= 0, got {}", cfg.sigma)));
    }
    if cfg.per_class == 0 {
        return Err(Error::Param("per_class must be >= 1".into()));
    }
    if cfg.widths.contains(&0) {
        return Err(Error::Param("every source needs at least one column".into()));
    }
    let mut rng = rng.substream(stream::SYNTHETIC);
    let ids = [SourceId::UciHar, SourceId::Wisdm, SourceId::KuHar];
    let mut frames = Vec::with_capacity(3);
    let mut all_means = Vec::with_capacity(3);
    for (id, &width) in ids.iter().zip(&cfg.widths) {
        let means = separated_means(width, cfg.sigma, &mut rng);
        let mut frame = CanonicalFrame::empty(*id, width);
        let mut row = vec![0.0; width];
        for class in ActivityClass::ALL {
            let mean = &means[class.code() as usize];
            for _ in 0..cfg.per_class {
                for (v, m) in row.iter_mut().zip(mean) {
                    *v = m + cfg.sigma * rng.normal();
                }
                frame.push(&row, class)?;
            }
        }
        frames.push(frame);
        all_means.push(means);
    }
    let kuhar = frames.pop().unwrap();
    let wisdm = frames.pop().unwrap();
    let uci = frames.pop().unwrap();
    Ok(SyntheticSources {
        uci,
        wisdm,
        kuhar,
        means: all_means,
    })
}

fn separated_means(width: usize, sigma: f64, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let min_dist = (SEPARATION * sigma).max(1e-6);
    let mut half_range = 2.0 * (SEPARATION * sigma).max(1.0);
    loop {
        let means: Vec<Vec<f64>> = (0..NUM_CLASSES)
            .map(|_| (0..width).map(|_| rng.uniform(-half_range, half_range)).collect())
            .collect();
        let ok = (0..NUM_CLASSES).all(|a| {
            (a + 1..NUM_CLASSES).all(|b| distance(&means[a], &means[b]) >= min_dist)
        });
        if ok {
            return means;
        }
        half_range *= 1.1;
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
