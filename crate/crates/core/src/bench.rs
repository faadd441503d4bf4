//! Runtime scaling of the convolution and dense kernels.
//!
//! Convolution cost is proportional to `n * k * d * f` (length, kernel,
//! input channels, filters) and a dense layer to `inputs * outputs`, so
//! doubling any one factor should roughly double the time. Each case times
//! a base and a doubled configuration over several trials and compares
//! medians.

use std::time::{Duration, Instant};

use crate::cnn::{ops, Tensor};
use crate::integrate::rng::stream;
use crate::integrate::SeededRng;

pub const BAND: (f64, f64) = (1.5, 3.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub trials: usize,
    pub batch: usize,
    pub length: usize,
    pub kernel: usize,
    pub channels: usize,
    pub filters: usize,
    pub dense_in: usize,
    pub dense_out: usize,
    /// Minimum wall time per timed sample; short kernels are repeated.
    pub min_sample: Duration,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 5,
            batch: 4,
            length: 2048,
            kernel: 8,
            channels: 16,
            filters: 32,
            dense_in: 2048,
            dense_out: 256,
            min_sample: Duration::from_millis(40),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCase {
    pub factor: &'static str,
    pub base: usize,
    pub doubled: usize,
    /// Median seconds per call.
    pub base_secs: f64,
    pub doubled_secs: f64,
    /// Ratio the cost model predicts (about 2).
    pub predicted: f64,
    pub ratio: f64,
}

impl ScalingCase {
    pub fn within_band(&self) -> bool {
        self.ratio >= BAND.0 && self.ratio <= BAND.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub cases: Vec<ScalingCase>,
    /// Seconds for a convolution whose kernel spans the whole input.
    pub full_kernel_secs: f64,
}

impl BenchReport {
    pub fn all_within_band(&self) -> bool {
        self.cases.iter().all(ScalingCase::within_band)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("band_low = {}\nband_high = {}\n", BAND.0, BAND.1);
        for c in &self.cases {
            s.push_str(&format!(
                "{f}.base = {}\n{f}.doubled = {}\n{f}.base_secs = {:.6e}\n{f}.doubled_secs = {:.6e}\n{f}.predicted_ratio = {:.4}\n{f}.ratio = {:.4}\n{f}.verdict = {}\n",
                c.base,
                c.doubled,
                c.base_secs,
                c.doubled_secs,
                c.predicted,
                c.ratio,
                if c.within_band() { "linear" } else { "outside-band" },
                f = c.factor,
            ));
        }
        s.push_str(&format!("full_kernel_secs = {:.6e}\n", self.full_kernel_secs));
        s.push_str(&format!(
            "verdict = {}\n",
            if self.all_within_band() { "linear" } else { "outside-band" }
        ));
        s
    }
}

fn random(rng: &mut SeededRng, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).expect("shape")
}

/// Seconds per call: repeats `f` until `min` has elapsed.
fn time_once(min: Duration, f: &mut dyn FnMut()) -> f64 {
    f();
    let start = Instant::now();
    let mut calls = 0u32;
    while start.elapsed() < min || calls == 0 {
        f();
        calls += 1;
    }
    start.elapsed().as_secs_f64() / calls as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Alternates base and doubled trials so drift hits both equally.
fn compare(trials: usize, min: Duration, base: &mut dyn FnMut(), doubled: &mut dyn FnMut()) -> (f64, f64) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for _ in 0..trials.max(1) {
        a.push(time_once(min, base));
        b.push(time_once(min, doubled));
    }
    (median(a), median(b))
}

fn conv_case(cfg: &BenchConfig, rng: &mut SeededRng, factor: &'static str) -> ScalingCase {
    let dims = |scale_n: usize, scale_k: usize, scale_d: usize, scale_f: usize| {
        (cfg.length * scale_n, cfg.kernel * scale_k, cfg.channels * scale_d, cfg.filters * scale_f)
    };
    let (base, dbl) = match factor {
        "conv.n" => (dims(1, 1, 1, 1), dims(2, 1, 1, 1)),
        "conv.k" => (dims(1, 1, 1, 1), dims(1, 2, 1, 1)),
        "conv.d" => (dims(1, 1, 1, 1), dims(1, 1, 2, 1)),
        _ => (dims(1, 1, 1, 1), dims(1, 1, 1, 2)),
    };
    let cost = |(n, k, d, f): (usize, usize, usize, usize)| ((n - k + 1) * k * d * f) as f64;
    let make = |rng: &mut SeededRng, (n, k, d, f): (usize, usize, usize, usize)| {
        (random(rng, vec![cfg.batch, n, d]), random(rng, vec![k, d, f]), random(rng, vec![f]))
    };
    let (x0, w0, b0) = make(rng, base);
    let (x1, w1, b1) = make(rng, dbl);
    let (s0, s1) = compare(
        cfg.trials,
        cfg.min_sample,
        &mut || {
            std::hint::black_box(ops::conv1d_forward(&x0, &w0, &b0).expect("conv"));
        },
        &mut || {
            std::hint::black_box(ops::conv1d_forward(&x1, &w1, &b1).expect("conv"));
        },
    );
    let pick = |t: (usize, usize, usize, usize)| match factor {
        "conv.n" => t.0,
        "conv.k" => t.1,
        "conv.d" => t.2,
        _ => t.3,
    };
    ScalingCase {
        factor,
        base: pick(base),
        doubled: pick(dbl),
        base_secs: s0,
        doubled_secs: s1,
        predicted: cost(dbl) / cost(base),
        ratio: s1 / s0,
    }
}

fn dense_case(cfg: &BenchConfig, rng: &mut SeededRng, factor: &'static str) -> ScalingCase {
    let (base, dbl) = match factor {
        "dense.in" => ((cfg.dense_in, cfg.dense_out), (2 * cfg.dense_in, cfg.dense_out)),
        _ => ((cfg.dense_in, cfg.dense_out), (cfg.dense_in, 2 * cfg.dense_out)),
    };
    let batch = 64 * cfg.batch;
    let make = |rng: &mut SeededRng, (i, o): (usize, usize)| {
        (random(rng, vec![batch, i]), random(rng, vec![i, o]), random(rng, vec![o]))
    };
    let (x0, w0, b0) = make(rng, base);
    let (x1, w1, b1) = make(rng, dbl);
    let (s0, s1) = compare(
        cfg.trials,
        cfg.min_sample,
        &mut || {
            std::hint::black_box(ops::dense_affine(&x0, &w0, &b0).expect("dense"));
        },
        &mut || {
            std::hint::black_box(ops::dense_affine(&x1, &w1, &b1).expect("dense"));
        },
    );
    let pick = |t: (usize, usize)| if factor == "dense.in" { t.0 } else { t.1 };
    ScalingCase {
        factor,
        base: pick(base),
        doubled: pick(dbl),
        base_secs: s0,
        doubled_secs: s1,
        predicted: 2.0,
        ratio: s1 / s0,
    }
}

pub fn run_scaling_benchmark(cfg: &BenchConfig) -> BenchReport {
    let mut rng = SeededRng::derive(cfg.seed, stream::BENCHMARK);
    let mut cases = Vec::new();
    for f in ["conv.n", "conv.k", "conv.d", "conv.f"] {
        let c = conv_case(cfg, &mut rng, f);
        log::info!("{}: ratio {:.3}", c.factor, c.ratio);
        cases.push(c);
    }
    for f in ["dense.in", "dense.out"] {
        let c = dense_case(cfg, &mut rng, f);
        log::info!("{}: ratio {:.3}", c.factor, c.ratio);
        cases.push(c);
    }
    let n = cfg.kernel.max(2);
    let x = random(&mut rng, vec![cfg.batch, n, cfg.channels]);
    let w = random(&mut rng, vec![n, cfg.channels, cfg.filters]);
    let b = random(&mut rng, vec![cfg.filters]);
    let full_kernel_secs = time_once(Duration::from_millis(1), &mut || {
        let y = ops::conv1d_forward(&x, &w, &b).expect("conv");
        debug_assert_eq!(y.dim(1), 1);
        std::hint::black_box(y);
    });
    BenchReport { cases, full_kernel_secs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_benchmark_reports_every_factor() {
        let cfg = BenchConfig {
            trials: 1,
            batch: 1,
            length: 32,
            kernel: 3,
            channels: 2,
            filters: 4,
            dense_in: 16,
            dense_out: 8,
            min_sample: Duration::from_micros(100),
            seed: 1,
        };
        let r = run_scaling_benchmark(&cfg);
        let names: Vec<&str> = r.cases.iter().map(|c| c.factor).collect();
        assert_eq!(names, ["conv.n", "conv.k", "conv.d", "conv.f", "dense.in", "dense.out"]);
        assert!(r.cases.iter().all(|c| c.ratio > 0.0 && c.predicted > 1.5));
        assert!(r.full_kernel_secs > 0.0);
        assert!(r.to_text().contains("conv.k.verdict"));
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
