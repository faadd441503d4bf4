//! Central finite differences against analytic backward passes.
//!
//! Each case draws a random shape and inputs, takes the scalar objective
//! `L = sum(R * f(x))` for a random `R` (or the loss itself for
//! softmax-xent), and compares every analytic partial with
//! `(L(x + h) - L(x - h)) / 2h`, `h = 1e-5`. An element passes when
//! `|a - n| <= 1e-4 * max(|a|, |n|)`, or when `|a - n| <= 1e-8` (the
//! cancellation noise of a difference quotient at this `h`, which dominates
//! for partials near zero).

use ihards_core::cnn::ops;
use ihards_core::cnn::Tensor;
use ihards_core::integrate::SeededRng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Default)]
pub struct GradReport {
    pub layer: &'static str,
    pub cases: usize,
    pub checked: usize,
    pub failures: usize,
    /// Largest relative error among partials of magnitude >= 1e-4.
    pub max_rel: f64,
}

impl GradReport {
    fn new(layer: &'static str) -> Self {
        GradReport { layer, ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }

    fn compare(&mut self, analytic: &[f64], numeric: &[f64]) {
        for (&a, &n) in analytic.iter().zip(numeric) {
            self.checked += 1;
            let diff = (a - n).abs();
            let scale = a.abs().max(n.abs());
            let rel = if scale > 0.0 { diff / scale } else { 0.0 };
            if scale >= 1e-4 {
                self.max_rel = self.max_rel.max(rel);
            }
            if diff > ABS_FLOOR && rel > REL_TOL {
                self.failures += 1;
            }
        }
    }
}

fn rand_tensor(rng: &mut SeededRng, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.normal()).collect()).unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Numeric gradient of `f` with respect to every element of `t`.
fn numeric(t: &Tensor, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    let mut work = t.clone();
    (0..t.len())
        .map(|i| {
            let orig = work.data()[i];
            work.data_mut()[i] = orig + H;
            let up = f(&work);
            work.data_mut()[i] = orig - H;
            let down = f(&work);
            work.data_mut()[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

pub fn conv1d(cases: usize, seed: u64) -> GradReport {
    let mut rep = GradReport::new("conv1d");
    let mut rng = SeededRng::new(seed);
    for _ in 0..cases {
        let b = 1 + rng.index(3);
        let k = 1 + rng.index(5);
        let len = k + rng.index(8);
        let cin = 1 + rng.index(3);
        let f = 1 + rng.index(4);
        let x = rand_tensor(&mut rng, vec![b, len, cin]);
        let w = rand_tensor(&mut rng, vec![k, cin, f]);
        let bias = rand_tensor(&mut rng, vec![f]);
        let r = rand_tensor(&mut rng, vec![b, len - k + 1, f]);
        let (gx, gw, gb) = ops::conv1d_backward(&r, &x, &w).unwrap();
        rep.compare(gx.data(), &numeric(&x, |x| dot(&ops::conv1d_forward(x, &w, &bias).unwrap(), &r)));
        rep.compare(gw.data(), &numeric(&w, |w| dot(&ops::conv1d_forward(&x, w, &bias).unwrap(), &r)));
        rep.compare(gb.data(), &numeric(&bias, |bs| dot(&ops::conv1d_forward(&x, &w, bs).unwrap(), &r)));
        rep.cases += 1;
    }
    rep
}

pub fn dense(cases: usize, seed: u64) -> GradReport {
    let mut rep = GradReport::new("dense");
    let mut rng = SeededRng::new(seed);
    for _ in 0..cases {
        let b = 1 + rng.index(5);
        let i = 1 + rng.index(12);
        let o = 1 + rng.index(8);
        let x = rand_tensor(&mut rng, vec![b, i]);
        let w = rand_tensor(&mut rng, vec![i, o]);
        let bias = rand_tensor(&mut rng, vec![o]);
        let r = rand_tensor(&mut rng, vec![b, o]);
        let (gx, gw, gb) = ops::dense_backward(&r, &x, &w).unwrap();
        rep.compare(gx.data(), &numeric(&x, |x| dot(&ops::dense_affine(x, &w, &bias).unwrap(), &r)));
        rep.compare(gw.data(), &numeric(&w, |w| dot(&ops::dense_affine(&x, w, &bias).unwrap(), &r)));
        rep.compare(gb.data(), &numeric(&bias, |bs| dot(&ops::dense_affine(&x, &w, bs).unwrap(), &r)));
        rep.cases += 1;
    }
    rep
}

pub fn batchnorm(cases: usize, seed: u64) -> GradReport {
    let mut rep = GradReport::new("batchnorm");
    let mut rng = SeededRng::new(seed);
    let eps = ihards_core::cnn::network::BN_EPSILON;
    for case in 0..cases {
        // include the 8x4 shape, then random [b, ch] and [b, len, ch]
        let shape = match case % 3 {
            0 => vec![8, 4],
            1 => vec![2 + rng.index(8), 1 + rng.index(6)],
            _ => vec![1 + rng.index(3), 2 + rng.index(4), 1 + rng.index(4)],
        };
        let ch = *shape.last().unwrap();
        let x = rand_tensor(&mut rng, shape.clone());
        let gamma = rand_tensor(&mut rng, vec![ch]);
        let beta = rand_tensor(&mut rng, vec![ch]);
        let r = rand_tensor(&mut rng, shape);
        let (_, cache) = ops::batchnorm_train(&x, &gamma, &beta, eps).unwrap();
        let (gx, gg, gb) = ops::batchnorm_backward(&r, &cache, &gamma).unwrap();
        let f = |x: &Tensor, g: &Tensor, b: &Tensor| dot(&ops::batchnorm_train(x, g, b, eps).unwrap().0, &r);
        rep.compare(gx.data(), &numeric(&x, |x| f(x, &gamma, &beta)));
        rep.compare(gg.data(), &numeric(&gamma, |g| f(&x, g, &beta)));
        rep.compare(gb.data(), &numeric(&beta, |b| f(&x, &gamma, b)));
        rep.cases += 1;
    }
    rep
}

pub fn softmax_xent(cases: usize, seed: u64) -> GradReport {
    let mut rep = GradReport::new("softmax-xent");
    let mut rng = SeededRng::new(seed);
    for _ in 0..cases {
        let b = 1 + rng.index(8);
        let mut logits = rand_tensor(&mut rng, vec![b, 5]);
        let scale = 1.0 + 4.0 * rng.next_f64();
        logits.data_mut().iter_mut().for_each(|v| *v *= scale);
        let labels: Vec<u8> = (0..b).map(|_| rng.index(5) as u8).collect();
        let (_, g) = ops::softmax_xent(&logits, &labels).unwrap();
        rep.compare(g.data(), &numeric(&logits, |l| ops::softmax_xent(l, &labels).unwrap().0));
        rep.cases += 1;
    }
    rep
}

/// All four layer suites at `cases` random cases each.
pub fn full_suite(cases: usize, seed: u64) -> Vec<GradReport> {
    vec![
        conv1d(cases, seed),
        dense(cases, seed + 1),
        batchnorm(cases, seed + 2),
        softmax_xent(cases, seed + 3),
    ]
}
