//! Independent reference implementations used by the property and
//! acceptance tests.

use ihards_core::integrate::SeededRng;
use ihards_core::Matrix;

/// Two-pass textbook Pearson over column vectors; 0 for a constant column.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return 0.0;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Drop-forward formulation: each surviving column removes every later
/// column it correlates with above `t`.
pub fn brute_prune(data: &Matrix<f64>, t: f64) -> Vec<bool> {
    let cols: Vec<Vec<f64>> = (0..data.cols()).map(|c| data.column(c)).collect();
    let n = cols.len();
    let mut alive = vec![true; n];
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        for j in i + 1..n {
            if alive[j] && pearson(&cols[i], &cols[j]).abs() > t {
                alive[j] = false;
            }
        }
    }
    alive
}

/// Largest off-diagonal |r| among kept columns.
pub fn max_kept_abs_r(data: &Matrix<f64>, keep: &[bool]) -> f64 {
    let kept: Vec<Vec<f64>> = (0..data.cols()).filter(|&c| keep[c]).map(|c| data.column(c)).collect();
    let mut m: f64 = 0.0;
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            m = m.max(pearson(&kept[i], &kept[j]).abs());
        }
    }
    m
}

/// Random matrix where some columns are noisy linear copies of earlier ones,
/// so pruning has something to do.
pub fn correlated_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix<f64> {
    let mut colv: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for c in 0..cols {
        let fresh: Vec<f64> = (0..rows).map(|_| rng.normal()).collect();
        let v = if c > 0 && rng.next_f64() < 0.5 {
            let src = rng.index(c);
            let a = rng.uniform(-3.0, 3.0);
            let noise = rng.uniform(0.0, 1.5);
            colv[src].iter().zip(&fresh).map(|(s, f)| a * s + noise * f).collect()
        } else if rng.next_f64() < 0.05 {
            vec![rng.normal(); rows]
        } else {
            fresh
        };
        colv.push(v);
    }
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        data.extend(colv.iter().map(|c| c[r]));
    }
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Per-class scores by walking samples one at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleScores {
    pub accuracy: f64,
    pub per_class: Vec<[f64; 5]>, // sensitivity, specificity, precision, accuracy, f1
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_specificity: f64,
}

fn div(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn count_scores(labels: &[u8], preds: &[u8], n: usize) -> OracleScores {
    let total = labels.len() as u64;
    let correct = labels.iter().zip(preds).filter(|(a, b)| a == b).count() as u64;
    let mut per_class = Vec::new();
    for c in 0..n as u8 {
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (&t, &p) in labels.iter().zip(preds) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        per_class.push([
            div(tp, tp + fn_),
            div(tn, tn + fp),
            div(tp, tp + fp),
            div(tp + tn, total),
            div(2 * tp, 2 * tp + fp + fn_),
        ]);
    }
    let mean = |k: usize| per_class.iter().map(|s| s[k]).sum::<f64>() / n as f64;
    OracleScores {
        accuracy: div(correct, total),
        macro_recall: mean(0),
        macro_specificity: mean(1),
        macro_precision: mean(2),
        macro_f1: mean(4),
        per_class,
    }
}

/// Random label/prediction pairs with a tunable hit rate.
pub fn random_pairs(rng: &mut SeededRng, max_len: usize) -> (Vec<u8>, Vec<u8>) {
    let len = 1 + rng.index(max_len);
    let hit = rng.next_f64();
    let skew = rng.index(5);
    let labels: Vec<u8> = (0..len)
        .map(|_| if rng.next_f64() < 0.3 { skew as u8 } else { rng.index(5) as u8 })
        .collect();
    let preds = labels
        .iter()
        .map(|&l| if rng.next_f64() < hit { l } else { rng.index(5) as u8 })
        .collect();
    (labels, preds)
}
