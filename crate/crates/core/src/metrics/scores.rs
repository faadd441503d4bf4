use super::confusion::ConfusionMatrix;
use crate::error::{Error, Result};

/// Which scores hit a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroFlags {
    pub sensitivity: bool,
    pub specificity: bool,
    pub precision: bool,
    pub f1: bool,
}

impl ZeroFlags {
    pub fn any(&self) -> bool {
        self.sensitivity || self.specificity || self.precision || self.f1
    }

    pub fn to_text(&self) -> String {
        let names: Vec<&str> = [
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("precision", self.precision),
            ("f1", self.f1),
        ]
        .iter()
        .filter(|(_, f)| *f)
        .map(|(n, _)| *n)
        .collect();
        if names.is_empty() {
            "none".into()
        } else {
            names.join(",")
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut f = ZeroFlags::default();
        if s == "none" {
            return Ok(f);
        }
        for name in s.split(',') {
            match name {
                "sensitivity" => f.sensitivity = true,
                "specificity" => f.specificity = true,
                "precision" => f.precision = true,
                "f1" => f.f1 = true,
                other => return Err(Error::Input(format!("unknown zero flag `{other}`"))),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub zero: ZeroFlags,
}

/// Micro (pooled) or macro (unweighted mean) aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub confusion: ConfusionMatrix,
    pub classes: Vec<ClassScores>,
    pub micro: Aggregate,
    pub macro_avg: Aggregate,
    pub accuracy: f64,
    pub loss: Option<f64>,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// One-vs-rest scores for a single class from its four counts.
pub fn class_scores(tp: u64, fp: u64, fn_: u64, tn: u64) -> ClassScores {
    let (sensitivity, zs) = ratio(tp, tp + fn_);
    let (specificity, zsp) = ratio(tn, tn + fp);
    let (precision, zp) = ratio(tp, tp + fp);
    // 2PR/(P+R) rewritten over counts
    let (f1, zf) = ratio(2 * tp, 2 * tp + fp + fn_);
    let (accuracy, _) = ratio(tp + tn, tp + tn + fp + fn_);
    ClassScores {
        tp,
        fp,
        fn_,
        tn,
        sensitivity,
        specificity,
        precision,
        accuracy,
        f1,
        zero: ZeroFlags {
            sensitivity: zs,
            specificity: zsp,
            precision: zp,
            f1: zf,
        },
    }
}

pub fn derive_scores(cm: &ConfusionMatrix) -> Result<ScoreReport> {
    if cm.total() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let n = cm.n_classes();
    let classes: Vec<ClassScores> = (0..n)
        .map(|c| {
            let (tp, fp, fn_, tn) = cm.one_vs_rest(c);
            class_scores(tp, fp, fn_, tn)
        })
        .collect();
    let sum = |f: fn(&ClassScores) -> u64| classes.iter().map(f).sum::<u64>();
    let pooled = class_scores(sum(|c| c.tp), sum(|c| c.fp), sum(|c| c.fn_), sum(|c| c.tn));
    let mean = |f: fn(&ClassScores) -> f64| classes.iter().map(f).sum::<f64>() / n as f64;
    Ok(ScoreReport {
        confusion: cm.clone(),
        micro: Aggregate {
            precision: pooled.precision,
            recall: pooled.sensitivity,
            f1: pooled.f1,
            specificity: pooled.specificity,
        },
        macro_avg: Aggregate {
            precision: mean(|c| c.precision),
            recall: mean(|c| c.sensitivity),
            f1: mean(|c| c.f1),
            specificity: mean(|c| c.specificity),
        },
        accuracy: cm.trace() as f64 / cm.total() as f64,
        loss: None,
        classes,
    })
}

impl ScoreReport {
    pub fn with_loss(mut self, loss: f64) -> Self {
        self.loss = Some(loss);
        self
    }

    /// Headline scalars in a fixed order, used for repeat aggregation.
    pub fn headline(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("accuracy", self.accuracy),
            ("micro.precision", self.micro.precision),
            ("micro.recall", self.micro.recall),
            ("micro.f1", self.micro.f1),
            ("micro.specificity", self.micro.specificity),
            ("macro.precision", self.macro_avg.precision),
            ("macro.recall", self.macro_avg.recall),
            ("macro.f1", self.macro_avg.f1),
            ("macro.specificity", self.macro_avg.specificity),
        ];
        if let Some(l) = self.loss {
            v.push(("loss", l));
        }
        v
    }
}

/// Mean and sample standard deviation (n - 1; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
