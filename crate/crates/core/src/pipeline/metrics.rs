use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Micro-averaged set metrics. A zero denominator yields 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricsReport {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

/// TP, FP and FN summed over all drugs, then precision, recall and F1.
pub fn evaluate<T: Ord>(
    predictions: &[BTreeSet<T>],
    truths: &[BTreeSet<T>],
) -> Result<MetricsReport, PipelineError> {
    if predictions.len() != truths.len() {
        return Err(PipelineError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, t) in predictions.iter().zip(truths) {
        let hit = p.intersection(t).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += t.len() - hit;
    }
    Ok(MetricsReport::from_counts(tp, fp, fn_))
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub per_seed: Vec<(u64, MetricsReport)>,
    pub precision: (f64, f64),
    pub recall: (f64, f64),
    pub f1: (f64, f64),
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl SeedSummary {
    pub fn new(per_seed: Vec<(u64, MetricsReport)>) -> Self {
        if per_seed.len() == 1 {
            log::warn!("single seed: standard deviation reported as 0");
        }
        let col = |f: fn(&MetricsReport) -> f64| -> Vec<f64> {
            per_seed.iter().map(|(_, m)| f(m)).collect()
        };
        SeedSummary {
            precision: mean_std(&col(|m| m.precision)),
            recall: mean_std(&col(|m| m.recall)),
            f1: mean_std(&col(|m| m.f1)),
            per_seed,
        }
    }

    /// `P 0.9575±0.0079  R ...  F1 ...`
    pub fn format(&self) -> String {
        format!(
            "P {}  R {}  F1 {}",
            format_pm(self.precision),
            format_pm(self.recall),
            format_pm(self.f1)
        )
    }
}

pub fn format_pm((m, s): (f64, f64)) -> String {
    format!("{m:.4}±{s:.4}")
}
