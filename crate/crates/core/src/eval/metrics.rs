use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub false_positive_rate: f64,
    /// One-vs-rest `(TP + TN) / total`.
    pub accuracy: f64,
    /// Test samples whose true class is this one.
    pub support: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    /// Metrics whose denominator was zero and were reported as 0.
    pub degenerate: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    /// `trace / total`.
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Macro average of the per-class false positive rates.
    pub overall_false_positive_rate: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 || cm.n_classes() == 0 {
        return Err(Error::invalid("confusion matrix has no samples"));
    }
    let mut classes = Vec::with_capacity(cm.n_classes());
    for (k, name) in cm.class_names.iter().enumerate() {
        let (tp, fp, fn_, tn) = cm.one_vs_rest(k);
        let mut degenerate = Vec::new();
        let precision = ratio(tp, tp + fp, "precision", &mut degenerate);
        let recall = ratio(tp, tp + fn_, "recall", &mut degenerate);
        let false_positive_rate = ratio(fp, fp + tn, "false_positive_rate", &mut degenerate);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            degenerate.push("f1".into());
            0.0
        };
        classes.push(ClassMetrics {
            name: name.clone(),
            precision,
            recall,
            f1,
            false_positive_rate,
            accuracy: (tp + tn) as f64 / total as f64,
            support: tp + fn_,
            tp,
            fp,
            fn_,
            tn,
            degenerate,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / classes.len() as f64;
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        overall_false_positive_rate: mean(|c| c.false_positive_rate),
        total,
        classes,
        confusion: cm.clone(),
    })
}
