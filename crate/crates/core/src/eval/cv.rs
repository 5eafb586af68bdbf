use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng};

/// Index sets into the labelled items that were split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

/// Per class, `round(n · eval_fraction)` items (at least one, and leaving at least one
/// for training) are drawn for evaluation. Both index lists are sorted.
pub fn stratified_split(labels: &[usize], eval_fraction: f64, seed: u64) -> Result<Split> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::invalid(format!("eval fraction {eval_fraction} outside (0, 1)")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = rng(seed);
    let mut split = Split {
        seed,
        train: Vec::new(),
        eval: Vec::new(),
    };
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::invalid(format!(
                "class {class} has {} item(s); a split needs at least 2 (seed {seed})",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let k = ((members.len() as f64 * eval_fraction).round() as usize).clamp(1, members.len() - 1);
        split.eval.extend_from_slice(&members[..k]);
        split.train.extend_from_slice(&members[k..]);
    }
    split.train.sort_unstable();
    split.eval.sort_unstable();
    Ok(split)
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("quartiles need at least one finite value"));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Ok(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub splits: Vec<Split>,
    pub reports: Vec<MetricsReport>,
    pub accuracy: Quartiles,
    pub macro_precision: Quartiles,
    pub macro_recall: Quartiles,
    pub macro_f1: Quartiles,
    pub overall_false_positive_rate: Quartiles,
}

/// Runs `n_repeats` independent stratified splits with seeds derived from `seed` and
/// hands each to `run`, which trains on `split.train` and evaluates on `split.eval`.
pub fn repeated_split_cv<F>(
    labels: &[usize],
    n_repeats: usize,
    eval_fraction: f64,
    seed: u64,
    mut run: F,
) -> Result<CvSummary>
where
    F: FnMut(usize, &Split) -> Result<MetricsReport>,
{
    if n_repeats == 0 {
        return Err(Error::invalid("at least one repeat is required"));
    }
    let mut splits = Vec::with_capacity(n_repeats);
    let mut reports = Vec::with_capacity(n_repeats);
    for r in 0..n_repeats {
        let split = stratified_split(labels, eval_fraction, derive_seed(seed, &format!("cv/{r}")))?;
        reports.push(run(r, &split)?);
        splits.push(split);
    }
    let col = |f: fn(&MetricsReport) -> f64| Quartiles::of(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(CvSummary {
        accuracy: col(|r| r.accuracy)?,
        macro_precision: col(|r| r.macro_precision)?,
        macro_recall: col(|r| r.macro_recall)?,
        macro_f1: col(|r| r.macro_f1)?,
        overall_false_positive_rate: col(|r| r.overall_false_positive_rate)?,
        splits,
        reports,
    })
}
