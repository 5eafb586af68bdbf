use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::activation::{softmax, softmax_cross_entropy};
use super::adam::{Adam, AdamConfig};
use super::batchnorm::Mode;
use super::model::Model;
use super::Tensor;
use crate::dsp::{ChannelStats, FeatureVolume};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without validation-loss improvement before stopping. Only used when a
    /// validation set is given.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 16,
            epochs: 50,
            patience: 8,
            seed: 0,
        }
    }
}

/// Labelled examples stored flat as `[N, h, w, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    shape: [usize; 3],
    data: Vec<f64>,
    labels: Vec<usize>,
}

impl Samples {
    pub fn new(shape: [usize; 3], data: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        let per = shape.iter().product::<usize>();
        if per == 0 || data.len() != per * labels.len() {
            return Err(Error::invalid(format!(
                "{} values for {} samples of shape {shape:?}",
                data.len(),
                labels.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training input".into()));
        }
        Ok(Self { shape, data, labels })
    }

    /// Standardises each volume with `stats` and stacks them.
    pub fn from_volumes(volumes: &[FeatureVolume], labels: &[usize], stats: &ChannelStats) -> Result<Self> {
        if volumes.len() != labels.len() {
            return Err(Error::invalid("one label per volume is required"));
        }
        let shape = volumes.first().map(FeatureVolume::shape).unwrap_or([1, 1, 1]);
        let mut data = Vec::with_capacity(volumes.len() * shape.iter().product::<usize>());
        for v in volumes {
            if v.shape() != shape {
                return Err(Error::invalid(format!("volume shape {:?} differs from {shape:?}", v.shape())));
            }
            data.extend(stats.apply(v).data().iter().map(|&x| x as f64));
        }
        Self::new(shape, data, labels.to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn batch(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let per = self.shape.iter().product::<usize>();
        let mut data = Vec::with_capacity(indices.len() * per);
        for &i in indices {
            data.extend_from_slice(&self.data[i * per..(i + 1) * per]);
        }
        let [h, w, c] = self.shape;
        let t = Tensor::from_vec(&[indices.len(), h, w, c], data).expect("sizes agree");
        (t, indices.iter().map(|&i| self.labels[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights the model holds on return (the best validation epoch when
    /// validation data was supplied, otherwise the last one).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

/// Splits a shuffled order into batches; a trailing batch of one is merged into the
/// previous batch because batch norm cannot train on a single sample.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().map(|b| b.len()) == Some(1) {
        let n = out.len();
        out[n - 2] = &order[(n - 2) * size..];
        out.pop();
    }
    out
}

/// Mini-batch training with Adam over reshuffled epochs.
///
/// If the loss or a gradient goes non-finite the model is restored to the state at the
/// end of the last completed epoch and the error is returned.
pub fn train(
    model: &mut Model,
    data: &Samples,
    validation: Option<&Samples>,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if data.len() < 2 {
        return Err(Error::invalid("batch norm needs at least two training samples"));
    }
    if cfg.batch_size < 2 || cfg.epochs == 0 || !(cfg.lr > 0.0) {
        return Err(Error::invalid("batch_size must be >= 2, epochs >= 1 and lr > 0"));
    }
    if data.shape() != model.input_shape() {
        return Err(Error::invalid(format!(
            "samples of shape {:?} for a model expecting {:?}",
            data.shape(),
            model.input_shape()
        )));
    }
    let n_classes = model.n_classes();
    if let Some(&bad) = data.labels().iter().find(|&&y| y >= n_classes) {
        return Err(Error::invalid(format!("label {bad} outside [0, {n_classes})")));
    }
    let validation = validation.filter(|v| !v.is_empty());

    let mut rng = rng_for(cfg.seed, "train/shuffle");
    let mut adam = Adam::new(AdamConfig { lr: cfg.lr, ..Default::default() });
    let mut history = TrainHistory::default();
    let mut last_good = model.clone();
    let mut best: Option<(f64, Model)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in batches(&order, cfg.batch_size) {
            let (x, y) = data.batch(batch);
            let step = (|| {
                model.zero_grads();
                let logits = model.forward(&x, Mode::Train)?;
                let (loss, probs, grad) = softmax_cross_entropy(&logits, &y)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("training loss in epoch {epoch}")));
                }
                model.backward(&grad)?;
                adam.step_model(model)?;
                Ok((loss, probs))
            })();
            let (loss, probs) = match step {
                Ok(v) => v,
                Err(e) => {
                    *model = last_good;
                    return Err(e);
                }
            };
            loss_sum += loss * batch.len() as f64;
            correct += argmax_rows(&probs).iter().zip(&y).filter(|(p, t)| p == t).count();
        }
        model.clear_caches();

        let mut record = EpochRecord {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            val_loss: None,
            val_accuracy: None,
        };
        last_good = model.clone();
        history.best_epoch = epoch;

        if let Some(val) = validation {
            let ev = evaluate(model, val, cfg.batch_size)?;
            record.val_loss = Some(ev.loss);
            record.val_accuracy = Some(ev.accuracy);
            match &best {
                Some((b, _)) if ev.loss >= *b => since_best += 1,
                _ => {
                    best = Some((ev.loss, model.clone()));
                    since_best = 0;
                }
            }
        }
        history.epochs.push(record);
        if validation.is_some() && since_best >= cfg.patience {
            history.stopped_early = epoch < cfg.epochs;
            break;
        }
    }

    if let Some((best_loss, best_model)) = best {
        *model = best_model;
        history.best_epoch = history
            .epochs
            .iter()
            .find(|e| e.val_loss == Some(best_loss))
            .map(|e| e.epoch)
            .unwrap_or(history.best_epoch);
    }
    Ok(history)
}

fn argmax_rows(probs: &Tensor) -> Vec<usize> {
    let k = probs.shape()[1];
    probs
        .data()
        .chunks_exact(k)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
                .0
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    /// Row-major `[N, classes]` probabilities.
    pub probabilities: Vec<Vec<f64>>,
}

/// Inference-mode loss, accuracy and per-sample predictions.
pub fn evaluate(model: &Model, data: &Samples, batch_size: usize) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let order: Vec<usize> = (0..data.len()).collect();
    let mut loss_sum = 0.0;
    let mut predictions = Vec::with_capacity(data.len());
    let mut probabilities = Vec::with_capacity(data.len());
    for batch in order.chunks(batch_size.max(1)) {
        let (x, y) = data.batch(batch);
        let logits = model.infer(&x)?;
        let (loss, probs, _) = softmax_cross_entropy(&logits, &y)?;
        loss_sum += loss * batch.len() as f64;
        predictions.extend(argmax_rows(&probs));
        let k = probs.shape()[1];
        probabilities.extend(probs.data().chunks_exact(k).map(<[f64]>::to_vec));
    }
    let correct = predictions.iter().zip(data.labels()).filter(|(p, t)| p == t).count();
    Ok(Evaluation {
        loss: loss_sum / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
        predictions,
        probabilities,
    })
}

/// Class probabilities for one standardised volume.
pub fn predict(model: &Model, volume: &FeatureVolume, stats: &ChannelStats) -> Result<Vec<f64>> {
    let [h, w, c] = volume.shape();
    let data = stats.apply(volume).data().iter().map(|&v| v as f64).collect();
    let x = Tensor::from_vec(&[1, h, w, c], data)?;
    Ok(softmax(&model.infer(&x)?)?.into_data())
}
