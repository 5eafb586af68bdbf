use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::features::volume_for;
use super::manifest::{ManifestEntry, Origin};
use super::split::{audit_leakage, audit_pairs, load_noise_pool, plan_training, render_entry};
use super::{load_clip, CLASS_NAMES};
use crate::dsp::{ChannelStats, FeatureVolume};
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics, repeated_split_cv, CvSummary, MetricsReport};
use crate::nn::{evaluate, predict, train, Checkpoint, Model, ModelSpec, Samples, TrainHistory};
use crate::rng::rng_for;

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
}

/// Checkpoint metadata written by [`train_model`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainMetadata {
    config: PipelineConfig,
    feature_hash: String,
    /// `(clip_id, original root id)` for every training clip.
    train_clips: Vec<(String, String)>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn labels_of(entries: &[ManifestEntry]) -> Vec<usize> {
    entries.iter().map(|e| e.label).collect()
}

/// Fits standardisation statistics on the (augmented) training volumes, trains the
/// default model and packages it as a checkpoint.
pub fn train_model(
    train_entries: &[ManifestEntry],
    train_volumes: &[FeatureVolume],
    validation_entries: &[ManifestEntry],
    validation_volumes: &[FeatureVolume],
    cfg: &PipelineConfig,
) -> Result<TrainOutput> {
    audit_leakage(train_entries, validation_entries)?;
    let stats = ChannelStats::fit(train_volumes)?;
    let data = Samples::from_volumes(train_volumes, &labels_of(train_entries), &stats)?;
    let validation = if validation_entries.is_empty() {
        None
    } else {
        Some(Samples::from_volumes(validation_volumes, &labels_of(validation_entries), &stats)?)
    };
    let mut model = Model::new(ModelSpec::default(), cfg.features.shape(), &mut rng_for(cfg.seed, "model/init"))?;
    let history = train(&mut model, &data, validation.as_ref(), &cfg.train_config())?;
    let metadata = TrainMetadata {
        config: cfg.clone(),
        feature_hash: hex(&cfg.feature_hash()),
        train_clips: train_entries
            .iter()
            .map(|e| (e.clip_id.clone(), e.root_id().to_string()))
            .collect(),
    };
    Ok(TrainOutput {
        checkpoint: Checkpoint {
            model,
            class_names: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
            stats,
            metadata: serde_json::to_value(metadata).expect("metadata serialises"),
        },
        history,
    })
}

fn metadata(ck: &Checkpoint) -> Result<TrainMetadata> {
    serde_json::from_value(ck.metadata.clone())
        .map_err(|e| Error::Corrupt(format!("checkpoint metadata: {e}")))
}

/// The pipeline configuration the checkpoint was trained under.
pub fn config_from_checkpoint(ck: &Checkpoint) -> Result<PipelineConfig> {
    Ok(metadata(ck)?.config)
}

/// Confusion-matrix metrics of the checkpoint on held-out clips, after auditing that
/// none of them (or their variants) were trained on.
pub fn evaluate_checkpoint(ck: &Checkpoint, test_entries: &[ManifestEntry], test_volumes: &[FeatureVolume]) -> Result<MetricsReport> {
    let meta = metadata(ck)?;
    audit_pairs(meta.train_clips.iter().map(|(id, root)| (id.as_str(), root.as_str())), test_entries)?;
    let samples = Samples::from_volumes(test_volumes, &labels_of(test_entries), &ck.stats)?;
    let ev = evaluate(&ck.model, &samples, 32)?;
    metrics(&confusion(samples.labels(), &ev.predictions, &ck.class_names)?)
}

/// Class probabilities for one WAV file under the checkpoint's feature settings.
pub fn predict_clip(ck: &Checkpoint, wav: &Path) -> Result<Vec<f64>> {
    let cfg = config_from_checkpoint(ck)?;
    let volume = volume_for(&load_clip(wav, cfg.canonical_duration)?, &cfg)?;
    predict(&ck.model, &volume, &ck.stats)
}

/// Repeated stratified subsampling over the originals: every repeat augments its own
/// training part, trains from scratch and is scored on its held-out part. Features
/// are computed in memory.
pub fn run_cv(originals: &[ManifestEntry], cfg: &PipelineConfig, mut progress: impl FnMut(usize, &MetricsReport)) -> Result<CvSummary> {
    let mut sorted = originals.to_vec();
    sorted.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let labels = labels_of(&sorted);
    let mut original_volumes: HashMap<String, FeatureVolume> = HashMap::new();
    let mut volume_of_original = |e: &ManifestEntry| -> Result<FeatureVolume> {
        if let Some(v) = original_volumes.get(&e.clip_id) {
            return Ok(v.clone());
        }
        let v = volume_for(&load_clip(&e.path, cfg.canonical_duration)?, cfg)?;
        original_volumes.insert(e.clip_id.clone(), v.clone());
        Ok(v)
    };

    repeated_split_cv(&labels, cfg.cv_repeats, cfg.cv_eval_fraction, cfg.seed, |r, split| {
        let pick = |idx: &[usize]| idx.iter().map(|&i| sorted[i].clone()).collect::<Vec<_>>();
        let held_out = pick(&split.eval);
        let mut repeat_cfg = cfg.clone();
        repeat_cfg.seed = split.seed;
        let (train_entries, validation, pool) = plan_training(&pick(&split.train), &repeat_cfg, Path::new(""))?;
        audit_leakage(&train_entries, &held_out)?;

        let noise = load_noise_pool(&pool, &train_entries, cfg.canonical_duration)?;
        let parents: HashMap<&str, &ManifestEntry> = train_entries
            .iter()
            .filter(|e| e.origin == Origin::Original)
            .map(|e| (e.clip_id.as_str(), e))
            .collect();
        let mut vol = |e: &ManifestEntry| match e.origin {
            Origin::Original => volume_of_original(e),
            Origin::Augmented { .. } => volume_for(&render_entry(e, &parents, &noise, cfg.canonical_duration)?, cfg),
        };
        let train_volumes = train_entries.iter().map(&mut vol).collect::<Result<Vec<_>>>()?;
        let validation_volumes = validation.iter().map(&mut vol).collect::<Result<Vec<_>>>()?;
        let eval_volumes = held_out.iter().map(&mut vol).collect::<Result<Vec<_>>>()?;

        let out = train_model(&train_entries, &train_volumes, &validation, &validation_volumes, &repeat_cfg)?;
        let report = evaluate_checkpoint(&out.checkpoint, &held_out, &eval_volumes)?;
        progress(r, &report);
        Ok(report)
    })
}
