//! The split → augment → features → train → eval chain driven through the library,
//! writing the same artifacts as the command-line stages.

use std::path::Path;

use roadaudio::eval::{write_report, MetricsReport};
use roadaudio::nn::TrainHistory;
use roadaudio::pipeline::*;

pub struct PipelineRun {
    pub report: MetricsReport,
    pub history: TrainHistory,
    /// Bytes of the written `<stem>.json` and `<stem>.txt` reports.
    pub report_json: Vec<u8>,
    pub report_txt: Vec<u8>,
    pub checkpoint: Vec<u8>,
    pub plan: SplitPlan,
}

/// Feature and training settings small enough for a single core.
pub fn reduced_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig { seed, ..PipelineConfig::default() };
    cfg.features.frames = 54;
    cfg.features.out_rows = 54;
    cfg.features.out_cols = 32;
    cfg.epochs = 15;
    cfg
}

pub fn run_pipeline(manifest: &Path, work: &Path, cfg: &PipelineConfig) -> roadaudio::Result<PipelineRun> {
    let entries = load_manifest(manifest)?;
    let plan = split_then_augment(&entries, cfg, &work.join("wav"))?;
    materialize_variants(&plan, cfg)?;
    let cache = work.join("cache");
    for set in [&plan.train, &plan.validation, &plan.test] {
        build_feature_cache(set, &cache, cfg, false)?;
    }
    let load = |set: &[ManifestEntry]| load_cached_features(set, &cache, cfg);
    let out = train_model(&plan.train, &load(&plan.train)?, &plan.validation, &load(&plan.validation)?, cfg)?;
    let report = evaluate_checkpoint(&out.checkpoint, &plan.test, &load(&plan.test)?)?;
    let stem = work.join("report");
    write_report(&stem, &report)?;
    let read = |ext: &str| std::fs::read(stem.with_extension(ext)).expect("report just written");
    Ok(PipelineRun {
        report_json: read("json"),
        report_txt: read("txt"),
        checkpoint: out.checkpoint.encode()?,
        report,
        history: out.history,
        plan,
    })
}
