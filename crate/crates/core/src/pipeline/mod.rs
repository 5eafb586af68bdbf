//! Manifests, configuration, split-before-augment planning, feature caching, the
//! training/evaluation drivers and the synthetic corpus.

pub mod config;
pub mod features;
pub mod manifest;
pub mod run;
pub mod split;
pub mod synth;

use std::path::Path;

use crate::audio_io::{pad_or_trim, peak_normalize, read_wav, Waveform};
use crate::error::Result;

pub use config::{PipelineConfig, CONFIG_TEMPLATE};
pub use features::{build_feature_cache, cache_path, load_cached_features, CacheFill};
pub use manifest::{check_provenance, load_manifest, parse_manifest, write_manifest, ManifestEntry, Origin};
pub use run::{
    config_from_checkpoint, evaluate_checkpoint, predict_clip, run_cv, train_model, TrainOutput,
};
pub use split::{audit_leakage, audit_pairs, materialize_variants, plan_training, split_then_augment, SplitPlan};
pub use synth::{generate_synthetic_corpus, SyntheticCorpusSpec, SynthReport};

/// Class names in label-index order.
pub const CLASS_NAMES: [&str; 5] = ["urban", "crash", "siren", "tire_skid", "car_horn"];

pub fn class_index(name: &str) -> Option<usize> {
    CLASS_NAMES.iter().position(|c| *c == name)
}

/// Reads a clip and brings it to canonical form: peak-normalised, then zero-padded or
/// trimmed at the end to `duration` seconds.
pub fn load_clip(path: &Path, duration: f64) -> Result<Waveform> {
    pad_or_trim(&peak_normalize(&read_wav(path)?), duration)
}

/// A clip id made safe for use as a file name.
pub(crate) fn file_stem(clip_id: &str) -> String {
    clip_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_order_is_fixed() {
        assert_eq!(class_index("urban"), Some(0));
        assert_eq!(class_index("car_horn"), Some(4));
        assert_eq!(class_index("Crash"), None);
    }

    #[test]
    fn file_stems_are_sanitised() {
        assert_eq!(file_stem("a/b c..d"), "a_b_c..d");
    }
}
