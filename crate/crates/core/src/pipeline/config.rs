use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{class_index, CLASS_NAMES};
use crate::augment::AugmentSpec;
use crate::dsp::cache::ConfigHash;
use crate::dsp::FeatureConfig;
use crate::error::{Error, Result};
use crate::nn::TrainConfig;
use crate::FEATURE_CACHE_FORMAT_VERSION;

/// Every pipeline setting as one flat key-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub canonical_duration: f64,
    pub test_fraction: f64,
    /// Share of the training originals held out (before augmentation) for early stopping.
    pub validation_fraction: f64,
    pub augment_classes: Vec<String>,
    pub noise_amp_range: [f64; 2],
    pub stretch_range: [f64; 2],
    pub pitch_range: [f64; 2],
    pub shift_range: [f64; 2],
    #[serde(flatten)]
    pub features: FeatureConfig,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub cv_repeats: usize,
    pub cv_eval_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let aug = AugmentSpec::default();
        let train = TrainConfig::default();
        Self {
            seed: 0,
            canonical_duration: 5.0,
            test_fraction: 0.2,
            validation_fraction: 0.1,
            augment_classes: CLASS_NAMES[1..].iter().map(|s| s.to_string()).collect(),
            noise_amp_range: aug.noise_amp_range,
            stretch_range: aug.stretch_range,
            pitch_range: aug.pitch_range,
            shift_range: aug.shift_range,
            features: FeatureConfig::default(),
            lr: train.lr,
            batch_size: train.batch_size,
            epochs: train.epochs,
            patience: train.patience,
            cv_repeats: 10,
            cv_eval_fraction: 0.3,
        }
    }
}

/// Annotated defaults, written by `roadaudio config`.
pub const CONFIG_TEMPLATE: &str = r#"# roadaudio pipeline configuration. Unlisted keys keep these defaults.

# Master seed for splitting, augmentation draws, weight init and batch order.
seed = 0
# Clip length in seconds after zero-padding / trimming at the end.
canonical_duration = 5.0
# Per-class share of original clips held out for testing (80/20 split).
test_fraction = 0.2
# Per-class share of the remaining training originals held out for early stopping.
# Set to 0 to train for the full epoch count without validation.
validation_fraction = 0.1

# Classes whose training originals get six augmented variants each (seven-fold).
augment_classes = ["crash", "siren", "tire_skid", "car_horn"]
# Background noise mix amplitude.
noise_amp_range = [0.001, 0.015]
# Phase-vocoder time-stretch rate.
stretch_range = [0.8, 1.25]
# Pitch shift in semitones (three independent draws per clip).
pitch_range = [-4.0, 4.0]
# Circular shift as a fraction of the clip length.
shift_range = [-0.5, 0.5]

# Spectrogram channel: mel-compressed STFT magnitude.
spectrogram_rate = 5490
spectrogram_window = 860
spectrogram_filters = 128
# MFCC channel (coefficients are zero-padded up to the filter count).
mfcc_rate = 44100
mfcc_frame = 4096
mfcc_filters = 128
mfcc_coeffs = 120
# Log mel-filterbank energy channel.
logmel_rate = 22100
logmel_window_seconds = 0.71
logmel_filters = 128
# Frames per channel and the output grid every channel is resized to.
frames = 430
out_rows = 430
out_cols = 128
# Analysis window: hann, hamming or rectangular.
window = "hann"

# Adam learning rate, mini-batch size, epoch budget and early-stopping patience.
lr = 0.001
batch_size = 16
epochs = 50
patience = 8

# Repeated stratified subsampling for `eval --cv`.
cv_repeats = 10
cv_eval_fraction = 0.3
"#;

#[derive(Serialize)]
struct HashedKeys<'a> {
    cache_version: u8,
    seed: u64,
    canonical_duration: f64,
    test_fraction: f64,
    validation_fraction: f64,
    augment_classes: &'a [String],
    augment: AugmentSpec,
    features: &'a FeatureConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::invalid(format!("config: {}", e.message())))?;
        let known = toml::Table::try_from(Self::default()).expect("defaults serialise");
        if let Some(k) = table.keys().find(|k| !known.contains_key(*k)) {
            return Err(Error::invalid(format!("config: unknown key '{k}'")));
        }
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::invalid(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64, lo_open: bool| {
            let ok = if lo_open { v > 0.0 && v < 1.0 } else { (0.0..1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("config: {name} = {v} is out of range")))
            }
        };
        frac("test_fraction", self.test_fraction, true)?;
        frac("validation_fraction", self.validation_fraction, false)?;
        frac("cv_eval_fraction", self.cv_eval_fraction, true)?;
        if !(self.canonical_duration > 0.0 && self.canonical_duration.is_finite()) {
            return Err(Error::invalid("config: canonical_duration must be positive"));
        }
        for c in &self.augment_classes {
            if class_index(c).is_none() {
                return Err(Error::invalid(format!("config: unknown class '{c}' in augment_classes")));
            }
        }
        if self.batch_size < 2 || self.epochs == 0 || !(self.lr > 0.0) || self.cv_repeats == 0 {
            return Err(Error::invalid("config: need batch_size >= 2, epochs >= 1, lr > 0, cv_repeats >= 1"));
        }
        if self.features.frames < 2 || self.features.out_rows == 0 || self.features.out_cols == 0 {
            return Err(Error::invalid("config: need frames >= 2 and a non-empty output grid"));
        }
        self.augment_spec().validate()
    }

    pub fn augment_spec(&self) -> AugmentSpec {
        AugmentSpec {
            noise_amp_range: self.noise_amp_range,
            stretch_range: self.stretch_range,
            pitch_range: self.pitch_range,
            shift_range: self.shift_range,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            patience: self.patience,
            seed: self.seed,
        }
    }

    pub fn augments(&self, label: usize) -> bool {
        self.augment_classes.iter().any(|c| class_index(c) == Some(label))
    }

    /// Digest of every key that influences cached features: the feature parameters,
    /// clip duration, split fractions, augmentation settings and seed. Training keys
    /// are excluded.
    pub fn feature_hash(&self) -> ConfigHash {
        let keys = HashedKeys {
            cache_version: FEATURE_CACHE_FORMAT_VERSION,
            seed: self.seed,
            canonical_duration: self.canonical_duration,
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            augment_classes: &self.augment_classes,
            augment: self.augment_spec(),
            features: &self.features,
        };
        Sha256::digest(serde_json::to_vec(&keys).expect("keys serialise")).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_parses_to_defaults() {
        assert_eq!(PipelineConfig::from_toml_str(CONFIG_TEMPLATE).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn serialised_defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg = PipelineConfig::from_toml_str("frames = 54\nout_rows = 54\nout_cols = 32\nseed = 3\n").unwrap();
        assert_eq!(cfg.features.frames, 54);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.features.mfcc_rate, 44100);
        assert_eq!(cfg.test_fraction, 0.2);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::from_toml_str("frmaes = 3\n").unwrap_err().to_string();
        assert!(err.contains("frmaes"), "{err}");
    }

    #[test]
    fn feature_keys_change_the_hash_and_training_keys_do_not() {
        let base = PipelineConfig::default();
        let h = base.feature_hash();
        let mut c = base.clone();
        c.epochs = 3;
        c.lr = 0.1;
        assert_eq!(c.feature_hash(), h);
        for edit in [
            |c: &mut PipelineConfig| c.features.mfcc_coeffs = 100,
            |c: &mut PipelineConfig| c.canonical_duration = 4.0,
            |c: &mut PipelineConfig| c.seed = 1,
            |c: &mut PipelineConfig| c.pitch_range = [-2.0, 2.0],
            |c: &mut PipelineConfig| c.test_fraction = 0.25,
        ] {
            let mut c = base.clone();
            edit(&mut c);
            assert_ne!(c.feature_hash(), h);
        }
    }
}
