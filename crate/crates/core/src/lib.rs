//! Roadway incident audio classification.
//!
//! The crate is organised along the processing chain:
//!
//! - [`audio_io`]: WAV decoding/encoding, resampling and clip-length standardisation
//! - [`dsp`]: STFT spectrogram, MFCC and log mel-filterbank energies stacked into a
//!   three-channel [`dsp::FeatureVolume`]
//! - [`augment`]: background-noise mixing, phase-vocoder time stretch, pitch shift and
//!   circular time shift
//! - [`nn`]: a small NHWC tensor/CNN stack with hand-written backward passes and Adam
//! - [`eval`]: confusion matrices, per-class metrics and repeated stratified splits
//! - [`pipeline`]: manifests, configuration, split-before-augment and the synthetic corpus

pub mod audio_io;
pub mod augment;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod nn;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};

/// Version of the on-disk checkpoint layout.
pub const CHECKPOINT_FORMAT_VERSION: u8 = 1;
/// Version of the on-disk feature-cache record layout.
pub const FEATURE_CACHE_FORMAT_VERSION: u8 = 1;
