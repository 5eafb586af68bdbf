//! Feature extraction: windows, STFT, mel filterbanks, DCT-II, MFCC and the stacked
//! three-channel feature volume.

pub mod cache;
mod dct;
mod features;
mod grid;
mod mel;
mod mfcc;
mod stft;
mod window;

pub use dct::Dct2;
pub use features::{
    extract_feature_volume, hop_for_frames, logmel_channel, mfcc_channel, spectrogram_channel,
    ChannelStats, FeatureConfig, FeatureVolume, N_CHANNELS,
};
pub use grid::Grid;
pub use mel::{
    build_mel_filterbank, hz_to_mel, log_mel_energies, mel_magnitudes, mel_to_hz, MelFilterbank,
    Triangle, LOG_FLOOR,
};
pub use mfcc::{cepstrum, mfcc, MfccConfig};
pub use stft::{frame_count, next_pow2, stft, Spectrogram};
pub use window::{make_window, Window, WindowKind};
