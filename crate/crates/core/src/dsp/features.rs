use serde::{Deserialize, Serialize};

use super::{
    build_mel_filterbank, cepstrum, log_mel_energies, make_window, mel_magnitudes, next_pow2,
    stft, Grid, WindowKind,
};
use crate::audio_io::{resample, Waveform};
use crate::error::{Error, Result};

pub const N_CHANNELS: usize = 3;

/// Parameters of the three feature channels. Defaults give `(430, 128, 3)` volumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub spectrogram_rate: u32,
    pub spectrogram_window: usize,
    pub spectrogram_filters: usize,
    pub mfcc_rate: u32,
    pub mfcc_frame: usize,
    pub mfcc_filters: usize,
    pub mfcc_coeffs: usize,
    pub logmel_rate: u32,
    pub logmel_window_seconds: f64,
    pub logmel_filters: usize,
    /// Frames computed per channel before resizing.
    pub frames: usize,
    pub out_rows: usize,
    pub out_cols: usize,
    pub window: WindowKind,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            spectrogram_rate: 5490,
            spectrogram_window: 860,
            spectrogram_filters: 128,
            mfcc_rate: 44100,
            mfcc_frame: 4096,
            mfcc_filters: 128,
            mfcc_coeffs: 120,
            logmel_rate: 22100,
            logmel_window_seconds: 0.71,
            logmel_filters: 128,
            frames: 430,
            out_rows: 430,
            out_cols: 128,
            window: WindowKind::Hann,
        }
    }
}

impl FeatureConfig {
    pub fn shape(&self) -> [usize; 3] {
        [self.out_rows, self.out_cols, N_CHANNELS]
    }
}

/// Three stacked `rows × cols` channels, stored row-major with the channel innermost:
/// `[spectrogram (mel-compressed magnitude), mfcc, log-mel energy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureVolume {
    pub fn from_channels(channels: [&Grid; N_CHANNELS]) -> Result<Self> {
        let (rows, cols) = (channels[0].rows(), channels[0].cols());
        if channels.iter().any(|g| g.rows() != rows || g.cols() != cols) {
            return Err(Error::invalid("feature channels differ in shape"));
        }
        let mut data = Vec::with_capacity(rows * cols * N_CHANNELS);
        for i in 0..rows * cols {
            for ch in &channels {
                data.push(ch.data()[i] as f32);
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols * N_CHANNELS {
            return Err(Error::invalid(format!(
                "feature volume ({rows}, {cols}, 3) needs {} values, got {}",
                rows * cols * N_CHANNELS,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature volume contains a non-finite value".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.rows, self.cols, N_CHANNELS]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.cols + col) * N_CHANNELS + channel]
    }

    pub fn channel(&self, channel: usize) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().skip(channel).step_by(N_CHANNELS).copied()
    }
}

/// Hop that yields at least `frames` complete windows over `len` samples.
pub fn hop_for_frames(len: usize, window: usize, frames: usize) -> Result<usize> {
    if frames == 0 {
        return Err(Error::invalid("frame count must be positive"));
    }
    if len < window {
        return Err(Error::invalid(format!(
            "clip of {len} samples is shorter than the {window}-sample window"
        )));
    }
    if frames == 1 {
        return Ok(window.max(1));
    }
    let hop = (len - window) / (frames - 1);
    if hop == 0 {
        return Err(Error::invalid(format!(
            "{frames} frames of {window} samples do not fit in {len} samples"
        )));
    }
    Ok(hop)
}

fn framed_spectrogram(
    clip: &Waveform,
    rate: u32,
    window_len: usize,
    frames: usize,
    kind: WindowKind,
) -> Result<super::Spectrogram> {
    let w = resample(clip, rate)?;
    let hop = hop_for_frames(w.len(), window_len, frames)?;
    let window = make_window(kind, window_len)?;
    let mut spec = stft(&w, &window, hop, next_pow2(window_len))?;
    // The floored hop can fit a few extra frames; keep exactly `frames`.
    spec.frames.truncate_rows(frames);
    Ok(spec)
}

pub fn spectrogram_channel(clip: &Waveform, cfg: &FeatureConfig) -> Result<Grid> {
    let rate = cfg.spectrogram_rate;
    let spec = framed_spectrogram(clip, rate, cfg.spectrogram_window, cfg.frames, cfg.window)?;
    let fb = build_mel_filterbank(cfg.spectrogram_filters, spec.fft_size, rate, 0.0, rate as f64 / 2.0)?;
    mel_magnitudes(&spec, &fb)
}

/// MFCC grid zero-padded on the coefficient axis up to `mfcc_filters` columns.
pub fn mfcc_channel(clip: &Waveform, cfg: &FeatureConfig) -> Result<Grid> {
    if cfg.mfcc_coeffs > cfg.mfcc_filters {
        return Err(Error::invalid(format!(
            "{} MFCC coefficients requested from {} mel filters",
            cfg.mfcc_coeffs, cfg.mfcc_filters
        )));
    }
    let rate = cfg.mfcc_rate;
    let spec = framed_spectrogram(clip, rate, cfg.mfcc_frame, cfg.frames, cfg.window)?;
    let fb = build_mel_filterbank(cfg.mfcc_filters, spec.fft_size, rate, 0.0, rate as f64 / 2.0)?;
    let log_mel = log_mel_energies(&spec, &fb)?;
    Ok(cepstrum(&log_mel, cfg.mfcc_coeffs).pad_cols(cfg.mfcc_filters))
}

pub fn logmel_channel(clip: &Waveform, cfg: &FeatureConfig) -> Result<Grid> {
    let rate = cfg.logmel_rate;
    let window_len = (cfg.logmel_window_seconds * rate as f64).round() as usize;
    let spec = framed_spectrogram(clip, rate, window_len, cfg.frames, cfg.window)?;
    let fb = build_mel_filterbank(cfg.logmel_filters, spec.fft_size, rate, 0.0, rate as f64 / 2.0)?;
    log_mel_energies(&spec, &fb)
}

/// Computes the three channels at their own sample rates and resizes each to
/// `(out_rows, out_cols)` bilinearly before stacking.
pub fn extract_feature_volume(clip: &Waveform, cfg: &FeatureConfig) -> Result<FeatureVolume> {
    let (rows, cols) = (cfg.out_rows, cfg.out_cols);
    let spectrogram = spectrogram_channel(clip, cfg)?.resize_bilinear(rows, cols)?;
    let mfcc = mfcc_channel(clip, cfg)?.resize_bilinear(rows, cols)?;
    let logmel = logmel_channel(clip, cfg)?.resize_bilinear(rows, cols)?;
    FeatureVolume::from_channels([&spectrogram, &mfcc, &logmel])
}

/// Per-channel mean and standard deviation, estimated on training volumes only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; N_CHANNELS],
    pub std: [f64; N_CHANNELS],
}

impl Default for ChannelStats {
    fn default() -> Self {
        Self {
            mean: [0.0; N_CHANNELS],
            std: [1.0; N_CHANNELS],
        }
    }
}

impl ChannelStats {
    pub fn fit<'a>(volumes: impl IntoIterator<Item = &'a FeatureVolume>) -> Result<Self> {
        let mut sum = [0.0f64; N_CHANNELS];
        let mut sum_sq = [0.0f64; N_CHANNELS];
        let mut count = 0usize;
        for v in volumes {
            for cell in v.data.chunks_exact(N_CHANNELS) {
                for c in 0..N_CHANNELS {
                    let x = cell[c] as f64;
                    sum[c] += x;
                    sum_sq[c] += x * x;
                }
            }
            count += v.rows * v.cols;
        }
        if count == 0 {
            return Err(Error::invalid("cannot fit channel statistics on no data"));
        }
        let mut stats = Self::default();
        for c in 0..N_CHANNELS {
            let mean = sum[c] / count as f64;
            let var = (sum_sq[c] / count as f64 - mean * mean).max(0.0);
            stats.mean[c] = mean;
            // Constant channels are centred but not scaled.
            stats.std[c] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        }
        Ok(stats)
    }

    pub fn apply(&self, v: &FeatureVolume) -> FeatureVolume {
        let data = v
            .data
            .chunks_exact(N_CHANNELS)
            .flat_map(|cell| {
                (0..N_CHANNELS).map(move |c| ((cell[c] as f64 - self.mean[c]) / self.std[c]) as f32)
            })
            .collect();
        FeatureVolume {
            rows: v.rows,
            cols: v.cols,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_selection() {
        // 5 s at 5490 Hz with an 860-sample window.
        let hop = hop_for_frames(27450, 860, 430).unwrap();
        assert_eq!(hop, 61);
        assert!(super::super::frame_count(27450, 860, hop) >= 430);
        assert!(hop_for_frames(100, 200, 10).is_err());
        assert!(hop_for_frames(205, 200, 10).is_err());
    }

    #[test]
    fn stats_standardize_to_zero_mean_unit_variance() {
        let a = FeatureVolume::from_vec(1, 2, vec![1.0, 5.0, 7.0, 3.0, 5.0, 7.0]).unwrap();
        let b = FeatureVolume::from_vec(1, 2, vec![2.0, 5.0, 7.0, 4.0, 5.0, 7.0]).unwrap();
        let stats = ChannelStats::fit([&a, &b]).unwrap();
        assert_eq!(stats.mean, [2.5, 5.0, 7.0]);
        assert_eq!(stats.std[1], 1.0);
        let z: Vec<f32> = [&a, &b].iter().flat_map(|v| stats.apply(v).channel(0).collect::<Vec<_>>()).collect();
        let mean: f32 = z.iter().sum::<f32>() / 4.0;
        let var: f32 = z.iter().map(|x| (x - mean) * (x - mean)).sum::<f32>() / 4.0;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-5);
        assert!(ChannelStats::fit(std::iter::empty()).is_err());
    }
}
