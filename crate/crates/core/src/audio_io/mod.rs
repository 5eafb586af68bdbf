//! Clip loading and canonicalisation: WAV I/O, resampling, length standardisation
//! and peak normalisation.

mod resample;
mod wav;

pub use resample::{resample, resample_to_len};
pub use wav::{decode_wav, encode_wav_pcm16, read_wav, write_wav};

use crate::error::{Error, Result};

/// A mono sample sequence at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }
}

/// Number of samples that `duration` seconds occupies at `rate`.
pub fn samples_for(duration: f64, rate: u32) -> usize {
    (duration * rate as f64).round() as usize
}

/// Zero-pads at the end or truncates at the end to exactly `duration · rate` samples.
pub fn pad_or_trim(w: &Waveform, duration: f64) -> Result<Waveform> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid(format!("duration must be positive, got {duration}")));
    }
    let target = samples_for(duration, w.sample_rate);
    let mut samples = w.samples.clone();
    samples.resize(target, 0.0);
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// Scales so that the largest absolute sample is 1.0. Silence is returned as is.
pub fn peak_normalize(w: &Waveform) -> Waveform {
    let peak = w.peak();
    if peak == 0.0 {
        return w.clone();
    }
    Waveform {
        samples: w.samples.iter().map(|s| s / peak).collect(),
        sample_rate: w.sample_rate,
    }
}
