//! Waveform augmentation: background-noise mixing, time stretch, pitch shift and
//! circular time shift. [`augment_clip`] turns one clip into six variants.

mod vocoder;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::audio_io::{pad_or_trim, peak_normalize, resample, resample_to_len, Waveform};
use crate::error::{Error, Result};
use crate::rng::{rng_for, Rng};

pub use vocoder::{FRAME as VOCODER_FRAME, HOP as VOCODER_HOP};

/// Variants produced per clip; with the original this is a seven-fold expansion.
pub const VARIANTS_PER_CLIP: usize = 6;

/// Parameter ranges for random augmentation draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub noise_amp_range: [f64; 2],
    pub stretch_range: [f64; 2],
    pub pitch_range: [f64; 2],
    pub shift_range: [f64; 2],
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            noise_amp_range: [0.001, 0.015],
            stretch_range: [0.8, 1.25],
            pitch_range: [-4.0, 4.0],
            shift_range: [-0.5, 0.5],
            seed: 0,
        }
    }
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, r: [f64; 2], lo: f64, hi: f64| {
            if !(r[0] < r[1] && r[0] >= lo && r[1] <= hi) {
                return Err(Error::invalid(format!(
                    "{name} range [{}, {}] must be increasing and within [{lo}, {hi}]",
                    r[0], r[1]
                )));
            }
            Ok(())
        };
        check("noise amplitude", self.noise_amp_range, 0.0, 1.0)?;
        check("stretch rate", self.stretch_range, 0.5, 2.0)?;
        check("pitch", self.pitch_range, -12.0, 12.0)?;
        check("shift", self.shift_range, -0.5, 0.5)
    }

    /// Generator for one clip, derived from the spec seed and the clip id.
    pub fn rng_for_clip(&self, clip_id: &str) -> Rng {
        rng_for(self.seed, clip_id)
    }

    /// Draws the six variant parameter sets in output order.
    pub fn draw(&self, rng: &mut Rng, pool_size: usize) -> Result<[Variant; VARIANTS_PER_CLIP]> {
        self.validate()?;
        if pool_size == 0 {
            return Err(Error::invalid("noise pool is empty"));
        }
        let mut uniform = |r: [f64; 2]| rng.gen_range(r[0]..r[1]);
        let amp = uniform(self.noise_amp_range);
        let rate = uniform(self.stretch_range);
        let pitch_a = uniform(self.pitch_range);
        let pitch_b = uniform(self.pitch_range);
        let pitch_c = uniform(self.pitch_range);
        let fraction = uniform(self.shift_range);
        let donor = rng.gen_range(0..pool_size);
        Ok([
            Variant::new(VariantKind::NoiseMix, AugmentOp::NoiseMix { amp, donor }),
            Variant::new(VariantKind::TimeStretch, AugmentOp::TimeStretch { rate }),
            Variant::new(VariantKind::PitchShiftA, AugmentOp::PitchShift { semitones: pitch_a }),
            Variant::new(VariantKind::PitchShiftB, AugmentOp::PitchShift { semitones: pitch_b }),
            Variant::new(VariantKind::PitchShiftC, AugmentOp::PitchShift { semitones: pitch_c }),
            Variant::new(VariantKind::TimeShift, AugmentOp::TimeShift { fraction }),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    NoiseMix,
    TimeStretch,
    PitchShiftA,
    PitchShiftB,
    PitchShiftC,
    TimeShift,
}

impl VariantKind {
    pub const ALL: [VariantKind; VARIANTS_PER_CLIP] = [
        VariantKind::NoiseMix,
        VariantKind::TimeStretch,
        VariantKind::PitchShiftA,
        VariantKind::PitchShiftB,
        VariantKind::PitchShiftC,
        VariantKind::TimeShift,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            VariantKind::NoiseMix => "noise_mix",
            VariantKind::TimeStretch => "time_stretch",
            VariantKind::PitchShiftA => "pitch_shift_a",
            VariantKind::PitchShiftB => "pitch_shift_b",
            VariantKind::PitchShiftC => "pitch_shift_c",
            VariantKind::TimeShift => "time_shift",
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VariantKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown augmentation type '{s}'")))
    }
}

/// A concrete augmentation with its drawn parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentOp {
    NoiseMix { amp: f64, donor: usize },
    TimeStretch { rate: f64 },
    PitchShift { semitones: f64 },
    TimeShift { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub kind: VariantKind,
    pub op: AugmentOp,
}

impl Variant {
    pub fn new(kind: VariantKind, op: AugmentOp) -> Self {
        Self { kind, op }
    }
}

/// `out[i] = clamp(w[i] + amp · noise[i], -1, 1)`, with the noise resampled to the clip
/// rate and looped or truncated to the clip length.
pub fn mix_background_noise(w: &Waveform, noise: &Waveform, amp: f64) -> Result<Waveform> {
    if !(0.0..=1.0).contains(&amp) {
        return Err(Error::invalid(format!("noise amplitude {amp} outside [0, 1]")));
    }
    let noise = resample(noise, w.sample_rate)?;
    if noise.is_empty() {
        return Err(Error::invalid("noise clip is empty"));
    }
    let samples = w
        .samples
        .iter()
        .zip(noise.samples.iter().cycle())
        .map(|(s, n)| (s + amp * n).clamp(-1.0, 1.0))
        .collect();
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// Phase-vocoder tempo change: duration becomes `len / rate`, pitch is kept.
pub fn time_stretch(w: &Waveform, rate: f64) -> Result<Waveform> {
    if !(rate > 0.0) {
        return Err(Error::invalid(format!("stretch rate must be positive, got {rate}")));
    }
    if !(0.5..=2.0).contains(&rate) {
        return Err(Error::invalid(format!("stretch rate {rate} outside [0.5, 2]")));
    }
    let samples = vocoder::stretch(&w.samples, rate)
        .into_iter()
        .map(|s| s.clamp(-1.0, 1.0))
        .collect();
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// Stretches the duration by `2^(semitones / 12)` and resamples back to the original
/// length, scaling every frequency by the same factor.
pub fn pitch_shift(w: &Waveform, semitones: f64) -> Result<Waveform> {
    if !(-12.0..=12.0).contains(&semitones) {
        return Err(Error::invalid(format!("pitch shift {semitones} outside [-12, 12] semitones")));
    }
    let factor = 2f64.powf(semitones / 12.0);
    let stretched = time_stretch(w, 1.0 / factor)?;
    let samples = resample_to_len(&stretched.samples, w.len())
        .into_iter()
        .map(|s| s.clamp(-1.0, 1.0))
        .collect();
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// Circular rotation by `round(fraction · len)` samples: `out[i] = w[(i - s) mod len]`.
pub fn time_shift(w: &Waveform, fraction: f64) -> Result<Waveform> {
    if !(-0.5..=0.5).contains(&fraction) {
        return Err(Error::invalid(format!("shift fraction {fraction} outside [-0.5, 0.5]")));
    }
    let mut samples = w.samples.clone();
    if !samples.is_empty() {
        let len = samples.len() as i64;
        let s = (fraction * len as f64).round() as i64;
        samples.rotate_right(s.rem_euclid(len) as usize);
    }
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// Applies one drawn augmentation and restores the input length.
pub fn apply_variant(w: &Waveform, op: &AugmentOp, noise_pool: &[Waveform]) -> Result<Waveform> {
    let out = match *op {
        AugmentOp::NoiseMix { amp, donor } => {
            let noise = noise_pool.get(donor).ok_or_else(|| {
                Error::invalid(format!("noise donor {donor} outside pool of {}", noise_pool.len()))
            })?;
            mix_background_noise(w, &peak_normalize(noise), amp)?
        }
        AugmentOp::TimeStretch { rate } => time_stretch(w, rate)?,
        AugmentOp::PitchShift { semitones } => pitch_shift(w, semitones)?,
        AugmentOp::TimeShift { fraction } => time_shift(w, fraction)?,
    };
    pad_or_trim(&out, w.duration_seconds())
}

/// Six variants of `w` in the order noise mix, time stretch, three pitch shifts, time
/// shift; every random draw comes from `spec.seed`.
pub fn augment_clip(
    w: &Waveform,
    spec: &AugmentSpec,
    noise_pool: &[Waveform],
) -> Result<Vec<Waveform>> {
    let mut rng = crate::rng::rng(spec.seed);
    let variants = spec.draw(&mut rng, noise_pool.len())?;
    variants
        .iter()
        .map(|v| apply_variant(w, &v.op, noise_pool))
        .collect()
}
