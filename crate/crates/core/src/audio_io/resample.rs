use std::f64::consts::PI;
use std::sync::OnceLock;

use super::Waveform;
use crate::error::{Error, Result};

/// Zero crossings of the sinc kernel kept on each side of the centre.
const TAPS_PER_SIDE: usize = 32;
/// Kernel table resolution per zero crossing; linear interpolation in between.
const TABLE_RES: usize = 512;

/// Hann-windowed sinc sampled on `[0, TAPS_PER_SIDE]` at `1 / TABLE_RES` steps.
fn kernel_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = TAPS_PER_SIDE * TABLE_RES + 2;
        (0..n)
            .map(|i| {
                let t = i as f64 / TABLE_RES as f64;
                if t >= TAPS_PER_SIDE as f64 {
                    return 0.0;
                }
                let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
                let window = 0.5 + 0.5 * (PI * t / TAPS_PER_SIDE as f64).cos();
                sinc * window
            })
            .collect()
    })
}

#[inline]
fn kernel(t: f64) -> f64 {
    let pos = t.abs() * TABLE_RES as f64;
    let i = pos as usize;
    if i >= TAPS_PER_SIDE * TABLE_RES {
        return 0.0;
    }
    let table = kernel_table();
    let frac = pos - i as f64;
    table[i] + frac * (table[i + 1] - table[i])
}

/// Band-limited interpolation of `x` onto a grid `ratio` times as dense, producing
/// exactly `out_len` samples. `ratio` is output rate over input rate.
fn interpolate(x: &[f64], ratio: f64, out_len: usize) -> Vec<f64> {
    if x.is_empty() {
        return vec![0.0; out_len];
    }
    // Below unity the kernel is stretched so the cutoff tracks the output Nyquist.
    let cutoff = ratio.min(1.0);
    let half_width = TAPS_PER_SIDE as f64 / cutoff;
    let last = x.len() as isize - 1;
    (0..out_len)
        .map(|j| {
            let center = j as f64 / ratio;
            let lo = ((center - half_width).ceil() as isize).max(0);
            let hi = ((center + half_width).floor() as isize).min(last);
            let mut acc = 0.0;
            for i in lo..=hi {
                acc += x[i as usize] * kernel(cutoff * (i as f64 - center));
            }
            cutoff * acc
        })
        .collect()
}

/// Windowed-sinc resampling to `target_rate`.
///
/// Output length is `round(len · target / source)`. Equal rates return the input unchanged.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::invalid("target rate must be positive"));
    }
    if target_rate == w.sample_rate {
        return Ok(w.clone());
    }
    let ratio = target_rate as f64 / w.sample_rate as f64;
    let out_len = (w.samples.len() as f64 * ratio).round() as usize;
    Ok(Waveform {
        samples: interpolate(&w.samples, ratio, out_len),
        sample_rate: target_rate,
    })
}

/// Resamples a raw sample sequence to exactly `out_len` samples, keeping its span.
pub fn resample_to_len(samples: &[f64], out_len: usize) -> Vec<f64> {
    if samples.len() == out_len {
        return samples.to_vec();
    }
    if samples.is_empty() {
        return vec![0.0; out_len];
    }
    let ratio = out_len as f64 / samples.len() as f64;
    interpolate(samples, ratio, out_len)
}
