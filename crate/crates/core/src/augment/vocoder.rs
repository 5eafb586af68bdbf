//! Phase-vocoder time-scale modification.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub const FRAME: usize = 2048;
pub const HOP: usize = 512;

fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Centred complex STFT: the signal is zero-padded by `FRAME / 2` on both sides and
/// frame `t` starts at `t · HOP` in the padded signal.
fn analyse(x: &[f64], window: &[f64]) -> Vec<Vec<Complex<f64>>> {
    let half = FRAME / 2;
    let mut padded = vec![0.0; x.len() + FRAME];
    padded[half..half + x.len()].copy_from_slice(x);
    let n_frames = x.len() / HOP + 1;
    let fft = FftPlanner::new().plan_fft_forward(FRAME);
    (0..n_frames)
        .map(|t| {
            let start = t * HOP;
            let mut buf: Vec<Complex<f64>> = padded[start..start + FRAME]
                .iter()
                .zip(window)
                .map(|(s, w)| Complex::new(s * w, 0.0))
                .collect();
            fft.process(&mut buf);
            buf.truncate(FRAME / 2 + 1);
            buf
        })
        .collect()
}

/// Inverse of [`analyse`] by weighted overlap-add, trimmed to `out_len` samples.
fn synthesise(frames: &[Vec<Complex<f64>>], window: &[f64], out_len: usize) -> Vec<f64> {
    let half = FRAME / 2;
    let total = FRAME + HOP * frames.len().saturating_sub(1);
    let mut acc = vec![0.0; total];
    let mut norm = vec![0.0; total];
    let ifft = FftPlanner::new().plan_fft_inverse(FRAME);
    let mut buf = vec![Complex::new(0.0, 0.0); FRAME];
    for (t, half_spec) in frames.iter().enumerate() {
        buf[..=half].copy_from_slice(half_spec);
        for k in 1..half {
            buf[FRAME - k] = half_spec[k].conj();
        }
        // DC and Nyquist bins must be real for a real signal.
        buf[0].im = 0.0;
        buf[half].im = 0.0;
        ifft.process(&mut buf);
        let start = t * HOP;
        for i in 0..FRAME {
            acc[start + i] += buf[i].re / FRAME as f64 * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    let mut out: Vec<f64> = (half..total)
        .take(out_len)
        .map(|i| if norm[i] > 1e-8 { acc[i] / norm[i] } else { acc[i] })
        .collect();
    out.resize(out_len, 0.0);
    out
}

fn wrap_phase(p: f64) -> f64 {
    p - 2.0 * PI * (p / (2.0 * PI)).round()
}

/// Changes duration by `1 / rate` while keeping the spectral content in place.
///
/// Output frames are read at fractional positions `0, rate, 2·rate, …` of the analysis
/// frames: magnitudes are linearly interpolated between neighbours and phases are
/// accumulated from the measured per-bin phase advance.
pub fn stretch(x: &[f64], rate: f64) -> Vec<f64> {
    let out_len = (x.len() as f64 / rate).round() as usize;
    if x.is_empty() {
        return vec![0.0; out_len];
    }
    let window = periodic_hann(FRAME);
    let spec = analyse(x, &window);
    let n_frames = spec.len();
    let n_bins = FRAME / 2 + 1;
    let expected: Vec<f64> = (0..n_bins)
        .map(|k| 2.0 * PI * HOP as f64 * k as f64 / FRAME as f64)
        .collect();
    let zero = vec![Complex::new(0.0, 0.0); n_bins];

    let mut phase: Vec<f64> = spec[0].iter().map(|z| z.arg()).collect();
    let mut out_frames = Vec::new();
    let mut step = 0.0f64;
    while step < n_frames as f64 {
        let i = step.floor() as usize;
        let alpha = step - i as f64;
        let left = &spec[i];
        let right = spec.get(i + 1).unwrap_or(&zero);
        let frame: Vec<Complex<f64>> = (0..n_bins)
            .map(|k| {
                let mag = (1.0 - alpha) * left[k].norm() + alpha * right[k].norm();
                Complex::from_polar(mag, phase[k])
            })
            .collect();
        out_frames.push(frame);
        for k in 0..n_bins {
            let delta = wrap_phase(right[k].arg() - left[k].arg() - expected[k]);
            phase[k] += expected[k] + delta;
        }
        step += rate;
    }
    synthesise(&out_frames, &window, out_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analysis_synthesis_is_transparent() {
        let x: Vec<f64> = (0..6000).map(|i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5).collect();
        let window = periodic_hann(FRAME);
        let y = synthesise(&analyse(&x, &window), &window, x.len());
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_rate_reconstructs_input() {
        let x: Vec<f64> = (0..8000).map(|i| (i as f64 * 0.05).sin() * 0.7).collect();
        let y = stretch(&x, 1.0);
        assert_eq!(y.len(), x.len());
        let err: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
    }
}
