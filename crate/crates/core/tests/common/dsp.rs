//! Naive reference implementations for the feature transforms.

use std::f64::consts::PI;

use rand::Rng as _;
use roadaudio::audio_io::Waveform;
use roadaudio::dsp::*;
use roadaudio::rng::rng;

pub fn random_signal(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// |X[k]| for k in 0..=n/2 by direct O(n²) summation over a zero-padded frame.
pub fn naive_dft_magnitudes(frame: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (m, x) in frame.iter().enumerate() {
                let phase = -2.0 * PI * (k * m % n) as f64 / n as f64;
                re += x * phase.cos();
                im += x * phase.sin();
            }
            re.hypot(im)
        })
        .collect()
}

pub fn naive_dct(x: &[f64]) -> Vec<f64> {
    let m = x.len() as f64;
    (0..x.len())
        .map(|k| {
            let s = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            s * x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Max |stft − naive DFT| over several random 1024-sample signals and frame setups.
pub fn stft_vs_naive() -> f64 {
    let setups = [
        (WindowKind::Rectangular, 1024, 1024, 1024),
        (WindowKind::Hann, 400, 160, 512),
        (WindowKind::Hamming, 256, 100, 256),
    ];
    let mut worst: f64 = 0.0;
    for (seed, &(kind, wlen, hop, fft)) in setups.iter().enumerate() {
        let x = random_signal(1024, 100 + seed as u64);
        let w = Waveform::new(x.clone(), 8000).unwrap();
        let window = make_window(kind, wlen).unwrap();
        let spec = stft(&w, &window, hop, fft).unwrap();
        assert_eq!(spec.n_frames(), (1024 - wlen) / hop + 1);
        for t in 0..spec.n_frames() {
            let frame: Vec<f64> = x[t * hop..t * hop + wlen]
                .iter()
                .zip(window.coeffs())
                .map(|(a, c)| a * c)
                .collect();
            for (a, b) in spec.frames.row(t).iter().zip(naive_dft_magnitudes(&frame, fft)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

/// Max relative deviation from fft_size · Σ(w·x)² = |X₀|² + 2Σ|X_k|² + |X_{n/2}|²
/// (the full-spectrum sum folded onto the stored one-sided bins).
pub fn parseval() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..4u64 {
        let x = random_signal(1024, 200 + seed);
        let w = Waveform::new(x.clone(), 8000).unwrap();
        let window = make_window(WindowKind::Hann, 300).unwrap();
        let fft = 512;
        let spec = stft(&w, &window, 181, fft).unwrap();
        for t in 0..spec.n_frames() {
            let energy: f64 = x[t * 181..t * 181 + 300]
                .iter()
                .zip(window.coeffs())
                .map(|(a, c)| (a * c).powi(2))
                .sum();
            let row = spec.frames.row(t);
            let half = fft / 2;
            let folded = row[0].powi(2) + row[half].powi(2) + 2.0 * row[1..half].iter().map(|m| m * m).sum::<f64>();
            worst = worst.max((folded - fft as f64 * energy).abs() / (fft as f64 * energy));
        }
    }
    worst
}

/// (max |fast − naive| over random M=128 vectors, max |M·Mᵀ − I| entry).
pub fn dct_errors() -> (f64, f64) {
    let m = 128;
    let dct = Dct2::new(m);
    let mut naive_err: f64 = 0.0;
    for seed in 0..5 {
        let x = random_signal(m, 300 + seed);
        for (a, b) in dct.apply(&x).iter().zip(naive_dct(&x)) {
            naive_err = naive_err.max((a - b).abs());
        }
    }
    // Column j of the transform matrix is the transform of basis vector e_j.
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            dct.apply(&e)
        })
        .collect();
    let mut ortho_err: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let dot: f64 = (0..m).map(|j| cols[j][a] * cols[j][b]).sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            ortho_err = ortho_err.max((dot - expect).abs());
        }
    }
    (naive_err, ortho_err)
}

/// Max relative round-trip error of mel_to_hz ∘ hz_to_mel.
pub fn mel_round_trip() -> f64 {
    let mut fs = vec![1.0, 440.0, 22050.0];
    let mut r = rng(400);
    fs.extend((0..200).map(|_| r.gen_range(0.01..24000.0)));
    fs.iter()
        .map(|&f| (mel_to_hz(hz_to_mel(f).unwrap()).unwrap() - f).abs() / f)
        .fold(0.0, f64::max)
}

/// White noise through the log-mel path. Returns the max |implementation − naive
/// projection| and the max ratio between adjacent filters of the mean energy per unit
/// filter weight (flat for white noise, up to sampling noise).
pub fn white_noise_logmel() -> (f64, f64) {
    let rate = 16000;
    let x = random_signal(rate as usize * 2, 500);
    let w = Waveform::new(x, rate).unwrap();
    let window = make_window(WindowKind::Hann, 512).unwrap();
    let spec = stft(&w, &window, 256, 512).unwrap();
    let fb = build_mel_filterbank(40, 512, rate, 0.0, 8000.0).unwrap();
    let got = log_mel_energies(&spec, &fb).unwrap();
    let weights = fb.weights();
    let mut err: f64 = 0.0;
    let mut mean = vec![0.0; fb.n_filters()];
    for t in 0..spec.n_frames() {
        for i in 0..fb.n_filters() {
            let e: f64 = (0..fb.n_bins()).map(|k| weights.get(i, k) * spec.frames.get(t, k).powi(2)).sum();
            err = err.max((got.get(t, i) - (e + LOG_FLOOR).ln()).abs());
            mean[i] += e / spec.n_frames() as f64;
        }
    }
    let density: Vec<f64> = (0..fb.n_filters())
        .map(|i| mean[i] / (0..fb.n_bins()).map(|k| weights.get(i, k)).sum::<f64>())
        .collect();
    let ratio = density
        .windows(2)
        .map(|p| (p[1] / p[0]).max(p[0] / p[1]))
        .fold(1.0, f64::max);
    (err, ratio)
}

pub struct DcMfcc {
    /// Max |mfcc − naive oracle| over all frames and coefficients.
    pub oracle_err: f64,
    /// Min over frames of |c0| − max |c_k>0|.
    pub peak_margin: f64,
    /// Min over frames of |c0| − Σ |c_k>0|.
    pub sum_margin: f64,
}

/// Full naive MFCC (Hann frame, direct DFT, filterbank weights, ln, direct DCT) of a
/// one-second DC waveform, against the implementation.
pub fn dc_mfcc(rate: u32, frame: usize, fft: usize, filters: usize, coeffs: usize) -> DcMfcc {
    let w = Waveform::new(vec![0.5; rate as usize], rate).unwrap();
    let hop = frame / 2;
    let cfg = MfccConfig {
        frame_len: frame,
        hop,
        fft_size: fft,
        n_filters: filters,
        n_coeffs: coeffs,
        low_hz: 0.0,
        high_hz: None,
        window: WindowKind::Hann,
    };
    let got = mfcc(&w, &cfg).unwrap();
    let hann: Vec<f64> = (0..frame).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (frame - 1) as f64).cos()).collect();
    let weights = build_mel_filterbank(filters, fft, rate, 0.0, rate as f64 / 2.0).unwrap().weights();
    let mut out = DcMfcc { oracle_err: 0.0, peak_margin: f64::INFINITY, sum_margin: f64::INFINITY };
    for t in 0..got.rows() {
        let x: Vec<f64> = (0..frame).map(|n| w.samples[t * hop + n] * hann[n]).collect();
        let mag = naive_dft_magnitudes(&x, fft);
        let log_mel: Vec<f64> = (0..filters)
            .map(|i| {
                let e: f64 = mag.iter().enumerate().map(|(k, m)| weights.get(i, k) * m * m).sum();
                (e + LOG_FLOOR).ln()
            })
            .collect();
        let c = naive_dct(&log_mel);
        for k in 0..coeffs {
            out.oracle_err = out.oracle_err.max((got.get(t, k) - c[k]).abs());
        }
        let rest = &got.row(t)[1..];
        let c0 = got.get(t, 0).abs();
        out.peak_margin = out.peak_margin.min(c0 - rest.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        out.sum_margin = out.sum_margin.min(c0 - rest.iter().map(|v| v.abs()).sum::<f64>());
    }
    out
}

pub fn five_second_clip(rate: u32, seed: u64) -> Waveform {
    Waveform::new(random_signal(rate as usize * 5, seed).iter().map(|v| v * 0.5).collect(), rate).unwrap()
}
