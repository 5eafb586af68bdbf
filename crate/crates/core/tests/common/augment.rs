//! Length and frequency contracts of the waveform augmentations.

use std::f64::consts::PI;

use roadaudio::audio_io::Waveform;
use roadaudio::augment::*;

pub const RATE: u32 = 8000;

pub fn sine(freq: f64, seconds: f64) -> Waveform {
    let n = (seconds * RATE as f64).round() as usize;
    Waveform::new((0..n).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / RATE as f64).sin()).collect(), RATE).unwrap()
}

/// Frequency of the largest DFT magnitude over a 0.5 Hz grid, evaluated directly on one
/// second from the middle of the clip.
pub fn dominant_frequency(w: &Waveform, lo: f64, hi: f64) -> f64 {
    let n = RATE as usize;
    let start = (w.len().saturating_sub(n)) / 2;
    let seg = &w.samples[start..(start + n).min(w.len())];
    let hann: Vec<f64> = (0..seg.len()).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (seg.len() - 1) as f64).cos()).collect();
    let mut best = (lo, 0.0);
    let mut f = lo;
    while f <= hi {
        let step = 2.0 * PI * f / RATE as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, (x, h)) in seg.iter().zip(&hann).enumerate() {
            let p = step * i as f64;
            re += x * h * p.cos();
            im -= x * h * p.sin();
        }
        let mag = re.hypot(im);
        if mag > best.1 {
            best = (f, mag);
        }
        f += 0.5;
    }
    best.0
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// One failure message per violated contract; empty when everything holds.
pub fn pitch_contracts() -> Vec<String> {
    let mut failures = Vec::new();
    let tone = sine(440.0, 2.0);
    for s in [-12.0, -4.0, -2.5, 0.0, 1.0, 3.3, 4.0, 12.0] {
        let out = pitch_shift(&tone, s).unwrap();
        if out.len().abs_diff(tone.len()) > VOCODER_HOP {
            failures.push(format!("pitch {s}: length {} vs {}", out.len(), tone.len()));
        }
        let expect = 440.0 * 2f64.powf(s / 12.0);
        let got = dominant_frequency(&out, 150.0, 1000.0);
        if (got / expect - 1.0).abs() > 0.02 {
            failures.push(format!("pitch {s}: dominant {got} Hz, expected {expect:.1} Hz ± 2%"));
        }
        if s == 0.0 {
            let c = correlation(&out.samples, &tone.samples);
            if c <= 0.95 {
                failures.push(format!("pitch 0: correlation {c:.4}"));
            }
        }
    }
    failures
}

pub fn stretch_contracts() -> Vec<String> {
    let mut failures = Vec::new();
    let tone = sine(440.0, 5.0);
    let bin = RATE as f64 / VOCODER_FRAME as f64;
    for rate in [0.8, 1.0, 1.25] {
        let out = time_stretch(&tone, rate).unwrap();
        let expect = tone.len() as f64 / rate;
        if (out.len() as f64 - expect).abs() > VOCODER_HOP as f64 {
            failures.push(format!("stretch {rate}: {} samples, expected {expect} ± {VOCODER_HOP}", out.len()));
        }
        let got = dominant_frequency(&out, 300.0, 600.0);
        if (got - 440.0).abs() > bin {
            failures.push(format!("stretch {rate}: dominant {got} Hz, expected 440 ± {bin:.2} Hz"));
        }
        if rate == 1.0 {
            let c = correlation(&out.samples, &tone.samples);
            if c <= 0.95 {
                failures.push(format!("stretch 1.0: correlation {c:.4}"));
            }
        }
    }
    failures
}

pub fn shift_contracts() -> Vec<String> {
    let mut failures = Vec::new();
    let w = Waveform::new((0..1001).map(|i| ((i * 37 % 101) as f64 - 50.0) / 60.0).collect(), RATE).unwrap();
    if time_shift(&w, 0.0).unwrap() != w {
        failures.push("shift 0 is not the identity".into());
    }
    let s = (0.25 * w.len() as f64).round() as usize;
    let out = time_shift(&w, 0.25).unwrap();
    if (0..w.len()).any(|i| out.samples[i] != w.samples[(i + w.len() - s) % w.len()]) {
        failures.push("shift 0.25 is not a rotation by round(0.25·len)".into());
    }
    let even = Waveform::new(w.samples[..1000].to_vec(), RATE).unwrap();
    let twice = time_shift(&time_shift(&even, 0.5).unwrap(), 0.5).unwrap();
    if twice != even {
        failures.push("two half shifts are not the identity".into());
    }
    failures
}

/// Six canonical-length, finite, bounded, reproducible outputs per clip.
pub fn augment_clip_contracts() -> Vec<String> {
    let mut failures = Vec::new();
    let clip = sine(600.0, 1.0);
    let pool = vec![sine(97.0, 0.3), sine(1300.0, 2.0)];
    let spec = AugmentSpec { seed: 9, ..AugmentSpec::default() };
    let a = augment_clip(&clip, &spec, &pool).unwrap();
    let b = augment_clip(&clip, &spec, &pool).unwrap();
    if a.len() != VARIANTS_PER_CLIP {
        failures.push(format!("{} variants", a.len()));
    }
    if a != b {
        failures.push("same seed gave different outputs".into());
    }
    for (k, v) in a.iter().enumerate() {
        if v.len() != clip.len() {
            failures.push(format!("variant {k}: length {} vs {}", v.len(), clip.len()));
        }
        if v.samples.iter().any(|s| !s.is_finite() || s.abs() > 1.0) {
            failures.push(format!("variant {k}: sample outside [-1, 1]"));
        }
    }
    if augment_clip(&clip, &spec, &[]).is_ok() {
        failures.push("empty noise pool accepted".into());
    }
    failures
}
