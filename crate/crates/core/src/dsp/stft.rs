use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{Grid, Window};
use crate::audio_io::Waveform;
use crate::error::{Error, Result};

/// Magnitude STFT: one row per frame, `fft_size / 2 + 1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Grid,
    pub hop: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.frames.cols()
    }
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Number of complete frames of `window` samples at `hop` spacing.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window || hop == 0 {
        0
    } else {
        (len - window) / hop + 1
    }
}

/// Frame `t` covers `[t·hop, t·hop + window.len())`; each frame is windowed,
/// zero-padded to `fft_size` and transformed. Only complete frames are produced.
pub fn stft(w: &Waveform, window: &Window, hop: usize, fft_size: usize) -> Result<Spectrogram> {
    let wlen = window.len();
    if hop == 0 {
        return Err(Error::invalid("hop must be at least 1"));
    }
    if fft_size < wlen {
        return Err(Error::invalid(format!(
            "fft size {fft_size} is smaller than window length {wlen}"
        )));
    }
    if w.len() < wlen {
        return Err(Error::invalid(format!(
            "clip of {} samples is shorter than one {wlen}-sample window",
            w.len()
        )));
    }
    let n_frames = frame_count(w.len(), wlen, hop);
    let n_bins = fft_size / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut frames = Grid::zeros(n_frames, n_bins);
    let coeffs = window.coeffs();
    for t in 0..n_frames {
        let start = t * hop;
        let segment = &w.samples[start..start + wlen];
        for (slot, (x, c)) in buf.iter_mut().zip(segment.iter().zip(coeffs)) {
            *slot = Complex::new(x * c, 0.0);
        }
        buf[wlen..].fill(Complex::new(0.0, 0.0));
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (out, z) in frames.row_mut(t).iter_mut().zip(&buf[..n_bins]) {
            *out = z.norm();
        }
    }
    Ok(Spectrogram {
        frames,
        hop,
        fft_size,
        sample_rate: w.sample_rate,
    })
}
