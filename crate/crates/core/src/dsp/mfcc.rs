use serde::{Deserialize, Serialize};

use super::{build_mel_filterbank, log_mel_energies, make_window, stft, Dct2, Grid, WindowKind};
use crate::audio_io::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub n_filters: usize,
    pub n_coeffs: usize,
    pub low_hz: f64,
    /// `None` means the Nyquist frequency of the input.
    pub high_hz: Option<f64>,
    pub window: WindowKind,
}

/// frame → window → |FFT| → mel projection of power → ln → DCT-II, first `n_coeffs` kept.
pub fn mfcc(w: &Waveform, config: &MfccConfig) -> Result<Grid> {
    if config.n_coeffs > config.n_filters {
        return Err(Error::invalid(format!(
            "{} coefficients requested from {} mel filters",
            config.n_coeffs, config.n_filters
        )));
    }
    let window = make_window(config.window, config.frame_len)?;
    let spec = stft(w, &window, config.hop, config.fft_size)?;
    let high = config.high_hz.unwrap_or(w.sample_rate as f64 / 2.0);
    let fb = build_mel_filterbank(config.n_filters, config.fft_size, w.sample_rate, config.low_hz, high)?;
    let log_mel = log_mel_energies(&spec, &fb)?;
    Ok(cepstrum(&log_mel, config.n_coeffs))
}

/// DCT-II along each row of a log-mel grid, truncated to `n_coeffs` columns.
pub fn cepstrum(log_mel: &Grid, n_coeffs: usize) -> Grid {
    let dct = Dct2::new(log_mel.cols());
    let mut out = Grid::zeros(log_mel.rows(), n_coeffs);
    let mut full = vec![0.0; log_mel.cols()];
    for t in 0..log_mel.rows() {
        dct.transform(log_mel.row(t), &mut full);
        out.row_mut(t).copy_from_slice(&full[..n_coeffs]);
    }
    out
}
