use super::{Grid, Spectrogram};
use crate::error::{Error, Result};

/// Floor added before taking logarithms of band energies.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::invalid(format!("frequency must be non-negative, got {f}")));
    }
    Ok(1125.0 * (f / 700.0).ln_1p())
}

pub fn mel_to_hz(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::invalid(format!("mel value must be non-negative, got {m}")));
    }
    Ok(700.0 * (m / 1125.0).exp_m1())
}

/// One triangular filter, stored sparsely from its first bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub start: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    filters: Vec<Triangle>,
    /// `n_filters + 2` FFT-bin edge points.
    points: Vec<usize>,
    n_bins: usize,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl MelFilterbank {
    pub fn n_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn filters(&self) -> &[Triangle] {
        &self.filters
    }

    pub fn edge_bins(&self) -> &[usize] {
        &self.points
    }

    /// Dense `n_filters × n_bins` weight matrix.
    pub fn weights(&self) -> Grid {
        let mut g = Grid::zeros(self.filters.len(), self.n_bins);
        for (i, tri) in self.filters.iter().enumerate() {
            g.row_mut(i)[tri.start..tri.start + tri.weights.len()].copy_from_slice(&tri.weights);
        }
        g
    }

    /// Projects one spectrum row through every filter.
    pub fn project(&self, spectrum: &[f64], out: &mut [f64]) {
        for (o, tri) in out.iter_mut().zip(&self.filters) {
            *o = tri
                .weights
                .iter()
                .zip(&spectrum[tri.start..])
                .map(|(w, x)| w * x)
                .sum();
        }
    }
}

/// Triangular filters with centres equally spaced in mel between `low_hz` and `high_hz`,
/// edges snapped to FFT bins `floor((fft_size + 1) · hz / sample_rate)`.
pub fn build_mel_filterbank(
    n_filters: usize,
    fft_size: usize,
    sample_rate: u32,
    low_hz: f64,
    high_hz: f64,
) -> Result<MelFilterbank> {
    if n_filters == 0 {
        return Err(Error::invalid("need at least one mel filter"));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(low_hz >= 0.0 && low_hz < high_hz && high_hz <= nyquist) {
        return Err(Error::invalid(format!(
            "mel band [{low_hz}, {high_hz}] Hz must satisfy 0 <= low < high <= {nyquist}"
        )));
    }
    let n_bins = fft_size / 2 + 1;
    let (mel_lo, mel_hi) = (hz_to_mel(low_hz)?, hz_to_mel(high_hz)?);
    let step = (mel_hi - mel_lo) / (n_filters + 1) as f64;
    let points = (0..n_filters + 2)
        .map(|i| {
            let hz = mel_to_hz(mel_lo + step * i as f64)?;
            let bin = ((fft_size + 1) as f64 * hz / sample_rate as f64).floor() as usize;
            Ok(bin.min(n_bins - 1))
        })
        .collect::<Result<Vec<usize>>>()?;
    if let Some(i) = points.windows(2).position(|p| p[0] >= p[1]) {
        return Err(Error::invalid(format!(
            "{n_filters} mel filters are too many for a {fft_size}-point FFT at {sample_rate} Hz: \
             edge points {i} and {} share bin {}",
            i + 1,
            points[i]
        )));
    }
    let filters = points
        .windows(3)
        .map(|p| {
            let (left, centre, right) = (p[0], p[1], p[2]);
            let weights = (left..=right)
                .map(|k| {
                    if k <= centre {
                        (k - left) as f64 / (centre - left) as f64
                    } else {
                        (right - k) as f64 / (right - centre) as f64
                    }
                })
                .collect();
            Triangle {
                start: left,
                weights,
            }
        })
        .collect();
    Ok(MelFilterbank {
        filters,
        points,
        n_bins,
        low_hz,
        high_hz,
    })
}

fn check_bins(spec: &Spectrogram, fb: &MelFilterbank) -> Result<()> {
    if spec.n_bins() != fb.n_bins() {
        return Err(Error::invalid(format!(
            "spectrogram has {} bins but the filterbank expects {}",
            spec.n_bins(),
            fb.n_bins()
        )));
    }
    Ok(())
}

/// Filterbank projection of the magnitude spectrum (no log), `T × n_filters`.
pub fn mel_magnitudes(spec: &Spectrogram, fb: &MelFilterbank) -> Result<Grid> {
    check_bins(spec, fb)?;
    let mut out = Grid::zeros(spec.n_frames(), fb.n_filters());
    for t in 0..spec.n_frames() {
        fb.project(spec.frames.row(t), out.row_mut(t));
    }
    Ok(out)
}

/// `ln(e + LOG_FLOOR)` of the filterbank projection of the power spectrum.
pub fn log_mel_energies(spec: &Spectrogram, fb: &MelFilterbank) -> Result<Grid> {
    check_bins(spec, fb)?;
    let mut out = Grid::zeros(spec.n_frames(), fb.n_filters());
    let mut power = vec![0.0; spec.n_bins()];
    for t in 0..spec.n_frames() {
        for (p, m) in power.iter_mut().zip(spec.frames.row(t)) {
            *p = m * m;
        }
        let row = out.row_mut(t);
        fb.project(&power, row);
        for e in row.iter_mut() {
            *e = (*e + LOG_FLOOR).ln();
        }
    }
    Ok(out)
}
