use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Orthonormal DCT-II of a fixed length, computed with one complex FFT of the same
/// length (even samples forward, odd samples reversed, then a quarter-sample twiddle).
pub struct Dct2 {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    twiddles: Vec<Complex<f64>>,
}

impl std::fmt::Debug for Dct2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dct2").field("len", &self.len).finish()
    }
}

impl Dct2 {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DCT length must be positive");
        let fft = FftPlanner::new().plan_fft_forward(len);
        let n = len as f64;
        let twiddles = (0..len)
            .map(|k| {
                let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                Complex::from_polar(scale, -PI * k as f64 / (2.0 * n))
            })
            .collect();
        Self { len, fft, twiddles }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `out[k] = s_k Σ_m x[m] cos(π k (m + ½) / M)`, `s_0 = √(1/M)`, `s_k = √(2/M)`.
    pub fn transform(&self, input: &[f64], out: &mut [f64]) {
        assert_eq!(input.len(), self.len);
        assert!(out.len() <= self.len);
        let n = self.len;
        let mut v: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
        for m in 0..n.div_ceil(2) {
            v[m] = Complex::new(input[2 * m], 0.0);
        }
        for m in 0..n / 2 {
            v[n - 1 - m] = Complex::new(input[2 * m + 1], 0.0);
        }
        self.fft.process(&mut v);
        for (k, o) in out.iter_mut().enumerate() {
            *o = (v[k] * self.twiddles[k]).re;
        }
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        self.transform(input, &mut out);
        out
    }
}
