use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Hamming,
    Rectangular,
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Rectangular => "rectangular",
        })
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hann" | "hanning" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            "rectangular" | "rect" | "boxcar" => Ok(WindowKind::Rectangular),
            other => Err(Error::invalid(format!("unknown window kind '{other}'"))),
        }
    }
}

/// Symmetric analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    kind: WindowKind,
    coeffs: Vec<f64>,
}

impl Window {
    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

pub fn make_window(kind: WindowKind, length: usize) -> Result<Window> {
    if length == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    let denom = (length.max(2) - 1) as f64;
    let coeffs = (0..length)
        .map(|n| {
            let c = (2.0 * PI * n as f64 / denom).cos();
            match kind {
                _ if length == 1 => 1.0,
                WindowKind::Hann => 0.5 - 0.5 * c,
                WindowKind::Hamming => 0.54 - 0.46 * c,
                WindowKind::Rectangular => 1.0,
            }
        })
        .collect();
    Ok(Window { kind, coeffs })
}
