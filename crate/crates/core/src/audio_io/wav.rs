use std::fs;
use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a RIFF/WAVE file (PCM16 or float32, mono or stereo) into a mono waveform.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes).map_err(|e| match e {
        Error::Decode(m) => Error::Decode(format!("{}: {m}", path.display())),
        Error::UnsupportedFormat(m) => Error::UnsupportedFormat(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 {
        return Err(Error::Decode("file shorter than RIFF header".into()));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Decode("missing RIFF/WAVE signature".into()));
    }

    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| Error::Decode("chunk size overflow".into()))?;
        match id {
            b"fmt " => {
                if size < 16 || body_end > bytes.len() {
                    return Err(Error::Decode("truncated fmt chunk".into()));
                }
                let b = &bytes[body_start..body_end];
                let mut tag = u16_at(b, 0);
                if tag == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(Error::Decode("truncated WAVE_FORMAT_EXTENSIBLE chunk".into()));
                    }
                    // First two bytes of the sub-format GUID carry the real format tag.
                    tag = u16_at(b, 24);
                }
                format = Some(Format {
                    tag,
                    channels: u16_at(b, 2),
                    sample_rate: u32_at(b, 4),
                    bits: u16_at(b, 14),
                });
            }
            b"data" => {
                // Some writers leave a bogus size on the final chunk; clamp to what is there.
                let end = body_end.min(bytes.len());
                data = Some(&bytes[body_start..end]);
            }
            _ => {}
        }
        pos = body_end + (size & 1);
    }

    let fmt = format.ok_or_else(|| Error::Decode("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Decode("no data chunk".into()))?;

    if fmt.sample_rate == 0 {
        return Err(Error::Decode("sample rate is zero".into()));
    }
    if fmt.channels != 1 && fmt.channels != 2 {
        return Err(Error::UnsupportedFormat(format!("{} channels", fmt.channels)));
    }
    let channels = fmt.channels as usize;

    let frames: Vec<f64> = match (fmt.tag, fmt.bits) {
        (FORMAT_PCM, 16) => {
            let frame_bytes = 2 * channels;
            data.chunks_exact(frame_bytes)
                .map(|f| {
                    let sum: f64 = f
                        .chunks_exact(2)
                        .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0)
                        .sum();
                    sum / channels as f64
                })
                .collect()
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            let frame_bytes = 4 * channels;
            data.chunks_exact(frame_bytes)
                .map(|f| {
                    let sum: f64 = f
                        .chunks_exact(4)
                        .map(|s| f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64)
                        .sum();
                    sum / channels as f64
                })
                .collect()
        }
        (tag, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "format tag {tag} with {bits} bits per sample"
            )))
        }
    };

    if frames.iter().any(|s| !s.is_finite()) {
        return Err(Error::Decode("non-finite float sample".into()));
    }
    Ok(Waveform {
        samples: frames,
        sample_rate: fmt.sample_rate,
    })
}

/// Encodes a waveform as 16-bit mono PCM. Samples are clamped to the representable range.
pub fn encode_wav_pcm16(w: &Waveform) -> Vec<u8> {
    let data_len = w.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &w.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_wav_pcm16(w)).map_err(|e| Error::io(path, e))
}
