//! Checkpoint layout (little-endian):
//!
//! ```text
//! "RACK" | version: u8 | meta_len: u32 | meta: JSON | tensors: f32... | sha256: [u8; 32]
//! ```
//!
//! The JSON header carries the model spec, input shape, class names, standardisation
//! statistics, free-form metadata and the name and shape of every tensor blob in
//! storage order. The trailing digest covers every preceding byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{Model, ModelSpec};
use crate::dsp::ChannelStats;
use crate::error::{Error, Result};
use crate::rng::rng;
use crate::CHECKPOINT_FORMAT_VERSION;

const MAGIC: &[u8; 4] = b"RACK";

/// A trained model plus everything needed to run it on new audio.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub class_names: Vec<String>,
    pub stats: ChannelStats,
    /// Caller-defined context, e.g. the feature configuration used in training.
    pub metadata: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    input_shape: [usize; 3],
    class_names: Vec<String>,
    stats: ChannelStats,
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

impl Checkpoint {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let state = self.model.state();
        let header = Header {
            spec: self.model.spec().clone(),
            input_shape: self.model.input_shape(),
            class_names: self.class_names.clone(),
            stats: self.stats,
            metadata: self.metadata.clone(),
            tensors: state
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let meta = serde_json::to_vec(&header).map_err(|e| Error::invalid(format!("checkpoint header: {e}")))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(CHECKPOINT_FORMAT_VERSION);
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        for (name, t) in &state {
            t.ensure_finite(name)?;
            for &v in t.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 1 + 4 + 32 || &bytes[..4] != MAGIC {
            return Err(Error::Corrupt("not a checkpoint file".into()));
        }
        if bytes[4] != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(format!(
                "checkpoint format version {} (this build reads {})",
                bytes[4], CHECKPOINT_FORMAT_VERSION
            )));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Corrupt("checkpoint checksum mismatch".into()));
        }
        let meta_len = u32::from_le_bytes(body[5..9].try_into().expect("4 bytes")) as usize;
        let meta = body
            .get(9..9 + meta_len)
            .ok_or_else(|| Error::Corrupt("checkpoint header truncated".into()))?;
        let header: Header =
            serde_json::from_slice(meta).map_err(|e| Error::Corrupt(format!("checkpoint header: {e}")))?;
        let mut blobs = &body[9 + meta_len..];

        let mut model = Model::new(header.spec, header.input_shape, &mut rng(0))?;
        let mut state = model.state_mut();
        if state.len() != header.tensors.len() {
            return Err(Error::Corrupt("checkpoint tensor list does not match its model spec".into()));
        }
        for ((name, t), entry) in state.iter_mut().zip(&header.tensors) {
            if *name != entry.name || t.shape() != entry.shape.as_slice() {
                return Err(Error::Corrupt(format!("unexpected tensor {} {:?}", entry.name, entry.shape)));
            }
            let n = t.len() * 4;
            if blobs.len() < n {
                return Err(Error::Corrupt(format!("tensor {} truncated", entry.name)));
            }
            for (dst, src) in t.data_mut().iter_mut().zip(blobs[..n].chunks_exact(4)) {
                *dst = f32::from_le_bytes(src.try_into().expect("4 bytes")) as f64;
            }
            t.ensure_finite(name)?;
            blobs = &blobs[n..];
        }
        if !blobs.is_empty() {
            return Err(Error::Corrupt("trailing bytes after tensor data".into()));
        }
        Ok(Self {
            model,
            class_names: header.class_names,
            stats: header.stats,
            metadata: header.metadata,
        })
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint.encode()?).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{batchnorm::Mode, Tensor};
    use rand::Rng as _;

    fn sample() -> Checkpoint {
        let mut model = Model::new(ModelSpec::default(), [27, 27, 3], &mut rng(11)).unwrap();
        let mut r = rng(12);
        let x = Tensor::from_vec(&[4, 27, 27, 3], (0..4 * 27 * 27 * 3).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        model.forward(&x, Mode::Train).unwrap();
        Checkpoint {
            model,
            class_names: vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
            stats: ChannelStats { mean: [1.0, 2.0, 3.0], std: [0.5, 0.25, 4.0] },
            metadata: serde_json::json!({"k": 1}),
        }
    }

    #[test]
    fn round_trip_preserves_state_at_f32() {
        let ck = sample();
        let back = Checkpoint::decode(&ck.encode().unwrap()).unwrap();
        assert_eq!(back.class_names, ck.class_names);
        assert_eq!(back.stats, ck.stats);
        assert_eq!(back.metadata, ck.metadata);
        for ((na, a), (nb, b)) in ck.model.state().iter().zip(back.model.state()) {
            assert_eq!(na, &nb);
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!((*x as f32) as f64, *y);
            }
        }
        // Running statistics moved away from their initial values and survived.
        let rm = back.model.state().into_iter().find(|(n, _)| n.ends_with("running_mean")).unwrap().1.clone();
        assert!(rm.data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn any_flipped_byte_is_detected() {
        let bytes = sample().encode().unwrap();
        for pos in [5, 20, bytes.len() / 2, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[pos] ^= 0x40;
            assert!(matches!(Checkpoint::decode(&bad), Err(Error::Corrupt(_))), "byte {pos}");
        }
    }

    #[test]
    fn future_version_rejected() {
        let mut bytes = sample().encode().unwrap();
        bytes[4] = CHECKPOINT_FORMAT_VERSION + 1;
        assert!(matches!(Checkpoint::decode(&bytes), Err(Error::UnsupportedFormat(_))));
    }
}
