use std::path::{Path, PathBuf};

use super::config::PipelineConfig;
use super::manifest::ManifestEntry;
use super::{file_stem, load_clip};
use crate::audio_io::Waveform;
use crate::dsp::cache::{read_record, read_record_checked, write_record, CacheRecord, RecordHeader};
use crate::dsp::{extract_feature_volume, FeatureVolume};
use crate::error::{Error, Result};

pub fn cache_path(cache_dir: &Path, clip_id: &str) -> PathBuf {
    cache_dir.join(format!("{}.rafv", file_stem(clip_id)))
}

fn provenance(entry: &ManifestEntry) -> serde_json::Value {
    let mut v = serde_json::to_value(&entry.origin).expect("origin serialises");
    v["label"] = entry.label_name().into();
    v
}

pub fn volume_for(w: &Waveform, cfg: &PipelineConfig) -> Result<FeatureVolume> {
    extract_feature_volume(w, &cfg.features)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheFill {
    pub written: usize,
    pub reused: usize,
}

/// Extracts features for every entry whose record is missing or was built under a
/// different configuration. `force` rebuilds everything.
pub fn build_feature_cache(
    entries: &[ManifestEntry],
    cache_dir: &Path,
    cfg: &PipelineConfig,
    force: bool,
) -> Result<CacheFill> {
    std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let hash = cfg.feature_hash();
    let mut fill = CacheFill::default();
    for e in entries {
        let path = cache_path(cache_dir, &e.clip_id);
        if !force && path.is_file() {
            if let Ok(r) = read_record(&path) {
                if r.config_hash == hash && r.header.clip_id == e.clip_id && r.header.provenance == provenance(e) {
                    fill.reused += 1;
                    continue;
                }
            }
        }
        let volume = volume_for(&load_clip(&e.path, cfg.canonical_duration)?, cfg)?;
        write_record(
            &path,
            &CacheRecord {
                config_hash: hash,
                header: RecordHeader {
                    clip_id: e.clip_id.clone(),
                    provenance: provenance(e),
                },
                volume,
            },
        )?;
        fill.written += 1;
    }
    Ok(fill)
}

/// Reads cached volumes, refusing records built under another configuration or for
/// a different clip.
pub fn load_cached_features(entries: &[ManifestEntry], cache_dir: &Path, cfg: &PipelineConfig) -> Result<Vec<FeatureVolume>> {
    let hash = cfg.feature_hash();
    entries
        .iter()
        .map(|e| {
            let path = cache_path(cache_dir, &e.clip_id);
            if !path.is_file() {
                return Err(Error::StaleCache(format!(
                    "no cached features for '{}' in {}; re-run `features`",
                    e.clip_id,
                    cache_dir.display()
                )));
            }
            let r = read_record_checked(&path, &hash)?;
            if r.header.clip_id != e.clip_id || r.header.provenance != provenance(e) {
                return Err(Error::StaleCache(format!(
                    "{} does not match manifest entry '{}'; re-run `features`",
                    path.display(),
                    e.clip_id
                )));
            }
            if r.volume.shape() != cfg.features.shape() {
                return Err(Error::StaleCache(format!("{} has shape {:?}", path.display(), r.volume.shape())));
            }
            Ok(r.volume)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::manifest::Origin;
    use crate::pipeline::plan_training;

    #[test]
    fn drawn_provenance_survives_json_text() {
        let originals: Vec<ManifestEntry> = (0..40)
            .map(|i| ManifestEntry {
                clip_id: format!("c{i}"),
                path: format!("c{i}.wav").into(),
                label: 1,
                origin: Origin::Original,
            })
            .collect();
        let cfg = PipelineConfig { validation_fraction: 0.0, ..PipelineConfig::default() };
        let (train, _, _) = plan_training(&originals, &cfg, Path::new("v")).unwrap();
        for e in &train {
            let p = provenance(e);
            let back: serde_json::Value = serde_json::from_str(&p.to_string()).unwrap();
            assert_eq!(back, p, "{}", e.clip_id);
        }
    }
}
