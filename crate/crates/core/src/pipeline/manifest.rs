//! Delimited-text clip manifests.
//!
//! The header is `clip_id,path,label`. Augmented clips add `parent_id`, `aug_type` and
//! `params` (the drawn operation as JSON); those columns are empty for originals.
//! Relative paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{class_index, CLASS_NAMES};
use crate::augment::{AugmentOp, VariantKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum Origin {
    Original,
    Augmented {
        parent_id: String,
        kind: VariantKind,
        op: AugmentOp,
    },
}

impl Origin {
    pub fn parent_id(&self) -> Option<&str> {
        match self {
            Origin::Original => None,
            Origin::Augmented { parent_id, .. } => Some(parent_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub path: PathBuf,
    /// Index into [`CLASS_NAMES`].
    pub label: usize,
    pub origin: Origin,
}

impl ManifestEntry {
    pub fn label_name(&self) -> &'static str {
        CLASS_NAMES[self.label]
    }

    /// The original clip this entry derives from (itself for originals).
    pub fn root_id(&self) -> &str {
        self.origin.parent_id().unwrap_or(&self.clip_id)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    clip_id: String,
    path: String,
    label: String,
    #[serde(default)]
    parent_id: Option<String>,
    #[serde(default)]
    aug_type: Option<String>,
    #[serde(default)]
    params: Option<String>,
}

/// Parses manifest text. `base` anchors relative paths; file existence is not checked.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::Fields).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::invalid(format!("manifest header: {e}")))?
        .clone();
    for required in ["clip_id", "path", "label"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::invalid(format!("manifest header lacks column '{required}'")));
        }
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::invalid(format!("manifest row {line}: {e}")))?;
        let label_text = row.label.trim().to_lowercase();
        let label = class_index(&label_text).ok_or_else(|| {
            Error::invalid(format!(
                "manifest row {line}: unknown label '{}' (expected one of {})",
                row.label,
                CLASS_NAMES.join(", ")
            ))
        })?;
        if row.clip_id.is_empty() {
            return Err(Error::invalid(format!("manifest row {line}: empty clip_id")));
        }
        if !seen.insert(row.clip_id.clone()) {
            return Err(Error::invalid(format!("duplicate clip_id '{}' at row {line}", row.clip_id)));
        }
        let nonempty = |v: Option<String>| v.filter(|s| !s.is_empty());
        let origin = match (nonempty(row.parent_id), nonempty(row.aug_type), nonempty(row.params)) {
            (None, None, None) => Origin::Original,
            (Some(parent_id), Some(kind), Some(params)) => Origin::Augmented {
                parent_id,
                kind: kind.parse()?,
                op: serde_json::from_str(&params)
                    .map_err(|e| Error::invalid(format!("manifest row {line}: params: {e}")))?,
            },
            _ => {
                return Err(Error::invalid(format!(
                    "manifest row {line}: parent_id, aug_type and params must be given together"
                )))
            }
        };
        let path = PathBuf::from(&row.path);
        entries.push(ManifestEntry {
            clip_id: row.clip_id,
            path: if path.is_absolute() { path } else { base.join(path) },
            label,
            origin,
        });
    }
    check_provenance(&entries)?;
    Ok(entries)
}

/// Every augmented entry must name an original parent present in the same list, with
/// the same label.
pub fn check_provenance(entries: &[ManifestEntry]) -> Result<()> {
    let originals: std::collections::HashMap<&str, usize> = entries
        .iter()
        .filter(|e| e.origin == Origin::Original)
        .map(|e| (e.clip_id.as_str(), e.label))
        .collect();
    for e in entries {
        if let Some(parent) = e.origin.parent_id() {
            match originals.get(parent) {
                Some(&label) if label == e.label => {}
                Some(_) => {
                    return Err(Error::invalid(format!(
                        "clip '{}' has a different label from its parent '{parent}'",
                        e.clip_id
                    )))
                }
                None => {
                    return Err(Error::invalid(format!(
                        "clip '{}' names parent '{parent}', which is not an original in the manifest",
                        e.clip_id
                    )))
                }
            }
        }
    }
    Ok(())
}

/// Reads and validates a manifest; every referenced file must exist.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&text, base)?;
    for e in &entries {
        if !e.path.is_file() {
            return Err(Error::io(
                &e.path,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("clip '{}' not found", e.clip_id)),
            ));
        }
    }
    Ok(entries)
}

/// Writes entries. Paths under the manifest directory are stored relative to it, all
/// others as absolute paths.
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let absolute = |p: &Path| std::path::absolute(p).map_err(|e| Error::io(p, e));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let base = absolute(dir)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for e in entries {
        let abs = absolute(&e.path)?;
        let rel = abs.strip_prefix(&base).unwrap_or(&abs);
        let (parent_id, aug_type, params) = match &e.origin {
            Origin::Original => (None, None, None),
            Origin::Augmented { parent_id, kind, op } => (
                Some(parent_id.clone()),
                Some(kind.tag().to_string()),
                Some(serde_json::to_string(op).expect("op serialises")),
            ),
        };
        writer
            .serialize(Row {
                clip_id: e.clip_id.clone(),
                path: rel.to_string_lossy().into_owned(),
                label: e.label_name().to_string(),
                parent_id,
                aug_type,
                params,
            })
            .map_err(|err| Error::invalid(format!("manifest row for '{}': {err}", e.clip_id)))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
