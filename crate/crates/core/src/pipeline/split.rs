use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::config::PipelineConfig;
use super::manifest::{ManifestEntry, Origin};
use super::load_clip;
use crate::audio_io::{write_wav, Waveform};
use crate::augment::{apply_variant, VARIANTS_PER_CLIP};
use crate::error::{Error, Result};
use crate::eval::stratified_split;
use crate::rng::derive_seed;

/// Result of splitting originals and planning augmentation of the training part.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    /// Training originals, each followed by its planned variants.
    pub train: Vec<ManifestEntry>,
    /// Originals held out from training for early stopping (never augmented).
    pub validation: Vec<ManifestEntry>,
    pub test: Vec<ManifestEntry>,
    /// Clip ids of the background-noise donors, in donor-index order.
    pub noise_pool: Vec<String>,
}

fn require_originals(entries: &[ManifestEntry]) -> Result<()> {
    match entries.iter().find(|e| e.origin != Origin::Original) {
        Some(e) => Err(Error::invalid(format!(
            "'{}' is an augmented clip; splitting takes originals only",
            e.clip_id
        ))),
        None => Ok(()),
    }
}

fn sorted(entries: &[ManifestEntry]) -> Vec<ManifestEntry> {
    let mut v = entries.to_vec();
    v.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    v
}

fn pick(entries: &[ManifestEntry], idx: &[usize]) -> Vec<ManifestEntry> {
    idx.iter().map(|&i| entries[i].clone()).collect()
}

/// Holds out validation originals and plans six variants for every remaining
/// original of an augmented class. Variant paths point into `variant_dir`.
pub fn plan_training(
    train_originals: &[ManifestEntry],
    cfg: &PipelineConfig,
    variant_dir: &Path,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>, Vec<String>)> {
    require_originals(train_originals)?;
    let originals = sorted(train_originals);
    let (fit, validation) = if cfg.validation_fraction > 0.0 {
        let labels: Vec<usize> = originals.iter().map(|e| e.label).collect();
        let s = stratified_split(&labels, cfg.validation_fraction, derive_seed(cfg.seed, "split/validation"))?;
        (pick(&originals, &s.train), pick(&originals, &s.eval))
    } else {
        (originals, Vec::new())
    };

    let mut pool: Vec<String> = fit
        .iter()
        .filter(|e| !cfg.augments(e.label))
        .map(|e| e.clip_id.clone())
        .collect();
    if pool.is_empty() {
        pool = fit.iter().map(|e| e.clip_id.clone()).collect();
    }

    let spec = cfg.augment_spec();
    let mut train = Vec::with_capacity(fit.len() * (1 + VARIANTS_PER_CLIP));
    for e in fit {
        let augment = cfg.augments(e.label);
        let id = e.clip_id.clone();
        let label = e.label;
        train.push(e);
        if !augment {
            continue;
        }
        let mut rng = spec.rng_for_clip(&id);
        for v in spec.draw(&mut rng, pool.len())? {
            let clip_id = format!("{id}__{}", v.kind.tag());
            train.push(ManifestEntry {
                path: variant_dir.join(format!("{}.wav", super::file_stem(&clip_id))),
                clip_id,
                label,
                origin: Origin::Augmented {
                    parent_id: id.clone(),
                    kind: v.kind,
                    op: v.op,
                },
            });
        }
    }
    Ok((train, validation, pool))
}

/// Stratified train/test split of the originals, then augmentation planning on the
/// training part only. Test clips are always originals.
pub fn split_then_augment(entries: &[ManifestEntry], cfg: &PipelineConfig, variant_dir: &Path) -> Result<SplitPlan> {
    require_originals(entries)?;
    let originals = sorted(entries);
    let labels: Vec<usize> = originals.iter().map(|e| e.label).collect();
    let s = stratified_split(&labels, cfg.test_fraction, derive_seed(cfg.seed, "split/test"))?;
    let test = pick(&originals, &s.eval);
    let (train, validation, noise_pool) = plan_training(&pick(&originals, &s.train), cfg, variant_dir)?;
    let plan = SplitPlan {
        train,
        validation,
        test,
        noise_pool,
    };
    audit_leakage(&plan.train, &plan.test)?;
    audit_leakage(&plan.train, &plan.validation)?;
    Ok(plan)
}

/// Fails if any training clip is, or derives from, a held-out clip.
pub fn audit_leakage(train: &[ManifestEntry], held_out: &[ManifestEntry]) -> Result<()> {
    audit_pairs(train.iter().map(|e| (e.clip_id.as_str(), e.root_id())), held_out)
}

/// [`audit_leakage`] over `(clip_id, root_id)` pairs.
pub fn audit_pairs<'a>(train: impl IntoIterator<Item = (&'a str, &'a str)>, held_out: &[ManifestEntry]) -> Result<()> {
    let held: HashSet<&str> = held_out.iter().flat_map(|e| [e.clip_id.as_str(), e.root_id()]).collect();
    for (id, root) in train {
        if held.contains(id) || held.contains(root) {
            return Err(Error::Leakage(format!(
                "training clip '{id}' (root '{root}') overlaps the held-out set"
            )));
        }
    }
    Ok(())
}

/// Loads the noise donors named by `pool` from the originals in `entries`.
pub fn load_noise_pool(pool: &[String], entries: &[ManifestEntry], duration: f64) -> Result<Vec<Waveform>> {
    let by_id: HashMap<&str, &ManifestEntry> = entries.iter().map(|e| (e.clip_id.as_str(), e)).collect();
    pool.iter()
        .map(|id| {
            let e = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::invalid(format!("noise donor '{id}' is not in the manifest")))?;
            load_clip(&e.path, duration)
        })
        .collect()
}

/// Renders the audio of any planned entry: originals are loaded, variants are
/// regenerated from their parent with the recorded operation.
pub fn render_entry(
    entry: &ManifestEntry,
    parents: &HashMap<&str, &ManifestEntry>,
    noise_pool: &[Waveform],
    duration: f64,
) -> Result<Waveform> {
    match &entry.origin {
        Origin::Original => load_clip(&entry.path, duration),
        Origin::Augmented { parent_id, op, .. } => {
            let parent = parents
                .get(parent_id.as_str())
                .ok_or_else(|| Error::invalid(format!("parent '{parent_id}' of '{}' is unknown", entry.clip_id)))?;
            apply_variant(&load_clip(&parent.path, duration)?, op, noise_pool)
        }
    }
}

/// Writes every planned variant of `plan.train` as a 16-bit WAV at its path.
pub fn materialize_variants(plan: &SplitPlan, cfg: &PipelineConfig) -> Result<usize> {
    let noise = load_noise_pool(&plan.noise_pool, &plan.train, cfg.canonical_duration)?;
    let mut written = 0;
    let mut current: Option<(String, Waveform)> = None;
    for e in &plan.train {
        match &e.origin {
            Origin::Original => current = None,
            Origin::Augmented { parent_id, op, .. } => {
                if current.as_ref().map(|(id, _)| id != parent_id).unwrap_or(true) {
                    let parent = plan
                        .train
                        .iter()
                        .find(|p| &p.clip_id == parent_id)
                        .ok_or_else(|| Error::invalid(format!("parent '{parent_id}' missing from plan")))?;
                    current = Some((parent_id.clone(), load_clip(&parent.path, cfg.canonical_duration)?));
                }
                let (_, parent) = current.as_ref().expect("loaded above");
                let out = apply_variant(parent, op, &noise)?;
                if let Some(dir) = e.path.parent() {
                    std::fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
                }
                write_wav(&e.path, &out)?;
                written += 1;
            }
        }
    }
    Ok(written)
}

/// Per-class counts `(train originals, train total, test)` for reporting.
pub fn class_counts(plan: &SplitPlan, n_classes: usize) -> Vec<(usize, usize, usize)> {
    let mut out = vec![(0, 0, 0); n_classes];
    for e in &plan.train {
        if e.origin == Origin::Original {
            out[e.label].0 += 1;
        }
        out[e.label].1 += 1;
    }
    for e in &plan.test {
        out[e.label].2 += 1;
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::CLASS_NAMES;
    use std::path::PathBuf;

    fn originals(per_class: &[usize]) -> Vec<ManifestEntry> {
        let mut v = Vec::new();
        for (label, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                v.push(ManifestEntry {
                    clip_id: format!("{}_{i:03}", CLASS_NAMES[label]),
                    path: PathBuf::from(format!("{}_{i:03}.wav", CLASS_NAMES[label])),
                    label,
                    origin: Origin::Original,
                });
            }
        }
        v
    }

    fn no_validation() -> PipelineConfig {
        PipelineConfig {
            validation_fraction: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn forty_crash_clips_become_224_training_samples() {
        let plan = split_then_augment(&originals(&[50, 40, 40, 40, 40]), &no_validation(), Path::new("aug")).unwrap();
        let counts = class_counts(&plan, 5);
        assert_eq!(counts[1], (32, 224, 8));
        // Urban is not augmented: training count equals training originals.
        assert_eq!(counts[0], (40, 40, 10));
        assert_eq!(plan.noise_pool.len(), 40);
    }

    #[test]
    fn test_clips_never_parent_training_clips() {
        let plan = split_then_augment(&originals(&[20, 20, 20, 20, 20]), &PipelineConfig::default(), Path::new("a")).unwrap();
        let test: HashSet<&str> = plan.test.iter().map(|e| e.clip_id.as_str()).collect();
        assert!(plan.train.iter().all(|e| !test.contains(e.root_id())));
        assert!(plan.test.iter().chain(&plan.validation).all(|e| e.origin == Origin::Original));
    }

    #[test]
    fn leakage_audit_catches_a_planted_variant() {
        let plan = split_then_augment(&originals(&[10, 10, 10, 10, 10]), &no_validation(), Path::new("a")).unwrap();
        let mut train = plan.train.clone();
        let victim = plan.test.iter().find(|e| e.label == 2).unwrap();
        let mut planted = train.iter().find(|e| e.origin != Origin::Original).unwrap().clone();
        if let Origin::Augmented { parent_id, .. } = &mut planted.origin {
            *parent_id = victim.clip_id.clone();
        }
        train.push(planted);
        assert!(matches!(audit_leakage(&train, &plan.test), Err(Error::Leakage(_))));
    }

    #[test]
    fn singleton_class_rejected() {
        assert!(split_then_augment(&originals(&[10, 1, 10, 10, 10]), &no_validation(), Path::new("a")).is_err());
    }

    #[test]
    fn augmented_input_rejected() {
        let mut e = originals(&[3, 3, 3, 3, 3]);
        e[0].origin = Origin::Augmented {
            parent_id: e[1].clip_id.clone(),
            kind: crate::augment::VariantKind::TimeShift,
            op: crate::augment::AugmentOp::TimeShift { fraction: 0.1 },
        };
        assert!(split_then_augment(&e, &no_validation(), Path::new("a")).is_err());
    }

    #[test]
    fn plan_is_deterministic_and_order_independent() {
        let e = originals(&[12, 12, 12, 12, 12]);
        let mut rev = e.clone();
        rev.reverse();
        let cfg = PipelineConfig::default();
        assert_eq!(
            split_then_augment(&e, &cfg, Path::new("a")).unwrap(),
            split_then_augment(&rev, &cfg, Path::new("a")).unwrap()
        );
    }
}
