use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use roadaudio::eval::{write_report, CvSummary};
use roadaudio::nn::{read_checkpoint, write_checkpoint};
use roadaudio::pipeline::{
    self, build_feature_cache, config_from_checkpoint, evaluate_checkpoint, generate_synthetic_corpus,
    load_cached_features, load_manifest, materialize_variants, predict_clip, run_cv, split_then_augment,
    train_model, write_manifest, ManifestEntry, Origin, PipelineConfig, SyntheticCorpusSpec, CONFIG_TEMPLATE,
};
use roadaudio::{Error, Result, CHECKPOINT_FORMAT_VERSION, FEATURE_CACHE_FORMAT_VERSION};

fn long_version() -> &'static str {
    Box::leak(
        format!(
            "{} (checkpoint format v{CHECKPOINT_FORMAT_VERSION}, feature cache format v{FEATURE_CACHE_FORMAT_VERSION})",
            env!("CARGO_PKG_VERSION")
        )
        .into_boxed_str(),
    )
}

#[derive(Parser)]
#[command(name = "roadaudio", version, long_version = long_version(), about = "Roadway incident audio classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration file (flat TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic five-class corpus and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        clips_per_class: usize,
        /// Defaults to the configured canonical duration.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = 22050)]
        sample_rate: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Split originals into train/validation/test and write augmented training clips.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fill the feature cache for one or more manifests.
    Features {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        cache: PathBuf,
        /// Rebuild records even when they are current.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Train on cached features and write a checkpoint plus training history.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.history.json`.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write metrics reports (`<out>.json`, `<out>.txt`) for a checkpoint on held-out
    /// clips, or run repeated-split cross-validation with `--cv`.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, required_unless_present = "cv")]
        checkpoint: Option<PathBuf>,
        #[arg(long, required_unless_present = "cv")]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Cross-validate over the originals in `--manifest` instead.
        #[arg(long)]
        cv: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Print class probabilities and the predicted label for one WAV file.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        wav: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the annotated default configuration.
    Config {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn render_cv(summary: &CvSummary) -> String {
    let row = |name: &str, q: &roadaudio::eval::Quartiles| {
        format!(
            "{name:<28}  min {:.4}  q1 {:.4}  median {:.4}  q3 {:.4}  max {:.4}\n",
            q.min, q.q1, q.median, q.q3, q.max
        )
    };
    let mut s = format!("{} repeats\n", summary.reports.len());
    s += &row("accuracy", &summary.accuracy);
    s += &row("macro precision", &summary.macro_precision);
    s += &row("macro recall", &summary.macro_recall);
    s += &row("macro f1", &summary.macro_f1);
    s += &row("overall false positive rate", &summary.overall_false_positive_rate);
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            out,
            clips_per_class,
            duration,
            sample_rate,
            common,
        } => {
            let cfg = common.load()?;
            let spec = SyntheticCorpusSpec {
                clips_per_class,
                duration: duration.unwrap_or(cfg.canonical_duration),
                sample_rate,
                seed: cfg.seed,
            };
            let (_, report) = generate_synthetic_corpus(&spec, &out)?;
            eprintln!(
                "wrote {} clips and {}; 1-NN leave-one-out accuracy {:.4}",
                report.clips,
                out.join("manifest.csv").display(),
                report.nn_accuracy
            );
        }
        Command::Augment { manifest, out, common } => {
            let cfg = common.load()?;
            let entries = load_manifest(&manifest)?;
            create_dir(&out)?;
            let plan = split_then_augment(&entries, &cfg, &out.join("wav"))?;
            let n = materialize_variants(&plan, &cfg)?;
            write_manifest(&out.join("train.csv"), &plan.train)?;
            write_manifest(&out.join("validation.csv"), &plan.validation)?;
            write_manifest(&out.join("test.csv"), &plan.test)?;
            for (k, (orig, total, test)) in pipeline::split::class_counts(&plan, 5).iter().enumerate() {
                eprintln!(
                    "{:<10} train originals {orig:>4}  train total {total:>5}  test {test:>4}",
                    pipeline::CLASS_NAMES[k]
                );
            }
            eprintln!("wrote {n} augmented clips; manifests in {}", out.display());
        }
        Command::Features {
            manifests,
            cache,
            force,
            common,
        } => {
            let cfg = common.load()?;
            let mut fill = pipeline::CacheFill::default();
            for m in &manifests {
                let f = build_feature_cache(&load_manifest(m)?, &cache, &cfg, force)?;
                fill.written += f.written;
                fill.reused += f.reused;
            }
            eprintln!("feature cache {}: {} written, {} current", cache.display(), fill.written, fill.reused);
        }
        Command::Train {
            train,
            validation,
            cache,
            out,
            history,
            common,
        } => {
            let cfg = common.load()?;
            let train_entries = load_manifest(&train)?;
            let train_volumes = load_cached_features(&train_entries, &cache, &cfg)?;
            let val_entries: Vec<ManifestEntry> = match &validation {
                Some(p) => load_manifest(p)?,
                None => Vec::new(),
            };
            let val_volumes = load_cached_features(&val_entries, &cache, &cfg)?;
            let result = train_model(&train_entries, &train_volumes, &val_entries, &val_volumes, &cfg)?;
            for e in &result.history.epochs {
                eprintln!(
                    "epoch {:>3}  loss {:.4}  acc {:.4}{}",
                    e.epoch,
                    e.train_loss,
                    e.train_accuracy,
                    match (e.val_loss, e.val_accuracy) {
                        (Some(l), Some(a)) => format!("  val loss {l:.4}  val acc {a:.4}"),
                        _ => String::new(),
                    }
                );
            }
            write_checkpoint(&out, &result.checkpoint)?;
            let history = history.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".history.json");
                p.into()
            });
            write_json(&history, &result.history)?;
            eprintln!("checkpoint {} (best epoch {})", out.display(), result.history.best_epoch);
        }
        Command::Eval {
            manifest,
            checkpoint,
            cache,
            out,
            cv,
            common,
        } => {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            if cv {
                let cfg = common.load()?;
                let entries = load_manifest(&manifest)?;
                let originals: Vec<ManifestEntry> =
                    entries.into_iter().filter(|e| e.origin == Origin::Original).collect();
                let summary = run_cv(&originals, &cfg, |r, rep| {
                    eprintln!("repeat {r}: accuracy {:.4}  macro f1 {:.4}", rep.accuracy, rep.macro_f1);
                })?;
                write_json(&out.with_extension("json"), &summary)?;
                let text = render_cv(&summary);
                std::fs::write(out.with_extension("txt"), &text).map_err(|e| Error::Io {
                    path: out.with_extension("txt"),
                    source: e,
                })?;
                print!("{text}");
            } else {
                let (checkpoint, cache) = (checkpoint.expect("required by clap"), cache.expect("required by clap"));
                let ck = read_checkpoint(&checkpoint)?;
                let cfg = config_from_checkpoint(&ck)?;
                let entries = load_manifest(&manifest)?;
                let volumes = load_cached_features(&entries, &cache, &cfg)?;
                let report = evaluate_checkpoint(&ck, &entries, &volumes)?;
                write_report(&out, &report)?;
                print!("{}", roadaudio::eval::render_table(&report));
            }
        }
        Command::Predict { checkpoint, wav, .. } => {
            let ck = read_checkpoint(&checkpoint)?;
            let probs = predict_clip(&ck, &wav)?;
            for (name, p) in ck.class_names.iter().zip(&probs) {
                println!("{name}\t{p:.6}");
            }
            let best = probs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |a, (i, &p)| if p > a.1 { (i, p) } else { a })
                .0;
            println!("label\t{}", ck.class_names[best]);
        }
        Command::Config { out } => match out {
            Some(p) => std::fs::write(&p, CONFIG_TEMPLATE).map_err(|e| Error::Io { path: p, source: e })?,
            None => print!("{CONFIG_TEMPLATE}"),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
            eprintln!("error: kind={} msg=\"{msg}\"", e.kind());
            ExitCode::FAILURE
        }
    }
}
