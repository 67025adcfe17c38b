//! Command-line harness: `gen-data`, `train`, `eval`, `fuse`, `sweep`, `gradcheck`.
//!
//! Every artifact is written through [`crate::io::write_atomic`], so an
//! interrupted run leaves either the old file or nothing at the target path.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::{
    load_corpus, save_corpus, stratified_split, synthesize_corpus, Corpus, GeneratorConfig, Sample,
    GENERATOR_CONFIG_KEYS,
};
use crate::error::{Error, Result};
use crate::experiment::{run_gradcheck, run_sweep, GradcheckShape, GRADCHECK_TOLERANCE};
use crate::io::{read_to_string, write_atomic, write_json};
use crate::math::TaskProbs;
use crate::metrics::{margin_fusion, MetricsReport};
use crate::trainer::{
    epochs_to_csv, metrics_from_probs, predict, predictions_for, read_predictions, train, write_predictions,
    Checkpoint, EpochReport, TrainConfig, TRAIN_CONFIG_KEYS,
};

#[derive(Debug, Parser)]
#[command(name = "fullmatch", version, about = "Semi-supervised multi-task training toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labelled + unlabelled corpus.
    GenData {
        /// Generator config (`key = value`); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; the corpus is written to `corpus.jsonl`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model and write checkpoint, epoch CSV and summary JSON.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on one split of a corpus.
    Eval {
        #[arg(long, num_args = 1)]
        checkpoints: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitName,
    },
    /// Margin-sampling fusion of two or more prediction files.
    Fuse {
        /// Prediction files (`*_predictions.jsonl`) over the same samples.
        #[arg(long, num_args = 2.., required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the method × augmentation × ablation grid and tabulate it.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Grid cells trained concurrently (default: available cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random batches per loss configuration.
        #[arg(long, default_value_t = 20)]
        batches: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitName {
    Train,
    Valid,
    Test,
}

fn keys_help(title: &str, keys: &[(&str, &str)]) -> String {
    let width = keys.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = format!("{title}:\n");
    for (k, d) in keys {
        s.push_str(&format!("  {k:width$}  {d}\n"));
    }
    s
}

fn command() -> clap::Command {
    let train_keys = keys_help("Training config keys (`key = value`, `#` comments)", TRAIN_CONFIG_KEYS);
    let gen_keys = keys_help(
        "Generator config keys (`key = value`, `#` comments)",
        GENERATOR_CONFIG_KEYS,
    );
    let mut cmd = Cli::command();
    for name in ["train", "eval", "fuse", "sweep", "gradcheck"] {
        let help = train_keys.clone();
        cmd = cmd.mut_subcommand(name, move |c| c.after_help(help));
    }
    cmd.mut_subcommand("gen-data", move |c| c.after_help(gen_keys))
}

/// Parses `argv` (program name first) and runs the subcommand.
/// Returns 0 on success, 2 on usage errors and 1 on any other failure.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ))
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn load_train_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = match path {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenData { config, out, seed } => gen_data(config.as_deref(), &out, seed),
        Command::Train {
            config,
            corpus,
            out,
            seed,
        } => {
            if let Some(c) = &config {
                require_file(c)?;
            }
            require_file(&corpus)?;
            let cfg = load_train_config(config.as_deref(), seed)?;
            train_command(&cfg, &corpus, &out)
        }
        Command::Eval {
            checkpoints,
            corpus,
            out,
            split,
        } => {
            require_file(&checkpoints)?;
            require_file(&corpus)?;
            eval_command(&checkpoints, &corpus, &out, split)
        }
        Command::Fuse { checkpoints, out } => {
            for p in &checkpoints {
                require_file(p)?;
            }
            fuse_command(&checkpoints, &out)
        }
        Command::Sweep {
            config,
            corpus,
            out,
            seed,
            threads,
        } => {
            if let Some(c) = &config {
                require_file(c)?;
            }
            require_file(&corpus)?;
            let cfg = load_train_config(config.as_deref(), seed)?;
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            sweep_command(&cfg, &corpus, &out, threads)
        }
        Command::Gradcheck { seed, batches } => gradcheck_command(seed, batches),
    }
}

fn gen_data(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = match config {
        Some(p) => GeneratorConfig::from_text(&read_to_string(p)?, &p.display().to_string())?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    ensure_dir(out)?;
    let corpus = synthesize_corpus(&cfg)?;
    let path = out.join("corpus.jsonl");
    save_corpus(&corpus, &path)?;
    println!(
        "wrote {} ({} labelled, {} unlabelled)",
        path.display(),
        corpus.labelled.len(),
        corpus.unlabelled.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    method: String,
    seed: u64,
    epochs: usize,
    best_epoch: usize,
    best_valid: &'a MetricsReport,
    test: Option<MetricsReport>,
    train_samples: usize,
    valid_samples: usize,
    test_samples: usize,
    final_epoch: Option<&'a EpochReport>,
}

fn train_command(cfg: &TrainConfig, corpus_path: &Path, out: &Path) -> Result<()> {
    let corpus = load_corpus(corpus_path)?;
    ensure_dir(out)?;
    let outcome = train(cfg, &corpus)?;
    let featurizer = outcome.featurizer.bind(&corpus.embedding_table);
    let (ce, ci) = (corpus.emotion_classes(), corpus.intent_classes());

    let valid_probs = predict(&outcome.model, &outcome.valid, &featurizer)?;
    write_predictions(
        &out.join("valid_predictions.jsonl"),
        &predictions_for(&outcome.valid, &valid_probs)?,
    )?;
    let test = if outcome.test.is_empty() {
        None
    } else {
        let probs = predict(&outcome.model, &outcome.test, &featurizer)?;
        write_predictions(
            &out.join("test_predictions.jsonl"),
            &predictions_for(&outcome.test, &probs)?,
        )?;
        Some(metrics_from_probs(&probs, &outcome.test, ce, ci)?)
    };

    let checkpoint = Checkpoint {
        model: outcome.model.clone(),
        featurizer: outcome.featurizer,
        config: cfg.clone(),
        best_epoch: outcome.best_epoch,
        emotion_names: corpus.label_names.emotion.clone(),
        intent_names: corpus.label_names.intent.clone(),
    };
    write_json(&out.join("checkpoint.json"), &checkpoint)?;
    write_atomic(&out.join("epochs.csv"), epochs_to_csv(&outcome.reports).as_bytes())?;
    write_atomic(&out.join("config.cfg"), cfg.to_text().as_bytes())?;
    let best_valid = &outcome.reports[outcome.best_epoch].valid;
    let summary = TrainSummary {
        method: cfg.method.to_string(),
        seed: cfg.seed,
        epochs: cfg.epochs,
        best_epoch: outcome.best_epoch,
        best_valid,
        test: test.clone(),
        train_samples: outcome.train.len(),
        valid_samples: outcome.valid.len(),
        test_samples: outcome.test.len(),
        final_epoch: outcome.reports.last(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "best epoch {} valid JRBM {:.4}{}",
        outcome.best_epoch,
        best_valid.jrbm,
        test.map(|t| format!(" test JRBM {:.4}", t.jrbm)).unwrap_or_default()
    );
    Ok(())
}

fn split_samples(corpus: &Corpus, cfg: &TrainConfig, split: SplitName) -> Result<Vec<Sample>> {
    let labelled: Vec<Sample> = corpus
        .labelled
        .iter()
        .filter(|s| s.modality() == cfg.modality)
        .cloned()
        .collect();
    let parts = stratified_split(&labelled, &cfg.split_spec())?;
    Ok(match split {
        SplitName::Train => parts.train,
        SplitName::Valid => parts.valid,
        SplitName::Test => parts.test,
    })
}

fn write_report(out: &Path, report: &MetricsReport, emotion_names: &[String], intent_names: &[String]) -> Result<()> {
    write_json(&out.join("metrics.json"), report)?;
    write_atomic(
        &out.join("confusion_emotion.csv"),
        report.confusion_emotion.to_csv(emotion_names).as_bytes(),
    )?;
    write_atomic(
        &out.join("confusion_intent.csv"),
        report.confusion_intent.to_csv(intent_names).as_bytes(),
    )
}

fn eval_command(checkpoint: &Path, corpus_path: &Path, out: &Path, split: SplitName) -> Result<()> {
    let cp = Checkpoint::load(checkpoint)?;
    let corpus = load_corpus(corpus_path)?;
    let samples = split_samples(&corpus, &cp.config, split)?;
    if samples.is_empty() {
        return Err(Error::config(format!("the {split:?} split is empty")));
    }
    ensure_dir(out)?;
    let featurizer = cp.featurizer.bind(&corpus.embedding_table);
    let probs = predict(&cp.model, &samples, &featurizer)?;
    let report = metrics_from_probs(&probs, &samples, cp.model.emotion_classes(), cp.model.intent_classes())?;
    write_predictions(&out.join("predictions.jsonl"), &predictions_for(&samples, &probs)?)?;
    write_report(out, &report, &cp.emotion_names, &cp.intent_names)?;
    println!(
        "F1 emotion {:.4} F1 intent {:.4} JRBM {:.4}",
        report.f1_emotion, report.f1_intent, report.jrbm
    );
    Ok(())
}

fn fuse_command(files: &[PathBuf], out: &Path) -> Result<()> {
    let tables: Vec<_> = files.iter().map(|p| read_predictions(p)).collect::<Result<_>>()?;
    let first = &tables[0];
    if first.is_empty() {
        return Err(Error::config(format!("{} holds no predictions", files[0].display())));
    }
    for (table, path) in tables.iter().zip(files).skip(1) {
        let same = table.len() == first.len()
            && table
                .iter()
                .zip(first)
                .all(|(a, b)| a.id == b.id && a.emotion == b.emotion && a.intent == b.intent);
        if !same {
            return Err(Error::config(format!(
                "{} does not cover the same samples as {}",
                path.display(),
                files[0].display()
            )));
        }
    }
    let probs: Vec<Vec<TaskProbs>> = tables.iter().map(|t| t.iter().map(|p| p.probs()).collect()).collect();
    let fused = margin_fusion(&probs)?;
    let (ce, ci) = (first[0].emotion_probs.len(), first[0].intent_probs.len());
    let pe: Vec<usize> = fused.iter().map(|f| f.0).collect();
    let pi: Vec<usize> = fused.iter().map(|f| f.1).collect();
    let ye: Vec<usize> = first.iter().map(|p| p.emotion).collect();
    let yi: Vec<usize> = first.iter().map(|p| p.intent).collect();
    let report = MetricsReport::from_predictions((&pe, &ye), (&pi, &yi), ce, ci)?;
    ensure_dir(out)?;
    let names = |n: usize| (0..n).map(|c| c.to_string()).collect::<Vec<_>>();
    write_report(out, &report, &names(ce), &names(ci))?;
    println!(
        "fused {} models: F1 emotion {:.4} F1 intent {:.4} JRBM {:.4}",
        files.len(),
        report.f1_emotion,
        report.f1_intent,
        report.jrbm
    );
    Ok(())
}

fn sweep_command(cfg: &TrainConfig, corpus_path: &Path, out: &Path, threads: usize) -> Result<()> {
    let corpus = load_corpus(corpus_path)?;
    ensure_dir(out)?;
    let result = run_sweep(cfg, &corpus, threads, Some(out))?;
    let csv = result.to_csv();
    write_atomic(&out.join("sweep.csv"), csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn gradcheck_command(seed: u64, batches: usize) -> Result<()> {
    if batches == 0 {
        return Err(Error::config("batches must be at least 1"));
    }
    let report = run_gradcheck(seed, batches, &GradcheckShape::default())?;
    for r in &report.results {
        println!(
            "{:<22} max relative error {:.3e} ({} batches, {} with active unlabelled terms)",
            r.case, r.max_relative_error, r.batches, r.active_batches
        );
    }
    let worst = report.max_relative_error();
    println!("max relative error {worst:.3e}");
    if report.passed() {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "max relative error {worst:.3e} exceeds {GRADCHECK_TOLERANCE:e}"
        )))
    }
}
