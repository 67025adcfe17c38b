//! Training loop: batching, augmentation, featurization, the loss stack and
//! Adam, with per-epoch validation and best-JRBM checkpoint selection.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{
    augment_signal, augment_tokens, featurize_signal, featurize_tokens, AugmentKind, AugmentParams, EmbeddingTable,
    Modality, SynonymLexicon,
};
use crate::data::{histogram_cell, make_batches, stratified_split, stream_rng, Corpus, Payload, Sample, SplitSpec};
use crate::error::{Error, Result};
use crate::io::{parse_key_values, parse_value, read_to_string, write_atomic};
use crate::math::{
    adam_step, argmax, backprop, forward, AdamConfig, AdamState, FeatureVector, TaskProbs, TwoHeadModel,
};
use crate::metrics::MetricsReport;
use crate::ssl::{LossBreakdown, Method, SslObjective, SslParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub modality: Modality,
    /// `None` picks the modality's first weak operator.
    pub weak_aug_kind: Option<AugmentKind>,
    /// `None` picks the modality's strong operator.
    pub strong_aug_kind: Option<AugmentKind>,
    pub weak_aug_on_unlabelled: bool,
    pub epochs: usize,
    pub labelled_batch_size: usize,
    /// Unlabelled samples per labelled sample in each step (μ).
    pub unlabelled_ratio: f64,
    pub lr0: f64,
    pub lr_decay: f64,
    pub tau: f64,
    pub sigma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Intent-loss weight λ.
    pub lambda: f64,
    pub hidden: usize,
    pub seed: u64,
    pub split_train: f64,
    pub split_valid: f64,
    pub split_test: f64,
    pub signal_bins: usize,
    /// `None` uses the longest token sequence in the corpus.
    pub token_max_length: Option<usize>,
    pub augment: AugmentParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::FullMatch,
            modality: Modality::Signal,
            weak_aug_kind: None,
            strong_aug_kind: None,
            weak_aug_on_unlabelled: true,
            epochs: 30,
            labelled_batch_size: 16,
            unlabelled_ratio: 1.0,
            lr0: 3e-5,
            lr_decay: 0.9,
            tau: 0.95,
            sigma: 0.99,
            lambda1: 0.5,
            lambda2: 0.5,
            lambda3: 0.5,
            lambda: 1.0,
            hidden: 64,
            seed: 0,
            split_train: 0.7,
            split_valid: 0.15,
            split_test: 0.15,
            signal_bins: 16,
            token_max_length: None,
            augment: AugmentParams::default(),
        }
    }
}

/// `(key, description)` for every config-file key, in file order.
pub const TRAIN_CONFIG_KEYS: &[(&str, &str)] = &[
    ("method", "baseline | fixmatch | fullmatch (default fullmatch)"),
    ("modality", "signal | tokens (default signal)"),
    (
        "weak_aug_kind",
        "flip | time_mask | pitch_shift | swap | delete | synonym | auto",
    ),
    ("strong_aug_kind", "gaussian_noise | contextual | auto"),
    (
        "weak_aug_on_unlabelled",
        "true | false: weak branch of unlabelled data augmented or identity",
    ),
    ("epochs", "number of epochs (default 30)"),
    ("labelled_batch_size", "labelled samples per step (default 16)"),
    (
        "unlabelled_ratio",
        "unlabelled samples per labelled sample per step (default 1)",
    ),
    ("lr0", "initial Adam learning rate (default 3e-5)"),
    ("lr_decay", "per-epoch learning-rate factor (default 0.9)"),
    ("tau", "pseudo-label confidence threshold (default 0.95)"),
    ("sigma", "top-k agreement threshold (default 0.99)"),
    ("lambda1", "pseudo-label loss weight (default 0.5)"),
    ("lambda2", "adaptive negative loss weight (default 0.5)"),
    ("lambda3", "entropy meaning loss weight (default 0.5)"),
    ("lambda", "intent task weight (default 1)"),
    ("hidden", "shared hidden width (default 64)"),
    (
        "seed",
        "seed for splitting, initialization, batching and augmentation (default 0)",
    ),
    ("split_train", "train fraction of the labelled pool (default 0.7)"),
    ("split_valid", "validation fraction (default 0.15)"),
    ("split_test", "test fraction (default 0.15)"),
    ("signal_bins", "spans in the signal featurizer (default 16)"),
    ("token_max_length", "length normalizer for token features, or auto"),
    ("flip_max_frames", "longest flipped segment in frames (default 100000)"),
    ("mask_max_frames", "longest masked span in frames (default 30000)"),
    ("pitch_max_steps", "largest pitch shift in semitones (default 4)"),
    ("noise_scale", "Gaussian noise scale (default 0.05)"),
    ("swap_count", "adjacent swaps per sequence (default 1)"),
    ("delete_prob", "per-token deletion probability (default 0.1)"),
    (
        "synonym_prob",
        "per-token synonym replacement probability (default 0.15)",
    ),
    (
        "contextual_n",
        "embedding neighbours considered for contextual replacement (default 5)",
    ),
    (
        "contextual_prob",
        "per-token contextual replacement probability (default 0.15)",
    ),
];

fn parse_auto<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl TrainConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.augment;
        match key {
            "method" => self.method = parse_value(key, value)?,
            "modality" => self.modality = parse_value(key, value)?,
            "weak_aug_kind" => self.weak_aug_kind = parse_auto(key, value)?,
            "strong_aug_kind" => self.strong_aug_kind = parse_auto(key, value)?,
            "weak_aug_on_unlabelled" => self.weak_aug_on_unlabelled = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "labelled_batch_size" => self.labelled_batch_size = parse_value(key, value)?,
            "unlabelled_ratio" => self.unlabelled_ratio = parse_value(key, value)?,
            "lr0" => self.lr0 = parse_value(key, value)?,
            "lr_decay" => self.lr_decay = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "sigma" => self.sigma = parse_value(key, value)?,
            "lambda1" => self.lambda1 = parse_value(key, value)?,
            "lambda2" => self.lambda2 = parse_value(key, value)?,
            "lambda3" => self.lambda3 = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "hidden" => self.hidden = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "split_train" => self.split_train = parse_value(key, value)?,
            "split_valid" => self.split_valid = parse_value(key, value)?,
            "split_test" => self.split_test = parse_value(key, value)?,
            "signal_bins" => self.signal_bins = parse_value(key, value)?,
            "token_max_length" => self.token_max_length = parse_auto(key, value)?,
            "flip_max_frames" => a.flip_max_frames = parse_value(key, value)?,
            "mask_max_frames" => a.mask_max_frames = parse_value(key, value)?,
            "pitch_max_steps" => a.pitch_max_steps = parse_value(key, value)?,
            "noise_scale" => a.noise_scale = parse_value(key, value)?,
            "swap_count" => a.swap_count = parse_value(key, value)?,
            "delete_prob" => a.delete_prob = parse_value(key, value)?,
            "synonym_prob" => a.synonym_prob = parse_value(key, value)?,
            "contextual_n" => a.contextual_n = parse_value(key, value)?,
            "contextual_prob" => a.contextual_prob = parse_value(key, value)?,
            other => return Err(Error::config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (line, k, v) in parse_key_values(text, source)? {
            cfg.set(&k, &v).map_err(|e| Error::Parse {
                path: source.into(),
                line,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn ssl_params(&self) -> SslParams {
        SslParams {
            tau: self.tau,
            sigma: self.sigma,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            task_weight: self.lambda,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.split_train,
            valid: self.split_valid,
            test: self.split_test,
            seed: self.seed,
        }
    }

    pub fn weak_kind(&self) -> AugmentKind {
        self.weak_aug_kind.unwrap_or(self.modality.weak_kinds()[0])
    }

    pub fn strong_kind(&self) -> AugmentKind {
        self.strong_aug_kind.unwrap_or(self.modality.strong_kind())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0, 1]"));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::config("sigma must lie in (0, 1]"));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::config("lr0 must be positive"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config("lr_decay must lie in (0, 1]"));
        }
        if self.labelled_batch_size == 0 || self.hidden == 0 || self.signal_bins == 0 {
            return Err(Error::config(
                "batch size, hidden width and signal bins must be positive",
            ));
        }
        if !(self.unlabelled_ratio >= 0.0) {
            return Err(Error::config("unlabelled_ratio must be non-negative"));
        }
        for kind in [self.weak_kind(), self.strong_kind()] {
            if kind.modality() != self.modality {
                return Err(Error::config(format!(
                    "augmentation `{kind}` does not apply to {} data",
                    self.modality.name()
                )));
            }
        }
        self.split_spec().validate()
    }

    /// Serializes back to the `key = value` format.
    pub fn to_text(&self) -> String {
        let a = &self.augment;
        let auto = |k: Option<AugmentKind>| k.map(|k| k.name().to_string()).unwrap_or_else(|| "auto".into());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("method", self.method.name().into());
        kv("modality", self.modality.name().into());
        kv("weak_aug_kind", auto(self.weak_aug_kind));
        kv("strong_aug_kind", auto(self.strong_aug_kind));
        kv("weak_aug_on_unlabelled", self.weak_aug_on_unlabelled.to_string());
        kv("epochs", self.epochs.to_string());
        kv("labelled_batch_size", self.labelled_batch_size.to_string());
        kv("unlabelled_ratio", self.unlabelled_ratio.to_string());
        kv("lr0", self.lr0.to_string());
        kv("lr_decay", self.lr_decay.to_string());
        kv("tau", self.tau.to_string());
        kv("sigma", self.sigma.to_string());
        kv("lambda1", self.lambda1.to_string());
        kv("lambda2", self.lambda2.to_string());
        kv("lambda3", self.lambda3.to_string());
        kv("lambda", self.lambda.to_string());
        kv("hidden", self.hidden.to_string());
        kv("seed", self.seed.to_string());
        kv("split_train", self.split_train.to_string());
        kv("split_valid", self.split_valid.to_string());
        kv("split_test", self.split_test.to_string());
        kv("signal_bins", self.signal_bins.to_string());
        kv(
            "token_max_length",
            self.token_max_length
                .map(|v| v.to_string())
                .unwrap_or_else(|| "auto".into()),
        );
        kv("flip_max_frames", a.flip_max_frames.to_string());
        kv("mask_max_frames", a.mask_max_frames.to_string());
        kv("pitch_max_steps", a.pitch_max_steps.to_string());
        kv("noise_scale", a.noise_scale.to_string());
        kv("swap_count", a.swap_count.to_string());
        kv("delete_prob", a.delete_prob.to_string());
        kv("synonym_prob", a.synonym_prob.to_string());
        kv("contextual_n", a.contextual_n.to_string());
        kv("contextual_prob", a.contextual_prob.to_string());
        s
    }
}

/// `lr0 · decay^epoch`.
pub fn lr_at_epoch(lr0: f64, decay: f64, epoch: usize) -> f64 {
    lr0 * decay.powi(epoch as i32)
}

/// Maps payloads to model inputs.
#[derive(Debug, Clone, Copy)]
pub enum Featurizer<'a> {
    Signal {
        bins: usize,
    },
    Tokens {
        table: &'a EmbeddingTable,
        max_length: usize,
    },
}

impl Featurizer<'_> {
    pub fn featurize(&self, payload: &Payload) -> Result<FeatureVector> {
        match (self, payload) {
            (Featurizer::Signal { bins }, Payload::Signal(s)) => featurize_signal(s, *bins),
            (Featurizer::Tokens { table, max_length }, Payload::Tokens(t)) => featurize_tokens(t, table, *max_length),
            _ => Err(Error::contract("sample modality does not match the featurizer")),
        }
    }

    pub fn modality(&self) -> Modality {
        match self {
            Featurizer::Signal { .. } => Modality::Signal,
            Featurizer::Tokens { .. } => Modality::Tokens,
        }
    }
}

/// Featurizer settings that survive in a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerSpec {
    pub modality: Modality,
    pub signal_bins: usize,
    pub token_max_length: usize,
}

impl FeaturizerSpec {
    pub fn for_corpus(config: &TrainConfig, corpus: &Corpus) -> Self {
        let longest = corpus
            .labelled
            .iter()
            .chain(&corpus.unlabelled)
            .filter_map(|s| match &s.payload {
                Payload::Tokens(t) => Some(t.len()),
                _ => None,
            })
            .max()
            .unwrap_or(1);
        Self {
            modality: config.modality,
            signal_bins: config.signal_bins,
            token_max_length: config.token_max_length.unwrap_or(longest),
        }
    }

    pub fn bind<'a>(&self, table: &'a EmbeddingTable) -> Featurizer<'a> {
        match self.modality {
            Modality::Signal => Featurizer::Signal { bins: self.signal_bins },
            Modality::Tokens => Featurizer::Tokens {
                table,
                max_length: self.token_max_length,
            },
        }
    }
}

fn augment_payload<R: rand::Rng + ?Sized>(
    payload: &Payload,
    kind: AugmentKind,
    params: &AugmentParams,
    lexicon: &SynonymLexicon,
    table: &EmbeddingTable,
    rng: &mut R,
) -> Result<Payload> {
    Ok(match payload {
        Payload::Signal(s) => Payload::Signal(augment_signal(s, kind, params, rng)?),
        Payload::Tokens(t) => Payload::Tokens(augment_tokens(t, kind, params, lexicon, table, rng)?),
    })
}

pub fn predict(model: &TwoHeadModel, samples: &[Sample], featurizer: &Featurizer<'_>) -> Result<Vec<TaskProbs>> {
    samples
        .iter()
        .map(|s| forward(model, &featurizer.featurize(&s.payload)?))
        .collect()
}

/// Argmax predictions per task, weighted F1, JRBM and confusion matrices.
pub fn evaluate(model: &TwoHeadModel, samples: &[Sample], featurizer: &Featurizer<'_>) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::contract("cannot evaluate an empty sample list"));
    }
    let probs = predict(model, samples, featurizer)?;
    metrics_from_probs(&probs, samples, model.emotion_classes(), model.intent_classes())
}

pub fn metrics_from_probs(
    probs: &[TaskProbs],
    samples: &[Sample],
    emotion_classes: usize,
    intent_classes: usize,
) -> Result<MetricsReport> {
    let mut truth = (Vec::new(), Vec::new());
    for s in samples {
        let (e, i) = s
            .labels()
            .ok_or_else(|| Error::contract(format!("sample `{}` is unlabelled", s.id)))?;
        truth.0.push(e);
        truth.1.push(i);
    }
    let pe: Vec<usize> = probs.iter().map(|p| argmax(&p.emotion)).collect();
    let pi: Vec<usize> = probs.iter().map(|p| argmax(&p.intent)).collect();
    MetricsReport::from_predictions((&pe, &truth.0), (&pi, &truth.1), emotion_classes, intent_classes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub lr: f64,
    /// Mean of the per-step multi-task totals.
    pub loss_total: f64,
    /// Per-task means over the epoch's steps; counts are summed.
    pub emotion: LossBreakdown,
    pub intent: LossBreakdown,
    pub acceptance_rate_emotion: f64,
    pub acceptance_rate_intent: f64,
    /// `k_histogram[k]` = steps that selected `k` (full-match only).
    pub k_histogram_emotion: Vec<usize>,
    pub k_histogram_intent: Vec<usize>,
    pub valid: MetricsReport,
}

const EPOCH_CSV_HEADER: &str = "epoch,lr,loss_total,\
emotion_l_sup,emotion_l_fix_unsup,emotion_l_neg,emotion_l_ent,\
intent_l_sup,intent_l_fix_unsup,intent_l_neg,intent_l_ent,\
acceptance_rate_emotion,acceptance_rate_intent,k_hist_emotion,k_hist_intent,\
valid_f1_emotion,valid_f1_intent,valid_jrbm";

pub fn epochs_to_csv(reports: &[EpochReport]) -> String {
    let mut s = String::from(EPOCH_CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.lr,
            r.loss_total,
            r.emotion.l_sup,
            r.emotion.l_fix_unsup,
            r.emotion.l_neg,
            r.emotion.l_ent,
            r.intent.l_sup,
            r.intent.l_fix_unsup,
            r.intent.l_neg,
            r.intent.l_ent,
            r.acceptance_rate_emotion,
            r.acceptance_rate_intent,
            histogram_cell(&r.k_histogram_emotion),
            histogram_cell(&r.k_histogram_intent),
            r.valid.f1_emotion,
            r.valid.f1_intent,
            r.valid.jrbm,
        );
    }
    s
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation JRBM (earliest on ties).
    pub model: TwoHeadModel,
    /// Parameters after the last epoch.
    pub final_model: TwoHeadModel,
    pub best_epoch: usize,
    pub reports: Vec<EpochReport>,
    pub featurizer: FeaturizerSpec,
    pub train: Vec<Sample>,
    pub valid: Vec<Sample>,
    pub test: Vec<Sample>,
}

#[derive(Default)]
struct EpochAccumulator {
    steps: usize,
    total: f64,
    parts: [LossBreakdown; 2],
    accepted: [usize; 2],
    seen: usize,
    k_hist: [Vec<usize>; 2],
}

impl EpochAccumulator {
    fn new(classes: [usize; 2]) -> Self {
        Self {
            k_hist: classes.map(|c| vec![0; c + 1]),
            ..Default::default()
        }
    }

    fn add(&mut self, total: f64, parts: [&LossBreakdown; 2]) {
        self.steps += 1;
        self.total += total;
        self.seen += parts[0].unlabelled_count;
        for t in 0..2 {
            let acc = &mut self.parts[t];
            acc.l_sup += parts[t].l_sup;
            acc.l_fix_unsup += parts[t].l_fix_unsup;
            acc.l_neg += parts[t].l_neg;
            acc.l_ent += parts[t].l_ent;
            acc.total += parts[t].total;
            acc.accepted_count += parts[t].accepted_count;
            acc.labelled_count += parts[t].labelled_count;
            acc.unlabelled_count += parts[t].unlabelled_count;
            self.accepted[t] += parts[t].accepted_count;
            if let Some(k) = parts[t].k {
                self.k_hist[t][k] += 1;
            }
        }
    }

    fn finish(self, epoch: usize, lr: f64, valid: MetricsReport) -> EpochReport {
        let n = self.steps.max(1) as f64;
        let mean = |b: LossBreakdown| LossBreakdown {
            l_sup: b.l_sup / n,
            l_fix_unsup: b.l_fix_unsup / n,
            l_neg: b.l_neg / n,
            l_ent: b.l_ent / n,
            total: b.total / n,
            k: None,
            ..b
        };
        let rate = |a: usize| {
            if self.seen == 0 {
                0.0
            } else {
                a as f64 / self.seen as f64
            }
        };
        let [e, i] = self.parts;
        let [ke, ki] = self.k_hist;
        EpochReport {
            epoch,
            lr,
            loss_total: self.total / n,
            emotion: mean(e),
            intent: mean(i),
            acceptance_rate_emotion: rate(self.accepted[0]),
            acceptance_rate_intent: rate(self.accepted[1]),
            k_histogram_emotion: ke,
            k_histogram_intent: ki,
            valid,
        }
    }
}

fn samples_of(samples: &[Sample], modality: Modality) -> Vec<Sample> {
    samples.iter().filter(|s| s.modality() == modality).cloned().collect()
}

/// Trains a two-head model on `corpus` according to `config`.
///
/// Random streams: the labelled shuffle, labelled augmentation, unlabelled
/// sampling and unlabelled augmentation each draw from their own stream, so
/// switching the unlabelled side on or off leaves the labelled stream intact.
pub fn train(config: &TrainConfig, corpus: &Corpus) -> Result<TrainOutcome> {
    config.validate()?;
    let labelled = samples_of(&corpus.labelled, config.modality);
    if labelled.is_empty() {
        return Err(Error::config(format!(
            "corpus has no labelled {} samples",
            config.modality.name()
        )));
    }
    let unlabelled = if config.method.uses_unlabelled() {
        let u = samples_of(&corpus.unlabelled, config.modality);
        if u.is_empty() {
            return Err(Error::config(format!(
                "method {} needs unlabelled {} samples",
                config.method,
                config.modality.name()
            )));
        }
        u
    } else {
        Vec::new()
    };

    let split = stratified_split(&labelled, &config.split_spec())?;
    if split.train.is_empty() || split.valid.is_empty() {
        return Err(Error::config("train and validation splits must both be non-empty"));
    }
    let spec = FeaturizerSpec::for_corpus(config, corpus);
    let featurizer = spec.bind(&corpus.embedding_table);
    let valid_features: Vec<FeatureVector> = split
        .valid
        .iter()
        .map(|s| featurizer.featurize(&s.payload))
        .collect::<Result<_>>()?;
    let input_dim = featurizer.featurize(&split.train[0].payload)?.dim();
    let (ce, ci) = (corpus.emotion_classes(), corpus.intent_classes());

    let mut model = TwoHeadModel::new(input_dim, config.hidden, ce, ci, config.seed)?;
    let mut adam = AdamState::new(&model);
    let adam_cfg = AdamConfig::default();
    let params = config.ssl_params();
    let weak_kind = config.weak_kind();
    let strong_kind = config.strong_kind();

    let mut sampler = make_batches(
        split.train.len(),
        unlabelled.len(),
        config.labelled_batch_size,
        config.unlabelled_ratio,
        config.seed,
    )?;
    let mut labelled_aug_rng = stream_rng(config.seed, 20);
    let mut unlabelled_aug_rng = stream_rng(config.seed, 21);
    let aug = |p: &Payload, kind, rng: &mut rand_chacha::ChaCha8Rng| {
        augment_payload(p, kind, &config.augment, &corpus.lexicon, &corpus.embedding_table, rng)
    };

    let mut reports = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, TwoHeadModel)> = None;

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config.lr0, config.lr_decay, epoch);
        let mut acc = EpochAccumulator::new([ce, ci]);
        for batch in sampler.next_epoch() {
            let mut inputs = Vec::with_capacity(batch.labelled.len() + batch.unlabelled.len());
            let mut labels = Vec::with_capacity(batch.labelled.len());
            for &i in &batch.labelled {
                let s = &split.train[i];
                let weak = aug(&s.payload, weak_kind, &mut labelled_aug_rng)?;
                inputs.push(featurizer.featurize(&weak)?);
                labels.push(s.labels().expect("split samples are labelled"));
            }
            let mut weak_probs = Vec::with_capacity(batch.unlabelled.len());
            let mut strong_probs = Vec::with_capacity(batch.unlabelled.len());
            for &u in &batch.unlabelled {
                let s = &unlabelled[u];
                let weak = if config.weak_aug_on_unlabelled {
                    aug(&s.payload, weak_kind, &mut unlabelled_aug_rng)?
                } else {
                    s.payload.clone()
                };
                let strong = aug(&s.payload, strong_kind, &mut unlabelled_aug_rng)?;
                weak_probs.push(forward(&model, &featurizer.featurize(&weak)?)?);
                let strong_x = featurizer.featurize(&strong)?;
                strong_probs.push(forward(&model, &strong_x)?);
                inputs.push(strong_x);
            }
            let objective = SslObjective::new(config.method, params, &labels, &weak_probs, &strong_probs)?;
            let probs: Vec<TaskProbs> = inputs.iter().map(|x| forward(&model, x)).collect::<Result<_>>()?;
            let (detail, _) = objective.evaluate_detailed(&probs)?;
            let (_, grads) = backprop(&model, &inputs, &objective)?;
            adam_step(&mut model, &grads, &mut adam, lr, &adam_cfg)?;
            acc.add(detail.total, [&detail.emotion, &detail.intent]);
        }

        let valid_probs: Vec<TaskProbs> = valid_features
            .iter()
            .map(|x| forward(&model, x))
            .collect::<Result<_>>()?;
        let valid = metrics_from_probs(&valid_probs, &split.valid, ce, ci)?;
        if best.as_ref().is_none_or(|(j, _, _)| valid.jrbm > *j) {
            best = Some((valid.jrbm, epoch, model.clone()));
        }
        log::info!(
            "epoch {epoch}: lr {lr:.3e} valid JRBM {:.4} accept {:.3}/{:.3}",
            valid.jrbm,
            acc.accepted[0] as f64 / acc.seen.max(1) as f64,
            acc.accepted[1] as f64 / acc.seen.max(1) as f64,
        );
        reports.push(acc.finish(epoch, lr, valid));
    }

    let (best_model, best_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (model.clone(), 0),
    };
    Ok(TrainOutcome {
        model: best_model,
        final_model: model,
        best_epoch,
        reports,
        featurizer: spec,
        train: split.train,
        valid: split.valid,
        test: split.test,
    })
}

/// Saved model plus what is needed to featurize and name its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: TwoHeadModel,
    pub featurizer: FeaturizerSpec,
    pub config: TrainConfig,
    pub best_epoch: usize,
    pub emotion_names: Vec<String>,
    pub intent_names: Vec<String>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(&read_to_string(path)?)?;
        cp.model.validate()?;
        Ok(cp)
    }
}

/// One line of a prediction dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub emotion: usize,
    pub intent: usize,
    pub emotion_probs: Vec<f64>,
    pub intent_probs: Vec<f64>,
}

impl Prediction {
    pub fn probs(&self) -> TaskProbs {
        TaskProbs {
            emotion: self.emotion_probs.clone(),
            intent: self.intent_probs.clone(),
        }
    }
}

pub fn predictions_for(samples: &[Sample], probs: &[TaskProbs]) -> Result<Vec<Prediction>> {
    samples
        .iter()
        .zip(probs)
        .map(|(s, p)| {
            let (emotion, intent) = s
                .labels()
                .ok_or_else(|| Error::contract(format!("sample `{}` is unlabelled", s.id)))?;
            Ok(Prediction {
                id: s.id.clone(),
                emotion,
                intent,
                emotion_probs: p.emotion.clone(),
                intent_probs: p.intent.clone(),
            })
        })
        .collect()
}

pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<()> {
    let mut text = String::new();
    for p in preds {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
