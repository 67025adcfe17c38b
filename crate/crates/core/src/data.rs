//! Corpus model, line-delimited corpus files, stratified splitting,
//! synthetic corpus generation and batch sampling.
//!
//! # Corpus file
//!
//! One JSON object per line. The first line is the header:
//!
//! ```text
//! {"format":"fullmatch-corpus","version":1,
//!  "label_names":{"emotion":[...],"intent":[...]},
//!  "lexicon":{"12":[13,14],...},
//!  "embedding":{"vocab_size":200,"dim":16,"seed":7}}
//! ```
//!
//! `embedding` carries either `seed` (rows regenerated on load) or an explicit
//! row-major `rows` array. Every following line is one sample:
//!
//! ```text
//! {"id":"L000001","modality":"signal","payload":[0.1,...],"sample_rate":16000,"emotion":4,"intent":4}
//! {"id":"U000001","modality":"tokens","payload":[3,17,...],"vocab_size":200}
//! ```
//!
//! Labelled records carry both `emotion` and `intent`; unlabelled records
//! carry neither.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::augment::{EmbeddingTable, Modality, SignalSequence, SynonymLexicon, TokenSequence, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::io::{parse_key_values, parse_value, write_atomic};

pub const EMOTION_NAMES: [&str; 7] = ["anger", "disgust", "fear", "happy", "neutral", "sad", "surprise"];
pub const INTENT_NAMES: [&str; 8] = [
    "acknowledging",
    "agreeing",
    "consoling",
    "encouraging",
    "neutral",
    "questioning",
    "suggesting",
    "wishing",
];

/// Per-class labelled totals of the reference corpus (3,610 samples).
pub const REFERENCE_EMOTION_COUNTS: [usize; 7] = [402, 406, 399, 498, 1096, 403, 406];
pub const REFERENCE_INTENT_COUNTS: [usize; 8] = [343, 377, 348, 314, 912, 536, 421, 359];

const CORPUS_FORMAT: &str = "fullmatch-corpus";

/// Per-stream offsets so that labels, payloads and templates never share randomness.
const LABEL_STREAM: u64 = 1;
const PAYLOAD_STREAM: u64 = 2;
const TEMPLATE_STREAM: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Signal(SignalSequence),
    Tokens(TokenSequence),
}

impl Payload {
    pub fn modality(&self) -> Modality {
        match self {
            Payload::Signal(_) => Modality::Signal,
            Payload::Tokens(_) => Modality::Tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub payload: Payload,
    pub emotion: Option<usize>,
    pub intent: Option<usize>,
}

impl Sample {
    pub fn modality(&self) -> Modality {
        self.payload.modality()
    }

    pub fn is_labelled(&self) -> bool {
        self.emotion.is_some() && self.intent.is_some()
    }

    /// `(emotion, intent)` for labelled samples.
    pub fn labels(&self) -> Option<(usize, usize)> {
        self.emotion.zip(self.intent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelNames {
    pub emotion: Vec<String>,
    pub intent: Vec<String>,
}

impl Default for LabelNames {
    fn default() -> Self {
        Self {
            emotion: EMOTION_NAMES.iter().map(|s| s.to_string()).collect(),
            intent: INTENT_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub labelled: Vec<Sample>,
    pub unlabelled: Vec<Sample>,
    pub label_names: LabelNames,
    pub lexicon: SynonymLexicon,
    pub embedding_table: EmbeddingTable,
}

impl Corpus {
    pub fn emotion_classes(&self) -> usize {
        self.label_names.emotion.len()
    }

    pub fn intent_classes(&self) -> usize {
        self.label_names.intent.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.emotion_classes() < 2 || self.intent_classes() < 2 {
            return Err(Error::contract("each task needs at least two label names"));
        }
        self.lexicon.validate(self.embedding_table.vocab_size())?;
        let mut ids = HashSet::new();
        for (i, s) in self.labelled.iter().chain(&self.unlabelled).enumerate() {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::contract(format!("duplicate sample id `{}`", s.id)));
            }
            let labelled = i < self.labelled.len();
            check_labels(s, labelled, self.emotion_classes(), self.intent_classes()).map_err(Error::Contract)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let embedding = match self.embedding_table.seed() {
            Some(seed) => EmbeddingHeader {
                vocab_size: self.embedding_table.vocab_size(),
                dim: self.embedding_table.dim(),
                seed: Some(seed),
                rows: None,
            },
            None => EmbeddingHeader {
                vocab_size: self.embedding_table.vocab_size(),
                dim: self.embedding_table.dim(),
                seed: None,
                rows: Some(self.embedding_table.rows().to_vec()),
            },
        };
        let header = Header {
            format: CORPUS_FORMAT.into(),
            version: 1,
            label_names: self.label_names.clone(),
            lexicon: self.lexicon.entries.clone(),
            embedding,
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for s in self.labelled.iter().chain(&self.unlabelled) {
            out.push_str(&serde_json::to_string(&Record::from_sample(s))?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses a corpus file body; `source` names it in error messages.
    pub fn from_jsonl(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::Parse {
            path: source.into(),
            line: 1,
            message: "empty corpus file".into(),
        })?;
        let header: Header = serde_json::from_str(first).map_err(|e| Error::Parse {
            path: source.into(),
            line: 1,
            message: format!("bad header: {e}"),
        })?;
        if header.format != CORPUS_FORMAT {
            return Err(Error::Schema {
                line: 1,
                message: format!("unexpected format `{}`", header.format),
            });
        }
        let table = match (header.embedding.seed, header.embedding.rows) {
            (_, Some(rows)) => EmbeddingTable::from_rows(header.embedding.vocab_size, header.embedding.dim, rows),
            (Some(seed), None) => EmbeddingTable::seeded(header.embedding.vocab_size, header.embedding.dim, seed),
            (None, None) => Err(Error::contract("embedding needs a seed or explicit rows")),
        }
        .map_err(|e| Error::Schema {
            line: 1,
            message: e.to_string(),
        })?;
        let ce = header.label_names.emotion.len();
        let ci = header.label_names.intent.len();
        let mut corpus = Corpus {
            labelled: Vec::new(),
            unlabelled: Vec::new(),
            label_names: header.label_names,
            lexicon: SynonymLexicon {
                entries: header.lexicon,
            },
            embedding_table: table,
        };
        let mut ids = HashSet::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let rec: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: source.into(),
                line: lineno,
                message: e.to_string(),
            })?;
            let sample = rec
                .into_sample()
                .map_err(|message| Error::Schema { line: lineno, message })?;
            if !ids.insert(sample.id.clone()) {
                return Err(Error::Schema {
                    line: lineno,
                    message: format!("duplicate id `{}`", sample.id),
                });
            }
            let labelled = sample.emotion.is_some() || sample.intent.is_some();
            check_labels(&sample, labelled, ce, ci).map_err(|message| Error::Schema { line: lineno, message })?;
            if labelled {
                corpus.labelled.push(sample);
            } else {
                corpus.unlabelled.push(sample);
            }
        }
        corpus.validate().map_err(|e| Error::Schema {
            line: 1,
            message: e.to_string(),
        })?;
        Ok(corpus)
    }
}

fn check_labels(s: &Sample, labelled: bool, ce: usize, ci: usize) -> std::result::Result<(), String> {
    match (s.emotion, s.intent) {
        (Some(e), Some(i)) if labelled => {
            if e >= ce {
                return Err(format!("emotion label {e} out of range for {ce} classes"));
            }
            if i >= ci {
                return Err(format!("intent label {i} out of range for {ci} classes"));
            }
            Ok(())
        }
        (None, None) if !labelled => Ok(()),
        _ => Err(format!(
            "sample `{}` must carry both emotion and intent labels or neither",
            s.id
        )),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    label_names: LabelNames,
    #[serde(default)]
    lexicon: BTreeMap<usize, Vec<usize>>,
    embedding: EmbeddingHeader,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingHeader {
    vocab_size: usize,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    rows: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawPayload {
    Tokens(Vec<usize>),
    Frames(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    modality: Modality,
    payload: RawPayload,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sample_rate: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    vocab_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    emotion: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    intent: Option<usize>,
}

impl Record {
    fn from_sample(s: &Sample) -> Self {
        let (payload, sample_rate, vocab_size) = match &s.payload {
            Payload::Signal(sig) => (RawPayload::Frames(sig.frames().to_vec()), Some(sig.sample_rate()), None),
            Payload::Tokens(tok) => (RawPayload::Tokens(tok.tokens().to_vec()), None, Some(tok.vocab_size())),
        };
        Self {
            id: s.id.clone(),
            modality: s.modality(),
            payload,
            sample_rate,
            vocab_size,
            emotion: s.emotion,
            intent: s.intent,
        }
    }

    fn into_sample(self) -> std::result::Result<Sample, String> {
        let payload = match (self.modality, self.payload) {
            (Modality::Signal, raw) => {
                let frames = match raw {
                    RawPayload::Frames(f) => f,
                    RawPayload::Tokens(t) => t.into_iter().map(|v| v as f64).collect(),
                };
                let rate = self.sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE);
                Payload::Signal(SignalSequence::new(frames, rate).map_err(|e| e.to_string())?)
            }
            (Modality::Tokens, RawPayload::Tokens(tokens)) => {
                let vocab = self.vocab_size.ok_or("token record missing vocab_size")?;
                Payload::Tokens(TokenSequence::new(tokens, vocab).map_err(|e| e.to_string())?)
            }
            (Modality::Tokens, RawPayload::Frames(_)) => {
                return Err("token payload must hold non-negative integers".into());
            }
        };
        Ok(Sample {
            id: self.id,
            payload,
            emotion: self.emotion,
            intent: self.intent,
        })
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_jsonl(&text, &path.display().to_string())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), corpus.to_jsonl()?.as_bytes())
}

/// Train / valid / test fractions plus the shuffling seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train,
            valid,
            test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("split fractions must lie in [0, 1]"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split fractions must sum to 1"));
        }
        Ok(())
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train, self.valid, self.test]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub train: Vec<Sample>,
    pub valid: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Joint classes too small to stratify; they were placed in `train`.
    pub warnings: Vec<String>,
}

/// Largest-remainder apportionment of `n` items over `fractions`.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let targets: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>().min(n);
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.total_cmp(&ra)
    });
    for &j in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[j] > 0.0 {
            counts[j] += 1;
            left -= 1;
        }
    }
    counts
}

/// Per joint `(emotion, intent)` class, shuffles and cuts each class into
/// train / valid / test with the fraction-proportional counts.
pub fn stratified_split(samples: &[Sample], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key = s
            .labels()
            .ok_or_else(|| Error::contract(format!("sample `{}` is unlabelled", s.id)))?;
        groups.entry(key).or_default().push(i);
    }
    let fractions = spec.fractions();
    let active = fractions.iter().filter(|&&f| f > 0.0).count();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut warnings = Vec::new();
    for ((e, i), mut members) in groups {
        members.shuffle(&mut rng);
        if members.len() < active {
            let msg = format!(
                "joint class (emotion {e}, intent {i}) has {} samples for {active} splits; all kept in train",
                members.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
            parts[0].extend(members);
            continue;
        }
        let counts = apportion(members.len(), &fractions);
        let mut it = members.into_iter();
        for (part, count) in parts.iter_mut().zip(counts) {
            part.extend(it.by_ref().take(count));
        }
    }
    let [train, valid, test] = parts.map(|mut idx| {
        idx.sort_unstable();
        idx.into_iter().map(|i| samples[i].clone()).collect::<Vec<_>>()
    });
    Ok(Split {
        train,
        valid,
        test,
        warnings,
    })
}

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub emotion_counts: Vec<usize>,
    pub intent_counts: Vec<usize>,
    pub unlabelled: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Strength of class evidence; 0 makes every class identically distributed.
    pub separation: f64,
    /// Emotion–intent coupling in `[0, 1]`; 1 pairs the sorted label lists directly.
    pub correlation: f64,
    pub modality: Modality,
    /// Intrinsic per-frame noise for signals.
    pub noise: f64,
    pub sample_rate: u32,
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            emotion_counts: REFERENCE_EMOTION_COUNTS.to_vec(),
            intent_counts: REFERENCE_INTENT_COUNTS.to_vec(),
            unlabelled: 5000,
            min_len: 256,
            max_len: 512,
            separation: 1.0,
            correlation: 0.3,
            modality: Modality::Signal,
            noise: 0.05,
            sample_rate: DEFAULT_SAMPLE_RATE,
            vocab_size: 200,
            embedding_dim: 16,
            seed: 0,
        }
    }
}

/// Tokens per class reserved as class evidence in token corpora.
const INDICATIVE_TOKENS: usize = 6;
/// Control points of each class's signal template.
const TEMPLATE_POINTS: usize = 8;
const SIGNAL_UNIT: f64 = 0.1;
const CARRIER_CYCLES_PER_FRAME: f64 = 0.05;

/// `(key, description)` for every generator config key.
pub const GENERATOR_CONFIG_KEYS: &[(&str, &str)] = &[
    ("emotion_counts", "comma-separated labelled count per emotion class"),
    (
        "intent_counts",
        "comma-separated labelled count per intent class (same total)",
    ),
    ("unlabelled", "number of unlabelled samples (default 5000)"),
    ("min_len", "shortest sequence (default 256)"),
    ("max_len", "longest sequence (default 512)"),
    (
        "separation",
        "class evidence strength, 0 = indistinguishable (default 1)",
    ),
    ("correlation", "emotion-intent coupling in [0, 1] (default 0.3)"),
    ("modality", "signal | tokens (default signal)"),
    ("noise", "per-frame noise level for signals (default 0.05)"),
    ("sample_rate", "signal sample rate (default 16000)"),
    ("vocab_size", "token vocabulary size (default 200)"),
    ("embedding_dim", "token embedding width (default 16)"),
    ("seed", "generator seed (default 0)"),
];

fn parse_counts(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

impl GeneratorConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "emotion_counts" => self.emotion_counts = parse_counts(key, value)?,
            "intent_counts" => self.intent_counts = parse_counts(key, value)?,
            "unlabelled" => self.unlabelled = parse_value(key, value)?,
            "min_len" => self.min_len = parse_value(key, value)?,
            "max_len" => self.max_len = parse_value(key, value)?,
            "separation" => self.separation = parse_value(key, value)?,
            "correlation" => self.correlation = parse_value(key, value)?,
            "modality" => self.modality = parse_value(key, value)?,
            "noise" => self.noise = parse_value(key, value)?,
            "sample_rate" => self.sample_rate = parse_value(key, value)?,
            "vocab_size" => self.vocab_size = parse_value(key, value)?,
            "embedding_dim" => self.embedding_dim = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            other => return Err(Error::config(format!("unknown generator key `{other}`"))),
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

    pub fn labelled_total(&self) -> usize {
        self.emotion_counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.emotion_counts.len() < 2 || self.intent_counts.len() < 2 {
            return Err(Error::config("each task needs at least two classes"));
        }
        if self.emotion_counts.iter().chain(&self.intent_counts).any(|&c| c == 0) {
            return Err(Error::config("class counts must be positive"));
        }
        if self.emotion_counts.iter().sum::<usize>() != self.intent_counts.iter().sum::<usize>() {
            return Err(Error::config("emotion and intent counts must have the same total"));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::config("correlation must lie in [0, 1]"));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::config("need 1 <= min_len <= max_len"));
        }
        if !(self.separation >= 0.0) || !(self.noise >= 0.0) {
            return Err(Error::config("separation and noise must be non-negative"));
        }
        if self.modality == Modality::Tokens {
            let reserved = (self.emotion_counts.len() + self.intent_counts.len()) * INDICATIVE_TOKENS;
            if self.vocab_size <= reserved {
                return Err(Error::config(format!(
                    "vocab_size must exceed {reserved} to hold the class-indicative tokens"
                )));
            }
        }
        if self.embedding_dim == 0 || self.sample_rate == 0 {
            return Err(Error::config("embedding_dim and sample_rate must be positive"));
        }
        Ok(())
    }
}

/// Sorted label list with `counts[c]` copies of class `c`.
fn expand(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect()
}

/// Joint labels with exact marginals. The sorted emotion and intent lists are
/// paired position by position, then the intents of a random
/// `(1 − correlation)` fraction of positions are shuffled among themselves.
fn couple_labels(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let emotions = expand(&cfg.emotion_counts);
    let mut intents = expand(&cfg.intent_counts);
    let n = emotions.len();
    let free = ((1.0 - cfg.correlation) * n as f64).round() as usize;
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(rng);
    let chosen = &positions[..free];
    let mut pool: Vec<usize> = chosen.iter().map(|&p| intents[p]).collect();
    pool.shuffle(rng);
    for (&p, v) in chosen.iter().zip(pool) {
        intents[p] = v;
    }
    let mut pairs: Vec<(usize, usize)> = emotions.into_iter().zip(intents).collect();
    pairs.shuffle(rng);
    pairs
}

/// Smooth curve through evenly spaced control points, evaluated at `t ∈ [0, 1]`.
fn curve(points: &[f64], t: f64) -> f64 {
    let x = t * (points.len() - 1) as f64;
    let i = (x.floor() as usize).min(points.len() - 2);
    let frac = x - i as f64;
    points[i] * (1.0 - frac) + points[i + 1] * frac
}

struct SignalTemplates {
    level: Vec<Vec<f64>>,
    envelope: Vec<Vec<f64>>,
}

struct TokenSources {
    emotion: Vec<Vec<usize>>,
    intent: Vec<Vec<usize>>,
    background: Vec<usize>,
}

fn token_sources(cfg: &GeneratorConfig) -> TokenSources {
    let mut next = 0;
    let mut take = || {
        let out: Vec<usize> = (next..next + INDICATIVE_TOKENS).collect();
        next += INDICATIVE_TOKENS;
        out
    };
    let emotion = (0..cfg.emotion_counts.len()).map(|_| take()).collect();
    let intent = (0..cfg.intent_counts.len()).map(|_| take()).collect();
    let start = (cfg.emotion_counts.len() + cfg.intent_counts.len()) * INDICATIVE_TOKENS;
    TokenSources {
        emotion,
        intent,
        background: (start..cfg.vocab_size).collect(),
    }
}

/// Groups of three interchangeable tokens; class-indicative groups never mix classes.
fn synth_lexicon(sources: &TokenSources) -> SynonymLexicon {
    let mut groups = Vec::new();
    for set in sources.emotion.iter().chain(&sources.intent) {
        groups.extend(set.chunks(3).map(|c| c.to_vec()));
    }
    groups.extend(sources.background.chunks(3).map(|c| c.to_vec()));
    SynonymLexicon::from_groups(&groups)
}

fn synth_signal(
    cfg: &GeneratorConfig,
    templates: &SignalTemplates,
    (e, i): (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Result<Payload> {
    let len = rng.random_range(cfg.min_len..=cfg.max_len);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let denom = (len.max(2) - 1) as f64;
    let frames = (0..len)
        .map(|n| {
            let t = n as f64 / denom;
            let level = cfg.separation * curve(&templates.level[e], t);
            let amp = 1.0 + cfg.separation * curve(&templates.envelope[i], t);
            let carrier = (std::f64::consts::TAU * CARRIER_CYCLES_PER_FRAME * n as f64 + phase).sin();
            let z: f64 = rng.sample(StandardNormal);
            SIGNAL_UNIT * (level + amp * carrier) + cfg.noise * z
        })
        .collect();
    Ok(Payload::Signal(SignalSequence::new(frames, cfg.sample_rate)?))
}

fn synth_tokens(
    cfg: &GeneratorConfig,
    sources: &TokenSources,
    (e, i): (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Result<Payload> {
    let len = rng.random_range(cfg.min_len..=cfg.max_len);
    let evidence = cfg.separation / (1.0 + cfg.separation);
    let tokens = (0..len)
        .map(|_| {
            let u: f64 = rng.random();
            let set = if u < evidence / 2.0 {
                &sources.emotion[e]
            } else if u < evidence {
                &sources.intent[i]
            } else {
                &sources.background
            };
            set[rng.random_range(0..set.len())]
        })
        .collect();
    Ok(Payload::Tokens(TokenSequence::new(tokens, cfg.vocab_size)?))
}

/// Deterministic synthetic corpus with exactly the requested per-class counts.
///
/// Ids and labels depend only on the counts, correlation and seed, so a
/// signal corpus and a token corpus generated with the same seed describe
/// the same samples and can be late-fused by id.
pub fn synthesize_corpus(cfg: &GeneratorConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut label_rng = stream_rng(cfg.seed, LABEL_STREAM);
    let labels = couple_labels(cfg, &mut label_rng);
    let unlabelled_labels: Vec<(usize, usize)> = (0..cfg.unlabelled)
        .map(|_| labels[label_rng.random_range(0..labels.len())])
        .collect();

    let mut template_rng = stream_rng(cfg.seed, TEMPLATE_STREAM);
    let mut draw_points = |n: usize, abs: bool| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                (0..TEMPLATE_POINTS)
                    .map(|_| {
                        let z: f64 = template_rng.sample(StandardNormal);
                        if abs {
                            z.abs()
                        } else {
                            z
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let templates = SignalTemplates {
        level: draw_points(cfg.emotion_counts.len(), false),
        envelope: draw_points(cfg.intent_counts.len(), true),
    };
    let sources = token_sources(cfg);
    let lexicon = match cfg.modality {
        Modality::Tokens => synth_lexicon(&sources),
        Modality::Signal => SynonymLexicon::default(),
    };
    let table_seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(17);
    let embedding_table = EmbeddingTable::seeded(cfg.vocab_size, cfg.embedding_dim, table_seed)?;

    let mut payload_rng = stream_rng(cfg.seed, PAYLOAD_STREAM);
    let mut make = |pair: (usize, usize)| match cfg.modality {
        Modality::Signal => synth_signal(cfg, &templates, pair, &mut payload_rng),
        Modality::Tokens => synth_tokens(cfg, &sources, pair, &mut payload_rng),
    };
    let mut labelled = Vec::with_capacity(labels.len());
    for (n, &pair) in labels.iter().enumerate() {
        labelled.push(Sample {
            id: format!("L{:06}", n + 1),
            payload: make(pair)?,
            emotion: Some(pair.0),
            intent: Some(pair.1),
        });
    }
    let mut unlabelled = Vec::with_capacity(cfg.unlabelled);
    for (n, &pair) in unlabelled_labels.iter().enumerate() {
        unlabelled.push(Sample {
            id: format!("U{:06}", n + 1),
            payload: make(pair)?,
            emotion: None,
            intent: None,
        });
    }

    let names = |defaults: &[&str], n: usize| -> Vec<String> {
        if n == defaults.len() {
            defaults.iter().map(|s| s.to_string()).collect()
        } else {
            (0..n).map(|c| format!("class_{c}")).collect()
        }
    };
    Ok(Corpus {
        labelled,
        unlabelled,
        label_names: LabelNames {
            emotion: names(&EMOTION_NAMES, cfg.emotion_counts.len()),
            intent: names(&INTENT_NAMES, cfg.intent_counts.len()),
        },
        lexicon,
        embedding_table,
    })
}

/// Per-class label counts, handy for checking generated corpora.
pub fn class_counts(samples: &[Sample], emotion_classes: usize, intent_classes: usize) -> (Vec<usize>, Vec<usize>) {
    let mut e = vec![0; emotion_classes];
    let mut i = vec![0; intent_classes];
    for s in samples {
        if let Some((a, b)) = s.labels() {
            e[a] += 1;
            i[b] += 1;
        }
    }
    (e, i)
}

/// Indices into the labelled and unlabelled pools for one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub labelled: Vec<usize>,
    pub unlabelled: Vec<usize>,
}

/// Epoch-wise batch plan: the labelled pool is reshuffled and consumed once
/// per epoch; each step draws `round(μ·B_l)` unlabelled indices uniformly
/// with replacement. The two pools use independent random streams.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    labelled: usize,
    unlabelled: usize,
    batch_size: usize,
    unlabelled_batch: usize,
    labelled_rng: ChaCha8Rng,
    unlabelled_rng: ChaCha8Rng,
}

pub fn make_batches(labelled: usize, unlabelled: usize, batch_size: usize, mu: f64, seed: u64) -> Result<BatchSampler> {
    if labelled == 0 {
        return Err(Error::config("labelled pool is empty"));
    }
    if batch_size == 0 {
        return Err(Error::config("labelled batch size must be at least 1"));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::config("unlabelled ratio must be non-negative"));
    }
    let unlabelled_batch = if unlabelled == 0 {
        0
    } else {
        (mu * batch_size as f64).round() as usize
    };
    Ok(BatchSampler {
        labelled,
        unlabelled,
        batch_size,
        unlabelled_batch,
        labelled_rng: stream_rng(seed, 10),
        unlabelled_rng: stream_rng(seed, 11),
    })
}

impl BatchSampler {
    pub fn steps_per_epoch(&self) -> usize {
        self.labelled.div_ceil(self.batch_size)
    }

    pub fn unlabelled_batch_size(&self) -> usize {
        self.unlabelled_batch
    }

    pub fn next_epoch(&mut self) -> Vec<Batch> {
        let mut order: Vec<usize> = (0..self.labelled).collect();
        order.shuffle(&mut self.labelled_rng);
        order
            .chunks(self.batch_size)
            .map(|chunk| Batch {
                labelled: chunk.to_vec(),
                unlabelled: (0..self.unlabelled_batch)
                    .map(|_| self.unlabelled_rng.random_range(0..self.unlabelled))
                    .collect(),
            })
            .collect()
    }
}

impl Iterator for BatchSampler {
    type Item = Vec<Batch>;

    fn next(&mut self) -> Option<Vec<Batch>> {
        Some(self.next_epoch())
    }
}

/// Compact `a:b;c:d` rendering used in CSV cells.
pub(crate) fn histogram_cell(hist: &[usize]) -> String {
    let mut s = String::new();
    for (k, &n) in hist.iter().enumerate() {
        if n > 0 {
            if !s.is_empty() {
                s.push(';');
            }
            let _ = write!(s, "{k}:{n}");
        }
    }
    s
}
