//! Weak and strong augmentation for signal and token sequences, and the
//! fixed featurizers that turn either into a [`FeatureVector`].
//!
//! Weak operators: flip, time mask, pitch shift (signals); swap, delete,
//! synonym (tokens). Strong operators: Gaussian noise (signals) and
//! contextual replacement (tokens).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::FeatureVector;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSequence {
    frames: Vec<f64>,
    sample_rate: u32,
}

impl SignalSequence {
    pub fn new(frames: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::contract("signal must have at least one frame"));
        }
        if sample_rate == 0 {
            return Err(Error::contract("sample rate must be positive"));
        }
        if frames.iter().any(|f| !f.is_finite()) {
            return Err(Error::contract("signal frames must be finite"));
        }
        Ok(Self { frames, sample_rate })
    }

    pub fn frames(&self) -> &[f64] {
        &self.frames
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<usize>,
    vocab_size: usize,
}

impl TokenSequence {
    pub fn new(tokens: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::contract("token sequence must be non-empty"));
        }
        if let Some(t) = tokens.iter().find(|&&t| t >= vocab_size) {
            return Err(Error::contract(format!("token {t} outside vocabulary of {vocab_size}")));
        }
        Ok(Self { tokens, vocab_size })
    }

    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Token → interchangeable tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SynonymLexicon {
    pub entries: BTreeMap<usize, Vec<usize>>,
}

impl SynonymLexicon {
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        for (k, v) in &self.entries {
            if *k >= vocab_size || v.iter().any(|&t| t >= vocab_size) {
                return Err(Error::contract(format!("lexicon entry for {k} leaves the vocabulary")));
            }
        }
        Ok(())
    }

    /// Every member of each group maps to the other members.
    pub fn from_groups(groups: &[Vec<usize>]) -> Self {
        let mut entries = BTreeMap::new();
        for g in groups {
            for &t in g {
                let others: Vec<usize> = g.iter().copied().filter(|&o| o != t).collect();
                if !others.is_empty() {
                    entries.insert(t, others);
                }
            }
        }
        Self { entries }
    }

    pub fn synonyms(&self, token: usize) -> &[usize] {
        self.entries.get(&token).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Fixed `vocab_size × dim` embedding matrix.
#[derive(Debug)]
pub struct EmbeddingTable {
    vocab_size: usize,
    dim: usize,
    rows: Vec<f64>,
    seed: Option<u64>,
    neighbors: OnceLock<Vec<Vec<usize>>>,
}

impl Clone for EmbeddingTable {
    fn clone(&self) -> Self {
        Self {
            vocab_size: self.vocab_size,
            dim: self.dim,
            rows: self.rows.clone(),
            seed: self.seed,
            neighbors: OnceLock::new(),
        }
    }
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.vocab_size == other.vocab_size && self.dim == other.dim && self.rows == other.rows
    }
}

impl EmbeddingTable {
    /// Standard-normal rows scaled by `1/sqrt(dim)`, drawn from `seed`.
    pub fn seeded(vocab_size: usize, dim: usize, seed: u64) -> Result<Self> {
        if vocab_size == 0 || dim == 0 {
            return Err(Error::config("embedding table needs positive vocab size and dimension"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let rows = (0..vocab_size * dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self {
            vocab_size,
            dim,
            rows,
            seed: Some(seed),
            neighbors: OnceLock::new(),
        })
    }

    pub fn from_rows(vocab_size: usize, dim: usize, rows: Vec<f64>) -> Result<Self> {
        if vocab_size == 0 || dim == 0 || rows.len() != vocab_size * dim {
            return Err(Error::contract("embedding rows do not match the declared shape"));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("embedding rows must be finite"));
        }
        Ok(Self {
            vocab_size,
            dim,
            rows,
            seed: None,
            neighbors: OnceLock::new(),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The generating seed, if the table came from [`EmbeddingTable::seeded`].
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn row(&self, token: usize) -> &[f64] {
        &self.rows[token * self.dim..(token + 1) * self.dim]
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (self.row(a), self.row(b));
        let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
        let na = ra.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = rb.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// The `n` most cosine-similar other tokens, most similar first.
    pub fn nearest(&self, token: usize, n: usize) -> &[usize] {
        let all = self.neighbors.get_or_init(|| {
            (0..self.vocab_size)
                .map(|t| {
                    let mut others: Vec<(usize, f64)> = (0..self.vocab_size)
                        .filter(|&o| o != t)
                        .map(|o| (o, self.cosine(t, o)))
                        .collect();
                    others.sort_by(|a, b| b.1.total_cmp(&a.1));
                    others.into_iter().map(|(o, _)| o).collect()
                })
                .collect()
        });
        let list = &all[token];
        &list[..n.min(list.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Signal,
    Tokens,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Signal => "signal",
            Modality::Tokens => "tokens",
        }
    }

    pub fn weak_kinds(self) -> [AugmentKind; 3] {
        match self {
            Modality::Signal => [AugmentKind::Flip, AugmentKind::TimeMask, AugmentKind::PitchShift],
            Modality::Tokens => [AugmentKind::Swap, AugmentKind::Delete, AugmentKind::Synonym],
        }
    }

    pub fn strong_kind(self) -> AugmentKind {
        match self {
            Modality::Signal => AugmentKind::GaussianNoise,
            Modality::Tokens => AugmentKind::Contextual,
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signal" => Ok(Modality::Signal),
            "tokens" => Ok(Modality::Tokens),
            other => Err(Error::config(format!(
                "unknown modality `{other}` (expected signal or tokens)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    Flip,
    TimeMask,
    PitchShift,
    GaussianNoise,
    Swap,
    Delete,
    Synonym,
    Contextual,
}

impl AugmentKind {
    pub const ALL: [AugmentKind; 8] = [
        AugmentKind::Flip,
        AugmentKind::TimeMask,
        AugmentKind::PitchShift,
        AugmentKind::GaussianNoise,
        AugmentKind::Swap,
        AugmentKind::Delete,
        AugmentKind::Synonym,
        AugmentKind::Contextual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentKind::Flip => "flip",
            AugmentKind::TimeMask => "time_mask",
            AugmentKind::PitchShift => "pitch_shift",
            AugmentKind::GaussianNoise => "gaussian_noise",
            AugmentKind::Swap => "swap",
            AugmentKind::Delete => "delete",
            AugmentKind::Synonym => "synonym",
            AugmentKind::Contextual => "contextual",
        }
    }

    pub fn modality(self) -> Modality {
        match self {
            AugmentKind::Flip | AugmentKind::TimeMask | AugmentKind::PitchShift | AugmentKind::GaussianNoise => {
                Modality::Signal
            }
            _ => Modality::Tokens,
        }
    }

    pub fn is_strong(self) -> bool {
        matches!(self, AugmentKind::GaussianNoise | AugmentKind::Contextual)
    }
}

impl std::str::FromStr for AugmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugmentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown augmentation kind `{s}`")))
    }
}

impl std::fmt::Display for AugmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunables for every operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    /// Longest reversed segment, in frames (6.25 s at 16 kHz).
    pub flip_max_frames: usize,
    pub mask_max_frames: usize,
    /// Semitone bound; the shift is drawn from `[-n, n] \ {0}`.
    pub pitch_max_steps: u32,
    pub noise_scale: f64,
    pub swap_count: usize,
    pub delete_prob: f64,
    pub synonym_prob: f64,
    pub contextual_n: usize,
    pub contextual_prob: f64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            flip_max_frames: 100_000,
            mask_max_frames: 30_000,
            pitch_max_steps: 4,
            noise_scale: 0.05,
            swap_count: 1,
            delete_prob: 0.1,
            synonym_prob: 0.15,
            contextual_n: 5,
            contextual_prob: 0.15,
        }
    }
}

/// Reverses `frames[start..start + len]` in place.
pub fn flip_segment(frames: &mut [f64], start: usize, len: usize) {
    frames[start..start + len].reverse();
}

/// Zeroes `frames[start..start + len]`.
pub fn zero_span(frames: &mut [f64], start: usize, len: usize) {
    frames[start..start + len].fill(0.0);
}

/// Linear-interpolation resampling by `2^(steps/12)`, truncated or
/// zero-padded back to the input length.
pub fn pitch_shift_by(frames: &[f64], steps: i32) -> Vec<f64> {
    let factor = 2f64.powf(steps as f64 / 12.0);
    let n = frames.len();
    (0..n)
        .map(|i| {
            let pos = i as f64 * factor;
            let lo = pos.floor() as usize;
            if lo + 1 < n {
                let frac = pos - lo as f64;
                frames[lo] * (1.0 - frac) + frames[lo + 1] * frac
            } else if lo < n && pos == lo as f64 {
                frames[lo]
            } else {
                0.0
            }
        })
        .collect()
}

/// Uniform span `(start, len)` with `1 ≤ len ≤ min(max_len, n)`.
fn random_span<R: Rng + ?Sized>(n: usize, max_len: usize, rng: &mut R) -> (usize, usize) {
    let cap = max_len.min(n);
    if cap == 0 {
        return (0, 0);
    }
    let len = rng.random_range(1..=cap);
    let start = rng.random_range(0..=n - len);
    (start, len)
}

pub fn augment_signal<R: Rng + ?Sized>(
    seq: &SignalSequence,
    kind: AugmentKind,
    params: &AugmentParams,
    rng: &mut R,
) -> Result<SignalSequence> {
    let mut frames = seq.frames.clone();
    match kind {
        AugmentKind::Flip => {
            let (start, len) = random_span(frames.len(), params.flip_max_frames, rng);
            flip_segment(&mut frames, start, len);
        }
        AugmentKind::TimeMask => {
            let (start, len) = random_span(frames.len(), params.mask_max_frames, rng);
            zero_span(&mut frames, start, len);
        }
        AugmentKind::PitchShift => {
            let max = params.pitch_max_steps as i32;
            if max > 0 {
                // Draw from 2·max nonzero values.
                let mut s = rng.random_range(-max..max);
                if s >= 0 {
                    s += 1;
                }
                frames = pitch_shift_by(&frames, s);
            }
        }
        AugmentKind::GaussianNoise => {
            for f in &mut frames {
                let z: f64 = rng.sample(StandardNormal);
                *f += params.noise_scale * z;
            }
        }
        other => {
            return Err(Error::config(format!("`{other}` is not a signal augmentation")));
        }
    }
    Ok(SignalSequence {
        frames,
        sample_rate: seq.sample_rate,
    })
}

pub fn augment_tokens<R: Rng + ?Sized>(
    seq: &TokenSequence,
    kind: AugmentKind,
    params: &AugmentParams,
    lexicon: &SynonymLexicon,
    table: &EmbeddingTable,
    rng: &mut R,
) -> Result<TokenSequence> {
    let mut tokens = seq.tokens.clone();
    match kind {
        AugmentKind::Swap => {
            if tokens.len() >= 2 {
                for _ in 0..params.swap_count {
                    let i = rng.random_range(0..tokens.len() - 1);
                    tokens.swap(i, i + 1);
                }
            }
        }
        AugmentKind::Delete => {
            let kept: Vec<usize> = tokens
                .iter()
                .copied()
                .filter(|_| !rng.random_bool(params.delete_prob.clamp(0.0, 1.0)))
                .collect();
            tokens = if kept.is_empty() {
                vec![tokens[rng.random_range(0..tokens.len())]]
            } else {
                kept
            };
        }
        AugmentKind::Synonym => {
            for t in &mut tokens {
                if rng.random_bool(params.synonym_prob.clamp(0.0, 1.0)) {
                    let options = lexicon.synonyms(*t);
                    if !options.is_empty() {
                        *t = options[rng.random_range(0..options.len())];
                    }
                }
            }
        }
        AugmentKind::Contextual => {
            if table.vocab_size() < seq.vocab_size {
                return Err(Error::contract("embedding table smaller than the token vocabulary"));
            }
            for t in &mut tokens {
                if rng.random_bool(params.contextual_prob.clamp(0.0, 1.0)) {
                    let options = table.nearest(*t, params.contextual_n);
                    if !options.is_empty() {
                        *t = options[rng.random_range(0..options.len())];
                    }
                }
            }
        }
        other => {
            return Err(Error::config(format!("`{other}` is not a token augmentation")));
        }
    }
    Ok(TokenSequence {
        tokens,
        vocab_size: seq.vocab_size,
    })
}

/// Per-bin mean, standard deviation, min and max over `bins` equal spans.
pub fn featurize_signal(seq: &SignalSequence, bins: usize) -> Result<FeatureVector> {
    if bins == 0 {
        return Err(Error::config("signal featurizer needs at least one bin"));
    }
    let n = seq.frames.len();
    let mut out = Vec::with_capacity(4 * bins);
    for b in 0..bins {
        let start = (b * n / bins).min(n - 1);
        let end = ((b + 1) * n / bins).max(start + 1);
        let span = &seq.frames[start..end];
        let len = span.len() as f64;
        let mean = span.iter().sum::<f64>() / len;
        let var = span.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / len;
        let min = span.iter().copied().fold(f64::INFINITY, f64::min);
        let max = span.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.extend_from_slice(&[mean, var.sqrt(), min, max]);
    }
    FeatureVector::new(out)
}

/// Mean embedding row followed by `len / max_length`.
pub fn featurize_tokens(seq: &TokenSequence, table: &EmbeddingTable, max_length: usize) -> Result<FeatureVector> {
    if seq.tokens.iter().any(|&t| t >= table.vocab_size()) {
        return Err(Error::contract("token outside the embedding table"));
    }
    if max_length == 0 {
        return Err(Error::config("max_length must be positive"));
    }
    let mut out = vec![0.0; table.dim() + 1];
    for &t in &seq.tokens {
        for (o, v) in out.iter_mut().zip(table.row(t)) {
            *o += v;
        }
    }
    let n = seq.tokens.len() as f64;
    for o in &mut out[..table.dim()] {
        *o /= n;
    }
    out[table.dim()] = n / max_length as f64;
    FeatureVector::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn full_flip_reverses() {
        let seq = SignalSequence::new(vec![1.0, 2.0, 3.0, 4.0], 16_000).unwrap();
        let mut f = seq.frames().to_vec();
        flip_segment(&mut f, 0, 4);
        assert_eq!(f, vec![4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn zero_noise_is_identity() {
        let seq = SignalSequence::new(vec![0.5, -1.25, 3.0], 16_000).unwrap();
        let params = AugmentParams {
            noise_scale: 0.0,
            ..Default::default()
        };
        let out = augment_signal(&seq, AugmentKind::GaussianNoise, &params, &mut rng(1)).unwrap();
        assert_eq!(out, seq);
    }

    #[test]
    fn zero_span_counts() {
        let mut f = vec![1.0; 50];
        zero_span(&mut f, 10, 7);
        assert_eq!(f.iter().filter(|&&v| v == 0.0).count(), 7);
    }

    #[test]
    fn pitch_shift_zero_steps_is_identity() {
        let f = vec![0.1, 0.4, -0.3, 0.8];
        assert_eq!(pitch_shift_by(&f, 0), f);
    }

    #[test]
    fn pitch_shift_up_pads_tail() {
        // One octave up reads every second frame; the second half runs past the end.
        let f: Vec<f64> = (0..8).map(|i| i as f64 + 1.0).collect();
        let out = pitch_shift_by(&f, 12);
        assert!((out[1] - 3.0).abs() < 1e-12);
        assert_eq!(&out[4..], &[0.0; 4]);
    }

    #[test]
    fn signal_rejects_token_kind() {
        let seq = SignalSequence::new(vec![1.0], 16_000).unwrap();
        let err = augment_signal(&seq, AugmentKind::Swap, &AugmentParams::default(), &mut rng(0));
        assert!(matches!(err, Err(Error::Config(_))));
        assert!("warble".parse::<AugmentKind>().is_err());
    }

    #[test]
    fn single_swap_on_pair() {
        let table = EmbeddingTable::seeded(4, 2, 0).unwrap();
        let seq = TokenSequence::new(vec![0, 1], 4).unwrap();
        let out = augment_tokens(
            &seq,
            AugmentKind::Swap,
            &AugmentParams::default(),
            &SynonymLexicon::default(),
            &table,
            &mut rng(3),
        )
        .unwrap();
        assert_eq!(out.tokens(), &[1, 0]);
    }

    #[test]
    fn delete_with_zero_probability_keeps_all() {
        let table = EmbeddingTable::seeded(10, 2, 0).unwrap();
        let seq = TokenSequence::new(vec![3, 1, 4, 1, 5], 10).unwrap();
        let params = AugmentParams {
            delete_prob: 0.0,
            ..Default::default()
        };
        let out = augment_tokens(
            &seq,
            AugmentKind::Delete,
            &params,
            &SynonymLexicon::default(),
            &table,
            &mut rng(9),
        )
        .unwrap();
        assert_eq!(out, seq);
    }

    #[test]
    fn delete_everything_keeps_one() {
        let table = EmbeddingTable::seeded(10, 2, 0).unwrap();
        let seq = TokenSequence::new(vec![3, 1, 4], 10).unwrap();
        let params = AugmentParams {
            delete_prob: 1.0,
            ..Default::default()
        };
        let out = augment_tokens(
            &seq,
            AugmentKind::Delete,
            &params,
            &SynonymLexicon::default(),
            &table,
            &mut rng(2),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert!(seq.tokens().contains(&out.tokens()[0]));
    }

    #[test]
    fn contextual_n1_uses_nearest_neighbour() {
        // Token 0 is closest to 2, token 1 to 2, token 2 to 1 (by angle).
        let rows = vec![1.0, 0.0, 0.0, 1.0, 0.6, 0.8];
        let table = EmbeddingTable::from_rows(3, 2, rows).unwrap();
        let brute = |t: usize| {
            (0..3)
                .filter(|&o| o != t)
                .max_by(|&a, &b| table.cosine(t, a).total_cmp(&table.cosine(t, b)).then(b.cmp(&a)))
                .unwrap()
        };
        let params = AugmentParams {
            contextual_n: 1,
            contextual_prob: 1.0,
            ..Default::default()
        };
        let seq = TokenSequence::new(vec![0, 1, 2, 0], 3).unwrap();
        let out = augment_tokens(
            &seq,
            AugmentKind::Contextual,
            &params,
            &SynonymLexicon::default(),
            &table,
            &mut rng(5),
        )
        .unwrap();
        for (orig, new) in seq.tokens().iter().zip(out.tokens()) {
            assert_eq!(*new, brute(*orig));
        }
        assert_eq!(out.tokens(), &[2, 2, 1, 2]);
    }

    #[test]
    fn synonym_replaces_within_lexicon() {
        let lex = SynonymLexicon::from_groups(&[vec![0, 1, 2]]);
        let table = EmbeddingTable::seeded(5, 2, 0).unwrap();
        let params = AugmentParams {
            synonym_prob: 1.0,
            ..Default::default()
        };
        let seq = TokenSequence::new(vec![0, 3, 4], 5).unwrap();
        let out = augment_tokens(&seq, AugmentKind::Synonym, &params, &lex, &table, &mut rng(1)).unwrap();
        assert!([1, 2].contains(&out.tokens()[0]));
        assert_eq!(&out.tokens()[1..], &[3, 4]);
    }

    #[test]
    fn featurize_constant_signal() {
        let seq = SignalSequence::new(vec![2.5; 37], 16_000).unwrap();
        let f = featurize_signal(&seq, 5).unwrap();
        assert_eq!(f.dim(), 20);
        for chunk in f.as_slice().chunks(4) {
            assert_eq!(chunk, &[2.5, 0.0, 2.5, 2.5]);
        }
    }

    #[test]
    fn featurize_two_frame_signal_one_bin() {
        let seq = SignalSequence::new(vec![0.0, 1.0], 16_000).unwrap();
        let f = featurize_signal(&seq, 1).unwrap();
        assert_eq!(f.as_slice(), &[0.5, 0.5, 0.0, 1.0]);
        assert_eq!(f, featurize_signal(&seq, 1).unwrap());
    }

    #[test]
    fn featurize_short_signal_with_many_bins() {
        let seq = SignalSequence::new(vec![1.0, 2.0], 16_000).unwrap();
        let f = featurize_signal(&seq, 4).unwrap();
        assert_eq!(f.dim(), 16);
        assert!(f.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn featurize_tokens_mean_rows() {
        let table = EmbeddingTable::from_rows(3, 2, vec![1.0, 2.0, 3.0, -4.0, 0.0, 0.0]).unwrap();
        let one = featurize_tokens(&TokenSequence::new(vec![1], 3).unwrap(), &table, 4).unwrap();
        assert_eq!(one.as_slice(), &[3.0, -4.0, 0.25]);
        let two = featurize_tokens(&TokenSequence::new(vec![0, 1], 3).unwrap(), &table, 4).unwrap();
        assert_eq!(two.as_slice(), &[2.0, -1.0, 0.5]);
        let swapped = featurize_tokens(&TokenSequence::new(vec![1, 0], 3).unwrap(), &table, 4).unwrap();
        assert_eq!(two, swapped);
    }

    #[test]
    fn weak_and_strong_roles() {
        for m in [Modality::Signal, Modality::Tokens] {
            assert!(m.strong_kind().is_strong());
            assert!(m.weak_kinds().iter().all(|k| !k.is_strong() && k.modality() == m));
        }
    }
}
