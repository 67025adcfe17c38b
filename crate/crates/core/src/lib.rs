//! Semi-supervised multi-task classification.
//!
//! A shared-trunk, two-head classifier predicts an emotion and an intent for
//! each sample. Training combines supervised cross-entropy with fix-match
//! pseudo labelling and the full-match extensions (adaptive negative loss and
//! entropy meaning loss) so that low-confidence unlabelled samples still
//! contribute. Everything is deterministic given a seed.
//!
//! ```
//! use fullmatch::{jrbm, select_k};
//!
//! assert!((jrbm(0.351, 0.454) - 0.396).abs() < 5e-4);
//!
//! let weak = [0.7, 0.2, 0.1];
//! let strong = [0.3, 0.5, 0.2];
//! let sel = select_k(&[(&weak[..], &strong[..])], 0.99).unwrap();
//! assert_eq!(sel.k, 2);
//! ```

pub mod augment;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod io;
pub mod math;
pub mod metrics;
pub mod ssl;
pub mod trainer;

pub use augment::{
    augment_signal, augment_tokens, featurize_signal, featurize_tokens, AugmentKind, AugmentParams, EmbeddingTable,
    Modality, SignalSequence, SynonymLexicon, TokenSequence,
};
pub use data::{
    load_corpus, make_batches, save_corpus, stratified_split, synthesize_corpus, Corpus, GeneratorConfig, Payload,
    Sample, Split, SplitSpec,
};
pub use error::{Error, Result};
pub use math::{
    adam_step, backprop, finite_difference_gradient, forward, AdamConfig, AdamState, FeatureVector, Gradients,
    ProbObjective, Task, TaskProbs, TwoHeadModel,
};
pub use metrics::{confusion, jrbm, margin_fusion, weighted_f1, ConfusionMatrix, MetricsReport};
pub use ssl::{
    adaptive_negative_loss, entropy_meaning_loss, entropy_meaning_soft_label, fixmatch_loss, fullmatch_loss,
    gate_pseudo_label, multitask_loss, select_k, LossBreakdown, Method, MultiTaskLoss, SslObjective, SslParams,
};
pub use trainer::{evaluate, lr_at_epoch, train, EpochReport, Featurizer, TrainConfig, TrainOutcome};
