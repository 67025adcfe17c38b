//! Trains full-match on a synthetic signal corpus and reports test metrics.

use fullmatch::augment::AugmentKind;
use fullmatch::data::{synthesize_corpus, GeneratorConfig};
use fullmatch::trainer::{epochs_to_csv, evaluate, train, TrainConfig};
use fullmatch::Method;

fn main() -> fullmatch::Result<()> {
    let corpus = synthesize_corpus(&GeneratorConfig {
        emotion_counts: vec![40, 40, 40, 80],
        intent_counts: vec![60, 60, 80],
        unlabelled: 600,
        seed: 1,
        ..GeneratorConfig::default()
    })?;
    let mut config = TrainConfig {
        method: Method::FullMatch,
        weak_aug_kind: Some(AugmentKind::TimeMask),
        epochs: 20,
        lr0: 0.01,
        lr_decay: 0.97,
        seed: 1,
        ..TrainConfig::default()
    };
    config.augment.mask_max_frames = 48;
    config.augment.flip_max_frames = 48;

    let out = train(&config, &corpus)?;
    print!("{}", epochs_to_csv(&out.reports));
    let featurizer = out.featurizer.bind(&corpus.embedding_table);
    let test = evaluate(&out.model, &out.test, &featurizer)?;
    println!(
        "best epoch {}: test F1 emotion {:.4}, intent {:.4}, JRBM {:.4}",
        out.best_epoch, test.f1_emotion, test.f1_intent, test.jrbm
    );
    Ok(())
}
