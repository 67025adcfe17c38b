//! Generates a synthetic corpus and splits it with joint-label stratification.

use fullmatch::data::{class_counts, stratified_split, synthesize_corpus, GeneratorConfig, SplitSpec};

fn main() -> fullmatch::Result<()> {
    let corpus = synthesize_corpus(&GeneratorConfig {
        emotion_counts: vec![111, 112, 111, 138, 304, 112, 112],
        intent_counts: vec![95, 104, 96, 87, 253, 149, 117, 99],
        unlabelled: 500,
        seed: 3,
        ..GeneratorConfig::default()
    })?;
    println!(
        "{} labelled, {} unlabelled",
        corpus.labelled.len(),
        corpus.unlabelled.len()
    );

    let split = stratified_split(&corpus.labelled, &SplitSpec::new(0.7, 0.15, 0.15, 3)?)?;
    let (ce, ci) = (corpus.label_names.emotion.len(), corpus.label_names.intent.len());
    for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
        let (e, i) = class_counts(part, ce, ci);
        println!("{name:<5} {:>4} samples  emotion {e:?}  intent {i:?}", part.len());
    }
    for w in &split.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
