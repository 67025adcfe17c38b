//! Fuses a baseline and a full-match model by picking the more decisive one per sample.

use fullmatch::data::{synthesize_corpus, GeneratorConfig};
use fullmatch::metrics::{margin_fusion, MetricsReport};
use fullmatch::trainer::{predict, train, TrainConfig};
use fullmatch::Method;

fn main() -> fullmatch::Result<()> {
    let corpus = synthesize_corpus(&GeneratorConfig {
        emotion_counts: vec![50, 50, 100],
        intent_counts: vec![70, 70, 60],
        unlabelled: 300,
        separation: 0.7,
        seed: 4,
        ..GeneratorConfig::default()
    })?;
    let base = TrainConfig {
        epochs: 20,
        lr0: 0.01,
        lr_decay: 0.97,
        seed: 4,
        ..TrainConfig::default()
    };
    let mut tables = Vec::new();
    let mut test = Vec::new();
    for method in [Method::Baseline, Method::FullMatch] {
        let out = train(&TrainConfig { method, ..base.clone() }, &corpus)?;
        let probs = predict(&out.model, &out.test, &out.featurizer.bind(&corpus.embedding_table))?;
        test = out.test;
        tables.push(probs);
    }
    let (ye, yi): (Vec<usize>, Vec<usize>) = test.iter().map(|s| s.labels().expect("labelled")).unzip();
    let (ce, ci) = (corpus.label_names.emotion.len(), corpus.label_names.intent.len());

    for (method, probs) in ["baseline", "fullmatch"].iter().zip(&tables) {
        let (pe, pi): (Vec<usize>, Vec<usize>) = probs
            .iter()
            .map(|p| (fullmatch::math::argmax(&p.emotion), fullmatch::math::argmax(&p.intent)))
            .unzip();
        let r = MetricsReport::from_predictions((&pe, &ye), (&pi, &yi), ce, ci)?;
        println!("{method:<9} JRBM {:.4}", r.jrbm);
    }
    let (pe, pi): (Vec<usize>, Vec<usize>) = margin_fusion(&tables)?.into_iter().unzip();
    let fused = MetricsReport::from_predictions((&pe, &ye), (&pi, &yi), ce, ci)?;
    println!("fused     JRBM {:.4}", fused.jrbm);
    Ok(())
}
