//! Runs the method by augmentation grid plus the fusion rows and prints the table.

use fullmatch::data::{synthesize_corpus, GeneratorConfig};
use fullmatch::experiment::run_sweep;
use fullmatch::trainer::TrainConfig;

fn main() -> fullmatch::Result<()> {
    let corpus = synthesize_corpus(&GeneratorConfig {
        emotion_counts: vec![30, 30, 60],
        intent_counts: vec![40, 40, 40],
        unlabelled: 200,
        seed: 9,
        ..GeneratorConfig::default()
    })?;
    let base = TrainConfig {
        epochs: 5,
        lr0: 0.01,
        seed: 9,
        ..TrainConfig::default()
    };
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let result = run_sweep(&base, &corpus, threads, None)?;
    print!("{}", result.to_csv());
    Ok(())
}
