//! Applies every signal and token augmentation to a small input.

use fullmatch::augment::{
    augment_signal, augment_tokens, AugmentKind, AugmentParams, EmbeddingTable, SignalSequence, SynonymLexicon,
    TokenSequence,
};
use fullmatch::data::stream_rng;

fn main() -> fullmatch::Result<()> {
    let signal = SignalSequence::new((0..12).map(|i| (i as f64 * 0.5).sin()).collect(), 16000)?;
    let tokens = TokenSequence::new(vec![3, 1, 4, 1, 5, 9, 2, 6], 12)?;
    let lexicon = SynonymLexicon::from_groups(&[vec![1, 7, 8], vec![4, 10], vec![9, 11]]);
    let table = EmbeddingTable::seeded(12, 6, 1)?;
    let params = AugmentParams {
        flip_max_frames: 4,
        mask_max_frames: 4,
        synonym_prob: 0.5,
        contextual_prob: 0.5,
        ..AugmentParams::default()
    };

    println!("signal   {:?}", round(signal.frames()));
    for kind in [
        AugmentKind::Flip,
        AugmentKind::TimeMask,
        AugmentKind::PitchShift,
        AugmentKind::GaussianNoise,
    ] {
        let out = augment_signal(&signal, kind, &params, &mut stream_rng(5, 20))?;
        println!("{:<8} {:?}", kind.name(), round(out.frames()));
    }
    println!("tokens   {:?}", tokens.tokens());
    for kind in [
        AugmentKind::Swap,
        AugmentKind::Delete,
        AugmentKind::Synonym,
        AugmentKind::Contextual,
    ] {
        let out = augment_tokens(&tokens, kind, &params, &lexicon, &table, &mut stream_rng(5, 20))?;
        println!("{:<8} {:?}", kind.name(), out.tokens());
    }
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 100.0).round() / 100.0).collect()
}
