use std::collections::{BTreeMap, BTreeSet};

use fullmatch::augment::{Modality, SignalSequence};
use fullmatch::data::{
    apportion, class_counts, load_corpus, make_batches, save_corpus, stratified_split, synthesize_corpus,
    GeneratorConfig, Payload, Sample, SplitSpec,
};
use proptest::prelude::*;

fn sample(id: usize, emotion: usize, intent: usize) -> Sample {
    Sample {
        id: format!("s{id}"),
        payload: Payload::Signal(SignalSequence::new(vec![0.0, 1.0], 16000).unwrap()),
        emotion: Some(emotion),
        intent: Some(intent),
    }
}

fn pool(sizes: &[(usize, usize, usize)]) -> Vec<Sample> {
    let mut out = Vec::new();
    for &(e, i, n) in sizes {
        for _ in 0..n {
            out.push(sample(out.len(), e, i));
        }
    }
    out
}

fn joint_counts(samples: &[Sample]) -> BTreeMap<(usize, usize), usize> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(s.labels().unwrap()).or_default() += 1;
    }
    m
}

#[test]
fn neutral_emotion_split_matches_reference_counts() {
    let samples = pool(&[(4, 4, 970)]);
    let split = stratified_split(&samples, &SplitSpec::new(0.84, 0.16, 0.0, 7).unwrap()).unwrap();
    assert_eq!((split.train.len(), split.valid.len(), split.test.len()), (815, 155, 0));
}

#[test]
fn every_joint_class_within_one_of_target_over_many_seeds() {
    let samples = pool(&[(0, 0, 37), (0, 1, 12), (1, 1, 101), (2, 3, 5), (3, 0, 64), (4, 4, 250)]);
    let joint = joint_counts(&samples);
    let fractions = [0.7, 0.15, 0.15];
    for seed in 0..100 {
        let split = stratified_split(&samples, &SplitSpec::new(0.7, 0.15, 0.15, seed).unwrap()).unwrap();
        for (part, f) in [&split.train, &split.valid, &split.test].into_iter().zip(fractions) {
            let got = joint_counts(part);
            for (key, &n) in &joint {
                let have = *got.get(key).unwrap_or(&0) as f64;
                assert!((have - f * n as f64).abs() <= 1.0, "seed {seed} class {key:?}");
            }
        }
    }
}

#[test]
fn tiny_class_goes_to_train_with_warning() {
    let samples = pool(&[(0, 0, 2), (1, 1, 30)]);
    let split = stratified_split(&samples, &SplitSpec::new(0.6, 0.2, 0.2, 1).unwrap()).unwrap();
    assert_eq!(split.warnings.len(), 1);
    assert_eq!(split.train.iter().filter(|s| s.emotion == Some(0)).count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_is_a_partition(
        sizes in prop::collection::vec((0usize..7, 0usize..8, 1usize..40), 1..8),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let spec = SplitSpec::new(lo, hi - lo, 1.0 - hi, seed).unwrap();
        let samples = pool(&sizes);
        let split = stratified_split(&samples, &spec).unwrap();
        let ids: Vec<&str> = split.train.iter().chain(&split.valid).chain(&split.test).map(|s| s.id.as_str()).collect();
        let unique: BTreeSet<&str> = ids.iter().copied().collect();
        prop_assert_eq!(ids.len(), samples.len());
        prop_assert_eq!(unique.len(), samples.len());
    }

    #[test]
    fn apportion_is_exact_and_close(n in 0usize..5000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f = [lo, hi - lo, 1.0 - hi];
        let counts = apportion(n, &f);
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
        for (c, f) in counts.iter().zip(f) {
            prop_assert!((*c as f64 - f * n as f64).abs() < 1.0);
        }
    }
}

#[test]
fn split_fractions_must_sum_to_one() {
    assert!(SplitSpec::new(0.5, 0.3, 0.3, 0).is_err());
    assert!(SplitSpec::new(-0.1, 0.6, 0.5, 0).is_err());
}

fn small_generator(modality: Modality, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        emotion_counts: vec![10, 12, 8],
        intent_counts: vec![6, 9, 7, 8],
        unlabelled: 15,
        min_len: 16,
        max_len: 40,
        modality,
        vocab_size: 60,
        seed,
        ..Default::default()
    }
}

#[test]
fn generator_honours_counts_and_is_deterministic() {
    for modality in [Modality::Signal, Modality::Tokens] {
        let cfg = small_generator(modality, 3);
        let a = synthesize_corpus(&cfg).unwrap();
        let b = synthesize_corpus(&cfg).unwrap();
        assert_eq!(a, b);
        let (e, i) = class_counts(&a.labelled, 3, 4);
        assert_eq!(e, vec![10, 12, 8]);
        assert_eq!(i, vec![6, 9, 7, 8]);
        assert_eq!(a.unlabelled.len(), 15);
        assert!(a.unlabelled.iter().all(|s| !s.is_labelled()));
        assert!(a.labelled.iter().all(|s| s.modality() == modality));
        let other = synthesize_corpus(&small_generator(modality, 4)).unwrap();
        assert_ne!(a, other);
    }
}

#[test]
fn full_correlation_makes_intent_a_function_of_emotion() {
    let cfg = GeneratorConfig {
        emotion_counts: vec![5, 9, 4],
        intent_counts: vec![5, 9, 4],
        correlation: 1.0,
        ..small_generator(Modality::Signal, 11)
    };
    let corpus = synthesize_corpus(&cfg).unwrap();
    let mut map = BTreeMap::new();
    for s in &corpus.labelled {
        let (e, i) = s.labels().unwrap();
        assert_eq!(*map.entry(e).or_insert(i), i);
    }
}

#[test]
fn corpus_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for modality in [Modality::Signal, Modality::Tokens] {
        let corpus = synthesize_corpus(&small_generator(modality, 5)).unwrap();
        let path = dir.path().join(format!("{}.jsonl", modality.name()));
        save_corpus(&corpus, &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), corpus);
    }
}

#[test]
fn malformed_record_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthesize_corpus(&small_generator(Modality::Tokens, 5)).unwrap();
    let path = dir.path().join("c.jsonl");
    save_corpus(&corpus, &path).unwrap();
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"id\": \"broken\"}\n");
    std::fs::write(&path, text).unwrap();
    let err = load_corpus(&path).unwrap_err().to_string();
    let last_line = corpus.labelled.len() + corpus.unlabelled.len() + 2;
    assert!(err.contains(&last_line.to_string()), "{err}");
}

#[test]
fn batches_cover_labelled_pool_once_per_epoch() {
    let mut sampler = make_batches(50, 30, 16, 2.0, 9).unwrap();
    assert_eq!(sampler.steps_per_epoch(), 4);
    for _ in 0..3 {
        let epoch = sampler.next_epoch();
        let mut seen: Vec<usize> = epoch.iter().flat_map(|b| b.labelled.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..50).collect::<Vec<_>>());
        assert!(epoch
            .iter()
            .all(|b| b.unlabelled.len() == 32 && b.unlabelled.iter().all(|&u| u < 30)));
    }
    let none = make_batches(50, 0, 16, 2.0, 9).unwrap().next_epoch();
    assert!(none.iter().all(|b| b.unlabelled.is_empty()));
}

#[test]
fn labelled_order_ignores_unlabelled_pool() {
    let a = make_batches(40, 0, 8, 1.0, 3).unwrap().next_epoch();
    let b = make_batches(40, 500, 8, 1.0, 3).unwrap().next_epoch();
    let la: Vec<_> = a.iter().map(|x| x.labelled.clone()).collect();
    let lb: Vec<_> = b.iter().map(|x| x.labelled.clone()).collect();
    assert_eq!(la, lb);
}
