//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fullmatch::augment::{
    augment_signal, augment_tokens, AugmentKind, AugmentParams, EmbeddingTable, SignalSequence, SynonymLexicon,
    TokenSequence,
};
use fullmatch::data::{stratified_split, synthesize_corpus, GeneratorConfig, Payload, Sample, SplitSpec};
use fullmatch::experiment::{run_gradcheck, GradcheckShape, GRADCHECK_CASES};
use fullmatch::math::{softmax, ProbObjective, Task, TaskProbs};
use fullmatch::metrics::{jrbm, margin_fusion, margin_fusion_task, weighted_f1};
use fullmatch::ssl::{
    adaptive_negative_loss, entropy_meaning_soft_label, fixmatch_loss, fullmatch_loss, select_k, Method, SslObjective,
    SslParams,
};
use fullmatch::trainer::{train, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_dist(rng: &mut ChaCha8Rng, classes: usize, scale: f64) -> Vec<f64> {
    let logits: Vec<f64> = (0..classes).map(|_| rng.random_range(-scale..scale)).collect();
    softmax(&logits)
}

/// Index of the largest value, lowest index on ties.
fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Classes ordered by descending probability, lower index first on ties.
fn descending(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    order
}

fn metric_fidelity() -> Outcome {
    let rows = [
        (0.351, 0.454, 0.396),
        (0.292, 0.323, 0.307),
        (0.301, 0.399, 0.343),
        (0.338, 0.453, 0.387),
    ];
    let worst = rows
        .iter()
        .map(|&(a, b, want)| (jrbm(a, b) - want).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 5e-4, format!("4 rows, max deviation {worst:.2e}"))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut inactive = Vec::new();
    let mut configurations = 0;
    for seed in 0..5 {
        let report = match run_gradcheck(seed, 20, &GradcheckShape::default()) {
            Ok(r) => r,
            Err(e) => return outcome(false, e.to_string()),
        };
        worst = worst.max(report.max_relative_error());
        configurations = report.results.len();
        for (r, c) in report.results.iter().zip(GRADCHECK_CASES) {
            if c.method.uses_unlabelled() && r.active_batches == 0 {
                inactive.push(r.case);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && inactive.is_empty() && elapsed < 60.0,
        format!(
            "{configurations} configurations x 100 seeded batches, max relative error {worst:.2e}, {elapsed:.1}s{}",
            if inactive.is_empty() {
                String::new()
            } else {
                format!(", inactive: {inactive:?}")
            }
        ),
    )
}

fn small_corpus() -> fullmatch::data::Corpus {
    synthesize_corpus(&GeneratorConfig {
        emotion_counts: vec![30, 40, 30],
        intent_counts: vec![50, 50],
        unlabelled: 80,
        min_len: 32,
        max_len: 64,
        separation: 2.0,
        seed: 21,
        ..Default::default()
    })
    .expect("corpus")
}

fn degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut loss_mismatch = 0;
    for _ in 0..200 {
        let c = rng.random_range(2..9);
        let b = rng.random_range(1..9);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..b)
            .map(|_| (random_dist(&mut rng, c, 4.0), random_dist(&mut rng, c, 4.0)))
            .collect();
        let labelled: Vec<(Vec<f64>, usize)> = (0..b)
            .map(|_| (random_dist(&mut rng, c, 2.0), rng.random_range(0..c)))
            .collect();
        let u: Vec<(&[f64], &[f64])> = pairs.iter().map(|(w, s)| (w.as_slice(), s.as_slice())).collect();
        let l: Vec<(&[f64], usize)> = labelled.iter().map(|(p, y)| (p.as_slice(), *y)).collect();
        let tau = rng.random_range(0.1..1.0);
        let sigma = rng.random_range(0.0..1.0);
        let full = fullmatch_loss(&l, &u, tau, sigma, 0.5, 0.0, 0.0).unwrap();
        let fix = fixmatch_loss(&l, &u, tau, 0.5).unwrap();
        if full.total != fix.total {
            loss_mismatch += 1;
        }
    }

    let corpus = small_corpus();
    let cfg = TrainConfig {
        epochs: 5,
        labelled_batch_size: 8,
        lr0: 0.01,
        hidden: 16,
        signal_bins: 4,
        seed: 8,
        ..Default::default()
    };
    let base = train(
        &TrainConfig {
            method: Method::Baseline,
            ..cfg.clone()
        },
        &corpus,
    )
    .unwrap();
    let fix = train(
        &TrainConfig {
            method: Method::FixMatch,
            tau: 1.0,
            ..cfg
        },
        &corpus,
    )
    .unwrap();
    let same_trajectory = base.final_model == fix.final_model
        && base
            .reports
            .iter()
            .zip(&fix.reports)
            .all(|(a, b)| a.valid == b.valid && a.emotion.l_sup == b.emotion.l_sup);

    let mut fusion_mismatch = 0;
    for _ in 0..100 {
        let model: Vec<TaskProbs> = (0..10)
            .map(|_| TaskProbs {
                emotion: random_dist(&mut rng, 7, 3.0),
                intent: random_dist(&mut rng, 8, 3.0),
            })
            .collect();
        let fused = margin_fusion(std::slice::from_ref(&model)).unwrap();
        for (f, p) in fused.iter().zip(&model) {
            if *f != (first_max(&p.emotion), first_max(&p.intent)) {
                fusion_mismatch += 1;
            }
        }
    }
    outcome(
        loss_mismatch == 0 && same_trajectory && fusion_mismatch == 0,
        format!(
            "loss mismatches {loss_mismatch}/200, fixmatch(tau=1) trajectory identical: {same_trajectory}, single-model fusion mismatches {fusion_mismatch}"
        ),
    )
}

fn oracle_f1(preds: &[usize], labels: &[usize], classes: usize) -> f64 {
    let n = labels.len() as f64;
    (0..classes)
        .map(|c| {
            let tp = preds.iter().zip(labels).filter(|&(&p, &y)| p == c && y == c).count() as f64;
            let pred = preds.iter().filter(|&&p| p == c).count() as f64;
            let sup = labels.iter().filter(|&&y| y == c).count() as f64;
            if tp == 0.0 {
                return 0.0;
            }
            let (p, r) = (tp / pred, tp / sup);
            sup / n * 2.0 * p * r / (p + r)
        })
        .sum()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut k_mismatch = 0;
    for _ in 0..1000 {
        let c = rng.random_range(2..10);
        let b = rng.random_range(1..17);
        let sigma = rng.random_range(0.0..1.0);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..b)
            .map(|_| (random_dist(&mut rng, c, 3.0), random_dist(&mut rng, c, 3.0)))
            .collect();
        let u: Vec<(&[f64], &[f64])> = pairs.iter().map(|(w, s)| (w.as_slice(), s.as_slice())).collect();
        let brute = (1..=c)
            .find(|&k| {
                let hits = pairs
                    .iter()
                    .filter(|(w, s)| descending(s)[..k].contains(&first_max(w)))
                    .count();
                hits as f64 / b as f64 > sigma
            })
            .unwrap_or(c);
        if select_k(&u, sigma).unwrap().k != brute {
            k_mismatch += 1;
        }
    }

    let mut f1_mismatch = 0;
    for _ in 0..100 {
        let c = rng.random_range(2..9);
        let n = rng.random_range(1..200);
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        if (weighted_f1(&preds, &labels, c).unwrap() - oracle_f1(&preds, &labels, c)).abs() > 1e-12 {
            f1_mismatch += 1;
        }
    }

    let mut fusion_mismatch = 0;
    for _ in 0..100 {
        let m = rng.random_range(2..6);
        let s = rng.random_range(1..30);
        let c = rng.random_range(2..9);
        let tables: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|_| (0..s).map(|_| random_dist(&mut rng, c, 3.0)).collect())
            .collect();
        let refs: Vec<&[Vec<f64>]> = tables.iter().map(|t| t.as_slice()).collect();
        let got = margin_fusion_task(&refs).unwrap();
        for (i, &g) in got.iter().enumerate() {
            let mut best_model = 0;
            let mut best_margin = f64::NEG_INFINITY;
            for (j, t) in tables.iter().enumerate() {
                let order = descending(&t[i]);
                let margin = t[i][order[0]] - t[i][order[1]];
                if margin > best_margin {
                    best_margin = margin;
                    best_model = j;
                }
            }
            if g != first_max(&tables[best_model][i]) {
                fusion_mismatch += 1;
            }
        }
    }
    outcome(
        k_mismatch + f1_mismatch + fusion_mismatch == 0,
        format!("select_k {k_mismatch}/1000, weighted_f1 {f1_mismatch}/100, fusion {fusion_mismatch}/100 mismatches"),
    )
}

fn structural_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut overlap = 0;
    let mut worst_mass = 0.0f64;
    let mut neg_at_c = 0.0f64;
    let batches = 1000;
    for _ in 0..batches {
        let c = rng.random_range(2..10);
        let b = rng.random_range(1..9);
        let sigma = rng.random_range(0.0..1.0);
        let weak: Vec<TaskProbs> = (0..b)
            .map(|_| {
                let p = random_dist(&mut rng, c, 4.0);
                TaskProbs {
                    emotion: p.clone(),
                    intent: p,
                }
            })
            .collect();
        let strong: Vec<TaskProbs> = (0..b)
            .map(|_| {
                let p = random_dist(&mut rng, c, 4.0);
                TaskProbs {
                    emotion: p.clone(),
                    intent: p,
                }
            })
            .collect();
        let support = |lambdas: [f64; 3]| {
            let params = SslParams {
                tau: 1e-9,
                sigma,
                lambda1: lambdas[0],
                lambda2: lambdas[1],
                lambda3: lambdas[2],
                task_weight: 1.0,
            };
            let obj = SslObjective::new(Method::FullMatch, params, &[], &weak, &strong).unwrap();
            let (_, g) = obj.evaluate(&strong).unwrap();
            let sets: Vec<Vec<usize>> = g
                .iter()
                .map(|g| (0..c).filter(|&k| g.emotion[k] != 0.0).collect())
                .collect();
            (sets, obj)
        };
        let (fix, obj) = support([1.0, 0.0, 0.0]);
        let (neg, _) = support([0.0, 1.0, 0.0]);
        let (ent, _) = support([0.0, 0.0, 1.0]);
        let k = obj.decisions(Task::Emotion).k.unwrap().k;
        for i in 0..b {
            let order = descending(&weak[i].emotion);
            let rank = |cls: usize| order.iter().position(|&o| o == cls).unwrap() + 1;
            let ok = fix[i].iter().all(|&x| rank(x) == 1)
                && ent[i].iter().all(|&x| (2..=k).contains(&rank(x)))
                && neg[i].iter().all(|&x| rank(x) > k);
            if !ok {
                overlap += 1;
            }
            if k >= 2 {
                let soft = entropy_meaning_soft_label(&weak[i].emotion, &strong[i].emotion, k).unwrap();
                worst_mass = worst_mass.max((soft.mass() - (1.0 - strong[i].emotion[order[0]])).abs());
            }
        }
        let u: Vec<(&[f64], &[f64])> = weak
            .iter()
            .zip(&strong)
            .map(|(w, s)| (w.emotion.as_slice(), s.emotion.as_slice()))
            .collect();
        neg_at_c = neg_at_c.max(adaptive_negative_loss(&u, c).unwrap().abs());
    }
    outcome(
        overlap == 0 && worst_mass <= 1e-12 && neg_at_c == 0.0,
        format!("{batches} batches: partition violations {overlap}, max mass error {worst_mass:.1e}, max L_a at k=C {neg_at_c}"),
    )
}

fn labelled(id: usize, e: usize, i: usize) -> Sample {
    Sample {
        id: format!("x{id}"),
        payload: Payload::Signal(SignalSequence::new(vec![0.0], 16000).unwrap()),
        emotion: Some(e),
        intent: Some(i),
    }
}

fn splitting() -> Outcome {
    let neutral: Vec<Sample> = (0..970).map(|n| labelled(n, 4, 4)).collect();
    let s = stratified_split(&neutral, &SplitSpec::new(0.84, 0.16, 0.0, 0).unwrap()).unwrap();
    let neutral_ok = (s.train.len(), s.valid.len()) == (815, 155);

    let mut pool = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for e in 0..7 {
        for i in 0..8 {
            for _ in 0..rng.random_range(3..40) {
                pool.push(labelled(pool.len(), e, i));
            }
        }
    }
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for x in &pool {
        *joint.entry(x.labels().unwrap()).or_default() += 1;
    }
    let fractions = [0.7, 0.15, 0.15];
    let mut violations = 0;
    for seed in 0..100 {
        let split = stratified_split(&pool, &SplitSpec::new(0.7, 0.15, 0.15, seed).unwrap()).unwrap();
        for (part, f) in [&split.train, &split.valid, &split.test].into_iter().zip(fractions) {
            let mut got: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for x in part {
                *got.entry(x.labels().unwrap()).or_default() += 1;
            }
            for (key, &n) in &joint {
                if (*got.get(key).unwrap_or(&0) as f64 - f * n as f64).abs() > 1.0 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        neutral_ok && violations == 0,
        format!(
            "970 at (0.84, 0.16) -> {}/{}, joint-class violations over 100 seeds: {violations}",
            s.train.len(),
            s.valid.len()
        ),
    )
}

/// Class counts with a dominant neutral class, 1000 labelled samples in total.
const DESK_EMOTION: [usize; 7] = [111, 112, 111, 138, 304, 112, 112];
const DESK_INTENT: [usize; 8] = [95, 104, 96, 87, 253, 149, 117, 99];

fn desk_config(method: Method, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig {
        method,
        weak_aug_kind: Some(AugmentKind::TimeMask),
        epochs: 60,
        lr0: 0.01,
        lr_decay: 0.97,
        split_train: 0.2,
        split_valid: 0.4,
        split_test: 0.4,
        seed,
        ..Default::default()
    };
    cfg.augment.mask_max_frames = 48;
    cfg.augment.flip_max_frames = 48;
    cfg
}

fn desk_experiment() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut active_everywhere = true;
    let mut per_seed = Vec::new();
    for seed in 1..=5u64 {
        let corpus = synthesize_corpus(&GeneratorConfig {
            emotion_counts: DESK_EMOTION.to_vec(),
            intent_counts: DESK_INTENT.to_vec(),
            unlabelled: 5000,
            seed,
            ..Default::default()
        })
        .unwrap();
        let test_jrbm = |method| -> (f64, fullmatch::trainer::TrainOutcome) {
            let out = train(&desk_config(method, seed), &corpus).unwrap();
            let f = out.featurizer.bind(&corpus.embedding_table);
            (
                fullmatch::trainer::evaluate(&out.model, &out.test, &f).unwrap().jrbm,
                out,
            )
        };
        let (base, _) = test_jrbm(Method::Baseline);
        let (fix, _) = test_jrbm(Method::FixMatch);
        let (full, full_out) = test_jrbm(Method::FullMatch);
        if fix >= base {
            wins += 1;
        }
        let quiet = full_out.reports[1..]
            .iter()
            .filter(|r| {
                r.emotion.accepted_count + r.intent.accepted_count == 0
                    || r.emotion.l_neg + r.intent.l_neg == 0.0
                    || r.emotion.l_ent + r.intent.l_ent == 0.0
            })
            .count();
        let acceptance: Vec<String> = full_out
            .reports
            .iter()
            .step_by(15)
            .map(|r| format!("{:.2}/{:.2}", r.acceptance_rate_emotion, r.acceptance_rate_intent))
            .collect();
        let active = quiet == 0;
        active_everywhere &= active;
        per_seed.push(format!(
            "seed {seed}: base {base:.4} fix {fix:.4} full {full:.4}, fullmatch inactive epochs {quiet}, acceptance {}",
            acceptance.join(" ")
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        wins >= 4 && active_everywhere && elapsed < 300.0,
        format!(
            "fixmatch >= baseline in {wins}/5 seeds, fullmatch terms active every epoch: {active_everywhere}, {elapsed:.0}s [{}]",
            per_seed.join("; ")
        ),
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fullmatch"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |x: &Path| x.to_str().unwrap().to_string();
    let gen = d.join("gen.cfg");
    std::fs::write(
        &gen,
        "emotion_counts = 20,25,15\nintent_counts = 30,30\nunlabelled = 60\nmin_len = 32\nmax_len = 64\n",
    )
    .unwrap();
    let trc = d.join("train.cfg");
    std::fs::write(&trc, "method = fullmatch\nepochs = 3\nlabelled_batch_size = 8\nlr0 = 0.01\nhidden = 16\nsignal_bins = 4\nmask_max_frames = 16\n").unwrap();
    let mut ok = true;
    for run in ["a", "b"] {
        ok &= cli(&[
            "gen-data",
            "--config",
            &p(&gen),
            "--out",
            &p(&d.join(run)),
            "--seed",
            "5",
        ]);
    }
    let corpus = d.join("a").join("corpus.jsonl");
    for run in ["ta", "tb"] {
        ok &= cli(&[
            "train",
            "--config",
            &p(&trc),
            "--corpus",
            &p(&corpus),
            "--out",
            &p(&d.join(run)),
            "--seed",
            "2",
        ]);
    }
    let read = |x: &Path| std::fs::read(x).unwrap_or_default();
    let corpus_same = read(&d.join("a/corpus.jsonl")) == read(&d.join("b/corpus.jsonl"));
    let csv_same = read(&d.join("ta/epochs.csv")) == read(&d.join("tb/epochs.csv"));
    outcome(
        ok && corpus_same && csv_same && !read(&d.join("ta/epochs.csv")).is_empty(),
        format!("commands succeeded: {ok}, corpus files identical: {corpus_same}, epoch CSVs identical: {csv_same}"),
    )
}

fn augmentation_properties() -> Outcome {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vocab = 40;
    let lexicon = SynonymLexicon::from_groups(&[vec![0, 1, 2], vec![5, 6], vec![20, 21, 22, 23]]);
    let table = EmbeddingTable::seeded(vocab, 8, 17).unwrap();
    let mut fails: BTreeMap<&str, usize> = BTreeMap::new();
    let mut bump = |name: &'static str, ok: bool| {
        let e = fails.entry(name).or_insert(0);
        if !ok {
            *e += 1;
        }
    };
    for case in 0..CASES {
        let n = rng.random_range(1..200);
        let frames: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sig = SignalSequence::new(frames, 16000).unwrap();
        let toks = TokenSequence::new(
            (0..rng.random_range(1..60))
                .map(|_| rng.random_range(0..vocab))
                .collect(),
            vocab,
        )
        .unwrap();
        let params = AugmentParams {
            flip_max_frames: rng.random_range(1..300),
            mask_max_frames: rng.random_range(1..300),
            pitch_max_steps: rng.random_range(0..6),
            noise_scale: rng.random_range(0.0..0.2),
            swap_count: rng.random_range(0..5),
            delete_prob: rng.random_range(0.0..1.0),
            synonym_prob: rng.random_range(0.0..1.0),
            contextual_n: rng.random_range(1..8),
            contextual_prob: rng.random_range(0.0..1.0),
        };
        let seed = case as u64;
        let r = || ChaCha8Rng::seed_from_u64(seed);
        for kind in [
            AugmentKind::Flip,
            AugmentKind::TimeMask,
            AugmentKind::PitchShift,
            AugmentKind::GaussianNoise,
        ] {
            let a = augment_signal(&sig, kind, &params, &mut r()).unwrap();
            let b = augment_signal(&sig, kind, &params, &mut r()).unwrap();
            bump("length", a.len() == sig.len() && a.sample_rate() == sig.sample_rate());
            bump("reproducible", a == b);
            if kind == AugmentKind::Flip {
                let key = |s: &SignalSequence| {
                    let mut v: Vec<u64> = s.frames().iter().map(|x| x.to_bits()).collect();
                    v.sort_unstable();
                    v
                };
                bump("multiset", key(&a) == key(&sig));
            }
        }
        for kind in [
            AugmentKind::Swap,
            AugmentKind::Delete,
            AugmentKind::Synonym,
            AugmentKind::Contextual,
        ] {
            let a = augment_tokens(&toks, kind, &params, &lexicon, &table, &mut r()).unwrap();
            let b = augment_tokens(&toks, kind, &params, &lexicon, &table, &mut r()).unwrap();
            bump("reproducible", a == b);
            bump("vocabulary", a.tokens().iter().all(|&t| t < vocab) && !a.is_empty());
            match kind {
                AugmentKind::Swap => {
                    let mut x = a.tokens().to_vec();
                    let mut y = toks.tokens().to_vec();
                    x.sort_unstable();
                    y.sort_unstable();
                    bump("multiset", x == y && a.len() == toks.len());
                }
                AugmentKind::Delete => {
                    let mut it = toks.tokens().iter();
                    bump("subsequence", a.tokens().iter().all(|t| it.any(|o| o == t)));
                }
                _ => bump("length", a.len() == toks.len()),
            }
        }
    }
    let total: usize = fails.values().sum();
    outcome(
        total == 0 && fails.len() == 5,
        format!(
            "{CASES} cases each for {}; failures {total}",
            fails.keys().copied().collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("metric fidelity", metric_fidelity),
        ("gradient correctness", gradient_correctness),
        ("degeneracy identities", degeneracy),
        ("oracle equivalence", oracle_equivalence),
        ("structural loss invariants", structural_invariants),
        ("splitting", splitting),
        ("desk-scale SSL experiment", desk_experiment),
        ("determinism", determinism),
        ("augmentation properties", augmentation_properties),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
