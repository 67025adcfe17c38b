//! Finite-difference gradient suite and the method/augmentation sweep.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::augment::AugmentKind;
use crate::data::{stream_rng, Corpus, Sample};
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_json};
use crate::math::{
    backprop, finite_difference_gradient, forward, max_relative_error, softmax, FeatureVector, ProbObjective,
    TaskProbs, TwoHeadModel,
};
use crate::metrics::{jrbm, margin_fusion, weighted_f1, MetricsReport};
use crate::ssl::{Method, SslObjective, SslParams};
use crate::trainer::{
    epochs_to_csv, metrics_from_probs, predict, predictions_for, train, write_predictions, TrainConfig,
};

/// Shape of every gradcheck batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradcheckShape {
    pub batch: usize,
    pub emotion_classes: usize,
    pub intent_classes: usize,
    pub input_dim: usize,
    pub hidden: usize,
}

impl Default for GradcheckShape {
    fn default() -> Self {
        Self {
            batch: 4,
            emotion_classes: 7,
            intent_classes: 8,
            input_dim: 16,
            hidden: 8,
        }
    }
}

/// One loss configuration checked by the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckCase {
    pub name: &'static str,
    pub method: Method,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub task_weight: f64,
    /// Whether the batch carries labelled inputs.
    pub labelled: bool,
}

pub const GRADCHECK_CASES: &[GradcheckCase] = &[
    GradcheckCase {
        name: "baseline_ce",
        method: Method::Baseline,
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 0.0,
        task_weight: 1.0,
        labelled: true,
    },
    GradcheckCase {
        name: "fixmatch",
        method: Method::FixMatch,
        lambda1: 1.0,
        lambda2: 0.0,
        lambda3: 0.0,
        task_weight: 1.0,
        labelled: true,
    },
    GradcheckCase {
        name: "adaptive_negative",
        method: Method::FullMatch,
        lambda1: 0.0,
        lambda2: 1.0,
        lambda3: 0.0,
        task_weight: 1.0,
        labelled: false,
    },
    GradcheckCase {
        name: "entropy_meaning",
        method: Method::FullMatch,
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 1.0,
        task_weight: 1.0,
        labelled: false,
    },
    GradcheckCase {
        name: "fullmatch",
        method: Method::FullMatch,
        lambda1: 0.5,
        lambda2: 0.5,
        lambda3: 0.5,
        task_weight: 1.0,
        labelled: true,
    },
    GradcheckCase {
        name: "multitask_fixmatch",
        method: Method::FixMatch,
        lambda1: 0.5,
        lambda2: 0.0,
        lambda3: 0.0,
        task_weight: 0.3,
        labelled: true,
    },
    GradcheckCase {
        name: "multitask_fullmatch",
        method: Method::FullMatch,
        lambda1: 0.5,
        lambda2: 0.5,
        lambda3: 0.5,
        task_weight: 2.5,
        labelled: true,
    },
];

pub const GRADCHECK_EPS: f64 = 1e-5;

/// Minimum distance of any hidden pre-activation from zero in a gradcheck batch.
pub const KINK_MARGIN: f64 = 1e-3;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckResult {
    pub case: &'static str,
    pub batches: usize,
    pub max_relative_error: f64,
    /// Batches in which the case's unlabelled terms had nonzero gradient.
    pub active_batches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub results: Vec<GradcheckResult>,
}

impl GradcheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.results.iter().map(|r| r.max_relative_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error() <= GRADCHECK_TOLERANCE
    }
}

fn random_probs<R: Rng>(classes: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    let logits: Vec<f64> = (0..classes)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    softmax(&logits)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

/// Builds one randomized batch and returns `(max relative error, active)`.
pub fn gradcheck_batch(case: &GradcheckCase, shape: &GradcheckShape, seed: u64) -> Result<(f64, bool)> {
    let mut rng = stream_rng(seed, 40);
    let model = TwoHeadModel::new(
        shape.input_dim,
        shape.hidden,
        shape.emotion_classes,
        shape.intent_classes,
        seed,
    )?;
    // Finite differences are meaningless across a ReLU kink, so inputs landing
    // near one are redrawn.
    let draw_x = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<FeatureVector> {
        loop {
            let x = FeatureVector::new((0..shape.input_dim).map(|_| rng.sample(StandardNormal)).collect())?;
            if model.hidden_pre(&x)?.iter().all(|z| z.abs() > KINK_MARGIN) {
                return Ok(x);
            }
        }
    };
    let n_lab = if case.labelled { shape.batch } else { 0 };
    let n_unl = if case.method.uses_unlabelled() { shape.batch } else { 0 };
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_lab {
        inputs.push(draw_x(&mut rng)?);
        labels.push((
            rng.random_range(0..shape.emotion_classes),
            rng.random_range(0..shape.intent_classes),
        ));
    }
    let mut weak = Vec::new();
    let mut strong = Vec::new();
    for _ in 0..n_unl {
        let x = draw_x(&mut rng)?;
        strong.push(forward(&model, &x)?);
        inputs.push(x);
        weak.push(TaskProbs {
            emotion: random_probs(shape.emotion_classes, 2.0, &mut rng),
            intent: random_probs(shape.intent_classes, 2.0, &mut rng),
        });
    }
    // Thresholds at the batch's own confidence levels keep every term in play.
    let tau = if weak.is_empty() {
        0.95
    } else {
        let joint: Vec<f64> = weak
            .iter()
            .map(|w| {
                let e = w.emotion.iter().cloned().fold(0.0, f64::max);
                let i = w.intent.iter().cloned().fold(0.0, f64::max);
                e.min(i)
            })
            .collect();
        median(joint) * 0.999
    };
    let params = SslParams {
        tau,
        sigma: 0.6,
        lambda1: case.lambda1,
        lambda2: case.lambda2,
        lambda3: case.lambda3,
        task_weight: case.task_weight,
    };
    let objective = SslObjective::new(case.method, params, &labels, &weak, &strong)?;
    let (_, analytic) = backprop(&model, &inputs, &objective)?;
    let loss_at = |m: &TwoHeadModel| -> f64 {
        let probs: Vec<TaskProbs> = inputs.iter().map(|x| forward(m, x).expect("shapes fixed")).collect();
        objective.evaluate(&probs).map(|(l, _)| l).unwrap_or(f64::NAN)
    };
    let numeric = finite_difference_gradient(loss_at, &model, GRADCHECK_EPS);
    let active = n_unl > 0 && {
        let probs: Vec<TaskProbs> = inputs.iter().map(|x| forward(&model, x)).collect::<Result<_>>()?;
        let (_, g) = objective.evaluate(&probs)?;
        g[n_lab..]
            .iter()
            .any(|g| g.emotion.iter().chain(&g.intent).any(|&v| v != 0.0))
    };
    Ok((max_relative_error(&analytic, &numeric), active))
}

/// Runs every case over `batches` seeds derived from `seed`.
pub fn run_gradcheck(seed: u64, batches: usize, shape: &GradcheckShape) -> Result<GradcheckReport> {
    let mut results = Vec::new();
    for case in GRADCHECK_CASES {
        let mut worst = 0.0f64;
        let mut active = 0;
        for b in 0..batches {
            let (err, on) = gradcheck_batch(case, shape, seed.wrapping_mul(1000).wrapping_add(b as u64))?;
            worst = worst.max(err);
            active += on as usize;
        }
        results.push(GradcheckResult {
            case: case.name,
            batches,
            max_relative_error: worst,
            active_batches: active,
        });
    }
    Ok(GradcheckReport { results })
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub name: String,
    pub config: TrainConfig,
}

/// Baseline plus every weak augmentation × {fixmatch, fullmatch} × weak
/// augmentation on the unlabelled branch off/on.
pub fn sweep_grid(base: &TrainConfig) -> Vec<SweepCell> {
    let mut cells = vec![SweepCell {
        name: "baseline".into(),
        config: TrainConfig {
            method: Method::Baseline,
            ..base.clone()
        },
    }];
    for method in [Method::FixMatch, Method::FullMatch] {
        for kind in base.modality.weak_kinds() {
            for on in [false, true] {
                cells.push(SweepCell {
                    name: format!("{method}/{kind}/{}", if on { "w" } else { "wo" }),
                    config: TrainConfig {
                        method,
                        weak_aug_kind: Some(kind),
                        weak_aug_on_unlabelled: on,
                        ..base.clone()
                    },
                });
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub name: String,
    pub method: String,
    pub augmentation: String,
    pub weak_aug_on_unlabelled: String,
    pub valid_jrbm: f64,
    pub test_f1_emotion: f64,
    pub test_f1_intent: f64,
    pub test_jrbm: f64,
}

/// Held-out probabilities of one trained cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: SweepCell,
    pub valid_probs: Vec<TaskProbs>,
    pub test_probs: Vec<TaskProbs>,
    pub valid: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub rows: Vec<SweepRow>,
    pub valid: Vec<Sample>,
    pub test: Vec<Sample>,
}

pub const SWEEP_CSV_HEADER: &str =
    "model,method,augmentation,weak_aug_on_unlabelled,valid_jrbm,test_f1_emotion,test_f1_intent,test_jrbm";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SWEEP_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                r.name,
                r.method,
                r.augmentation,
                r.weak_aug_on_unlabelled,
                r.valid_jrbm,
                r.test_f1_emotion,
                r.test_f1_intent,
                r.test_jrbm
            );
        }
        s
    }
}

fn fused_metrics(
    members: &[&CellResult],
    pick: fn(&CellResult) -> &Vec<TaskProbs>,
    samples: &[Sample],
) -> Result<(f64, f64, f64)> {
    let tables: Vec<Vec<TaskProbs>> = members.iter().map(|c| pick(c).clone()).collect();
    let fused = margin_fusion(&tables)?;
    let mut pe = Vec::new();
    let mut pi = Vec::new();
    let mut ye = Vec::new();
    let mut yi = Vec::new();
    for ((e, i), s) in fused.into_iter().zip(samples) {
        let (a, b) = s
            .labels()
            .ok_or_else(|| Error::contract("fusion sample is unlabelled"))?;
        pe.push(e);
        pi.push(i);
        ye.push(a);
        yi.push(b);
    }
    let ce = tables[0][0].emotion.len();
    let ci = tables[0][0].intent.len();
    let fe = weighted_f1(&pe, &ye, ce)?;
    let fi = weighted_f1(&pi, &yi, ci)?;
    Ok((fe, fi, jrbm(fe, fi)))
}

fn train_cell(cell: &SweepCell, corpus: &Corpus, out: Option<&Path>) -> Result<(CellResult, Vec<Sample>, Vec<Sample>)> {
    let outcome = train(&cell.config, corpus)?;
    let featurizer = outcome.featurizer.bind(&corpus.embedding_table);
    let valid_probs = predict(&outcome.model, &outcome.valid, &featurizer)?;
    let test_probs = predict(&outcome.model, &outcome.test, &featurizer)?;
    let (ce, ci) = (corpus.emotion_classes(), corpus.intent_classes());
    let valid = metrics_from_probs(&valid_probs, &outcome.valid, ce, ci)?;
    let test = metrics_from_probs(&test_probs, &outcome.test, ce, ci)?;
    if let Some(dir) = out {
        let cell_dir = dir.join(cell.name.replace('/', "_"));
        std::fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
        write_atomic(&cell_dir.join("epochs.csv"), epochs_to_csv(&outcome.reports).as_bytes())?;
        write_json(&cell_dir.join("test_metrics.json"), &test)?;
        write_predictions(
            &cell_dir.join("test_predictions.jsonl"),
            &predictions_for(&outcome.test, &test_probs)?,
        )?;
    }
    Ok((
        CellResult {
            cell: cell.clone(),
            valid_probs,
            test_probs,
            valid,
            test,
        },
        outcome.valid,
        outcome.test,
    ))
}

/// Trains every grid cell (up to `threads` at a time), then appends
/// margin-fusion rows over the best two and best four cells by validation
/// JRBM. Per-cell artifacts go to `out/<cell>/` when `out` is given.
pub fn run_sweep(base: &TrainConfig, corpus: &Corpus, threads: usize, out: Option<&Path>) -> Result<SweepResult> {
    let grid = sweep_grid(base);
    let threads = threads.max(1);
    let mut slots: Vec<Option<Result<(CellResult, Vec<Sample>, Vec<Sample>)>>> =
        (0..grid.len()).map(|_| None).collect();
    for (chunk_cells, chunk_slots) in grid.chunks(threads).zip(slots.chunks_mut(threads)) {
        std::thread::scope(|scope| {
            for (cell, slot) in chunk_cells.iter().zip(chunk_slots.iter_mut()) {
                scope.spawn(move || *slot = Some(train_cell(cell, corpus, out)));
            }
        });
    }
    let mut cells = Vec::new();
    let mut splits = None;
    for slot in slots {
        let (cell, valid, test) = slot.expect("every cell ran")?;
        splits.get_or_insert((valid, test));
        cells.push(cell);
    }
    let (valid, test) = splits.expect("grid is never empty");
    if test.is_empty() {
        return Err(Error::config("the sweep needs a non-empty test split"));
    }

    let mut rows: Vec<SweepRow> = cells
        .iter()
        .map(|c| SweepRow {
            name: c.cell.name.clone(),
            method: c.cell.config.method.to_string(),
            augmentation: c.cell.config.weak_kind().to_string(),
            weak_aug_on_unlabelled: if c.cell.config.method.uses_unlabelled() {
                if c.cell.config.weak_aug_on_unlabelled {
                    "w"
                } else {
                    "wo"
                }
                .into()
            } else {
                "-".into()
            },
            valid_jrbm: c.valid.jrbm,
            test_f1_emotion: c.test.f1_emotion,
            test_f1_intent: c.test.f1_intent,
            test_jrbm: c.test.jrbm,
        })
        .collect();

    let mut ranked: Vec<&CellResult> = cells.iter().collect();
    ranked.sort_by(|a, b| b.valid.jrbm.total_cmp(&a.valid.jrbm));
    for n in [2, 4] {
        if ranked.len() < n {
            continue;
        }
        let members = &ranked[..n];
        let (_, _, vj) = fused_metrics(members, |c| &c.valid_probs, &valid)?;
        let (fe, fi, tj) = fused_metrics(members, |c| &c.test_probs, &test)?;
        rows.push(SweepRow {
            name: format!("fusion_best{n}"),
            method: "fusion".into(),
            augmentation: members
                .iter()
                .map(|c| c.cell.name.as_str())
                .collect::<Vec<_>>()
                .join("+"),
            weak_aug_on_unlabelled: "-".into(),
            valid_jrbm: vj,
            test_f1_emotion: fe,
            test_f1_intent: fi,
            test_jrbm: tj,
        });
    }
    Ok(SweepResult {
        cells,
        rows,
        valid,
        test,
    })
}

/// Names of the weak operators a sweep over `base` would try.
pub fn sweep_augmentations(base: &TrainConfig) -> [AugmentKind; 3] {
    base.modality.weak_kinds()
}
