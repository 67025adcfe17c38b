//! Semi-supervised loss stack.
//!
//! Every loss here is a function of probability vectors. Pseudo labels,
//! ranks, the adaptive `k` and the entropy-meaning soft targets are computed
//! once from the weak branch (and, for the soft targets, the strong branch)
//! and then held fixed, so the same [`TaskDecisions`] drive both the reported
//! loss values and the analytic gradients handed to [`crate::math::backprop`].
//!
//! Class roles per unlabelled sample, by weak-branch rank:
//!
//! * rank 1: pseudo-label cross-entropy (only when gated in)
//! * ranks 2..=k: entropy-meaning binary cross-entropy against a shared soft target
//! * ranks > k: adaptive negative loss

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{argmax, safe_ln, safe_ln_grad, ProbGrads, ProbObjective, Task, TaskProbs};

/// Tolerance on `Σp = 1` for probability vectors handed in by callers.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

pub fn check_normalized(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::contract("empty probability vector"));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
        return Err(Error::contract("probability entries must lie in [0, 1]"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::contract(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    FixMatch,
    FullMatch,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::FixMatch => "fixmatch",
            Method::FullMatch => "fullmatch",
        }
    }

    pub fn uses_unlabelled(self) -> bool {
        !matches!(self, Method::Baseline)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "fixmatch" => Ok(Method::FixMatch),
            "fullmatch" => Ok(Method::FullMatch),
            other => Err(Error::config(format!(
                "unknown method `{other}` (expected baseline, fixmatch or fullmatch)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoLabelDecision {
    pub predicted_class: usize,
    pub confidence: f64,
    pub accepted: bool,
}

/// Pseudo label from a weak-branch distribution; accepted iff `max p > tau`.
pub fn gate_pseudo_label(weak_probs: &[f64], tau: f64) -> Result<PseudoLabelDecision> {
    check_normalized(weak_probs)?;
    Ok(gate_unchecked(weak_probs, tau))
}

fn gate_unchecked(weak_probs: &[f64], tau: f64) -> PseudoLabelDecision {
    let predicted_class = argmax(weak_probs);
    let confidence = weak_probs[predicted_class];
    PseudoLabelDecision {
        predicted_class,
        confidence,
        accepted: confidence > tau,
    }
}

/// 1-based class ranks by descending probability, lower class index first on ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    ranks: Vec<usize>,
    order: Vec<usize>,
}

impl RankAssignment {
    pub fn from_probs(probs: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..probs.len()).collect();
        // Stable sort keeps lower indices first among equal probabilities.
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let mut ranks = vec![0; probs.len()];
        for (pos, &class) in order.iter().enumerate() {
            ranks[class] = pos + 1;
        }
        Self { ranks, order }
    }

    pub fn rank(&self, class: usize) -> usize {
        self.ranks[class]
    }

    /// Class holding the given 1-based rank.
    pub fn class_at(&self, rank: usize) -> usize {
        self.order[rank - 1]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn num_classes(&self) -> usize {
        self.ranks.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopKSelection {
    pub k: usize,
    pub topk_accuracy: f64,
}

/// Position of the weak argmax within the strong-branch ranking, per sample.
fn weak_top_in_strong(unlabelled: &[(&[f64], &[f64])]) -> Vec<usize> {
    unlabelled
        .iter()
        .map(|(weak, strong)| RankAssignment::from_probs(strong).rank(argmax(weak)))
        .collect()
}

/// Smallest `k` whose batch top-k agreement exceeds `sigma`; `C` if none does.
pub fn select_k(unlabelled: &[(&[f64], &[f64])], sigma: f64) -> Result<TopKSelection> {
    if unlabelled.is_empty() {
        return Err(Error::config("select_k needs a non-empty batch"));
    }
    let classes = check_pairs(unlabelled)?;
    Ok(select_k_unchecked(unlabelled, classes, sigma))
}

fn select_k_unchecked(unlabelled: &[(&[f64], &[f64])], classes: usize, sigma: f64) -> TopKSelection {
    let positions = weak_top_in_strong(unlabelled);
    let mut hits_at = vec![0usize; classes + 1];
    for p in positions {
        hits_at[p] += 1;
    }
    let n = unlabelled.len() as f64;
    let mut cumulative = 0;
    for k in 1..=classes {
        cumulative += hits_at[k];
        let acc = cumulative as f64 / n;
        if acc > sigma {
            return TopKSelection { k, topk_accuracy: acc };
        }
    }
    TopKSelection {
        k: classes,
        topk_accuracy: 1.0,
    }
}

fn check_pairs(unlabelled: &[(&[f64], &[f64])]) -> Result<usize> {
    let classes = unlabelled.first().map(|(w, _)| w.len()).unwrap_or(0);
    for (weak, strong) in unlabelled {
        check_normalized(weak)?;
        check_normalized(strong)?;
        if weak.len() != classes || strong.len() != classes {
            return Err(Error::contract("probability vectors differ in class count"));
        }
    }
    Ok(classes)
}

fn check_k(k: usize, classes: usize) -> Result<()> {
    if k == 0 || k > classes {
        return Err(Error::contract(format!("k = {k} outside [1, {classes}]")));
    }
    Ok(())
}

/// Entropy-meaning soft targets for the classes at weak ranks `2..=k`.
///
/// Each target is `(1 − p_strong(c1)) / (k − 1)` where `c1` is the weak
/// argmax. Empty for `k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    pub targets: Vec<(usize, f64)>,
}

impl SoftLabel {
    pub fn mass(&self) -> f64 {
        self.targets.iter().map(|(_, t)| t).sum()
    }
}

pub fn entropy_meaning_soft_label(weak_probs: &[f64], strong_probs: &[f64], k: usize) -> Result<SoftLabel> {
    check_normalized(weak_probs)?;
    check_normalized(strong_probs)?;
    if weak_probs.len() != strong_probs.len() {
        return Err(Error::contract("weak and strong vectors differ in class count"));
    }
    check_k(k, weak_probs.len())?;
    Ok(soft_label_unchecked(
        &RankAssignment::from_probs(weak_probs),
        strong_probs,
        k,
    ))
}

fn soft_label_unchecked(ranks: &RankAssignment, strong: &[f64], k: usize) -> SoftLabel {
    if k < 2 {
        return SoftLabel { targets: Vec::new() };
    }
    let residual = 1.0 - strong[ranks.class_at(1)];
    let share = residual / (k - 1) as f64;
    SoftLabel {
        targets: (2..=k).map(|r| (ranks.class_at(r), share)).collect(),
    }
}

/// Coefficients of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SslParams {
    /// Pseudo-label confidence threshold.
    pub tau: f64,
    /// Top-k agreement threshold.
    pub sigma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Weight of the intent loss relative to the emotion loss.
    pub task_weight: f64,
}

impl Default for SslParams {
    fn default() -> Self {
        Self {
            tau: 0.95,
            sigma: 0.99,
            lambda1: 0.5,
            lambda2: 0.5,
            lambda3: 0.5,
            task_weight: 1.0,
        }
    }
}

/// Itemized single-task loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LossBreakdown {
    pub l_sup: f64,
    pub l_fix_unsup: f64,
    pub l_neg: f64,
    pub l_ent: f64,
    pub accepted_count: usize,
    pub labelled_count: usize,
    pub unlabelled_count: usize,
    /// `k` chosen for this batch (full-match only).
    pub k: Option<usize>,
    /// Set when the labelled list was empty and `l_sup` defaulted to 0.
    pub labelled_empty: bool,
    pub total: f64,
}

impl LossBreakdown {
    /// Re-derives `total` from the components for the given method.
    pub fn combine(&self, method: Method, params: &SslParams) -> f64 {
        match method {
            Method::Baseline => self.l_sup,
            Method::FixMatch => self.l_sup + params.lambda1 * self.l_fix_unsup,
            Method::FullMatch => {
                self.l_sup
                    + params.lambda1 * self.l_fix_unsup
                    + params.lambda2 * self.l_neg
                    + params.lambda3 * self.l_ent
            }
        }
    }
}

/// Discrete per-task choices frozen for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDecisions {
    pub gates: Vec<PseudoLabelDecision>,
    pub ranks: Vec<RankAssignment>,
    pub k: Option<TopKSelection>,
    pub soft: Vec<SoftLabel>,
}

impl TaskDecisions {
    fn build(method: Method, unlabelled: &[(&[f64], &[f64])], params: &SslParams) -> Result<Self> {
        let classes = check_pairs(unlabelled)?;
        let gates = unlabelled.iter().map(|(w, _)| gate_unchecked(w, params.tau)).collect();
        let ranks: Vec<RankAssignment> = unlabelled.iter().map(|(w, _)| RankAssignment::from_probs(w)).collect();
        let (k, soft) = if method == Method::FullMatch && !unlabelled.is_empty() {
            let sel = select_k_unchecked(unlabelled, classes, params.sigma);
            let soft = ranks
                .iter()
                .zip(unlabelled)
                .map(|(r, (_, s))| soft_label_unchecked(r, s, sel.k))
                .collect();
            (Some(sel), soft)
        } else {
            (None, Vec::new())
        };
        Ok(Self { gates, ranks, k, soft })
    }
}

/// Gradient sinks for one task: labelled probabilities, then strong-branch ones.
struct TaskGrads<'g> {
    labelled: &'g mut [Vec<f64>],
    strong: &'g mut [Vec<f64>],
    scale: f64,
}

fn finite(term: &str, task: Task, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            term: format!("{term} ({})", task.name()),
        })
    }
}

/// Evaluates one task's loss under frozen decisions. `accepted[b]` is the
/// effective gate for unlabelled sample `b` (joint or per-task).
#[allow(clippy::too_many_arguments)]
fn evaluate_task(
    task: Task,
    method: Method,
    params: &SslParams,
    labelled: &[(&[f64], usize)],
    strong: &[&[f64]],
    decisions: &TaskDecisions,
    accepted: &[bool],
    mut grads: Option<TaskGrads<'_>>,
) -> Result<LossBreakdown> {
    let mut out = LossBreakdown {
        labelled_count: labelled.len(),
        labelled_empty: labelled.is_empty(),
        ..Default::default()
    };

    if !labelled.is_empty() {
        let inv = 1.0 / labelled.len() as f64;
        let mut sum = 0.0;
        for (b, (p, y)) in labelled.iter().enumerate() {
            sum -= safe_ln(p[*y]);
            if let Some(g) = grads.as_mut() {
                g.labelled[b][*y] -= g.scale * inv * safe_ln_grad(p[*y]);
            }
        }
        out.l_sup = finite("supervised cross-entropy", task, sum * inv)?;
    }

    if method.uses_unlabelled() && !strong.is_empty() {
        let batch = strong.len();
        let inv = 1.0 / batch as f64;
        out.unlabelled_count = batch;

        let mut fix = 0.0;
        for (b, q) in strong.iter().enumerate() {
            if !accepted[b] {
                continue;
            }
            out.accepted_count += 1;
            let c = decisions.gates[b].predicted_class;
            fix -= safe_ln(q[c]);
            if let Some(g) = grads.as_mut() {
                g.strong[b][c] -= g.scale * params.lambda1 * inv * safe_ln_grad(q[c]);
            }
        }
        out.l_fix_unsup = finite("pseudo-label cross-entropy", task, fix * inv)?;

        if method == Method::FullMatch {
            let sel = decisions.k.expect("full-match decisions carry k");
            out.k = Some(sel.k);
            let classes = strong[0].len();
            let inv_ent = 1.0 / (batch * classes) as f64;
            let mut neg = 0.0;
            let mut ent = 0.0;
            for (b, q) in strong.iter().enumerate() {
                let ranks = &decisions.ranks[b];
                for r in sel.k + 1..=classes {
                    let c = ranks.class_at(r);
                    neg -= safe_ln(1.0 - q[c]);
                    if let Some(g) = grads.as_mut() {
                        // d/dq [−ln(1−q)] = 1/(1−q)
                        g.strong[b][c] += g.scale * params.lambda2 * inv * safe_ln_grad(1.0 - q[c]);
                    }
                }
                for &(c, y) in &decisions.soft[b].targets {
                    ent -= y * safe_ln(q[c]) + (1.0 - y) * safe_ln(1.0 - q[c]);
                    if let Some(g) = grads.as_mut() {
                        let d = -(y * safe_ln_grad(q[c]) - (1.0 - y) * safe_ln_grad(1.0 - q[c]));
                        g.strong[b][c] += g.scale * params.lambda3 * inv_ent * d;
                    }
                }
            }
            out.l_neg = finite("adaptive negative loss", task, neg * inv)?;
            out.l_ent = finite("entropy meaning loss", task, ent * inv_ent)?;
        }
    }

    out.total = out.combine(method, params);
    Ok(out)
}

fn single_task(
    method: Method,
    labelled: &[(&[f64], usize)],
    unlabelled: &[(&[f64], &[f64])],
    params: &SslParams,
) -> Result<LossBreakdown> {
    check_labelled(labelled, unlabelled.first().map(|(w, _)| w.len()))?;
    let decisions = TaskDecisions::build(method, unlabelled, params)?;
    let accepted: Vec<bool> = decisions.gates.iter().map(|g| g.accepted).collect();
    let strong: Vec<&[f64]> = unlabelled.iter().map(|(_, s)| *s).collect();
    evaluate_task(
        Task::Emotion,
        method,
        params,
        labelled,
        &strong,
        &decisions,
        &accepted,
        None,
    )
}

fn check_labelled(labelled: &[(&[f64], usize)], classes: Option<usize>) -> Result<()> {
    let classes = classes.or(labelled.first().map(|(p, _)| p.len()));
    for (p, y) in labelled {
        check_normalized(p)?;
        if Some(p.len()) != classes {
            return Err(Error::contract("probability vectors differ in class count"));
        }
        if *y >= p.len() {
            return Err(Error::contract(format!(
                "label {y} out of range for {} classes",
                p.len()
            )));
        }
    }
    Ok(())
}

/// Supervised cross-entropy plus `lambda1` times the gated pseudo-label loss,
/// normalized by the full unlabelled batch size.
pub fn fixmatch_loss(
    labelled: &[(&[f64], usize)],
    unlabelled: &[(&[f64], &[f64])],
    tau: f64,
    lambda1: f64,
) -> Result<LossBreakdown> {
    let params = SslParams {
        tau,
        lambda1,
        ..SslParams::default()
    };
    single_task(Method::FixMatch, labelled, unlabelled, &params)
}

/// Fix-match loss plus `lambda2·L_a + lambda3·L_e`, with `k` chosen once for the batch.
pub fn fullmatch_loss(
    labelled: &[(&[f64], usize)],
    unlabelled: &[(&[f64], &[f64])],
    tau: f64,
    sigma: f64,
    lambda1: f64,
    lambda2: f64,
    lambda3: f64,
) -> Result<LossBreakdown> {
    let params = SslParams {
        tau,
        sigma,
        lambda1,
        lambda2,
        lambda3,
        task_weight: 1.0,
    };
    single_task(Method::FullMatch, labelled, unlabelled, &params)
}

/// `−(1/B) Σ_b Σ_{rank(c) > k} ln(1 − p_strong(c))`, ranks from the weak branch.
pub fn adaptive_negative_loss(unlabelled: &[(&[f64], &[f64])], k: usize) -> Result<f64> {
    if unlabelled.is_empty() {
        return Ok(0.0);
    }
    let classes = check_pairs(unlabelled)?;
    check_k(k, classes)?;
    let mut sum = 0.0;
    for (weak, strong) in unlabelled {
        let ranks = RankAssignment::from_probs(weak);
        for r in k + 1..=classes {
            sum -= safe_ln(1.0 - strong[ranks.class_at(r)]);
        }
    }
    Ok(sum / unlabelled.len() as f64)
}

/// Per-class binary cross-entropy over weak ranks `2..=k`, normalized by `B·C`.
pub fn entropy_meaning_loss(unlabelled: &[(&[f64], &[f64])], k: usize) -> Result<f64> {
    if unlabelled.is_empty() {
        return Ok(0.0);
    }
    let classes = check_pairs(unlabelled)?;
    check_k(k, classes)?;
    let mut sum = 0.0;
    for (weak, strong) in unlabelled {
        let soft = soft_label_unchecked(&RankAssignment::from_probs(weak), strong, k);
        for (c, y) in soft.targets {
            sum -= y * safe_ln(strong[c]) + (1.0 - y) * safe_ln(1.0 - strong[c]);
        }
    }
    Ok(sum / (unlabelled.len() * classes) as f64)
}

/// One task's slice of a multi-task batch.
#[derive(Debug, Clone, Default)]
pub struct TaskBatch<'a> {
    pub labelled: Vec<(&'a [f64], usize)>,
    pub unlabelled: Vec<(&'a [f64], &'a [f64])>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskLoss {
    pub total: f64,
    pub emotion: LossBreakdown,
    pub intent: LossBreakdown,
}

/// Gate per unlabelled sample. Fix-match requires both tasks to be confident;
/// full-match gates each task on its own.
fn effective_gates(method: Method, emo: &TaskDecisions, int: &TaskDecisions) -> (Vec<bool>, Vec<bool>) {
    let own = |d: &TaskDecisions| d.gates.iter().map(|g| g.accepted).collect::<Vec<_>>();
    match method {
        Method::FixMatch => {
            let joint: Vec<bool> = emo
                .gates
                .iter()
                .zip(&int.gates)
                .map(|(a, b)| a.accepted && b.accepted)
                .collect();
            (joint.clone(), joint)
        }
        _ => (own(emo), own(int)),
    }
}

/// `L^emo + λ·L^int` for the chosen method.
pub fn multitask_loss(
    method: Method,
    emotion: &TaskBatch<'_>,
    intent: &TaskBatch<'_>,
    params: &SslParams,
) -> Result<MultiTaskLoss> {
    if emotion.labelled.len() != intent.labelled.len() || emotion.unlabelled.len() != intent.unlabelled.len() {
        return Err(Error::contract(
            "emotion and intent batches cover different sample counts",
        ));
    }
    for (e, i) in emotion.labelled.iter().zip(&intent.labelled) {
        if e.0.is_empty() || i.0.is_empty() {
            return Err(Error::contract("empty probability vector"));
        }
    }
    check_labelled(&emotion.labelled, emotion.unlabelled.first().map(|(w, _)| w.len()))?;
    check_labelled(&intent.labelled, intent.unlabelled.first().map(|(w, _)| w.len()))?;
    let emo_dec = TaskDecisions::build(method, &emotion.unlabelled, params)?;
    let int_dec = TaskDecisions::build(method, &intent.unlabelled, params)?;
    let (emo_acc, int_acc) = effective_gates(method, &emo_dec, &int_dec);
    let emo_strong: Vec<&[f64]> = emotion.unlabelled.iter().map(|(_, s)| *s).collect();
    let int_strong: Vec<&[f64]> = intent.unlabelled.iter().map(|(_, s)| *s).collect();
    let e = evaluate_task(
        Task::Emotion,
        method,
        params,
        &emotion.labelled,
        &emo_strong,
        &emo_dec,
        &emo_acc,
        None,
    )?;
    let i = evaluate_task(
        Task::Intent,
        method,
        params,
        &intent.labelled,
        &int_strong,
        &int_dec,
        &int_acc,
        None,
    )?;
    Ok(MultiTaskLoss {
        total: e.total + params.task_weight * i.total,
        emotion: e,
        intent: i,
    })
}

/// Multi-task objective over a batch laid out as `[labelled..., strong...]`,
/// with all discrete decisions frozen at construction.
#[derive(Debug, Clone)]
pub struct SslObjective {
    method: Method,
    params: SslParams,
    labels: Vec<(usize, usize)>,
    unlabelled: usize,
    emotion: TaskDecisions,
    intent: TaskDecisions,
    emotion_accepted: Vec<bool>,
    intent_accepted: Vec<bool>,
}

impl SslObjective {
    /// `labels` are `(emotion, intent)` per labelled input; `weak` and `strong`
    /// are the two branches' outputs for each unlabelled sample. Soft targets
    /// are frozen from `strong` as given here.
    pub fn new(
        method: Method,
        params: SslParams,
        labels: &[(usize, usize)],
        weak: &[TaskProbs],
        strong: &[TaskProbs],
    ) -> Result<Self> {
        if weak.len() != strong.len() {
            return Err(Error::contract("weak and strong branches differ in batch size"));
        }
        let (weak, strong) = if method.uses_unlabelled() {
            (weak, strong)
        } else {
            (&[][..], &[][..])
        };
        let pairs = |t: Task| -> Vec<(&[f64], &[f64])> {
            weak.iter().zip(strong).map(|(w, s)| (w.task(t), s.task(t))).collect()
        };
        let emotion = TaskDecisions::build(method, &pairs(Task::Emotion), &params)?;
        let intent = TaskDecisions::build(method, &pairs(Task::Intent), &params)?;
        let (emotion_accepted, intent_accepted) = effective_gates(method, &emotion, &intent);
        Ok(Self {
            method,
            params,
            labels: labels.to_vec(),
            unlabelled: weak.len(),
            emotion,
            intent,
            emotion_accepted,
            intent_accepted,
        })
    }

    pub fn decisions(&self, task: Task) -> &TaskDecisions {
        match task {
            Task::Emotion => &self.emotion,
            Task::Intent => &self.intent,
        }
    }

    /// Number of inputs `evaluate` expects.
    pub fn input_count(&self) -> usize {
        self.labels.len() + self.unlabelled
    }

    pub fn evaluate_detailed(&self, probs: &[TaskProbs]) -> Result<(MultiTaskLoss, Vec<ProbGrads>)> {
        if probs.len() != self.input_count() {
            return Err(Error::contract(format!(
                "objective expects {} inputs, got {}",
                self.input_count(),
                probs.len()
            )));
        }
        let (lab_probs, strong_probs) = probs.split_at(self.labels.len());
        let mut grads: Vec<ProbGrads> = probs
            .iter()
            .map(|p| ProbGrads::zeros(p.emotion.len(), p.intent.len()))
            .collect();

        let mut result = [LossBreakdown::default(); 2];
        for (slot, task) in Task::BOTH.into_iter().enumerate() {
            let labelled: Vec<(&[f64], usize)> = lab_probs
                .iter()
                .zip(&self.labels)
                .map(|(p, &(e, i))| (p.task(task), if task == Task::Emotion { e } else { i }))
                .collect();
            check_labelled(&labelled, None)?;
            let strong: Vec<&[f64]> = strong_probs.iter().map(|p| p.task(task)).collect();
            let mut lab_g: Vec<Vec<f64>> = lab_probs.iter().map(|p| vec![0.0; p.task(task).len()]).collect();
            let mut strong_g: Vec<Vec<f64>> = strong.iter().map(|p| vec![0.0; p.len()]).collect();
            let scale = if task == Task::Emotion {
                1.0
            } else {
                self.params.task_weight
            };
            let (decisions, accepted) = match task {
                Task::Emotion => (&self.emotion, &self.emotion_accepted),
                Task::Intent => (&self.intent, &self.intent_accepted),
            };
            result[slot] = evaluate_task(
                task,
                self.method,
                &self.params,
                &labelled,
                &strong,
                decisions,
                accepted,
                Some(TaskGrads {
                    labelled: &mut lab_g,
                    strong: &mut strong_g,
                    scale,
                }),
            )?;
            for (g, src) in grads.iter_mut().zip(lab_g.into_iter().chain(strong_g)) {
                *g.task_mut(task) = src;
            }
        }
        let [emotion, intent] = result;
        let total = emotion.total + self.params.task_weight * intent.total;
        Ok((MultiTaskLoss { total, emotion, intent }, grads))
    }
}

impl ProbObjective for SslObjective {
    fn evaluate(&self, probs: &[TaskProbs]) -> Result<(f64, Vec<ProbGrads>)> {
        let (loss, grads) = self.evaluate_detailed(probs)?;
        Ok((loss.total, grads))
    }
}
