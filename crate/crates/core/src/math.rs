//! Dense two-head classifier, analytic backpropagation, Adam, and a
//! central-difference gradient oracle.
//!
//! The classifier is a single shared ReLU layer feeding two linear heads
//! (emotion and intent), each followed by its own softmax. Loss terms are
//! expressed as functions of the head probabilities; [`backprop`] chains
//! the probability-space gradient they report back through both softmaxes
//! into every parameter.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp for every logarithm argument.
pub const LOG_FLOOR: f64 = 1e-12;

/// `ln(x)` with `x` clamped to `[LOG_FLOOR, 1]`.
#[inline]
pub fn safe_ln(x: f64) -> f64 {
    x.clamp(LOG_FLOOR, 1.0).ln()
}

/// Derivative of [`safe_ln`]; zero where the clamp is active.
#[inline]
pub fn safe_ln_grad(x: f64) -> f64 {
    if x < LOG_FLOOR || x > 1.0 {
        0.0
    } else {
        1.0 / x
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Input to the classifier. All entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!("feature {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Fully connected layer, weights stored row-major as `inputs x outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init_uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || rng.random_range(-bound..=bound);
        let weights = (0..inputs * outputs).map(|_| draw()).collect();
        let bias = (0..outputs).map(|_| draw()).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
        out
    }

    /// Accumulates `x ⊗ delta` into this layer (used as a gradient buffer)
    /// and returns `W · delta`, the gradient with respect to `x`.
    fn accumulate(&mut self, weights: &Linear, x: &[f64], delta: &[f64]) -> Vec<f64> {
        for (b, &d) in self.bias.iter_mut().zip(delta) {
            *b += d;
        }
        let mut dx = vec![0.0; self.inputs];
        for (i, &xi) in x.iter().enumerate() {
            let row = i * self.outputs..(i + 1) * self.outputs;
            let grad_row = &mut self.weights[row.clone()];
            for (g, &d) in grad_row.iter_mut().zip(delta) {
                *g += xi * d;
            }
            dx[i] = weights.weights[row].iter().zip(delta).map(|(w, d)| w * d).sum();
        }
        dx
    }

    fn same_shape(&self, other: &Linear) -> bool {
        self.inputs == other.inputs && self.outputs == other.outputs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

/// Shared trunk plus one linear head per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoHeadModel {
    pub trunk: Linear,
    pub emotion: Linear,
    pub intent: Linear,
    #[serde(default)]
    pub activation: Activation,
}

/// Parameter-shaped buffer holding dL/dθ.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub trunk: Linear,
    pub emotion: Linear,
    pub intent: Linear,
}

macro_rules! param_slices {
    ($ty:ty) => {
        impl $ty {
            /// Parameter blocks in a fixed order: trunk W, b, emotion W, b, intent W, b.
            pub fn slices(&self) -> [&[f64]; 6] {
                [
                    &self.trunk.weights,
                    &self.trunk.bias,
                    &self.emotion.weights,
                    &self.emotion.bias,
                    &self.intent.weights,
                    &self.intent.bias,
                ]
            }

            pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
                [
                    &mut self.trunk.weights,
                    &mut self.trunk.bias,
                    &mut self.emotion.weights,
                    &mut self.emotion.bias,
                    &mut self.intent.weights,
                    &mut self.intent.bias,
                ]
            }

            pub fn param_count(&self) -> usize {
                self.slices().iter().map(|s| s.len()).sum()
            }
        }
    };
}

param_slices!(TwoHeadModel);
param_slices!(Gradients);

impl TwoHeadModel {
    pub fn new(
        input_dim: usize,
        hidden: usize,
        emotion_classes: usize,
        intent_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::config("input and hidden widths must be positive"));
        }
        if emotion_classes < 2 || intent_classes < 2 {
            return Err(Error::config("each task needs at least two classes"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            trunk: Linear::init_uniform(input_dim, hidden, &mut rng),
            emotion: Linear::init_uniform(hidden, emotion_classes, &mut rng),
            intent: Linear::init_uniform(hidden, intent_classes, &mut rng),
            activation: Activation::Relu,
        })
    }

    pub fn zeros(input_dim: usize, hidden: usize, emotion_classes: usize, intent_classes: usize) -> Self {
        Self {
            trunk: Linear::zeros(input_dim, hidden),
            emotion: Linear::zeros(hidden, emotion_classes),
            intent: Linear::zeros(hidden, intent_classes),
            activation: Activation::Relu,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.inputs
    }

    pub fn hidden(&self) -> usize {
        self.trunk.outputs
    }

    pub fn emotion_classes(&self) -> usize {
        self.emotion.outputs
    }

    pub fn intent_classes(&self) -> usize {
        self.intent.outputs
    }

    /// Checks shape consistency and finiteness of all parameters.
    pub fn validate(&self) -> Result<()> {
        let h = self.trunk.outputs;
        if self.emotion.inputs != h || self.intent.inputs != h {
            return Err(Error::contract("head input width differs from trunk width"));
        }
        if self.emotion.outputs < 2 || self.intent.outputs < 2 {
            return Err(Error::contract("each head needs at least two classes"));
        }
        for layer in [&self.trunk, &self.emotion, &self.intent] {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(Error::contract("layer buffer sizes do not match declared shape"));
            }
        }
        if self.slices().iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite {
                term: "model parameters".into(),
            });
        }
        Ok(())
    }

    pub(crate) fn hidden_pre(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.dim() != self.input_dim() {
            return Err(Error::contract(format!(
                "feature dimension {} does not match model input dimension {}",
                x.dim(),
                self.input_dim()
            )));
        }
        Ok(self.trunk.apply(x.as_slice()))
    }
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| z.max(0.0)).collect()
}

/// Per-task class probabilities for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskProbs {
    pub emotion: Vec<f64>,
    pub intent: Vec<f64>,
}

impl TaskProbs {
    pub fn task(&self, task: Task) -> &[f64] {
        match task {
            Task::Emotion => &self.emotion,
            Task::Intent => &self.intent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Emotion,
    Intent,
}

impl Task {
    pub const BOTH: [Task; 2] = [Task::Emotion, Task::Intent];

    pub fn name(self) -> &'static str {
        match self {
            Task::Emotion => "emotion",
            Task::Intent => "intent",
        }
    }
}

pub fn forward(model: &TwoHeadModel, x: &FeatureVector) -> Result<TaskProbs> {
    let h = relu(&model.hidden_pre(x)?);
    Ok(TaskProbs {
        emotion: softmax(&model.emotion.apply(&h)),
        intent: softmax(&model.intent.apply(&h)),
    })
}

/// dL/dp for one input, per task head.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbGrads {
    pub emotion: Vec<f64>,
    pub intent: Vec<f64>,
}

impl ProbGrads {
    pub fn zeros(emotion_classes: usize, intent_classes: usize) -> Self {
        Self {
            emotion: vec![0.0; emotion_classes],
            intent: vec![0.0; intent_classes],
        }
    }

    pub fn task_mut(&mut self, task: Task) -> &mut Vec<f64> {
        match task {
            Task::Emotion => &mut self.emotion,
            Task::Intent => &mut self.intent,
        }
    }

    fn is_zero(&self) -> bool {
        self.emotion.iter().chain(&self.intent).all(|&g| g == 0.0)
    }
}

/// A scalar objective over the probabilities of a batch of inputs.
///
/// Any discrete decision the objective depends on (gates, ranks, soft
/// targets) must be fixed when the objective is built, so that `evaluate`
/// is a smooth function of the probabilities it receives.
pub trait ProbObjective {
    /// Returns the loss and one `ProbGrads` per entry of `probs`.
    fn evaluate(&self, probs: &[TaskProbs]) -> Result<(f64, Vec<ProbGrads>)>;
}

/// Softmax Jacobian-vector product: `p ⊙ (g − ⟨g, p⟩)`.
fn softmax_backward(p: &[f64], g: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(g).map(|(p, g)| p * g).sum();
    p.iter().zip(g).map(|(p, g)| p * (g - dot)).collect()
}

/// Runs the model over `inputs`, evaluates `objective`, and returns the
/// loss together with its exact gradient with respect to every parameter.
pub fn backprop<O: ProbObjective + ?Sized>(
    model: &TwoHeadModel,
    inputs: &[FeatureVector],
    objective: &O,
) -> Result<(f64, Gradients)> {
    let mut hidden_pre = Vec::with_capacity(inputs.len());
    let mut probs = Vec::with_capacity(inputs.len());
    for x in inputs {
        let pre = model.hidden_pre(x)?;
        let h = relu(&pre);
        probs.push(TaskProbs {
            emotion: softmax(&model.emotion.apply(&h)),
            intent: softmax(&model.intent.apply(&h)),
        });
        hidden_pre.push(pre);
    }

    let (loss, upstream) = objective.evaluate(&probs)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite { term: "loss".into() });
    }
    if upstream.len() != inputs.len() {
        return Err(Error::contract(format!(
            "objective returned {} gradients for {} inputs",
            upstream.len(),
            inputs.len()
        )));
    }

    let mut grads = Gradients::zeros_like(model);
    for (((x, pre), p), g) in inputs.iter().zip(&hidden_pre).zip(&probs).zip(&upstream) {
        if g.is_zero() {
            continue;
        }
        let h = relu(pre);
        let dz_emo = softmax_backward(&p.emotion, &g.emotion);
        let dz_int = softmax_backward(&p.intent, &g.intent);
        let dh_emo = grads.emotion.accumulate(&model.emotion, &h, &dz_emo);
        let dh_int = grads.intent.accumulate(&model.intent, &h, &dz_int);
        let dpre: Vec<f64> = pre
            .iter()
            .zip(dh_emo.iter().zip(&dh_int))
            .map(|(&z, (a, b))| if z > 0.0 { a + b } else { 0.0 })
            .collect();
        grads.trunk.accumulate(&model.trunk, x.as_slice(), &dpre);
    }

    let names = [
        "trunk weights",
        "trunk bias",
        "emotion weights",
        "emotion bias",
        "intent weights",
        "intent bias",
    ];
    for (name, s) in names.iter().zip(grads.slices()) {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                term: format!("gradient of {name}"),
            });
        }
    }
    Ok((loss, grads))
}

impl Gradients {
    pub fn zeros_like(model: &TwoHeadModel) -> Self {
        Self {
            trunk: Linear::zeros(model.trunk.inputs, model.trunk.outputs),
            emotion: Linear::zeros(model.emotion.inputs, model.emotion.outputs),
            intent: Linear::zeros(model.intent.inputs, model.intent.outputs),
        }
    }

    pub fn matches(&self, model: &TwoHeadModel) -> bool {
        self.trunk.same_shape(&model.trunk)
            && self.emotion.same_shape(&model.emotion)
            && self.intent.same_shape(&model.intent)
    }

    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Central differences `(L(θ+ε) − L(θ−ε)) / 2ε`, one parameter at a time.
pub fn finite_difference_gradient<F>(loss_fn: F, model: &TwoHeadModel, eps: f64) -> Gradients
where
    F: Fn(&TwoHeadModel) -> f64,
{
    let mut probe = model.clone();
    let mut out = Gradients::zeros_like(model);
    for block in 0..6 {
        let len = model.slices()[block].len();
        for j in 0..len {
            let orig = probe.slices()[block][j];
            probe.slices_mut()[block][j] = orig + eps;
            let plus = loss_fn(&probe);
            probe.slices_mut()[block][j] = orig - eps;
            let minus = loss_fn(&probe);
            probe.slices_mut()[block][j] = orig;
            out.slices_mut()[block][j] = (plus - minus) / (2.0 * eps);
        }
    }
    out
}

/// Magnitude below which gradient entries are compared on an absolute scale.
pub const GRAD_CHECK_FLOOR: f64 = 1e-5;

/// `max |a − b| / max(|a|, |b|, GRAD_CHECK_FLOOR)` over all parameters.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    a.slices()
        .iter()
        .zip(b.slices())
        .flat_map(|(x, y)| x.iter().zip(y.iter()))
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(GRAD_CHECK_FLOOR))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators plus the update count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &TwoHeadModel) -> Self {
        Self {
            first: Gradients::zeros_like(model),
            second: Gradients::zeros_like(model),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    model: &mut TwoHeadModel,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::config(format!("learning rate must be positive, got {lr}")));
    }
    if !grads.matches(model) || !state.first.matches(model) {
        return Err(Error::contract("gradient shape does not match model"));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let params = model.slices_mut();
    let ms = state.first.slices_mut();
    let vs = state.second.slices_mut();
    for (((p, m), v), g) in params.into_iter().zip(ms).zip(vs).zip(grads.slices()) {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
