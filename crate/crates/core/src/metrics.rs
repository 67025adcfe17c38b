//! Weighted F1, JRBM, confusion matrices and margin-sampling late fusion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{argmax, TaskProbs};

/// Rows are true classes, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// CSV with a header row and a leading column of class names.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("true\\pred");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_pair(preds: &[usize], labels: &[usize], classes: usize) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if let Some(c) = preds.iter().chain(labels).find(|&&c| c >= classes) {
        return Err(Error::contract(format!("class {c} out of range for {classes} classes")));
    }
    Ok(())
}

pub fn confusion(preds: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    check_pair(preds, labels, classes)?;
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&p, &y) in preds.iter().zip(labels) {
        counts[y][p] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

/// Support-weighted mean of per-class F1; a class with `P + R = 0` scores 0.
pub fn weighted_f1(preds: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::contract("weighted F1 needs at least one sample"));
    }
    let cm = confusion(preds, labels, classes)?;
    Ok(weighted_f1_from_confusion(&cm))
}

pub fn weighted_f1_from_confusion(cm: &ConfusionMatrix) -> f64 {
    let n = cm.total() as f64;
    (0..cm.classes)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let support = cm.support(c) as f64;
            let predicted = cm.predicted(c) as f64;
            if tp == 0.0 {
                return 0.0;
            }
            let precision = tp / predicted;
            let recall = tp / support;
            (support / n) * 2.0 * precision * recall / (precision + recall)
        })
        .sum()
}

/// Harmonic mean of the two task F1 scores, 0 when both are 0.
pub fn jrbm(f1_emotion: f64, f1_intent: f64) -> f64 {
    let sum = f1_emotion + f1_intent;
    if sum == 0.0 {
        0.0
    } else {
        2.0 * f1_emotion * f1_intent / sum
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1_emotion: f64,
    pub f1_intent: f64,
    pub jrbm: f64,
    pub confusion_emotion: ConfusionMatrix,
    pub confusion_intent: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_predictions(
        emotion: (&[usize], &[usize]),
        intent: (&[usize], &[usize]),
        emotion_classes: usize,
        intent_classes: usize,
    ) -> Result<Self> {
        if emotion.1.is_empty() {
            return Err(Error::contract("cannot evaluate an empty sample list"));
        }
        let confusion_emotion = confusion(emotion.0, emotion.1, emotion_classes)?;
        let confusion_intent = confusion(intent.0, intent.1, intent_classes)?;
        let f1_emotion = weighted_f1_from_confusion(&confusion_emotion);
        let f1_intent = weighted_f1_from_confusion(&confusion_intent);
        Ok(Self {
            f1_emotion,
            f1_intent,
            jrbm: jrbm(f1_emotion, f1_intent),
            confusion_emotion,
            confusion_intent,
        })
    }

    /// Plain accuracy per task, read off the confusion diagonals.
    pub fn accuracy(&self) -> (f64, f64) {
        let acc = |cm: &ConfusionMatrix| {
            let diag: u64 = (0..cm.classes).map(|c| cm.counts[c][c]).sum();
            diag as f64 / cm.total() as f64
        };
        (acc(&self.confusion_emotion), acc(&self.confusion_intent))
    }
}

/// Top-1 minus top-2 probability.
pub fn margin(probs: &[f64]) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &p in probs {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    if second == f64::NEG_INFINITY {
        first
    } else {
        first - second
    }
}

/// Per-sample margin sampling over models for one task: the model with the
/// widest top-1/top-2 gap supplies its argmax, earliest model on ties.
///
/// `per_model[m][s]` is model `m`'s distribution for sample `s`.
pub fn margin_fusion_task(per_model: &[&[Vec<f64>]]) -> Result<Vec<usize>> {
    let first = per_model
        .first()
        .ok_or_else(|| Error::contract("fusion needs at least one model"))?;
    let samples = first.len();
    if per_model.iter().any(|m| m.len() != samples) {
        return Err(Error::contract("models disagree on the number of samples"));
    }
    (0..samples)
        .map(|s| {
            let classes = first[s].len();
            let mut best = 0;
            let mut best_margin = f64::NEG_INFINITY;
            for (m, probs) in per_model.iter().enumerate() {
                if probs[s].len() != classes {
                    return Err(Error::contract("models disagree on the number of classes"));
                }
                let g = margin(&probs[s]);
                if g > best_margin {
                    best_margin = g;
                    best = m;
                }
            }
            Ok(argmax(&per_model[best][s]))
        })
        .collect()
}

/// Fused `(emotion, intent)` predictions; each task is fused independently.
pub fn margin_fusion(per_model: &[Vec<TaskProbs>]) -> Result<Vec<(usize, usize)>> {
    let emo: Vec<Vec<Vec<f64>>> = per_model
        .iter()
        .map(|m| m.iter().map(|p| p.emotion.clone()).collect())
        .collect();
    let int: Vec<Vec<Vec<f64>>> = per_model
        .iter()
        .map(|m| m.iter().map(|p| p.intent.clone()).collect())
        .collect();
    let emo_refs: Vec<&[Vec<f64>]> = emo.iter().map(|v| v.as_slice()).collect();
    let int_refs: Vec<&[Vec<f64>]> = int.iter().map(|v| v.as_slice()).collect();
    let e = margin_fusion_task(&emo_refs)?;
    let i = margin_fusion_task(&int_refs)?;
    Ok(e.into_iter().zip(i).collect())
}
