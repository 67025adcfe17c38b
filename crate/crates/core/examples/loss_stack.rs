//! Walks one unlabelled batch through the gate, the top-k selection and each loss term.

use fullmatch::{
    adaptive_negative_loss, entropy_meaning_loss, entropy_meaning_soft_label, fixmatch_loss, fullmatch_loss,
    gate_pseudo_label, select_k,
};

fn main() -> fullmatch::Result<()> {
    let weak = [
        vec![0.97, 0.01, 0.01, 0.01],
        vec![0.40, 0.35, 0.15, 0.10],
        vec![0.10, 0.60, 0.20, 0.10],
    ];
    let strong = [
        vec![0.80, 0.10, 0.05, 0.05],
        vec![0.20, 0.30, 0.40, 0.10],
        vec![0.25, 0.25, 0.25, 0.25],
    ];
    let batch: Vec<(&[f64], &[f64])> = weak
        .iter()
        .zip(&strong)
        .map(|(w, s)| (w.as_slice(), s.as_slice()))
        .collect();
    let labelled_probs = [0.7, 0.1, 0.1, 0.1];
    let labelled = [(&labelled_probs[..], 0usize)];

    for (i, w) in weak.iter().enumerate() {
        let g = gate_pseudo_label(w, 0.95)?;
        println!(
            "sample {i}: pseudo label {} at {:.2}, accepted {}",
            g.predicted_class, g.confidence, g.accepted
        );
    }

    let sel = select_k(&batch, 0.99)?;
    println!("k = {} (top-k accuracy {:?})", sel.k, sel.topk_accuracy);
    for (w, s) in &batch {
        if sel.k >= 2 {
            let soft = entropy_meaning_soft_label(w, s, sel.k)?;
            println!("soft label targets {:?}, mass {:.4}", soft.targets, soft.mass());
        }
    }
    println!("L_a = {:.4}", adaptive_negative_loss(&batch, sel.k)?);
    println!("L_e = {:.4}", entropy_meaning_loss(&batch, sel.k)?);

    let fix = fixmatch_loss(&labelled, &batch, 0.95, 0.5)?;
    let full = fullmatch_loss(&labelled, &batch, 0.95, 0.99, 0.5, 0.5, 0.5)?;
    println!("fixmatch  {fix:?}");
    println!("fullmatch {full:?}");
    Ok(())
}
