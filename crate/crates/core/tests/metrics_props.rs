use fullmatch::math::{softmax, TaskProbs};
use fullmatch::metrics::{confusion, jrbm, margin_fusion, margin_fusion_task, weighted_f1, MetricsReport};
use proptest::prelude::*;

/// Per-class precision/recall counted straight from the label lists.
fn oracle_f1(preds: &[usize], labels: &[usize], classes: usize) -> f64 {
    let n = labels.len() as f64;
    let mut total = 0.0;
    for c in 0..classes {
        let tp = preds.iter().zip(labels).filter(|&(&p, &y)| p == c && y == c).count() as f64;
        let fp = preds.iter().zip(labels).filter(|&(&p, &y)| p == c && y != c).count() as f64;
        let fneg = preds.iter().zip(labels).filter(|&(&p, &y)| p != c && y == c).count() as f64;
        let support = tp + fneg;
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if support > 0.0 { tp / support } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        total += f * support / n;
    }
    total
}

fn labelled_preds() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2usize..9, 1usize..60)
        .prop_flat_map(|(c, n)| (Just(c), prop::collection::vec(0..c, n), prop::collection::vec(0..c, n)))
}

fn tables() -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
    (1usize..5, 1usize..20, 2usize..7).prop_flat_map(|(m, s, c)| {
        prop::collection::vec(
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, c).prop_map(|l| softmax(&l)), s),
            m,
        )
    })
}

fn brute_force_fusion(tables: &[Vec<Vec<f64>>]) -> Vec<usize> {
    let samples = tables[0].len();
    (0..samples)
        .map(|s| {
            let margins: Vec<f64> = tables
                .iter()
                .map(|t| {
                    let mut v = t[s].clone();
                    v.sort_by(|a, b| b.total_cmp(a));
                    v[0] - v[1]
                })
                .collect();
            let best = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let m = margins.iter().position(|&g| g == best).unwrap();
            let p = &tables[m][s];
            let top = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            p.iter().position(|&x| x == top).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weighted_f1_matches_oracle((c, preds, labels) in labelled_preds()) {
        let got = weighted_f1(&preds, &labels, c).unwrap();
        prop_assert!((got - oracle_f1(&preds, &labels, c)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&got));
    }

    #[test]
    fn confusion_rows_sum_to_support((c, preds, labels) in labelled_preds()) {
        let cm = confusion(&preds, &labels, c).unwrap();
        for k in 0..c {
            prop_assert_eq!(cm.support(k) as usize, labels.iter().filter(|&&y| y == k).count());
        }
        prop_assert_eq!(cm.total() as usize, labels.len());
    }

    #[test]
    fn report_jrbm_is_recomputable((c, preds, labels) in labelled_preds()) {
        let r = MetricsReport::from_predictions((&preds, &labels), (&labels, &preds), c, c).unwrap();
        prop_assert!((r.jrbm - jrbm(r.f1_emotion, r.f1_intent)).abs() < 1e-12);
    }

    #[test]
    fn jrbm_bounds(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assert_eq!(jrbm(a, b), jrbm(b, a));
        prop_assert!(jrbm(a, b) >= 0.0);
        prop_assert!(jrbm(a, b) <= 2.0 * a.min(b) + 1e-15);
        prop_assert!((jrbm(a, a) - a).abs() < 1e-15);
    }

    #[test]
    fn fusion_matches_brute_force(t in tables()) {
        let refs: Vec<&[Vec<f64>]> = t.iter().map(|m| m.as_slice()).collect();
        prop_assert_eq!(margin_fusion_task(&refs).unwrap(), brute_force_fusion(&t));
    }

    #[test]
    fn fusion_of_copies_is_argmax(t in tables()) {
        let model: Vec<TaskProbs> = t[0].iter().map(|p| TaskProbs { emotion: p.clone(), intent: p.clone() }).collect();
        let fused = margin_fusion(&[model.clone(), model.clone(), model]).unwrap();
        for (f, p) in fused.iter().zip(&t[0]) {
            let a = fullmatch::math::argmax(p);
            prop_assert_eq!(*f, (a, a));
        }
    }
}

#[test]
fn perfect_predictions_equal_accuracy() {
    let y = [3, 1, 0, 0, 2, 3];
    let r = MetricsReport::from_predictions((&y, &y), (&y, &y), 4, 4).unwrap();
    assert_eq!(r.f1_emotion, 1.0);
    assert_eq!(r.accuracy(), (1.0, 1.0));
}
