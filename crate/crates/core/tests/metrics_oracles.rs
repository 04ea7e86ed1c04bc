//! Metrics checked against brute-force reference formulas.

use proptest::prelude::*;
use samplesize::metrics::{auc_roc, bootstrap_ci, evaluate, prf_per_class, weighted_f1};

/// Weighted F1 straight from confusion counts.
fn brute_weighted_f1(t: &[u8], p: &[u8]) -> f64 {
    let n = t.len() as f64;
    let mut total = 0.0;
    for c in [0u8, 1] {
        let tp = t.iter().zip(p).filter(|(&a, &b)| a == c && b == c).count() as f64;
        let fp = t.iter().zip(p).filter(|(&a, &b)| a != c && b == c).count() as f64;
        let fn_ = t.iter().zip(p).filter(|(&a, &b)| a == c && b != c).count() as f64;
        let f1 = if 2.0 * tp + fp + fn_ == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        };
        let support = t.iter().filter(|&&a| a == c).count() as f64;
        total += support * f1;
    }
    total / n
}

/// AUC by enumerating every positive/negative pair.
fn brute_auc(t: &[u8], s: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..t.len() {
        for j in 0..t.len() {
            if t[i] == 1 && t[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    wins += 1.0;
                } else if s[i] == s[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn labelled_scores() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<f64>)> {
    (2usize..=50).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..=1, n),
            prop::collection::vec(0u8..=1, n),
            // Coarse grid so ties are frequent.
            prop::collection::vec((0u8..8).prop_map(|k| k as f64 / 8.0), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn weighted_f1_matches_confusion_formula((t, p, _) in labelled_scores()) {
        let got = weighted_f1(&t, &p).unwrap();
        prop_assert!((got - brute_weighted_f1(&t, &p)).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_pair_enumeration((t, _, s) in labelled_scores()) {
        let pos = t.iter().filter(|&&l| l == 1).count();
        prop_assume!(pos > 0 && pos < t.len());
        let got = auc_roc(&t, &s).unwrap();
        prop_assert!((got - brute_auc(&t, &s)).abs() < 1e-12);
    }

    #[test]
    fn flipping_labels_mirrors_auc((t, _, s) in labelled_scores()) {
        let pos = t.iter().filter(|&&l| l == 1).count();
        prop_assume!(pos > 0 && pos < t.len());
        let flipped: Vec<u8> = t.iter().map(|&l| 1 - l).collect();
        let a = auc_roc(&t, &s).unwrap();
        let b = auc_roc(&flipped, &s).unwrap();
        prop_assert_eq!(a + b, 1.0);
    }

    #[test]
    fn auc_invariant_under_monotone_transform((t, _, s) in labelled_scores()) {
        let pos = t.iter().filter(|&&l| l == 1).count();
        prop_assume!(pos > 0 && pos < t.len());
        let warped: Vec<f64> = s.iter().map(|&v| (3.0 * v).exp() - 7.0).collect();
        prop_assert_eq!(auc_roc(&t, &s).unwrap(), auc_roc(&t, &warped).unwrap());
    }

    #[test]
    fn metrics_stay_in_unit_interval((t, p, s) in labelled_scores(), seed in any::<u64>()) {
        let pos = t.iter().filter(|&&l| l == 1).count();
        prop_assume!(pos > 0 && pos < t.len());
        let m = evaluate(&t, &p, &s, 50, 0.95, seed).unwrap();
        for v in [m.f1_weighted, m.ci_lo, m.ci_hi, m.auc] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(m.ci_lo <= m.ci_hi);
        for c in prf_per_class(&t, &p).unwrap() {
            prop_assert!((0.0..=1.0).contains(&c.f1));
        }
    }
}

#[test]
fn bootstrap_interval_brackets_a_typical_estimate() {
    let t: Vec<u8> = (0..200).map(|i| u8::from(i % 3 == 0)).collect();
    let p: Vec<u8> = t
        .iter()
        .enumerate()
        .map(|(i, &l)| if i % 7 == 0 { 1 - l } else { l })
        .collect();
    let f1 = weighted_f1(&t, &p).unwrap();
    let (lo, hi) = bootstrap_ci(&t, &p, 1000, 0.95, 11).unwrap();
    assert!(lo < f1 && f1 < hi, "{lo} < {f1} < {hi}");
    assert!(hi - lo < 0.2);
}

#[test]
fn narrower_level_gives_narrower_interval() {
    let t: Vec<u8> = (0..100).map(|i| u8::from(i % 2 == 0)).collect();
    let p: Vec<u8> = (0..100).map(|i| u8::from(i % 5 != 0)).collect();
    let wide = bootstrap_ci(&t, &p, 500, 0.95, 5).unwrap();
    let narrow = bootstrap_ci(&t, &p, 500, 0.5, 5).unwrap();
    assert!(narrow.0 >= wide.0 && narrow.1 <= wide.1);
}
