use beamcurse::eval::{bleu, brevity_penalty, closest_ref_len, pearson, spearman};
use beamcurse::TokenId;
use proptest::prelude::*;

fn sentence() -> impl Strategy<Value = Vec<TokenId>> {
    prop::collection::vec(2u32..8, 4..15)
}

fn corpus() -> impl Strategy<Value = Vec<(Vec<TokenId>, Vec<TokenId>)>> {
    prop::collection::vec((sentence(), sentence()), 1..8)
}

fn split(pairs: &[(Vec<TokenId>, Vec<TokenId>)]) -> (Vec<Vec<TokenId>>, Vec<Vec<Vec<TokenId>>>) {
    pairs
        .iter()
        .map(|(h, r)| (h.clone(), vec![r.clone()]))
        .unzip()
}

proptest! {
    #[test]
    fn bleu_ignores_sentence_order(pairs in corpus(), rot in 0usize..8) {
        let (h, r) = split(&pairs);
        let mut rotated = pairs.clone();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        let (h2, r2) = split(&rotated);
        let a = bleu(&h, &r).unwrap();
        let b = bleu(&h2, &r2).unwrap();
        prop_assert_eq!(a.precisions, b.precisions);
        prop_assert_eq!(a.hyp_len, b.hyp_len);
        prop_assert_eq!(a.ref_len, b.ref_len);
        prop_assert!((a.bleu - b.bleu).abs() < 1e-15);
    }

    #[test]
    fn bleu_of_self_is_one(hyps in prop::collection::vec(sentence(), 1..8)) {
        let refs: Vec<Vec<Vec<TokenId>>> = hyps.iter().map(|h| vec![h.clone()]).collect();
        let stats = bleu(&hyps, &refs).unwrap();
        prop_assert_eq!(stats.bleu, 1.0);
        prop_assert_eq!(stats.lr, 1.0);
    }

    #[test]
    fn bleu_is_a_fraction(pairs in corpus()) {
        let (h, r) = split(&pairs);
        let stats = bleu(&h, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&stats.bleu));
        prop_assert!((0.0..=1.0).contains(&stats.bp));
    }

    #[test]
    fn brevity_penalty_rises_with_length(r in 1usize..60, c in 1usize..60) {
        prop_assert!(brevity_penalty(c, r) <= brevity_penalty(c + 1, r));
        prop_assert!(brevity_penalty(c, r) <= 1.0);
        if c >= r {
            prop_assert_eq!(brevity_penalty(c, r), 1.0);
        }
    }

    #[test]
    fn spearman_sees_monotone_maps(xs in prop::collection::vec(-1e3f64..1e3, 3..30)) {
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - 7.0).collect();
        if let Some(rho) = spearman(&xs, &ys) {
            prop_assert!((rho - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn closest_reference_prefers_shorter_on_ties() {
    let refs = vec![vec![2; 8], vec![2; 12]];
    assert_eq!(closest_ref_len(10, &refs), 8);
    assert_eq!(closest_ref_len(11, &refs), 12);
}

#[test]
fn zero_precision_gives_zero_bleu() {
    let stats = bleu(&[vec![2, 3, 4, 5]], &[vec![vec![6, 7, 8, 9]]]).unwrap();
    assert_eq!(stats.bleu, 0.0);
}

#[test]
fn correlation_of_constant_is_undefined() {
    assert_eq!(pearson(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), None);
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), None);
}
