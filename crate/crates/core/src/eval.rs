//! Corpus BLEU in the style of `multi-bleu.pl` and the length diagnostics.
//!
//! Counts are pooled over the corpus. Each n-gram count is clipped by its
//! maximum count in any one reference. The reference length used for each
//! sentence is the one closest to the hypothesis length, with ties going to
//! the shorter. BLEU is zero when any precision is zero.

use std::collections::HashMap;

use serde::Serialize;

use crate::decoder::DecodeResult;
use crate::error::{Error, Result};
use crate::types::TokenId;

const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BleuStats {
    pub precisions: [f64; MAX_ORDER],
    pub bp: f64,
    pub lr: f64,
    pub bleu: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Counts {
    matched: [u64; MAX_ORDER],
    total: [u64; MAX_ORDER],
    hyp_len: usize,
    ref_len: usize,
}

fn ngram_counts(tokens: &[TokenId], n: usize) -> HashMap<&[TokenId], u64> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Reference length closest to `hyp_len`, shorter on ties.
pub fn closest_ref_len(hyp_len: usize, refs: &[Vec<TokenId>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(hyp_len), len))
        .unwrap_or(0)
}

fn sentence_counts(hyp: &[TokenId], refs: &[Vec<TokenId>]) -> Counts {
    let mut c = Counts {
        hyp_len: hyp.len(),
        ref_len: closest_ref_len(hyp.len(), refs),
        ..Counts::default()
    };
    for n in 1..=MAX_ORDER {
        let mut max_ref: HashMap<&[TokenId], u64> = HashMap::new();
        for r in refs {
            for (gram, count) in ngram_counts(r, n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
        for (gram, count) in ngram_counts(hyp, n) {
            c.matched[n - 1] += count.min(max_ref.get(gram).copied().unwrap_or(0));
        }
        c.total[n - 1] += hyp.len().saturating_sub(n - 1) as u64;
    }
    c
}

fn corpus_counts(hyps: &[Vec<TokenId>], refs: &[Vec<Vec<TokenId>>]) -> Result<Counts> {
    if hyps.len() != refs.len() {
        return Err(Error::Contract(format!(
            "{} hypotheses but {} reference sets",
            hyps.len(),
            refs.len()
        )));
    }
    if refs.iter().any(Vec::is_empty) {
        return Err(Error::Contract("every hypothesis needs a reference".into()));
    }
    Ok(hyps
        .iter()
        .zip(refs)
        .map(|(h, r)| sentence_counts(h, r))
        .fold(Counts::default(), |mut acc, c| {
            for n in 0..MAX_ORDER {
                acc.matched[n] += c.matched[n];
                acc.total[n] += c.total[n];
            }
            acc.hyp_len += c.hyp_len;
            acc.ref_len += c.ref_len;
            acc
        }))
}

fn precisions(c: &Counts) -> [f64; MAX_ORDER] {
    std::array::from_fn(|n| {
        if c.total[n] == 0 {
            0.0
        } else {
            c.matched[n] as f64 / c.total[n] as f64
        }
    })
}

/// Clipped corpus n-gram precisions for n = 1..4.
pub fn ngram_precisions(hyps: &[Vec<TokenId>], refs: &[Vec<Vec<TokenId>>]) -> Result<[f64; 4]> {
    Ok(precisions(&corpus_counts(hyps, refs)?))
}

/// min(e^{1 − 1/lr}, 1) with lr = hyp_len / ref_len.
pub fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len >= ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

pub fn bleu(hyps: &[Vec<TokenId>], refs: &[Vec<Vec<TokenId>>]) -> Result<BleuStats> {
    let counts = corpus_counts(hyps, refs)?;
    let p = precisions(&counts);
    let bp = brevity_penalty(counts.hyp_len, counts.ref_len);
    let bleu = if p.contains(&0.0) {
        0.0
    } else {
        bp * (p.iter().map(|x| x.ln()).sum::<f64>() / MAX_ORDER as f64).exp()
    };
    Ok(BleuStats {
        precisions: p,
        bp,
        lr: ratio(counts.hyp_len, counts.ref_len),
        bleu,
        hyp_len: counts.hyp_len,
        ref_len: counts.ref_len,
    })
}

fn ratio(hyp_len: usize, ref_len: usize) -> f64 {
    if ref_len == 0 {
        0.0
    } else {
        hyp_len as f64 / ref_len as f64
    }
}

/// Corpus length ratio: Σ hypothesis length / Σ closest reference length.
pub fn corpus_ratio(hyps: &[Vec<TokenId>], refs: &[Vec<Vec<TokenId>>]) -> Result<f64> {
    if hyps.len() != refs.len() {
        return Err(Error::Contract(
            "hypotheses and references are misaligned".into(),
        ));
    }
    let (h, r) = hyps.iter().zip(refs).fold((0, 0), |(h, r), (hyp, refs)| {
        (h + hyp.len(), r + closest_ref_len(hyp.len(), refs))
    });
    Ok(ratio(h, r))
}

/// Mean step of the first, second and third finished candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EosStats {
    /// `None` when no sentence reached that many finished candidates.
    pub means: [Option<f64>; 3],
    /// Sentences contributing to each slot.
    pub counts: [usize; 3],
}

pub fn eos_stats<'a, I>(eos_steps: I) -> EosStats
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let mut sums = [0.0; 3];
    let mut counts = [0; 3];
    for steps in eos_steps {
        for (slot, &s) in steps.iter().take(3).enumerate() {
            sums[slot] += s as f64;
            counts[slot] += 1;
        }
    }
    EosStats {
        means: std::array::from_fn(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64)),
        counts,
    }
}

pub fn eos_stats_of(results: &[DecodeResult]) -> EosStats {
    eos_stats(results.iter().map(|r| r.eos_step_positions.as_slice()))
}

/// One (length, raw score) pair per finished candidate.
pub fn length_score_scatter(result: &DecodeResult) -> Vec<(usize, f64)> {
    result
        .finished_pool
        .iter()
        .map(|c| (c.hypothesis.len(), c.hypothesis.score()))
        .collect()
}

pub fn scatter_csv(points: &[(usize, f64)]) -> String {
    let mut out = String::from("length,score\n");
    for (len, score) in points {
        out.push_str(&format!("{len},{score}\n"));
    }
    out
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() {
        return None;
    }
    pearson(&ranks(xs), &ranks(ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<TokenId> {
        s.split_whitespace()
            .map(|w| w.as_bytes()[0] as TokenId)
            .collect()
    }

    #[test]
    fn identity_precisions() {
        let h = vec![toks("a b c d")];
        let r = vec![vec![toks("a b c d")]];
        assert_eq!(ngram_precisions(&h, &r).unwrap(), [1.0; 4]);
        assert_eq!(bleu(&h, &r).unwrap().bleu, 1.0);
        assert_eq!(corpus_ratio(&h, &r).unwrap(), 1.0);
    }

    #[test]
    fn partial_match_precisions() {
        let h = vec![toks("a b c d e f g h")];
        let r = vec![vec![toks("a b c d x y z w")]];
        let p = ngram_precisions(&h, &r).unwrap();
        assert_eq!(p, [4.0 / 8.0, 3.0 / 7.0, 2.0 / 6.0, 1.0 / 5.0]);
        let b = bleu(&h, &r).unwrap();
        assert!((b.bleu - 0.345721).abs() < 1e-6, "{}", b.bleu);
        assert_eq!(b.bp, 1.0);
    }

    #[test]
    fn clipping() {
        let p = ngram_precisions(&[toks("a a a")], &[vec![toks("a")]]).unwrap();
        assert_eq!(p[0], 1.0 / 3.0);
    }

    #[test]
    fn brevity() {
        assert_eq!(brevity_penalty(10, 10), 1.0);
        assert!((brevity_penalty(8, 10) - 0.778801).abs() < 1e-6);
        assert_eq!(brevity_penalty(12, 10), 1.0);
    }

    #[test]
    fn short_hypothesis_scores_zero() {
        let b = bleu(&[toks("a b c")], &[vec![toks("a b c")]]).unwrap();
        assert_eq!(b.precisions[3], 0.0);
        assert_eq!(b.bleu, 0.0);
    }

    #[test]
    fn closest_reference_prefers_shorter() {
        let refs = vec![toks("a b"), toks("a b c d"), toks("a b c d e f")];
        assert_eq!(closest_ref_len(3, &refs), 2);
        assert_eq!(closest_ref_len(5, &refs), 4);
        assert_eq!(closest_ref_len(6, &refs), 6);
    }

    #[test]
    fn ratios() {
        let h = vec![toks("a b"), toks("c d")];
        let r = vec![vec![toks("a b c d")], vec![toks("a b c d")]];
        assert_eq!(corpus_ratio(&h, &r).unwrap(), 0.5);
        assert!(matches!(corpus_ratio(&h, &r[..1]), Err(Error::Contract(_))));
        assert!(matches!(bleu(&h, &r[..1]), Err(Error::Contract(_))));
    }

    #[test]
    fn eos_means() {
        let s = eos_stats([&[3usize, 5, 7][..]]);
        assert_eq!(s.means, [Some(3.0), Some(5.0), Some(7.0)]);
        let s = eos_stats([&[3usize, 5, 7][..], &[5, 7, 9][..]]);
        assert_eq!(s.means, [Some(4.0), Some(6.0), Some(8.0)]);
        let s = eos_stats([&[3usize, 5, 7][..], &[5, 7][..]]);
        assert_eq!(s.counts, [2, 2, 1]);
        assert_eq!(s.means[2], Some(7.0));
    }

    #[test]
    fn rank_correlations() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&xs, &[10.0, 20.0, 30.0, 45.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn scatter_format() {
        assert_eq!(scatter_csv(&[]), "length,score\n");
        assert_eq!(scatter_csv(&[(2, -0.5)]), "length,score\n2,-0.5\n");
    }
}
