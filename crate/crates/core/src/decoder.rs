//! Beam search, greedy search and an exhaustive oracle.
//!
//! The beam is always ordered by raw model score. Finished items keep their
//! beam slots (so "the top item has stopped" is observable) and are copied
//! into the finished pool at the step they enter the beam; rescoring applies
//! only to that pool.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Stepper;
use crate::scoring;
use crate::stopping::{self, StopState};
use crate::types::{
    Beam, DecodeConfig, Hypothesis, ScoringMethod, SentenceContext, TokenId, IMPOSSIBLE,
};

/// A finished candidate with its rescored value.
#[derive(Debug, Clone, PartialEq)]
pub struct FinishedCandidate {
    pub hypothesis: Hypothesis,
    pub adjusted: f64,
    /// Step at which it entered the beam (equals its length unless forced).
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub best: Hypothesis,
    pub best_adjusted_score: f64,
    /// In discovery order.
    pub finished_pool: Vec<FinishedCandidate>,
    pub steps_run: usize,
    /// Steps at which the first, second and third finished candidates appeared.
    pub eos_step_positions: Vec<usize>,
    /// True when nothing finished within R and `</eos>` was appended to the
    /// top candidate.
    pub forced: bool,
}

/// One line of decoder output, as written by the command-line driver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeRecord {
    pub tokens: Vec<TokenId>,
    pub raw_score: f64,
    pub adjusted_score: f64,
    pub stop_step: usize,
    pub eos_steps: Vec<usize>,
}

impl From<&DecodeResult> for DecodeRecord {
    fn from(r: &DecodeResult) -> Self {
        Self {
            tokens: r.best.tokens().to_vec(),
            raw_score: r.best.score(),
            adjusted_score: r.best_adjusted_score,
            stop_step: r.steps_run,
            eos_steps: r.eos_step_positions.clone(),
        }
    }
}

struct Candidate {
    score: f64,
    rank: usize,
    // None for a finished item carried over unchanged
    token: Option<TokenId>,
    logprob: f64,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.rank.cmp(&b.rank))
        .then(a.token.cmp(&b.token))
}

/// One beam step: carry finished items, extend unfinished ones by every
/// possible token, keep the best `b` by raw score.
///
/// Ties go to the earlier beam rank, then the smaller token id; a carried
/// item sorts before extensions of the same rank.
pub fn expand_beam<S: Stepper + ?Sized>(
    beam: &Beam,
    stepper: &S,
    ctx: &SentenceContext,
    b: usize,
) -> Result<Beam> {
    if b == 0 {
        return Err(Error::Contract("beam size must be >= 1".into()));
    }
    if beam.items.is_empty() {
        return Err(Error::Contract("cannot expand an empty beam".into()));
    }
    let eos = stepper.vocab().eos_id();
    let mut attn_rows = vec![None; beam.items.len()];
    let mut pool = Vec::new();
    for (rank, item) in beam.items.iter().enumerate() {
        if item.is_finished() {
            pool.push(Candidate {
                score: item.score(),
                rank,
                token: None,
                logprob: 0.0,
            });
            continue;
        }
        let out = stepper.step(ctx.source(), item.tokens())?;
        for (tok, &lp) in out.logprobs.iter().enumerate() {
            if lp <= IMPOSSIBLE {
                continue;
            }
            pool.push(Candidate {
                score: item.score() + lp,
                rank,
                token: Some(tok as TokenId),
                logprob: lp,
            });
        }
        attn_rows[rank] = out.attn;
    }
    if pool.is_empty() {
        return Err(Error::DeadEnd {
            step: beam.step + 1,
        });
    }

    if pool.len() > b {
        pool.select_nth_unstable_by(b - 1, candidate_order);
        pool.truncate(b);
    }
    pool.sort_unstable_by(candidate_order);

    let items = pool
        .into_iter()
        .map(|c| {
            let parent = &beam.items[c.rank];
            match c.token {
                None => Ok(parent.clone()),
                Some(tok) => parent.extend(tok, c.logprob, attn_rows[c.rank].as_deref(), eos),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Beam {
        items,
        step: beam.step + 1,
    })
}

/// Beam search under `cfg`, selecting the finished candidate with the highest
/// adjusted score (earliest found on ties).
///
/// `ctx.adaptive_rewards` is reset and, for adaptive reward, refilled with
/// one r_t per step.
pub fn decode<S: Stepper + ?Sized>(
    stepper: &S,
    ctx: &mut SentenceContext,
    cfg: &DecodeConfig,
    method: &ScoringMethod,
) -> Result<DecodeResult> {
    cfg.validate()?;
    stopping::validate(cfg.stopping, method)?;
    ctx.adaptive_rewards.clear();
    let adaptive = matches!(method, ScoringMethod::BoundedAdaptiveReward);
    let max_len = ctx.max_len();

    let mut beam = Beam::initial();
    let mut pool: Vec<FinishedCandidate> = Vec::new();
    let mut best: Option<usize> = None;
    let mut steps_run = 0;

    for t in 1..=max_len {
        if beam.all_finished() {
            break;
        }
        beam = expand_beam(&beam, stepper, ctx, cfg.beam_size)?;
        steps_run = t;
        if adaptive {
            let r_t = scoring::adaptive_reward_step(&beam)?;
            ctx.adaptive_rewards.push(r_t);
        }

        for item in beam
            .items
            .iter()
            .filter(|h| h.is_finished() && h.len() == t)
        {
            let adjusted = scoring::adjusted(method, item, ctx)?;
            if best.is_none_or(|i| adjusted > pool[i].adjusted) {
                best = Some(pool.len());
            }
            pool.push(FinishedCandidate {
                hypothesis: item.clone(),
                adjusted,
                step: t,
            });
        }

        let state = StopState {
            best_finished: best.map(|i| pool[i].adjusted),
            finished_count: pool.len(),
            step: t,
            top_raw: beam
                .items
                .iter()
                .find(|h| !h.is_finished())
                .map_or(f64::NEG_INFINITY, Hypothesis::score),
        };
        if stopping::should_stop(cfg.stopping, method, &beam, &state, ctx, cfg.beam_size) {
            break;
        }
    }

    let mut forced = false;
    if pool.is_empty() {
        let top = beam
            .top()
            .ok_or(Error::DeadEnd { step: steps_run })?
            .clone();
        let hypothesis = force_eos(stepper, ctx, &top)?;
        if adaptive && ctx.adaptive_rewards.len() < hypothesis.len() {
            let r = -hypothesis.last_logprob().unwrap_or(0.0) + 0.0;
            ctx.adaptive_rewards.push(r);
        }
        let adjusted = scoring::adjusted(method, &hypothesis, ctx)?;
        pool.push(FinishedCandidate {
            hypothesis,
            adjusted,
            step: steps_run,
        });
        best = Some(0);
        forced = true;
    }

    let best = &pool[best.expect("pool is nonempty")];
    Ok(DecodeResult {
        best: best.hypothesis.clone(),
        best_adjusted_score: best.adjusted,
        eos_step_positions: pool.iter().take(3).map(|c| c.step).collect(),
        finished_pool: pool,
        steps_run,
        forced,
    })
}

fn force_eos<S: Stepper + ?Sized>(
    stepper: &S,
    ctx: &SentenceContext,
    h: &Hypothesis,
) -> Result<Hypothesis> {
    let eos = stepper.vocab().eos_id();
    let out = stepper.step(ctx.source(), h.tokens())?;
    let lp = out.logprobs[eos as usize];
    if lp <= IMPOSSIBLE {
        return Err(Error::DeadEnd { step: h.len() + 1 });
    }
    h.extend(eos, lp, out.attn.as_deref(), eos)
}

/// Greedy search: take the most probable token (smallest id on ties) until
/// `</eos>` or the length limit, where `</eos>` is forced.
pub fn decode_greedy<S: Stepper + ?Sized>(
    stepper: &S,
    ctx: &SentenceContext,
) -> Result<DecodeResult> {
    let eos = stepper.vocab().eos_id();
    let mut h = Hypothesis::root();
    let mut forced = false;
    while !h.is_finished() {
        if h.len() == ctx.max_len() {
            h = force_eos(stepper, ctx, &h)?;
            forced = true;
            break;
        }
        let out = stepper.step(ctx.source(), h.tokens())?;
        let (tok, lp) = out
            .logprobs
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (tok, &lp)| match acc {
                Some((_, best)) if lp <= best => acc,
                _ => Some((tok, lp)),
            })
            .filter(|&(_, lp)| lp > IMPOSSIBLE)
            .ok_or(Error::DeadEnd { step: h.len() + 1 })?;
        h = h.extend(tok as TokenId, lp, out.attn.as_deref(), eos)?;
    }
    let steps_run = if forced { h.len() - 1 } else { h.len() };
    let score = h.score();
    Ok(DecodeResult {
        best: h.clone(),
        best_adjusted_score: score,
        finished_pool: vec![FinishedCandidate {
            hypothesis: h,
            adjusted: score,
            step: steps_run,
        }],
        steps_run,
        eos_step_positions: vec![steps_run],
        forced,
    })
}

const EXHAUSTIVE_BUDGET: f64 = 1e6;

/// Enumerates every sequence that terminates within `depth_limit` content
/// tokens and returns the best under `method`, with its adjusted score.
/// Ties go to the lexicographically smallest token sequence.
///
/// Adaptive rewards are computed as if the beam held every candidate at
/// each step, which is what a beam wide enough to never prune sees.
pub fn exhaustive_best<S: Stepper + ?Sized>(
    stepper: &S,
    ctx: &SentenceContext,
    method: &ScoringMethod,
    depth_limit: usize,
) -> Result<(Hypothesis, f64)> {
    let vocab = stepper.vocab();
    let size = f64::from(vocab.size()).powi(depth_limit.min(i32::MAX as usize) as i32);
    if size > EXHAUSTIVE_BUDGET {
        return Err(Error::Budget(format!(
            "{}^{depth_limit} sequences exceeds {EXHAUSTIVE_BUDGET}",
            vocab.size()
        )));
    }
    let eos = vocab.eos_id();
    let adaptive = matches!(method, ScoringMethod::BoundedAdaptiveReward);
    let mut local = ctx.clone();
    local.adaptive_rewards.clear();

    let mut live = vec![Hypothesis::root()];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for t in 1..=depth_limit + 1 {
        if live.is_empty() {
            break;
        }
        let mut level = Vec::new();
        for h in &live {
            let out = stepper.step(local.source(), h.tokens())?;
            for (tok, &lp) in out.logprobs.iter().enumerate() {
                if lp > IMPOSSIBLE {
                    level.push(h.extend(tok as TokenId, lp, out.attn.as_deref(), eos)?);
                }
            }
        }
        if adaptive {
            let mut last: Vec<f64> = finished
                .iter()
                .chain(&level)
                .filter_map(Hypothesis::last_logprob)
                .collect();
            local
                .adaptive_rewards
                .push(scoring::mean_negative(&mut last));
        }
        let (done, open): (Vec<_>, Vec<_>) = level.into_iter().partition(Hypothesis::is_finished);
        finished.extend(done);
        live = if t <= depth_limit { open } else { Vec::new() };
    }

    let mut best: Option<(Hypothesis, f64)> = None;
    for h in finished {
        let s = scoring::adjusted(method, &h, &local)?;
        let better = match &best {
            None => true,
            Some((bh, bs)) => s > *bs || (s == *bs && h.tokens() < bh.tokens()),
        };
        if better {
            best = Some((h, s));
        }
    }
    best.ok_or(Error::DeadEnd {
        step: depth_limit + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrieLattice;
    use crate::types::Stopping;

    const TINY: &str = include_str!("../fixtures/tiny.json");
    const EOS: TokenId = 1;
    const A: TokenId = 2;
    const B: TokenId = 3;

    fn tiny() -> TrieLattice {
        TrieLattice::from_json(TINY).unwrap()
    }

    fn ctx() -> SentenceContext {
        SentenceContext::new(vec![A], 2.0, 12).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 5e-5
    }

    #[test]
    fn tiny_expand_steps() {
        let lat = tiny();
        let c = ctx();
        let b1 = expand_beam(&Beam::initial(), &lat, &c, 2).unwrap();
        let toks: Vec<_> = b1.items.iter().map(|h| h.tokens().to_vec()).collect();
        assert_eq!(toks, vec![vec![A], vec![B]]);
        assert!(close(b1.items[0].score(), -0.5108));
        assert!(close(b1.items[1].score(), -1.2040));

        let b2 = expand_beam(&b1, &lat, &c, 2).unwrap();
        let toks: Vec<_> = b2.items.iter().map(|h| h.tokens().to_vec()).collect();
        assert_eq!(toks, vec![vec![A, EOS], vec![B, A]]);
        assert!(close(b2.items[0].score(), -0.8675));
        assert!(close(b2.items[1].score(), -1.8971));
        assert_eq!(b2.step, 2);
    }

    #[test]
    fn wide_beam_keeps_whole_pool() {
        let b = expand_beam(&Beam::initial(), &tiny(), &ctx(), 10).unwrap();
        assert_eq!(b.items.len(), 3);
        let scores: Vec<f64> = b.items.iter().map(Hypothesis::score).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(b.items[2].tokens(), &[EOS]);
    }

    #[test]
    fn tiny_default_topmost() {
        let mut c = ctx();
        let cfg = DecodeConfig::new(2, Stopping::TopmostFinished);
        let r = decode(&tiny(), &mut c, &cfg, &ScoringMethod::Default).unwrap();
        assert_eq!(r.best.tokens(), &[A, EOS]);
        assert!(close(r.best.score(), -0.8675));
        assert_eq!(r.steps_run, 2);
    }

    #[test]
    fn tiny_length_norm_maxlen() {
        let mut c = ctx();
        let cfg = DecodeConfig::new(3, Stopping::MaxLen);
        let r = decode(&tiny(), &mut c, &cfg, &ScoringMethod::LengthNorm).unwrap();
        assert_eq!(r.best.tokens(), &[A, EOS]);
        assert!(close(r.best_adjusted_score, -0.43375));
        let find = |toks: &[TokenId]| {
            r.finished_pool
                .iter()
                .find(|c| c.hypothesis.tokens() == toks)
                .map(|c| c.adjusted)
        };
        assert!(close(find(&[B, A, EOS]).unwrap(), -0.63237));
        assert!(close(find(&[EOS]).unwrap(), -std::f64::consts::LN_10));
        assert_eq!(r.eos_step_positions, vec![1, 2, 3]);
        assert!(!r.forced);
    }

    #[test]
    fn tiny_greedy() {
        let r = decode_greedy(&tiny(), &ctx()).unwrap();
        assert_eq!(r.best.tokens(), &[A, EOS]);
        assert!(close(r.best.score(), -0.8675));
    }

    #[test]
    fn greedy_stops_on_immediate_eos() {
        let text = r#"{"vocab_size": 3, "eos_id": 1, "bos_id": 0, "root": {"arcs": {
            "1": {"logprob": -0.2231435513142097, "child": null},
            "2": {"logprob": -1.6094379124341003, "child": {"arcs": {"1": {"logprob": 0.0, "child": null}}}}
        }}}"#;
        let lat = TrieLattice::from_json(text).unwrap();
        let r = decode_greedy(&lat, &ctx()).unwrap();
        assert_eq!(r.best.tokens(), &[EOS]);
    }

    #[test]
    fn greedy_is_beam_of_one() {
        let mut c = ctx();
        let cfg = DecodeConfig::new(1, Stopping::TopmostFinished);
        let beam = decode(&tiny(), &mut c, &cfg, &ScoringMethod::Default).unwrap();
        let greedy = decode_greedy(&tiny(), &c).unwrap();
        assert_eq!(beam.best, greedy.best);
    }

    #[test]
    fn exhaustive_tiny() {
        let (h, s) = exhaustive_best(&tiny(), &ctx(), &ScoringMethod::Default, 2).unwrap();
        assert_eq!(h.tokens(), &[A, EOS]);
        assert!(close(s, -0.8675));

        let (h, s) =
            exhaustive_best(&tiny(), &ctx(), &ScoringMethod::WordReward { r: 1.0 }, 2).unwrap();
        assert_eq!(h.tokens(), &[A, EOS]);
        assert!(close(s, 1.1325));

        let (h, _) = exhaustive_best(&tiny(), &ctx(), &ScoringMethod::Default, 0).unwrap();
        assert_eq!(h.tokens(), &[EOS]);
    }

    #[test]
    fn exhaustive_budget_guard() {
        use crate::model::{HashModel, HashModelSpec};
        use crate::types::Vocab;
        let m = HashModel::new(HashModelSpec::new(1, Vocab::with_size(50).unwrap())).unwrap();
        let c = SentenceContext::new(vec![2, 3], 4.0, 20).unwrap();
        assert!(matches!(
            exhaustive_best(&m, &c, &ScoringMethod::Default, 4),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn dead_end_reported() {
        // a stepper that allows nothing
        struct Nothing;
        impl Stepper for Nothing {
            fn vocab(&self) -> crate::types::Vocab {
                crate::types::Vocab::with_size(3).unwrap()
            }
            fn step(&self, _: &[TokenId], _: &[TokenId]) -> Result<crate::model::StepOutput> {
                Ok(crate::model::StepOutput {
                    logprobs: vec![crate::types::NEG_SENTINEL; 3],
                    attn: None,
                })
            }
        }
        assert!(matches!(
            expand_beam(&Beam::initial(), &Nothing, &ctx(), 4),
            Err(Error::DeadEnd { step: 1 })
        ));
    }

    #[test]
    fn forced_eos_at_limit() {
        let mut c = SentenceContext::new(vec![A], 2.0, 1).unwrap();
        let cfg = DecodeConfig::new(1, Stopping::MaxLen);
        let r = decode(&tiny(), &mut c, &cfg, &ScoringMethod::Default).unwrap();
        // the only step keeps [a]; [a, eos] is forced
        assert!(r.forced);
        assert_eq!(r.best.tokens(), &[A, EOS]);
        let g = decode_greedy(&tiny(), &c).unwrap();
        assert_eq!(g.best, r.best);
    }

    #[test]
    fn optimal_rejected_for_default() {
        let mut c = ctx();
        let cfg = DecodeConfig::new(2, Stopping::Optimal);
        assert!(matches!(
            decode(&tiny(), &mut c, &cfg, &ScoringMethod::Default),
            Err(Error::Usage(_))
        ));
    }
}
