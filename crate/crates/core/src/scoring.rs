//! Rescoring functions applied to finished candidates.
//!
//! Every scorer is a pure function of a hypothesis and its sentence context.
//! Lengths count the terminal `</eos>`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{Beam, Hypothesis, ScoringMethod, SentenceContext};

/// Raw model score next to the method-adjusted score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub raw: f64,
    pub adjusted: f64,
    /// L* = min(|y|, L_pred), for the bounded methods.
    pub bound: Option<f64>,
}

/// Dispatches to the scorer selected by `method`.
pub fn score(
    method: &ScoringMethod,
    h: &Hypothesis,
    ctx: &SentenceContext,
) -> Result<ScoreBreakdown> {
    let raw = h.score();
    let (adjusted, bound) = match *method {
        ScoringMethod::Default => (raw, None),
        ScoringMethod::LengthNorm => (score_length_norm(h)?, None),
        ScoringMethod::Gnmt { alpha, beta } => (score_gnmt(h, alpha, beta)?, None),
        ScoringMethod::WordReward { r } => (score_word_reward(h, r), None),
        ScoringMethod::BoundedWordReward { r } => (
            score_bounded_word_reward(h, ctx, r),
            Some(bounded_length(h, ctx)),
        ),
        ScoringMethod::BoundedAdaptiveReward => {
            (score_adaptive_reward(h, ctx)?, Some(bounded_length(h, ctx)))
        }
        ScoringMethod::BpNorm => (score_bp_norm(h, ctx)?, None),
    };
    Ok(ScoreBreakdown {
        raw,
        adjusted,
        bound,
    })
}

/// Shorthand for the adjusted score alone.
pub fn adjusted(method: &ScoringMethod, h: &Hypothesis, ctx: &SentenceContext) -> Result<f64> {
    score(method, h, ctx).map(|b| b.adjusted)
}

fn nonempty_len(h: &Hypothesis) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::Contract("cannot rescore an empty hypothesis".into()));
    }
    Ok(h.len() as f64)
}

/// L* = min(|y|, L_pred).
pub fn bounded_length(h: &Hypothesis, ctx: &SentenceContext) -> f64 {
    (h.len() as f64).min(ctx.l_pred())
}

/// S / |y|.
pub fn score_length_norm(h: &Hypothesis) -> Result<f64> {
    Ok(h.score() / nonempty_len(h)?)
}

/// S / lp(|y|) + cp with lp = ((5 + |y|) / 6)^alpha and
/// cp = beta · Σ_j log min(coverage_j, 1).
pub fn score_gnmt(h: &Hypothesis, alpha: f64, beta: f64) -> Result<f64> {
    let len = nonempty_len(h)?;
    let lp = ((5.0 + len) / 6.0).powf(alpha);
    let cp = if beta == 0.0 {
        0.0
    } else {
        let coverage = h.coverage().ok_or_else(|| {
            Error::Contract("coverage penalty needs attention-derived coverage".into())
        })?;
        beta * coverage.iter().map(|&c| c.min(1.0).ln()).sum::<f64>()
    };
    Ok(h.score() / lp + cp)
}

/// S + r·|y|.
pub fn score_word_reward(h: &Hypothesis, r: f64) -> f64 {
    h.score() + r * h.len() as f64
}

/// S + r·min(|y|, L_pred).
pub fn score_bounded_word_reward(h: &Hypothesis, ctx: &SentenceContext, r: f64) -> f64 {
    h.score() + r * bounded_length(h, ctx)
}

/// r_t: mean negative log-probability of the newest token of every beam item.
///
/// The values are summed in ascending order so that the result depends only
/// on the multiset of log-probs, not on how ties in the beam were ordered.
pub fn adaptive_reward_step(beam: &Beam) -> Result<f64> {
    let mut last: Vec<f64> = beam
        .items
        .iter()
        .map(|h| h.last_logprob().unwrap_or(0.0))
        .collect();
    if last.is_empty() {
        return Err(Error::Contract("adaptive reward over an empty beam".into()));
    }
    Ok(mean_negative(&mut last))
}

pub(crate) fn mean_negative(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let sum: f64 = values.iter().sum();
    let r = -sum / values.len() as f64;
    // -0.0 when every log-prob is zero
    r + 0.0
}

/// S + Σ_{t=1}^{⌊min(|y|, L_pred)⌋} r_t.
pub fn score_adaptive_reward(h: &Hypothesis, ctx: &SentenceContext) -> Result<f64> {
    let steps = bounded_length(h, ctx).floor() as usize;
    let rewards = ctx.adaptive_rewards.get(..steps).ok_or_else(|| {
        Error::Contract(format!(
            "adaptive reward needs r_1..r_{steps}, only {} available",
            ctx.adaptive_rewards.len()
        ))
    })?;
    Ok(h.score() + rewards.iter().sum::<f64>())
}

/// log bp against L_pred as the reference length: min(1 − L_pred/|y|, 0).
pub fn log_brevity_penalty(len: f64, l_pred: f64) -> f64 {
    (1.0 - l_pred / len).min(0.0)
}

/// log bp + S / |y|.
pub fn score_bp_norm(h: &Hypothesis, ctx: &SentenceContext) -> Result<f64> {
    let len = nonempty_len(h)?;
    Ok(log_brevity_penalty(len, ctx.l_pred()) + h.score() / len)
}
