//! Stopping criteria, checked once per step after the beam is expanded.
//!
//! The optimal rules stop only when no future finished candidate can score
//! above the best finished score so far, so the returned hypothesis is the
//! same as when decoding runs to the length limit. Ties permit stopping:
//! the decoder keeps the earliest-found candidate among equal scores.

use crate::error::{Error, Result};
use crate::types::{Beam, ScoringMethod, SentenceContext, Stopping};

/// Search progress seen by the stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopState {
    /// Ŝ*: best adjusted score among finished candidates.
    pub best_finished: Option<f64>,
    pub finished_count: usize,
    /// Current step t.
    pub step: usize,
    /// S_{t,0}: raw score of the best unfinished beam item, the highest
    /// model score any future candidate can start from. Negative infinity
    /// when every item is finished.
    pub top_raw: f64,
}

/// Stop when the top beam item is finished. An empty beam has nothing left
/// to extend and also stops.
pub fn should_stop_topmost(beam: &Beam) -> bool {
    beam.top().is_none_or(|h| h.is_finished())
}

/// Stop once at least `b` finished candidates exist.
pub fn should_stop_b_finished(state: &StopState, b: usize) -> bool {
    state.finished_count >= b
}

/// Stop iff S_{t,0} / R ≤ Ŝ*. Also the optimal rule for length normalization.
pub fn should_stop_optimal_bp_norm(state: &StopState, ctx: &SentenceContext) -> bool {
    state
        .best_finished
        .is_some_and(|best| state.top_raw / ctx.max_len() as f64 <= best)
}

/// Stop iff t > L_pred and S_{t,0} + Σ_{t'≤⌊L_pred⌋} r_{t'} ≤ Ŝ*.
///
/// Past L_pred the reward part of any future score is fixed while its model
/// score can only fall.
pub fn should_stop_optimal_adar(state: &StopState, ctx: &SentenceContext) -> bool {
    let Some(best) = state.best_finished else {
        return false;
    };
    if state.step as f64 <= ctx.l_pred() {
        return false;
    }
    let steps = ctx.l_pred().floor() as usize;
    let Some(rewards) = ctx.adaptive_rewards.get(..steps) else {
        return false;
    };
    state.top_raw + rewards.iter().sum::<f64>() <= best
}

/// Stop iff Ŝ* ≥ S_{t,0} + r·L_pred, the best any future candidate can reach.
pub fn should_stop_optimal_bwr(state: &StopState, ctx: &SentenceContext, r: f64) -> bool {
    state
        .best_finished
        .is_some_and(|best| best >= state.top_raw + r * ctx.l_pred())
}

/// Rejects stopping rules a method does not support.
pub fn validate(stopping: Stopping, method: &ScoringMethod) -> Result<()> {
    if stopping == Stopping::Optimal && !method.has_optimal_stopping() {
        return Err(Error::Usage(format!(
            "optimal stopping is not defined for method {}",
            method.name()
        )));
    }
    Ok(())
}

/// Evaluates the configured rule.
pub fn should_stop(
    stopping: Stopping,
    method: &ScoringMethod,
    beam: &Beam,
    state: &StopState,
    ctx: &SentenceContext,
    beam_size: usize,
) -> bool {
    match stopping {
        Stopping::TopmostFinished => should_stop_topmost(beam),
        Stopping::BFinished => should_stop_b_finished(state, beam_size),
        Stopping::MaxLen => false,
        Stopping::Optimal => match *method {
            ScoringMethod::BpNorm | ScoringMethod::LengthNorm => {
                should_stop_optimal_bp_norm(state, ctx)
            }
            ScoringMethod::BoundedAdaptiveReward => should_stop_optimal_adar(state, ctx),
            ScoringMethod::BoundedWordReward { r } => should_stop_optimal_bwr(state, ctx, r),
            _ => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Hypothesis;

    fn state(best: Option<f64>, step: usize, top_raw: f64) -> StopState {
        StopState {
            best_finished: best,
            finished_count: 0,
            step,
            top_raw,
        }
    }

    fn ctx(l_pred: f64, max_len: usize) -> SentenceContext {
        SentenceContext::new(vec![2], l_pred, max_len).unwrap()
    }

    #[test]
    fn topmost() {
        let fin = Hypothesis::from_steps(vec![1], vec![-0.1], 1).unwrap();
        let open = Hypothesis::from_steps(vec![2], vec![-0.2], 1).unwrap();
        let beam = Beam {
            items: vec![fin.clone(), open.clone()],
            step: 1,
        };
        assert!(should_stop_topmost(&beam));
        let beam = Beam {
            items: vec![open, fin],
            step: 1,
        };
        assert!(!should_stop_topmost(&beam));
        assert!(should_stop_topmost(&Beam {
            items: vec![],
            step: 3
        }));
    }

    #[test]
    fn b_finished() {
        let mut s = state(None, 3, -1.0);
        s.finished_count = 4;
        assert!(should_stop_b_finished(&s, 4));
        s.finished_count = 3;
        assert!(!should_stop_b_finished(&s, 4));
        s.finished_count = 1;
        assert!(should_stop_b_finished(&s, 1));
    }

    #[test]
    fn bp_norm_rule() {
        let c = ctx(10.0, 50);
        assert!(should_stop_optimal_bp_norm(
            &state(Some(-0.05), 5, -5.0),
            &c
        ));
        assert!(!should_stop_optimal_bp_norm(
            &state(Some(-0.2), 5, -5.0),
            &c
        ));
        assert!(should_stop_optimal_bp_norm(&state(Some(-0.1), 5, -5.0), &c));
        assert!(!should_stop_optimal_bp_norm(&state(None, 5, -5.0), &c));
    }

    #[test]
    fn adar_rule() {
        let mut c = ctx(5.0, 50);
        c.adaptive_rewards = vec![0.5; 6];
        // S_t0 + Σ r = -5.5 + 2.5 = -3.0
        assert!(should_stop_optimal_adar(&state(Some(-2.5), 6, -5.5), &c));
        assert!(!should_stop_optimal_adar(&state(Some(-3.5), 6, -5.5), &c));
        for t in 0..=5 {
            assert!(!should_stop_optimal_adar(&state(Some(100.0), t, -5.5), &c));
        }
        let mut c = ctx(4.5, 50);
        c.adaptive_rewards = vec![0.5; 6];
        assert!(!should_stop_optimal_adar(&state(Some(100.0), 4, -5.5), &c));
        assert!(should_stop_optimal_adar(&state(Some(100.0), 5, -5.5), &c));
    }

    #[test]
    fn bwr_rule() {
        let c = ctx(5.0, 50);
        assert!(should_stop_optimal_bwr(
            &state(Some(-0.5), 3, -6.0),
            &c,
            1.0
        ));
        assert!(!should_stop_optimal_bwr(
            &state(Some(-2.0), 3, -6.0),
            &c,
            1.0
        ));
        assert!(should_stop_optimal_bwr(
            &state(Some(-1.0), 3, -6.0),
            &c,
            1.0
        ));
    }

    #[test]
    fn optimal_needs_supported_method() {
        for m in [
            ScoringMethod::Default,
            ScoringMethod::WordReward { r: 1.0 },
            ScoringMethod::Gnmt {
                alpha: 0.3,
                beta: 0.3,
            },
        ] {
            assert!(matches!(
                validate(Stopping::Optimal, &m),
                Err(Error::Usage(_))
            ));
            assert!(validate(Stopping::MaxLen, &m).is_ok());
        }
        assert!(validate(Stopping::Optimal, &ScoringMethod::BpNorm).is_ok());
    }
}
