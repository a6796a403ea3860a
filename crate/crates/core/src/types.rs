//! Domain types shared by the model backends, scorers, stopping rules and
//! the decoder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque token identifier.
pub type TokenId = u32;

/// Stand-in for a log-probability of negative infinity. Kept finite so all
/// arithmetic on scores stays total.
pub const NEG_SENTINEL: f64 = -1e30;

/// Log-probabilities at or below this value are treated as impossible.
pub(crate) const IMPOSSIBLE: f64 = -1e29;

/// Vocabulary shape: its size plus the two reserved ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    size: u32,
    bos_id: TokenId,
    eos_id: TokenId,
}

impl Vocab {
    pub fn new(size: u32, bos_id: TokenId, eos_id: TokenId) -> Result<Self> {
        if size < 2 {
            return Err(Error::Validation(format!("vocab size {size} < 2")));
        }
        if bos_id == eos_id {
            return Err(Error::Validation("bos_id and eos_id must differ".into()));
        }
        if bos_id >= size || eos_id >= size {
            return Err(Error::Validation(format!(
                "reserved ids (bos {bos_id}, eos {eos_id}) must be < vocab size {size}"
            )));
        }
        Ok(Self {
            size,
            bos_id,
            eos_id,
        })
    }

    /// The layout used by the synthetic hash model: `<s>` = 0, `</eos>` = 1.
    pub fn with_size(size: u32) -> Result<Self> {
        Self::new(size, 0, 1)
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn bos_id(&self) -> TokenId {
        self.bos_id
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }
}

/// A partial or finished output sequence.
///
/// `tokens` never contains `<s>`; a finished hypothesis ends in `</eos>`, and
/// that token counts toward its length. `score` is the running left-to-right
/// sum of `step_logprobs`, so it is bit-identical to summing them again in
/// order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hypothesis {
    tokens: Vec<TokenId>,
    step_logprobs: Vec<f64>,
    score: f64,
    finished: bool,
    coverage: Option<Vec<f64>>,
}

impl Hypothesis {
    /// The empty hypothesis standing for `<s>`, with log-probability 0.
    pub fn root() -> Self {
        Self::default()
    }

    /// Appends one token with its log-probability.
    ///
    /// When an attention row is given it is added to the per-source-position
    /// coverage sums.
    pub fn extend(
        &self,
        token: TokenId,
        logprob: f64,
        attn: Option<&[f64]>,
        eos_id: TokenId,
    ) -> Result<Self> {
        if self.finished {
            return Err(Error::Contract(
                "cannot extend a finished hypothesis".into(),
            ));
        }
        if !(logprob <= 0.0) {
            return Err(Error::Contract(format!(
                "log-probability must be <= 0, got {logprob}"
            )));
        }
        let mut tokens = Vec::with_capacity(self.tokens.len() + 1);
        tokens.extend_from_slice(&self.tokens);
        tokens.push(token);
        let mut step_logprobs = Vec::with_capacity(self.step_logprobs.len() + 1);
        step_logprobs.extend_from_slice(&self.step_logprobs);
        step_logprobs.push(logprob);

        let coverage = match (&self.coverage, attn) {
            (Some(sums), Some(row)) => {
                if sums.len() != row.len() {
                    return Err(Error::Contract(format!(
                        "attention row length {} does not match coverage length {}",
                        row.len(),
                        sums.len()
                    )));
                }
                Some(sums.iter().zip(row).map(|(s, a)| s + a).collect())
            }
            (None, Some(row)) => Some(row.to_vec()),
            (sums, None) => sums.clone(),
        };

        Ok(Self {
            tokens,
            step_logprobs,
            score: self.score + logprob,
            finished: token == eos_id,
            coverage,
        })
    }

    /// Builds a hypothesis directly from tokens and per-step log-probs.
    pub fn from_steps(
        tokens: Vec<TokenId>,
        step_logprobs: Vec<f64>,
        eos_id: TokenId,
    ) -> Result<Self> {
        if tokens.len() != step_logprobs.len() {
            return Err(Error::Contract(format!(
                "{} tokens but {} log-probs",
                tokens.len(),
                step_logprobs.len()
            )));
        }
        if let Some(pos) = tokens.iter().position(|&t| t == eos_id) {
            if pos + 1 != tokens.len() {
                return Err(Error::Contract("</eos> before the last position".into()));
            }
        }
        let mut h = Self::root();
        for (&tok, &lp) in tokens.iter().zip(&step_logprobs) {
            h = h.extend(tok, lp, None, eos_id)?;
        }
        Ok(h)
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn step_logprobs(&self) -> &[f64] {
        &self.step_logprobs
    }

    /// Model score: the sum of per-token log-probabilities.
    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// |y|, counting the terminal `</eos>`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn coverage(&self) -> Option<&[f64]> {
        self.coverage.as_deref()
    }

    pub fn last_logprob(&self) -> Option<f64> {
        self.step_logprobs.last().copied()
    }

    /// Tokens with a trailing `</eos>` removed.
    pub fn content_tokens(&self) -> &[TokenId] {
        if self.finished {
            &self.tokens[..self.tokens.len() - 1]
        } else {
            &self.tokens
        }
    }
}

/// The ordered beam at one decoding step, best item first.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub items: Vec<Hypothesis>,
    pub step: usize,
}

impl Beam {
    /// B_0: just the root hypothesis.
    pub fn initial() -> Self {
        Self {
            items: vec![Hypothesis::root()],
            step: 0,
        }
    }

    pub fn top(&self) -> Option<&Hypothesis> {
        self.items.first()
    }

    pub fn all_finished(&self) -> bool {
        self.items.iter().all(Hypothesis::is_finished)
    }
}

/// Per-sentence decoding context.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceContext {
    source: Vec<TokenId>,
    l_pred: f64,
    max_len: usize,
    /// r_1..r_t, one entry per expanded step. Only filled for adaptive reward.
    pub adaptive_rewards: Vec<f64>,
}

impl SentenceContext {
    pub fn new(source: Vec<TokenId>, l_pred: f64, max_len: usize) -> Result<Self> {
        if !(l_pred > 0.0) || !l_pred.is_finite() {
            return Err(Error::Contract(format!(
                "predicted length must be positive, got {l_pred}"
            )));
        }
        if max_len < 1 {
            return Err(Error::Contract("maximum length must be >= 1".into()));
        }
        Ok(Self {
            source,
            l_pred,
            max_len,
            adaptive_rewards: Vec::new(),
        })
    }

    pub fn source(&self) -> &[TokenId] {
        &self.source
    }

    /// L_pred(x), real-valued.
    pub fn l_pred(&self) -> f64 {
        self.l_pred
    }

    /// R, the hard limit on generated length.
    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

/// Which rescoring function selects among finished candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoringMethod {
    /// Raw model score.
    Default,
    /// S / |y|.
    LengthNorm,
    /// Length penalty ((5+|y|)/6)^alpha and coverage penalty weighted by beta.
    Gnmt { alpha: f64, beta: f64 },
    /// S + r·|y|.
    WordReward { r: f64 },
    /// S + r·min(|y|, L_pred).
    BoundedWordReward { r: f64 },
    /// S plus the adaptive rewards r_1..r_{L*}.
    BoundedAdaptiveReward,
    /// log bp + S / |y| with L_pred as reference length.
    BpNorm,
}

impl ScoringMethod {
    /// Short name as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Default => "default",
            Self::LengthNorm => "length-norm",
            Self::Gnmt { .. } => "gnmt",
            Self::WordReward { .. } => "word-reward",
            Self::BoundedWordReward { .. } => "bwr",
            Self::BoundedAdaptiveReward => "adar",
            Self::BpNorm => "bp-norm",
        }
    }

    /// Name plus hyperparameters, safe to embed in a CSV cell.
    pub fn label(&self) -> String {
        match self {
            Self::Gnmt { alpha, beta } => format!("gnmt:alpha={alpha}:beta={beta}"),
            Self::WordReward { r } => format!("word-reward:r={r}"),
            Self::BoundedWordReward { r } => format!("bwr:r={r}"),
            other => other.name().to_string(),
        }
    }

    /// Whether an optimal stopping rule exists for this method.
    pub fn has_optimal_stopping(&self) -> bool {
        matches!(
            self,
            Self::LengthNorm
                | Self::BoundedWordReward { .. }
                | Self::BoundedAdaptiveReward
                | Self::BpNorm
        )
    }

    /// All seven methods with the given hyperparameters.
    pub fn all(r: f64, alpha: f64, beta: f64) -> [ScoringMethod; 7] {
        [
            Self::Default,
            Self::LengthNorm,
            Self::Gnmt { alpha, beta },
            Self::WordReward { r },
            Self::BoundedWordReward { r },
            Self::BoundedAdaptiveReward,
            Self::BpNorm,
        ]
    }
}

/// When to end the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stopping {
    /// Stop once the top beam item is finished.
    TopmostFinished,
    /// Stop once b finished candidates exist.
    BFinished,
    /// Run to the hard limit R.
    MaxLen,
    /// The method's provably optimal rule.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_len_factor: f64,
    pub max_len_offset: usize,
    pub stopping: Stopping,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 5,
            max_len_factor: 2.0,
            max_len_offset: 10,
            stopping: Stopping::MaxLen,
        }
    }
}

impl DecodeConfig {
    pub fn new(beam_size: usize, stopping: Stopping) -> Self {
        Self {
            beam_size,
            stopping,
            ..Self::default()
        }
    }

    /// R = ceil(factor·|x|) + offset.
    pub fn max_len(&self, source_len: usize) -> usize {
        let scaled = (self.max_len_factor * source_len as f64).ceil() as usize;
        (scaled + self.max_len_offset).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Usage("beam size must be >= 1".into()));
        }
        if !(self.max_len_factor > 0.0) {
            return Err(Error::Usage("max-len factor must be positive".into()));
        }
        Ok(())
    }
}
