//! Plugs a user-defined model into the decoder. Any type implementing
//! `Stepper` works; this one prefers to copy the source and then stop.
//!
//!     cargo run --example custom_model

use beamcurse::model::{StepOutput, Stepper};
use beamcurse::{
    decode, DecodeConfig, ScoringMethod, SentenceContext, Stopping, TokenId, Vocab, NEG_SENTINEL,
};

struct Copier {
    vocab: Vocab,
}

impl Stepper for Copier {
    fn vocab(&self) -> Vocab {
        self.vocab
    }

    fn step(&self, source: &[TokenId], prefix: &[TokenId]) -> beamcurse::Result<StepOutput> {
        let size = self.vocab.size() as usize;
        let next = source
            .get(prefix.len())
            .copied()
            .unwrap_or(self.vocab.eos_id());
        let mut logits = vec![0.0; size];
        logits[next as usize] = 3.0;
        logits[self.vocab.bos_id() as usize] = NEG_SENTINEL;
        let norm = logits.iter().map(|l: &f64| l.exp()).sum::<f64>().ln();
        let logprobs = logits.iter().map(|l| l - norm).collect();
        Ok(StepOutput {
            logprobs,
            attn: None,
        })
    }
}

fn main() -> beamcurse::Result<()> {
    let model = Copier {
        vocab: Vocab::with_size(10)?,
    };
    let source = vec![4, 7, 7, 2, 9];
    let cfg = DecodeConfig::new(4, Stopping::MaxLen);
    for method in [ScoringMethod::Default, ScoringMethod::BpNorm] {
        let mut ctx = SentenceContext::new(source.clone(), 6.0, cfg.max_len(source.len()))?;
        let result = decode(&model, &mut ctx, &cfg, &method)?;
        println!(
            "{:<8} {:?} adjusted {:.4}",
            method.label(),
            result.best.tokens(),
            result.best_adjusted_score
        );
    }
    Ok(())
}
