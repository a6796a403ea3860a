//! Optimal stopping returns the same hypothesis as decoding to the length
//! limit, often in fewer steps.
//!
//!     cargo run --release --example optimal_stopping

use beamcurse::corpus::generate_corpus;
use beamcurse::model::{HashModel, HashModelSpec};
use beamcurse::{decode, DecodeConfig, ScoringMethod, SentenceContext, Stopping, Vocab};

fn main() -> beamcurse::Result<()> {
    let model = HashModel::new(HashModelSpec::new(3, Vocab::with_size(50)?))?;
    let corpus = generate_corpus(
        &model,
        3,
        100,
        (5, 25),
        &DecodeConfig::new(1, Stopping::MaxLen),
    )?;
    let methods = [
        ScoringMethod::BpNorm,
        ScoringMethod::LengthNorm,
        ScoringMethod::BoundedAdaptiveReward,
        ScoringMethod::BoundedWordReward { r: 1.0 },
    ];
    // a short length prediction lets the bounds close early
    let ratio = 0.6;
    for b in [5, 40] {
        for method in &methods {
            let (mut full_steps, mut early_steps, mut same) = (0, 0, 0);
            for rec in &corpus {
                let full_cfg = DecodeConfig::new(b, Stopping::MaxLen);
                let early_cfg = DecodeConfig::new(b, Stopping::Optimal);
                let l_pred = ratio * rec.src.len() as f64;
                let mut ctx =
                    SentenceContext::new(rec.src.clone(), l_pred, full_cfg.max_len(rec.src.len()))?;
                let full = decode(&model, &mut ctx, &full_cfg, method)?;
                let early = decode(&model, &mut ctx, &early_cfg, method)?;
                full_steps += full.steps_run;
                early_steps += early.steps_run;
                same += usize::from(full.best_adjusted_score == early.best_adjusted_score);
            }
            println!(
                "b={b:<3} {:<12} steps {full_steps:>5} -> {early_steps:>5}  identical {same}/{}",
                method.label(),
                corpus.len()
            );
        }
    }
    Ok(())
}
