//! Decodes one sentence under every scoring method and shows how each one
//! trades model score against length.
//!
//!     cargo run --example rescoring

use beamcurse::model::{HashModel, HashModelSpec};
use beamcurse::{decode, DecodeConfig, ScoringMethod, SentenceContext, Stopping, Vocab};

fn main() -> beamcurse::Result<()> {
    let model = HashModel::new(HashModelSpec::new(2018, Vocab::with_size(50)?))?;
    let source = vec![7, 31, 4, 22, 18, 9, 40, 13, 27, 5, 16, 38];
    let cfg = DecodeConfig::new(40, Stopping::MaxLen);
    let l_pred = source.len() as f64 + 1.0;

    println!("|x| = {}, L_pred = {l_pred}", source.len());
    println!(
        "{:<24} {:>4} {:>9} {:>9}",
        "method", "|y|", "raw", "adjusted"
    );
    for method in ScoringMethod::all(4.0, 0.6, 0.2) {
        let mut ctx = SentenceContext::new(source.clone(), l_pred, cfg.max_len(source.len()))?;
        let result = decode(&model, &mut ctx, &cfg, &method)?;
        println!(
            "{:<24} {:>4} {:>9.3} {:>9.3}",
            method.label(),
            result.best.len(),
            result.best.score(),
            result.best_adjusted_score
        );
    }
    Ok(())
}
