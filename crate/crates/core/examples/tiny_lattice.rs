//! Steps a beam of two through a three-word lattice and compares the result
//! with greedy search and exhaustive enumeration.
//!
//!     cargo run --example tiny_lattice

use beamcurse::model::TrieLattice;
use beamcurse::{
    decode, decode_greedy, exhaustive_best, expand_beam, Beam, DecodeConfig, ScoringMethod,
    SentenceContext, Stopping,
};

fn main() -> beamcurse::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/tiny.json");
    let lattice = TrieLattice::load(path)?;
    let ctx = SentenceContext::new(vec![2], 2.0, lattice.depth() + 1)?;

    let mut beam = Beam::initial();
    while !beam.all_finished() {
        beam = expand_beam(&beam, &lattice, &ctx, 2)?;
        println!("step {}:", beam.step);
        for h in &beam.items {
            let mark = if h.is_finished() { " (finished)" } else { "" };
            println!("  {:?} {:.4}{mark}", h.tokens(), h.score());
        }
    }

    let greedy = decode_greedy(&lattice, &ctx)?;
    println!(
        "greedy: {:?} {:.4}",
        greedy.best.tokens(),
        greedy.best.score()
    );

    let cfg = DecodeConfig::new(3, Stopping::MaxLen);
    for method in [
        ScoringMethod::Default,
        ScoringMethod::LengthNorm,
        ScoringMethod::WordReward { r: 1.0 },
    ] {
        let mut c = ctx.clone();
        let beam = decode(&lattice, &mut c, &cfg, &method)?;
        let (best, score) = exhaustive_best(&lattice, &ctx, &method, lattice.depth())?;
        println!(
            "{:<12} beam {:?} {:.4} | exhaustive {:?} {:.4}",
            method.label(),
            beam.best.tokens(),
            beam.best_adjusted_score,
            best.tokens(),
            score
        );
    }
    Ok(())
}
