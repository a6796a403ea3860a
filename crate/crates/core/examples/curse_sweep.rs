//! Reproduces the beam-size curse on a synthetic corpus.
//!
//! Default scoring returns shorter outputs as the beam widens. Length-aware
//! rescoring with an oracle length predictor keeps the length ratio near 1.
//!
//!     cargo run --release --example curse_sweep

use beamcurse::corpus::{generate_corpus, oracle_from_corpus};
use beamcurse::model::{HashModel, HashModelSpec};
use beamcurse::sweep::{beam_sweep, sweep_csv};
use beamcurse::{DecodeConfig, ScoringMethod, Stopping, Vocab};

fn main() -> beamcurse::Result<()> {
    let seed = 2018;
    let model = HashModel::new(HashModelSpec::new(seed, Vocab::with_size(50)?))?;
    let cfg = DecodeConfig::new(1, Stopping::MaxLen);
    let corpus = generate_corpus(&model, seed, 200, (5, 25), &cfg)?;
    let oracle = oracle_from_corpus(&corpus);
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

    let curse = beam_sweep(
        &model,
        &corpus,
        &[ScoringMethod::Default],
        &[1, 2, 5, 10, 20, 40],
        &cfg,
        &oracle,
        jobs,
    )?;
    print!("{}", sweep_csv(&curse));

    let methods = [
        ScoringMethod::LengthNorm,
        ScoringMethod::BoundedWordReward { r: 2.0 },
        ScoringMethod::BoundedWordReward { r: 4.0 },
        ScoringMethod::BoundedWordReward { r: 6.0 },
        ScoringMethod::BoundedAdaptiveReward,
        ScoringMethod::BpNorm,
    ];
    let fixed = beam_sweep(&model, &corpus, &methods, &[5, 40], &cfg, &oracle, jobs)?;
    for row in fixed {
        println!("{}", row.csv_line());
    }
    Ok(())
}
