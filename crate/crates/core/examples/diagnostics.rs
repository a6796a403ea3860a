//! Curse diagnostics for one corpus: BLEU decomposition per beam size, where
//! the first finished candidates appear, and the length/score scatter of a
//! single wide-beam search.
//!
//!     cargo run --release --example diagnostics

use beamcurse::corpus::{generate_corpus, oracle_from_corpus};
use beamcurse::eval::{bleu, eos_stats_of, length_score_scatter, scatter_csv, spearman};
use beamcurse::model::{HashModel, HashModelSpec};
use beamcurse::sweep::{decode_corpus, decode_record};
use beamcurse::{DecodeConfig, ScoringMethod, Stopping, TokenId, Vocab};

fn main() -> beamcurse::Result<()> {
    let model = HashModel::new(HashModelSpec::new(11, Vocab::with_size(50)?))?;
    let corpus = generate_corpus(
        &model,
        11,
        100,
        (5, 25),
        &DecodeConfig::new(1, Stopping::MaxLen),
    )?;
    let oracle = oracle_from_corpus(&corpus);
    let refs: Vec<Vec<Vec<TokenId>>> = corpus.iter().map(|r| r.refs.clone()).collect();

    println!("beam  bleu    bp     lr     eos#1  eos#2  eos#3");
    for b in [1, 5, 20, 40] {
        let cfg = DecodeConfig::new(b, Stopping::MaxLen);
        let results = decode_corpus(&model, &corpus, &cfg, &ScoringMethod::Default, &oracle, 4)?;
        let hyps: Vec<Vec<TokenId>> = results
            .iter()
            .map(|r| r.best.content_tokens().to_vec())
            .collect();
        let stats = bleu(&hyps, &refs)?;
        let eos = eos_stats_of(&results).means.map(|m| m.unwrap_or(f64::NAN));
        println!(
            "{b:<5} {:.4}  {:.3}  {:.3}  {:.2}  {:.2}  {:.2}",
            stats.bleu, stats.bp, stats.lr, eos[0], eos[1], eos[2]
        );
    }

    let cfg = DecodeConfig::new(80, Stopping::MaxLen);
    let result = decode_record(&model, &corpus[0], &cfg, &ScoringMethod::Default, &oracle)?;
    let points = length_score_scatter(&result);
    let (lens, scores): (Vec<f64>, Vec<f64>) = points.iter().map(|&(l, s)| (l as f64, s)).unzip();
    println!(
        "\nsentence 0 at b=80, spearman(length, score) = {:.3}",
        spearman(&lens, &scores).unwrap_or(f64::NAN)
    );
    print!("{}", scatter_csv(&points));
    Ok(())
}
