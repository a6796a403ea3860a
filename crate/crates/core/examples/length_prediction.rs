//! Fits a generation ratio on one corpus and measures how well each
//! predictor guesses output lengths on another.
//!
//!     cargo run --example length_prediction

use beamcurse::corpus::{fit_on_corpus, generate_corpus, oracle_from_corpus};
use beamcurse::model::{HashModel, HashModelSpec};
use beamcurse::{DecodeConfig, RatioPredictor, Stopping, Vocab};

fn main() -> beamcurse::Result<()> {
    let model = HashModel::new(HashModelSpec::new(8, Vocab::with_size(50)?))?;
    let cfg = DecodeConfig::new(1, Stopping::MaxLen);
    let train = generate_corpus(&model, 80, 300, (5, 25), &cfg)?;
    let test = generate_corpus(&model, 81, 100, (5, 25), &cfg)?;

    let fitted = fit_on_corpus(&train)?;
    println!("fitted ratio {:.4}", fitted.ratio().unwrap_or(f64::NAN));
    let predictors = [
        ("fixed 1.0", RatioPredictor::fixed(1.0)?),
        ("least squares", fitted),
        ("oracle", oracle_from_corpus(&test)),
    ];
    for (name, p) in &predictors {
        let mut abs_err = 0.0;
        for rec in &test {
            abs_err += (p.predict_length(&rec.src)? - rec.target_len() as f64).abs();
        }
        println!(
            "{name:<14} mean |L_pred - |y|| = {:.3}",
            abs_err / test.len() as f64
        );
    }
    Ok(())
}
