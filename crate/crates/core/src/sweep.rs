//! Corpus-level decoding and the beam-size sweep.

use serde::Serialize;

use crate::corpus::CorpusRecord;
use crate::decoder::{decode, DecodeResult};
use crate::error::{Error, Result};
use crate::eval::{bleu, eos_stats_of};
use crate::model::Stepper;
use crate::predict::RatioPredictor;
use crate::types::{DecodeConfig, ScoringMethod, SentenceContext, TokenId};

pub const SWEEP_HEADER: &str = "method,beam,bleu,lr,bp,mean_len,mean_stop_step,mean_first_eos";

/// Decodes one corpus record with L_pred from `predictor`.
pub fn decode_record<S: Stepper + ?Sized>(
    stepper: &S,
    record: &CorpusRecord,
    cfg: &DecodeConfig,
    method: &ScoringMethod,
    predictor: &RatioPredictor,
) -> Result<DecodeResult> {
    let l_pred = predictor.predict_length(&record.src)?;
    let mut ctx = SentenceContext::new(record.src.clone(), l_pred, cfg.max_len(record.src.len()))?;
    decode(stepper, &mut ctx, cfg, method)
}

/// Decodes every record, on `jobs` worker threads. Output order follows
/// input order for any `jobs`.
pub fn decode_corpus<S: Stepper + ?Sized>(
    stepper: &S,
    records: &[CorpusRecord],
    cfg: &DecodeConfig,
    method: &ScoringMethod,
    predictor: &RatioPredictor,
    jobs: usize,
) -> Result<Vec<DecodeResult>> {
    let run = |rec: &CorpusRecord| decode_record(stepper, rec, cfg, method, predictor);
    if jobs <= 1 {
        return records.iter().map(run).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| records.par_iter().map(run).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub beam: usize,
    pub bleu: f64,
    pub lr: f64,
    pub bp: f64,
    /// Mean |y| of the selected hypotheses, counting `</eos>`.
    pub mean_len: f64,
    pub mean_stop_step: f64,
    /// Mean step of the first finished candidate; NaN if none was found.
    pub mean_first_eos: f64,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.beam,
            self.bleu,
            self.lr,
            self.bp,
            self.mean_len,
            self.mean_stop_step,
            self.mean_first_eos
        )
    }
}

/// Summarizes a decoded corpus as one sweep row.
pub fn summarize(
    label: String,
    beam: usize,
    records: &[CorpusRecord],
    results: &[DecodeResult],
) -> Result<SweepRow> {
    let hyps: Vec<Vec<TokenId>> = results
        .iter()
        .map(|r| r.best.content_tokens().to_vec())
        .collect();
    let refs: Vec<Vec<Vec<TokenId>>> = records.iter().map(|r| r.refs.clone()).collect();
    let stats = bleu(&hyps, &refs)?;
    let n = results.len().max(1) as f64;
    Ok(SweepRow {
        method: label,
        beam,
        bleu: stats.bleu,
        lr: stats.lr,
        bp: stats.bp,
        mean_len: results.iter().map(|r| r.best.len() as f64).sum::<f64>() / n,
        mean_stop_step: results.iter().map(|r| r.steps_run as f64).sum::<f64>() / n,
        mean_first_eos: eos_stats_of(results).means[0].unwrap_or(f64::NAN),
    })
}

/// Decodes the corpus for every (method, beam) pair, methods outermost.
pub fn beam_sweep<S: Stepper + ?Sized>(
    stepper: &S,
    records: &[CorpusRecord],
    methods: &[ScoringMethod],
    beams: &[usize],
    cfg: &DecodeConfig,
    predictor: &RatioPredictor,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if beams.is_empty() {
        return Err(Error::Usage("beam list is empty".into()));
    }
    let mut rows = Vec::with_capacity(methods.len() * beams.len());
    for method in methods {
        for &b in beams {
            let cfg = DecodeConfig {
                beam_size: b,
                ..*cfg
            };
            let results = decode_corpus(stepper, records, &cfg, method, predictor, jobs)?;
            rows.push(summarize(method.label(), b, records, &results)?);
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_corpus;
    use crate::model::{HashModel, HashModelSpec};
    use crate::types::{Stopping, Vocab};

    #[test]
    fn one_row_per_method_and_beam() {
        let model = HashModel::new(HashModelSpec::new(5, Vocab::with_size(30).unwrap())).unwrap();
        let cfg = DecodeConfig::new(1, Stopping::MaxLen);
        let corpus = generate_corpus(&model, 5, 6, (3, 6), &cfg).unwrap();
        let pred = RatioPredictor::Fixed(1.5);
        let rows = beam_sweep(
            &model,
            &corpus,
            &[ScoringMethod::Default],
            &[3],
            &cfg,
            &pred,
            1,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        let rows = beam_sweep(
            &model,
            &corpus,
            &[ScoringMethod::Default, ScoringMethod::BpNorm],
            &[1, 2, 4],
            &cfg,
            &pred,
            2,
        )
        .unwrap();
        assert_eq!(rows.len(), 6);
        // beam 1 reproduces the greedy references
        assert_eq!(rows[0].bleu, 1.0);
        assert_eq!(rows[0].lr, 1.0);
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_HEADER));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn parallel_order_matches_serial() {
        let model = HashModel::new(HashModelSpec::new(8, Vocab::with_size(20).unwrap())).unwrap();
        let cfg = DecodeConfig::new(4, Stopping::MaxLen);
        let corpus = generate_corpus(&model, 8, 12, (2, 8), &cfg).unwrap();
        let pred = RatioPredictor::Fixed(2.0);
        let a = decode_corpus(&model, &corpus, &cfg, &ScoringMethod::LengthNorm, &pred, 1).unwrap();
        let b = decode_corpus(&model, &corpus, &cfg, &ScoringMethod::LengthNorm, &pred, 4).unwrap();
        assert_eq!(a, b);
    }
}
