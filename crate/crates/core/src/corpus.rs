//! Token-id corpora in JSON Lines form and the synthetic corpus generator.
//!
//! References are stored without `</eos>`. Wherever a reference length is
//! compared to a hypothesis length |y| (which counts `</eos>`), one is added.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::decoder::decode_greedy;
use crate::error::{Error, Result};
use crate::model::{HashModel, SplitMix64};
use crate::predict::{fit_ratio, RatioPredictor};
use crate::types::{DecodeConfig, SentenceContext, TokenId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub src: Vec<TokenId>,
    pub refs: Vec<Vec<TokenId>>,
}

impl CorpusRecord {
    pub fn new(src: Vec<TokenId>, refs: Vec<Vec<TokenId>>) -> Result<Self> {
        let rec = Self { src, refs };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        if self.src.is_empty() {
            return Err(Error::Validation(
                "corpus record has an empty source".into(),
            ));
        }
        if self.refs.is_empty() {
            return Err(Error::Validation("corpus record has no reference".into()));
        }
        Ok(())
    }

    /// First reference length plus one for `</eos>`, in |y| units.
    pub fn target_len(&self) -> usize {
        self.refs[0].len() + 1
    }
}

pub fn read_corpus(reader: impl BufRead) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        rec.validate()
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<std::path::Path>) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn write_corpus(mut writer: impl Write, records: &[CorpusRecord]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut writer, rec).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Generates `n` sentences: source lengths uniform in `len_range`, content
/// tokens uniform over `2..vocab_size`, each reference the greedy output of
/// `model` on its source.
pub fn generate_corpus(
    model: &HashModel,
    seed: u64,
    n: usize,
    len_range: (usize, usize),
    cfg: &DecodeConfig,
) -> Result<Vec<CorpusRecord>> {
    let (lo, hi) = len_range;
    if n == 0 {
        return Err(Error::Usage("corpus size must be >= 1".into()));
    }
    if lo == 0 || lo > hi {
        return Err(Error::Usage(format!("invalid length range {lo}..={hi}")));
    }
    let vocab = model.spec().vocab;
    if vocab.size() < 3 {
        return Err(Error::Usage(
            "vocabulary needs at least one content token".into(),
        ));
    }
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            let len = rng.range(lo as u64, hi as u64) as usize;
            let src: Vec<TokenId> = (0..len)
                .map(|_| rng.range(2, u64::from(vocab.size()) - 1) as TokenId)
                .collect();
            let ctx = SentenceContext::new(src.clone(), 1.0, cfg.max_len(src.len()))?;
            let greedy = decode_greedy(model, &ctx)?;
            CorpusRecord::new(src, vec![greedy.best.content_tokens().to_vec()])
        })
        .collect()
}

/// (|x|, |y|) pairs with |y| counting `</eos>`.
pub fn length_pairs(records: &[CorpusRecord]) -> Vec<(usize, usize)> {
    records
        .iter()
        .map(|r| (r.src.len(), r.target_len()))
        .collect()
}

pub fn fit_on_corpus(records: &[CorpusRecord]) -> Result<RatioPredictor> {
    fit_ratio(&length_pairs(records))
}

pub fn oracle_from_corpus(records: &[CorpusRecord]) -> RatioPredictor {
    RatioPredictor::oracle(
        records
            .iter()
            .map(|r| (r.src.clone(), r.target_len() as f64)),
    )
}
