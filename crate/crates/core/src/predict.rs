//! Generation-ratio predictors producing L_pred(x) = gr·|x|.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub enum RatioPredictor {
    /// A fixed generation ratio.
    Fixed(f64),
    /// A ratio fitted by least squares through the origin.
    LeastSquares(f64),
    /// Known target lengths per source sentence.
    Oracle(HashMap<Vec<TokenId>, f64>),
}

/// Least-squares fit of |y| ≈ gr·|x|: gr = Σ|x||y| / Σ|x|².
pub fn fit_ratio(pairs: &[(usize, usize)]) -> Result<RatioPredictor> {
    if pairs.is_empty() {
        return Err(Error::Contract("cannot fit a ratio on no pairs".into()));
    }
    if pairs.iter().any(|&(x, y)| x == 0 || y == 0) {
        return Err(Error::Contract("lengths must be >= 1".into()));
    }
    let (xy, xx) = pairs.iter().fold((0.0, 0.0), |(xy, xx), &(x, y)| {
        let (x, y) = (x as f64, y as f64);
        (xy + x * y, xx + x * x)
    });
    Ok(RatioPredictor::LeastSquares(xy / xx))
}

impl RatioPredictor {
    pub fn fixed(gr: f64) -> Result<Self> {
        if !(gr > 0.0) || !gr.is_finite() {
            return Err(Error::Contract(format!(
                "generation ratio must be positive, got {gr}"
            )));
        }
        Ok(Self::Fixed(gr))
    }

    /// Builds an oracle from `(source, target length)` entries; the first
    /// entry for a repeated source wins.
    pub fn oracle<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (Vec<TokenId>, f64)>,
    {
        let mut table = HashMap::new();
        for (src, len) in entries {
            table.entry(src).or_insert(len);
        }
        Self::Oracle(table)
    }

    /// The fitted or fixed ratio, if this predictor has one.
    pub fn ratio(&self) -> Option<f64> {
        match self {
            Self::Fixed(gr) | Self::LeastSquares(gr) => Some(*gr),
            Self::Oracle(_) => None,
        }
    }

    pub fn predict_length(&self, source: &[TokenId]) -> Result<f64> {
        if source.is_empty() {
            return Err(Error::Contract("source must be nonempty".into()));
        }
        match self {
            Self::Fixed(gr) | Self::LeastSquares(gr) => Ok(gr * source.len() as f64),
            Self::Oracle(table) => table
                .get(source)
                .copied()
                .ok_or_else(|| Error::Lookup(source.to_vec())),
        }
    }
}
