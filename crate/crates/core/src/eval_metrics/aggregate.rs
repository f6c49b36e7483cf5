//! Mean and Student-t confidence interval across repeated trials.

use std::fmt;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("confidence must be in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("values contain a non-finite number")]
    NonFinite,
}

/// Mean ± half-width at the given confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    pub confidence: f64,
}

/// Two-sided t-interval: mean ± t_{(1+c)/2, n-1} · s / √n with s the sample
/// standard deviation. Identical values give a zero half-width.
pub fn aggregate(values: &[f64], confidence: f64) -> Result<Aggregate, AggregateError> {
    let n = values.len();
    if n < 2 {
        return Err(AggregateError::TooFewValues(n));
    }
    if !(0.0..1.0).contains(&confidence) || confidence <= 0.0 {
        return Err(AggregateError::BadConfidence(confidence));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AggregateError::NonFinite);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let stdev = variance.sqrt();
    let df = (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .expect("valid t distribution")
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok(Aggregate {
        mean,
        half_width: t * stdev / (n as f64).sqrt(),
        n,
        confidence,
    })
}

/// Report layout: mean to four decimals, half-width to three, e.g.
/// `0.7378±0.009`.
impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}±{:.3}", self.mean, self.half_width)
    }
}
