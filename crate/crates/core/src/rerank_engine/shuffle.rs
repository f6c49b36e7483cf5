//! Input-order sensitivity harness.
//!
//! A listwise reranker sees candidates in some order, and a brittle one
//! scores differently when that order changes. The harness reranks the
//! same queries several times, each trial starting from a fresh seeded
//! shuffle of every candidate list, and reports the spread of the metric's
//! macro average across trials as a confidence interval.

use std::fmt;

use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::corpus_store::{QrelsTable, RankedList};
use crate::eval_metrics::{aggregate, evaluate, Aggregate, AggregateError, EvalOptions, Metric};
use crate::seeds::rng_for_indexed;

use super::{rerank_batch, Backend, RerankError, RerankOptions, RerankTask};

#[derive(Debug, Error)]
pub enum ShuffleError {
    #[error("need at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
}

#[derive(Debug, Clone, Copy)]
pub struct ShuffleOptions {
    pub trials: usize,
    pub seed: u64,
    /// Confidence level for the interval, e.g. 0.95.
    pub confidence: f64,
    pub eval: EvalOptions,
    pub rerank: RerankOptions,
}

impl Default for ShuffleOptions {
    fn default() -> Self {
        Self {
            trials: 5,
            seed: 0,
            confidence: 0.95,
            eval: EvalOptions::default(),
            rerank: RerankOptions::default(),
        }
    }
}

/// Macro-average per trial plus the interval over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShuffleReport {
    pub metric: String,
    pub trials: Vec<f64>,
    pub aggregate: Aggregate,
}

impl fmt::Display for ShuffleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} over {} shuffled trials: {}",
            self.metric,
            self.trials.len(),
            self.aggregate
        )
    }
}

/// The shuffle for (trial, query) depends only on the seed and those two
/// indices, so reports are identical across worker counts and runs.
fn shuffled_tasks(tasks: &[RerankTask], seed: u64, trial: usize) -> Vec<RerankTask> {
    tasks
        .iter()
        .enumerate()
        .map(|(qidx, task)| {
            let stream = ((trial as u64) << 32) | qidx as u64;
            let mut rng = rng_for_indexed(seed, "shuffle-harness", stream);
            let mut shuffled = task.clone();
            shuffled.candidates.shuffle(&mut rng);
            shuffled
        })
        .collect()
}

pub fn shuffle_harness(
    backend: &dyn Backend,
    tasks: &[RerankTask],
    qrels: &QrelsTable,
    metric: Metric,
    opts: &ShuffleOptions,
) -> Result<ShuffleReport, ShuffleError> {
    if opts.trials < 2 {
        return Err(ShuffleError::TooFewTrials(opts.trials));
    }
    let mut trial_means = Vec::with_capacity(opts.trials);
    for trial in 0..opts.trials {
        let reranked = rerank_batch(
            backend,
            shuffled_tasks(tasks, opts.seed, trial),
            &opts.rerank,
        )?;
        let lists: Vec<RankedList> = reranked
            .iter()
            .map(|r| r.to_ranked_list("shuffle"))
            .collect();
        let report = evaluate(&lists, qrels, metric, &opts.eval);
        trial_means.push(report.macro_average);
    }
    let aggregate = aggregate(&trial_means, opts.confidence)?;
    Ok(ShuffleReport {
        metric: metric.name(),
        trials: trial_means,
        aggregate,
    })
}
