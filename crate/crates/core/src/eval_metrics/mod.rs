//! Rank-quality metrics over run files and qrels: nDCG@k, MAP@k, Judged@k,
//! per-run reports, cross-run aggregation with confidence intervals, and
//! per-query diffs.
//!
//! Queries absent from the qrels are never scored: they are listed in the
//! report and excluded from the macro average. Queries that are judged but
//! have no relevant document score 0 and stay in the average, flagged.

mod aggregate;

pub use aggregate::{aggregate, Aggregate, AggregateError};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus_store::{QrelsTable, RankedList};
use crate::parallel;

/// A metric with its rank cutoff, e.g. `ndcg_cut_10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    NdcgCut(usize),
    MapCut(usize),
    Judged(usize),
}

impl Metric {
    /// Parse names like `ndcg_cut_10`, `map_cut_100`, `judged_10`.
    pub fn parse(name: &str) -> Option<Self> {
        let (kind, k) = name.rsplit_once('_')?;
        let k: usize = k.parse().ok()?;
        if k == 0 {
            return None;
        }
        match kind {
            "ndcg_cut" => Some(Self::NdcgCut(k)),
            "map_cut" => Some(Self::MapCut(k)),
            "judged" => Some(Self::Judged(k)),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::NdcgCut(k) => format!("ndcg_cut_{k}"),
            Self::MapCut(k) => format!("map_cut_{k}"),
            Self::Judged(k) => format!("judged_{k}"),
        }
    }
}

/// Knobs that change how grades binarize and bound.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Grades are clamped into `[0, max_grade]` before the nDCG gain.
    pub max_grade: i32,
    /// A doc counts as relevant for MAP when `grade >= rel_threshold`.
    pub rel_threshold: i32,
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            // TREC DL conventions: grades 0-3, binarized at 2.
            max_grade: 3,
            rel_threshold: 2,
            workers: 1,
        }
    }
}

/// Outcome of scoring one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QueryEval {
    Scored {
        value: f64,
        zero_relevant: bool,
    },
    /// Query has no qrels rows at all.
    Unjudged,
}

impl QueryEval {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Scored { value, .. } => Some(*value),
            Self::Unjudged => None,
        }
    }
}

fn gain(grade: i32, max_grade: i32) -> f64 {
    2f64.powi(grade.clamp(0, max_grade)) - 1.0
}

fn discount(rank_from_1: usize) -> f64 {
    ((rank_from_1 + 1) as f64).log2()
}

/// Normalized discounted cumulative gain at cutoff `k`.
///
/// DCG sums `(2^grade - 1) / log2(rank + 1)` over the top `k`, unjudged docs
/// contributing 0. The ideal DCG ranks every judged doc of the query by
/// grade descending, so retrieving nothing relevant scores 0 even when the
/// run found fewer than `k` docs.
pub fn ndcg_at_k(list: &RankedList, qrels: &QrelsTable, k: usize, max_grade: i32) -> QueryEval {
    assert!(k >= 1, "cutoff must be at least 1");
    let Some(judgments) = qrels.judgments(&list.qid) else {
        return QueryEval::Unjudged;
    };
    let mut dcg = 0.0;
    for (i, item) in list.items.iter().take(k).enumerate() {
        let grade = judgments.get(&item.doc_id).copied().unwrap_or(0);
        dcg += gain(grade, max_grade) / discount(i + 1);
    }
    let mut ideal: Vec<i32> = judgments.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g, max_grade) / discount(i + 1))
        .sum();
    if idcg == 0.0 {
        QueryEval::Scored {
            value: 0.0,
            zero_relevant: true,
        }
    } else {
        QueryEval::Scored {
            value: dcg / idcg,
            zero_relevant: false,
        }
    }
}

/// Average precision at cutoff `k` with binary relevance
/// `grade >= rel_threshold`. The denominator is the query's total relevant
/// count, not capped at `k`, matching the usual `map_cut` definition.
pub fn map_at_k(list: &RankedList, qrels: &QrelsTable, k: usize, rel_threshold: i32) -> QueryEval {
    assert!(k >= 1, "cutoff must be at least 1");
    let Some(judgments) = qrels.judgments(&list.qid) else {
        return QueryEval::Unjudged;
    };
    let total_relevant = judgments.values().filter(|&&g| g >= rel_threshold).count();
    if total_relevant == 0 {
        return QueryEval::Scored {
            value: 0.0,
            zero_relevant: true,
        };
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, item) in list.items.iter().take(k).enumerate() {
        let relevant = judgments
            .get(&item.doc_id)
            .is_some_and(|&g| g >= rel_threshold);
        if relevant {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    QueryEval::Scored {
        value: sum / total_relevant as f64,
        zero_relevant: false,
    }
}

/// Fraction of the top `k` (or of the whole list when shorter) carrying any
/// qrels row, at any grade including 0.
pub fn judged_at_k(list: &RankedList, qrels: &QrelsTable, k: usize) -> QueryEval {
    assert!(k >= 1, "cutoff must be at least 1");
    let Some(judgments) = qrels.judgments(&list.qid) else {
        return QueryEval::Unjudged;
    };
    let denom = k.min(list.items.len());
    if denom == 0 {
        return QueryEval::Scored {
            value: 0.0,
            zero_relevant: false,
        };
    }
    let judged = list
        .items
        .iter()
        .take(k)
        .filter(|item| judgments.contains_key(&item.doc_id))
        .count();
    QueryEval::Scored {
        value: judged as f64 / denom as f64,
        zero_relevant: false,
    }
}

/// One metric evaluated over a whole run.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub metric: String,
    /// Scored queries only (judged), qid → value.
    pub per_query: BTreeMap<String, f64>,
    /// Judged queries with no relevant doc; they score 0 and are included.
    pub zero_relevant: Vec<String>,
    /// Queries with no qrels rows; excluded from the macro average.
    pub unjudged_queries: Vec<String>,
    /// Arithmetic mean over `per_query`.
    pub macro_average: f64,
    /// Number of scored queries.
    pub query_count: usize,
    /// Scored queries / run queries.
    pub judged_query_fraction: f64,
}

/// Score every list in the run under one metric.
pub fn evaluate(
    lists: &[RankedList],
    qrels: &QrelsTable,
    metric: Metric,
    opts: &EvalOptions,
) -> MetricReport {
    let evals = parallel::map_limit(lists.iter().collect(), opts.workers, |list| {
        let eval = match metric {
            Metric::NdcgCut(k) => ndcg_at_k(list, qrels, k, opts.max_grade),
            Metric::MapCut(k) => map_at_k(list, qrels, k, opts.rel_threshold),
            Metric::Judged(k) => judged_at_k(list, qrels, k),
        };
        (list.qid.clone(), eval)
    });

    let mut per_query = BTreeMap::new();
    let mut zero_relevant = Vec::new();
    let mut unjudged = Vec::new();
    for (qid, eval) in evals {
        match eval {
            QueryEval::Scored {
                value,
                zero_relevant: zr,
            } => {
                if zr {
                    zero_relevant.push(qid.clone());
                }
                per_query.insert(qid, value);
            }
            QueryEval::Unjudged => unjudged.push(qid),
        }
    }
    let query_count = per_query.len();
    let macro_average = if query_count == 0 {
        0.0
    } else {
        per_query.values().sum::<f64>() / query_count as f64
    };
    let total = query_count + unjudged.len();
    MetricReport {
        metric: metric.name(),
        per_query,
        zero_relevant,
        unjudged_queries: unjudged,
        macro_average,
        query_count,
        judged_query_fraction: if total == 0 {
            0.0
        } else {
            query_count as f64 / total as f64
        },
    }
}

/// Per-query deltas between two reports of the same metric (b minus a),
/// over queries scored in both.
pub fn diff_reports(a: &MetricReport, b: &MetricReport) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (qid, &va) in &a.per_query {
        if let Some(&vb) = b.per_query.get(qid) {
            out.insert(qid.clone(), vb - va);
        }
    }
    out
}
