//! Command-line surface. Every flag with a config-file counterpart is an
//! `Option` here so resolution can tell "flag given" from "use config or
//! default" (flags win).

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "listrank",
    version,
    about = "Listwise reranking pipeline: index, retrieve, rerank, evaluate, distill",
    propagate_version = true
)]
pub struct Cli {
    /// TOML file supplying defaults for flags (explicit flags win).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed; every randomized step derives its own stream from it.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Concurrent workers (default: logical cores; http backend defaults
    /// to 1 unless this is set).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an inverted index from a corpus file.
    Index(IndexArgs),
    /// Produce a first-stage run: search the index or import a run file.
    Retrieve(RetrieveArgs),
    /// Rerank a run's candidates through a backend, window by window.
    Rerank(RerankArgs),
    /// Score a run against qrels.
    Eval(EvalArgs),
    /// Build a training set from teacher reorderings.
    Distill(DistillArgs),
    /// Pick queries from a pool, uniformly or spread in embedding space.
    SelectQueries(SelectQueriesArgs),
    /// Rerank repeatedly from shuffled candidate orders and report the
    /// metric spread.
    ShuffleEval(ShuffleEvalArgs),
}

#[derive(clap::Args, Debug)]
pub struct IndexArgs {
    /// Corpus file (jsonl: {"id", "contents"} per line; tsv: id<TAB>text).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Corpus file format: jsonl or tsv.
    #[arg(long, value_name = "FMT", default_value = "jsonl")]
    pub corpus_format: String,
    /// Output index directory (created if absent).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct RetrieveArgs {
    /// Index directory built by `index`.
    #[arg(long, value_name = "DIR", conflicts_with = "from_run")]
    pub index: Option<PathBuf>,
    /// Import an existing run file instead of searching.
    #[arg(long, value_name = "FILE")]
    pub from_run: Option<PathBuf>,
    /// Queries tsv: qid<TAB>text.
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    /// Candidates per query.
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub k: usize,
    /// BM25 k1 (term-frequency saturation).
    #[arg(long, value_name = "X")]
    pub k1: Option<f64>,
    /// BM25 b (length normalization).
    #[arg(long, value_name = "X")]
    pub b: Option<f64>,
    /// Run tag written in column six.
    #[arg(long, value_name = "TAG", default_value = "bm25")]
    pub tag: String,
    /// Output run file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct BackendArgs {
    /// Reranking backend: identity, oracle, scripted, or http.
    #[arg(long, value_name = "NAME")]
    pub backend: String,
    /// Transcript JSONL to replay (scripted backend).
    #[arg(long, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
    /// Completion endpoint URL (http backend).
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint (http backend).
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,
}

#[derive(clap::Args, Debug)]
pub struct WindowArgs {
    /// Passages per window.
    #[arg(long, value_name = "W")]
    pub window_size: Option<usize>,
    /// Window step; overlap is window_size - stride.
    #[arg(long, value_name = "S")]
    pub stride: Option<usize>,
    /// Sweeps over the list.
    #[arg(long, value_name = "P")]
    pub passes: Option<usize>,
}

#[derive(clap::Args, Debug)]
pub struct RerankArgs {
    /// First-stage run file with the candidates to rerank.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    /// Corpus file holding the candidate texts.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FMT", default_value = "jsonl")]
    pub corpus_format: String,
    /// Queries tsv: qid<TAB>text.
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Qrels file (oracle backend sorts by these grades).
    #[arg(long, value_name = "FILE")]
    pub qrels: Option<PathBuf>,
    /// Candidates per query taken from the run.
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub topk: usize,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Run tag for the output (default: listrank-<backend>).
    #[arg(long, value_name = "TAG")]
    pub tag: Option<String>,
    /// Record every backend response here (JSONL), replayable later with
    /// --backend scripted.
    #[arg(long, value_name = "FILE")]
    pub save_transcript: Option<PathBuf>,
    /// Output run file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    /// Run file to score.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    /// Qrels file: qid 0 doc_id grade.
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    /// Comma-separated metric names (ndcg_cut_K, map_cut_K, judged_K).
    #[arg(
        long,
        value_name = "LIST",
        default_value = "ndcg_cut_10,map_cut_100,judged_10"
    )]
    pub metrics: String,
    /// Grades clamp into [0, max-grade] for the nDCG gain.
    #[arg(long, value_name = "G")]
    pub max_grade: Option<i32>,
    /// A doc counts as relevant for MAP when grade >= this.
    #[arg(long, value_name = "G")]
    pub rel_threshold: Option<i32>,
    /// Also print one line per query per metric.
    #[arg(long)]
    pub per_query: bool,
    /// Write the full reports as JSON here.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct DistillArgs {
    /// Teacher records JSONL: {qid, input_order, teacher_raw, source_tag}.
    #[arg(long, value_name = "FILE")]
    pub teacher: PathBuf,
    /// Corpus file holding the passage texts.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FMT", default_value = "jsonl")]
    pub corpus_format: String,
    /// Queries tsv: qid<TAB>text.
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    /// Shuffled-order copies per record (the original is always emitted).
    #[arg(long, value_name = "N")]
    pub n_shuffles: Option<usize>,
    /// Random sub-window samples per record.
    #[arg(long, value_name = "N")]
    pub n_subsets: Option<usize>,
    /// Output training-example JSONL.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct SelectQueriesArgs {
    /// Pool file: one qid per line.
    #[arg(long, value_name = "FILE")]
    pub pool: PathBuf,
    /// How many queries to select.
    #[arg(long, value_name = "N")]
    pub count: usize,
    /// Selection mode: random or discriminative.
    #[arg(long, value_name = "MODE", default_value = "random")]
    pub mode: String,
    /// Embedding table (required for discriminative mode).
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Output file: selected qids, one per line, in selection order.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct ShuffleEvalArgs {
    /// First-stage run file with the candidates to rerank.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    /// Corpus file holding the candidate texts.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FMT", default_value = "jsonl")]
    pub corpus_format: String,
    /// Queries tsv: qid<TAB>text.
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    /// Qrels used both for the metric and for the oracle backend.
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub topk: usize,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Metric to track across trials.
    #[arg(long, value_name = "NAME", default_value = "ndcg_cut_10")]
    pub metric: String,
    /// Shuffled trials (at least 2).
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    /// Confidence level for the interval.
    #[arg(long, value_name = "C")]
    pub confidence: Option<f64>,
    /// Write the report as JSON here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
