//! One module per subcommand plus the loading/joining helpers they share.

pub mod distill;
pub mod eval;
pub mod index;
pub mod rerank;
pub mod retrieve;
pub mod select;
pub mod shuffle;

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context};
use listrank_core::corpus_store::{load_qrels, Corpus, CorpusFormat, Query, RankedList};
use listrank_core::rerank_engine::{
    load_transcript, Backend, HttpBackend, IdentityBackend, OracleBackend, RerankTask,
    ScriptedBackend,
};

use crate::args::{BackendArgs, Cli, Command};
use crate::config::Settings;

pub fn dispatch(cli: Cli, command_line: &[String]) -> anyhow::Result<()> {
    let settings = Settings::resolve(cli.config, cli.seed, cli.workers)?;
    match cli.command {
        Command::Index(args) => index::run(&args, &settings, command_line),
        Command::Retrieve(args) => retrieve::run(&args, &settings, command_line),
        Command::Rerank(args) => rerank::run(&args, &settings, command_line),
        Command::Eval(args) => eval::run(&args, &settings, command_line),
        Command::Distill(args) => distill::run(&args, &settings, command_line),
        Command::SelectQueries(args) => select::run(&args, &settings, command_line),
        Command::ShuffleEval(args) => shuffle::run(&args, &settings, command_line),
    }
}

pub(crate) fn parse_corpus_format(name: &str) -> anyhow::Result<CorpusFormat> {
    CorpusFormat::from_name(name)
        .with_context(|| format!("unknown corpus format {name:?} (expected jsonl or tsv)"))
}

pub(crate) fn load_corpus(path: &Path, format: &str) -> anyhow::Result<Corpus> {
    let format = parse_corpus_format(format)?;
    Corpus::load(path, format).with_context(|| format!("loading corpus {}", path.display()))
}

/// Join a run's candidates with query and passage texts. Task order follows
/// the run's (qid-sorted) order, so downstream output is deterministic.
pub(crate) fn build_tasks(
    corpus: &Corpus,
    queries: &[Query],
    lists: &[RankedList],
) -> anyhow::Result<Vec<RerankTask>> {
    let coverage = corpus.check_run_coverage(lists.iter());
    if !coverage.all_present() {
        let sample: Vec<&str> = coverage
            .missing
            .keys()
            .take(5)
            .map(String::as_str)
            .collect();
        bail!(
            "run references {} doc ids absent from the corpus (e.g. {})",
            coverage.missing.len(),
            sample.join(", ")
        );
    }
    let text_by_qid: HashMap<&str, &str> = queries
        .iter()
        .map(|q| (q.qid.as_str(), q.text.as_str()))
        .collect();
    lists
        .iter()
        .map(|list| {
            let query_text = text_by_qid
                .get(list.qid.as_str())
                .copied()
                .with_context(|| format!("run query {} is not in the queries file", list.qid))?;
            let candidates = list
                .items
                .iter()
                .map(|item| Ok((item.doc_id.clone(), corpus.text(&item.doc_id)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            Ok(RerankTask {
                qid: list.qid.clone(),
                query_text: query_text.to_string(),
                candidates,
            })
        })
        .collect()
}

pub(crate) struct BuiltBackend {
    pub backend: Box<dyn Backend>,
    /// Http backends default to one worker (remote rate limits) unless the
    /// user raises it explicitly.
    pub is_http: bool,
}

pub(crate) fn build_backend(
    args: &BackendArgs,
    qrels: Option<&Path>,
    settings: &Settings,
) -> anyhow::Result<BuiltBackend> {
    let (backend, is_http): (Box<dyn Backend>, bool) = match args.backend.as_str() {
        "identity" => (Box::new(IdentityBackend), false),
        "oracle" => {
            let path = qrels.context("oracle backend needs --qrels")?;
            let table =
                load_qrels(path).with_context(|| format!("loading qrels {}", path.display()))?;
            (Box::new(OracleBackend::new(table)), false)
        }
        "scripted" => {
            let path = args
                .transcript
                .as_deref()
                .context("scripted backend needs --transcript")?;
            let file = File::open(path)
                .with_context(|| format!("opening transcript {}", path.display()))?;
            let records = load_transcript(BufReader::new(file))
                .with_context(|| format!("parsing transcript {}", path.display()))?;
            (Box::new(ScriptedBackend::new(records)), false)
        }
        "http" => {
            let config = settings.http_config(args.endpoint.clone(), args.model.clone())?;
            (Box::new(HttpBackend::new(config)?), true)
        }
        other => bail!("unknown backend {other:?} (expected identity, oracle, scripted, or http)"),
    };
    Ok(BuiltBackend { backend, is_http })
}
