use anyhow::{bail, Context};
use listrank_core::corpus_store::{load_queries, load_run, write_run, RankedList};
use listrank_core::first_stage::{Bm25Params, InvertedIndex, RetrievalSource};

use crate::args::RetrieveArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(
    args: &RetrieveArgs,
    settings: &Settings,
    command_line: &[String],
) -> anyhow::Result<()> {
    let defaults = Bm25Params::default();
    let params = Bm25Params {
        k1: args.k1.unwrap_or(defaults.k1),
        b: args.b.unwrap_or(defaults.b),
    };

    let source = match (&args.index, &args.from_run) {
        (Some(dir), None) => RetrievalSource::Bm25 {
            index: InvertedIndex::load(dir)
                .with_context(|| format!("loading index {}", dir.display()))?,
            params,
            tag: args.tag.clone(),
        },
        (None, Some(run)) => RetrievalSource::from_run(load_run(run, None)?),
        _ => bail!("pass exactly one of --index or --from-run"),
    };

    let queries = load_queries(&args.queries)?;
    let lists: Vec<RankedList> = queries
        .iter()
        .map(|query| {
            source
                .retrieve(query, args.k)
                .with_context(|| format!("retrieving for query {}", query.qid))
        })
        .collect::<anyhow::Result<_>>()?;
    write_run(&args.out, &lists)?;
    let rows: usize = lists.iter().map(|l| l.items.len()).sum();
    log::info!(
        "retrieved {} rows for {} queries -> {}",
        rows,
        lists.len(),
        args.out.display()
    );

    let mut manifest = RunManifest::new(
        "retrieve",
        command_line,
        settings.seed,
        1,
        serde_json::json!({
            "k": args.k,
            "k1": params.k1,
            "b": params.b,
            "tag": args.tag,
        }),
    );
    if let Some(dir) = &args.index {
        for file in ["meta.json", "docids.txt", "doclens.bin", "postings.bin"] {
            manifest.record_input(&dir.join(file))?;
        }
    }
    manifest.record_optional_input(args.from_run.as_deref())?;
    manifest.record_input(&args.queries)?;
    manifest.record_optional_input(settings.config_path.as_deref())?;
    manifest.write_beside(&args.out)?;
    println!(
        "retrieved top-{} for {} queries -> {}",
        args.k,
        lists.len(),
        args.out.display()
    );
    Ok(())
}
