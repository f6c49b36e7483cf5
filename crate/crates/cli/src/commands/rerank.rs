use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::Context;
use listrank_core::corpus_store::{load_queries, load_run, write_run, RankedList};
use listrank_core::parallel;
use listrank_core::rerank_engine::{
    rerank_batch, transcript_records, write_transcript, RerankOptions,
};
use listrank_core::response_codec::StatusTally;

use crate::args::RerankArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(args: &RerankArgs, settings: &Settings, command_line: &[String]) -> anyhow::Result<()> {
    let built = super::build_backend(&args.backend, args.qrels.as_deref(), settings)?;
    let workers = settings.workers_or(if built.is_http {
        1
    } else {
        parallel::default_workers()
    });

    let corpus = super::load_corpus(&args.corpus, &args.corpus_format)?;
    let queries = load_queries(&args.queries)?;
    let lists = load_run(&args.run, Some(args.topk))?;
    let tasks = super::build_tasks(&corpus, &queries, &lists)?;

    let opts = RerankOptions {
        window: settings.window(&args.window)?,
        render: settings.render(),
        workers,
    };
    log::info!(
        "reranking {} queries with the {} backend ({} workers, window {}/{}, {} passes)",
        tasks.len(),
        built.backend.name(),
        workers,
        opts.window.window_size,
        opts.window.stride,
        opts.window.passes
    );

    let results = rerank_batch(built.backend.as_ref(), tasks, &opts)?;

    let tag = args
        .tag
        .clone()
        .unwrap_or_else(|| format!("listrank-{}", built.backend.name()));
    let out_lists: Vec<RankedList> = results.iter().map(|r| r.to_ranked_list(&tag)).collect();
    write_run(&args.out, &out_lists)?;

    let tally = StatusTally::new();
    for result in &results {
        result.trace.record_statuses(&tally);
    }
    let stats = tally.snapshot();
    println!(
        "{} responses across {} queries:",
        stats.total(),
        results.len()
    );
    println!("{stats}");

    let snapshot = serde_json::json!({
        "backend": built.backend.name(),
        "topk": args.topk,
        "tag": tag,
        "window": {
            "size": opts.window.window_size,
            "stride": opts.window.stride,
            "passes": opts.window.passes,
        },
        "render": {
            "token_budget": opts.render.token_budget,
            "passage_word_cap": opts.render.passage_word_cap,
        },
    });
    let mut manifest = RunManifest::new("rerank", command_line, settings.seed, workers, snapshot);
    manifest.set_backend(built.backend.as_ref());
    manifest.record_input(&args.run)?;
    manifest.record_input(&args.corpus)?;
    manifest.record_input(&args.queries)?;
    manifest.record_optional_input(args.qrels.as_deref())?;
    manifest.record_optional_input(args.backend.transcript.as_deref())?;
    manifest.record_optional_input(settings.config_path.as_deref())?;

    if let Some(path) = &args.save_transcript {
        let file = File::create(path)
            .with_context(|| format!("creating transcript {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        // Group records by query in task order: bytes stay independent of
        // worker interleaving.
        for result in &results {
            write_transcript(&mut writer, &transcript_records(&result.trace))?;
        }
        writer.flush()?;
        manifest.clone().write_beside(path)?;
        log::info!("transcript -> {}", path.display());
    }
    manifest.write_beside(&args.out)?;
    println!("reranked run -> {}", args.out.display());
    Ok(())
}
