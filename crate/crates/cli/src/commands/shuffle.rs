use std::fs::File;
use std::io::Write;

use anyhow::Context;
use listrank_core::corpus_store::{load_qrels, load_queries, load_run};
use listrank_core::eval_metrics::Metric;
use listrank_core::parallel;
use listrank_core::rerank_engine::{shuffle_harness, RerankOptions, ShuffleOptions};

use crate::args::ShuffleEvalArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(
    args: &ShuffleEvalArgs,
    settings: &Settings,
    command_line: &[String],
) -> anyhow::Result<()> {
    let built = super::build_backend(&args.backend, Some(&args.qrels), settings)?;
    let workers = settings.workers_or(if built.is_http {
        1
    } else {
        parallel::default_workers()
    });

    let corpus = super::load_corpus(&args.corpus, &args.corpus_format)?;
    let queries = load_queries(&args.queries)?;
    let lists = load_run(&args.run, Some(args.topk))?;
    let tasks = super::build_tasks(&corpus, &queries, &lists)?;
    let qrels = load_qrels(&args.qrels)?;
    let metric =
        Metric::parse(&args.metric).with_context(|| format!("unknown metric {:?}", args.metric))?;

    let defaults = ShuffleOptions::default();
    let opts = ShuffleOptions {
        trials: args.trials.unwrap_or(defaults.trials),
        seed: settings.seed,
        confidence: args.confidence.unwrap_or(defaults.confidence),
        eval: settings.eval_options(None, None, workers),
        rerank: RerankOptions {
            window: settings.window(&args.window)?,
            render: settings.render(),
            workers,
        },
    };
    log::info!(
        "shuffling {} queries x {} trials with the {} backend",
        tasks.len(),
        opts.trials,
        built.backend.name()
    );
    let report = shuffle_harness(built.backend.as_ref(), &tasks, &qrels, metric, &opts)?;
    println!("{report}");

    if let Some(path) = &args.out {
        let mut file =
            File::create(path).with_context(|| format!("creating report {}", path.display()))?;
        serde_json::to_writer_pretty(&mut file, &report)?;
        file.write_all(b"\n")?;

        let mut manifest = RunManifest::new(
            "shuffle-eval",
            command_line,
            settings.seed,
            workers,
            serde_json::json!({
                "metric": metric.name(),
                "trials": opts.trials,
                "confidence": opts.confidence,
                "topk": args.topk,
                "window": {
                    "size": opts.rerank.window.window_size,
                    "stride": opts.rerank.window.stride,
                    "passes": opts.rerank.window.passes,
                },
            }),
        );
        manifest.set_backend(built.backend.as_ref());
        manifest.record_input(&args.run)?;
        manifest.record_input(&args.corpus)?;
        manifest.record_input(&args.queries)?;
        manifest.record_input(&args.qrels)?;
        manifest.record_optional_input(args.backend.transcript.as_deref())?;
        manifest.record_optional_input(settings.config_path.as_deref())?;
        manifest.write_beside(path)?;
        log::info!("json report -> {}", path.display());
    }
    Ok(())
}
