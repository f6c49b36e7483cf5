use std::fs::File;
use std::io::Write;

use anyhow::Context;
use listrank_core::corpus_store::{load_qrels, load_run};
use listrank_core::eval_metrics::{evaluate, Metric, MetricReport};

use crate::args::EvalArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(args: &EvalArgs, settings: &Settings, command_line: &[String]) -> anyhow::Result<()> {
    let lists = load_run(&args.run, None)?;
    let qrels = load_qrels(&args.qrels)?;
    let metrics: Vec<Metric> = args
        .metrics
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            Metric::parse(name).with_context(|| {
                format!("unknown metric {name:?} (expected ndcg_cut_K, map_cut_K, or judged_K)")
            })
        })
        .collect::<anyhow::Result<_>>()?;
    anyhow::ensure!(!metrics.is_empty(), "--metrics named no metrics");

    let workers = settings.workers();
    let opts = settings.eval_options(args.max_grade, args.rel_threshold, workers);
    let reports: Vec<MetricReport> = metrics
        .iter()
        .map(|metric| evaluate(&lists, &qrels, *metric, &opts))
        .collect();

    if let Some(report) = reports.first() {
        if !report.unjudged_queries.is_empty() {
            log::warn!(
                "{} of {} run queries have no qrels rows and are excluded from macro averages",
                report.unjudged_queries.len(),
                lists.len()
            );
        }
    }

    println!(
        "{:<16} {:>10} {:>9} {:>13}",
        "metric", "macro", "queries", "judged_frac"
    );
    for report in &reports {
        println!(
            "{:<16} {:>10.4} {:>9} {:>13.3}",
            report.metric, report.macro_average, report.query_count, report.judged_query_fraction
        );
    }
    if args.per_query {
        println!();
        for report in &reports {
            for (qid, value) in &report.per_query {
                println!("{:<16} {:<16} {:>10.4}", report.metric, qid, value);
            }
        }
    }

    if let Some(path) = &args.json {
        let mut file =
            File::create(path).with_context(|| format!("creating report {}", path.display()))?;
        serde_json::to_writer_pretty(&mut file, &reports)?;
        file.write_all(b"\n")?;

        let mut manifest = RunManifest::new(
            "eval",
            command_line,
            settings.seed,
            workers,
            serde_json::json!({
                "metrics": metrics.iter().map(Metric::name).collect::<Vec<_>>(),
                "max_grade": opts.max_grade,
                "rel_threshold": opts.rel_threshold,
            }),
        );
        manifest.record_input(&args.run)?;
        manifest.record_input(&args.qrels)?;
        manifest.record_optional_input(settings.config_path.as_deref())?;
        manifest.write_beside(path)?;
        log::info!("json report -> {}", path.display());
    }
    Ok(())
}
