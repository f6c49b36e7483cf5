use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use anyhow::Context;
use listrank_core::corpus_store::load_queries;
use listrank_core::distill_gen::{
    build_dataset, filter_malformed, load_teacher_records, write_examples, DistillOptions,
    ResolvedRecord,
};

use crate::args::DistillArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(args: &DistillArgs, settings: &Settings, command_line: &[String]) -> anyhow::Result<()> {
    let corpus = super::load_corpus(&args.corpus, &args.corpus_format)?;
    let queries = load_queries(&args.queries)?;
    let text_by_qid: HashMap<&str, &str> = queries
        .iter()
        .map(|q| (q.qid.as_str(), q.text.as_str()))
        .collect();

    let teacher = File::open(&args.teacher)
        .with_context(|| format!("opening teacher records {}", args.teacher.display()))?;
    let records = load_teacher_records(BufReader::new(teacher))?;
    let total = records.len();
    let (kept, stats) = filter_malformed(records)?;
    let kept_count = kept.len();
    println!("teacher responses ({total}):");
    println!("{stats}");

    let resolved: Vec<ResolvedRecord> = kept
        .into_iter()
        .map(|record| {
            let query_text = text_by_qid
                .get(record.qid.as_str())
                .with_context(|| format!("teacher qid {} is not in the queries file", record.qid))?
                .to_string();
            let texts = record
                .input_order
                .iter()
                .map(|doc| Ok(corpus.text(doc)?))
                .collect::<anyhow::Result<Vec<String>>>()?;
            Ok(ResolvedRecord::new(record, query_text, texts)?)
        })
        .collect::<anyhow::Result<_>>()?;

    let defaults = DistillOptions::default();
    let opts = DistillOptions {
        n_shuffles: args.n_shuffles.unwrap_or(defaults.n_shuffles),
        n_subsets: args.n_subsets.unwrap_or(defaults.n_subsets),
        seed: settings.seed,
        render: settings.render(),
        workers: settings.workers(),
    };
    let examples = build_dataset(resolved, &opts)?;

    let out = File::create(&args.out)
        .with_context(|| format!("creating dataset {}", args.out.display()))?;
    let mut writer = BufWriter::new(out);
    write_examples(&mut writer, &examples)?;
    writer.flush()?;
    println!(
        "kept {} of {} teacher records; wrote {} training examples -> {}",
        kept_count,
        total,
        examples.len(),
        args.out.display()
    );

    let mut manifest = RunManifest::new(
        "distill",
        command_line,
        settings.seed,
        opts.workers,
        serde_json::json!({
            "n_shuffles": opts.n_shuffles,
            "n_subsets": opts.n_subsets,
            "render": {
                "token_budget": opts.render.token_budget,
                "passage_word_cap": opts.render.passage_word_cap,
            },
        }),
    );
    manifest.record_input(&args.teacher)?;
    manifest.record_input(&args.corpus)?;
    manifest.record_input(&args.queries)?;
    manifest.record_optional_input(settings.config_path.as_deref())?;
    manifest.write_beside(&args.out)?;
    Ok(())
}
