use std::fs::{self, File};
use std::io::{BufWriter, Write};

use anyhow::{bail, Context};
use listrank_core::corpus_store::EmbeddingTable;
use listrank_core::distill_gen::{select_queries_discriminative, select_queries_random};

use crate::args::SelectQueriesArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(
    args: &SelectQueriesArgs,
    settings: &Settings,
    command_line: &[String],
) -> anyhow::Result<()> {
    let raw = fs::read_to_string(&args.pool)
        .with_context(|| format!("reading pool {}", args.pool.display()))?;
    let pool: Vec<String> = raw
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(String::from)
        .collect();

    let selected = match args.mode.as_str() {
        "random" => select_queries_random(&pool, args.count, settings.seed)?,
        "discriminative" => {
            let path = args
                .embeddings
                .as_deref()
                .context("discriminative mode needs --embeddings")?;
            let embeddings = EmbeddingTable::load(path)
                .with_context(|| format!("loading embeddings {}", path.display()))?;
            select_queries_discriminative(&pool, &embeddings, args.count, settings.seed)?
        }
        other => bail!("unknown mode {other:?} (expected random or discriminative)"),
    };

    let out = File::create(&args.out)
        .with_context(|| format!("creating selection {}", args.out.display()))?;
    let mut writer = BufWriter::new(out);
    for qid in &selected {
        writeln!(writer, "{qid}")?;
    }
    writer.flush()?;
    println!(
        "selected {} of {} queries ({} mode) -> {}",
        selected.len(),
        pool.len(),
        args.mode,
        args.out.display()
    );

    let mut manifest = RunManifest::new(
        "select-queries",
        command_line,
        settings.seed,
        1,
        serde_json::json!({ "mode": args.mode, "count": args.count }),
    );
    manifest.record_input(&args.pool)?;
    manifest.record_optional_input(args.embeddings.as_deref())?;
    manifest.record_optional_input(settings.config_path.as_deref())?;
    manifest.write_beside(&args.out)?;
    Ok(())
}
