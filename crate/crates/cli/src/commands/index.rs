use listrank_core::first_stage::InvertedIndex;

use crate::args::IndexArgs;
use crate::config::Settings;
use crate::manifest::RunManifest;

pub fn run(args: &IndexArgs, settings: &Settings, command_line: &[String]) -> anyhow::Result<()> {
    let corpus = super::load_corpus(&args.corpus, &args.corpus_format)?;
    log::info!("indexing {} documents", corpus.len());
    let index = InvertedIndex::build(&corpus)?;
    index.save(&args.out)?;
    log::info!(
        "wrote index to {} ({} docs, {} terms)",
        args.out.display(),
        index.doc_count(),
        index.term_count()
    );

    let mut manifest = RunManifest::new(
        "index",
        command_line,
        settings.seed,
        1,
        serde_json::json!({ "corpus_format": args.corpus_format }),
    );
    manifest.record_input(&args.corpus)?;
    manifest.record_optional_input(settings.config_path.as_deref())?;
    manifest.write_into_dir(
        &args.out,
        ["meta.json", "docids.txt", "doclens.bin", "postings.bin"]
            .map(String::from)
            .to_vec(),
    )?;
    println!(
        "indexed {} documents ({} terms) -> {}",
        index.doc_count(),
        index.term_count(),
        args.out.display()
    );
    Ok(())
}
