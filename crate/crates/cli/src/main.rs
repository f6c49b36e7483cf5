use clap::Parser;
use listrank_cli::{args, commands};

fn main() {
    let cli = args::Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let command_line: Vec<String> = std::env::args().collect();
    if let Err(err) = commands::dispatch(cli, &command_line) {
        log::error!("{err:#}");
        std::process::exit(1);
    }
}
