use std::process::ExitCode;

use clap::Parser;
use qwsearch::cli::{run_to_output, ExperimentConfig};

/// Reproducible, CSV-emitting experiments on quantum walk search.
#[derive(Parser, Debug)]
#[command(name = "qwsearch", version)]
struct Cli {
    #[command(flatten)]
    config: ExperimentConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error,Config,{e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run_to_output(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace(['\n', ','], " ");
            eprintln!("error,{},{message}", e.kind());
            ExitCode::FAILURE
        }
    }
}
