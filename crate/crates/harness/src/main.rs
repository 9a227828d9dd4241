use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pairclust::io::write_graph_jsonl;
use pairclust::oracle::generate_planted;
use pairclust_harness::{acceptance, run_experiment, write_rows, ExperimentConfig};

#[derive(Parser)]
#[command(name = "pairclust", version, about = "Query-efficient correlation clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a planted instance as JSONL plus a truth sidecar.
    Generate {
        /// Cluster sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.truth.json`.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Run an experiment config and emit CSV.
    Run {
        config: PathBuf,
        /// Overrides the config's output path; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the labeling-session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Run the acceptance checks.
    Check,
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Generate {
            sizes,
            p,
            seed,
            out,
            sidecar,
        } => {
            let inst = generate_planted(&sizes, p, seed)?;
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_graph_jsonl(&inst.graph, inst.k(), &mut w)?;
            w.flush()?;
            let sidecar = sidecar.unwrap_or_else(|| out.with_extension("truth.json"));
            std::fs::write(&sidecar, serde_json::to_string(&inst.sidecar())?)?;
        }
        Command::Run { config, out } => {
            let config = ExperimentConfig::from_path(&config)?;
            let rows = run_experiment(&config)?;
            match out.or(config.output) {
                Some(path) => write_rows(&rows, File::create(&path).with_context(|| format!("creating {}", path.display()))?)?,
                None => write_rows(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Serve { addr } => {
            tokio::runtime::Runtime::new()?.block_on(pairclust_harness::server::serve(&addr))?;
        }
        Command::Check => {
            let mut all = true;
            for outcome in acceptance::run_all() {
                println!("{outcome}");
                all &= outcome.passed;
            }
            if !all {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
