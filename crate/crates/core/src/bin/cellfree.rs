use std::path::PathBuf;
use std::process::ExitCode;

use cellfree_lsfd::harness::{run_experiment, write_outputs, ExperimentConfig};
use cellfree_lsfd::uplink::CombinerChoice;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cellfree", version, about = "Sparse LSFD sweeps for cell-free massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (λ, γ) sweep and write CSV/JSON results.
    Run {
        /// TOML config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Setup name, or `all`.
        #[arg(long, default_value = "all")]
        setup: String,
        /// `mr`, `lmmse` or `all`.
        #[arg(long, default_value = "all")]
        combiner: String,
        /// Shrink to K = 4, L = 10, N = 2 with 500 blocks.
        #[arg(long)]
        desk_scale: bool,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn main() -> ExitCode {
    let Command::Run { config, seed, out, setup, combiner, desk_scale, workers } = Cli::parse().command;

    let cfg = (|| -> cellfree_lsfd::Result<ExperimentConfig> {
        let mut cfg = match &config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if desk_scale {
            cfg.apply_desk_scale();
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(w) = workers {
            cfg.workers = w;
        }
        if setup != "all" {
            cfg.select_setup(&setup)?;
        }
        if combiner != "all" {
            let choice: CombinerChoice = combiner.parse()?;
            cfg.combiners = vec![choice];
        }
        cfg.validate()?;
        Ok(cfg)
    })();
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = write_outputs(&report, &out) {
        eprintln!("cannot write results to {}: {e}", out.display());
        return ExitCode::FAILURE;
    }
    let failures: Vec<_> = report.cells.iter().filter_map(|c| c.error.as_ref()).collect();
    eprintln!(
        "{} grid points, {} failed; results in {}",
        report.cells.len(),
        failures.len(),
        out.display()
    );
    if let Some(first) = failures.first() {
        eprintln!("first failure: {first}");
        return ExitCode::from(EXIT_SOLVER);
    }
    ExitCode::SUCCESS
}
