use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use p53_hopf::config::{preset, AnalysisConfig};
use p53_hopf::report::{emit_outputs, run_analysis};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "p53-hopf", version, about = "Hopf bifurcation analysis of the delayed P53-MDM2 model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    N2,
    N4,
    N163,
    N164,
}

impl Case {
    fn key(self) -> &'static str {
        match self {
            Case::N2 => "n2",
            Case::N4 => "n4",
            Case::N163 => "n163",
            Case::N164 => "n164",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write the report and CSV files.
    Analyze {
        /// Configuration file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweeps, overriding `run.workers`.
        #[arg(long)]
        workers: Option<usize>,
        /// Start from one of the published parameter sets; the config file
        /// is applied on top.
        #[arg(long, value_enum)]
        paper_case: Option<Case>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HOPF_DDE_LOG", "error")).init();
    let Command::Analyze { config, out, workers, paper_case } = Cli::parse().command;

    let base = paper_case.and_then(|c| preset(c.key())).unwrap_or_default();
    let mut cfg = match &config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(EXIT_IO);
                }
            };
            match base.apply(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        }
        None => base,
    };
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    run(&cfg)
}

fn run(cfg: &AnalysisConfig) -> ExitCode {
    let (report, trajectories) = match run_analysis(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match emit_outputs(&report, &trajectories, &cfg.output.dir, cfg.output.every, cfg.output.max_rows) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    if report.has_failures() {
        for run in &report.runs {
            for (stage, msg) in &run.errors {
                eprintln!("error: run {} ({}): {stage}: {msg}", run.index, run.label);
            }
            for (i, eq) in run.equilibria.iter().enumerate() {
                for (stage, msg) in &eq.errors {
                    eprintln!("error: run {} ({}), equilibrium {i}: {stage}: {msg}", run.index, run.label);
                }
            }
        }
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}
