use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use facnorm::config::ExperimentConfig;
use facnorm::matrix_io::read_matrix_file;
use facnorm::{run, RunError, RunOptions};
use facnorm_core::gamma2::{gamma2_dual, gamma2_norm};

const EXIT_CONFIG: u8 = 2;
const EXIT_ROW_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "facnorm", version, about = "Factorization-norm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML (or JSON) config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the γ₂ (or γ₂* with --dual) certificate of a CSV matrix with
    /// interleaved re,im columns.
    Gamma2 {
        matrix: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        dual: bool,
    },
}

fn run_cmd(
    config: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    match run(
        &cfg,
        &RunOptions {
            out_dir: out,
            threads,
        },
    ) {
        Ok(summary) => {
            let failures = summary.table.failures();
            eprintln!(
                "{}: {} rows, {} failed, {:.2}s on {} threads -> {}",
                cfg.experiment,
                summary.table.rows.len(),
                failures.len(),
                summary.elapsed_seconds,
                summary.threads,
                summary.out_dir.display()
            );
            for (i, s) in &failures {
                eprintln!("  row {i}: {s}");
            }
            if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ROW_FAILURE)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn gamma2_cmd(matrix: PathBuf, tol: f64, dual: bool) -> ExitCode {
    let m = match read_matrix_file(&matrix) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", matrix.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let res = if dual {
        gamma2_dual(&m, tol)
    } else {
        gamma2_norm(&m, tol)
    };
    match res {
        Ok(c) => {
            let out = serde_json::json!({
                "norm": if dual { "gamma2_dual" } else { "gamma2" },
                "rows": m.nrows(),
                "cols": m.ncols(),
                "value": c.value,
                "dual_value": c.dual_value,
                "gap": c.gap,
                "rank": c.rank(),
                "iterations": c.iterations,
                "truncation": c.truncation,
                "tol": tol,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ROW_FAILURE)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => run_cmd(config, out, threads, seed),
        Command::Gamma2 { matrix, tol, dual } => gamma2_cmd(matrix, tol, dual),
    }
}
