//! One configured run: catalog, computation in a sized thread pool, output.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use crate::catalog::Catalog;
use crate::config::ExperimentConfig;
use crate::experiments::{compute, Table};
use crate::output::{failures_json, write_sidecar, write_table};
use crate::RunError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Falls back to the config's `output.dir`, then `out`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub table: Table,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub threads: usize,
    pub elapsed_seconds: f64,
}

impl RunSummary {
    pub fn row_failures(&self) -> usize {
        self.table.failures().len()
    }
}

/// Computes the table without writing anything.
pub fn compute_table(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<(Table, usize), RunError> {
    cfg.validate()?;
    let catalog = Catalog::from_config(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::ThreadPool(e.to_string()))?;
    let table = pool.install(|| compute(cfg, &catalog))?;
    Ok((table, pool.current_num_threads()))
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let (table, threads) = compute_table(cfg, opts.threads)?;
    let elapsed_seconds = clock.elapsed().as_secs_f64();
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut files = write_table(&table, &out_dir)?;
    let sidecar = out_dir.join(format!("{}.json", cfg.experiment));
    let meta = json!({
        "experiment": cfg.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "threads": threads,
        "started_unix": started,
        "elapsed_seconds": elapsed_seconds,
        "tolerances": cfg.tolerances,
        "columns": table.columns,
        "rows": table.rows.len(),
        "failures": failures_json(&table),
        "files": files
            .iter()
            .map(|p| p.strip_prefix(&out_dir).unwrap_or(p).display().to_string())
            .collect::<Vec<_>>(),
        "config": cfg,
    });
    write_sidecar(&sidecar, &meta)?;
    files.push(sidecar);
    Ok(RunSummary {
        table,
        out_dir,
        files,
        threads,
        elapsed_seconds,
    })
}
