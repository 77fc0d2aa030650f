//! Writing a computed table, its extra files and the JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::experiments::Table;
use crate::RunError;

/// CSV bytes of a table: header line plus one line per row.
pub fn table_csv(t: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.columns)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| RunError::output(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| RunError::output(path, e))
}

/// Writes `<experiment>.csv` and the extra files; returns every path written.
pub fn write_table(t: &Table, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let csv_path = dir.join(format!("{}.csv", t.experiment));
    let bytes = table_csv(t).map_err(|e| RunError::output(&csv_path, e))?;
    write(&csv_path, &bytes)?;
    let mut written = vec![csv_path];
    for f in &t.extra {
        let p = dir.join(&f.path);
        write(&p, &f.contents)?;
        written.push(p);
    }
    Ok(written)
}

pub fn write_sidecar(path: &Path, meta: &Value) -> Result<(), RunError> {
    let bytes = serde_json::to_vec_pretty(meta).map_err(|e| RunError::output(path, e))?;
    write(path, &bytes)
}

/// `{"row": i, "status": …}` entries for the sidecar.
pub fn failures_json(t: &Table) -> Value {
    Value::Array(
        t.failures()
            .into_iter()
            .map(|(i, s)| json!({ "row": i, "status": s }))
            .collect(),
    )
}
