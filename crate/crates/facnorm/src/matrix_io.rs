//! Complex matrices as CSV with interleaved `re,im` columns, plus the JSON
//! provenance sidecar written next to exported kernel samples.

use std::io::{Read, Write};
use std::path::Path;

use facnorm_core::hankel::{Provenance, SampleGrid};
use facnorm_core::{CMat, C64};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum MatrixIoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

/// Row `i` holds `re(M[i][0]), im(M[i][0]), re(M[i][1]), …`.
pub fn write_matrix_csv<W: Write>(m: &CMat, out: W) -> Result<(), MatrixIoError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()])
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<CMat, MatrixIoError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let fmt = |message: String| MatrixIoError::Format {
            row: i + 1,
            message,
        };
        if rec.len() % 2 != 0 {
            return Err(fmt(format!("{} fields; expected re,im pairs", rec.len())));
        }
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| fmt(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(fmt(format!("non-finite entry {v}")));
        }
        let row: Vec<C64> = vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(fmt(format!(
                    "{} entries; expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(MatrixIoError::Format {
            row: 0,
            message: "empty matrix".into(),
        });
    }
    let (n, k) = (rows.len(), rows[0].len());
    Ok(CMat::from_fn(n, k, |i, j| rows[i][j]))
}

pub fn write_matrix_file(m: &CMat, path: &Path) -> Result<(), MatrixIoError> {
    write_matrix_csv(m, std::fs::File::create(path)?)
}

pub fn read_matrix_file(path: &Path) -> Result<CMat, MatrixIoError> {
    read_matrix_csv(std::fs::File::open(path)?)
}

fn grid_json(g: &SampleGrid) -> Value {
    json!({
        "kind": format!("{:?}", g.kind()).to_lowercase(),
        "bounds": [g.bounds().0, g.bounds().1],
        "points": g.points(),
        "weights": g.weights(),
    })
}

fn cvec_json(v: &facnorm_core::CVec) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

pub fn provenance_json(p: &Provenance) -> Value {
    let (gs, gt) = p.grids();
    let mut v = json!({
        "source": p.label(),
        "id": p.source_id(),
        "grid_rows": grid_json(gs),
        "grid_cols": grid_json(gt),
    });
    if let Provenance::Semigroup { x, y, .. } = p {
        v["x"] = cvec_json(x);
        v["y"] = cvec_json(y);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = CMat::from_fn(3, 2, |i, j| {
            C64::new(0.1 * i as f64 - 1.0 / 3.0, (j as f64).exp() * 1e-17)
        });
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_matrix_csv("1,0,2\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,0,2,0\n1,0\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,x\n".as_bytes()).is_err());
        assert!(read_matrix_csv("".as_bytes()).is_err());
        let m = read_matrix_csv("# header\n 1, 0 ,0,1\n2,0,3,-1\n".as_bytes()).unwrap();
        assert_eq!(m[(1, 1)], C64::new(3.0, -1.0));
    }
}
