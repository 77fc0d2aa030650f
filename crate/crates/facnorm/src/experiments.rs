//! The seven experiments. Each one enumerates jobs in config order, computes
//! them in parallel and formats rows sequentially, so the table does not
//! depend on scheduling.
//!
//! Every table ends with `tol` and `status`; `status` is `ok`, `fail` (the
//! row computed but a check did not hold) or `error: …` (a component
//! failed).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use facnorm_core::gamma2::{extract_witness, gamma2_norm, Gamma2Certificate};
use facnorm_core::hankel::{
    make_grid, sample_hankel, sample_semigroup_kernel, GridKind, SampleGrid,
};
use facnorm_core::hardy::{
    conformal_transfer, fejer_weight, l1_approx_error, plancherel_ratio, riesz_factorize_circle,
    sarason_factorize_line, suggested_fft_size, Bump, CircleFunction, CirclePoly, Exponent,
    HardyFunction, FACTOR_RESIDUAL_TOL,
};
use facnorm_core::semigroup::{
    hille_phillips, shift_consistency, verify_calculus_bound, BoundReport, SemigroupModel,
};
use facnorm_core::symbols::{poisson_tilde, PoissonSpec, Symbol, TensorWeight, Weight};
use facnorm_core::{CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::catalog::Catalog;
use crate::config::{ExperimentConfig, ExperimentKind, GridKindSpec, GridSpec};
use crate::matrix_io::{provenance_json, write_matrix_csv};
use crate::ConfigError;

/// Homomorphism, crude-bound and Plancherel threshold.
pub const CALCULUS_CHECK_TOL: f64 = 1e-8;
/// Threshold for `‖Γ(A + εI, b) − Γ(A, e^{−εt} b)‖`.
pub const SHIFT_CHECK_TOL: f64 = 2e-8;
pub const NORM_GAP_TOL: f64 = 1e-6;
pub const ISOMETRY_TOL: f64 = 1e-5;
pub const PRODUCT_TOL: f64 = 1e-10;
/// Slack allowed in `‖φ_n‖₁ ≤ 2‖φ‖₁`.
pub const FEJER_NORM_SLACK: f64 = 1e-6;

/// A file written next to the table, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraFile {
    pub path: PathBuf,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub experiment: ExperimentKind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub extra: Vec<ExtraFile>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// `(row index, status)` for every row whose status is not `ok`.
    pub fn failures(&self) -> Vec<(usize, String)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let s = r.last().expect("rows end with status");
                (s != "ok").then(|| (i, s.clone()))
            })
            .collect()
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&str> {
        self.column(column).map(|c| self.rows[row][c].as_str())
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

fn status(ok: bool) -> String {
    if ok { "ok" } else { "fail" }.into()
}

type JobResult<T> = Result<T, String>;

fn err_str(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Maps jobs in parallel, preserving order. Panics are caught and reported as
/// row errors.
fn par_map<J, R, F>(jobs: &[J], f: F) -> Vec<JobResult<R>>
where
    J: Sync,
    R: Send,
    F: Fn(usize, &J) -> JobResult<R> + Sync + Send,
{
    jobs.par_iter()
        .enumerate()
        .map(|(i, j)| match catch_unwind(AssertUnwindSafe(|| f(i, j))) {
            Ok(r) => r,
            Err(p) => {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "unknown".into());
                Err(format!("panic: {msg}"))
            }
        })
        .collect()
}

/// Identifying cells, then either the values or blanks and an error status.
fn assemble(
    ids: Vec<String>,
    width: usize,
    tol: f64,
    r: &JobResult<(Vec<String>, bool)>,
) -> Vec<String> {
    let mut row = ids;
    match r {
        Ok((vals, ok)) => {
            debug_assert_eq!(vals.len(), width);
            row.extend(vals.iter().cloned());
            row.push(num(tol));
            row.push(status(*ok));
        }
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), width));
            row.push(num(tol));
            row.push(format!("error: {}", e.replace(['\n', '\r'], " ")));
        }
    }
    row
}

fn grid_kind(k: GridKindSpec) -> GridKind {
    match k {
        GridKindSpec::Uniform => GridKind::Uniform,
        GridKindSpec::Geometric => GridKind::Geometric,
    }
}

fn grid(spec: &GridSpec, n: usize) -> JobResult<SampleGrid> {
    make_grid(grid_kind(spec.kind), n, spec.lo, spec.hi).map_err(err_str)
}

fn jsonl(records: &[Value]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        out.extend_from_slice(r.to_string().as_bytes());
        out.push(b'\n');
    }
    out
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Computes the configured experiment. Must run inside the caller's rayon
/// pool to honour `--threads`.
pub fn compute(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    match cfg.experiment {
        ExperimentKind::Gamma2Table => gamma2_table(cfg, cat),
        ExperimentKind::SymbolGrowth => symbol_growth(cfg),
        ExperimentKind::BoundVerify => bound_verify(cfg, cat),
        ExperimentKind::KernelFactor => kernel_factor(cfg, cat),
        ExperimentKind::FactorDemo => factor_demo(cfg, cat),
        ExperimentKind::FejerDemo => fejer_demo(cfg, cat),
        ExperimentKind::ConsistencySuite => consistency_suite(cfg, cat),
    }
}

fn certificate_json(c: &Gamma2Certificate) -> Value {
    json!({
        "value": c.value,
        "dual_value": c.dual_value,
        "gap": c.gap,
        "rank": c.rank(),
        "iterations": c.iterations,
        "truncation": c.truncation,
    })
}

struct Gamma2Row {
    cert: Gamma2Certificate,
    witness_sup: f64,
    witness_residual: f64,
    matrix: Option<(Vec<u8>, Value)>,
}

fn gamma2_table(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    let spec = &cfg.gamma2_table;
    let tol = cfg.tolerances.gamma2;
    let symbols = cat.symbols.select(&spec.symbols)?;
    let jobs: Vec<(&str, &Symbol, usize)> = symbols
        .iter()
        .flat_map(|&(id, s)| spec.sizes.iter().map(move |&n| (id, s, n)))
        .collect();
    let results = par_map(&jobs, |_, &(_, sym, n)| {
        let g = grid(&spec.grid, n)?;
        let k = sample_hankel(sym, &g, &g).map_err(err_str)?;
        let cert = gamma2_norm(&k.entries, tol).map_err(err_str)?;
        let w = extract_witness(&cert, &k.entries).map_err(err_str)?;
        let matrix = if spec.export_matrices {
            let mut buf = Vec::new();
            write_matrix_csv(&k.entries, &mut buf).map_err(err_str)?;
            Some((buf, provenance_json(&k.provenance)))
        } else {
            None
        };
        Ok(Gamma2Row {
            witness_sup: w.sup_product(),
            witness_residual: w.residual(&k.entries),
            cert,
            matrix,
        })
    });

    let columns = vec![
        "symbol",
        "n",
        "grid",
        "lo",
        "hi",
        "gamma2",
        "lower",
        "gap",
        "rank",
        "iterations",
        "witness_sup",
        "witness_residual",
        "nu2_bound",
        "within_bound",
        "tol",
        "status",
    ];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut extra = Vec::new();
    for (&(id, sym, n), r) in jobs.iter().zip(&results) {
        let nu2 = sym.witness().map(|w| w.nu2_bound);
        let formatted = r.as_ref().map_err(Clone::clone).map(|row| {
            let c = &row.cert;
            let within = nu2.map(|b| c.value <= b + tol + 1e-12 * b);
            let vals = vec![
                num(c.value),
                num(c.dual_value),
                num(c.gap),
                c.rank().to_string(),
                c.iterations.to_string(),
                num(row.witness_sup),
                num(row.witness_residual),
                nu2.map(num).unwrap_or_default(),
                within.map(flag).unwrap_or_default(),
            ];
            (vals, c.gap <= tol && within != Some(false))
        });
        let ids = vec![
            id.to_string(),
            n.to_string(),
            format!("{:?}", spec.grid.kind).to_lowercase(),
            num(spec.grid.lo),
            num(spec.grid.hi),
        ];
        rows.push(assemble(ids, 9, tol, &formatted));
        match r {
            Ok(row) => {
                let mut rec = certificate_json(&row.cert);
                rec["symbol"] = json!(id);
                rec["n"] = json!(n);
                rec["tol"] = json!(tol);
                rec["nu2_bound"] = json!(nu2);
                rec["witness"] =
                    json!({ "sup_product": row.witness_sup, "residual": row.witness_residual });
                records.push(rec);
                if let Some((csv, prov)) = &row.matrix {
                    let stem = format!("matrices/{}-n{n}", file_stem(id));
                    extra.push(ExtraFile {
                        path: format!("{stem}.csv").into(),
                        contents: csv.clone(),
                    });
                    let mut meta = prov.clone();
                    meta["tol"] = json!(tol);
                    extra.push(ExtraFile {
                        path: format!("{stem}.json").into(),
                        contents: serde_json::to_vec_pretty(&meta).expect("json"),
                    });
                }
            }
            Err(e) => records.push(json!({ "symbol": id, "n": n, "error": e })),
        }
    }
    extra.insert(
        0,
        ExtraFile {
            path: "certificates.jsonl".into(),
            contents: jsonl(&records),
        },
    );
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra,
    })
}

fn symbol_growth(cfg: &ExperimentConfig) -> Result<Table, ConfigError> {
    let spec = &cfg.symbol_growth;
    let tol = cfg.tolerances.gamma2;
    let sym = Symbol::power_imaginary(format!("t^{{{}i}}", spec.r), spec.r)
        .map_err(|e| ConfigError::Invalid(format!("symbol-growth: {e}")))?;
    let results = par_map(&spec.ks, |_, &k| {
        let n = spec.points_per_k * k as usize + 1;
        let lo = 10f64.powi(-(k as i32));
        let g = make_grid(GridKind::Geometric, n, lo, 1.0 / lo).map_err(err_str)?;
        let m = sample_hankel(&sym, &g, &g).map_err(err_str)?;
        gamma2_norm(&m.entries, tol).map_err(err_str)
    });
    let columns = vec![
        "r", "k", "n", "lo", "hi", "gamma2", "lower", "gap", "increase", "tol", "status",
    ];
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for (&k, r) in spec.ks.iter().zip(&results) {
        let lo = 10f64.powi(-(k as i32));
        let ids = vec![
            num(spec.r),
            k.to_string(),
            (spec.points_per_k * k as usize + 1).to_string(),
            num(lo),
            num(1.0 / lo),
        ];
        let formatted = r.as_ref().map_err(Clone::clone).map(|c| {
            // Nested grids: γ₂ can only grow, up to the two brackets.
            let inc = prev.map(|p| c.value - p);
            let ok = c.gap <= tol && inc.is_none_or(|d| d >= -2.0 * tol);
            (
                vec![
                    num(c.value),
                    num(c.dual_value),
                    num(c.gap),
                    inc.map(num).unwrap_or_default(),
                ],
                ok,
            )
        });
        prev = r.as_ref().ok().map(|c| c.value).or(prev);
        rows.push(assemble(ids, 4, tol, &formatted));
    }
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra: Vec::new(),
    })
}

fn bound_report_json(r: &BoundReport) -> Value {
    json!({
        "model": r.model_id,
        "tensor": r.weight_id,
        "lhs": r.lhs,
        "lhs_error": r.lhs_error,
        "rhs": r.rhs,
        "c_a": r.c_a,
        "slack": r.slack,
        "pass": r.pass,
        "tol": r.tol,
        "levels": r.levels.iter().map(|l| json!({
            "n_s": l.n_s,
            "n_u": l.n_u,
            "gamma2_dual": l.gamma2_dual,
            "gamma2_dual_upper": l.gamma2_dual_upper,
            "rhs": l.rhs,
            "slack": l.slack,
            "pass": l.pass,
        })).collect::<Vec<_>>(),
    })
}

fn bound_verify(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    let spec = &cfg.bound_verify;
    let tol = cfg.tolerances.bound;
    let models = cat.models.select(&spec.models)?;
    let tensors = cat.tensors.select(&spec.tensors)?;
    let jobs: Vec<(&SemigroupModel, &TensorWeight)> = models
        .iter()
        .flat_map(|&(_, m)| tensors.iter().map(move |&(_, t)| (m, t)))
        .collect();
    let n = spec.grid.n.expect("validated");
    let results = par_map(&jobs, |_, &(m, t)| {
        let g = grid(&spec.grid, n)?;
        verify_calculus_bound(m, t, &g, &g, tol).map_err(err_str)
    });
    let columns = vec![
        "model",
        "tensor",
        "dim",
        "c_a",
        "lhs",
        "lhs_error",
        "n_coarse",
        "gamma2_dual_coarse",
        "n_fine",
        "gamma2_dual_fine",
        "rhs",
        "slack",
        "pass",
        "tol",
        "status",
    ];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (&(m, t), r) in jobs.iter().zip(&results) {
        let formatted = r.as_ref().map_err(Clone::clone).map(|rep| {
            let (c, f) = (&rep.levels[0], &rep.levels[rep.levels.len() - 1]);
            let vals = vec![
                num(rep.c_a),
                num(rep.lhs),
                num(rep.lhs_error),
                c.n_s.to_string(),
                num(c.gamma2_dual),
                f.n_s.to_string(),
                num(f.gamma2_dual),
                num(rep.rhs),
                num(rep.slack),
                flag(rep.pass),
            ];
            (vals, rep.pass)
        });
        rows.push(assemble(
            vec![m.id().into(), t.id().into(), m.dim().to_string()],
            10,
            tol,
            &formatted,
        ));
        records.push(match r {
            Ok(rep) => bound_report_json(rep),
            Err(e) => json!({ "model": m.id(), "tensor": t.id(), "error": e }),
        });
    }
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra: vec![ExtraFile {
            path: "bound_reports.jsonl".into(),
            contents: jsonl(&records),
        }],
    })
}

/// Unit vector with i.i.d. complex Gaussian direction.
fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn kernel_factor(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    let spec = &cfg.kernel_factor;
    let tol = cfg.tolerances.bound;
    let models = cat.models.select(&spec.models)?;
    let jobs: Vec<(&SemigroupModel, usize)> = models
        .iter()
        .flat_map(|&(_, m)| (0..spec.pairs_per_model).map(move |k| (m, k)))
        .collect();
    let n = spec.grid.n.expect("validated");
    let seed = cfg.seed;
    let results = par_map(&jobs, |i, &(m, _)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let x = random_unit(&mut rng, m.dim());
        let y = random_unit(&mut rng, m.dim());
        let c_a = m.c_a().map_err(err_str)?;
        let g = grid(&spec.grid, n)?;
        let k = sample_semigroup_kernel(m, &x, &y, &g, &g).map_err(err_str)?;
        let cert = gamma2_norm(&k.entries, cfg.tolerances.gamma2).map_err(err_str)?;
        Ok((c_a, cert))
    });
    let columns = vec![
        "model", "pair", "dim", "c_a", "gamma2", "lower", "bound", "slack", "pass", "tol", "status",
    ];
    let rows = jobs
        .iter()
        .zip(&results)
        .map(|(&(m, k), r)| {
            let formatted = r.as_ref().map_err(Clone::clone).map(|(c_a, cert)| {
                let bound = c_a * c_a;
                let pass = cert.value <= bound + tol;
                let vals = vec![
                    num(*c_a),
                    num(cert.value),
                    num(cert.dual_value),
                    num(bound),
                    num(bound - cert.value),
                    flag(pass),
                ];
                (vals, pass)
            });
            assemble(
                vec![m.id().into(), k.to_string(), m.dim().to_string()],
                6,
                tol,
                &formatted,
            )
        })
        .collect();
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra: Vec::new(),
    })
}

struct FactorRow {
    degree: usize,
    fft_size: usize,
    residual: f64,
    sup_norm: f64,
    h_l1: f64,
    h1_l2: f64,
    h2_l2: f64,
    line_residual: f64,
    line_gap: f64,
    iso: [f64; 2],
    product_gap: f64,
}

impl FactorRow {
    fn ok(&self) -> bool {
        self.residual <= FACTOR_RESIDUAL_TOL * self.sup_norm
            && (self.h1_l2 * self.h2_l2 - self.h_l1).abs() <= NORM_GAP_TOL
            && self.line_residual <= FACTOR_RESIDUAL_TOL * self.sup_norm
            && self.line_gap <= NORM_GAP_TOL
            && self.iso.iter().all(|&g| g <= ISOMETRY_TOL)
            && self.product_gap <= PRODUCT_TOL
    }
}

/// Largest relative deviation of `G₂(g₁)·G₂(g₂)` from `G₁(g₁g₂)` on
/// `[−50, 50]`.
pub fn product_gap(g1: &CircleFunction, g2: &CircleFunction) -> f64 {
    let g = g1.mul(g2);
    (0..=400)
        .map(|k| {
            let t = -50.0 + 0.25 * k as f64;
            let lhs =
                conformal_transfer(g1, Exponent::Two, t) * conformal_transfer(g2, Exponent::Two, t);
            let rhs = conformal_transfer(&g, Exponent::One, t);
            (lhs - rhs).norm() / (1.0 + rhs.norm())
        })
        .fold(0.0, f64::max)
}

fn factor_one(p: &CirclePoly, fft: Option<usize>, samples: usize) -> JobResult<FactorRow> {
    let fft = match fft {
        Some(n) => n,
        None => suggested_fft_size(p).map_err(err_str)?,
    };
    let circle = riesz_factorize_circle(p, fft).map_err(err_str)?;
    let f = CircleFunction::from(p.clone());
    let line = sarason_factorize_line(
        &HardyFunction::Line {
            base: f.clone(),
            p: Exponent::One,
        },
        fft,
        samples,
    )
    .map_err(err_str)?;
    let mut iso = [0.0; 2];
    for (slot, e) in iso.iter_mut().zip([Exponent::One, Exponent::Two]) {
        let c = HardyFunction::Circle(f.clone())
            .norm(e, samples)
            .map_err(err_str)?;
        let l = HardyFunction::Line {
            base: f.clone(),
            p: e,
        }
        .norm(e, samples)
        .map_err(err_str)?;
        *slot = (c.value - l.value).abs();
    }
    Ok(FactorRow {
        degree: p.degree().unwrap_or(0),
        fft_size: fft,
        residual: circle.residual,
        sup_norm: circle.sup_norm,
        h_l1: circle.h_l1.value,
        h1_l2: circle.h1_l2,
        h2_l2: circle.h2_l2,
        line_residual: line.residual,
        line_gap: (line.h1_l2.value * line.h2_l2.value - line.h_l1.value).abs(),
        product_gap: product_gap(&circle.h1, &circle.h2),
        iso,
    })
}

fn factor_demo(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    let spec = &cfg.factor_demo;
    let polys = cat.polynomials.select(&spec.polynomials)?;
    let results = par_map(&polys, |_, &(_, p)| {
        factor_one(p, spec.fft_size, spec.samples)
    });
    let columns = vec![
        "polynomial",
        "degree",
        "fft_size",
        "residual",
        "sup_norm",
        "h_l1",
        "h1_l2",
        "h2_l2",
        "norm_gap",
        "line_residual",
        "line_norm_gap",
        "isometry_gap_p1",
        "isometry_gap_p2",
        "product_gap",
        "tol",
        "status",
    ];
    let rows = polys
        .iter()
        .zip(&results)
        .map(|(&(id, _), r)| {
            let formatted = r.as_ref().map_err(Clone::clone).map(|f| {
                let vals = vec![
                    f.degree.to_string(),
                    f.fft_size.to_string(),
                    num(f.residual),
                    num(f.sup_norm),
                    num(f.h_l1),
                    num(f.h1_l2),
                    num(f.h2_l2),
                    num((f.h1_l2 * f.h2_l2 - f.h_l1).abs()),
                    num(f.line_residual),
                    num(f.line_gap),
                    num(f.iso[0]),
                    num(f.iso[1]),
                    num(f.product_gap),
                ];
                (vals, f.ok())
            });
            assemble(vec![id.to_string()], 13, FACTOR_RESIDUAL_TOL, &formatted)
        })
        .collect();
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra: Vec::new(),
    })
}

struct FejerRow {
    band_max: f64,
    l1: f64,
    l1_error: f64,
    approx: f64,
    approx_error: f64,
}

/// `max |φ̂_n(u)|` over 257 points of `[0, 1/n]` and their negatives.
fn band_max(k: &facnorm_core::hardy::FejerKernel) -> f64 {
    let edge = k.band_gap();
    (0..=256)
        .flat_map(|i| {
            let u = edge * i as f64 / 256.0;
            [k.transform(u).abs(), k.transform(-u).abs()]
        })
        .fold(0.0, f64::max)
}

fn fejer_demo(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    let spec = &cfg.fejer_demo;
    let tol = cfg.tolerances.l1;
    let weights = cat.weights.select(&spec.weights)?;
    let bump = Bump::new(spec.inner, spec.outer)
        .map_err(|e| ConfigError::Invalid(format!("fejer-demo bump: {e}")))?;
    let jobs: Vec<(&str, &Weight, u32)> = weights
        .iter()
        .flat_map(|&(id, w)| spec.ns.iter().map(move |&n| (id, w, n)))
        .collect();
    let base = bump.l1_norm(tol);
    let results = par_map(&jobs, |_, &(_, w, n)| {
        let k = fejer_weight(bump, n).map_err(err_str)?;
        let l1 = k.l1_norm(tol).map_err(err_str)?;
        let approx = l1_approx_error(&k, w, tol).map_err(err_str)?;
        Ok(FejerRow {
            band_max: band_max(&k),
            l1: l1.value,
            l1_error: l1.error,
            approx: approx.value,
            approx_error: approx.error,
        })
    });
    let columns = vec![
        "weight",
        "n",
        "band_max",
        "phi_n_l1",
        "phi_n_l1_error",
        "bound",
        "approx_error",
        "approx_error_err",
        "decreasing",
        "tol",
        "status",
    ];
    let mut rows = Vec::new();
    let mut prev: Option<(&str, u32, f64)> = None;
    for (&(id, _, n), r) in jobs.iter().zip(&results) {
        let formatted = match (&base, r) {
            (Err(e), _) => Err(format!("bump norm: {e}")),
            (_, Err(e)) => Err(e.clone()),
            (Ok(b), Ok(f)) => {
                let bound = 2.0 * b.value;
                // The doubling trend is checked from n = 2 on; φ₁ vanishes.
                let dec = match prev {
                    Some((pid, pn, pv)) if pid == id && pn >= 2 && n > pn => Some(f.approx < pv),
                    _ => None,
                };
                let ok =
                    f.band_max == 0.0 && f.l1 <= bound + FEJER_NORM_SLACK && dec != Some(false);
                let vals = vec![
                    num(f.band_max),
                    num(f.l1),
                    num(f.l1_error),
                    num(bound),
                    num(f.approx),
                    num(f.approx_error),
                    dec.map(flag).unwrap_or_default(),
                ];
                Ok((vals, ok))
            }
        };
        prev = r.as_ref().ok().map(|f| (id, n, f.approx));
        rows.push(assemble(vec![id.into(), n.to_string()], 7, tol, &formatted));
    }
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra: Vec::new(),
    })
}

/// One consistency check: `(value, threshold)`, passing when
/// `value ≤ threshold`.
type Check = (f64, f64);

fn homomorphism_gap(m: &SemigroupModel, t: &TensorWeight, tol: f64) -> JobResult<f64> {
    let mut worst = 0.0_f64;
    for (c, d) in t.pairs() {
        let cd = hille_phillips(m, &c.convolve(d), tol).map_err(err_str)?;
        let gc = hille_phillips(m, c, tol).map_err(err_str)?;
        let gd = hille_phillips(m, d, tol).map_err(err_str)?;
        let diff = cd.operator_value - gc.operator_value * gd.operator_value;
        worst = worst.max(facnorm_core::linalg::spectral_norm(&diff));
    }
    Ok(worst)
}

fn crude_bound_excess(m: &SemigroupModel, b: &Weight, tol: f64) -> JobResult<f64> {
    let c_a = m.c_a().map_err(err_str)?;
    let g = hille_phillips(m, b, tol).map_err(err_str)?;
    let l1 = b.l1_norm();
    Ok(g.operator_norm - c_a * (l1.value + l1.error))
}

/// Largest `|P[b̂](iz) − L_b(z)|` over two points, against the smallest
/// reported error.
fn poisson_gap(b: &Weight) -> JobResult<Check> {
    let mut gap = 0.0_f64;
    let mut thr = f64::INFINITY;
    for z in [C64::new(1.0, 0.0), C64::new(2.0, 1.0)] {
        let p = poisson_tilde(b, z, &PoissonSpec::default()).map_err(err_str)?;
        let l = b.laplace(z).map_err(err_str)?;
        gap = gap.max((p.value - l).norm());
        thr = thr.min(p.error + 1e-12);
    }
    Ok((gap, thr))
}

enum SuiteJob<'a> {
    Pair(&'a SemigroupModel, &'a TensorWeight),
    Weight(&'a str, &'a Weight),
}

fn consistency_suite(cfg: &ExperimentConfig, cat: &Catalog) -> Result<Table, ConfigError> {
    let spec = &cfg.consistency_suite;
    let tol = cfg.tolerances.calculus;
    let models = cat.models.select(&spec.models)?;
    let tensors = cat.tensors.select(&spec.tensors)?;
    let weights = cat.weights.select(&spec.weights)?;
    let mut jobs: Vec<SuiteJob> = models
        .iter()
        .flat_map(|&(_, m)| tensors.iter().map(move |&(_, t)| SuiteJob::Pair(m, t)))
        .collect();
    jobs.extend(weights.iter().map(|&(id, w)| SuiteJob::Weight(id, w)));

    // Each job yields a fixed list of named checks.
    let names = |j: &SuiteJob| -> (&'static [&'static str], String, String) {
        match j {
            SuiteJob::Pair(m, t) => (
                &["homomorphism", "crude-bound", "shift"],
                m.id().into(),
                t.id().into(),
            ),
            SuiteJob::Weight(id, _) => (&["plancherel", "poisson"], String::new(), id.to_string()),
        }
    };
    let results: Vec<JobResult<Vec<JobResult<Check>>>> = par_map(&jobs, |_, j| {
        Ok(match j {
            SuiteJob::Pair(m, t) => {
                let b = t.convolution();
                vec![
                    homomorphism_gap(m, t, tol).map(|v| (v, CALCULUS_CHECK_TOL)),
                    crude_bound_excess(m, &b, tol).map(|v| (v, CALCULUS_CHECK_TOL)),
                    shift_consistency(m, &b, spec.eps, tol)
                        .map(|v| (v, SHIFT_CHECK_TOL))
                        .map_err(err_str),
                ]
            }
            SuiteJob::Weight(_, w) => vec![
                plancherel_ratio(w)
                    .map(|r| ((r.value - 1.0).abs(), CALCULUS_CHECK_TOL))
                    .map_err(err_str),
                poisson_gap(w),
            ],
        })
    });
    let columns = vec![
        "check",
        "model",
        "subject",
        "value",
        "threshold",
        "pass",
        "tol",
        "status",
    ];
    let mut rows = Vec::new();
    for (j, r) in jobs.iter().zip(&results) {
        let (checks, model, subject) = names(j);
        for (k, name) in checks.iter().enumerate() {
            let res = match r {
                Ok(v) => v[k].clone(),
                Err(e) => Err(e.clone()),
            };
            let formatted = res.map(|(v, thr)| (vec![num(v), num(thr), flag(v <= thr)], v <= thr));
            rows.push(assemble(
                vec![name.to_string(), model.clone(), subject.clone()],
                3,
                tol,
                &formatted,
            ));
        }
    }
    Ok(Table {
        experiment: cfg.experiment,
        columns,
        rows,
        extra: Vec::new(),
    })
}
