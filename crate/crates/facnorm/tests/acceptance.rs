//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use facnorm::catalog::Catalog;
use facnorm::config::{ExperimentConfig, ExperimentKind};
use facnorm::experiments::{compute, Table};
use facnorm_core::gamma2::{brute_force_gamma2, gamma2_dual, gamma2_norm};
use facnorm_core::linalg::pairing;
use facnorm_core::{CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn parse(t: &Table, row: usize, col: &str) -> f64 {
    t.cell(row, col)
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN)
}

fn rows_with<'a>(t: &'a Table, col: &'a str, value: &'a str) -> impl Iterator<Item = usize> + 'a {
    (0..t.rows.len()).filter(move |&i| t.cell(i, col) == Some(value))
}

fn all_ok(t: &Table, rows: impl Iterator<Item = usize>) -> (usize, Vec<String>) {
    let mut n = 0;
    let mut bad = Vec::new();
    for i in rows {
        n += 1;
        if t.cell(i, "status") != Some("ok") {
            bad.push(
                t.rows[i][..3.min(t.rows[i].len())].join("/")
                    + ": "
                    + t.cell(i, "status").unwrap_or(""),
            );
        }
    }
    (n, bad)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn gamma2_sanity() -> Outcome {
    let mut worst_fixed = 0.0_f64;
    for n in [1, 2, 4, 8, 16, 32, 64] {
        for m in [
            CMat::identity(n, n),
            CMat::from_element(n, n, C64::new(1.0, 0.0)),
        ] {
            match gamma2_norm(&m, 1e-7) {
                Ok(c) => worst_fixed = worst_fixed.max((c.value - 1.0).abs()),
                Err(e) => return outcome(false, format!("n = {n}: {e}")),
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_oracle = 0.0_f64;
    for k in 0..24 {
        let d = 2 + k % 2;
        let m = random_matrix(&mut rng, d, d);
        let (c, o) = match (gamma2_norm(&m, 1e-6), brute_force_gamma2(&m)) {
            (Ok(c), Ok(o)) => (c, o),
            (Err(e), _) | (_, Err(e)) => return outcome(false, format!("oracle case {k}: {e}")),
        };
        worst_oracle = worst_oracle.max((c.value - o).abs());
    }
    let mut worst_ratio = 0.0_f64;
    for k in 0..200 {
        let (a, b) = (2 + k % 4, 2 + (k / 4) % 4);
        let m = random_matrix(&mut rng, a, b);
        let n = random_matrix(&mut rng, a, b);
        let (gm, gn) = match (gamma2_norm(&m, 1e-6), gamma2_dual(&n, 1e-6)) {
            (Ok(gm), Ok(gn)) => (gm, gn),
            (Err(e), _) => {
                return outcome(false, format!("pair {k}: gamma2 of {a}x{b} failed: {e}"))
            }
            (_, Err(e)) => return outcome(false, format!("pair {k}: dual of {a}x{b} failed: {e}")),
        };
        worst_ratio = worst_ratio.max(pairing(&m, &n).norm() / (gm.value * gn.value));
    }
    let pass = worst_fixed <= 1e-6 && worst_oracle <= 1e-3 && worst_ratio <= 1.0 + 1e-6;
    outcome(
        pass,
        format!(
            "identity/all-ones dev {worst_fixed:.1e}, oracle dev {worst_oracle:.1e}, max |<M,N>|/(g2 g2*) {worst_ratio:.9}"
        ),
    )
}

fn witness_direction(cat: &Catalog) -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Gamma2Table);
    cfg.gamma2_table.symbols = cat
        .symbols
        .select(&[])
        .unwrap()
        .into_iter()
        .filter(|(_, s)| s.witness().is_some())
        .map(|(id, _)| id.to_string())
        .collect();
    cfg.gamma2_table.sizes = vec![4, 8, 16, 32, 64, 128, 256];
    let t = match compute(&cfg, cat) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for i in 0..t.rows.len() {
        let excess = parse(&t, i, "gamma2") - parse(&t, i, "nu2_bound");
        if !(excess <= 1e-4) {
            bad.push(format!("{}@{}", t.rows[i][0], t.rows[i][1]));
        }
        worst = worst.max(excess);
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} symbols x sizes 4..256, max(gamma2 - nu2 bound) = {worst:.3e}{}",
            cfg.gamma2_table.symbols.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; over: {bad:?}")
            }
        ),
    )
}

fn growth(cat: &Catalog) -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::SymbolGrowth);
    cfg.symbol_growth.ks = vec![1, 2, 3, 4, 5];
    let tol = cfg.tolerances.gamma2;
    let t = match compute(&cfg, cat) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let v: Vec<f64> = (0..t.rows.len()).map(|i| parse(&t, i, "gamma2")).collect();
    let monotone = v.windows(2).all(|w| w[1] >= w[0] - 2.0 * tol);
    let growth = v[4] - v[0];
    let table: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    outcome(
        monotone && growth > 10.0 * tol && t.failures().is_empty(),
        format!(
            "gamma2 over k = 1..5: [{}], growth {growth:.4}",
            table.join(", ")
        ),
    )
}

fn calculus_bound(cat: &Catalog) -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::BoundVerify);
    let t = match compute(&cfg, cat) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let c_a: Vec<f64> = (0..t.rows.len()).map(|i| parse(&t, i, "c_a")).collect();
    let unit = c_a.iter().any(|&c| (c - 1.0).abs() < 1e-9);
    let large = c_a.iter().any(|&c| c > 1.0 + 1e-3);
    let passed = (0..t.rows.len())
        .filter(|&i| t.cell(i, "pass") == Some("true"))
        .count();
    let pass =
        t.rows.len() >= 20 && unit && large && passed == t.rows.len() && t.failures().is_empty();
    outcome(
        pass,
        format!(
            "{passed}/{} reports pass at both levels, C_A range [{:.4}, {:.4}]",
            t.rows.len(),
            c_a.iter().copied().fold(f64::INFINITY, f64::min),
            c_a.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn kernel_factorization(cat: &Catalog) -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::KernelFactor);
    cfg.seed = 20;
    let t = match compute(&cfg, cat) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let worst = (0..t.rows.len())
        .map(|i| parse(&t, i, "gamma2") - parse(&t, i, "bound"))
        .fold(f64::NEG_INFINITY, f64::max);
    let (n, bad) = all_ok(&t, 0..t.rows.len());
    outcome(
        bad.is_empty() && n == 50 * cat.models.len(),
        format!(
            "{n} pairs over {} models, max(gamma2 - C_A^2) = {worst:.3e} {bad:?}",
            cat.models.len()
        ),
    )
}

fn homomorphism(t: &Table) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for check in ["homomorphism", "crude-bound", "shift"] {
        let rows: Vec<usize> = rows_with(t, "check", check).collect();
        let worst = rows
            .iter()
            .map(|&i| parse(t, i, "value"))
            .fold(f64::NEG_INFINITY, f64::max);
        let (n, bad) = all_ok(t, rows.into_iter());
        pass &= bad.is_empty() && n >= 20;
        parts.push(format!("{check} {n} rows max {worst:.2e}"));
        if !bad.is_empty() {
            parts.push(format!("{bad:?}"));
        }
    }
    outcome(pass, parts.join(", "))
}

fn hardy(cat: &Catalog, suite: &Table) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let rows: Vec<usize> = rows_with(suite, "check", "plancherel").collect();
    let worst = rows
        .iter()
        .map(|&i| parse(suite, i, "value"))
        .fold(0.0, f64::max);
    let (n, bad) = all_ok(suite, rows.into_iter());
    pass &= bad.is_empty() && n > 0;
    parts.push(format!("plancherel {n} weights max |r-1| {worst:.1e}"));

    let cfg = ExperimentConfig::new(ExperimentKind::FactorDemo);
    match compute(&cfg, cat) {
        Ok(t) => {
            let worst = |c: &str| {
                (0..t.rows.len())
                    .map(|i| parse(&t, i, c))
                    .fold(0.0, f64::max)
            };
            let (n, bad) = all_ok(&t, 0..t.rows.len());
            pass &= bad.is_empty();
            parts.push(format!(
                "factorization {n} polys residual {:.1e} gap {:.1e}/{:.1e} isometry {:.1e} product {:.1e}",
                worst("residual"),
                worst("norm_gap"),
                worst("line_norm_gap"),
                worst("isometry_gap_p1").max(worst("isometry_gap_p2")),
                worst("product_gap"),
            ));
        }
        Err(e) => {
            pass = false;
            parts.push(e.to_string());
        }
    }

    let mut cfg = ExperimentConfig::new(ExperimentKind::FejerDemo);
    cfg.fejer_demo.ns = vec![1, 2, 4, 8, 16];
    match compute(&cfg, cat) {
        Ok(t) => {
            let (_, bad) = all_ok(&t, 0..t.rows.len());
            let errs: Vec<f64> = (1..t.rows.len())
                .map(|i| parse(&t, i, "approx_error"))
                .collect();
            let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
            let band = (0..t.rows.len()).all(|i| parse(&t, i, "band_max") == 0.0);
            let norms =
                (0..t.rows.len()).all(|i| parse(&t, i, "phi_n_l1") <= parse(&t, i, "bound") + 1e-6);
            pass &= bad.is_empty() && decreasing && band && norms;
            let e: Vec<String> = errs.iter().map(|x| format!("{x:.4}")).collect();
            parts.push(format!(
                "fejer band gap exact {band}, norms within 2|phi|_1 {norms}, errors n=2..16 [{}]",
                e.join(", ")
            ));
        }
        Err(e) => {
            pass = false;
            parts.push(e.to_string());
        }
    }
    outcome(pass, parts.join("; "))
}

fn run_cli(config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_facnorm"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&status.stderr).into_owned())
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("kf.toml");
    std::fs::write(
        &config,
        "experiment = \"kernel-factor\"\nseed = 99\n[kernel-factor]\npairs-per-model = 6\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if let Err(e) = run_cli(&config, &a, 1).and_then(|_| run_cli(&config, &b, 4)) {
        return outcome(false, e);
    }
    let read = |d: &Path| std::fs::read(d.join("kernel-factor.csv")).unwrap_or_default();
    let (x, y) = (read(&a), read(&b));
    let same = !x.is_empty() && x == y;
    outcome(
        same,
        format!(
            "kernel-factor CSV, 1 vs 4 threads: {} bytes, identical {same}",
            x.len()
        ),
    )
}

fn main() {
    let cat = Catalog::builtin();
    let mut all = true;
    let mut report = |k: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let clock = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "{} {k} {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64(),
            o.detail
        );
    };
    let suite = compute(
        &ExperimentConfig::new(ExperimentKind::ConsistencySuite),
        &cat,
    )
    .expect("consistency suite");
    report(1, "gamma2 sanity", &mut gamma2_sanity);
    report(2, "witness direction", &mut || witness_direction(&cat));
    report(3, "t^i growth", &mut || growth(&cat));
    report(4, "calculus bound", &mut || calculus_bound(&cat));
    report(5, "kernel factorization", &mut || {
        kernel_factorization(&cat)
    });
    report(6, "homomorphism and shift", &mut || homomorphism(&suite));
    report(7, "hardy suite", &mut || hardy(&cat, &suite));
    report(8, "determinism", &mut determinism);
    if !all {
        std::process::exit(1);
    }
}
