//! Brute-force γ₂ oracle for tiny matrices.
//!
//! Shares no code with the interior-point solvers. `M = L K*` is split once
//! through an SVD; every other factorization of the same rank is
//! `(L G, K G^{-*})` for an invertible `G`, so the oracle minimizes
//! `maxrow(L G)² · maxrow(K G^{-*})²` over lower-triangular `G` with a
//! multi-start Nelder–Mead search.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{c, max_abs, max_row_norm, svd, CMat};
use crate::{Error, Result};

const DEFAULT_STARTS: usize = 24;

/// Oracle with the default number of starts.
pub fn brute_force_gamma2(m: &CMat) -> Result<f64> {
    brute_force_gamma2_with(m, DEFAULT_STARTS)
}

pub fn brute_force_gamma2_with(m: &CMat, starts: usize) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 || m.nrows() > 3 || m.ncols() > 3 {
        return Err(Error::invalid("oracle handles matrices up to 3×3"));
    }
    if !crate::linalg::all_finite(m) {
        return Err(Error::NonFinite("matrix entries"));
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let d = svd(&m.map(|z| z / scale));
    let k = d.s.iter().filter(|&&s| s > 1e-12 * d.s[0]).count();
    let l = CMat::from_fn(m.nrows(), k, |i, a| d.u[(i, a)] * d.s[a].sqrt());
    let kk = CMat::from_fn(m.ncols(), k, |j, a| d.v[(j, a)] * d.s[a].sqrt());

    let objective = |theta: &[f64]| -> f64 {
        let g = unpack(theta, k);
        match g.clone().try_inverse() {
            Some(gi) => {
                let a = max_row_norm(&(&l * &g));
                let b = max_row_norm(&(&kk * gi.adjoint()));
                a * a * b * b
            }
            None => f64::INFINITY,
        }
    };

    let mut best = f64::INFINITY;
    for s in 0..starts.max(1) {
        let x0 = start_point(s, k);
        let (mut x, mut f) = nelder_mead(&objective, &x0, 0.3, 4000);
        // Restart from the best point until restarts stop helping.
        for _ in 0..50 {
            let (x1, f1) = nelder_mead(&objective, &x, 0.05, 4000);
            let improved = f - f1 > 1e-14 * f.max(1e-300);
            x = x1;
            f = f.min(f1);
            if !improved {
                break;
            }
        }
        best = best.min(f);
    }
    Ok(best.sqrt() * scale)
}

/// Lower-triangular `G` from `k` real diagonal entries and `k(k−1)/2`
/// complex subdiagonal entries.
fn unpack(theta: &[f64], k: usize) -> CMat {
    let mut g = CMat::zeros(k, k);
    let mut idx = 0;
    for i in 0..k {
        g[(i, i)] = c(theta[idx], 0.0);
        idx += 1;
    }
    for i in 0..k {
        for j in 0..i {
            g[(i, j)] = c(theta[idx], theta[idx + 1]);
            idx += 2;
        }
    }
    g
}

/// Deterministic spread of starting points: the identity, then points from an
/// additive-recurrence (Weyl) sequence.
fn start_point(s: usize, k: usize) -> Vec<f64> {
    let dim = k * k;
    let mut x = vec![0.0; dim];
    for v in x.iter_mut().take(k) {
        *v = 1.0;
    }
    if s == 0 {
        return x;
    }
    for (d, v) in x.iter_mut().enumerate() {
        let alpha = ((d + 2) as f64).sqrt().fract();
        let u = (s as f64 * alpha + 0.5 * alpha).fract();
        if d < k {
            *v = (2.0 * (u - 0.5)).exp2();
        } else {
            *v = 2.0 * (u - 0.5);
        }
    }
    x
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > 1e-8 {
            step * x[i].abs().max(0.1)
        } else {
            step
        };
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (lo, hi) = (values[0], values[n]);
        if hi - lo <= 1e-15 * lo.abs().max(1e-300) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|x| x[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + t * (simplex[n][d] - centroid[d]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    for d in 0..n {
                        simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
                    }
                    values[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    (simplex[best].clone(), values[best])
}
