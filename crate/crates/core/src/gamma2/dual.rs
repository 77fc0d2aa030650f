//! Primal-dual interior-point solver for γ₂*.
//!
//! `γ₂*(N) = max ½·Re tr(C X)` over Hermitian `X ⪰ 0` with unit diagonal,
//! where `C = [[0, conj(N)], [Nᵀ, 0]]`. The dual is
//! `min ½·Σ y` subject to `Diag(y) − C ⪰ 0`. Search directions are HKM with a
//! Mehrotra predictor-corrector; `Z = Diag(y) − C` is kept exactly.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{Gamma2Certificate, Gamma2Options};
use crate::linalg::{c, max_abs, CMat, C64};
use crate::{Error, Result};

fn build_cost(n: &CMat) -> CMat {
    let (r, k) = (n.nrows(), n.ncols());
    let mut cmat = CMat::zeros(r + k, r + k);
    for i in 0..r {
        for j in 0..k {
            cmat[(i, r + j)] = n[(i, j)].conj();
            cmat[(r + j, i)] = n[(i, j)];
        }
    }
    cmat
}

fn slack(y: &[f64], cmat: &CMat) -> CMat {
    let mut z = -cmat.clone();
    for (i, &yi) in y.iter().enumerate() {
        z[(i, i)] += c(yi, 0.0);
    }
    z
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Largest `α` with `X + α·D ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol: &Cholesky<C64, nalgebra::Dyn>, d: &CMat) -> f64 {
    let l = chol.l();
    let li = l
        .clone()
        .solve_lower_triangular(&CMat::identity(l.nrows(), l.nrows()))
        .expect("Cholesky factor is nonsingular");
    let w = hermitian_part(&(&li * d * li.adjoint()));
    let lo = SymmetricEigen::new(w)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    if lo < 0.0 {
        -1.0 / lo
    } else {
        f64::INFINITY
    }
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Feasible rescaling `D^{-1/2} X D^{-1/2}` with `D = diag(X)`.
fn rescaled(x: &CMat) -> CMat {
    let d: Vec<f64> = (0..x.nrows())
        .map(|i| x[(i, i)].re.max(f64::MIN_POSITIVE).sqrt())
        .collect();
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / (d[i] * d[j]))
}

pub(super) fn solve(nmat: &CMat, opts: Gamma2Options) -> Result<Gamma2Certificate> {
    let (rows, cols) = (nmat.nrows(), nmat.ncols());
    let scale = max_abs(nmat);
    if scale == 0.0 {
        return Ok(Gamma2Certificate::zero(rows, cols, true));
    }
    let tol = opts.tol / scale;
    let cmat = build_cost(&nmat.map(|z| z / scale));
    let dim = rows + cols;

    let mut x = CMat::identity(dim, dim);
    let mut y: Vec<f64> = (0..dim)
        .map(|i| cmat.row(i).iter().map(|z| z.norm()).sum::<f64>() + 1.0)
        .collect();
    let mut z = slack(&y, &cmat);
    let mut iterations = 0;
    let (mut lower, mut upper);

    loop {
        let xf = rescaled(&x);
        lower = 0.5 * inner(&cmat, &xf);
        upper = 0.5 * y.iter().sum::<f64>();
        if upper - lower <= 0.5 * tol {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                lower: lower * scale,
                upper: upper * scale,
                iterations,
            });
        }
        iterations += 1;

        let not_converged = || Error::NotConverged {
            lower: lower * scale,
            upper: upper * scale,
            iterations,
        };
        let zchol = Cholesky::new(z.clone()).ok_or_else(not_converged)?;
        let xchol = Cholesky::new(x.clone()).ok_or_else(not_converged)?;
        let zinv = hermitian_part(&zchol.inverse());
        let mu = inner(&x, &z) / dim as f64;

        let schur = DMatrix::<f64>::from_fn(dim, dim, |i, j| (zinv[(i, j)] * x[(j, i)]).re);
        let schur = Cholesky::new(schur).ok_or_else(not_converged)?;

        // Direction for target `σμ` and second-order correction `corr` (added
        // to the complementarity right-hand side).
        let direction = |target: f64, corr: Option<&CMat>| -> (Vec<f64>, CMat) {
            let mut r = CMat::identity(dim, dim).map(|v| v * target);
            if let Some(cm) = corr {
                r -= cm;
            }
            let zr = &zinv * r;
            let rhs = DVector::from_fn(dim, |i, _| zr[(i, i)].re - 1.0);
            let dy = schur.solve(&rhs);
            let mut zdx = x.clone();
            for i in 0..dim {
                for z in zdx.row_mut(i).iter_mut() {
                    *z *= dy[i];
                }
            }
            let dx = hermitian_part(&(zr - &x - &zinv * zdx));
            (dy.iter().copied().collect(), dx)
        };

        let (dy_a, dx_a) = direction(0.0, None);
        let dz_of = |dy: &[f64]| {
            CMat::from_fn(
                dim,
                dim,
                |i, j| if i == j { c(dy[i], 0.0) } else { c(0.0, 0.0) },
            )
        };
        let dz_a = dz_of(&dy_a);
        let ap = max_step(&xchol, &dx_a).min(1.0);
        let ad = max_step(&zchol, &dz_a).min(1.0);
        let mu_aff = inner(&(&x + dx_a.map(|v| v * ap)), &(&z + dz_a.map(|v| v * ad))) / dim as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let corr = &dz_a * &dx_a;
        let (dy, dx) = direction(sigma * mu, Some(&corr));
        let dz = dz_of(&dy);
        let ap = (0.95 * max_step(&xchol, &dx)).min(1.0);
        let ad = (0.95 * max_step(&zchol, &dz)).min(1.0);
        x = hermitian_part(&(&x + dx.map(|v| v * ap)));
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        z = slack(&y, &cmat);
    }

    let xf = rescaled(&x);
    let attaining = CMat::from_fn(rows, cols, |i, j| xf[(i, rows + j)]);
    let (row_factor, col_factor) = gram_factors(&xf, rows);
    Ok(Gamma2Certificate {
        value: lower * scale,
        dual_value: upper * scale,
        gap: (upper - lower) * scale,
        row_factor,
        col_factor,
        iterations,
        truncation: 0.0,
        attaining: Some(attaining),
    })
}

/// Splits `X = V V*` (numerical rank at `1e-9` of the top eigenvalue) into the
/// row blocks belonging to the two sides.
fn gram_factors(x: &CMat, rows: usize) -> (CMat, CMat) {
    let dim = x.nrows();
    let eig = SymmetricEigen::new(x.clone());
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
    let keep: Vec<usize> = (0..dim)
        .filter(|&i| eig.eigenvalues[i] > 1e-9 * top)
        .collect();
    let v = CMat::from_fn(dim, keep.len(), |i, j| {
        eig.eigenvectors[(i, keep[j])] * eig.eigenvalues[keep[j]].sqrt()
    });
    (
        v.rows(0, rows).into_owned(),
        v.rows(rows, dim - rows).into_owned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pairing;

    #[test]
    fn attaining_matrix_has_unit_gamma2_and_gives_the_value() {
        let n = CMat::from_fn(3, 4, |i, j| {
            c((i as f64 - j as f64).sin(), (i * j) as f64 * 0.1)
        });
        let cert = solve(&n, Gamma2Options::new(1e-9)).unwrap();
        let m = cert.attaining.clone().unwrap();
        let g = crate::gamma2::gamma2_norm(&m, 1e-9).unwrap();
        assert!(g.value <= 1.0 + 1e-8);
        assert!((pairing(&m, &n).re - cert.value).abs() < 1e-9);
        assert!(cert.value <= cert.dual_value);
    }
}
