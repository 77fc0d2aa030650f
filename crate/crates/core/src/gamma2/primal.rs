//! Primal γ₂ solver.
//!
//! Maximizes the concave function `H(p, q) = ‖D_p^{1/2} M_r D_q^{1/2}‖_tr` over
//! the product of simplices with a log barrier, where `M_r` is `M` with
//! negligible singular values removed. Newton steps are taken in multiplicative
//! coordinates `p ← p ∘ (1 + x)`. Every iterate yields an explicit
//! factorization, hence an upper bound, and `H` itself is a lower bound.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{Gamma2Certificate, Gamma2Options};
use crate::linalg::{max_abs, singular_values, svd, CMat};
use crate::{Error, Result};

/// Low-rank data `M_r = L K*` with `L` having orthonormal columns.
pub(super) struct Reduced {
    pub l: CMat,
    pub k: CMat,
}

/// Everything derived from one evaluation of `H` at `(p, q)`.
pub(super) struct Eval {
    pub h: f64,
    pub u: CMat,
    pub v: CMat,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

fn scale_rows(m: &CMat, w: &[f64]) -> CMat {
    let mut out = m.clone();
    for (i, &wi) in w.iter().enumerate() {
        let f = wi.sqrt();
        for z in out.row_mut(i).iter_mut() {
            *z *= f;
        }
    }
    out
}

pub(super) fn evaluate(red: &Reduced, p: &[f64], q: &[f64]) -> Eval {
    let qr1 = scale_rows(&red.l, p).qr();
    let qr2 = scale_rows(&red.k, q).qr();
    let (q1, r1) = (qr1.q(), qr1.r());
    let (q2, r2) = (qr2.q(), qr2.r());
    let core = &r1 * r2.adjoint();
    let d = svd(&core);
    let u = q1 * d.u;
    let v = q2 * d.v;
    let s = d.s;
    let diag = |g: &CMat| -> Vec<f64> {
        (0..g.nrows())
            .map(|i| {
                g.row(i)
                    .iter()
                    .zip(&s)
                    .map(|(z, &sa)| z.norm_sqr() * sa)
                    .sum()
            })
            .collect()
    };
    let a = diag(&u);
    let b = diag(&v);
    Eval {
        h: s.iter().sum(),
        u,
        v,
        s,
        a,
        b,
    }
}

/// Upper bound `sqrt(max a_i/p_i · max b_j/q_j)` from the explicit factorization.
pub(super) fn upper_bound(e: &Eval, p: &[f64], q: &[f64]) -> f64 {
    let ra = e.a.iter().zip(p).fold(0.0_f64, |m, (a, p)| m.max(a / p));
    let rb = e.b.iter().zip(q).fold(0.0_f64, |m, (b, q)| m.max(b / q));
    (ra * rb).sqrt()
}

/// Negative Hessian of `H` in multiplicative coordinates, `½·S Ẑ S` with
/// `S = diag(I, -I)`.
pub(super) fn neg_hessian(e: &Eval) -> DMatrix<f64> {
    let (n, m) = (e.u.nrows(), e.v.nrows());
    let r = e.s.len();
    let total = n + m;
    let mut g = CMat::zeros(total, r);
    g.rows_mut(0, n).copy_from(&e.u);
    g.rows_mut(n, m).copy_from(&e.v);

    let phi = DMatrix::from_fn(r, r, |a, b| {
        let d = e.s[a] + e.s[b];
        if d > 0.0 {
            e.s[a] * e.s[b] / d
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(phi);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |x, &y| x.max(y.abs()));
    let mut z = DMatrix::<f64>::zeros(total, total);
    let gh = g.adjoint();
    for l in 0..r {
        let rho = eig.eigenvalues[l];
        if rho <= 1e-15 * top {
            continue;
        }
        let col = eig.eigenvectors.column(l);
        let mut gl = g.clone();
        for a in 0..r {
            let f = col[a] * rho.sqrt();
            for zz in gl.column_mut(a).iter_mut() {
                *zz *= f;
            }
        }
        let w = gl * &gh;
        for (dst, src) in z.iter_mut().zip(w.iter()) {
            *dst += src.norm_sqr();
        }
    }
    for i in 0..total {
        for j in 0..total {
            let sign = if (i < n) == (j < n) { 0.5 } else { -0.5 };
            z[(i, j)] *= sign;
        }
    }
    z
}

fn reduce(m: &CMat, tol: f64) -> (Reduced, f64) {
    let d = svd(m);
    let s = &d.s;
    let top = s[0];
    let dim = m.nrows().max(m.ncols()) as f64;
    let thresh = (1e-3 * tol).max(4.0 * f64::EPSILON * dim * top);
    let r = s.iter().take_while(|&&x| x > thresh).count().max(1);
    let dropped = if r < s.len() { s[r] } else { 0.0 };
    let (u, v) = (&d.u, &d.v);
    let l = u.columns(0, r).into_owned();
    let mut k = v.columns(0, r).into_owned();
    for a in 0..r {
        for z in k.column_mut(a).iter_mut() {
            *z *= s[a];
        }
    }
    (Reduced { l, k }, dropped)
}

/// Trace norm of `D_p^{1/2} M D_q^{1/2}` on the full matrix.
fn full_lower_bound(m: &CMat, p: &[f64], q: &[f64]) -> f64 {
    let mut w = scale_rows(m, p);
    for (j, &qj) in q.iter().enumerate() {
        let f = qj.sqrt();
        for z in w.column_mut(j).iter_mut() {
            *z *= f;
        }
    }
    singular_values(&w).iter().sum()
}

struct Newton {
    x: Vec<f64>,
    decrement: f64,
}

fn newton_direction(e: &Eval, p: &[f64], q: &[f64], mu: f64) -> Option<Newton> {
    let (n, m) = (p.len(), q.len());
    let total = n + m;
    let mut k = neg_hessian(e);
    for i in 0..total {
        k[(i, i)] += mu;
    }
    let g = DVector::from_fn(total, |i, _| {
        if i < n {
            0.5 * e.a[i] + mu
        } else {
            0.5 * e.b[i - n] + mu
        }
    });
    let mut c = DMatrix::<f64>::zeros(total, 2);
    for i in 0..n {
        c[(i, 0)] = p[i];
    }
    for j in 0..m {
        c[(n + j, 1)] = q[j];
    }
    // Adding ρ·C Cᵀ leaves K unchanged on {Cᵀx = 0} and lifts the near-null
    // scaling direction (p, q) → (λp, q/λ), which C does not annihilate.
    let cn = c.column(0).norm_squared().min(c.column(1).norm_squared());
    let rho = (0..total).fold(0.0_f64, |a, i| a.max(k[(i, i)])) / cn;
    k += &c * c.transpose() * rho;
    let chol = Cholesky::new(k)?;
    let x0 = chol.solve(&g);
    let y = chol.solve(&c);
    let nu = (c.transpose() * &y).lu().solve(&(c.transpose() * &x0))?;
    let x = x0 - y * nu;
    let decrement = g.dot(&x);
    Some(Newton {
        x: x.iter().copied().collect(),
        decrement,
    })
}

fn barrier(e: &Eval, p: &[f64], q: &[f64], mu: f64) -> f64 {
    e.h + mu * (p.iter().map(|v| v.ln()).sum::<f64>() + q.iter().map(|v| v.ln()).sum::<f64>())
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

pub(super) fn solve(m: &CMat, opts: Gamma2Options) -> Result<Gamma2Certificate> {
    let (n, k) = (m.nrows(), m.ncols());
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(Gamma2Certificate::zero(n, k, false));
    }
    let mn = m.map(|z| z / scale);
    let tol = opts.tol / scale;
    let (red, dropped) = reduce(&mn, tol);

    let mut p = vec![1.0 / n as f64; n];
    let mut q = vec![1.0 / k as f64; k];
    let mut e = evaluate(&red, &p, &q);
    let mut mu = e.h / (n + k) as f64;
    let mut upper = upper_bound(&e, &p, &q);
    let mut iterations = 0;

    while upper - e.h > 0.5 * tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                lower: e.h * scale,
                upper: (upper + dropped) * scale,
                iterations,
            });
        }
        iterations += 1;
        let step = match newton_direction(&e, &p, &q, mu) {
            Some(s) => s,
            None => {
                return Err(Error::NotConverged {
                    lower: e.h * scale,
                    upper: (upper + dropped) * scale,
                    iterations,
                })
            }
        };
        // On the central path a_i/p_i ≤ H + 2nμ and b_j/q_j ≤ H + 2mμ, so a
        // larger gap means the iterate is not centered yet. Near a boundary
        // optimum the bound is only reliable once centered.
        let centered = upper - e.h <= 2.0 * (n + k) as f64 * mu;
        if centered || step.decrement < 1e-3 * mu {
            mu *= 0.05;
            continue;
        }
        let worst = step.x.iter().fold(0.0_f64, |w, &x| w.min(x));
        let mut alpha = if worst < 0.0 {
            (0.95 / -worst).min(1.0)
        } else {
            1.0
        };
        let f0 = barrier(&e, &p, &q, mu);
        let mut accepted = None;
        for _ in 0..40 {
            let mut p1: Vec<f64> = p
                .iter()
                .zip(&step.x[..n])
                .map(|(v, x)| v * (1.0 + alpha * x))
                .collect();
            let mut q1: Vec<f64> = q
                .iter()
                .zip(&step.x[n..])
                .map(|(v, x)| v * (1.0 + alpha * x))
                .collect();
            normalize(&mut p1);
            normalize(&mut q1);
            let e1 = evaluate(&red, &p1, &q1);
            if barrier(&e1, &p1, &q1, mu) >= f0 + 0.25 * alpha * step.decrement {
                accepted = Some((p1, q1, e1));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((p1, q1, e1)) => {
                p = p1;
                q = q1;
                e = e1;
            }
            // No ascent is possible at this barrier weight: the iterate is as
            // centered as floating point allows.
            None => mu *= 0.2,
        }
        upper = upper_bound(&e, &p, &q);
    }

    let lower = full_lower_bound(&mn, &p, &q);
    let value = (upper + dropped) * scale;
    let dual_value = lower * scale;
    let (row_factor, col_factor) = factors(&e, &p, &q, scale);
    Ok(Gamma2Certificate {
        value,
        dual_value,
        gap: (value - dual_value).abs(),
        row_factor,
        col_factor,
        iterations,
        truncation: dropped * scale,
        attaining: None,
    })
}

/// `R = D_p^{-1/2} U Σ^{1/2}`, `C = D_q^{-1/2} V Σ^{1/2}`, balanced so their
/// largest row norms agree, and rescaled so `R C* = M_r`.
fn factors(e: &Eval, p: &[f64], q: &[f64], scale: f64) -> (CMat, CMat) {
    let build = |g: &CMat, w: &[f64]| -> CMat {
        CMat::from_fn(g.nrows(), g.ncols(), |i, a| {
            g[(i, a)] * (e.s[a].sqrt() / w[i].sqrt())
        })
    };
    let mut r = build(&e.u, p);
    let mut c = build(&e.v, q);
    let mr = crate::linalg::max_row_norm(&r);
    let mc = crate::linalg::max_row_norm(&c);
    let bal = if mr > 0.0 && mc > 0.0 {
        (mc / mr).sqrt()
    } else {
        1.0
    };
    let sr = bal * scale.sqrt();
    let sc = scale.sqrt() / bal;
    r.iter_mut().for_each(|z| *z *= sr);
    c.iter_mut().for_each(|z| *z *= sc);
    (r, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn sample(n: usize, m: usize, seed: u64) -> CMat {
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMat::from_fn(n, m, |_, _| c(next(), next()))
    }

    fn h_at(red: &Reduced, p0: &[f64], q0: &[f64], x: &[f64]) -> f64 {
        let n = p0.len();
        let p: Vec<f64> = p0.iter().zip(&x[..n]).map(|(v, x)| v * (1.0 + x)).collect();
        let q: Vec<f64> = q0.iter().zip(&x[n..]).map(|(v, x)| v * (1.0 + x)).collect();
        evaluate(red, &p, &q).h
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let m = sample(3, 4, 7);
        let (red, _) = reduce(&m, 1e-9);
        let p = [0.2, 0.5, 0.3];
        let q = [0.1, 0.4, 0.3, 0.2];
        let e = evaluate(&red, &p, &q);
        let kmat = neg_hessian(&e);
        let total = 7;
        let h = 1e-4;
        let unit = |i: usize, s: f64| {
            let mut x = vec![0.0; total];
            x[i] = s;
            x
        };
        for i in 0..total {
            let g = if i < 3 {
                0.5 * e.a[i]
            } else {
                0.5 * e.b[i - 3]
            };
            let fd =
                (h_at(&red, &p, &q, &unit(i, h)) - h_at(&red, &p, &q, &unit(i, -h))) / (2.0 * h);
            assert!((g - fd).abs() < 1e-7, "gradient {i}: {g} vs {fd}");
            for j in 0..total {
                let mut pp = unit(i, h);
                pp[j] += h;
                let mut pm = unit(i, h);
                pm[j] -= h;
                let mut mp = unit(i, -h);
                mp[j] += h;
                let mut mm = unit(i, -h);
                mm[j] -= h;
                let fd =
                    (h_at(&red, &p, &q, &pp) - h_at(&red, &p, &q, &pm) - h_at(&red, &p, &q, &mp)
                        + h_at(&red, &p, &q, &mm))
                        / (4.0 * h * h);
                assert!(
                    (-kmat[(i, j)] - fd).abs() < 1e-5,
                    "hessian ({i},{j}): {} vs {fd}",
                    -kmat[(i, j)]
                );
            }
        }
    }

    #[test]
    fn vertex_optimum_converges() {
        // γ₂ equals the largest entry; the optimal weights sit on a vertex.
        let m = CMat::from_row_slice(
            2,
            3,
            &[
                c(-0.48475322796892284, 0.9623010668491716),
                c(-0.7437674650966133, 0.1417828010842581),
                c(-0.6769030824151692, 0.7403530802360292),
                c(0.2757585905720852, 0.4302139748264362),
                c(0.4804617310128876, 0.0617576016256791),
                c(0.1794658031224685, 0.6544097414073766),
            ],
        );
        let cert = solve(&m, Gamma2Options::new(1e-6)).unwrap();
        assert!((cert.value - m[(0, 0)].norm()).abs() <= 1e-6);
        assert!(cert.iterations < 100);
    }

    #[test]
    fn factors_reconstruct_the_input() {
        let m = sample(5, 3, 11);
        let cert = solve(&m, Gamma2Options::new(1e-8)).unwrap();
        let rec = &cert.row_factor * cert.col_factor.adjoint();
        assert!(crate::linalg::max_abs(&(rec - &m)) < 1e-9);
        assert!(cert.gap <= 1e-8);
        let mr = crate::linalg::max_row_norm(&cert.row_factor);
        assert!(mr * mr <= cert.value + cert.gap);
    }
}
