//! Dense complex linear-algebra helpers shared by the solvers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Thin singular value decomposition `a = u · diag(s) · v*` with `s` sorted in
/// decreasing order; `u` is `n×k` and `v` is `m×k` with `k = min(n, m)`.
/// Columns of `u` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

/// One-sided Jacobi SVD, applied to the triangular factor of a QR
/// factorization when the matrix is not square. Accurate for rank-deficient
/// inputs, which are the common case for sampled kernels.
pub fn svd(a: &CMat) -> Svd {
    let (n, m) = (a.nrows(), a.ncols());
    if n < m {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    if m == 0 {
        return Svd {
            u: CMat::zeros(n, 0),
            s: Vec::new(),
            v: CMat::zeros(0, 0),
        };
    }
    let (q, r) = if n > m {
        let qr = a.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, a.clone())
    };
    let (w, v) = jacobi(r, true);
    let v = v.expect("vectors requested");
    let mut order: Vec<(f64, usize)> = (0..m)
        .map(|j| {
            (
                w.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
                j,
            )
        })
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let s: Vec<f64> = order.iter().map(|x| x.0).collect();
    let mut u = CMat::zeros(m, m);
    let mut vs = CMat::zeros(m, m);
    for (k, &(sk, j)) in order.iter().enumerate() {
        if sk > 0.0 {
            u.set_column(k, &(w.column(j) / C64::new(sk, 0.0)));
        }
        vs.set_column(k, &v.column(j));
    }
    let u = match q {
        Some(q) => q * u,
        None => u,
    };
    Svd { u, s, v: vs }
}

/// Singular values in decreasing order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let (n, m) = (a.nrows(), a.ncols());
    if n < m {
        return singular_values(&a.adjoint());
    }
    if m == 0 {
        return Vec::new();
    }
    let r = if n > m { a.clone().qr().r() } else { a.clone() };
    let (w, _) = jacobi(r, false);
    let mut s: Vec<f64> = (0..m)
        .map(|j| w.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Hestenes rotations on the columns of a square matrix until they are
/// mutually orthogonal. Returns the rotated matrix and, optionally, the
/// accumulated unitary.
fn jacobi(mut w: CMat, want_v: bool) -> (CMat, Option<CMat>) {
    let m = w.ncols();
    let n = w.nrows();
    let mut v = if want_v {
        Some(CMat::identity(m, m))
    } else {
        None
    };
    let rotate = |data: &mut [C64], rows: usize, p: usize, q: usize, c: f64, s: f64, ph: C64| {
        let (lo, hi) = data.split_at_mut(q * rows);
        let cp = &mut lo[p * rows..(p + 1) * rows];
        let cq = &mut hi[..rows];
        for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
            let a = *x;
            let b = ph * *y;
            *x = a * c - b * s;
            *y = a * s + b * c;
        }
    };
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let (alpha, beta, gamma) = {
                    let data = w.as_slice();
                    let cp = &data[p * n..(p + 1) * n];
                    let cq = &data[q * n..(q + 1) * n];
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = ZERO;
                    for (x, y) in cp.iter().zip(cq) {
                        al += x.norm_sqr();
                        be += y.norm_sqr();
                        ga += x.conj() * y;
                    }
                    (al, be, ga)
                };
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(w.as_mut_slice(), n, p, q, c, s, ph);
                if let Some(v) = v.as_mut() {
                    rotate(v.as_mut_slice(), m, p, q, c, s, ph);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

pub fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn row_norms(a: &CMat) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

pub fn max_row_norm(a: &CMat) -> f64 {
    row_norms(a).into_iter().fold(0.0, f64::max)
}

/// Bilinear pairing `Σ M[i][j]·N[i][j]` (no conjugation).
pub fn pairing(m: &CMat, n: &CMat) -> C64 {
    m.iter().zip(n.iter()).map(|(a, b)| a * b).sum()
}

pub fn vec_norm(x: &CVec) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const PADE_THETA: [f64; 5] = [
    1.495_585_217_958_292e-2,
    2.539_398_330_063_230e-1,
    9.504_178_996_162_932e-1,
    2.097_847_961_257_068,
    5.371_920_351_148_152,
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn scale(a: &CMat, s: f64) -> CMat {
    a.map(|z| z * s)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// (degree 3, 5, 7, 9 or 13 chosen from the 1-norm).
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    if n == 1 {
        return CMat::from_element(1, 1, a[(0, 0)].exp());
    }
    let eye = CMat::identity(n, n);
    let norm = one_norm(a);
    for (k, coeffs) in [&B3[..], &B5[..], &B7[..], &B9[..]].iter().enumerate() {
        if norm <= PADE_THETA[k] {
            return pade_low(a, coeffs, &eye);
        }
    }
    let s = if norm > PADE_THETA[4] {
        (norm / PADE_THETA[4]).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scale(a, 0.5_f64.powi(s));
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let u_inner = &a6 * (scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]))
        + scale(&a6, b[7])
        + scale(&a4, b[5])
        + scale(&a2, b[3])
        + scale(&eye, b[1]);
    let u = &a * u_inner;
    let v = &a6 * (scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]))
        + scale(&a6, b[6])
        + scale(&a4, b[4])
        + scale(&a2, b[2])
        + scale(&eye, b[0]);
    let mut r = solve_pade(&u, &v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn pade_low(a: &CMat, b: &[f64], eye: &CMat) -> CMat {
    let a2 = a * a;
    let mut even = scale(eye, b[0]);
    let mut odd = scale(eye, b[1]);
    let mut pow = eye.clone();
    let m = b.len() - 1;
    let mut k = 2;
    while k <= m {
        pow = &pow * &a2;
        even += scale(&pow, b[k]);
        if k + 1 <= m {
            odd += scale(&pow, b[k + 1]);
        }
        k += 2;
    }
    let u = a * odd;
    solve_pade(&u, &even)
}

fn solve_pade(u: &CMat, v: &CMat) -> CMat {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn real(rows: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_row_iterator(rows, cols, v.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn svd_of_rank_deficient_matrices() {
        for n in [1usize, 5, 32, 64] {
            let ones = CMat::from_element(n, n + 3, c(1.0, 0.0));
            let d = svd(&ones);
            let rec = &d.u
                * CMat::from_diagonal(&CVec::from_iterator(n, d.s.iter().map(|&x| c(x, 0.0))))
                * d.v.adjoint();
            assert!(max_abs(&(rec - &ones)) < 1e-12);
            assert!((d.s[0] - ((n * (n + 3)) as f64).sqrt()).abs() < 1e-10);
            assert!(d.s.iter().skip(1).all(|&x| x < 1e-12));
        }
        let a = CMat::from_fn(7, 4, |i, j| c((i * j) as f64 + 1.0, i as f64 - j as f64));
        let d = svd(&a);
        let rec = &d.u
            * CMat::from_diagonal(&CVec::from_iterator(4, d.s.iter().map(|&x| c(x, 0.0))))
            * d.v.adjoint();
        assert!(max_abs(&(rec - &a)) < 1e-12);
        let gram = d.v.adjoint() * &d.v;
        assert!(max_abs(&(gram - CMat::identity(4, 4))) < 1e-13);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let sv = singular_values(&a.adjoint());
        for (x, y) in sv.iter().zip(&d.s) {
            assert!((x - y).abs() < 1e-12 * d.s[0]);
        }
    }

    #[test]
    fn expm_of_jordan_block() {
        let a = real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let e = expm(&a);
        let ex = core::f64::consts::E;
        assert_relative_eq!(e[(0, 0)].re, ex, max_relative = 1e-14);
        assert_relative_eq!(e[(0, 1)].re, ex, max_relative = 1e-14);
        assert!(e[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn expm_of_rotation_generator_across_scales() {
        for &t in &[1e-3, 0.3, 1.0, 7.5, 120.0] {
            let a = real(2, 2, &[0.0, -t, t, 0.0]);
            let e = expm(&a);
            assert!((e[(0, 0)].re - t.cos()).abs() < 1e-12 * (1.0 + t));
            assert!((e[(1, 0)].re - t.sin()).abs() < 1e-12 * (1.0 + t));
        }
    }

    #[test]
    fn expm_matches_diagonal_exponential() {
        let d = [c(0.5, 1.0), c(-2.0, 0.25), c(3.0, -4.0)];
        let a = CMat::from_diagonal(&CVec::from_row_slice(&d));
        let e = expm(&a);
        for (i, z) in d.iter().enumerate() {
            assert!((e[(i, i)] - z.exp()).norm() < 1e-13 * z.exp().norm().max(1.0));
        }
    }
}
