//! The γ₂ factorization norm and its dual γ₂*.
//!
//! `γ₂(M) = min { maxrow(R) · maxrow(C) : M = R C* }` where `maxrow` is the
//! largest Euclidean row norm. Equivalently
//! `γ₂(M) = max_{p, q} ‖D_p^{1/2} M D_q^{1/2}‖_tr` over pairs of probability
//! vectors, which is the form the primal solver works with. The dual norm
//! `γ₂*(N) = max { |⟨M, N⟩| : γ₂(M) ≤ 1 }` is computed by a primal-dual
//! interior-point method on the elliptope.

mod dual;
mod oracle;
mod primal;

use alloc::vec::Vec;

use crate::linalg::{max_abs, max_row_norm, CMat, CVec};
use crate::{Error, Result};

pub use oracle::{brute_force_gamma2, brute_force_gamma2_with};

pub const DEFAULT_TOL: f64 = 1e-6;

/// Relative reconstruction tolerance: residuals up to `1e-6·(1 + max|M|)`.
pub fn reconstruction_tolerance(m: &CMat) -> f64 {
    1e-6 * (1.0 + max_abs(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma2Options {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Gamma2Options {
    pub fn new(tol: f64) -> Self {
        Gamma2Options {
            tol,
            max_iterations: 300,
        }
    }
}

impl Default for Gamma2Options {
    fn default() -> Self {
        Gamma2Options::new(DEFAULT_TOL)
    }
}

/// Result of a γ₂ or γ₂* solve.
///
/// For [`gamma2_norm`], `value` is an upper bound certified by the factor
/// pair and `dual_value` a lower bound. For [`gamma2_dual`] the roles flip:
/// `value` is attained by `attaining` and `dual_value` is the SDP dual bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamma2Certificate {
    pub value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub row_factor: CMat,
    pub col_factor: CMat,
    pub iterations: usize,
    /// Spectral norm of the part of `M` discarded before the primal solve.
    pub truncation: f64,
    /// For dual solves, the matrix with `γ₂ ≤ 1` whose pairing gives `value`.
    pub attaining: Option<CMat>,
}

impl Gamma2Certificate {
    pub fn rank(&self) -> usize {
        self.row_factor.ncols()
    }

    pub(crate) fn zero(n: usize, m: usize, dual: bool) -> Self {
        Gamma2Certificate {
            value: 0.0,
            dual_value: 0.0,
            gap: 0.0,
            row_factor: CMat::zeros(n, 0),
            col_factor: CMat::zeros(m, 0),
            iterations: 0,
            truncation: 0.0,
            attaining: if dual { Some(CMat::zeros(n, m)) } else { None },
        }
    }
}

fn check_input(m: &CMat, tol: f64) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid(
            "matrix must have at least one row and column",
        ));
    }
    if !crate::linalg::all_finite(m) {
        return Err(Error::NonFinite("matrix entries"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    Ok(())
}

/// γ₂ norm with a certified bracket of width at most `tol`.
pub fn gamma2_norm(m: &CMat, tol: f64) -> Result<Gamma2Certificate> {
    gamma2_norm_with(m, Gamma2Options::new(tol))
}

pub fn gamma2_norm_with(m: &CMat, opts: Gamma2Options) -> Result<Gamma2Certificate> {
    check_input(m, opts.tol)?;
    primal::solve(m, opts)
}

/// Dual norm γ₂* with a bracket of width at most `tol`.
pub fn gamma2_dual(n: &CMat, tol: f64) -> Result<Gamma2Certificate> {
    gamma2_dual_with(n, Gamma2Options::new(tol))
}

pub fn gamma2_dual_with(n: &CMat, opts: Gamma2Options) -> Result<Gamma2Certificate> {
    check_input(n, opts.tol)?;
    dual::solve(n, opts)
}

/// Sampled `α`/`β` witness: `M[i][j] = ⟨alpha[j], beta[i]⟩ = beta[i]* alpha[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorWitness {
    pub dim: usize,
    pub alpha: Vec<CVec>,
    pub beta: Vec<CVec>,
    pub sup_alpha: f64,
    pub sup_beta: f64,
}

impl FactorWitness {
    pub fn sup_product(&self) -> f64 {
        self.sup_alpha * self.sup_beta
    }

    /// Largest entrywise deviation from `m`.
    pub fn residual(&self, m: &CMat) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = if self.dim == 0 {
                    crate::linalg::ZERO
                } else {
                    self.beta[i].dotc(&self.alpha[j])
                };
                worst = worst.max((v - m[(i, j)]).norm());
            }
        }
        worst
    }
}

/// Converts a primal certificate for `m` into witness form, compressing the
/// factors to their numerical rank.
pub fn extract_witness(cert: &Gamma2Certificate, m: &CMat) -> Result<FactorWitness> {
    let (n, k) = (m.nrows(), m.ncols());
    if cert.row_factor.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cert.row_factor.nrows(),
        });
    }
    if cert.col_factor.nrows() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: cert.col_factor.nrows(),
        });
    }
    let (r, c) = compress(&cert.row_factor, &cert.col_factor);
    let dim = r.ncols();
    let alpha: Vec<CVec> = (0..k)
        .map(|j| c.row(j).transpose().map(|z| z.conj()))
        .collect();
    let beta: Vec<CVec> = (0..n)
        .map(|i| r.row(i).transpose().map(|z| z.conj()))
        .collect();
    let witness = FactorWitness {
        dim,
        sup_alpha: max_row_norm(&c),
        sup_beta: max_row_norm(&r),
        alpha,
        beta,
    };
    let residual = witness.residual(m);
    let tolerance = reconstruction_tolerance(m);
    if !(residual <= tolerance) {
        return Err(Error::Reconstruction {
            residual,
            tolerance,
        });
    }
    Ok(witness)
}

/// Rotates `(R, C)` so the block Gram matrix `R*R + C*C` is diagonal and drops
/// directions below `1e-9` of its largest eigenvalue. Row norms can only
/// shrink, and `R C*` changes by the dropped part only.
fn compress(r: &CMat, c: &CMat) -> (CMat, CMat) {
    let k = r.ncols();
    if k == 0 {
        return (r.clone(), c.clone());
    }
    let gram = r.adjoint() * r + c.adjoint() * c;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..k)
        .filter(|&i| eig.eigenvalues[i] > 1e-9 * top)
        .collect();
    let basis = CMat::from_fn(k, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
    (r * &basis, c * &basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn real(rows: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_row_iterator(rows, cols, v.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gamma2_norm(&CMat::zeros(0, 3), 1e-6).is_err());
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(gamma2_norm(&m, 1e-6), Err(Error::NonFinite(_))));
        assert!(gamma2_dual(&CMat::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let z = CMat::zeros(3, 2);
        let cert = gamma2_norm(&z, 1e-6).unwrap();
        assert_eq!(cert.value, 0.0);
        assert_eq!(cert.rank(), 0);
        let w = extract_witness(&cert, &z).unwrap();
        assert_eq!(w.dim, 0);
        assert_eq!(w.sup_product(), 0.0);
    }

    #[test]
    fn hadamard_two_by_two() {
        let m = real(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let cert = gamma2_norm(&m, 1e-6).unwrap();
        assert!((cert.value - 2f64.sqrt()).abs() < 1e-6);
        assert!(cert.gap <= 1e-6);
    }

    #[test]
    fn all_ones_witness_is_rank_one() {
        let m = real(2, 2, &[1.0; 4]);
        let cert = gamma2_norm(&m, 1e-6).unwrap();
        let w = extract_witness(&cert, &m).unwrap();
        assert_eq!(w.dim, 1);
        assert!((w.sup_product() - 1.0).abs() < 1e-6);
        for a in &w.alpha {
            assert!((a.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn exponential_hankel_witness() {
        let a = 0.1_f64;
        let s = [a, a + core::f64::consts::LN_2];
        let m = CMat::from_fn(2, 2, |i, j| c((-(s[i] + s[j])).exp(), 0.0));
        let cert = gamma2_norm(&m, 1e-8).unwrap();
        let w = extract_witness(&cert, &m).unwrap();
        assert!(w.sup_product() <= 1.0);
        assert!(w.residual(&m) < 1e-10);
    }

    #[test]
    fn corrupted_certificate_is_rejected() {
        let m = real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mut cert = gamma2_norm(&m, 1e-6).unwrap();
        cert.row_factor[(0, 0)] += c(0.1, 0.0);
        assert!(matches!(
            extract_witness(&cert, &m),
            Err(Error::Reconstruction { .. })
        ));
    }

    #[test]
    fn dual_examples() {
        let mut e11 = CMat::zeros(3, 3);
        e11[(0, 0)] = c(1.0, 0.0);
        assert!((gamma2_dual(&e11, 1e-8).unwrap().value - 1.0).abs() < 1e-6);
        let id = CMat::identity(2, 2);
        assert!((gamma2_dual(&id, 1e-8).unwrap().value - 2.0).abs() < 1e-6);
        let u = [c(1.0, 0.0), c(-2.0, 1.0)];
        let v = [c(0.5, 0.0), c(0.0, 3.0), c(1.0, 1.0)];
        let uv = CMat::from_fn(2, 3, |i, j| u[i] * v[j].conj());
        let l1 = |x: &[crate::C64]| x.iter().map(|z| z.norm()).sum::<f64>();
        let cert = gamma2_dual(&uv, 1e-8).unwrap();
        assert!((cert.value - l1(&u) * l1(&v)).abs() < 1e-4);
    }
}
