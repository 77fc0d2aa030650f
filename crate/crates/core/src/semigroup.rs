//! Matrix semigroups `T_t = e^{-tA}`, their uniform bound `C_A`, the
//! Hille–Phillips calculus `Γ(A, b) = ∫_0^∞ b(t) T_t dt`, and the check of
//! `‖Γ(A, c∗d)‖ ≤ C_A² γ₂*(Ψ)` on sampled grids.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::Schur;

use crate::gamma2::{gamma2_dual, Gamma2Certificate};
use crate::hankel::{weighted_tensor_matrix, SampleGrid};
use crate::linalg::{all_finite, expm, spectral_norm, svd, CMat, C64};
use crate::quad::{self, QuadOptions};
use crate::symbols::{TensorWeight, Weight};
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 2000;

/// Eigenvalues with `|Re λ| ≤ IMAG_TOL·max(1, ‖A‖)` count as imaginary.
const IMAG_TOL: f64 = 1e-10;
/// Tolerance for grouping imaginary eigenvalues and for the null-space rank test.
const CLUSTER_TOL: f64 = 1e-8;
/// Spectral projectors with larger norm are treated as numerically defective.
const MAX_PROJECTOR_NORM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthBound {
    /// `max(sampled_max, tail_bound)`, an upper bound for `sup_t ‖T_t‖`.
    pub value: f64,
    pub sampled_max: f64,
    pub argmax: f64,
    /// Bound for `sup_{t ≥ horizon} ‖T_t‖`.
    pub tail_bound: f64,
    pub horizon: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct SemigroupModel {
    id: String,
    generator: CMat,
    eigenvalues: Vec<C64>,
    spectral_abscissa: f64,
    bounded: bool,
    growth: core::result::Result<GrowthBound, Error>,
}

/// Spectral data used by the tail bound: `Π = V W*` projects onto the
/// imaginary-axis eigenspaces, and `B = A(I − Π) + Π` has spectrum in the open
/// right half-plane.
struct Split {
    unitary_bound: f64,
    complement_norm: f64,
    alpha: f64,
    nilpotent_norm: f64,
    dim: usize,
}

impl SemigroupModel {
    pub fn new(id: impl Into<String>, generator: CMat) -> Result<Self> {
        let d = generator.nrows();
        if d == 0 || generator.ncols() != d {
            return Err(Error::invalid(
                "generator must be a non-empty square matrix",
            ));
        }
        if !all_finite(&generator) {
            return Err(Error::NonFinite("generator entries"));
        }
        let (_, t) = Schur::new(generator.clone()).unpack();
        let eigenvalues: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
        let spectral_abscissa = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        let mut model = SemigroupModel {
            id: id.into(),
            generator,
            eigenvalues,
            spectral_abscissa,
            bounded: false,
            growth: Err(Error::Unbounded(String::new())),
        };
        match model.split() {
            Ok(_) => {
                model.bounded = true;
                let h = default_horizon(&model);
                model.growth = estimate_growth_bound(&model, h, DEFAULT_SAMPLES);
            }
            Err(e) => model.growth = Err(e),
        }
        Ok(model)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn generator(&self) -> &CMat {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Smallest real part of the spectrum of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.spectral_abscissa
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// Growth bound computed at construction with the default horizon.
    pub fn growth_bound(&self) -> Result<&GrowthBound> {
        self.growth.as_ref().map_err(Clone::clone)
    }

    /// `C_A = sup_t ‖e^{-tA}‖`.
    pub fn c_a(&self) -> Result<f64> {
        self.growth_bound().map(|g| g.value)
    }

    /// Model for `A + εI`.
    pub fn shifted(&self, eps: f64) -> Result<SemigroupModel> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::invalid("shift must be non-negative"));
        }
        let d = self.dim();
        let a = &self.generator + CMat::identity(d, d) * C64::new(eps, 0.0);
        SemigroupModel::new(format!("{}+{}I", self.id, eps), a)
    }

    fn scale(&self) -> f64 {
        spectral_norm(&self.generator).max(1.0)
    }

    fn split(&self) -> Result<Split> {
        let a = &self.generator;
        let d = self.dim();
        let scale = self.scale();
        if self.spectral_abscissa < -IMAG_TOL * scale {
            return Err(Error::Unbounded(format!(
                "eigenvalue with negative real part {:e}",
                self.spectral_abscissa
            )));
        }
        let imag: Vec<C64> = self
            .eigenvalues
            .iter()
            .copied()
            .filter(|z| z.re.abs() <= IMAG_TOL * scale)
            .collect();
        let mut clusters: Vec<Vec<C64>> = Vec::new();
        for z in imag {
            match clusters
                .iter_mut()
                .find(|c| c.iter().any(|w| (w - z).norm() <= CLUSTER_TOL * scale))
            {
                Some(c) => c.push(z),
                None => clusters.push(alloc::vec![z]),
            }
        }
        let eye = CMat::identity(d, d);
        let (projector, unitary_bound) = if clusters.is_empty() {
            (CMat::zeros(d, d), 0.0)
        } else {
            let mut right = Vec::new();
            let mut left = Vec::new();
            for c in &clusters {
                let k = c.len();
                let centre = C64::new(0.0, c.iter().map(|z| z.im).sum::<f64>() / k as f64);
                let shifted = a - &eye * centre;
                let dec = svd(&shifted);
                // Left null vectors from the adjoint; `svd` leaves `u` columns of
                // zero singular values empty.
                let adj = svd(&shifted.adjoint());
                if dec.s[d - k] > CLUSTER_TOL * scale {
                    return Err(Error::Unbounded(format!(
                        "imaginary eigenvalue {centre} is not semisimple"
                    )));
                }
                for j in d - k..d {
                    right.push(dec.v.column(j).into_owned());
                    left.push(adj.v.column(j).into_owned());
                }
            }
            let v = CMat::from_columns(&right);
            let w = CMat::from_columns(&left);
            let inner = (w.adjoint() * &v)
                .try_inverse()
                .ok_or_else(|| Error::Unbounded("degenerate imaginary eigenspace".into()))?;
            let w_adj = inner * w.adjoint();
            let bound = spectral_norm(&v) * spectral_norm(&w_adj);
            if !(bound <= MAX_PROJECTOR_NORM) {
                return Err(Error::Unbounded(
                    "imaginary eigenspace is numerically defective".into(),
                ));
            }
            (&v * w_adj, bound)
        };
        let complement = &eye - &projector;
        let b = a * &complement + &projector;
        let (_, t) = Schur::new(b).unpack();
        let alpha = (0..d).map(|i| t[(i, i)].re).fold(f64::INFINITY, f64::min);
        let mut nil = 0.0;
        for j in 0..d {
            for i in 0..j {
                nil += t[(i, j)].norm_sqr();
            }
        }
        Ok(Split {
            unitary_bound,
            complement_norm: spectral_norm(&complement),
            alpha,
            nilpotent_norm: nil.sqrt(),
            dim: d,
        })
    }
}

impl Split {
    /// `sup_{t ≥ h} ‖e^{-tA}‖ ≤ ‖V‖‖W*‖ + ‖I − Π‖ · sup_{t ≥ h} ‖e^{-tB}‖`, with
    /// `‖e^{-tB}‖ ≤ e^{-αt} Σ_{k<d} (t‖N‖)^k / k!` from the Schur form of `B`.
    fn tail(&self, h: f64) -> f64 {
        if self.complement_norm <= 1e-14 {
            return self.unitary_bound;
        }
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..self.dim {
            if k > 0 {
                fact *= k as f64;
            }
            // Each term e^{-αt} t^k is decreasing beyond k/α.
            let t = h.max(k as f64 / self.alpha);
            let term = if k == 0 {
                (-self.alpha * t).exp()
            } else {
                (k as f64 * (t * self.nilpotent_norm).ln() - self.alpha * t).exp() / fact
            };
            sum += term;
        }
        self.unitary_bound + self.complement_norm * sum
    }
}

/// `50 / abscissa` for uniformly decaying semigroups, `10³` otherwise.
pub fn default_horizon(model: &SemigroupModel) -> f64 {
    let a = model.spectral_abscissa();
    if a > IMAG_TOL * model.scale() {
        50.0 / a
    } else {
        1e3
    }
}

/// `T_t = e^{-tA}` by scaling and squaring.
pub fn semigroup_at(model: &SemigroupModel, t: f64) -> Result<CMat> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "semigroup time {t} must be non-negative"
        )));
    }
    Ok(expm(&model.generator.map(|z| z * -t)))
}

/// Samples `‖T_t‖` on `t_k = horizon·(k/samples)²`, polishes the best sample by
/// golden-section search, and adds a certified bound for `t ≥ horizon`.
pub fn estimate_growth_bound(
    model: &SemigroupModel,
    horizon: f64,
    samples: usize,
) -> Result<GrowthBound> {
    if !model.bounded && model.growth.is_err() && model.split().is_err() {
        return Err(model.split().err().unwrap());
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::TailUnavailable(format!(
            "horizon {horizon} must be positive"
        )));
    }
    let split = model.split()?;
    let samples = samples.max(8);
    let norm_at = |t: f64| spectral_norm(&expm(&model.generator.map(|z| z * -t)));
    let times: Vec<f64> = (0..=samples)
        .map(|k| {
            let x = k as f64 / samples as f64;
            horizon * x * x
        })
        .collect();
    let values: Vec<f64> = times.iter().map(|&t| norm_at(t)).collect();
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one sample");
    let lo = times[best.saturating_sub(1)];
    let hi = times[(best + 1).min(samples)];
    let (t_star, v_star) = if hi > lo {
        quad::golden_max(norm_at, lo, hi, 80)
    } else {
        (times[best], best_val)
    };
    let (argmax, sampled_max) = if v_star > best_val {
        (t_star, v_star)
    } else {
        (times[best], best_val)
    };
    let tail_bound = split.tail(horizon);
    if !tail_bound.is_finite() || tail_bound > sampled_max * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::TailUnavailable(format!(
            "tail bound {tail_bound:e} beyond t = {horizon} exceeds the sampled maximum {sampled_max:e}; \
             increase the horizon"
        )));
    }
    Ok(GrowthBound {
        value: sampled_max.max(tail_bound),
        sampled_max,
        argmax,
        tail_bound,
        horizon,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalculusResult {
    pub operator_value: CMat,
    pub operator_norm: f64,
    pub quadrature_error: f64,
    pub tail_error: f64,
    /// Truncation point `T*` of the integral.
    pub horizon: f64,
}

/// `Γ(A, b) = ∫_0^∞ b(t) e^{-tA} dt` by adaptive Gauss–Kronrod quadrature on
/// `[0, T*]`, with `C_A ∫_{T*}^∞ |b| ≤ tol/2` bounding the rest.
pub fn hille_phillips(model: &SemigroupModel, b: &Weight, tol: f64) -> Result<CalculusResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let c_a = model.c_a()?;
    let d = model.dim();
    if b.is_zero() {
        return Ok(CalculusResult {
            operator_value: CMat::zeros(d, d),
            operator_norm: 0.0,
            quadrature_error: 0.0,
            tail_error: 0.0,
            horizon: 0.0,
        });
    }
    let t_end = b.tail_point(0.5 * tol / c_a);
    let tail_error = c_a * b.tail_abs(t_end);
    if tail_error > 0.5 * tol {
        return Err(Error::Quadrature {
            estimate: tail_error,
            requested: 0.5 * tol,
        });
    }
    let mut pts = b.quadrature_points(t_end);
    let oscillation = spectral_norm(&model.generator);
    let count = ((t_end * oscillation / 2.0).ceil() as usize).min(20_000);
    if count > pts.len() {
        pts = quad::panels(0.0, t_end, count, &pts);
    }
    let a = &model.generator;
    let q = quad::integrate(
        |t: f64| {
            let w = b.eval(t);
            if w == C64::new(0.0, 0.0) {
                CMat::zeros(d, d)
            } else {
                expm(&a.map(|z| z * -t)) * w
            }
        },
        &pts,
        QuadOptions {
            abs_tol: 0.5 * tol,
            max_intervals: 200_000,
        },
    )?;
    Ok(CalculusResult {
        operator_norm: spectral_norm(&q.value),
        operator_value: q.value,
        quadrature_error: q.error,
        tail_error,
        horizon: t_end,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub n_s: usize,
    pub n_u: usize,
    /// Attained lower bound for the discretized γ₂*.
    pub gamma2_dual: f64,
    /// Dual upper bound from the same solve.
    pub gamma2_dual_upper: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub model_id: String,
    pub weight_id: String,
    pub lhs: f64,
    pub lhs_error: f64,
    /// `C_A² γ₂*` at the finest level.
    pub rhs: f64,
    pub c_a: f64,
    /// Smallest `rhs − lhs` over the levels.
    pub slack: f64,
    pub pass: bool,
    pub tol: f64,
    pub levels: Vec<LevelReport>,
}

/// Compares `‖Γ(A, Σ c_k ∗ d_k)‖` with `C_A² γ₂*` of the weighted tensor
/// matrix on `(gs, gu)` and on both grids refined once. `pass` holds when
/// `lhs ≤ rhs + tol` at both levels.
pub fn verify_calculus_bound(
    model: &SemigroupModel,
    psi: &TensorWeight,
    gs: &SampleGrid,
    gu: &SampleGrid,
    tol: f64,
) -> Result<BoundReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let c_a = model.c_a()?;
    let b = psi.convolution();
    let hp = hille_phillips(model, &b, 1e-2 * tol)?;
    let lhs = hp.operator_norm;
    let mut levels = Vec::with_capacity(2);
    for (g1, g2) in [(gs.clone(), gu.clone()), (gs.refined(), gu.refined())] {
        let n = weighted_tensor_matrix(psi, &g1, &g2)?;
        let cert: Gamma2Certificate = gamma2_dual(&n.entries, 1e-2 * tol)?;
        let rhs = c_a * c_a * cert.value;
        levels.push(LevelReport {
            n_s: g1.len(),
            n_u: g2.len(),
            gamma2_dual: cert.value,
            gamma2_dual_upper: cert.dual_value,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs + tol,
        });
    }
    let last = levels.last().expect("two levels");
    Ok(BoundReport {
        model_id: model.id().into(),
        weight_id: psi.id().into(),
        lhs,
        lhs_error: hp.quadrature_error + hp.tail_error,
        rhs: last.rhs,
        c_a,
        slack: levels.iter().map(|l| l.slack).fold(f64::INFINITY, f64::min),
        pass: levels.iter().all(|l| l.pass),
        tol,
        levels,
    })
}

/// `‖Γ(A + εI, b) − Γ(A, e^{-εt} b)‖`.
pub fn shift_consistency(model: &SemigroupModel, b: &Weight, eps: f64, tol: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid("shift must be non-negative"));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let lhs = hille_phillips(&model.shifted(eps)?, b, tol)?;
    let rhs = hille_phillips(model, &b.damped(eps)?, tol)?;
    Ok(spectral_norm(&(lhs.operator_value - rhs.operator_value)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs};

    fn real(d: usize, v: &[f64]) -> CMat {
        CMat::from_row_iterator(d, d, v.iter().map(|&x| c(x, 0.0)))
    }

    fn model(v: &[f64]) -> SemigroupModel {
        let d = (v.len() as f64).sqrt() as usize;
        SemigroupModel::new("m", real(d, v)).unwrap()
    }

    #[test]
    fn semigroup_examples() {
        let id = model(&[1.0, 0.0, 0.0, 1.0]);
        let t = semigroup_at(&id, core::f64::consts::LN_2).unwrap();
        assert!(max_abs(&(t - CMat::identity(2, 2) * c(0.5, 0.0))) < 1e-15);
        let rot = model(&[0.0, -1.0, 1.0, 0.0]);
        let t = semigroup_at(&rot, core::f64::consts::FRAC_PI_2).unwrap();
        assert!(max_abs(&(t - real(2, &[0.0, 1.0, -1.0, 0.0]))) < 1e-15);
        let jordan = model(&[1.0, 1.0, 0.0, 1.0]);
        let t = semigroup_at(&jordan, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!(max_abs(&(t - real(2, &[e, -e, 0.0, e]))) < 1e-15);
        assert!(semigroup_at(&id, -1.0).is_err());
    }

    #[test]
    fn boundedness_classification() {
        assert!(model(&[0.0, -1.0, 1.0, 0.0]).is_bounded());
        assert!(!model(&[0.0, 1.0, 0.0, 0.0]).is_bounded());
        assert!(!model(&[-0.1, 0.0, 0.0, 1.0]).is_bounded());
        assert!(model(&[0.0, 0.0, 0.0, 0.0]).is_bounded());
        let m = model(&[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(m.c_a(), Err(Error::Unbounded(_))));
        assert!(matches!(
            hille_phillips(&m, &Weight::zero(), 1e-8),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn growth_examples() {
        assert!((model(&[1.0, 0.0, 0.0, 1.0]).c_a().unwrap() - 1.0).abs() < 1e-12);
        assert!((model(&[0.0, -1.0, 1.0, 0.0]).c_a().unwrap() - 1.0).abs() < 1e-12);
        // Dense 1-D oracle on the closed-form singular value of e^{-t}[[1,-t],[0,1]].
        let sigma = |t: f64| (-t).exp() * (0.5 * (2.0 + t * t + t * (t * t + 4.0).sqrt())).sqrt();
        let oracle = (0..200_000)
            .map(|k| sigma(k as f64 * 1e-5))
            .fold(0.0, f64::max);
        let got = model(&[1.0, 1.0, 0.0, 1.0]).c_a().unwrap();
        assert!(
            got >= oracle - 1e-12 && got - oracle < 1e-9,
            "{got} vs {oracle}"
        );
    }

    #[test]
    fn short_horizon_is_reported() {
        let m = model(&[0.1, 5.0, 0.0, 0.1]);
        assert!(matches!(
            estimate_growth_bound(&m, 0.5, 100),
            Err(Error::TailUnavailable(_))
        ));
    }

    #[test]
    fn calculus_examples() {
        let e = Weight::exponential(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let r = hille_phillips(&model(&[1.0, 0.0, 0.0, 1.0]), &e, 1e-10).unwrap();
        assert!(max_abs(&(r.operator_value - CMat::identity(2, 2) * c(0.5, 0.0))) < 1e-10);
        assert!(r.quadrature_error + r.tail_error <= 1e-10);
        let r = hille_phillips(&model(&[1.0, 1.0, 0.0, 1.0]), &e, 1e-10).unwrap();
        assert!(max_abs(&(r.operator_value - real(2, &[0.5, -0.25, 0.0, 0.5]))) < 1e-10);
    }

    #[test]
    fn calculus_bound_scalar_case() {
        use crate::hankel::{make_grid, GridKind};
        let e = Weight::exponential(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let psi = TensorWeight::new("e,e", alloc::vec![(e.clone(), e)]).unwrap();
        let g = make_grid(GridKind::Uniform, 25, 1e-3, 30.0).unwrap();
        let a = 0.5;
        let m = model(&[a, 0.0, 0.0, a]);
        let rep = verify_calculus_bound(&m, &psi, &g, &g, 1e-4).unwrap();
        assert!((rep.lhs - 1.0 / (1.0 + a).powi(2)).abs() < 1e-8);
        assert!(rep.pass);
        // Rank one: γ₂* is the squared weighted ℓ¹ sum of the samples.
        let fine = g.refined();
        let w = fine.weights().unwrap();
        let l1: f64 = fine
            .points()
            .iter()
            .zip(w)
            .map(|(s, w)| w * (-s).exp())
            .sum();
        assert!(
            (rep.rhs - l1 * l1).abs() < 1e-5,
            "{} vs {}",
            rep.rhs,
            l1 * l1
        );
    }

    #[test]
    fn shift_examples() {
        let e = Weight::exponential(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let id = model(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(shift_consistency(&id, &e, 0.0, 1e-10).unwrap(), 0.0);
        assert!(shift_consistency(&id, &e, 1.0, 1e-10).unwrap() <= 2e-10);
        let te = Weight::exp_poly(c(1.0, 0.0), c(1.0, 0.0), 1, 0.0).unwrap();
        let jordan = model(&[1.0, 1.0, 0.0, 1.0]);
        assert!(shift_consistency(&jordan, &te, 0.5, 1e-10).unwrap() <= 2e-10);
    }

    #[test]
    fn calculus_matches_eigendecomposition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = 4;
        let s = CMat::from_fn(d, d, |i, j| {
            let diag = if i == j { c(2.0, 0.0) } else { c(0.0, 0.0) };
            diag + c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
        });
        let lam: Vec<C64> = (0..d)
            .map(|_| c(rng.random_range(0.2..2.0), rng.random_range(-3.0..3.0)))
            .collect();
        let si = s.clone().try_inverse().unwrap();
        let a = &s * CMat::from_diagonal(&crate::linalg::CVec::from_vec(lam.clone())) * &si;
        let m = SemigroupModel::new("rand", a).unwrap();
        let (coef, decay) = (c(0.7, -0.2), c(1.3, 0.4));
        let b = Weight::exponential(coef, decay).unwrap();
        let r = hille_phillips(&m, &b, 1e-10).unwrap();
        let diag: Vec<C64> = lam.iter().map(|l| coef / (decay + l)).collect();
        let expect = &s * CMat::from_diagonal(&crate::linalg::CVec::from_vec(diag)) * &si;
        assert!(spectral_norm(&(r.operator_value - expect)) < 1e-9);
    }

    #[test]
    fn calculus_is_multiplicative_and_bounded() {
        let c1 = Weight::exponential(c(1.0, 0.0), c(0.5, 1.0)).unwrap();
        let d1 = Weight::indicator(c(2.0, 0.0), 0.5, 1.5).unwrap();
        for m in [model(&[1.0, 1.0, 0.0, 1.0]), model(&[0.0, -2.0, 2.0, 0.0])] {
            let cd = hille_phillips(&m, &c1.convolve(&d1), 1e-11).unwrap();
            let gc = hille_phillips(&m, &c1, 1e-11).unwrap();
            let gd = hille_phillips(&m, &d1, 1e-11).unwrap();
            let err = spectral_norm(&(cd.operator_value - gc.operator_value * gd.operator_value));
            assert!(err <= 1e-8, "{err}");
            assert!(gd.operator_norm <= m.c_a().unwrap() * d1.l1_norm().value + 1e-8);
        }
    }
}
