//! Scalar Hardy-space utilities: Riesz factorization of analytic polynomials
//! on the circle, the conformal transfer `G_p: H^p(𝕋) → H^p(ℝ)`, band-limited
//! Fejér-type kernels, and a Plancherel check for weights.
//!
//! Circle norms are normalized, `‖f‖_p^p = (1/2π)∫|f(e^{iθ})|^p dθ`; line norms
//! use plain Lebesgue measure.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Schur;

use crate::fft;
use crate::linalg::{CMat, C64, ONE, ZERO};
use crate::quad::{self, QuadOptions};
use crate::symbols::{Estimate, Weight};
use crate::{Error, Result};

/// Roots this close to the unit circle are boundary roots.
const BOUNDARY_TOL: f64 = 1e-10;
/// Pointwise factorization residual allowed relative to `‖h‖_∞`.
pub const FACTOR_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    One,
    Two,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Two => 2.0,
        }
    }
}

/// Analytic polynomial `Σ c_k z^k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CirclePoly {
    coeffs: Vec<C64>,
}

impl CirclePoly {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<C64>) -> Result<Self> {
        if coeffs
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("polynomial coefficients"));
        }
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Ok(CirclePoly { coeffs })
    }

    pub fn constant(c: C64) -> Self {
        CirclePoly::new(vec![c]).unwrap_or_default()
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = ONE;
        CirclePoly { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn mul(&self, other: &CirclePoly) -> CirclePoly {
        if self.is_zero() || other.is_zero() {
            return CirclePoly::default();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CirclePoly { coeffs: out }
    }

    /// `‖p‖₂` on the circle, from the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Values at the `n`-th roots of unity `e^{2πij/n}`; `n` must be a power
    /// of two at least the number of coefficients.
    pub fn samples(&self, n: usize) -> Vec<C64> {
        assert!(n.is_power_of_two() && n >= self.coeffs.len());
        let mut data = vec![ZERO; n];
        data[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        fft::inverse(&mut data);
        for v in data.iter_mut() {
            *v *= n as f64;
        }
        data
    }

    /// Roots from the companion matrix, polished by Newton steps.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let deg = self
            .degree()
            .ok_or_else(|| Error::invalid("the zero polynomial has no root set"))?;
        if deg == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[deg];
        let mut comp = CMat::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = ONE;
        }
        for k in 0..deg {
            comp[(k, deg - 1)] = -self.coeffs[k] / lead;
        }
        let (_, t) = Schur::new(comp).unpack();
        let mut roots = Vec::with_capacity(deg);
        for i in 0..deg {
            let mut z = t[(i, i)];
            for _ in 0..5 {
                let (p, dp) = self.eval_with_derivative(z);
                if dp == ZERO {
                    break;
                }
                let next = z - p / dp;
                if self.eval(next).norm() < p.norm() {
                    z = next;
                } else {
                    break;
                }
            }
            let scale: f64 = self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm() * z.norm().powi(k as i32))
                .sum();
            if !(z.re.is_finite() && z.im.is_finite()) || self.eval(z).norm() > 1e-8 * scale {
                return Err(Error::RootFinding(format!(
                    "companion eigenvalue {z} is not a root to working accuracy"
                )));
            }
            roots.push(z);
        }
        Ok(roots)
    }

    /// Exact division by `z − root`.
    fn deflate(&self, root: C64) -> CirclePoly {
        let n = self.coeffs.len();
        let mut out = vec![ZERO; n - 1];
        let mut carry = ZERO;
        for k in (1..n).rev() {
            carry = carry * root + self.coeffs[k];
            out[k - 1] = carry;
        }
        CirclePoly { coeffs: out }
    }
}

/// Finite Blaschke product times a Taylor series:
/// `f(z) = Π (z − a)/(1 − āz) · Σ s_k z^k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircleFunction {
    zeros: Vec<C64>,
    series: CirclePoly,
}

impl CircleFunction {
    pub fn new(zeros: Vec<C64>, series: CirclePoly) -> Result<Self> {
        if zeros.iter().any(|a| !(a.norm() < 1.0)) {
            return Err(Error::invalid("Blaschke zeros must lie in the open disc"));
        }
        Ok(CircleFunction { zeros, series })
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn series(&self) -> &CirclePoly {
        &self.series
    }

    pub fn eval(&self, z: C64) -> C64 {
        let b: C64 = self
            .zeros
            .iter()
            .map(|a| (z - a) / (ONE - a.conj() * z))
            .product();
        b * self.series.eval(z)
    }

    pub fn mul(&self, other: &CircleFunction) -> CircleFunction {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        CircleFunction {
            zeros,
            series: self.series.mul(&other.series),
        }
    }

    /// `‖f‖₂` from the series coefficients (the Blaschke factor is unimodular).
    pub fn l2_norm(&self) -> f64 {
        self.series.l2_norm()
    }
}

impl From<CirclePoly> for CircleFunction {
    fn from(series: CirclePoly) -> Self {
        CircleFunction {
            zeros: Vec::new(),
            series,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HardyFunction {
    Circle(CircleFunction),
    /// `G_p(base)` on the real line.
    Line {
        base: CircleFunction,
        p: Exponent,
    },
}

impl HardyFunction {
    /// Value at angle `x` on the circle or at `t = x` on the line.
    pub fn eval(&self, x: f64) -> C64 {
        match self {
            HardyFunction::Circle(f) => f.eval(C64::from_polar(1.0, x)),
            HardyFunction::Line { base, p } => conformal_transfer(base, *p, x),
        }
    }

    /// `‖f‖_p` by the midpoint rule on `samples` points, compared against half
    /// as many for the error. Line integrals use `t = tan(θ/2)`. A line
    /// function is only integrated in its own exponent.
    pub fn norm(&self, p: Exponent, samples: usize) -> Result<Estimate> {
        if samples < 16 {
            return Err(Error::invalid("need at least 16 samples"));
        }
        let pw = p.value();
        let integrand = |theta: f64| -> f64 {
            match self {
                HardyFunction::Circle(f) => {
                    f.eval(C64::from_polar(1.0, theta)).norm().powf(pw) / (2.0 * PI)
                }
                HardyFunction::Line { .. } => {
                    let t = (0.5 * theta).tan();
                    self.eval(t).norm().powf(pw) * 0.5 * (1.0 + t * t)
                }
            }
        };
        if let HardyFunction::Line { p: own, .. } = self {
            if *own != p {
                return Err(Error::invalid(
                    "line function is only integrable in its own exponent",
                ));
            }
        }
        let rule = |n: usize| -> f64 {
            let h = 2.0 * PI / n as f64;
            (0..n)
                .map(|j| integrand(-PI + (j as f64 + 0.5) * h))
                .sum::<f64>()
                * h
        };
        let fine = rule(samples);
        let coarse = rule(samples / 2);
        let value = fine.powf(1.0 / pw);
        let error = (fine - coarse).abs() / (pw * value.powf(pw - 1.0)).max(f64::MIN_POSITIVE);
        Ok(Estimate { value, error })
    }
}

/// `[G_p f](t) = f((t−i)/(t+i)) / (π^{1/p} (t+i)^{2/p})`.
pub fn conformal_transfer(f: &CircleFunction, p: Exponent, t: f64) -> C64 {
    let w = C64::new(t, 1.0);
    let z = C64::new(t, -1.0) / w;
    match p {
        Exponent::One => f.eval(z) / (PI * w * w),
        Exponent::Two => f.eval(z) / (PI.sqrt() * w),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszFactors {
    pub h1: CircleFunction,
    pub h2: CircleFunction,
    /// `max |h − h₁h₂|` on a grid offset from the FFT grid.
    pub residual: f64,
    /// `max |h|` on the same grid.
    pub sup_norm: f64,
    /// `‖h‖₁` by the trapezoid rule.
    pub h_l1: Estimate,
    pub h1_l2: f64,
    pub h2_l2: f64,
}

impl RieszFactors {
    /// `|‖h₁‖₂‖h₂‖₂ − ‖h‖₁|`.
    pub fn norm_gap(&self) -> f64 {
        (self.h1_l2 * self.h2_l2 - self.h_l1.value).abs()
    }
}

/// Smallest power-of-two FFT size for [`riesz_factorize_circle`] that exceeds
/// `8·deg` and resolves the outer square root to about `1e-14`.
///
/// The square root's Taylor coefficients decay like `ρ^{-k}`, where `ρ > 1`
/// is the modulus of the nearest zero of the outer part (`|r|` for roots
/// outside the disc, `1/|r|` for roots inside).
pub fn suggested_fft_size(h: &CirclePoly) -> Result<usize> {
    let deg = h
        .degree()
        .ok_or_else(|| Error::invalid("cannot factorize the zero polynomial"))?;
    let rho = h
        .roots()?
        .iter()
        .map(|r| r.norm())
        .filter(|&m| (m - 1.0).abs() > BOUNDARY_TOL)
        .map(|m| if m < 1.0 { 1.0 / m.max(1e-300) } else { m })
        .fold(f64::INFINITY, f64::min);
    let resolve = if rho.is_finite() {
        (2.0 * 14.0 * core::f64::consts::LN_10 / rho.ln()).ceil()
    } else {
        0.0
    };
    if resolve > (1u64 << 22) as f64 {
        return Err(Error::invalid(
            "roots too close to the unit circle for a dense FFT",
        ));
    }
    Ok((8 * deg.max(1) + 1)
        .max(resolve as usize)
        .max(64)
        .next_power_of_two())
}

/// Writes `h = h₁h₂` with `|h₁| = |h₂|` on the circle.
///
/// Zeros inside the disc form a Blaschke product and the rest is outer; the
/// outer square root is `exp(½(log|O| + i·conjugate))` with the conjugate
/// function taken by FFT. Blaschke zeros are dealt alternately to `h₁` and
/// `h₂`, and so are zeros on the circle, which are factored out beforehand.
pub fn riesz_factorize_circle(h: &CirclePoly, fft_size: usize) -> Result<RieszFactors> {
    let deg = h
        .degree()
        .ok_or_else(|| Error::invalid("cannot factorize the zero polynomial"))?;
    let n = fft_size;
    if !n.is_power_of_two() || n <= 8 * deg.max(1) {
        return Err(Error::invalid(format!(
            "fft size {n} must be a power of two exceeding 8× the degree {deg}"
        )));
    }
    let mut inner = Vec::new();
    let mut boundary = Vec::new();
    for r in h.roots()? {
        if r.norm() < 1.0 - BOUNDARY_TOL {
            inner.push(r);
        } else if (r.norm() - 1.0).abs() <= BOUNDARY_TOL {
            boundary.push(r);
        }
    }
    let by_modulus_then_arg = |a: &C64, b: &C64| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.arg().total_cmp(&b.arg()))
    };
    inner.sort_by(by_modulus_then_arg);
    boundary.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    let mut rest = h.clone();
    for &z in &boundary {
        rest = rest.deflate(z);
    }

    // Analytic logarithm of the outer part from the Fourier series of log|h|.
    let values = rest.samples(n);
    let mut ell: Vec<C64> = values
        .iter()
        .map(|v| C64::new(v.norm().ln(), 0.0))
        .collect();
    if ell.iter().any(|v| !v.re.is_finite()) {
        return Err(Error::RootFinding(
            "polynomial vanishes on the sampling grid".into(),
        ));
    }
    fft::forward(&mut ell);
    let mut log_outer = vec![ZERO; n];
    log_outer[0] = ell[0] / n as f64;
    for k in 1..n / 2 {
        log_outer[k] = ell[k] * (2.0 / n as f64);
    }
    fft::inverse(&mut log_outer);
    for v in log_outer.iter_mut() {
        *v *= n as f64;
    }

    let blaschke_all = CircleFunction {
        zeros: inner.clone(),
        series: CirclePoly::constant(ONE),
    };
    // `rest / (B·e^L)` is a unimodular constant.
    let mut gamma = ZERO;
    for (j, (v, l)) in values.iter().zip(&log_outer).enumerate() {
        let z = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        gamma += v / (blaschke_all.eval(z) * l.exp());
    }
    let gamma = gamma / gamma.norm();

    let mut root: Vec<C64> = log_outer.iter().map(|l| (l * 0.5).exp()).collect();
    fft::forward(&mut root);
    let scale = gamma.sqrt() / n as f64;
    for v in root.iter_mut() {
        *v *= scale;
    }
    let top = root.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let aliased = root[n / 2..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    if aliased > 1e-10 * top {
        return Err(Error::invalid(format!(
            "fft size {n} too small: aliased outer coefficients reach {:e}",
            aliased / top
        )));
    }
    root.truncate(n / 2);
    while root.last().is_some_and(|v| v.norm() <= 1e-18 * top) {
        root.pop();
    }
    let sqrt_outer = CirclePoly { coeffs: root };

    let mut f1 = CircleFunction::from(sqrt_outer.clone());
    let mut f2 = CircleFunction::from(sqrt_outer);
    for (k, &a) in inner.iter().enumerate() {
        if k % 2 == 0 { &mut f1 } else { &mut f2 }.zeros.push(a);
    }
    for (k, &z) in boundary.iter().enumerate() {
        let lin = CirclePoly {
            coeffs: vec![-z, ONE],
        };
        let f = if k % 2 == 0 { &mut f1 } else { &mut f2 };
        f.series = f.series.mul(&lin);
    }

    let m = 2 * n;
    let mut residual = 0.0_f64;
    let mut sup_norm = 0.0_f64;
    let mut l1_fine = 0.0;
    let mut l1_coarse = 0.0;
    for j in 0..m {
        let z = C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / m as f64);
        let v = h.eval(z);
        residual = residual.max((v - f1.eval(z) * f2.eval(z)).norm());
        sup_norm = sup_norm.max(v.norm());
        l1_fine += v.norm();
        if j % 2 == 0 {
            l1_coarse += v.norm();
        }
    }
    l1_fine /= m as f64;
    l1_coarse /= (m / 2) as f64;
    if residual > FACTOR_RESIDUAL_TOL * sup_norm {
        return Err(Error::Reconstruction {
            residual,
            tolerance: FACTOR_RESIDUAL_TOL * sup_norm,
        });
    }
    Ok(RieszFactors {
        h1_l2: f1.l2_norm(),
        h2_l2: f2.l2_norm(),
        h1: f1,
        h2: f2,
        residual,
        sup_norm,
        h_l1: Estimate {
            value: l1_fine,
            error: (l1_fine - l1_coarse).abs(),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineFactors {
    pub h1: HardyFunction,
    pub h2: HardyFunction,
    pub circle: RieszFactors,
    /// `max |h − h₁h₂|` on the test grid.
    pub residual: f64,
    pub h_l1: Estimate,
    pub h1_l2: Estimate,
    pub h2_l2: Estimate,
}

/// For `h = G₁(g)` with a polynomial `g`, returns `h₁ = G₂(g₁)`, `h₂ = G₂(g₂)`
/// from the circle factorization `g = g₁g₂`. Line norms use `samples`
/// quadrature points.
pub fn sarason_factorize_line(
    h: &HardyFunction,
    fft_size: usize,
    samples: usize,
) -> Result<LineFactors> {
    let base = match h {
        HardyFunction::Line {
            base,
            p: Exponent::One,
        } if base.zeros.is_empty() => base,
        _ => {
            return Err(Error::invalid(
                "expected a line function G₁(g) with a polynomial base g",
            ))
        }
    };
    let circle = riesz_factorize_circle(&base.series, fft_size)?;
    let h1 = HardyFunction::Line {
        base: circle.h1.clone(),
        p: Exponent::Two,
    };
    let h2 = HardyFunction::Line {
        base: circle.h2.clone(),
        p: Exponent::Two,
    };
    let mut residual = 0.0_f64;
    let grid = (0..samples)
        .map(|j| (0.5 * (-PI + (j as f64 + 0.5) * 2.0 * PI / samples as f64)).tan())
        .chain((0..=200).map(|k| -10.0 + 0.1 * k as f64));
    for t in grid {
        residual = residual.max((h.eval(t) - h1.eval(t) * h2.eval(t)).norm());
    }
    let tolerance = FACTOR_RESIDUAL_TOL * circle.sup_norm;
    if residual > tolerance {
        return Err(Error::Reconstruction {
            residual,
            tolerance,
        });
    }
    Ok(LineFactors {
        h_l1: h.norm(Exponent::One, samples)?,
        h1_l2: h1.norm(Exponent::Two, samples)?,
        h2_l2: h2.norm(Exponent::Two, samples)?,
        h1,
        h2,
        circle,
        residual,
    })
}

/// Degree-7 smoothstep `35x⁴ − 84x⁵ + 70x⁶ − 20x⁷`.
const SMOOTHSTEP: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];

/// k-th derivative of a real polynomial given by its coefficients.
fn poly_derivative(coeffs: &[f64], x: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    for j in (k..coeffs.len()).rev() {
        let falling: f64 = (j - k + 1..=j).map(|v| v as f64).product();
        acc = acc * x + coeffs[j] * falling;
    }
    acc
}

/// Even bump `φ̂` equal to 1 on `[−inner, inner]`, 0 outside `[−outer, outer]`,
/// with the smoothstep in between (C³ at the seams). `φ` is its inverse
/// transform `φ(t) = (1/2π)∫φ̂(u)e^{itu} du`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    inner: f64,
    outer: f64,
}

impl Default for Bump {
    fn default() -> Self {
        Bump {
            inner: 1.0,
            outer: 2.0,
        }
    }
}

impl Bump {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::invalid(format!(
                "bump radii must satisfy 0 < inner < outer < ∞, got {inner}, {outer}"
            )));
        }
        Ok(Bump { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    fn width(&self) -> f64 {
        self.outer - self.inner
    }

    pub fn transform(&self, u: f64) -> f64 {
        self.transform_derivative(u.abs(), 0)
    }

    /// k-th derivative of `φ̂` at `u ≥ 0`.
    fn transform_derivative(&self, u: f64, k: usize) -> f64 {
        if u >= self.outer {
            return 0.0;
        }
        if u <= self.inner {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let x = (u - self.inner) / self.width();
        let s = poly_derivative(&SMOOTHSTEP, x, k) / self.width().powi(k as i32);
        if k == 0 {
            1.0 - s
        } else {
            -s
        }
    }

    /// `|p^{(k)}(inner)| + |p^{(k)}(outer)|` for the transition polynomial `p`.
    fn seam_jumps(&self, k: usize) -> (f64, f64) {
        let w = self.width().powi(k as i32);
        (
            -poly_derivative(&SMOOTHSTEP, 0.0, k) / w,
            -poly_derivative(&SMOOTHSTEP, 1.0, k) / w,
        )
    }

    /// `φ(t)`: quadrature of the cosine transform for small `t`, and the exact
    /// integration-by-parts expansion (which terminates after the seventh
    /// derivative) for large `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        let (a, b, w) = (self.inner, self.outer, self.width());
        if t * w >= 16.0 {
            let it = C64::new(0.0, t);
            let ea = C64::from_polar(1.0, a * t);
            let eb = C64::from_polar(1.0, b * t);
            let mut s = ZERO;
            for k in 4..8 {
                let (pa, pb) = self.seam_jumps(k);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                s += (eb * pb - ea * pa) * sign / it.powu(k as u32 + 1);
            }
            return s.re / PI;
        }
        let flat = if t == 0.0 { a } else { (a * t).sin() / t };
        let panels = (t * w / 2.0).ceil() as usize + 1;
        let h = w / panels as f64;
        let ramp: f64 = (0..panels)
            .map(|j| {
                let lo = a + j as f64 * h;
                quad::kronrod15(
                    |u| self.transform_derivative(u, 0) * (t * u).cos(),
                    lo,
                    lo + h,
                )
            })
            .sum();
        (flat + ramp) / PI
    }

    /// Bound on `∫_t^∞ |φ|` from the same expansion, for `t > 0`.
    fn tail(&self, t: f64) -> f64 {
        (4..8)
            .map(|k| {
                let (pa, pb) = self.seam_jumps(k);
                (pa.abs() + pb.abs()) / (k as f64 * t.powi(k as i32))
            })
            .sum::<f64>()
            / PI
    }

    /// `‖φ‖₁` by adaptive quadrature plus the analytic tail bound.
    pub fn l1_norm(&self, tol: f64) -> Result<Estimate> {
        scaled_l1(self, 1, tol)
    }
}

/// `‖nφ(n·) − n⁻¹φ(·/n)‖₁` (plain `‖φ‖₁` for `n = 1`).
fn scaled_l1(bump: &Bump, n: u32, tol: f64) -> Result<Estimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let nf = n as f64;
    let f = |t: f64| {
        if n == 1 {
            bump.eval(t).abs()
        } else {
            (nf * bump.eval(nf * t) - bump.eval(t / nf) / nf).abs()
        }
    };
    let tail = |t: f64| {
        if n == 1 {
            2.0 * bump.tail(t)
        } else {
            2.0 * (bump.tail(nf * t) + bump.tail(t / nf))
        }
    };
    let mut t_end = 16.0 * nf / bump.width();
    while tail(t_end) > 0.25 * tol {
        t_end *= 2.0;
    }
    let count = ((t_end * bump.outer * nf / 2.0).ceil() as usize).clamp(8, 200_000);
    let pts = quad::panels(0.0, t_end, count, &[]);
    let q = quad::integrate(
        f,
        &pts,
        QuadOptions {
            abs_tol: 0.25 * tol,
            max_intervals: count + 200_000,
        },
    )?;
    Ok(Estimate {
        value: 2.0 * q.value,
        error: 2.0 * q.error + tail(t_end),
    })
}

/// `φ_n(t) = nφ(nt) − n⁻¹φ(t/n)`, with `φ̂_n(u) = φ̂(u/n) − φ̂(nu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerKernel {
    bump: Bump,
    n: u32,
}

pub fn fejer_weight(bump: Bump, n: u32) -> Result<FejerKernel> {
    if n == 0 {
        return Err(Error::invalid("Fejér index must be at least 1"));
    }
    Ok(FejerKernel { bump, n })
}

/// Polynomial piece of `φ̂_n − 1` on `[lo, hi]` in the local variable
/// `x = (u − lo)/(hi − lo)`; the last piece is unbounded with constant value.
#[derive(Debug, Clone)]
struct MultiplierPiece {
    lo: f64,
    hi: f64,
    poly: Vec<f64>,
}

impl MultiplierPiece {
    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// k-th derivative in `u`.
    fn derivative(&self, u: f64, k: usize) -> f64 {
        if self.hi.is_infinite() {
            return if k == 0 { self.poly[0] } else { 0.0 };
        }
        let x = (u - self.lo) / self.width();
        poly_derivative(&self.poly, x, k) / self.width().powi(k as i32)
    }

    fn is_zero(&self) -> bool {
        self.poly.iter().all(|c| c.abs() <= 1e-14)
    }
}

impl FejerKernel {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn bump(&self) -> Bump {
        self.bump
    }

    /// Half-width of the band around 0 on which `φ̂_n` vanishes.
    pub fn band_gap(&self) -> f64 {
        self.bump.inner / self.n as f64
    }

    pub fn transform(&self, u: f64) -> f64 {
        let n = self.n as f64;
        self.bump.transform(u / n) - self.bump.transform(n * u)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.n as f64;
        n * self.bump.eval(n * t) - self.bump.eval(t / n) / n
    }

    pub fn l1_norm(&self, tol: f64) -> Result<Estimate> {
        if self.n == 1 {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
            });
        }
        scaled_l1(&self.bump, self.n, tol)
    }

    /// `φ̂_n − 1` on `[0, ∞)` as polynomial pieces.
    fn multiplier_pieces(&self) -> Vec<MultiplierPiece> {
        let n = self.n as f64;
        let (a, b) = (self.bump.inner, self.bump.outer);
        let mut cuts = vec![0.0, a / n, b / n, a * n, b * n];
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let w_bump = self.bump.width();
        // `φ̂(σu)` on `[lo, lo + w]` in the local variable.
        let scaled = |sigma: f64, lo: f64, w: f64| -> Vec<f64> {
            let mid = sigma * (lo + 0.5 * w);
            let mut out = vec![0.0; 8];
            if mid <= a {
                out[0] = 1.0;
            } else if mid < b {
                let alpha = (sigma * lo - a) / w_bump;
                let beta = sigma * w / w_bump;
                let mut fact = 1.0;
                for k in 0..8 {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    out[k] = -poly_derivative(&SMOOTHSTEP, alpha, k) * beta.powi(k as i32) / fact;
                }
                out[0] += 1.0;
            }
            out
        };
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let p1 = scaled(1.0 / n, lo, hi - lo);
            let p2 = scaled(n, lo, hi - lo);
            let mut poly: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| x - y).collect();
            poly[0] -= 1.0;
            pieces.push(MultiplierPiece { lo, hi, poly });
        }
        pieces.push(MultiplierPiece {
            lo: *cuts.last().expect("non-empty"),
            hi: f64::INFINITY,
            poly: vec![-1.0],
        });
        pieces
    }
}

/// `J_q(κ) = ∫_0^1 x^q e^{−κx} dx` for `q = 0..=qmax`: upward recurrence
/// where `q < |κ|`, downward from a series value above.
fn exp_moments(qmax: usize, kappa: C64) -> Vec<C64> {
    let mut out = vec![ZERO; qmax + 1];
    let r = kappa.norm();
    let e = (-kappa).exp();
    let up_to = if r >= 1.0 {
        ((r.floor() as usize).saturating_sub(1)).min(qmax) + 1
    } else {
        0
    };
    if up_to > 0 {
        out[0] = (ONE - e) / kappa;
        for q in 1..up_to {
            out[q] = (out[q - 1] * q as f64 - e) / kappa;
        }
    }
    if up_to <= qmax {
        let top = qmax.max((2.0 * r).ceil() as usize) + 20;
        let mut term = C64::new(1.0 / (top as f64 + 1.0), 0.0);
        let mut sum = term;
        for m in 0..2000 {
            term *= kappa / (top as f64 + m as f64 + 2.0);
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                break;
            }
        }
        let mut j = e * sum;
        for q in (up_to..top).rev() {
            j = (kappa * j + e) / (q as f64 + 1.0);
            if q <= qmax {
                out[q] = j;
            }
        }
    }
    out
}

/// Coefficients of `P(x)·(d + wx)^p`.
fn times_binomial(poly: &[f64], d: f64, w: f64, p: u32) -> Vec<f64> {
    let mut out = poly.to_vec();
    for _ in 0..p {
        let mut next = vec![0.0; out.len() + 1];
        for (k, c) in out.iter().enumerate() {
            next[k] += c * d;
            next[k + 1] += c * w;
        }
        out = next;
    }
    out
}

/// `(1/2π)∫_0^∞ F(u)e^{itu} du` for `F = (φ̂_n − 1)·b`, piece by piece in
/// closed form.
fn inverse_transform(pieces: &[MultiplierPiece], b: &Weight, t: f64) -> C64 {
    let mut total = ZERO;
    let it = C64::new(0.0, t);
    for piece in pieces.iter().filter(|p| !p.is_zero()) {
        let lo = piece.lo;
        if piece.hi.is_infinite() {
            let c0 = piece.poly[0];
            for e in b.exp_terms().iter().filter(|e| e.shift <= lo) {
                let d = lo - e.shift;
                let mu = e.decay - it;
                let mut s = ZERO;
                let mut fact = 1.0;
                for k in 0..=e.power {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    let binom = crate::symbols::binomial(e.power, k);
                    s += d.powi((e.power - k) as i32) * binom * fact / mu.powu(k + 1);
                }
                total += e.coeff * c0 * (-e.decay * d + it * lo).exp() * s;
            }
            continue;
        }
        let w = piece.width();
        let mut add = |coeff: C64, decay: C64, power: u32, d: f64| {
            let m = times_binomial(&piece.poly, d, w, power);
            let kappa = (decay - it) * w;
            let j = exp_moments(m.len() - 1, kappa);
            let s: C64 = m.iter().zip(&j).map(|(c, jq)| jq * *c).sum();
            total += coeff * w * (-decay * d + it * lo).exp() * s;
        };
        for e in b.exp_terms().iter().filter(|e| e.shift <= lo) {
            add(e.coeff, e.decay, e.power, lo - e.shift);
        }
        for s in b
            .segments()
            .iter()
            .filter(|s| s.start <= lo && s.end >= piece.hi)
        {
            add(s.coeff, ZERO, s.power, lo - s.start);
        }
    }
    total / (2.0 * PI)
}

/// `‖φ_n ∗ h − h‖₁` for the H¹(ℝ) function `h` whose Fourier transform is the
/// weight `b` on `(0, ∞)` and 0 on the negative half-line.
///
/// With `F = (φ̂_n − 1)·b`, the difference is `g(t) = (1/2π)∫_0^∞ F e^{itu} du`,
/// evaluated in closed form. `∫|g|` is integrated on `[−T, T]`; beyond `T`
/// the three-term expansion of `g` in powers of `1/t` is integrated and the
/// remainder `‖F⁗‖₁/(2π t⁴)` is added to the error. Requires `b(0) = 0` and
/// no breakpoints of `b` where `φ̂_n ≠ 1`.
pub fn l1_approx_error(phi: &FejerKernel, b: &Weight, tol: f64) -> Result<Estimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if b.is_zero() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let pieces = phi.multiplier_pieces();
    for &bp in b.breakpoints().iter().filter(|&&x| x > 0.0) {
        // `F` stays C³ where the multiplier vanishes to fourth order.
        let smooth = pieces
            .iter()
            .filter(|p| p.lo <= bp && bp <= p.hi)
            .all(|p| p.is_zero() || (0..4).all(|k| p.derivative(bp, k).abs() <= 1e-12));
        if !smooth {
            return Err(Error::invalid(format!(
                "spectral density has a breakpoint at {bp} where φ̂_n − 1 is not flat"
            )));
        }
    }
    if b.eval(0.0).norm() > 1e-13 * b.sup_bound() {
        return Err(Error::invalid(
            "spectral density must vanish at 0 for the function to be integrable",
        ));
    }
    let d0: Vec<C64> = (1..=3).map(|k| -b.eval_derivative(0.0, k)).collect();

    // ‖F⁗‖₁ by Leibniz on every non-zero piece.
    let f4 = |piece: &MultiplierPiece, u: f64| -> f64 {
        (0..=4)
            .map(|j| {
                let binom = crate::symbols::binomial(4, j as u32);
                b.eval_derivative(u, 4 - j as u32) * (binom * piece.derivative(u, j))
            })
            .sum::<C64>()
            .norm()
    };
    let scale_b = b.l1_bound().max(f64::MIN_POSITIVE);
    let mut f4_norm = 0.0;
    for piece in pieces.iter().filter(|p| !p.is_zero()) {
        let hi = if piece.hi.is_infinite() {
            b.tail_point(1e-16 * scale_b).max(piece.lo + 1.0)
        } else {
            piece.hi
        };
        let mut extra = b.breakpoints();
        extra.push(hi);
        let pts = quad::panels(piece.lo, hi, 64, &extra);
        let q =
            quad::integrate_unchecked(|u| f4(piece, u), &pts, QuadOptions::new(1e-10 * scale_b));
        f4_norm += q.value + q.error;
        if piece.hi.is_infinite() {
            f4_norm += b.derivative_tail_abs(hi, 4);
        }
    }

    let n = phi.n as f64;
    let t_end = (16.0 * f4_norm / (6.0 * PI * tol))
        .cbrt()
        .max(50.0 * n)
        .max(10.0);
    let remainder = 2.0 * f4_norm / (6.0 * PI * t_end.powi(3));

    let lead_abs = |s: f64| -> f64 {
        let i = C64::new(0.0, 1.0);
        let v = d0[0] / (i * i) - d0[1] * s / i.powu(3) + d0[2] * s * s / i.powu(4);
        v.norm() / (2.0 * PI)
    };
    let tail = quad::integrate(
        |s: f64| lead_abs(s) + lead_abs(-s),
        &[0.0, 1.0 / t_end],
        QuadOptions::new(1e-3 * tol),
    )?;

    let fastest = b
        .exp_terms()
        .iter()
        .map(|e| e.decay.norm())
        .fold(phi.bump.outer * n, f64::max)
        .max(1.0);
    let mut pts = vec![0.0];
    let mut x = 0.25 / fastest;
    while x < t_end {
        pts.push(x);
        x *= 1.5;
    }
    pts.push(t_end);
    let mut sym: Vec<f64> = pts.iter().rev().map(|x| -x).collect();
    sym.extend_from_slice(&pts[1..]);
    let main = quad::integrate(
        |t: f64| inverse_transform(&pieces, b, t).norm(),
        &sym,
        QuadOptions {
            abs_tol: 0.5 * tol,
            max_intervals: 200_000,
        },
    )?;
    Ok(Estimate {
        value: main.value + tail.value,
        error: main.error + tail.error + remainder,
    })
}

/// `‖ĥ‖₂ / (√(2π)‖h‖₂)` with both sides by quadrature.
///
/// `‖h‖₂` integrates `|h|²` in time. `‖ĥ‖₂` integrates `|ĥ|²` on `[−U, U]`
/// and adds `Σ|J_j|²·2/U` for the `1/u²` tail generated by the jumps `J_j` of
/// `h`. The neglected oscillatory and higher-order tail terms are bounded and
/// reported in `error`.
pub fn plancherel_ratio(h: &Weight) -> Result<Estimate> {
    if h.is_zero() {
        return Err(Error::invalid(
            "the Plancherel ratio of the zero weight is undefined",
        ));
    }
    let l2 = h.l2_norm_sqr();
    let target = 2.0 * PI * l2.value;

    let jumps = h.jumps();
    let j_tot: f64 = jumps.iter().map(|(_, j)| j.norm()).sum();
    let scale = h.l1_bound();
    let t_end = h.tail_point(1e-16 * scale);
    let mut pts = h.quadrature_points(t_end);
    pts.dedup();
    let h2 = quad::integrate_unchecked(
        |t: f64| h.eval_derivative(t, 2).norm(),
        &pts,
        QuadOptions::new(1e-12 * scale),
    );
    let k_const = h
        .derivative_jumps(1)
        .iter()
        .map(|(_, j)| j.norm())
        .sum::<f64>()
        + h2.value
        + h2.error
        + h.derivative_tail_abs(t_end, 2);
    let mut cross = 0.0;
    for (a, ja) in &jumps {
        for (b, jb) in &jumps {
            if a != b {
                cross += 4.0 * ja.norm() * jb.norm() / (a - b).abs();
            }
        }
    }
    let c2 = cross + 2.0 * j_tot * k_const;
    let c3 = 2.0 * k_const * k_const / 3.0;
    let budget = 1e-11 * target;
    let fastest = h
        .exp_terms()
        .iter()
        .map(|e| e.decay.norm())
        .fold(1.0, f64::max);
    let mut u_end = 1e3 * fastest;
    while c2 / (u_end * u_end) + c3 / u_end.powi(3) > budget && u_end < 1e8 {
        u_end *= 2.0;
    }
    let neglected = c2 / (u_end * u_end) + c3 / u_end.powi(3);

    let beta_max = h.breakpoints().last().copied().unwrap_or(0.0);
    let mut half = vec![0.0];
    let mut x = 0.25 / fastest;
    while x < u_end {
        let next = (2.0 * x).min(u_end);
        let sub = ((next - x) * beta_max / 2.0).ceil() as usize + 1;
        for k in 1..=sub {
            half.push(x + (next - x) * k as f64 / sub as f64);
        }
        x = next;
    }
    half.insert(1, 0.25 / fastest);
    half.dedup();
    let mut sym: Vec<f64> = half.iter().rev().map(|x| -x).collect();
    sym.extend_from_slice(&half[1..]);
    let main = quad::integrate_unchecked(
        |u: f64| h.fourier(u).norm_sqr(),
        &sym,
        QuadOptions {
            abs_tol: 1e-12 * target,
            max_intervals: sym.len() + 200_000,
        },
    );
    let diag: f64 = jumps.iter().map(|(_, j)| j.norm_sqr()).sum::<f64>() * 2.0 / u_end;
    let freq = main.value + diag;
    let value = (freq / target).sqrt();
    let error = 0.5 * value * ((main.error + neglected) / freq + l2.error / l2.value);
    Ok(Estimate { value, error })
}
