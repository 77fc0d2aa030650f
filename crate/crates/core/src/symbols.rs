//! Integrable weights on ℝ₊ in closed exponential-polynomial form, their
//! convolutions and transforms, and the multiplier symbols built from them.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::linalg::{C64, ONE, ZERO};
use crate::quad::{self, QuadOptions};
use crate::{Error, Result};

/// `coeff·(t−shift)^power·e^{−decay·(t−shift)}` on `[shift, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coeff: C64,
    pub decay: C64,
    pub power: u32,
    pub shift: f64,
}

/// `coeff·(t−start)^power` on `[start, end)`. With `power = 0` this is an
/// indicator term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub coeff: C64,
    pub power: u32,
    pub start: f64,
    pub end: f64,
}

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weight {
    exp_terms: Vec<ExpTerm>,
    segments: Vec<Segment>,
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `∫_x^∞ s^p e^{−αs} ds` for `x ≥ 0`, `α > 0`.
pub(crate) fn upper_gamma_int(p: u32, alpha: f64, x: f64) -> f64 {
    let y = alpha * x.max(0.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=p {
        term *= y / j as f64;
        sum += term;
    }
    factorial(p) / alpha.powi(p as i32 + 1) * (-y).exp() * sum
}

impl ExpTerm {
    pub fn new(coeff: C64, decay: C64, power: u32, shift: f64) -> Result<Self> {
        if !finite(coeff) || !finite(decay) || !shift.is_finite() {
            return Err(Error::NonFinite("exponential term"));
        }
        if decay.re <= 0.0 {
            return Err(Error::invalid(format!(
                "decay {decay} must have strictly positive real part"
            )));
        }
        if shift < 0.0 {
            return Err(Error::invalid("shift must be non-negative"));
        }
        Ok(ExpTerm {
            coeff,
            decay,
            power,
            shift,
        })
    }

    fn eval(&self, t: f64) -> C64 {
        if t < self.shift {
            return ZERO;
        }
        let x = t - self.shift;
        self.coeff * x.powi(self.power as i32) * (-self.decay * x).exp()
    }

    fn derivative(&self, t: f64, k: u32) -> C64 {
        if t < self.shift {
            return ZERO;
        }
        let x = t - self.shift;
        let p = self.power;
        let mut s = ZERO;
        for i in 0..=k.min(p) {
            let falling = factorial(p) / factorial(p - i);
            s += (-self.decay).powu(k - i) * (binomial(k, i) * falling * x.powi((p - i) as i32));
        }
        self.coeff * s * (-self.decay * x).exp()
    }

    fn l1(&self) -> f64 {
        self.coeff.norm() * factorial(self.power) / self.decay.re.powi(self.power as i32 + 1)
    }

    fn tail_abs(&self, t: f64) -> f64 {
        let x = (t - self.shift).max(0.0);
        self.coeff.norm() * upper_gamma_int(self.power, self.decay.re, x)
    }

    fn laplace(&self, z: C64) -> C64 {
        self.coeff * (-z * self.shift).exp() * factorial(self.power)
            / (z + self.decay).powu(self.power + 1)
    }
}

impl Segment {
    pub fn new(coeff: C64, power: u32, start: f64, end: f64) -> Result<Self> {
        if !finite(coeff) || !start.is_finite() || !end.is_finite() {
            return Err(Error::NonFinite("segment term"));
        }
        if !(0.0 <= start && start < end) {
            return Err(Error::invalid(format!(
                "segment interval [{start}, {end}) must satisfy 0 ≤ a < b < ∞"
            )));
        }
        Ok(Segment {
            coeff,
            power,
            start,
            end,
        })
    }

    fn len(&self) -> f64 {
        self.end - self.start
    }

    fn eval(&self, t: f64) -> C64 {
        if t < self.start || t >= self.end {
            return ZERO;
        }
        self.coeff * (t - self.start).powi(self.power as i32)
    }

    fn derivative(&self, t: f64, k: u32) -> C64 {
        if t < self.start || t >= self.end || k > self.power {
            return ZERO;
        }
        let falling = factorial(self.power) / factorial(self.power - k);
        self.coeff * falling * (t - self.start).powi((self.power - k) as i32)
    }

    fn l1(&self) -> f64 {
        self.coeff.norm() * self.len().powi(self.power as i32 + 1) / (self.power as f64 + 1.0)
    }

    fn tail_abs(&self, t: f64) -> f64 {
        if t >= self.end {
            return 0.0;
        }
        let k = self.power as i32 + 1;
        let from = (t - self.start).max(0.0);
        self.coeff.norm() * (self.len().powi(k) - from.powi(k)) / k as f64
    }

    fn laplace(&self, z: C64) -> C64 {
        self.coeff * (-z * self.start).exp() * truncated_moment(self.power, z, self.len())
    }

    /// Polynomial atoms `coeff·(t−shift)^power·H(t−shift)` summing to this segment.
    fn atoms(&self) -> Vec<Atom> {
        let k = self.power;
        let mut out = vec![Atom {
            coeff: self.coeff,
            power: k,
            shift: self.start,
        }];
        for j in 0..=k {
            out.push(Atom {
                coeff: -self.coeff * binomial(k, j) * self.len().powi((k - j) as i32),
                power: j,
                shift: self.end,
            });
        }
        out
    }
}

/// `∫_0^L x^k e^{−zx} dx`.
fn truncated_moment(k: u32, z: C64, len: f64) -> C64 {
    let w = z * len;
    let lk1 = len.powi(k as i32 + 1);
    if w.norm() <= k as f64 + 4.0 {
        // k!·L^{k+1}·e^{−w}·Σ_{m≥0} w^m/(k+1+m)!
        let mut term = C64::new(1.0 / factorial(k + 1), 0.0);
        let mut sum = term;
        for m in 1..400u32 {
            term *= w / (k + 1 + m) as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        factorial(k) * lk1 * (-w).exp() * sum
    } else {
        let mut term = ONE;
        let mut partial = ONE;
        for j in 1..=k {
            term *= w / j as f64;
            partial += term;
        }
        factorial(k) / z.powu(k + 1) * (ONE - (-w).exp() * partial)
    }
}

#[derive(Debug, Clone, Copy)]
struct Atom {
    coeff: C64,
    power: u32,
    shift: f64,
}

/// Partial fractions of `1/((z+λ)^{p+1}(z+κ)^{q+1})` for `λ ≠ κ`:
/// coefficients of `1/(z+λ)^k` (k = 1..p+1) and of `1/(z+κ)^k` (k = 1..q+1).
fn partial_fractions(p: u32, q: u32, lam: C64, kap: C64) -> (Vec<C64>, Vec<C64>) {
    let delta = kap - lam;
    let a = (1..=p + 1)
        .map(|k| {
            let j = p + 1 - k;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            delta.powu(q + 1 + j).inv() * (sign * binomial(q + j, j))
        })
        .collect();
    let b = (1..=q + 1)
        .map(|k| {
            let j = q + 1 - k;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            (-delta).powu(p + 1 + j).inv() * (sign * binomial(p + j, j))
        })
        .collect();
    (a, b)
}

/// Decays closer than this (relative) are treated as equal when convolving.
const EQUAL_DECAY_RTOL: f64 = 1e-12;

fn decays_equal(a: C64, b: C64) -> bool {
    (a - b).norm() <= EQUAL_DECAY_RTOL * a.norm().max(b.norm()).max(1.0)
}

fn conv_exp_exp(f: &ExpTerm, g: &ExpTerm, out: &mut Weight) {
    let (p, q) = (f.power, g.power);
    let shift = f.shift + g.shift;
    let base = f.coeff * g.coeff * (factorial(p) * factorial(q));
    if decays_equal(f.decay, g.decay) {
        let lam = 0.5 * (f.decay + g.decay);
        out.exp_terms.push(ExpTerm {
            coeff: base / factorial(p + q + 1),
            decay: lam,
            power: p + q + 1,
            shift,
        });
        return;
    }
    let (a, b) = partial_fractions(p, q, f.decay, g.decay);
    for (k, ak) in a.into_iter().enumerate() {
        out.exp_terms.push(ExpTerm {
            coeff: base * ak / factorial(k as u32),
            decay: f.decay,
            power: k as u32,
            shift,
        });
    }
    for (k, bk) in b.into_iter().enumerate() {
        out.exp_terms.push(ExpTerm {
            coeff: base * bk / factorial(k as u32),
            decay: g.decay,
            power: k as u32,
            shift,
        });
    }
}

fn conv_exp_seg(f: &ExpTerm, s: &Segment, out: &mut Weight) {
    let p = f.power;
    for (idx, atom) in s.atoms().into_iter().enumerate() {
        let j = atom.power;
        let shift = f.shift + atom.shift;
        let base = f.coeff * atom.coeff * (factorial(p) * factorial(j));
        // κ = 0: the atom is a one-sided polynomial.
        let (a, b) = partial_fractions(p, j, f.decay, ZERO);
        for (k, ak) in a.into_iter().enumerate() {
            out.exp_terms.push(ExpTerm {
                coeff: base * ak / factorial(k as u32),
                decay: f.decay,
                power: k as u32,
                shift,
            });
        }
        // Polynomial parts of the atoms cancel beyond the segment end; only the
        // atom at the segment start contributes, on [f.shift+start, f.shift+end).
        if idx == 0 {
            for (k, bk) in b.into_iter().enumerate() {
                out.segments.push(Segment {
                    coeff: base * bk / factorial(k as u32),
                    power: k as u32,
                    start: f.shift + s.start,
                    end: f.shift + s.end,
                });
            }
        }
    }
}

fn conv_seg_seg(s1: &Segment, s2: &Segment, out: &mut Weight) {
    let mut atoms = Vec::new();
    for a1 in s1.atoms() {
        for a2 in s2.atoms() {
            let m = a1.power + a2.power + 1;
            atoms.push(Atom {
                coeff: a1.coeff
                    * a2.coeff
                    * (factorial(a1.power) * factorial(a2.power) / factorial(m)),
                power: m,
                shift: a1.shift + a2.shift,
            });
        }
    }
    let scale = s1.end + s2.end;
    let mut cuts: Vec<f64> = atoms.iter().map(|a| a.shift).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * scale);
    let same = |x: f64, y: f64| (x - y).abs() <= 1e-13 * scale;
    let top = atoms.iter().map(|a| a.power).max().unwrap_or(0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut poly = vec![ZERO; top as usize + 1];
        for a in atoms.iter().filter(|a| a.shift < lo || same(a.shift, lo)) {
            let off = lo - a.shift;
            for j in 0..=a.power {
                poly[j as usize] += a.coeff * binomial(a.power, j) * off.powi((a.power - j) as i32);
            }
        }
        for (j, cj) in poly.into_iter().enumerate() {
            if cj != ZERO {
                out.segments.push(Segment {
                    coeff: cj,
                    power: j as u32,
                    start: lo,
                    end: hi,
                });
            }
        }
    }
}

impl Weight {
    pub fn new(exp_terms: Vec<ExpTerm>, segments: Vec<Segment>) -> Result<Self> {
        for t in &exp_terms {
            ExpTerm::new(t.coeff, t.decay, t.power, t.shift)?;
        }
        for s in &segments {
            Segment::new(s.coeff, s.power, s.start, s.end)?;
        }
        Ok(Weight {
            exp_terms,
            segments,
        })
    }

    pub fn zero() -> Self {
        Weight::default()
    }

    /// `coeff·e^{−decay·t}`.
    pub fn exponential(coeff: C64, decay: C64) -> Result<Self> {
        Self::exp_poly(coeff, decay, 0, 0.0)
    }

    pub fn exp_poly(coeff: C64, decay: C64, power: u32, shift: f64) -> Result<Self> {
        Ok(Weight {
            exp_terms: vec![ExpTerm::new(coeff, decay, power, shift)?],
            segments: Vec::new(),
        })
    }

    pub fn indicator(coeff: C64, a: f64, b: f64) -> Result<Self> {
        Self::segment(coeff, 0, a, b)
    }

    pub fn segment(coeff: C64, power: u32, a: f64, b: f64) -> Result<Self> {
        Ok(Weight {
            exp_terms: Vec::new(),
            segments: vec![Segment::new(coeff, power, a, b)?],
        })
    }

    pub fn exp_terms(&self) -> &[ExpTerm] {
        &self.exp_terms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.exp_terms.iter().all(|t| t.coeff == ZERO)
            && self.segments.iter().all(|s| s.coeff == ZERO)
    }

    pub fn plus(&self, other: &Weight) -> Weight {
        let mut out = self.clone();
        out.exp_terms.extend_from_slice(&other.exp_terms);
        out.segments.extend_from_slice(&other.segments);
        out.merged()
    }

    pub fn scaled(&self, lambda: C64) -> Weight {
        let mut out = self.clone();
        for t in &mut out.exp_terms {
            t.coeff *= lambda;
        }
        for s in &mut out.segments {
            s.coeff *= lambda;
        }
        out
    }

    /// Collects terms with identical parameters.
    fn merged(mut self) -> Weight {
        let mut exp: Vec<ExpTerm> = Vec::with_capacity(self.exp_terms.len());
        for t in self.exp_terms.drain(..) {
            match exp
                .iter_mut()
                .find(|u| u.decay == t.decay && u.power == t.power && u.shift == t.shift)
            {
                Some(u) => u.coeff += t.coeff,
                None => exp.push(t),
            }
        }
        let mut segs: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in self.segments.drain(..) {
            match segs
                .iter_mut()
                .find(|u| u.power == s.power && u.start == s.start && u.end == s.end)
            {
                Some(u) => u.coeff += s.coeff,
                None => segs.push(s),
            }
        }
        exp.retain(|t| t.coeff != ZERO);
        segs.retain(|s| s.coeff != ZERO);
        Weight {
            exp_terms: exp,
            segments: segs,
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.exp_terms.iter().map(|e| e.eval(t)).sum::<C64>()
            + self.segments.iter().map(|s| s.eval(t)).sum::<C64>()
    }

    /// k-th derivative, taken from the right at breakpoints.
    pub fn eval_derivative(&self, t: f64, k: u32) -> C64 {
        self.exp_terms
            .iter()
            .map(|e| e.derivative(t, k))
            .sum::<C64>()
            + self
                .segments
                .iter()
                .map(|s| s.derivative(t, k))
                .sum::<C64>()
    }

    /// Sorted distinct points where the weight or a derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.exp_terms.iter().map(|t| t.shift).collect();
        for s in &self.segments {
            pts.push(s.start);
            pts.push(s.end);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Value jumps `b(τ⁺) − b(τ⁻)` at every breakpoint `τ`.
    pub fn jumps(&self) -> Vec<(f64, C64)> {
        let mut out: Vec<(f64, C64)> = Vec::new();
        let mut add = |tau: f64, v: C64| match out.iter_mut().find(|(x, _)| *x == tau) {
            Some((_, w)) => *w += v,
            None => out.push((tau, v)),
        };
        for t in &self.exp_terms {
            if t.power == 0 {
                add(t.shift, t.coeff);
            }
        }
        for s in &self.segments {
            if s.power == 0 {
                add(s.start, s.coeff);
            }
            add(s.end, -s.coeff * s.len().powi(s.power as i32));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Jumps `b^{(k)}(τ⁺) − b^{(k)}(τ⁻)` of the k-th derivative at every breakpoint.
    pub(crate) fn derivative_jumps(&self, k: u32) -> Vec<(f64, C64)> {
        let mut out: Vec<(f64, C64)> = Vec::new();
        let mut add = |tau: f64, v: C64| match out.iter_mut().find(|(x, _)| *x == tau) {
            Some((_, w)) => *w += v,
            None => out.push((tau, v)),
        };
        for t in &self.exp_terms {
            add(t.shift, t.derivative(t.shift, k));
        }
        for s in &self.segments {
            add(s.start, s.derivative(s.start, k));
            if k <= s.power {
                let falling = factorial(s.power) / factorial(s.power - k);
                add(
                    s.end,
                    -s.coeff * falling * s.len().powi((s.power - k) as i32),
                );
            }
        }
        out.retain(|(_, v)| *v != ZERO);
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Upper bound for `∫_t^∞ |b^{(k)}|`.
    pub(crate) fn derivative_tail_abs(&self, t: f64, k: u32) -> f64 {
        let e: f64 = self
            .exp_terms
            .iter()
            .map(|e| {
                let x = (t - e.shift).max(0.0);
                let p = e.power;
                (0..=k.min(p))
                    .map(|i| {
                        let falling = factorial(p) / factorial(p - i);
                        binomial(k, i)
                            * falling
                            * e.decay.norm().powi((k - i) as i32)
                            * upper_gamma_int(p - i, e.decay.re, x)
                    })
                    .sum::<f64>()
                    * e.coeff.norm()
            })
            .sum();
        let s: f64 = self
            .segments
            .iter()
            .filter(|s| t < s.end && k <= s.power)
            .map(|s| {
                let falling = factorial(s.power) / factorial(s.power - k);
                s.coeff.norm()
                    * falling
                    * s.len().powi((s.power - k) as i32)
                    * (s.end - t.max(s.start))
            })
            .sum();
        e + s
    }

    /// Triangle-inequality bound `Σ ‖term‖₁`, exact for a single term.
    pub fn l1_bound(&self) -> f64 {
        self.exp_terms.iter().map(ExpTerm::l1).sum::<f64>()
            + self.segments.iter().map(Segment::l1).sum::<f64>()
    }

    /// Upper bound for `∫_t^∞ |b|`.
    pub fn tail_abs(&self, t: f64) -> f64 {
        self.exp_terms.iter().map(|e| e.tail_abs(t)).sum::<f64>()
            + self.segments.iter().map(|s| s.tail_abs(t)).sum::<f64>()
    }

    /// A point beyond every breakpoint with `∫_T^∞ |b| ≤ eps`.
    pub fn tail_point(&self, eps: f64) -> f64 {
        let bps = self.breakpoints();
        let mut t = bps.last().copied().unwrap_or(0.0) + 1.0;
        while self.tail_abs(t) > eps && t < 1e12 {
            t = 2.0 * t + 1.0;
        }
        t
    }

    /// `‖b‖₁`. Single terms are exact; sums go through adaptive quadrature of
    /// `|b|` with an analytic tail bound, reported in `error`.
    pub fn l1_norm(&self) -> Estimate {
        let bound = self.l1_bound();
        if self.exp_terms.len() + self.segments.len() <= 1 || bound == 0.0 {
            return Estimate {
                value: bound,
                error: 0.0,
            };
        }
        let tail_eps = 1e-15 * bound;
        let t_end = self.tail_point(tail_eps);
        let pts = self.quadrature_points(t_end);
        let q = quad::integrate_unchecked(
            |t| self.eval(t).norm(),
            &pts,
            QuadOptions::new(1e-13 * bound),
        );
        Estimate {
            value: q.value,
            error: q.error + self.tail_abs(t_end),
        }
    }

    /// `‖b‖₂²` by adaptive quadrature with an analytic tail bound.
    pub fn l2_norm_sqr(&self) -> Estimate {
        let bound = self.l1_bound();
        if bound == 0.0 {
            return Estimate {
                value: 0.0,
                error: 0.0,
            };
        }
        let t_end = self.tail_point(1e-15 * bound);
        let pts = self.quadrature_points(t_end);
        let sup = self.sup_bound();
        let q = quad::integrate_unchecked(
            |t| self.eval(t).norm_sqr(),
            &pts,
            QuadOptions::new(1e-14 * bound * sup),
        );
        Estimate {
            value: q.value,
            error: q.error + sup * self.tail_abs(t_end),
        }
    }

    /// Crude bound on `sup |b|`.
    pub fn sup_bound(&self) -> f64 {
        let e: f64 = self
            .exp_terms
            .iter()
            .map(|t| {
                let p = t.power as f64;
                let x = if p == 0.0 { 0.0 } else { p / t.decay.re };
                t.coeff.norm() * x.powf(p) * (-t.decay.re * x).exp()
            })
            .sum();
        let s: f64 = self
            .segments
            .iter()
            .map(|s| s.coeff.norm() * s.len().powi(s.power as i32))
            .sum();
        e + s
    }

    /// Breakpoints and panel boundaries on `[0, t_end]`, resolving each
    /// exponential's decay scale.
    pub(crate) fn quadrature_points(&self, t_end: f64) -> Vec<f64> {
        let fastest = self
            .exp_terms
            .iter()
            .map(|t| t.decay.norm())
            .fold(1.0, f64::max);
        let count = ((t_end * fastest / 4.0).ceil() as usize).clamp(8, 4000);
        let mut extra = self.breakpoints();
        extra.push(t_end);
        quad::panels(0.0, t_end, count, &extra)
    }

    /// Laplace transform `∫_0^∞ b(t)e^{−zt} dt`, evaluated term by term.
    pub fn laplace(&self, z: C64) -> Result<C64> {
        if !finite(z) {
            return Err(Error::NonFinite("Laplace argument"));
        }
        if z.re < 0.0 {
            return Err(Error::invalid(format!(
                "Laplace argument {z} has negative real part"
            )));
        }
        if z.re == 0.0 && self.exp_terms.iter().any(|t| t.decay.re <= 0.0) {
            return Err(Error::invalid(
                "boundary argument with a purely oscillatory decay",
            ));
        }
        Ok(self.laplace_unchecked(z))
    }

    fn laplace_unchecked(&self, z: C64) -> C64 {
        self.exp_terms.iter().map(|t| t.laplace(z)).sum::<C64>()
            + self.segments.iter().map(|s| s.laplace(z)).sum::<C64>()
    }

    /// Fourier transform `b̂(u) = ∫ b(t)e^{−itu} dt = L_b(iu)`.
    pub fn fourier(&self, u: f64) -> C64 {
        self.laplace_unchecked(C64::new(0.0, u))
    }

    /// Exact convolution `(self ∗ other)(t) = ∫_0^t self(x)·other(t−x) dx`.
    pub fn convolve(&self, other: &Weight) -> Weight {
        let mut out = Weight::zero();
        for f in &self.exp_terms {
            for g in &other.exp_terms {
                conv_exp_exp(f, g, &mut out);
            }
            for s in &other.segments {
                conv_exp_seg(f, s, &mut out);
            }
        }
        for s in &self.segments {
            for g in &other.exp_terms {
                conv_exp_seg(g, s, &mut out);
            }
            for s2 in &other.segments {
                conv_seg_seg(s, s2, &mut out);
            }
        }
        out.merged()
    }

    /// `b(t)·e^{−εt}` for `ε ≥ 0`.
    pub fn damped(&self, eps: f64) -> Result<Weight> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::invalid(
                "damping must be a finite non-negative number",
            ));
        }
        if eps == 0.0 {
            return Ok(self.clone());
        }
        let mut out = Weight::zero();
        for t in &self.exp_terms {
            out.exp_terms.push(ExpTerm {
                coeff: t.coeff * (-eps * t.shift).exp(),
                decay: t.decay + eps,
                power: t.power,
                shift: t.shift,
            });
        }
        for s in &self.segments {
            let c0 = s.coeff * (-eps * s.start).exp();
            out.exp_terms.push(ExpTerm {
                coeff: c0,
                decay: C64::new(eps, 0.0),
                power: s.power,
                shift: s.start,
            });
            let k = s.power;
            let damp_len = (-eps * s.len()).exp();
            for j in 0..=k {
                out.exp_terms.push(ExpTerm {
                    coeff: -c0 * damp_len * binomial(k, j) * s.len().powi((k - j) as i32),
                    decay: C64::new(eps, 0.0),
                    power: j,
                    shift: s.end,
                });
            }
        }
        Ok(out.merged())
    }
}

impl core::ops::Add for &Weight {
    type Output = Weight;
    fn add(self, rhs: &Weight) -> Weight {
        self.plus(rhs)
    }
}

/// Closed-form Laplace transform of a weight.
pub fn laplace_transform(w: &Weight, z: C64) -> Result<C64> {
    w.laplace(z)
}

/// Closed-form convolution of two weights.
pub fn convolve_weights(c: &Weight, d: &Weight) -> Weight {
    c.convolve(d)
}

/// `Ψ = Σ c_j ⊗ d_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorWeight {
    id: String,
    pairs: Vec<(Weight, Weight)>,
}

impl TensorWeight {
    pub fn new(id: impl Into<String>, pairs: Vec<(Weight, Weight)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("tensor weight needs at least one pair"));
        }
        Ok(TensorWeight {
            id: id.into(),
            pairs,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn pairs(&self) -> &[(Weight, Weight)] {
        &self.pairs
    }

    /// `b = Σ c_j ∗ d_j`.
    pub fn convolution(&self) -> Weight {
        self.pairs
            .iter()
            .fold(Weight::zero(), |acc, (c, d)| acc.plus(&c.convolve(d)))
    }

    pub fn eval(&self, s: f64, u: f64) -> C64 {
        self.pairs.iter().map(|(c, d)| c.eval(s) * d.eval(u)).sum()
    }

    pub fn scaled(&self, lambda: C64) -> TensorWeight {
        TensorWeight {
            id: self.id.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|(c, d)| (c.scaled(lambda), d.clone()))
                .collect(),
        }
    }
}

/// Closed-form description of a factorization `m(s+t) = ⟨α(t), β(s)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorWitnessSpec {
    pub description: String,
    /// Upper bound for `sup‖α‖·sup‖β‖`, hence for ν₂ of the kernel.
    pub nu2_bound: f64,
}

#[derive(Clone)]
pub enum CustomSymbol {
    Constant(C64),
    /// `u ↦ e^{−rate·u}`, the transform of a point mass at `rate`.
    Exponential {
        rate: f64,
    },
    Function(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl fmt::Debug for CustomSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CustomSymbol::Constant(c) => write!(f, "Constant({c})"),
            CustomSymbol::Exponential { rate } => write!(f, "Exponential {{ rate: {rate} }}"),
            CustomSymbol::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SymbolKind {
    LaplaceOfWeight(Weight),
    PowerImaginary { r: f64 },
    Shifted { base: Box<Symbol>, eps: f64 },
    Custom(CustomSymbol),
}

#[derive(Debug, Clone)]
pub struct Symbol {
    id: String,
    kind: SymbolKind,
    witness: Option<FactorWitnessSpec>,
}

impl Symbol {
    pub fn laplace_of(id: impl Into<String>, w: Weight) -> Self {
        let l1 = w.l1_norm();
        let witness = FactorWitnessSpec {
            description: String::from(
                "alpha(t) = phase(w)·e^{-tτ}, beta(s) = e^{-sτ} in L²(|w(τ)| dτ)",
            ),
            nu2_bound: l1.value + l1.error,
        };
        Symbol {
            id: id.into(),
            kind: SymbolKind::LaplaceOfWeight(w),
            witness: Some(witness),
        }
    }

    pub fn power_imaginary(id: impl Into<String>, r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::NonFinite("power-imaginary exponent"));
        }
        Ok(Symbol {
            id: id.into(),
            kind: SymbolKind::PowerImaginary { r },
            witness: None,
        })
    }

    pub fn shifted(id: impl Into<String>, base: Symbol, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid("shift ε must be a positive finite number"));
        }
        let witness = base.witness.clone().map(|w| FactorWitnessSpec {
            description: format!("base witness at t+ε/2, s+ε/2 ({})", w.description),
            nu2_bound: w.nu2_bound,
        });
        Ok(Symbol {
            id: id.into(),
            kind: SymbolKind::Shifted {
                base: Box::new(base),
                eps,
            },
            witness,
        })
    }

    pub fn constant(id: impl Into<String>, value: C64) -> Self {
        Symbol {
            id: id.into(),
            kind: SymbolKind::Custom(CustomSymbol::Constant(value)),
            witness: Some(FactorWitnessSpec {
                description: String::from("alpha = value, beta = 1"),
                nu2_bound: value.norm(),
            }),
        }
    }

    pub fn exponential(id: impl Into<String>, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::invalid(
                "exponential rate must be finite and non-negative",
            ));
        }
        Ok(Symbol {
            id: id.into(),
            kind: SymbolKind::Custom(CustomSymbol::Exponential { rate }),
            witness: Some(FactorWitnessSpec {
                description: String::from("alpha(t) = e^{-rate·t}, beta(s) = e^{-rate·s}"),
                nu2_bound: 1.0,
            }),
        })
    }

    pub fn custom(
        id: impl Into<String>,
        f: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
        witness: Option<FactorWitnessSpec>,
    ) -> Self {
        Symbol {
            id: id.into(),
            kind: SymbolKind::Custom(CustomSymbol::Function(f)),
            witness,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn witness(&self) -> Option<&FactorWitnessSpec> {
        self.witness.as_ref()
    }

    /// `m(u)` for `u > 0`.
    pub fn eval(&self, u: f64) -> Result<C64> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::invalid(format!(
                "symbol argument {u} must be a positive real"
            )));
        }
        Ok(self.eval_positive(u))
    }

    fn eval_positive(&self, u: f64) -> C64 {
        match &self.kind {
            SymbolKind::LaplaceOfWeight(w) => w.laplace_unchecked(C64::new(u, 0.0)),
            SymbolKind::PowerImaginary { r } => {
                let ang = r * u.ln();
                C64::new(ang.cos(), ang.sin())
            }
            SymbolKind::Shifted { base, eps } => base.eval_positive(eps + u),
            SymbolKind::Custom(CustomSymbol::Constant(c)) => *c,
            SymbolKind::Custom(CustomSymbol::Exponential { rate }) => {
                C64::new((-rate * u).exp(), 0.0)
            }
            SymbolKind::Custom(CustomSymbol::Function(f)) => f(u),
        }
    }
}

/// `m(u)`; rejects `u ≤ 0`.
pub fn eval_symbol(m: &Symbol, u: f64) -> Result<C64> {
    m.eval(u)
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonSpec {
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for PoissonSpec {
    fn default() -> Self {
        PoissonSpec {
            tol: 1e-9,
            max_intervals: 400_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonResult {
    pub value: C64,
    /// Quadrature error estimate plus the analytic tail bound.
    pub error: f64,
    /// Half-width `R` of the quadrature window `[−R, R]`.
    pub window: f64,
}

/// Poisson integral of the boundary function `F = b̂(−·)` evaluated at `iz`.
/// In the right half-plane this reproduces `L_b(z)`.
pub fn poisson_tilde(b: &Weight, z: C64, spec: &PoissonSpec) -> Result<PoissonResult> {
    if !finite(z) {
        return Err(Error::NonFinite("Poisson argument"));
    }
    if !(z.re > 0.0) {
        return Err(Error::invalid("Poisson argument needs Re z > 0"));
    }
    if b.is_zero() {
        return Ok(PoissonResult {
            value: ZERO,
            error: 0.0,
            window: 0.0,
        });
    }
    let (x, y) = (z.re, z.im);
    // |F(t)| ≤ B/|t| for |t| ≥ t0.
    let t0 = b
        .exp_terms
        .iter()
        .map(|t| 2.0 * t.decay.im.abs())
        .fold(1.0, f64::max);
    let big_b: f64 = b
        .exp_terms
        .iter()
        .map(|t| {
            t.coeff.norm() * factorial(t.power) * 2f64.powi(t.power as i32 + 1)
                / t0.powi(t.power as i32)
        })
        .sum::<f64>()
        + b.segments
            .iter()
            .map(|s| 2.0 * s.coeff.norm() * s.len().powi(s.power as i32))
            .sum::<f64>();
    let tail = |r: f64| big_b / (PI * r) * ((x / (r + y)).atan() + (x / (r - y)).atan());
    let mut r = t0.max(2.0 * y.abs() + 10.0 * x).max(10.0);
    while tail(r) > 0.5 * spec.tol {
        r *= 2.0;
        if r > 1e12 {
            return Err(Error::Quadrature {
                estimate: tail(r),
                requested: spec.tol,
            });
        }
    }
    let span = b.breakpoints().last().copied().unwrap_or(0.0)
        + b.exp_terms
            .iter()
            .map(|t| t.decay.im.abs())
            .fold(0.0, f64::max);
    let count = ((2.0 * r * span / PI).ceil() as usize).clamp(64, spec.max_intervals / 4);
    let mut extra = vec![-y];
    let mut h = x;
    while h < r {
        extra.push(-y - h);
        extra.push(-y + h);
        h *= 4.0;
    }
    let pts = quad::panels(-r, r, count, &extra);
    let q = quad::integrate(
        |t: f64| {
            let kernel = x / (PI * ((t + y) * (t + y) + x * x));
            b.laplace_unchecked(C64::new(0.0, -t)) * kernel
        },
        &pts,
        QuadOptions {
            abs_tol: 0.5 * spec.tol,
            max_intervals: spec.max_intervals,
        },
    )?;
    Ok(PoissonResult {
        value: q.value,
        error: q.error + tail(r),
        window: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn e(decay: f64) -> Weight {
        Weight::exponential(ONE, c(decay, 0.0)).unwrap()
    }

    /// Direct numerical convolution, used as an independent oracle.
    fn conv_oracle(f: &Weight, g: &Weight, t: f64) -> C64 {
        let mut pts = vec![0.0, t];
        for bp in f.breakpoints() {
            if bp > 0.0 && bp < t {
                pts.push(bp);
            }
        }
        for bp in g.breakpoints() {
            if t - bp > 0.0 && t - bp < t {
                pts.push(t - bp);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        quad::integrate(|x| f.eval(x) * g.eval(t - x), &pts, QuadOptions::new(1e-13))
            .unwrap()
            .value
    }

    #[test]
    fn laplace_examples() {
        assert!((e(1.0).laplace(ONE).unwrap() - 0.5).norm() < 1e-15);
        let ind = Weight::indicator(ONE, 0.0, 1.0).unwrap();
        assert!((ind.laplace(ONE).unwrap().re - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let cd = e(1.0).convolve(&e(1.0));
        assert!((cd.laplace(c(2.0, 0.0)).unwrap() - 1.0 / 9.0).norm() < 1e-15);
    }

    #[test]
    fn laplace_rejects_left_half_plane() {
        assert!(e(1.0).laplace(c(-0.1, 0.0)).is_err());
        assert!(e(1.0).laplace(c(0.0, 3.0)).is_ok());
    }

    #[test]
    fn truncated_moment_matches_quadrature_across_regimes() {
        for &k in &[0u32, 1, 3, 6] {
            for &z in &[
                c(1e-9, 0.0),
                c(0.3, 2.0),
                c(4.0, -7.0),
                c(0.0, 35.0),
                c(12.0, 0.5),
            ] {
                let len = 1.7;
                let direct = quad::integrate(
                    |x: f64| (-z * x).exp() * x.powi(k as i32),
                    &quad::panels(0.0, len, 16, &[]),
                    QuadOptions::new(1e-13),
                )
                .unwrap()
                .value;
                let fast = truncated_moment(k, z, len);
                assert!(
                    (fast - direct).norm() <= 1e-12 * direct.norm().max(1e-2),
                    "k={k} z={z}"
                );
            }
        }
    }

    #[test]
    fn convolution_examples() {
        let te = e(1.0).convolve(&e(1.0));
        assert_eq!(te.exp_terms().len(), 1);
        assert_eq!(te.exp_terms()[0].power, 1);
        assert!((te.eval(2.0) - 2.0 * (-2.0f64).exp()).norm() < 1e-15);

        let diff = e(1.0).convolve(&e(2.0));
        for &t in &[0.1f64, 1.0, 3.5] {
            let want = (-t).exp() - (-2.0 * t).exp();
            assert!((diff.eval(t).re - want).abs() < 1e-15);
        }

        let ind = Weight::indicator(ONE, 0.0, 1.0).unwrap();
        let tent = ind.convolve(&ind);
        for &(t, v) in &[
            (0.0, 0.0),
            (0.5, 0.5),
            (1.0, 1.0),
            (1.5, 0.5),
            (2.0, 0.0),
            (2.5, 0.0),
        ] {
            assert!((tent.eval(t).re - v).abs() < 1e-14, "tent({t})");
        }
    }

    #[test]
    fn mixed_convolutions_agree_with_direct_integration() {
        let a = Weight::exp_poly(c(1.0, 0.5), c(1.0, 1.0), 2, 0.3).unwrap();
        let b = Weight::segment(c(-0.7, 0.0), 2, 0.2, 1.1).unwrap();
        let d = Weight::indicator(c(0.4, 0.0), 0.5, 2.0).unwrap();
        let cases = [
            (a.clone(), b.clone()),
            (b.clone(), d.clone()),
            (d.clone(), a.clone()),
        ];
        for (f, g) in &cases {
            let h = f.convolve(g);
            for &t in &[0.1, 0.7, 1.3, 2.2, 3.9, 6.0] {
                let want = conv_oracle(f, g, t);
                assert!(
                    (h.eval(t) - want).norm() < 1e-11,
                    "t={t}: {} vs {}",
                    h.eval(t),
                    want
                );
            }
        }
    }

    #[test]
    fn damping_matches_pointwise_product() {
        let w = Weight::segment(c(1.0, -1.0), 2, 0.5, 1.5)
            .unwrap()
            .plus(&Weight::exp_poly(c(2.0, 0.0), c(0.5, 0.0), 1, 1.0).unwrap());
        let d = w.damped(0.7).unwrap();
        for &t in &[0.2, 0.6, 1.2, 1.49, 2.5] {
            let want = w.eval(t) * (-0.7 * t).exp();
            assert!((d.eval(t) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn l1_norm_of_sum_with_cancellation() {
        // e^{-t} − e^{-2t} is non-negative with integral 1/2.
        let w = e(1.0).plus(&e(2.0).scaled(c(-1.0, 0.0)));
        let n = w.l1_norm();
        assert!((n.value - 0.5).abs() < 1e-12);
        // e^{-t} − 2e^{-2t} changes sign at ln 2.
        let w = e(1.0).plus(&e(2.0).scaled(c(-2.0, 0.0)));
        let exact = 0.5;
        assert!((w.l1_norm().value - exact).abs() < 1e-12);
    }

    #[test]
    fn symbol_examples() {
        let lap = Symbol::laplace_of("lap", e(1.0));
        assert!((lap.eval(1.0).unwrap() - 0.5).norm() < 1e-15);
        let pw = Symbol::power_imaginary("pw", 1.0).unwrap();
        assert!((pw.eval(1.0).unwrap() - ONE).norm() < 1e-15);
        let ex = Symbol::exponential("ex", 1.0).unwrap();
        let sh = Symbol::shifted("sh", ex, 1.0).unwrap();
        assert!((sh.eval(1.0).unwrap().re - (-2.0f64).exp()).abs() < 1e-15);
        assert!(pw.eval(0.0).is_err());
        assert!(pw.eval(-1.0).is_err());
    }

    #[test]
    fn poisson_examples() {
        let spec = PoissonSpec::default();
        let r = poisson_tilde(&e(1.0), ONE, &spec).unwrap();
        assert!((r.value - 0.5).norm() <= r.error.max(1e-12));
        let z = c(2.0, 1.0);
        let r = poisson_tilde(&e(1.0), z, &spec).unwrap();
        assert!((r.value - c(0.3, -0.1)).norm() <= r.error + 1e-12);
        let te = Weight::exp_poly(ONE, ONE, 1, 0.0).unwrap();
        let r = poisson_tilde(&te, ONE, &spec).unwrap();
        assert!((r.value - 0.25).norm() <= r.error + 1e-12);
    }
}
