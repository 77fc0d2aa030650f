//! Globally adaptive Gauss–Kronrod (7/15) quadrature for scalar, complex and
//! matrix-valued integrands.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::linalg::{CMat, C64};
use crate::{Error, Result};

/// Values that can be accumulated by the quadrature driver.
pub trait Integrand: Clone {
    fn scaled(&self, a: f64) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    /// Any norm; the error estimate is reported in it.
    fn norm(&self) -> f64;
}

impl Integrand for f64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for C64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
    fn norm(&self) -> f64 {
        C64::norm(*self)
    }
}

impl Integrand for CMat {
    fn scaled(&self, a: f64) -> Self {
        self.map(|z| z * a)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, v| *s += v * a);
    }
    /// Frobenius norm, an upper bound for the spectral norm.
    fn norm(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl QuadOptions {
    pub fn new(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Quad<V> {
    pub value: V,
    pub error: f64,
    pub intervals: usize,
}

struct Piece<V> {
    a: f64,
    b: f64,
    value: V,
    err: f64,
}

impl<V> PartialEq for Piece<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<V> Eq for Piece<V> {}
impl<V> PartialOrd for Piece<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Piece<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<V: Integrand, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> Piece<V> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.scaled(WGK[7]);
    let mut gauss = fc.scaled(WG[3]);
    let mut resabs = WGK[7] * fc.norm();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        resabs += WGK[j] * (f1.norm() + f2.norm());
        kron.axpy(WGK[j], &f1);
        kron.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.axpy(WG[j / 2], &f1);
            gauss.axpy(WG[j / 2], &f2);
        }
    }
    let value = kron.scaled(half);
    let mut diff = kron;
    diff.axpy(-1.0, &gauss);
    let round = 50.0 * f64::EPSILON * resabs * half.abs();
    let err = (diff.norm() * half.abs()).max(round);
    Piece { a, b, value, err }
}

/// Integrates `f` over `[points[0], points[last]]`, splitting first at every
/// listed breakpoint. Returns the best estimate even if the tolerance was not
/// reached; use [`integrate`] for the checked variant.
pub fn integrate_unchecked<V, F>(mut f: F, points: &[f64], opts: QuadOptions) -> Quad<V>
where
    V: Integrand,
    F: FnMut(f64) -> V,
{
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let p = gk15(&mut f, w[0], w[1]);
            total_err += p.err;
            heap.push(p);
        }
    }
    let mut done: Vec<Piece<V>> = Vec::new();
    while total_err > opts.abs_tol && heap.len() + done.len() < opts.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) < 1e-14 * worst.a.abs().max(worst.b.abs())
        {
            done.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    let mut pieces: Vec<Piece<V>> = heap.into_vec();
    pieces.extend(done);
    // Sum in left-to-right order so results do not depend on heap layout.
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let intervals = pieces.len();
    let mut it = pieces.into_iter();
    let first = it.next().expect("at least one interval");
    let mut value = first.value;
    let mut error = first.err;
    for p in it {
        value.axpy(1.0, &p.value);
        error += p.err;
    }
    Quad {
        value,
        error,
        intervals,
    }
}

/// Single 15-point Kronrod rule on `[a, b]`, for integrands known to be
/// resolved on the panel.
pub fn kronrod15<V: Integrand, F: FnMut(f64) -> V>(mut f: F, a: f64, b: f64) -> V {
    gk15(&mut f, a, b).value
}

/// Checked adaptive integration: fails if the error estimate stays above
/// `opts.abs_tol`.
pub fn integrate<V, F>(f: F, points: &[f64], opts: QuadOptions) -> Result<Quad<V>>
where
    V: Integrand,
    F: FnMut(f64) -> V,
{
    let q = integrate_unchecked(f, points, opts);
    if q.error > opts.abs_tol {
        return Err(Error::Quadrature {
            estimate: q.error,
            requested: opts.abs_tol,
        });
    }
    Ok(q)
}

/// Uniform panel breakpoints on `[a, b]` merged with the extra points inside.
pub fn panels(a: f64, b: f64, count: usize, extra: &[f64]) -> Vec<f64> {
    let count = count.max(1);
    let mut pts: Vec<f64> = (0..=count)
        .map(|k| a + (b - a) * (k as f64) / (count as f64))
        .collect();
    pts.extend(extra.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * x.abs().max(1.0));
    pts
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let q = integrate(|x: f64| x.powi(20), &[0.0, 1.0], QuadOptions::new(1e-14)).unwrap();
        assert!((q.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        let w = 40.0;
        let q = integrate(
            |x: f64| C64::new(0.0, w * x).exp(),
            &panels(0.0, PI, 8, &[]),
            QuadOptions::new(1e-12),
        )
        .unwrap();
        let exact = (C64::new(0.0, w * PI).exp() - 1.0) / C64::new(0.0, w);
        assert!((q.value - exact).norm() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_is_resolved_adaptively() {
        let q = integrate(|x: f64| x.sqrt(), &[0.0, 1.0], QuadOptions::new(1e-10)).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn reports_failure_when_budget_is_exhausted() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            max_intervals: 3,
        };
        let r = integrate(|x: f64| (1.0 / x).sin(), &[1e-3, 1.0], opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, fx) = golden_max(|t| t * (-t).exp(), 0.0, 5.0, 80);
        assert!((x - 1.0).abs() < 1e-7);
        assert!((fx - (-1.0f64).exp()).abs() < 1e-14);
    }
}
