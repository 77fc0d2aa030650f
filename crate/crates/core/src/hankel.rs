//! Sampling grids on the positive half-line and the kernel matrices built on
//! them: Hankel samples `m(s_i + t_j)`, semigroup kernels
//! `⟨T_u x, T_s* y⟩` and weighted tensor weights.

use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::{all_finite, CMat, CVec, C64};
use crate::semigroup::{semigroup_at, SemigroupModel};
use crate::symbols::{eval_symbol, Symbol, TensorWeight};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    Uniform,
    Geometric,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    points: Vec<f64>,
    weights: Option<Vec<f64>>,
    kind: GridKind,
    bounds: (f64, f64),
}

/// `n` points on `[lo, hi]`: equally spaced with trapezoid weights, or equally
/// spaced in `ln t` with trapezoid weights in log coordinates (`w_i = t_i·Δ`,
/// halved at the ends).
pub fn make_grid(kind: GridKind, n: usize, lo: f64, hi: f64) -> Result<SampleGrid> {
    if n < 2 {
        return Err(Error::invalid("a grid needs at least two points"));
    }
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("grid bounds must be positive and finite"));
    }
    if !(hi > lo) {
        return Err(Error::invalid(
            "grid upper bound must exceed the lower bound",
        ));
    }
    let last = (n - 1) as f64;
    let (points, weights) = match kind {
        GridKind::Uniform => {
            let h = (hi - lo) / last;
            let pts: Vec<f64> = (0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi
                    } else {
                        lo + (hi - lo) * (i as f64 / last)
                    }
                })
                .collect();
            let w = (0..n)
                .map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h })
                .collect();
            (pts, w)
        }
        GridKind::Geometric => {
            let ratio = hi / lo;
            let delta = ratio.ln() / last;
            let pts: Vec<f64> = (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i + 1 == n => hi,
                    _ => lo * ratio.powf(i as f64 / last),
                })
                .collect();
            let w = pts
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let end = i == 0 || i + 1 == n;
                    t * delta * if end { 0.5 } else { 1.0 }
                })
                .collect();
            (pts, w)
        }
        GridKind::Custom => {
            return Err(Error::invalid(
                "custom grids are built from explicit points with SampleGrid::custom",
            ))
        }
    };
    Ok(SampleGrid {
        points,
        weights: Some(weights),
        kind,
        bounds: (lo, hi),
    })
}

impl SampleGrid {
    /// Grid from explicit points, optionally with quadrature weights.
    pub fn custom(points: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a grid needs at least one point"));
        }
        if !points.iter().all(|t| t.is_finite() && *t > 0.0) {
            return Err(Error::invalid("grid points must be positive and finite"));
        }
        if !points.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        if let Some(w) = &weights {
            if w.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    found: w.len(),
                });
            }
            if !w.iter().all(|x| x.is_finite() && *x > 0.0) {
                return Err(Error::invalid("quadrature weights must be positive"));
            }
        }
        let bounds = (points[0], points[points.len() - 1]);
        Ok(SampleGrid {
            points,
            weights,
            kind: GridKind::Custom,
            bounds,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// Halves every spacing. Uniform and geometric grids keep their kind and
    /// contain the original points; custom grids gain midpoints, and carry
    /// trapezoid weights if they had weights before.
    pub fn refined(&self) -> SampleGrid {
        match self.kind {
            GridKind::Uniform | GridKind::Geometric => {
                make_grid(self.kind, 2 * self.len() - 1, self.bounds.0, self.bounds.1)
                    .expect("bounds were validated at construction")
            }
            GridKind::Custom => {
                let mut pts = Vec::with_capacity(2 * self.len());
                for w in self.points.windows(2) {
                    pts.push(w[0]);
                    pts.push(0.5 * (w[0] + w[1]));
                }
                pts.push(self.bounds.1);
                let weights = self.weights.as_ref().map(|_| trapezoid(&pts));
                SampleGrid::custom(pts, weights).expect("midpoints preserve ordering")
            }
        }
    }

    /// Grid restricted to the given indices (strictly increasing).
    pub fn subgrid(&self, indices: &[usize]) -> Result<SampleGrid> {
        if indices.iter().any(|&i| i >= self.len()) {
            return Err(Error::invalid("subgrid index out of range"));
        }
        let pts = indices.iter().map(|&i| self.points[i]).collect();
        let w = self
            .weights
            .as_ref()
            .map(|w| indices.iter().map(|&i| w[i]).collect());
        SampleGrid::custom(pts, w)
    }
}

fn trapezoid(pts: &[f64]) -> Vec<f64> {
    let n = pts.len();
    if n == 1 {
        return alloc::vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { pts[i] - pts[i - 1] } else { 0.0 };
            let right = if i + 1 < n { pts[i + 1] - pts[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Hankel {
        symbol: String,
        grid_s: SampleGrid,
        grid_t: SampleGrid,
    },
    Semigroup {
        model: String,
        x: CVec,
        y: CVec,
        grid_s: SampleGrid,
        grid_u: SampleGrid,
    },
    Tensor {
        weight: String,
        grid_s: SampleGrid,
        grid_u: SampleGrid,
    },
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Hankel { .. } => "hankel",
            Provenance::Semigroup { .. } => "semigroup",
            Provenance::Tensor { .. } => "tensor",
        }
    }

    pub fn source_id(&self) -> &str {
        match self {
            Provenance::Hankel { symbol, .. } => symbol,
            Provenance::Semigroup { model, .. } => model,
            Provenance::Tensor { weight, .. } => weight,
        }
    }

    pub fn grids(&self) -> (&SampleGrid, &SampleGrid) {
        match self {
            Provenance::Hankel { grid_s, grid_t, .. } => (grid_s, grid_t),
            Provenance::Semigroup { grid_s, grid_u, .. }
            | Provenance::Tensor { grid_s, grid_u, .. } => (grid_s, grid_u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: CMat,
    pub provenance: Provenance,
}

fn finished(entries: CMat, provenance: Provenance) -> Result<KernelMatrix> {
    if !all_finite(&entries) {
        return Err(Error::NonFinite("kernel entries"));
    }
    Ok(KernelMatrix {
        entries,
        provenance,
    })
}

/// `entries[i][j] = m(s_i + t_j)`.
pub fn sample_hankel(m: &Symbol, gs: &SampleGrid, gt: &SampleGrid) -> Result<KernelMatrix> {
    let mut entries = CMat::zeros(gs.len(), gt.len());
    for (i, &s) in gs.points().iter().enumerate() {
        for (j, &t) in gt.points().iter().enumerate() {
            entries[(i, j)] = eval_symbol(m, s + t)?;
        }
    }
    finished(
        entries,
        Provenance::Hankel {
            symbol: m.id().into(),
            grid_s: gs.clone(),
            grid_t: gt.clone(),
        },
    )
}

/// `entries[i][j] = ⟨T_{u_j} x, T_{s_i}* y⟩ = y* e^{-s_i A} e^{-u_j A} x`.
pub fn sample_semigroup_kernel(
    model: &SemigroupModel,
    x: &CVec,
    y: &CVec,
    gs: &SampleGrid,
    gu: &SampleGrid,
) -> Result<KernelMatrix> {
    let d = model.dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let right: Vec<CVec> = gu
        .points()
        .iter()
        .map(|&u| semigroup_at(model, u).map(|t| t * x))
        .collect::<Result<_>>()?;
    let left: Vec<CVec> = gs
        .points()
        .iter()
        .map(|&s| semigroup_at(model, s).map(|t| t.adjoint() * y))
        .collect::<Result<_>>()?;
    let entries = CMat::from_fn(gs.len(), gu.len(), |i, j| left[i].dotc(&right[j]));
    finished(
        entries,
        Provenance::Semigroup {
            model: model.id().into(),
            x: x.clone(),
            y: y.clone(),
            grid_s: gs.clone(),
            grid_u: gu.clone(),
        },
    )
}

/// `entries[i][j] = Σ_k c_k(s_i) d_k(u_j) · w_i · w_j`, so that the pairing
/// with a Hankel sample on the same grids is a product-rule quadrature of
/// `∫∫ m(s+u) Σ c_k(s) d_k(u) ds du`.
pub fn weighted_tensor_matrix(
    psi: &TensorWeight,
    gs: &SampleGrid,
    gu: &SampleGrid,
) -> Result<KernelMatrix> {
    let ws = gs.weights().ok_or(Error::MissingWeights)?;
    let wu = gu.weights().ok_or(Error::MissingWeights)?;
    let cvals: Vec<Vec<C64>> = psi
        .pairs()
        .iter()
        .map(|(c, _)| gs.points().iter().map(|&s| c.eval(s)).collect())
        .collect();
    let dvals: Vec<Vec<C64>> = psi
        .pairs()
        .iter()
        .map(|(_, d)| gu.points().iter().map(|&u| d.eval(u)).collect())
        .collect();
    let entries = CMat::from_fn(gs.len(), gu.len(), |i, j| {
        let v: C64 = cvals.iter().zip(&dvals).map(|(cv, dv)| cv[i] * dv[j]).sum();
        v * (ws[i] * wu[j])
    });
    finished(
        entries,
        Provenance::Tensor {
            weight: psi.id().into(),
            grid_s: gs.clone(),
            grid_u: gu.clone(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::symbols::Weight;
    use alloc::vec;

    #[test]
    fn grid_examples() {
        let g = make_grid(GridKind::Uniform, 3, 1.0, 2.0).unwrap();
        assert_eq!(g.points(), &[1.0, 1.5, 2.0]);
        assert_eq!(g.weights().unwrap(), &[0.25, 0.5, 0.25]);
        let g = make_grid(GridKind::Geometric, 3, 0.01, 1.0).unwrap();
        for (a, b) in g.points().iter().zip([0.01, 0.1, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(make_grid(GridKind::Uniform, 2, 1.0, 1.0).is_err());
        assert!(make_grid(GridKind::Uniform, 1, 1.0, 2.0).is_err());
        assert!(make_grid(GridKind::Geometric, 4, 0.0, 2.0).is_err());
    }

    #[test]
    fn custom_grid_validation() {
        assert!(SampleGrid::custom(vec![1.0, 1.0], None).is_err());
        assert!(SampleGrid::custom(vec![-1.0, 1.0], None).is_err());
        assert!(SampleGrid::custom(vec![1.0, 2.0], Some(vec![1.0])).is_err());
        assert!(SampleGrid::custom(vec![1.0, 2.0], Some(vec![1.0, 0.0])).is_err());
        let g = SampleGrid::custom(vec![1.0, 2.0, 4.0], Some(vec![1.0; 3])).unwrap();
        let r = g.refined();
        assert_eq!(r.points(), &[1.0, 1.5, 2.0, 3.0, 4.0]);
        assert_eq!(r.weights().unwrap().len(), 5);
    }

    #[test]
    fn refinement_nests_exactly() {
        for kind in [GridKind::Uniform, GridKind::Geometric] {
            let g = make_grid(kind, 9, 0.1, 10.0).unwrap();
            let r = g.refined();
            assert_eq!(r.len(), 17);
            for (i, &t) in g.points().iter().enumerate() {
                assert_eq!(r.points()[2 * i], t);
            }
        }
    }

    #[test]
    fn hankel_examples() {
        let a = 0.1;
        let g = SampleGrid::custom(vec![a, a + core::f64::consts::LN_2], None).unwrap();
        let m = Symbol::exponential("exp", 1.0).unwrap();
        let k = sample_hankel(&m, &g, &g).unwrap();
        let e = (-2.0 * a).exp();
        let want = [[1.0, 0.5], [0.5, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((k.entries[(i, j)] - c(e * want[i][j], 0.0)).norm() < 1e-15);
            }
        }
        let one = Symbol::constant("one", c(1.0, 0.0));
        let g3 = make_grid(GridKind::Uniform, 3, 1.0, 2.0).unwrap();
        let k = sample_hankel(&one, &g3, &g3).unwrap();
        assert!(k.entries.iter().all(|z| *z == c(1.0, 0.0)));
        let pw = Symbol::power_imaginary("pow", 1.0).unwrap();
        let g1 = SampleGrid::custom(vec![1.0], None).unwrap();
        let z = sample_hankel(&pw, &g1, &g1).unwrap().entries[(0, 0)];
        assert!((z - c(2f64.ln().cos(), 2f64.ln().sin())).norm() < 1e-15);
        assert_eq!(k.provenance.label(), "hankel");
    }

    #[test]
    fn tensor_examples() {
        let ind = Weight::indicator(c(1.0, 0.0), 0.0, 1.0).unwrap();
        let psi = TensorWeight::new("ind", vec![(ind.clone(), ind)]).unwrap();
        let g = SampleGrid::custom(vec![0.5], Some(vec![1.0])).unwrap();
        let k = weighted_tensor_matrix(&psi, &g, &g).unwrap();
        assert_eq!(k.entries[(0, 0)], c(1.0, 0.0));
        let no_w = SampleGrid::custom(vec![0.5], None).unwrap();
        assert_eq!(
            weighted_tensor_matrix(&psi, &no_w, &g).unwrap_err(),
            Error::MissingWeights
        );

        let e = Weight::exponential(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let psi = TensorWeight::new("exp", vec![(e.clone(), e)]).unwrap();
        let g = make_grid(GridKind::Uniform, 2, 0.5, 1.0).unwrap();
        let k = weighted_tensor_matrix(&psi, &g, &g).unwrap();
        let (p, w) = (g.points(), g.weights().unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let want = (-p[i] - p[j]).exp() * w[i] * w[j];
                assert!((k.entries[(i, j)].re - want).abs() < 1e-15);
            }
        }
        let k3 = weighted_tensor_matrix(&psi.scaled(c(3.0, 0.0)), &g, &g).unwrap();
        assert!(crate::linalg::max_abs(&(k3.entries - k.entries.map(|z| z * 3.0))) < 1e-15);
    }
}
