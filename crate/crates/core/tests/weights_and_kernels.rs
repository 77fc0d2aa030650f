//! Properties of closed-form weights, symbols and sampled kernels.

use facnorm_core::hankel::{
    make_grid, sample_hankel, weighted_tensor_matrix, GridKind, SampleGrid,
};
use facnorm_core::linalg::pairing;
use facnorm_core::quad::{self, QuadOptions};
use facnorm_core::symbols::{
    convolve_weights, eval_symbol, laplace_transform, poisson_tilde, ExpTerm, PoissonSpec, Segment,
    Symbol, TensorWeight, Weight,
};
use facnorm_core::C64;
use proptest::prelude::*;

fn exp_term() -> impl Strategy<Value = ExpTerm> {
    (
        -2.0..2.0f64,
        -2.0..2.0f64,
        0.3..3.0f64,
        -2.0..2.0f64,
        0..3u32,
        0.0..1.5f64,
    )
        .prop_map(|(cr, ci, dr, di, p, s)| {
            ExpTerm::new(C64::new(cr, ci), C64::new(dr, di), p, s).unwrap()
        })
}

fn segment() -> impl Strategy<Value = Segment> {
    (
        -2.0..2.0f64,
        -2.0..2.0f64,
        0..2u32,
        0.0..2.0f64,
        0.1..2.0f64,
    )
        .prop_map(|(cr, ci, p, a, len)| Segment::new(C64::new(cr, ci), p, a, a + len).unwrap())
}

fn weight() -> impl Strategy<Value = Weight> {
    (
        proptest::collection::vec(exp_term(), 0..3),
        proptest::collection::vec(segment(), 0..2),
    )
        .prop_filter_map("empty weight", |(e, s)| {
            if e.is_empty() && s.is_empty() {
                None
            } else {
                Weight::new(e, s).ok()
            }
        })
}

fn test_point() -> impl Strategy<Value = C64> {
    (0.05..4.0f64, -5.0..5.0f64).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplace_is_multiplicative_under_convolution(c in weight(), d in weight(), z in test_point()) {
        let lhs = laplace_transform(&convolve_weights(&c, &d), z).unwrap();
        let rhs = laplace_transform(&c, z).unwrap() * laplace_transform(&d, z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn convolution_contracts_the_l1_norm(c in weight(), d in weight()) {
        let cd = convolve_weights(&c, &d).l1_norm();
        let (nc, nd) = (c.l1_norm(), d.l1_norm());
        prop_assert!(cd.value - cd.error <= (nc.value + nc.error) * (nd.value + nd.error));
    }

    #[test]
    fn convolution_matches_direct_integration(c in weight(), d in weight(), t in 0.1..4.0f64) {
        let direct: C64 = quad::integrate_unchecked(
            |x: f64| c.eval(x) * d.eval(t - x),
            &quad::panels(0.0, t, 16, &[c.breakpoints(), d.breakpoints().iter().map(|b| t - b).collect()].concat()),
            QuadOptions::new(1e-13),
        )
        .value;
        prop_assert!((convolve_weights(&c, &d).eval(t) - direct).norm() <= 1e-9);
    }

    #[test]
    fn shift_is_coherent(eps in 0.01..3.0f64, u in 0.01..10.0f64, decay in 0.2..3.0f64) {
        let base = Symbol::laplace_of("b", Weight::exponential(C64::new(1.0, 0.0), C64::new(decay, 0.5)).unwrap());
        let shifted = Symbol::shifted("s", base.clone(), eps).unwrap();
        prop_assert_eq!(eval_symbol(&shifted, u).unwrap(), eval_symbol(&base, eps + u).unwrap());
    }

    #[test]
    fn hankel_samples_are_symmetric_and_restrict_to_subgrids(
        n in 2..24usize,
        r in -3.0..3.0f64,
        picks in proptest::collection::btree_set(0..24usize, 1..8),
    ) {
        let g = make_grid(GridKind::Geometric, n, 1e-2, 1e2).unwrap();
        let m = Symbol::power_imaginary("pow", r).unwrap();
        let full = sample_hankel(&m, &g, &g).unwrap().entries;
        prop_assert_eq!(&full, &full.transpose());
        let idx: Vec<usize> = picks.into_iter().filter(|&i| i < n).collect();
        prop_assume!(!idx.is_empty());
        let sub = g.subgrid(&idx).unwrap();
        let part = sample_hankel(&m, &sub, &g).unwrap().entries;
        for (a, &i) in idx.iter().enumerate() {
            for j in 0..n {
                prop_assert_eq!(part[(a, j)], full[(i, j)]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn poisson_integral_reproduces_laplace(w in weight(), z in test_point()) {
        let z = C64::new(z.re + 0.2, z.im);
        let spec = PoissonSpec::default();
        let p = poisson_tilde(&w, z, &spec).unwrap();
        prop_assert!(p.error <= spec.tol);
        prop_assert!((p.value - laplace_transform(&w, z).unwrap()).norm() <= p.error + 1e-12);
    }
}

#[test]
fn tensor_pairing_converges_to_the_action_integral() {
    let one = C64::new(1.0, 0.0);
    let m = Symbol::laplace_of("lap", Weight::exponential(one, one).unwrap());
    let c = Weight::exponential(one, C64::new(1.0, 0.0)).unwrap();
    let d = Weight::exp_poly(one, C64::new(2.0, 0.0), 1, 0.0).unwrap();
    let b = convolve_weights(&c, &d);
    let psi = TensorWeight::new("psi", vec![(c, d)]).unwrap();
    let exact = quad::integrate(
        |t: f64| eval_symbol(&m, t.max(1e-300)).unwrap() * b.eval(t),
        &quad::panels(0.0, 80.0, 160, &[]),
        QuadOptions::new(1e-14),
    )
    .unwrap()
    .value;
    let mut last = f64::INFINITY;
    for n in [33, 65, 129, 257] {
        let g = make_grid(GridKind::Geometric, n, 1e-5, 60.0).unwrap();
        let h = sample_hankel(&m, &g, &g).unwrap().entries;
        let w = weighted_tensor_matrix(&psi, &g, &g).unwrap().entries;
        let err = (pairing(&h, &w) - exact).norm();
        assert!(err < last, "n = {n}: {err} after {last}");
        last = err;
    }
    assert!(last < 1e-3, "{last}");
    let custom = SampleGrid::custom(vec![0.5, 1.0], None).unwrap();
    assert!(weighted_tensor_matrix(&psi, &custom, &custom).is_err());
}
