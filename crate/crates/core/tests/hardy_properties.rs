//! Factorization, transfer and Fejér-kernel properties on random inputs.

use facnorm_core::hardy::{
    conformal_transfer, fejer_weight, riesz_factorize_circle, sarason_factorize_line,
    suggested_fft_size, Bump, CircleFunction, CirclePoly, Exponent, HardyFunction,
};
use facnorm_core::C64;
use proptest::prelude::*;

/// Roots at distance ≥ 0.1 from the unit circle.
fn root() -> impl Strategy<Value = C64> {
    (
        prop_oneof![0.0..0.9f64, 1.1..3.0f64],
        0.0..std::f64::consts::TAU,
    )
        .prop_map(|(r, a)| C64::from_polar(r, a))
}

fn poly() -> impl Strategy<Value = CirclePoly> {
    (
        proptest::collection::vec(root(), 0..6),
        0.2..3.0f64,
        0.0..std::f64::consts::TAU,
    )
        .prop_map(|(roots, r, a)| {
            let mut p = CirclePoly::constant(C64::from_polar(r, a));
            for z in roots {
                p = p.mul(&CirclePoly::new(vec![-z, C64::new(1.0, 0.0)]).unwrap());
            }
            p
        })
}

fn fft_size(p: &CirclePoly) -> usize {
    suggested_fft_size(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn circle_factorization_round_trips_with_norm_equality(h in poly()) {
        let f = riesz_factorize_circle(&h, fft_size(&h)).unwrap();
        prop_assert!(f.residual <= 1e-8 * f.sup_norm);
        prop_assert!(f.h_l1.error <= 1e-8);
        prop_assert!(f.norm_gap() <= 1e-6, "gap {}", f.norm_gap());
        // |h₁| = |h₂| on the circle.
        for k in 0..32 {
            let z = C64::from_polar(1.0, 0.2 * k as f64);
            prop_assert!((f.h1.eval(z).norm() - f.h2.eval(z).norm()).abs() <= 1e-8 * f.sup_norm.sqrt());
        }
    }

    #[test]
    fn line_factorization_round_trips_with_norm_equality(g in poly()) {
        let h = HardyFunction::Line { base: CircleFunction::from(g.clone()), p: Exponent::One };
        let f = sarason_factorize_line(&h, fft_size(&g), 8192).unwrap();
        prop_assert!(f.residual <= 1e-8 * f.circle.sup_norm);
        prop_assert!((f.h1_l2.value * f.h2_l2.value - f.h_l1.value).abs() <= 1e-5);
    }

    #[test]
    fn transfer_is_an_isometry(g in poly()) {
        let f = CircleFunction::from(g);
        for p in [Exponent::One, Exponent::Two] {
            let circle = HardyFunction::Circle(f.clone()).norm(p, 8192).unwrap();
            let line = HardyFunction::Line { base: f.clone(), p }.norm(p, 8192).unwrap();
            prop_assert!((circle.value - line.value).abs() <= 1e-5);
        }
        let exact = f.l2_norm();
        let line = HardyFunction::Line { base: f, p: Exponent::Two }.norm(Exponent::Two, 8192).unwrap();
        prop_assert!((line.value - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn half_densities_multiply_to_densities(g1 in poly(), g2 in poly(), t in -50.0..50.0f64) {
        let (f1, f2) = (CircleFunction::from(g1), CircleFunction::from(g2));
        let lhs = conformal_transfer(&f1, Exponent::Two, t) * conformal_transfer(&f2, Exponent::Two, t);
        let rhs = conformal_transfer(&f1.mul(&f2), Exponent::One, t);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn fejer_transform_vanishes_on_the_band(n in 1..64u32, x in 0.0..=1.0f64) {
        let k = fejer_weight(Bump::default(), n).unwrap();
        let u = x / n as f64;
        prop_assert_eq!(k.transform(u), 0.0);
        prop_assert_eq!(k.transform(-u), 0.0);
    }
}

#[test]
fn fejer_kernels_stay_within_twice_the_bump_norm() {
    let base = Bump::default().l1_norm(1e-9).unwrap();
    for n in [1, 2, 3, 4, 8, 16] {
        let k = fejer_weight(Bump::default(), n).unwrap();
        let l1 = k.l1_norm(1e-9).unwrap();
        assert!(l1.value <= 2.0 * base.value + 1e-6, "n = {n}: {l1:?}");
    }
}
