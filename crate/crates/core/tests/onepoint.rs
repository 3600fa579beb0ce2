use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qdomain::certify::{pullback_rule, Battery};
use qdomain::domains::Domain;
use qdomain::onepoint::{
    ball_rule_spec, certify_onepoint, henon, monte_carlo, shiftlike, symmetry_oracle, MultiPoly, OnepointOptions,
    PreimageDomain,
};
use qdomain::testfn::TestFunction;

fn coeffs(v: &[f64]) -> Vec<C> {
    v.chunks(2).map(|c| C::new(c[0], c[1])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn henon_inverse_round_trips(p in prop::collection::vec(-1.0..1.0f64, 8), z in prop::array::uniform4(-1.5..1.5f64)) {
        let f = henon(&coeffs(&p)).unwrap();
        let z = [C::new(z[0], z[1]), C::new(z[2], z[3])];
        let back = f.apply_inverse(&f.apply(&z));
        let fwd = f.apply(&f.apply_inverse(&z));
        for i in 0..2 {
            prop_assert!((back[i] - z[i]).norm() <= 1e-12 * (1.0 + z[i].norm()).powi(9));
            prop_assert!((fwd[i] - z[i]).norm() <= 1e-12 * (1.0 + z[i].norm()).powi(9));
        }
        let det = f.jacobian_at(&z).determinant();
        prop_assert!((det - 1.0).norm() < 1e-10 * (1.0 + z[1].norm()).powi(3));
    }

    #[test]
    fn shiftlike_inverse_round_trips(q in prop::collection::vec(-1.0..1.0f64, 6), z in prop::array::uniform6(-1.0..1.0f64)) {
        let f = shiftlike(&coeffs(&q)).unwrap();
        let z = [C::new(z[0], z[1]), C::new(z[2], z[3]), C::new(z[4], z[5])];
        let back = f.apply_inverse(&f.apply(&z));
        for i in 0..3 {
            prop_assert!((back[i] - z[i]).norm() <= 1e-12 * 20.0);
        }
        prop_assert!(f.checks().jacobian_ok());
    }

    #[test]
    fn composition_evaluates_pointwise(
        a in prop::collection::vec(-1.0..1.0f64, 6),
        b in prop::collection::vec(-1.0..1.0f64, 6),
        z in prop::array::uniform4(-1.0..1.0f64),
    ) {
        let p = MultiPoly::univariate(2, 0, &coeffs(&a)).mul(&MultiPoly::var(2, 1)).add(&MultiPoly::constant(2, C::new(0.5, 0.0)));
        let g = [MultiPoly::univariate(2, 1, &coeffs(&b)), MultiPoly::var(2, 0).mul(&MultiPoly::var(2, 1))];
        let z = [C::new(z[0], z[1]), C::new(z[2], z[3])];
        let inner = [g[0].eval(&z), g[1].eval(&z)];
        let lhs = p.compose(&g).eval(&z);
        let rhs = p.eval(&inner);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
}

#[test]
fn henon_preimage_volume_is_ball_volume() {
    let f = henon(&coeffs(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
    let ball = Domain::ball(2).unwrap();
    let one = vec![TestFunction::monomial(&[0, 0])];
    let exact = pullback_rule(&ball, &one, ball_rule_spec(2, 4), 1e-12, |y| (f.apply_inverse(y), 1.0)).unwrap();
    assert!((exact[0].value - PI * PI / 2.0).norm() < 1e-12);
    let dom = PreimageDomain::new(f);
    let mc = monte_carlo(&dom, &one, &[C::new(PI * PI / 2.0, 0.0)], 200_000, 3, 3.0).unwrap();
    assert!(mc.pass, "{:?}", mc.entries);
    let sigma = mc.entries[0].std_error;
    assert!((mc.volume_estimate - PI * PI / 2.0).abs() <= 3.0 * sigma.max(1e-3));
}

#[test]
fn preimage_membership_matches_image_test() {
    let f = henon(&coeffs(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
    let dom = PreimageDomain::new(f.clone());
    for (a, b, c, d) in [(0.1, 0.2, 0.3, 0.1), (0.9, 0.0, 0.5, 0.5), (0.0, 0.0, 0.0, 0.0), (1.2, -0.3, 0.2, 0.4)] {
        let z = [C::new(a, b), C::new(c, d)];
        let fz = f.apply(&z);
        let inside = fz.iter().map(|w| w.norm_sqr()).sum::<f64>() < 1.0;
        assert_eq!(dom.contains(&z), inside);
    }
}

#[test]
fn rule_symmetry_oracle_is_tight() {
    for (dim, deg) in [(2, 12), (3, 12)] {
        let (count, max) = symmetry_oracle(dim, deg, ball_rule_spec(dim, deg)).unwrap();
        assert!(count > 0);
        assert!(max <= 1e-12);
    }
}

#[test]
fn cubic_henon_certifies() {
    let f = henon(&coeffs(&[0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
    let opts = OnepointOptions {
        samples: 200_000,
        ..OnepointOptions::default()
    };
    let r = certify_onepoint(&f, &Battery::polynomial(2, 5, 3), &opts).unwrap();
    assert!(
        r.pass,
        "exact {:.3e} {}, mc {:.2} {} widen {} box {:?} acc {}",
        r.exact.max_relative,
        r.exact.pass,
        r.monte_carlo.max_deviation,
        r.monte_carlo.pass,
        r.monte_carlo.box_widenings,
        r.monte_carlo.half_widths,
        r.monte_carlo.accepted
    );
    assert!(r.exact.max_relative <= 1e-10);
    assert!((r.coefficient - PI * PI / 2.0).abs() < 1e-14);
    assert!(r.node.iter().all(|c| c.norm() < 1e-15));
}

#[test]
fn non_volume_preserving_map_is_rejected_at_jacobian() {
    let comps = vec![MultiPoly::var(2, 0).scale(C::new(2.0, 0.0)), MultiPoly::var(2, 1)];
    let inv = vec![MultiPoly::var(2, 0).scale(C::new(0.5, 0.0)), MultiPoly::var(2, 1)];
    let f = qdomain::onepoint::PolyAutomorphism::general(comps, inv, true).unwrap();
    let ch = f.checks();
    assert!(ch.inverse_ok());
    assert!(!ch.jacobian_ok());
    let err = certify_onepoint(&f, &Battery::polynomial(2, 2, 0), &OnepointOptions::default()).unwrap_err();
    assert_eq!(err.stage(), Some("jacobian"));
}

/// Standardized volume errors over independent seeds should look like unit normals.
#[test]
fn monte_carlo_standard_error_is_calibrated() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let f = henon(&coeffs(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
    let dom = PreimageDomain::new(f);
    let one = vec![TestFunction::monomial(&[0, 0])];
    let expect = [C::new(PI * PI / 2.0, 0.0)];
    let runs = 24;
    let chi2: f64 = (0..runs)
        .map(|s| {
            let mc = monte_carlo(&dom, &one, &expect, 20_000, 100 + s, 3.0).unwrap();
            let e = &mc.entries[0];
            ((e.estimate - expect[0]).norm() / e.std_error).powi(2)
        })
        .sum();
    let dist = ChiSquared::new(runs as f64).unwrap();
    assert!(chi2 > dist.inverse_cdf(0.0005), "χ² = {chi2} is too small: errors overstated");
    assert!(chi2 < dist.inverse_cdf(0.9995), "χ² = {chi2} is too large: errors understated");
}
