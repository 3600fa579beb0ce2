use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qdomain::domains::{Contour, Domain};
use qdomain::kernels::selftest::{kernels_selftest, SelftestOptions};
use qdomain::kernels::KernelFunction;

fn polar(r: f64, t: f64) -> C {
    C::from_polar(r, t)
}

fn inner(z: &[C], w: &[C]) -> C {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disc_matches_closed_form(r1 in 0.0..0.95f64, t1 in 0.0..6.3f64, r2 in 0.0..0.95f64, t2 in 0.0..6.3f64) {
        let k = KernelFunction::new(Domain::unit_disc()).unwrap();
        let (z, w) = (polar(r1, t1), polar(r2, t2));
        let expect = 1.0 / (PI * (C::new(1.0, 0.0) - z * w.conj()).powi(2));
        prop_assert!(rel(k.eval(&[z], &[w]).unwrap(), expect) < 1e-13);
    }

    #[test]
    fn ball_and_polydisc_match_closed_forms(
        a in prop::array::uniform4(-0.45..0.45f64),
        b in prop::array::uniform4(-0.45..0.45f64),
    ) {
        let z = [C::new(a[0], a[1]), C::new(a[2], a[3])];
        let w = [C::new(b[0], b[1]), C::new(b[2], b[3])];
        let one = C::new(1.0, 0.0);
        let ball = KernelFunction::new(Domain::ball(2).unwrap()).unwrap();
        let expect = 2.0 / (PI * PI * (one - inner(&z, &w)).powi(3));
        prop_assert!(rel(ball.eval(&z, &w).unwrap(), expect) < 1e-13);
        let pd = KernelFunction::new(Domain::polydisc(vec![1.0, 1.0]).unwrap()).unwrap();
        let expect = (0..2).map(|i| 1.0 / (PI * (one - z[i] * w[i].conj()).powi(2))).product::<C>();
        prop_assert!(rel(pd.eval(&z, &w).unwrap(), expect) < 1e-13);
    }

    #[test]
    fn hermitian_symmetry(
        r in prop::array::uniform4(0.55..0.95f64),
        t in prop::array::uniform4(0.0..6.3f64),
    ) {
        let domains = [
            Domain::std_annulus(0.5).unwrap(),
            Domain::disc(C::new(0.3, -0.2), 2.0).unwrap(),
            Domain::annulus(C::new(-1.0, 0.5), 0.4, 1.5).unwrap(),
        ];
        for d in domains {
            let (c, rad) = match &d {
                Domain::Disc { center, radius } => (*center, *radius),
                Domain::Annulus { center, outer, .. } => (*center, *outer),
                _ => unreachable!(),
            };
            let k = KernelFunction::new(d.clone()).unwrap();
            let z = [c + polar(r[0] * rad, t[0])];
            let w = [c + polar(r[1] * rad, t[1])];
            let kz = k.eval(&z, &w).unwrap();
            let kw = k.eval(&w, &z).unwrap();
            prop_assert!((kz - kw.conj()).norm() <= 1e-12 * kz.norm().max(1.0));
        }
        let prod = KernelFunction::new(Domain::product(vec![Domain::unit_disc(), Domain::std_annulus(0.5).unwrap()]).unwrap()).unwrap();
        let z = [polar(r[0] * 0.9, t[0]), polar(r[2], t[2])];
        let w = [polar(r[1] * 0.9, t[1]), polar(r[3], t[3])];
        let kz = prod.eval(&z, &w).unwrap();
        prop_assert!((kz - prod.eval(&w, &z).unwrap().conj()).norm() <= 1e-12 * kz.norm().max(1.0));
    }

    #[test]
    fn diagonal_is_positive(r in 0.52..0.98f64, t in 0.0..6.3f64) {
        let k = KernelFunction::new(Domain::std_annulus(0.5).unwrap()).unwrap();
        let z = [polar(r, t)];
        let v = k.eval(&z, &z).unwrap();
        prop_assert!(v.re > 0.0 && v.im.abs() <= 1e-12 * v.re);
    }
}

/// Only the Laurent term z⁻¹ survives the contour integral of the annulus kernel.
#[test]
fn annulus_periods_match_residue_formula() {
    let r = 0.5f64;
    let k = KernelFunction::new(Domain::std_annulus(r).unwrap()).unwrap();
    let n = 512;
    let choices = [
        (polar(0.6, 0.3), 0.7),
        (polar(0.75, 1.9), 0.6),
        (polar(0.9, -2.2), 0.8),
        (polar(0.55, 2.8), 0.75),
        (polar(0.7, -0.7), 0.55),
        (polar(0.85, 4.0), 0.9),
        (polar(0.65, 5.1), 0.7),
        (polar(0.8, 0.0), 0.65),
        (polar(0.95, 1.2), 0.85),
        (polar(0.6, -1.5), 0.6),
    ];
    for (zeta, rho) in choices {
        let expect = C::i() / (zeta.conj() * (1.0 / r).ln());
        let mut trap = C::new(0.0, 0.0);
        for j in 0..n {
            let z = polar(rho, 2.0 * PI * j as f64 / n as f64);
            trap += k.eval(&[z], &[zeta]).unwrap() * C::i() * z * (2.0 * PI / n as f64);
        }
        assert!((trap - expect).norm() <= 1e-12, "ζ={zeta} ρ={rho}: {trap} vs {expect}");
        let lib = Contour::new(C::new(0.0, 0.0), rho, n).unwrap().integrate(|z| k.eval(&[z], &[zeta]).unwrap());
        assert!((lib - trap).norm() <= 1e-13);
    }
}

#[test]
fn disc_reproduces_exponential() {
    let d = Domain::unit_disc();
    let k = KernelFunction::new(d.clone()).unwrap();
    let rule = d.volume_rule(64).unwrap();
    for a in [C::new(0.1, 0.2), C::new(-0.5, 0.3), C::new(0.0, -0.6)] {
        let got = rule.integrate_scalar(|z| z[0].exp() * k.eval(z, &[a]).unwrap().conj());
        assert!((got - a.exp()).norm() < 1e-10, "{a}: {got}");
    }
}

#[test]
fn default_suite_passes() {
    let r = kernels_selftest(&SelftestOptions::default()).unwrap();
    assert!(r.pass);
    assert!(r.degradation.is_none());
    for d in &r.domains {
        assert!(d.max_reproduce_error <= 1e-8, "{}", d.name);
        assert!(d.max_symmetry_defect <= 1e-12, "{}", d.name);
    }
}

#[test]
fn selftest_rejects_bad_selection() {
    let mut o = SelftestOptions::default();
    o.domains.clear();
    assert!(kernels_selftest(&o).is_err());
    o.domains = vec!["klein_bottle".into()];
    assert!(kernels_selftest(&o).is_err());
}
