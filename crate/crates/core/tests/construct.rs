use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qdomain::certify::{extract_quadrature_data, reconstruct_jacobian};
use qdomain::construct::{
    base_lattice, compute_periods, construct_quadrature_domain, injectivity_certificate, CertificateStatus, ClosureMap, ConstructConfig,
    InjectivityOptions,
};
use qdomain::domains::{Contour, Domain};
use qdomain::kernels::KernelFunction;
use qdomain::span::{SpanElement, SpanTerm};

fn disc_disc() -> Domain<f64> {
    Domain::polydisc(vec![1.0, 1.0]).unwrap()
}

fn disc_annulus() -> Domain<f64> {
    Domain::product(vec![Domain::unit_disc(), Domain::std_annulus(0.5).unwrap()]).unwrap()
}

fn quick() -> InjectivityOptions {
    InjectivityOptions {
        lattice_radii: 3,
        lattice_angles: 4,
        ..InjectivityOptions::default()
    }
}

#[test]
fn small_perturbation_of_identity_is_certified() {
    let m = ClosureMap {
        domain: disc_disc(),
        g: |_: &[C], l: C| l + 0.001 * l * l,
        dg: |_: &[C], l: C| 1.0 + 0.002 * l,
    };
    let r = injectivity_certificate(&m, &quick()).unwrap();
    assert_eq!(r.status, CertificateStatus::Certified);
    assert_eq!(r.max_count, 1);
}

#[test]
fn squaring_is_rejected() {
    let m = ClosureMap {
        domain: disc_disc(),
        g: |_: &[C], l: C| l * l,
        dg: |_: &[C], l: C| 2.0 * l,
    };
    let r = injectivity_certificate(&m, &quick()).unwrap();
    assert_eq!(r.status, CertificateStatus::Rejected);
    assert!(r.max_count >= 2);
    assert!(!r.failures.is_empty());
}

#[test]
fn annulus_fibers_count_once_under_identity() {
    let m = ClosureMap {
        domain: disc_annulus(),
        g: |_: &[C], l: C| l,
        dg: |_: &[C], _: C| C::new(1.0, 0.0),
    };
    let r = injectivity_certificate(&m, &quick()).unwrap();
    assert!(r.certified());
    assert_eq!(r.max_count, 1);
    assert_eq!(r.fibers, base_lattice(&Domain::unit_disc(), &quick()).unwrap().len());
}

#[test]
fn exact_fit_gives_identity_map() {
    let mut cfg = ConstructConfig::new(disc_disc());
    cfg.exact_fit = true;
    let c = construct_quadrature_domain(&cfg).unwrap();
    assert!(c.certified());
    for (a, b) in [(0.1, 0.2), (-0.4, 0.5), (0.6, -0.3)] {
        let z = [C::new(a, b), C::new(b, -a)];
        assert!((c.graph.g(&z).unwrap() - z[1]).norm() < 1e-13);
        assert!((c.v.eval(&z).unwrap() - 1.0).norm() < 1e-13);
    }
    let qd = extract_quadrature_data(&c.graph).unwrap();
    assert_eq!(qd.nodes.len(), 1);
    let (idx, coeff) = &qd.nodes[0].coeffs[0];
    assert_eq!(idx.order(), 0);
    assert!((coeff - C::new(PI * PI, 0.0)).norm() < 1e-12);
    assert!(qd.nodes[0].point.iter().all(|p| p.norm() < 1e-14));
}

/// Recomputes the periods of the corrected v by a plain trapezoid sum, away from the pipeline's contours.
#[test]
fn corrected_periods_vanish_and_converse_round_trips() {
    let mut cfg = ConstructConfig::new(disc_annulus());
    cfg.fit.budget = 40;
    let c = construct_quadrature_domain(&cfg).unwrap();
    assert!(c.fit.sup_error <= 0.05);
    assert!(c.checks.max_residual_period <= 1e-10);
    let n = 512;
    let mut worst_u = 0.0f64;
    for zp in [C::new(0.0, 0.0), C::new(0.3, -0.5), C::new(-0.7, 0.1)] {
        for rho in [0.6, 0.75, 0.9] {
            let mut pv = C::new(0.0, 0.0);
            let mut pu = C::new(0.0, 0.0);
            for j in 0..n {
                let l = C::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
                let dl = C::i() * l * (2.0 * PI / n as f64);
                pv += c.v.eval(&[zp, l]).unwrap() * dl;
                pu += c.u.eval(&[zp, l]).unwrap() * dl;
            }
            assert!(pv.norm() <= 1e-10, "period {pv} at z′={zp} ρ={rho}");
            let lib = compute_periods(&c.u, &[Contour::new(C::new(0.0, 0.0), rho, n).unwrap()], &[zp]).unwrap();
            worst_u = worst_u.max((lib[0] - pu).norm());
        }
    }
    assert!(worst_u <= 1e-13, "library periods of u differ by {worst_u}");
    let qd = extract_quadrature_data(&c.graph).unwrap();
    let (_, rr) = reconstruct_jacobian(&qd, &c.graph).unwrap();
    assert!(rr.coefficient_error <= 1e-8);
    assert!(rr.inversion_residual <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn span_evaluation_is_linear(
        c1 in prop::array::uniform2(-2.0..2.0f64),
        c2 in prop::array::uniform2(-2.0..2.0f64),
        s in prop::array::uniform2(-1.0..1.0f64),
        z in prop::array::uniform4(-0.6..0.6f64),
    ) {
        let k = Arc::new(KernelFunction::new(disc_annulus()).unwrap());
        let b1 = vec![C::new(0.1, 0.2), C::new(0.7, 0.0)];
        let b2 = vec![C::new(-0.3, 0.0), C::new(0.0, -0.8)];
        let u = SpanElement::new(k.clone(), vec![SpanTerm::new(b1.clone(), vec![0, 0], C::new(c1[0], c1[1]))]).unwrap();
        let v = SpanElement::new(k.clone(), vec![SpanTerm::new(b2, vec![1, 0], C::new(c2[0], c2[1]))]).unwrap();
        let sc = C::new(s[0], s[1]);
        let w = u.plus(&v.scaled(sc).unwrap()).unwrap();
        let zz = [C::new(z[0], z[1]), C::from_polar(0.55 + z[2].abs() * 0.7, z[3] * 5.0)];
        let lhs = w.eval(&zz).unwrap();
        let rhs = u.eval(&zz).unwrap() + sc * v.eval(&zz).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }
}
