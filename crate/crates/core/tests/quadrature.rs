use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use qdomain::certify::{pullback_identity, Battery};
use qdomain::domains::{Domain, RuleSpec};

/// ∫_G z^γ vanishes off γ = 0 on circular domains centred at the origin.
#[test]
fn mean_value_identities_hold_to_1e10() {
    let cases = [
        (Domain::unit_disc(), PI, 1),
        (Domain::ball(2).unwrap(), PI * PI / 2.0, 2),
        (Domain::polydisc(vec![1.0, 1.0]).unwrap(), PI * PI, 2),
    ];
    for (d, vol, n) in cases {
        let bat = Battery::monomials(n, 6);
        let vals = pullback_identity(&d, &bat.functions, RuleSpec::new(8, 16), 1e-12).unwrap();
        for (h, v) in bat.functions.iter().zip(&vals) {
            let expect = if h.degree() == Some(0) { vol } else { 0.0 };
            let r = (v.value - C::new(expect, 0.0)).norm() / v.abs_integral;
            assert!(r <= 1e-10, "{} on {}: {:?}", h.label(), d.kind_name(), v.value);
        }
    }
}

#[test]
fn weights_sum_to_volume() {
    let cases = [
        (Domain::std_annulus(0.5).unwrap(), PI * 0.75),
        (Domain::disc(C::new(1.0, 2.0), 3.0).unwrap(), 9.0 * PI),
        (Domain::ball(3).unwrap(), PI.powi(3) / 6.0),
        (Domain::polydisc(vec![0.5, 2.0]).unwrap(), PI * PI),
    ];
    for (d, vol) in cases {
        let rule = d.volume_rule(16).unwrap();
        assert!((rule.weight_sum() - vol).abs() < 1e-12 * vol, "{}", d.kind_name());
        assert!((d.volume() - vol).abs() < 1e-12 * vol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The factored moment and the node-by-node sum are the same rule.
    #[test]
    fn monomial_moment_agrees_with_integrate(g in prop::collection::vec(0u32..5, 2), pick in 0usize..3) {
        let d = [
            Domain::ball(2).unwrap(),
            Domain::polydisc(vec![1.0, 0.7]).unwrap(),
            Domain::product(vec![Domain::disc(C::new(0.5, 0.0), 1.0).unwrap(), Domain::std_annulus(0.4).unwrap()]).unwrap(),
        ][pick].clone();
        let rule = d.volume_rule(10).unwrap();
        let direct = rule.integrate_scalar(|z| z[0].powu(g[0]) * z[1].powu(g[1]));
        let fast = rule.monomial_moment(&g);
        prop_assert!((direct - fast).norm() <= 1e-12 * (1.0 + direct.norm()));
    }

    /// z^γ conj(z)^γ integrates to the closed-form polydisc moment π²/((γ₁+1)(γ₂+1)).
    #[test]
    fn polydisc_norms(g1 in 0i32..8, g2 in 0i32..8) {
        let d: Domain<f64> = Domain::polydisc(vec![1.0, 1.0]).unwrap();
        let rule = d.volume_rule(24).unwrap();
        let v = rule.integrate_scalar(|z| C::new(z[0].norm().powi(2 * g1) * z[1].norm().powi(2 * g2), 0.0));
        let expect = PI * PI / ((g1 + 1) * (g2 + 1)) as f64;
        prop_assert!((v.re - expect).abs() < 1e-12 * expect);
    }
}
