//! One-point quadrature domains f⁻¹(B) for volume-preserving polynomial automorphisms f.

mod automorphism;
mod poly;
mod preimage;

pub use automorphism::{henon, shiftlike, AutomorphismChecks, AutomorphismSpec, Family, PolyAutomorphism, CHECK_POINTS, CHECK_TOL};
pub use poly::{poly_det, MultiPoly};
pub use preimage::{monte_carlo, McEntry, McReport, PreimageDomain};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::certify::{certify_identity, pullback_rule, Battery, QuadNode, QuadratureData, ResidualReport};
use crate::domains::{Domain, MultiIndex, RuleSpec};
use crate::error::{Error, Result};

type C = Complex<f64>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnepointOptions {
    pub samples: usize,
    pub seed: u64,
    /// Relative residual allowed for the exact pullback.
    pub tolerance: f64,
    /// Monte Carlo agreement in standard errors.
    pub sigma_limit: f64,
    /// Bound on pure-monomial ball integrals before the rule is used.
    pub symmetry_tol: f64,
}

impl Default for OnepointOptions {
    fn default() -> Self {
        OnepointOptions {
            samples: 1_000_000,
            seed: 0,
            tolerance: 1e-10,
            sigma_limit: 3.0,
            symmetry_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleCheck {
    pub spec: RuleSpec,
    /// Bound on the degree of h∘f⁻¹ over the battery.
    pub composed_degree: u32,
    pub monomials_checked: usize,
    /// max |∫_B z^γ| over 0 < |γ| ≤ composed degree.
    pub symmetry_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OnepointReport {
    pub dim: usize,
    pub family: Family,
    pub degree: u32,
    pub inverse_degree: u32,
    pub checks: AutomorphismChecks,
    pub node: Vec<C>,
    pub coefficient: f64,
    pub rule: RuleCheck,
    pub exact: ResidualReport,
    pub monte_carlo: McReport,
    pub notes: Vec<String>,
    pub pass: bool,
}

/// Ball rule integrating every holomorphic polynomial of degree ≤ `degree` exactly, also at
/// two thirds of its counts.
pub fn ball_rule_spec(dim: usize, degree: u32) -> RuleSpec {
    let angular = (3 * (degree as usize + 1)).div_ceil(2) + 2;
    RuleSpec::new((dim + 2).max(6), angular.max(8))
}

/// Largest |∫_B z^γ| over pure monomials with 0 < |γ| ≤ degree.
pub fn symmetry_oracle(dim: usize, degree: u32, spec: RuleSpec) -> Result<(usize, f64)> {
    let rule = Domain::ball(dim)?.volume_rule_spec(spec)?;
    let gammas = &MultiIndex::all_up_to(dim, degree)[1..];
    let max = gammas.iter().map(|g| rule.monomial_moment(&g.0).norm()).fold(0.0, f64::max);
    Ok((gammas.len(), max))
}

/// Checks ∫_{f⁻¹(B)} h = vol(B)·h(f⁻¹(0)) over a polynomial battery, by the exact pullback
/// ∫_B h∘f⁻¹ and by Monte Carlo over f⁻¹(B).
pub fn certify_onepoint(map: &PolyAutomorphism, battery: &Battery, opts: &OnepointOptions) -> Result<OnepointReport> {
    let n = map.dim();
    let checks = map.checks();
    if !checks.inverse_ok() {
        return Err(Error::InverseDefect(checks.inverse_defect).at("inverse"));
    }
    if !checks.jacobian_ok() {
        return Err(Error::JacobianDefect(checks.symbolic_jacobian_defect.max(checks.numeric_jacobian_defect)).at("jacobian"));
    }
    let mut hdeg = 0;
    for h in &battery.functions {
        if h.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.dim(),
            }
            .at("battery"));
        }
        hdeg = hdeg.max(h.degree().ok_or_else(|| {
            Error::InvalidInput(format!("{} is not a polynomial", h.label())).at("battery")
        })?);
    }
    let ball = Domain::ball(n)?;
    let degree = hdeg * map.inverse_degree().max(1);
    let spec = ball_rule_spec(n, degree);
    let (count, symmetry_max) = symmetry_oracle(n, degree, spec).map_err(|e| e.at("rule"))?;
    if !(symmetry_max <= opts.symmetry_tol) {
        return Err(Error::RuleOrder(format!("pure monomial integral {symmetry_max:.3e} over the ball")).at("rule"));
    }
    let rule = RuleCheck {
        spec,
        composed_degree: degree,
        monomials_checked: count,
        symmetry_max,
    };

    let node = map.node();
    let vol = ball.volume();
    let qd = QuadratureData {
        nodes: vec![QuadNode {
            point: node.clone(),
            source: vec![C::new(0.0, 0.0); n],
            coeffs: vec![(MultiIndex::zeros(n), C::new(vol, 0.0))],
        }],
        order: 1,
        merged: 0,
    };
    let vals = pullback_rule(&ball, &battery.functions, spec, opts.tolerance * 1e-2, |y| (map.apply_inverse(y), 1.0))
        .map_err(|e| e.at("exact_pullback"))?;
    let exact = certify_identity(&qd, battery, &vals, |_| false, "exact_pullback", opts.tolerance)?;

    let dom = PreimageDomain::new(map.clone());
    let expected: Vec<C> = battery.functions.iter().map(|h| qd.apply(h)).collect();
    let mc = monte_carlo(&dom, &battery.functions, &expected, opts.samples, opts.seed, opts.sigma_limit)
        .map_err(|e| e.at("monte_carlo"))?;

    let mut notes = Vec::new();
    if let Some(f) = mc.cubic_variant_disagreement {
        notes.push(format!(
            "membership uses |z3|^2 from expanding |f(z)|^2 < 1; a |z3|^3 exponent would change membership on {:.3}% of box samples",
            100.0 * f
        ));
    }
    Ok(OnepointReport {
        dim: n,
        family: map.family().clone(),
        degree: map.degree(),
        inverse_degree: map.inverse_degree(),
        checks,
        node,
        coefficient: vol,
        rule,
        pass: exact.pass && mc.pass,
        exact,
        monte_carlo: mc,
        notes,
    })
}
