//! Quadrature data extraction, identity certification and the converse round trip.

mod battery;
mod converse;
mod extract;
mod pullback;

pub use battery::{coordinate_frames, Battery, BatteryEval, BATTERY_VERSION};
pub use converse::{invert_graph, reconstruct_jacobian, ReconstructReport};
pub use extract::{
    coefficient_distance, collocation_basis, extract_by_collocation, extract_quadrature_data, CollocationReport, QuadNode,
    QuadratureData, NODE_MERGE_TOL,
};
pub use pullback::{pullback_graph, pullback_identity, pullback_integral, pullback_rule, PullbackSpec, PullbackValue};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::testfn::TestFunction;

type C = Complex<f64>;

/// Floor applied to in-basis residuals when comparing held-out residuals against them.
pub const HELD_OUT_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct ResidualEntry {
    pub label: String,
    pub held_out: bool,
    pub integral: C,
    pub quadrature: C,
    pub residual: f64,
    /// residual / ∫|h|.
    pub relative: f64,
    pub integral_error_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub battery_version: String,
    pub method: String,
    pub battery_size: usize,
    pub entries: Vec<ResidualEntry>,
    pub max_relative: f64,
    pub max_relative_in_basis: f64,
    pub max_relative_held_out: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares ∫h (precomputed) with Σ c h^{(β)}(q) for every battery function.
pub fn certify_identity(
    qd: &QuadratureData,
    battery: &Battery,
    integrals: &[PullbackValue],
    in_basis: impl Fn(&TestFunction<f64>) -> bool,
    method: &str,
    tolerance: f64,
) -> Result<ResidualReport> {
    if integrals.len() != battery.len() {
        return Err(Error::InvalidInput("one integral per battery function required".into()));
    }
    let entries: Vec<ResidualEntry> = battery
        .functions
        .iter()
        .zip(integrals)
        .map(|(h, iv)| {
            let q = qd.apply(h);
            let r = (iv.value - q).norm();
            ResidualEntry {
                label: h.label(),
                held_out: !in_basis(h),
                integral: iv.value,
                quadrature: q,
                residual: r,
                relative: r / iv.abs_integral.max(f64::MIN_POSITIVE),
                integral_error_estimate: iv.error_estimate,
            }
        })
        .collect();
    let max_of = |held: Option<bool>| {
        entries
            .iter()
            .filter(|e| held.is_none_or(|h| e.held_out == h))
            .map(|e| e.relative)
            .fold(0.0, f64::max)
    };
    let max_relative = max_of(None);
    let max_in = max_of(Some(false));
    let max_held = max_of(Some(true));
    let held_count = entries.iter().filter(|e| e.held_out).count();
    let generalizes = max_held <= 10.0 * max_in.max(HELD_OUT_FLOOR) || max_held <= tolerance * 1e-2;
    Ok(ResidualReport {
        battery_version: battery.version.clone(),
        method: method.into(),
        battery_size: battery.len(),
        pass: battery.len() >= 20 && held_count > 0 && max_relative <= tolerance && generalizes,
        entries,
        max_relative,
        max_relative_in_basis: max_in,
        max_relative_held_out: max_held,
        tolerance,
    })
}

/// Membership of a battery function in a scaled-monomial basis with per-coordinate exponent ranges.
pub fn in_monomial_ranges(ranges: &[(i32, i32, f64)]) -> impl Fn(&TestFunction<f64>) -> bool + '_ {
    move |h| match h {
        TestFunction::Monomial { exps, .. } => exps.iter().zip(ranges).all(|(e, r)| *e >= r.0 && *e <= r.1),
        _ => false,
    }
}
