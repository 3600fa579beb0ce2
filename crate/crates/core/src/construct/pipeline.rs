//! End-to-end construction: fit → periods → M → correction → antiderivative → graph map →
//! injectivity certificate.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inject::{base_lattice, injectivity_certificate, InjectivityOptions, InjectivityReport};
use super::periods::{build_period_matrix, correct_periods, CorrectionReport, PeriodMatrix};
use super::{GraphMap, PathKind};
use crate::diff::cauchy_derivative;
use crate::domains::{polar_lattice, Domain};
use crate::error::{Error, Result};
use crate::kernels::{KernelDescriptor, KernelFunction, DEFAULT_MAX_ORDER};
use crate::span::{fit_constant_one, FitOptions, FitReport, SpanElement, SpanTerm};

type C = Complex<f64>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub max_order: u32,
    /// Degree cap and volume-rule order of Reinhardt series kernels (Hartogs, ellipsoid).
    pub degree_cap: u32,
    pub rule_order: usize,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            max_order: DEFAULT_MAX_ORDER,
            degree_cap: 56,
            rule_order: 64,
        }
    }
}

impl KernelSpec {
    pub fn build(&self, domain: &Domain<f64>) -> Result<KernelFunction<f64>> {
        match domain {
            Domain::Hartogs { .. } | Domain::Ellipsoid { .. } => {
                KernelFunction::reinhardt(domain.clone(), self.degree_cap, self.rule_order)
            }
            _ => KernelFunction::with_max_order(domain.clone(), self.max_order),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructTolerances {
    pub period: f64,
    pub path: f64,
    pub jacobian: f64,
    pub holomorphy: f64,
}

impl Default for ConstructTolerances {
    fn default() -> Self {
        ConstructTolerances {
            period: 1e-10,
            path: 1e-10,
            jacobian: 1e-8,
            holomorphy: 1e-8,
        }
    }
}

impl ConstructTolerances {
    pub fn scaled(&self, s: f64) -> Self {
        ConstructTolerances {
            period: self.period * s,
            path: self.path * s,
            jacobian: self.jacobian * s,
            holomorphy: self.holomorphy * s,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    pub domain: Domain<f64>,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub fit: FitOptions,
    /// Use the single term K(·, c)/K(c, c) at the center c instead of a least-squares fit.
    #[serde(default)]
    pub exact_fit: bool,
    #[serde(default = "default_contour_samples")]
    pub contour_samples: usize,
    #[serde(default)]
    pub tolerances: ConstructTolerances,
    #[serde(default)]
    pub injectivity: InjectivityOptions,
}

fn default_contour_samples() -> usize {
    256
}

impl ConstructConfig {
    pub fn new(domain: Domain<f64>) -> Self {
        ConstructConfig {
            domain,
            kernel: KernelSpec::default(),
            fit: FitOptions::default(),
            exact_fit: false,
            contour_samples: default_contour_samples(),
            tolerances: ConstructTolerances::default(),
            injectivity: InjectivityOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructChecks {
    pub fit_within_epsilon: bool,
    pub max_residual_period: f64,
    pub path_independence: f64,
    /// |closed-form g − path-integral g| at the check points (0 when no closed form exists).
    pub closed_form_agreement: f64,
    pub jacobian_residual: f64,
    pub holomorphy_residual: f64,
    /// sup |g − z_n| over the closeness grid.
    pub closeness: f64,
    /// sup |v − 1| over the same grid.
    pub sup_v_minus_one: f64,
    pub check_points: usize,
    pub closeness_points: usize,
}

/// Serializable form of a graph map; g is recomputed from v, never stored.
#[derive(Clone, Debug, Serialize)]
pub struct GraphMapRecord {
    pub domain: Domain<f64>,
    pub base_point: String,
    pub kernel: KernelDescriptor,
    pub terms: Vec<SpanTerm<f64>>,
}

impl GraphMap {
    pub fn record(&self) -> GraphMapRecord {
        let base_point = match self.domain().factors().last() {
            Some(Domain::Annulus { .. }) => "annulus fiber: center + (inner + outer)/2".into(),
            _ => "disc fiber: center".into(),
        };
        GraphMapRecord {
            domain: self.domain().clone(),
            base_point,
            kernel: self.v().kernel().descriptor(),
            terms: self.v().terms().to_vec(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub kernel: Arc<KernelFunction<f64>>,
    pub u: SpanElement<f64>,
    pub fit: FitReport,
    pub period_matrix: PeriodMatrix,
    pub correction: CorrectionReport,
    pub v: SpanElement<f64>,
    pub graph: GraphMap,
    pub checks: ConstructChecks,
    pub injectivity: InjectivityReport,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(&'static str, f64)>,
}

impl Construction {
    pub fn certified(&self) -> bool {
        self.injectivity.certified()
    }
}

struct Timer(Vec<(&'static str, f64)>, Instant);

impl Timer {
    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.0.push((stage, (now - self.1).as_secs_f64()));
        self.1 = now;
    }
}

fn exact_one(kernel: &Arc<KernelFunction<f64>>) -> Result<(SpanElement<f64>, FitReport)> {
    let c: Vec<C> = kernel
        .domain()
        .factors()
        .iter()
        .flat_map(|f| match f {
            Domain::Disc { center, .. } => vec![*center],
            Domain::Annulus { center, .. } => vec![*center],
            other => vec![C::new(0.0, 0.0); other.dim()],
        })
        .collect();
    let n = c.len();
    if !kernel.domain().contains(&c)? {
        return Err(Error::InvalidInput("exact fit needs the center inside the domain".into()));
    }
    let k0 = kernel.eval(&c, &c)?;
    let u = SpanElement::single(kernel.clone(), c.clone(), vec![0; n], k0.inv())?;
    let report = FitReport {
        sup_error: 0.0,
        deriv_sup_errors: vec![],
        rms_residual: 0.0,
        grid: crate::span::GridDescription {
            fit_points: 0,
            verify_points: 0,
            margin: 0.0,
            layout: "exact single term at the center".into(),
        },
        residual_history: vec![],
        condition_estimate: 1.0,
        lambda: 0.0,
        nodes: vec![c.into()],
        budget_exceeded: false,
    };
    Ok((u, report))
}

/// Check points for path, Jacobian and holomorphy tests: a thinned z′ lattice × a few fiber points.
fn check_points(domain: &Domain<f64>, lattice: &[Vec<C>]) -> Result<Vec<Vec<C>>> {
    let step = (lattice.len() / 6).max(1);
    let mut out = Vec::new();
    for zp in lattice.iter().step_by(step) {
        let fiber = domain.fiber_domain(zp)?;
        for p in polar_lattice(&fiber, 0.1, 2, 3)?.into_iter().skip(1) {
            let mut z = zp.clone();
            z.extend(p);
            out.push(z);
        }
    }
    Ok(out)
}

fn dist_to_fiber_boundary(fiber: &Domain<f64>, l: C) -> f64 {
    match *fiber {
        Domain::Disc { center, radius } => radius - (l - center).norm(),
        Domain::Annulus { center, inner, outer } => {
            let r = (l - center).norm();
            (outer - r).min(r - inner)
        }
        _ => 0.0,
    }
}

/// Fourth-order central difference of g along the direction e in variable k.
fn directional(graph: &GraphMap, z: &[C], k: usize, e: C, h: f64) -> Result<C> {
    let at = |t: f64| -> Result<C> {
        let mut p = z.to_vec();
        p[k] += e * t;
        graph.g(&p)
    };
    Ok((-at(2.0 * h)? + at(h)? * 8.0 - at(-h)? * 8.0 + at(-2.0 * h)?) / (12.0 * h))
}

pub fn construct_quadrature_domain(cfg: &ConstructConfig) -> Result<Construction> {
    let mut timer = Timer(Vec::new(), Instant::now());
    let tol = &cfg.tolerances;
    let domain = &cfg.domain;
    domain.validate().map_err(|e| e.at("config"))?;
    let base = domain.base_domain().map_err(|e| e.at("config"))?;

    let kernel = Arc::new(cfg.kernel.build(domain).map_err(|e| e.at("kernel"))?);
    timer.lap("kernel");

    let (u, fit) = if cfg.exact_fit {
        exact_one(&kernel)
    } else {
        fit_constant_one(&kernel, &cfg.fit)
    }
    .map_err(|e| e.at("fit"))?;
    timer.lap("fit");

    let lattice = base_lattice(&base, &cfg.injectivity).map_err(|e| e.at("periods"))?;
    let contours = match kernel.fiber_kernel() {
        Some(fk) => fk.domain().inner_contours(cfg.contour_samples).map_err(|e| e.at("periods"))?,
        None => vec![],
    };
    let pm = match kernel.fiber_kernel() {
        Some(fk) => build_period_matrix(fk, &contours, None).map_err(|e| e.at("period_matrix"))?,
        None => PeriodMatrix::empty(),
    };
    timer.lap("period_matrix");

    let (v, _coeffs, correction) =
        correct_periods(&u, &pm, &contours, &lattice, tol.period).map_err(|e| e.at("correction"))?;
    timer.lap("correction");

    let graph = GraphMap::new(v.clone()).map_err(|e| e.at("antiderivative"))?;
    let pts = check_points(domain, &lattice).map_err(|e| e.at("antiderivative"))?;
    let path = pts
        .par_iter()
        .map(|z| -> Result<(f64, f64)> {
            let a = graph.g_path(z, PathKind::Canonical)?;
            let b = graph.g_path(z, PathKind::Alternate)?;
            let fast = if graph.has_closed_form() { (graph.g(z)? - a).norm() } else { 0.0 };
            Ok(((a - b).norm(), fast))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at("antiderivative"))?;
    let path_independence = path.iter().map(|p| p.0).fold(0.0, f64::max);
    let closed_form_agreement = path.iter().map(|p| p.1).fold(0.0, f64::max);
    if path_independence > tol.path {
        return Err(Error::PathDependence(path_independence).at("antiderivative"));
    }
    if closed_form_agreement > tol.path {
        return Err(Error::PathDependence(closed_form_agreement).at("antiderivative"));
    }
    timer.lap("antiderivative");

    let n = domain.dim();
    let jac = pts
        .par_iter()
        .map(|z| -> Result<(f64, f64)> {
            let zp = &z[..n - 1];
            let s = graph.slice(zp)?;
            let h = (0.5 * dist_to_fiber_boundary(&s.fiber, z[n - 1])).min(1e-2);
            let dg = cauchy_derivative(|l| s.g(l).unwrap_or(C::new(f64::NAN, f64::NAN)), z[n - 1], 1, h, 16);
            let jr = (dg - v.eval(z)?).norm();
            let mut cr = 0.0f64;
            for k in 0..n {
                let dx = directional(&graph, z, k, C::new(1.0, 0.0), 1e-3)?;
                let dy = directional(&graph, z, k, C::new(0.0, 1.0), 1e-3)?;
                cr = cr.max((dy - C::i() * dx).norm());
            }
            Ok((jr, cr))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at("graph_map"))?;
    let jacobian_residual = jac.iter().map(|p| p.0).fold(0.0, f64::max);
    let holomorphy_residual = jac.iter().map(|p| p.1).fold(0.0, f64::max);
    if !(jacobian_residual <= tol.jacobian) {
        return Err(Error::NonConvergence(format!("Jacobian identity residual {jacobian_residual:.3e}")).at("graph_map"));
    }
    if !(holomorphy_residual <= tol.holomorphy) {
        return Err(Error::NonConvergence(format!("Cauchy-Riemann residual {holomorphy_residual:.3e}")).at("graph_map"));
    }
    let close = lattice
        .par_iter()
        .map(|zp| -> Result<(f64, f64, usize)> {
            let s = graph.slice(zp)?;
            let mut c = 0.0f64;
            let mut w = 0.0f64;
            let pts = polar_lattice(&s.fiber, 0.01, 4, 16)?;
            for p in &pts {
                c = c.max((s.g(p[0])? - p[0]).norm());
                w = w.max((s.v(p[0]) - 1.0).norm());
            }
            Ok((c, w, pts.len()))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at("graph_map"))?;
    timer.lap("graph_map");

    let injectivity = injectivity_certificate(&graph, &cfg.injectivity).map_err(|e| e.at("injectivity"))?;
    timer.lap("injectivity");

    let checks = ConstructChecks {
        fit_within_epsilon: fit.sup_error <= cfg.fit.epsilon,
        max_residual_period: correction.max_residual_period,
        path_independence,
        closed_form_agreement,
        jacobian_residual,
        holomorphy_residual,
        closeness: close.iter().map(|c| c.0).fold(0.0, f64::max),
        sup_v_minus_one: close.iter().map(|c| c.1).fold(0.0, f64::max),
        check_points: pts.len(),
        closeness_points: close.iter().map(|c| c.2).sum(),
    };
    Ok(Construction {
        kernel,
        u,
        fit,
        period_matrix: pm,
        correction,
        v,
        graph,
        checks,
        injectivity,
        timings: timer.0,
    })
}
