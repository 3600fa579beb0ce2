//! Fiberwise injectivity certificate: argument-principle counts plus boundary-image separation.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::FiberTable;
use super::GraphMap;
use crate::domains::{polar_lattice, ring, Domain};
use crate::error::{Error, Result};

type C = Complex<f64>;

/// A map of the form (z′, z_n) ↦ (z′, g(z′, z_n)), known through g and ∂g/∂z_n on fibers.
pub trait FiberMap: Sync {
    /// Precomputed data for a fixed λ set, shared across z′ when the fiber is z′-independent.
    type Table: Sync;

    fn domain(&self) -> &Domain<f64>;
    /// (g, ∂g/∂z_n) at (z′, λ) for every λ in `ls`.
    fn fiber_values(&self, zp: &[C], ls: &[C]) -> Result<Vec<(C, C)>>;

    fn table(&self, _ls: &[C]) -> Option<Self::Table> {
        None
    }

    fn fiber_values_table(&self, zp: &[C], ls: &[C], _t: &Self::Table) -> Result<Vec<(C, C)>> {
        self.fiber_values(zp, ls)
    }
}

impl FiberMap for GraphMap {
    type Table = FiberTable;

    fn domain(&self) -> &Domain<f64> {
        GraphMap::domain(self)
    }

    fn fiber_values(&self, zp: &[C], ls: &[C]) -> Result<Vec<(C, C)>> {
        let s = self.slice(zp)?;
        ls.iter().map(|&l| Ok((s.g(l)?, s.v(l)))).collect()
    }

    fn table(&self, ls: &[C]) -> Option<FiberTable> {
        self.fiber_table(ls)
    }

    fn fiber_values_table(&self, zp: &[C], _ls: &[C], t: &FiberTable) -> Result<Vec<(C, C)>> {
        self.slice(zp)?.eval_table(t)
    }
}

/// A fiber map given by closures, for certificates of maps not built by the pipeline.
pub struct ClosureMap<G, D> {
    pub domain: Domain<f64>,
    pub g: G,
    pub dg: D,
}

impl<G, D> FiberMap for ClosureMap<G, D>
where
    G: Fn(&[C], C) -> C + Sync,
    D: Fn(&[C], C) -> C + Sync,
{
    type Table = ();

    fn domain(&self) -> &Domain<f64> {
        &self.domain
    }

    fn fiber_values(&self, zp: &[C], ls: &[C]) -> Result<Vec<(C, C)>> {
        Ok(ls.iter().map(|&l| ((self.g)(zp, l), (self.dg)(zp, l))).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectivityOptions {
    /// Relative margin of the z′ test lattice inside the base domain.
    pub margin: f64,
    pub lattice_radii: usize,
    pub lattice_angles: usize,
    /// Samples per boundary circle of each fiber.
    pub boundary_samples: usize,
    /// Side of the square target grid over the image bounding box.
    pub target_grid: usize,
    /// Distance from an integer beyond which a winding count is ambiguous.
    pub count_tol: f64,
}

impl Default for InjectivityOptions {
    fn default() -> Self {
        InjectivityOptions {
            margin: 0.05,
            lattice_radii: 9,
            lattice_angles: 9,
            boundary_samples: 512,
            target_grid: 24,
            count_tol: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    Rejected,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberCertificate {
    pub zprime: Vec<C>,
    pub status: CertificateStatus,
    pub targets: usize,
    /// Targets too close to the boundary image for the sampled integral to resolve.
    pub skipped: usize,
    pub max_count: i64,
    pub min_source_count: i64,
    pub ambiguous: usize,
    pub max_count_defect: f64,
    pub separation: f64,
    pub crossings: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub status: CertificateStatus,
    pub fibers: usize,
    pub min_separation: f64,
    pub max_count: i64,
    pub ambiguous_targets: usize,
    pub max_count_defect: f64,
    /// Fibers that did not certify (all of them listed when few).
    pub failures: Vec<FiberCertificate>,
}

impl InjectivityReport {
    pub fn certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

/// Boundary circles of a planar fiber, each with orientation (+1 outer, −1 inner).
fn boundary(fiber: &Domain<f64>) -> Result<Vec<(C, f64, f64)>> {
    match *fiber {
        Domain::Disc { center, radius } => Ok(vec![(center, radius, 1.0)]),
        Domain::Annulus { center, inner, outer } => Ok(vec![(center, outer, 1.0), (center, inner, -1.0)]),
        _ => Err(Error::Unsupported("fiber must be a disc or an annulus".into())),
    }
}

struct Curve {
    /// g at the samples, in traversal order.
    g: Vec<C>,
    /// g′(λ) dλ at the samples, trapezoid weight included.
    dg: Vec<C>,
}

fn boundary_points(fiber: &Domain<f64>, n: usize) -> Result<Vec<C>> {
    Ok(boundary(fiber)?.into_iter().flat_map(|(c, r, _)| ring(c, r, n, 0.0)).collect())
}

fn values<M: FiberMap + ?Sized>(map: &M, zp: &[C], ls: &[C], t: Option<&M::Table>) -> Result<Vec<(C, C)>> {
    match t {
        Some(t) => map.fiber_values_table(zp, ls, t),
        None => map.fiber_values(zp, ls),
    }
}

fn sample_boundary<M: FiberMap + ?Sized>(
    map: &M,
    zp: &[C],
    fiber: &Domain<f64>,
    n: usize,
    t: Option<&M::Table>,
) -> Result<Vec<Curve>> {
    let h = std::f64::consts::TAU / n as f64;
    let all = values(map, zp, &boundary_points(fiber, n)?, t)?;
    boundary(fiber)?
        .into_iter()
        .enumerate()
        .map(|(i, (c, r, orient))| {
            let pts = ring(c, r, n, 0.0);
            let vals = all[i * n..(i + 1) * n].to_vec();
            let mut g = Vec::with_capacity(n);
            let mut dg = Vec::with_capacity(n);
            for (p, (gv, d)) in pts.iter().zip(vals) {
                g.push(gv);
                dg.push(d * C::new(0.0, h) * (p - c) * orient);
            }
            Ok(Curve { g, dg })
        })
        .collect()
}

/// (1/2πi) Σ g′ dλ / (g − w) over all boundary components.
fn winding(curves: &[Curve], w: C) -> C {
    let mut s = C::new(0.0, 0.0);
    for cv in curves {
        for (g, d) in cv.g.iter().zip(&cv.dg) {
            s += d / (g - w);
        }
    }
    s / C::new(0.0, std::f64::consts::TAU)
}

fn seg_dist2(p: C, a: C, b: C) -> f64 {
    let ab = b - a;
    let l = ab.norm_sqr();
    let t = if l == 0.0 { 0.0 } else { (((p - a) * ab.conj()).re / l).clamp(0.0, 1.0) };
    (p - (a + ab * t)).norm_sqr()
}

fn dist_to_curves(curves: &[Curve], w: C) -> f64 {
    let mut d = f64::INFINITY;
    for cv in curves {
        let n = cv.g.len();
        for k in 0..n {
            d = d.min(seg_dist2(w, cv.g[k], cv.g[(k + 1) % n]));
        }
    }
    d.sqrt()
}

fn cross(a: C, b: C) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(p1: C, p2: C, q1: C, q2: C) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Crossings between non-adjacent boundary-image segments, and the separation margin: the least
/// distance between different components, or between points of one component at least an
/// eighth of a turn apart.
fn separation(curves: &[Curve]) -> (f64, usize) {
    let mut sep = f64::INFINITY;
    let mut crossings = 0;
    for (i, a) in curves.iter().enumerate() {
        let n = a.g.len();
        let gap = n / 8;
        for k in 0..n {
            for l in k + 1..n {
                let di = (l - k).min(n - (l - k));
                if di >= gap {
                    sep = sep.min((a.g[k] - a.g[l]).norm());
                }
                if di >= 2 && segments_intersect(a.g[k], a.g[(k + 1) % n], a.g[l], a.g[(l + 1) % n]) {
                    crossings += 1;
                }
            }
        }
        for b in &curves[i + 1..] {
            let m = b.g.len();
            for k in 0..n {
                for l in 0..m {
                    sep = sep.min((a.g[k] - b.g[l]).norm());
                    if segments_intersect(a.g[k], a.g[(k + 1) % n], b.g[l], b.g[(l + 1) % m]) {
                        crossings += 1;
                    }
                }
            }
        }
    }
    (sep, crossings)
}

fn max_segment(curves: &[Curve]) -> f64 {
    curves
        .iter()
        .flat_map(|c| {
            let n = c.g.len();
            (0..n).map(move |k| (c.g[(k + 1) % n] - c.g[k]).norm())
        })
        .fold(0.0, f64::max)
}

/// Interior source points of a fiber whose images must be counted exactly once.
fn interior_sources(fiber: &Domain<f64>) -> Vec<C> {
    match *fiber {
        Domain::Disc { center, radius } => {
            let mut v = vec![center];
            for f in [0.3, 0.6, 0.9] {
                v.extend(ring(center, radius * f, 12, 0.1));
            }
            v
        }
        Domain::Annulus { center, inner, outer } => [0.15, 0.5, 0.85]
            .iter()
            .flat_map(|t| ring(center, inner + (outer - inner) * t, 12, 0.1))
            .collect(),
        _ => vec![],
    }
}

pub fn certify_fiber<M: FiberMap + ?Sized>(map: &M, zp: &[C], opts: &InjectivityOptions) -> Result<FiberCertificate> {
    certify_fiber_with(map, zp, opts, None)
}

/// Shared tables for the boundary samples and the interior sources.
type Tables<'a, M> = Option<(&'a <M as FiberMap>::Table, &'a <M as FiberMap>::Table)>;

fn certify_fiber_with<M: FiberMap + ?Sized>(
    map: &M,
    zp: &[C],
    opts: &InjectivityOptions,
    tables: Tables<'_, M>,
) -> Result<FiberCertificate> {
    let fiber = map.domain().fiber_domain(zp)?;
    let mut curves = sample_boundary(map, zp, &fiber, opts.boundary_samples, tables.map(|t| t.0))?;
    let (sep, crossings) = separation(&curves);
    let src = interior_sources(&fiber);
    let src_targets: Vec<C> = values(map, zp, &src, tables.map(|t| t.1))?
        .into_iter()
        .map(|(g, _)| g)
        .collect();
    let (mut lo, mut hi) = (C::new(f64::INFINITY, f64::INFINITY), C::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in curves.iter().flat_map(|c| c.g.iter()) {
        lo = C::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = C::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let m = opts.target_grid.max(2);
    let mut grid = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let t = C::new((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
            grid.push(C::new(lo.re + (hi.re - lo.re) * t.re, lo.im + (hi.im - lo.im) * t.im));
        }
    }
    let mut refined = false;
    let mut result;
    loop {
        let min_d = 2.0 * max_segment(&curves);
        let mut max_count = i64::MIN;
        let mut min_src = i64::MAX;
        let mut ambiguous = 0;
        let mut skipped = 0;
        let mut defect = 0.0f64;
        let mut targets = 0;
        for (k, &w) in src_targets.iter().chain(grid.iter()).enumerate() {
            let is_src = k < src_targets.len();
            if dist_to_curves(&curves, w) < min_d {
                skipped += 1;
                continue;
            }
            targets += 1;
            let s = winding(&curves, w);
            let r = s.re.round();
            let e = (s - C::new(r, 0.0)).norm();
            defect = defect.max(e);
            if e > opts.count_tol {
                ambiguous += 1;
                continue;
            }
            max_count = max_count.max(r as i64);
            if is_src {
                min_src = min_src.min(r as i64);
            }
        }
        result = FiberCertificate {
            zprime: zp.to_vec(),
            status: CertificateStatus::Certified,
            targets,
            skipped,
            max_count,
            min_source_count: min_src,
            ambiguous,
            max_count_defect: defect,
            separation: sep,
            crossings,
        };
        if ambiguous == 0 || refined {
            break;
        }
        refined = true;
        curves = sample_boundary(map, zp, &fiber, opts.boundary_samples * 4, None)?;
    }
    let r = &mut result;
    let bad_source = r.min_source_count != 1 && r.min_source_count != i64::MAX;
    r.status = if r.crossings > 0 || r.max_count > 1 || bad_source || !(r.separation > 0.0) {
        CertificateStatus::Rejected
    } else if r.ambiguous > 0 || r.min_source_count == i64::MAX {
        CertificateStatus::Inconclusive
    } else {
        CertificateStatus::Certified
    };
    Ok(result)
}

/// Runs [`certify_fiber`] over the z′ test lattice.
pub fn injectivity_certificate<M: FiberMap + ?Sized>(map: &M, opts: &InjectivityOptions) -> Result<InjectivityReport> {
    let base = map.domain().base_domain()?;
    let lattice = base_lattice(&base, opts)?;
    let fixed = matches!(map.domain(), Domain::Product { .. } | Domain::Polydisc { .. });
    let tables = match (fixed, lattice.first()) {
        (true, Some(zp)) => {
            let fiber = map.domain().fiber_domain(zp)?;
            let b = map.table(&boundary_points(&fiber, opts.boundary_samples)?);
            let s = map.table(&interior_sources(&fiber));
            b.zip(s)
        }
        _ => None,
    };
    let fibers: Vec<FiberCertificate> = lattice
        .par_iter()
        .map(|zp| certify_fiber_with(map, zp, opts, tables.as_ref().map(|(b, s)| (b, s))))
        .collect::<Result<_>>()?;
    let status = if fibers.iter().any(|f| f.status == CertificateStatus::Rejected) {
        CertificateStatus::Rejected
    } else if fibers.iter().any(|f| f.status == CertificateStatus::Inconclusive) {
        CertificateStatus::Inconclusive
    } else {
        CertificateStatus::Certified
    };
    let failures: Vec<FiberCertificate> = fibers
        .iter()
        .filter(|f| f.status != CertificateStatus::Certified)
        .take(16)
        .cloned()
        .collect();
    Ok(InjectivityReport {
        status,
        fibers: fibers.len(),
        min_separation: fibers.iter().map(|f| f.separation).fold(f64::INFINITY, f64::min),
        max_count: fibers.iter().map(|f| f.max_count).max().unwrap_or(0),
        ambiguous_targets: fibers.iter().map(|f| f.ambiguous).sum(),
        max_count_defect: fibers.iter().map(|f| f.max_count_defect).fold(0.0, f64::max),
        failures,
    })
}

/// The z′ test lattice: polar lattice of the base at the margin.
pub fn base_lattice(base: &Domain<f64>, opts: &InjectivityOptions) -> Result<Vec<Vec<C>>> {
    polar_lattice(base, opts.margin, opts.lattice_radii, opts.lattice_angles)
}
