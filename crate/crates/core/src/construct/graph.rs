//! The graph map f(z′, z_n) = (z′, g(z′, z_n)) with ∂g/∂z_n = v.

use num_complex::Complex;

use crate::domains::{Domain, MultiIndex};
use crate::error::{check_dim, Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::quad::adaptive_gl;
use crate::span::{eval_poly, horner, Factored, SpanElement};

type C = Complex<f64>;

const PATH_TOL: f64 = 1e-13;
const PATH_DEPTH: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    /// Disc fiber: straight segment. Annulus fiber: arc at |a| through the short side, then radial.
    Canonical,
    /// Radial first, then the arc; on an annulus the arc runs the long way around the hole.
    Alternate,
}

#[derive(Clone, Debug)]
pub enum Segment {
    Line(C, C),
    Arc { center: C, radius: f64, t0: f64, t1: f64 },
}

impl Segment {
    /// Point and velocity at s ∈ [0, 1].
    pub fn at(&self, s: f64) -> (C, C) {
        match *self {
            Segment::Line(a, b) => (a + (b - a) * s, b - a),
            Segment::Arc { center, radius, t0, t1 } => {
                let t = t0 + (t1 - t0) * s;
                let e = C::from_polar(1.0, t);
                (center + e * radius, C::new(0.0, radius * (t1 - t0)) * e)
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        match *self {
            Segment::Line(a, b) => (a - b).norm() == 0.0,
            Segment::Arc { radius, t0, t1, .. } => radius == 0.0 || t0 == t1,
        }
    }
}

/// Base point of the fiber primitive: the center of a disc, the mid-radius point on the
/// positive real side of an annulus.
pub fn fiber_base_point(fiber: &Domain<f64>) -> Result<C> {
    match *fiber {
        Domain::Disc { center, .. } => Ok(center),
        Domain::Annulus { center, inner, outer } => Ok(center + 0.5 * (inner + outer)),
        _ => Err(Error::Unsupported("fiber must be a disc or an annulus".into())),
    }
}

pub fn fiber_path(fiber: &Domain<f64>, z: C, kind: PathKind) -> Result<Vec<Segment>> {
    let a = fiber_base_point(fiber)?;
    let (center, annulus) = match *fiber {
        Domain::Disc { center, .. } => (center, false),
        Domain::Annulus { center, .. } => (center, true),
        _ => unreachable!(),
    };
    let rz = (z - center).norm();
    let th = (z - center).arg();
    let ra = (a - center).norm();
    let segs = match (annulus, kind) {
        (false, PathKind::Canonical) => vec![Segment::Line(a, z)],
        (false, PathKind::Alternate) => vec![
            Segment::Line(a, center + rz),
            Segment::Arc { center, radius: rz, t0: 0.0, t1: th },
        ],
        (true, PathKind::Canonical) => vec![
            Segment::Arc { center, radius: ra, t0: 0.0, t1: th },
            Segment::Line(center + C::from_polar(ra, th), z),
        ],
        (true, PathKind::Alternate) => {
            let long = if th >= 0.0 { th - std::f64::consts::TAU } else { th + std::f64::consts::TAU };
            vec![
                Segment::Line(a, center + rz),
                Segment::Arc { center, radius: rz, t0: 0.0, t1: long },
            ]
        }
    };
    let segs: Vec<Segment> = segs.into_iter().filter(|s| !s.is_degenerate()).collect();
    for s in &segs {
        for k in 0..=64 {
            let (p, _) = s.at(k as f64 / 64.0);
            if !fiber.contains(&[p])? {
                return Err(Error::PathExitsDomain(format!("{p}")));
            }
        }
    }
    Ok(segs)
}

#[derive(Clone, Debug)]
enum Fast {
    /// g = a + Σ_d K_D,d(z′) Σ_o C[d][o] (P_o(z_n) − P_o(a)).
    Factored(Box<Factored<f64>>),
    /// Monomial coefficients of the primitive G with ∂G/∂z_n = v and G|_{z_n=0} = 0.
    Poly(Vec<(MultiIndex, C)>),
    None,
}

#[derive(Clone, Debug)]
pub struct GraphMap {
    domain: Domain<f64>,
    v: SpanElement<f64>,
    fast: Fast,
}

/// v and g restricted to one fiber {z′} × Ω_{z′}.
pub struct FiberSlice<'a> {
    map: &'a GraphMap,
    zp: Vec<C>,
    pub fiber: Domain<f64>,
    pub base_point: C,
    kind: SliceKind,
}

enum SliceKind {
    /// Fiber polynomial of v and of its primitive.
    Poly(Vec<C>, Vec<C>),
    /// Contracted weights W_o and the primitive offset Σ W_o P_o(a).
    Factored(Vec<C>, Option<C>),
    Generic,
}

impl GraphMap {
    pub fn new(v: SpanElement<f64>) -> Result<Self> {
        let domain = v.kernel().domain().clone();
        let base = domain.base_domain()?;
        if domain.dim() < 2 || base.dim() + 1 != domain.dim() {
            return Err(Error::Unsupported("graph maps need a fibered domain".into()));
        }
        let n = domain.dim();
        let fast = if let Some(p) = v.polynomial() {
            if !matches!(domain, Domain::Hartogs { .. }) {
                return Err(Error::Unsupported("polynomial graph maps need disc fibers centred at 0".into()));
            }
            Fast::Poly(
                p.iter()
                    .map(|(g, c)| {
                        let mut e = g.clone();
                        e.0[n - 1] += 1;
                        { let k = f64::from(e.0[n - 1]); (e, c / k) }
                    })
                    .collect(),
            )
        } else if let Some(f) = v.factored() {
            if f.fiber_primitives(fiber_base_point(f.fiber.domain())?).is_some() {
                Fast::Factored(Box::new(f))
            } else {
                Fast::None
            }
        } else {
            Fast::None
        };
        Ok(GraphMap { domain, v, fast })
    }

    pub fn domain(&self) -> &Domain<f64> {
        &self.domain
    }

    pub fn v(&self) -> &SpanElement<f64> {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self.fast, Fast::None)
    }

    pub fn slice(&self, zp: &[C]) -> Result<FiberSlice<'_>> {
        check_dim(self.dim() - 1, zp.len())?;
        let fiber = self.domain.fiber_domain(zp)?;
        let base_point = fiber_base_point(&fiber)?;
        let kind = match &self.fast {
            Fast::Poly(_) => {
                let p = self.v.fiber_polynomial(zp).expect("polynomial element");
                let mut q = vec![C::new(0.0, 0.0); p.len() + 1];
                for (k, c) in p.iter().enumerate() {
                    q[k + 1] = c / (k + 1) as f64;
                }
                SliceKind::Poly(p, q)
            }
            Fast::Factored(f) => {
                let w = weights(f, zp);
                let off = f
                    .fiber_primitives(base_point)
                    .map(|pa| pa.iter().zip(&w).map(|(p, w)| p * w).sum());
                SliceKind::Factored(w, off)
            }
            Fast::None => SliceKind::Generic,
        };
        Ok(FiberSlice {
            map: self,
            zp: zp.to_vec(),
            fiber,
            base_point,
            kind,
        })
    }

    /// g(z) from the closed-form primitive when available, else along the canonical path.
    pub fn g(&self, z: &[C]) -> Result<C> {
        check_dim(self.dim(), z.len())?;
        let n = z.len();
        let s = self.slice(&z[..n - 1])?;
        if !s.fiber.contains(&z[n - 1..])? {
            return Err(Error::OutsideDomain(format!("{z:?}")));
        }
        match s.g_fast(z[n - 1]) {
            Some(g) => Ok(g),
            None => s.g_path(z[n - 1], PathKind::Canonical),
        }
    }

    pub fn g_path(&self, z: &[C], kind: PathKind) -> Result<C> {
        check_dim(self.dim(), z.len())?;
        let n = z.len();
        self.slice(&z[..n - 1])?.g_path(z[n - 1], kind)
    }

    pub fn eval(&self, z: &[C]) -> Result<Vec<C>> {
        let mut out = z.to_vec();
        let n = z.len();
        out[n - 1] = self.g(z)?;
        Ok(out)
    }

    /// det Df = ∂g/∂z_n = v.
    pub fn jacobian_det(&self, z: &[C]) -> Result<C> {
        self.v.eval(z)
    }

    /// Taylor jet of g at b to the given order.
    pub fn g_jet(&self, b: &[C], order: u32) -> Result<Jet<f64>> {
        check_dim(self.dim(), b.len())?;
        if !self.domain.contains(b)? {
            return Err(Error::OutsideDomain(format!("{b:?}")));
        }
        let n = b.len();
        let space = JetSpace::new(n, order);
        let pt = Jet::point(&space, b);
        match &self.fast {
            Fast::Poly(p) => Ok(eval_poly(p, &pt)),
            Fast::Factored(f) => {
                let a = fiber_base_point(&self.domain.fiber_domain(&b[..n - 1])?)?;
                let pb = f.fiber_primitives(b[n - 1]).expect("closed-form primitive");
                let pa = f.fiber_primitives(a).expect("closed-form primitive");
                let diff: Vec<Jet<f64>> = pb
                    .iter()
                    .zip(&pa)
                    .map(|(x, y)| Jet::constant(&space, x - y))
                    .collect();
                let kd = f.base_values(&pt[..n - 1]);
                let head = Factored::dot(&kd, &f.contract_fiber(&diff));
                let tail = self.v.eval_generic(&pt).integrate(n - 1);
                Ok(Jet::constant(&space, a) + head + tail)
            }
            Fast::None => self.g_jet_numeric(b, order),
        }
    }

    /// Jet of g at b through a jet-valued line integral along the canonical path.
    pub fn g_jet_numeric(&self, b: &[C], order: u32) -> Result<Jet<f64>> {
        check_dim(self.dim(), b.len())?;
        let n = b.len();
        let fiber = self.domain.fiber_domain(&b[..n - 1])?;
        let a = fiber_base_point(&fiber)?;
        let space = JetSpace::new(n, order);
        let pt = Jet::point(&space, b);
        let mut acc = Jet::constant(&space, a);
        for seg in fiber_path(&fiber, b[n - 1], PathKind::Canonical)? {
            let f = |s: f64| {
                let (p, dp) = seg.at(s);
                let mut z = pt.clone();
                z[n - 1] = Jet::constant(&space, p);
                let j = self.v.eval_generic(&z);
                j.coeffs().iter().map(|c| c * dp).collect::<Vec<C>>()
            };
            let vals = adaptive_gl(&f, space.len(), PATH_TOL, PATH_DEPTH)?;
            let mut j = Jet::constant(&space, C::new(0.0, 0.0));
            j.coeffs_mut().copy_from_slice(&vals);
            acc = acc + j;
        }
        Ok(acc + self.v.eval_generic(&pt).integrate(n - 1))
    }
}

/// Fiber-key values k_o(λ) and primitives P_o(λ) at a fixed point set, reusable across z′ when
/// the fiber does not depend on z′.
#[derive(Clone, Debug)]
pub struct FiberTable {
    pub points: Vec<C>,
    k: Vec<Vec<C>>,
    p: Vec<Vec<C>>,
}

impl GraphMap {
    /// None unless the domain is a product with a closed-form fiber primitive.
    pub fn fiber_table(&self, ls: &[C]) -> Option<FiberTable> {
        let Fast::Factored(f) = &self.fast else { return None };
        if !matches!(self.domain, Domain::Product { .. } | Domain::Polydisc { .. }) {
            return None;
        }
        let mut k = Vec::with_capacity(ls.len());
        let mut p = Vec::with_capacity(ls.len());
        for &l in ls {
            k.push(f.fiber_values(&l));
            p.push(f.fiber_primitives(l)?);
        }
        Some(FiberTable {
            points: ls.to_vec(),
            k,
            p,
        })
    }
}

fn weights(f: &Factored<f64>, zp: &[C]) -> Vec<C> {
    let kd = f.base_values(zp);
    (0..f.okeys.len())
        .map(|o| kd.iter().zip(&f.coef).map(|(k, row)| k * row[o]).sum())
        .collect()
}

impl FiberSlice<'_> {
    pub fn zprime(&self) -> &[C] {
        &self.zp
    }

    pub fn v(&self, l: C) -> C {
        match &self.kind {
            SliceKind::Poly(p, _) => horner(p, l),
            SliceKind::Factored(w, _) => {
                let Fast::Factored(f) = &self.map.fast else { unreachable!() };
                f.fiber_values(&l).iter().zip(w).map(|(k, w)| k * w).sum()
            }
            SliceKind::Generic => {
                let mut z = self.zp.clone();
                z.push(l);
                self.map.v.eval_raw(&z)
            }
        }
    }

    /// (g, v) at the table points.
    pub fn eval_table(&self, t: &FiberTable) -> Result<Vec<(C, C)>> {
        match &self.kind {
            SliceKind::Factored(w, Some(off)) => Ok(t
                .k
                .iter()
                .zip(&t.p)
                .map(|(k, p)| {
                    let v: C = k.iter().zip(w).map(|(k, w)| k * w).sum();
                    let g: C = p.iter().zip(w).map(|(p, w)| p * w).sum();
                    (self.base_point + g - off, v)
                })
                .collect()),
            _ => t.points.iter().map(|&l| Ok((self.g(l)?, self.v(l)))).collect(),
        }
    }

    /// g from the closed-form primitive; None when the kernel has none.
    pub fn g_fast(&self, l: C) -> Option<C> {
        match &self.kind {
            SliceKind::Poly(_, q) => Some(horner(q, l)),
            SliceKind::Factored(w, Some(off)) => {
                let Fast::Factored(f) = &self.map.fast else { unreachable!() };
                let p = f.fiber_primitives(l)?;
                Some(self.base_point + p.iter().zip(w).map(|(p, w)| p * w).sum::<C>() - off)
            }
            _ => None,
        }
    }

    pub fn g(&self, l: C) -> Result<C> {
        match self.g_fast(l) {
            Some(g) => Ok(g),
            None => self.g_path(l, PathKind::Canonical),
        }
    }

    /// a + ∫_path v(z′, λ) dλ by adaptive Gauss–Legendre.
    pub fn g_path(&self, l: C, kind: PathKind) -> Result<C> {
        let mut acc = self.base_point;
        for seg in fiber_path(&self.fiber, l, kind)? {
            let f = |s: f64| {
                let (p, dp) = seg.at(s);
                vec![self.v(p) * dp]
            };
            acc += adaptive_gl(&f, 1, PATH_TOL, PATH_DEPTH)?[0];
        }
        Ok(acc)
    }
}
