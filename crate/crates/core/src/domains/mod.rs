//! Model domains of ℂⁿ: membership, analytic volumes, contours and volume rules.

mod contour;
mod lattice;
mod rule;

pub use contour::Contour;
pub use lattice::{polar_lattice, ring};
pub use rule::{FiberedRule, RuleSpec, VolumeRule};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{factorial, Cx, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint<T> {
    pub coords: Vec<Cx<T>>,
}

impl<T: Real> ComplexPoint<T> {
    pub fn new(coords: Vec<Cx<T>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("a point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(ComplexPoint { coords })
    }

    pub fn origin(n: usize) -> Self {
        ComplexPoint {
            coords: vec![Complex::new(T::zero(), T::zero()); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dist(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }
}

impl<T> From<Vec<Cx<T>>> for ComplexPoint<T> {
    fn from(coords: Vec<Cx<T>>) -> Self {
        ComplexPoint { coords }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn factorial<T: Real>(&self) -> T {
        self.0.iter().fold(T::one(), |a, &k| a * factorial::<T>(k))
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// All multi-indices in `n` variables with total order ≤ `max`, graded.
    pub fn all_up_to(n: usize, max: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for deg in 0..=max {
            let mut cur = vec![0u32; n];
            graded(&mut out, &mut cur, 0, deg);
        }
        out
    }
}

fn graded(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rem: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for k in (0..=rem).rev() {
        cur[pos] = k;
        graded(out, cur, pos + 1, rem - k);
    }
    cur[pos] = 0;
}

/// A model domain. Planar kinds carry their own affine normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain<T> {
    Disc { center: Cx<T>, radius: T },
    /// `{ inner < |z - center| < outer }`.
    Annulus { center: Cx<T>, inner: T, outer: T },
    Ball { dim: usize },
    Polydisc { radii: Vec<T> },
    Product { factors: Vec<Domain<T>> },
    /// Complete Reinhardt ellipsoid `Σ |z_i|^{2 m_i} < 1` in ℂ².
    Ellipsoid { exponents: Vec<u32> },
    /// `{ |z1| < base_radius, |z2| < R(|z1|²) }` with `R(s) = Σ profile[k] s^k`.
    Hartogs { base_radius: T, profile: Vec<T> },
}

impl<T: Real> Domain<T> {
    pub fn unit_disc() -> Self {
        Domain::Disc {
            center: Complex::new(T::zero(), T::zero()),
            radius: T::one(),
        }
    }

    pub fn disc(center: Cx<T>, radius: T) -> Result<Self> {
        let d = Domain::Disc { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(center: Cx<T>, inner: T, outer: T) -> Result<Self> {
        let d = Domain::Annulus {
            center,
            inner,
            outer,
        };
        d.validate()?;
        Ok(d)
    }

    /// Standard annulus `{ r < |z| < 1 }`.
    pub fn std_annulus(r: T) -> Result<Self> {
        Self::annulus(Complex::new(T::zero(), T::zero()), r, T::one())
    }

    pub fn ball(dim: usize) -> Result<Self> {
        let d = Domain::Ball { dim };
        d.validate()?;
        Ok(d)
    }

    pub fn polydisc(radii: Vec<T>) -> Result<Self> {
        let d = Domain::Polydisc { radii };
        d.validate()?;
        Ok(d)
    }

    pub fn product(factors: Vec<Domain<T>>) -> Result<Self> {
        let d = Domain::Product { factors };
        d.validate()?;
        Ok(d)
    }

    pub fn ellipsoid(exponents: Vec<u32>) -> Result<Self> {
        let d = Domain::Ellipsoid { exponents };
        d.validate()?;
        Ok(d)
    }

    pub fn hartogs(base_radius: T, profile: Vec<T>) -> Result<Self> {
        let d = Domain::Hartogs {
            base_radius,
            profile,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDomain(m.to_string()));
        match self {
            Domain::Disc { center, radius } => {
                if !(radius.is_finite() && *radius > T::zero()) || !crate::scalar::is_finite_c(*center) {
                    return bad("disc radius must be positive and finite");
                }
            }
            Domain::Annulus {
                center,
                inner,
                outer,
            } => {
                if !(*inner > T::zero() && inner < outer && outer.is_finite())
                    || !crate::scalar::is_finite_c(*center)
                {
                    return bad("annulus requires 0 < inner < outer");
                }
            }
            Domain::Ball { dim } => {
                if *dim == 0 {
                    return bad("ball dimension must be positive");
                }
            }
            Domain::Polydisc { radii } => {
                if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > T::zero())) {
                    return bad("polydisc radii must be positive");
                }
            }
            Domain::Product { factors } => {
                if factors.is_empty() {
                    return bad("product needs at least one factor");
                }
                for f in factors {
                    f.validate()?;
                }
            }
            Domain::Ellipsoid { exponents } => {
                if exponents.len() != 2 || exponents.contains(&0) {
                    return bad("ellipsoid needs two positive exponents");
                }
                if !exponents.contains(&1) {
                    return bad("ellipsoid rules need one exponent equal to 1");
                }
            }
            Domain::Hartogs {
                base_radius,
                profile,
            } => {
                if !(base_radius.is_finite() && *base_radius > T::zero()) || profile.is_empty() {
                    return bad("hartogs domain needs a positive base radius and a profile");
                }
                let s_max = *base_radius * *base_radius;
                for k in 0..=1000 {
                    let s = s_max * T::lit(k as f64 / 1000.0);
                    let r = hartogs_radius(profile, s);
                    if !(r.is_finite() && r > T::zero()) {
                        return bad("fiber radius must stay positive on the closed base disc");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Disc { .. } | Domain::Annulus { .. } => 1,
            Domain::Ball { dim } => *dim,
            Domain::Polydisc { radii } => radii.len(),
            Domain::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
            Domain::Ellipsoid { exponents } => exponents.len(),
            Domain::Hartogs { .. } => 2,
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, Domain::Disc { .. } | Domain::Annulus { .. })
    }

    /// `(center, scale)` of the affine normalization of a planar kind.
    pub fn planar_affine(&self) -> Option<(Cx<T>, T)> {
        match self {
            Domain::Disc { center, radius } => Some((*center, *radius)),
            Domain::Annulus { center, outer, .. } => Some((*center, *outer)),
            _ => None,
        }
    }

    /// Factor list for products and polydiscs (a single-element list otherwise).
    pub fn factors(&self) -> Vec<Domain<T>> {
        match self {
            Domain::Product { factors } => factors.iter().flat_map(|f| f.factors()).collect(),
            Domain::Polydisc { radii } => radii
                .iter()
                .map(|&r| Domain::Disc {
                    center: Complex::new(T::zero(), T::zero()),
                    radius: r,
                })
                .collect(),
            other => vec![other.clone()],
        }
    }

    pub fn contains(&self, z: &[Cx<T>]) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        Ok(self.contains_unchecked(z, T::zero()))
    }

    /// Membership in the domain shrunk by the relative margin `delta`.
    pub fn contains_with_margin(&self, z: &[Cx<T>], delta: T) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        Ok(self.contains_unchecked(z, delta))
    }

    fn contains_unchecked(&self, z: &[Cx<T>], delta: T) -> bool {
        let shrink = T::one() - delta;
        match self {
            Domain::Disc { center, radius } => (z[0] - *center).norm() < *radius * shrink,
            Domain::Annulus {
                center,
                inner,
                outer,
            } => {
                let m = (z[0] - *center).norm();
                m > *inner * (T::one() + delta) && m < *outer * shrink
            }
            Domain::Ball { .. } => {
                z.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b) < shrink * shrink
            }
            Domain::Polydisc { radii } => z
                .iter()
                .zip(radii)
                .all(|(c, r)| c.norm() < *r * shrink),
            Domain::Product { factors } => {
                let mut off = 0;
                factors.iter().all(|f| {
                    let d = f.dim();
                    let ok = f.contains_unchecked(&z[off..off + d], delta);
                    off += d;
                    ok
                })
            }
            Domain::Ellipsoid { exponents } => {
                let s: T = z
                    .iter()
                    .zip(exponents)
                    .map(|(c, &m)| (c.norm() / shrink).powi(2 * m as i32))
                    .fold(T::zero(), |a, b| a + b);
                s < T::one()
            }
            Domain::Hartogs {
                base_radius,
                profile,
            } => {
                let m1 = z[0].norm();
                if m1 >= *base_radius * shrink {
                    return false;
                }
                z[1].norm() < hartogs_radius(profile, m1 * m1) * shrink
            }
        }
    }

    /// Lebesgue volume (closed forms where available, a high-order rule otherwise).
    pub fn volume(&self) -> T {
        let pi = T::PI();
        match self {
            Domain::Disc { radius, .. } => pi * *radius * *radius,
            Domain::Annulus { inner, outer, .. } => pi * (*outer * *outer - *inner * *inner),
            Domain::Ball { dim } => {
                pi.powi(*dim as i32) / factorial::<T>(*dim as u32)
            }
            Domain::Polydisc { radii } => radii.iter().fold(T::one(), |a, &r| a * pi * r * r),
            Domain::Product { factors } => factors.iter().fold(T::one(), |a, f| a * f.volume()),
            Domain::Ellipsoid { .. } => self
                .volume_rule_spec(RuleSpec::new(64, 1))
                .map(|r| r.weight_sum())
                .unwrap_or_else(|_| T::nan()),
            Domain::Hartogs {
                base_radius,
                profile,
            } => {
                // 2π ∫_0^ρ0 ρ · π R(ρ²)² dρ, a polynomial integrand.
                let n = profile.len() * 2 + 4;
                let gl = GaussLegendre::<T>::new(n);
                let (xs, ws) = gl.on_interval(T::zero(), *base_radius);
                let s: T = xs
                    .iter()
                    .zip(&ws)
                    .map(|(&r, &w)| {
                        let rr = hartogs_radius(profile, r * r);
                        w * r * rr * rr
                    })
                    .fold(T::zero(), |a, b| a + b);
                T::lit(2.0) * pi * pi * s
            }
        }
    }

    /// One circle per bounded complementary component of a planar domain.
    pub fn inner_contours(&self, samples: usize) -> Result<Vec<Contour<T>>> {
        match self {
            Domain::Disc { .. } => Ok(vec![]),
            Domain::Annulus {
                center,
                inner,
                outer,
            } => Ok(vec![Contour::new(
                *center,
                (*inner + *outer) * T::lit(0.5),
                samples,
            )?]),
            _ => Err(Error::Unsupported(
                "inner contours need a planar domain".into(),
            )),
        }
    }

    /// Base domain in the first n−1 coordinates of a fibered domain.
    pub fn base_domain(&self) -> Result<Domain<T>> {
        match self {
            Domain::Product { .. } | Domain::Polydisc { .. } => {
                let mut f = self.factors();
                if f.len() < 2 || !f.last().map(|d| d.is_planar()).unwrap_or(false) {
                    return Err(Error::Unsupported(
                        "fibered products need at least two factors with a planar last factor".into(),
                    ));
                }
                f.pop();
                if f.len() == 1 {
                    Ok(f.pop().unwrap())
                } else {
                    Ok(Domain::Product { factors: f })
                }
            }
            Domain::Hartogs { base_radius, .. } => Ok(Domain::Disc {
                center: Complex::new(T::zero(), T::zero()),
                radius: *base_radius,
            }),
            _ => Err(Error::Unsupported(format!(
                "no fiber structure for {}",
                self.kind_name()
            ))),
        }
    }

    /// The planar fiber `{ z_n : (z′, z_n) ∈ G }`.
    pub fn fiber_domain(&self, zprime: &[Cx<T>]) -> Result<Domain<T>> {
        check_dim(self.dim() - 1, zprime.len())?;
        let base = self.base_domain()?;
        if !base.contains_unchecked(zprime, T::zero()) {
            return Err(Error::OutsideDomain("z′ is not in the base domain".into()));
        }
        match self {
            Domain::Hartogs { profile, .. } => Ok(Domain::Disc {
                center: Complex::new(T::zero(), T::zero()),
                radius: hartogs_radius(profile, zprime[0].norm_sqr()),
            }),
            _ => Ok(self.factors().pop().unwrap()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::Disc { .. } => "disc",
            Domain::Annulus { .. } => "annulus",
            Domain::Ball { .. } => "ball",
            Domain::Polydisc { .. } => "polydisc",
            Domain::Product { .. } => "product",
            Domain::Ellipsoid { .. } => "ellipsoid",
            Domain::Hartogs { .. } => "hartogs",
        }
    }

    pub fn volume_rule(&self, order: usize) -> Result<VolumeRule<T>> {
        if order < 4 {
            return Err(Error::RuleOrder(format!("order {order} < 4")));
        }
        self.volume_rule_spec(RuleSpec::new(order, order))
    }

    pub fn volume_rule_spec(&self, spec: RuleSpec) -> Result<VolumeRule<T>> {
        rule::build(self, spec)
    }

    /// Base rule × reference fiber rule, for graph-map pullbacks.
    pub fn fibered_rule(&self, base: RuleSpec, fiber: RuleSpec) -> Result<FiberedRule<T>> {
        rule::build_fibered(self, base, fiber)
    }
}

pub fn hartogs_radius<T: Real>(profile: &[T], s: T) -> T {
    profile.iter().rev().fold(T::zero(), |acc, &c| acc * s + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn membership_examples() {
        let d = Domain::<f64>::unit_disc();
        assert!(d.contains(&[c(0.0, 0.0)]).unwrap());
        let a = Domain::<f64>::std_annulus(0.5).unwrap();
        assert!(!a.contains(&[c(0.2, 0.0)]).unwrap());
        let b = Domain::<f64>::ball(2).unwrap();
        assert!(b.contains(&[c(0.6, 0.0), c(0.6, 0.0)]).unwrap());
        assert!(matches!(
            b.contains(&[c(0.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(Domain::<f64>::std_annulus(1.5).is_err());
        assert!(Domain::<f64>::disc(c(0.0, 0.0), -1.0).is_err());
        assert!(Domain::<f64>::hartogs(1.0, vec![1.0, -1.0]).is_err());
        assert!(Domain::<f64>::ball(0).is_err());
    }

    #[test]
    fn contours_at_midradius() {
        let a = Domain::<f64>::std_annulus(0.25).unwrap();
        let cs = a.inner_contours(512).unwrap();
        assert_eq!(cs.len(), 1);
        assert!((cs[0].radius - 0.625).abs() < 1e-15);
        assert!(Domain::<f64>::unit_disc().inner_contours(512).unwrap().is_empty());
        assert!(Domain::<f64>::ball(2).unwrap().inner_contours(512).is_err());
    }

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::all_up_to(2, 6);
        assert_eq!(all.len(), 28);
        assert_eq!(all[0], MultiIndex(vec![0, 0]));
        assert_eq!(MultiIndex::all_up_to(3, 6).len(), 84);
    }
}
