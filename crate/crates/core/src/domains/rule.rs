//! Volume rules of the form (modulus rule) × (trapezoid torus).
//!
//! Every supported domain is invariant under coordinate rotations about its center, so a
//! rule is stored as a list of modulus vectors with weights plus per-coordinate angular
//! counts; nodes are generated on the fly.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hartogs_radius, Domain};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::scalar::{Cx, Real};

/// Radial (Gauss–Legendre) and angular (trapezoid) counts of a polar rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub radial: usize,
    pub angular: usize,
}

impl RuleSpec {
    pub fn new(radial: usize, angular: usize) -> Self {
        RuleSpec { radial, angular }
    }
}

#[derive(Clone, Debug)]
pub struct VolumeRule<T> {
    dim: usize,
    centers: Vec<Cx<T>>,
    moduli: Vec<T>,
    weights: Vec<T>,
    angles: Vec<usize>,
}

impl<T: Real> VolumeRule<T> {
    fn from_parts(centers: Vec<Cx<T>>, moduli: Vec<T>, radial_weights: Vec<T>, angles: Vec<usize>) -> Self {
        let dim = centers.len();
        let ang: T = angles
            .iter()
            .fold(T::one(), |a, &m| a * T::TAU() / T::from_usize_(m));
        VolumeRule {
            dim,
            centers,
            moduli,
            weights: radial_weights.into_iter().map(|w| w * ang).collect(),
            angles,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus_count(&self) -> usize {
        self.weights.len()
    }

    pub fn torus_size(&self) -> usize {
        self.angles.iter().product()
    }

    pub fn len(&self) -> usize {
        self.modulus_count() * self.torus_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn angles(&self) -> &[usize] {
        &self.angles
    }

    pub fn modulus(&self, m: usize) -> &[T] {
        &self.moduli[m * self.dim..(m + 1) * self.dim]
    }

    /// Weight shared by every torus node over modulus node `m`.
    pub fn modulus_weight(&self, m: usize) -> T {
        self.weights[m]
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &w| a + w) * T::from_usize_(self.torus_size())
    }

    /// All torus nodes over modulus node `m`, with their weights.
    pub fn torus_points(&self, m: usize) -> Vec<(Vec<Cx<T>>, T)> {
        let rho = self.modulus(m);
        let w = self.weights[m];
        let circles: Vec<Vec<Cx<T>>> = (0..self.dim)
            .map(|i| {
                let h = T::TAU() / T::from_usize_(self.angles[i]);
                (0..self.angles[i])
                    .map(|k| self.centers[i] + Complex::from_polar(rho[i], h * T::from_usize_(k)))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(self.torus_size());
        let mut idx = vec![0usize; self.dim];
        loop {
            out.push(((0..self.dim).map(|i| circles[i][idx[i]]).collect(), w));
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < self.angles[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    /// Materialized node list (intended for small rules).
    pub fn nodes(&self) -> Vec<(Vec<Cx<T>>, T)> {
        (0..self.modulus_count()).flat_map(|m| self.torus_points(m)).collect()
    }

    /// The rule applied to z^γ, summed coordinate by coordinate over the tensor torus.
    pub fn monomial_moment(&self, gamma: &[u32]) -> Cx<T> {
        let mut total = Complex::new(T::zero(), T::zero());
        for m in 0..self.modulus_count() {
            let rho = self.modulus(m);
            let mut prod = Complex::new(self.weights[m], T::zero());
            for i in 0..self.dim {
                let h = T::TAU() / T::from_usize_(self.angles[i]);
                let mut s = Complex::new(T::zero(), T::zero());
                for k in 0..self.angles[i] {
                    let z = self.centers[i] + Complex::from_polar(rho[i], h * T::from_usize_(k));
                    s = s + crate::scalar::cpowi(z, gamma[i] as i32);
                }
                prod = prod * s;
            }
            total = total + prod;
        }
        total
    }

    /// Calls `f(z, w)` on every torus node over modulus node `m` without materializing them.
    pub fn for_each_torus_point<F>(&self, m: usize, mut f: F)
    where
        F: FnMut(&[Cx<T>], T),
    {
        let rho = self.modulus(m);
        let w = self.weights[m];
        let circles: Vec<Vec<Cx<T>>> = (0..self.dim)
            .map(|i| {
                let h = T::TAU() / T::from_usize_(self.angles[i]);
                (0..self.angles[i])
                    .map(|k| self.centers[i] + Complex::from_polar(rho[i], h * T::from_usize_(k)))
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; self.dim];
        let mut z: Vec<Cx<T>> = circles.iter().map(|c| c[0]).collect();
        loop {
            f(&z, w);
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < self.angles[i] {
                    z[i] = circles[i][idx[i]];
                    break;
                }
                idx[i] = 0;
                z[i] = circles[i][0];
            }
        }
    }

    /// Σ_nodes w · f(z) for a `width`-component integrand accumulated in place.
    ///
    /// Chunks are fixed by the rule alone and reduced in order, so the result does not
    /// depend on the worker count.
    pub fn integrate<F>(&self, width: usize, f: F) -> Vec<Cx<T>>
    where
        F: Fn(&[Cx<T>], T, &mut [Cx<T>]) + Sync,
    {
        self.integrate_with(width, || (), |z, w, _, acc| f(z, w, acc))
    }

    /// [`VolumeRule::integrate`] with per-chunk scratch state built by `init`.
    pub fn integrate_with<S, I, F>(&self, width: usize, init: I, f: F) -> Vec<Cx<T>>
    where
        I: Fn() -> S + Sync,
        F: Fn(&[Cx<T>], T, &mut S, &mut [Cx<T>]) + Sync,
    {
        let n = self.modulus_count();
        let chunk = n.div_ceil(256).max(1);
        let starts: Vec<usize> = (0..n).step_by(chunk).collect();
        let parts: Vec<Vec<Cx<T>>> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = vec![Complex::new(T::zero(), T::zero()); width];
                let mut st = init();
                for m in s..(s + chunk).min(n) {
                    self.for_each_torus_point(m, |z, w| f(z, w, &mut st, &mut acc));
                }
                acc
            })
            .collect();
        let mut total = vec![Complex::new(T::zero(), T::zero()); width];
        for p in parts {
            for (t, v) in total.iter_mut().zip(p) {
                *t = *t + v;
            }
        }
        total
    }

    pub fn integrate_scalar<F>(&self, f: F) -> Cx<T>
    where
        F: Fn(&[Cx<T>]) -> Cx<T> + Sync,
    {
        self.integrate(1, |z, w, acc| acc[0] = acc[0] + f(z) * w)[0]
    }

    /// Tensor product rule on the product domain.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut moduli = Vec::with_capacity(self.moduli.len() * other.modulus_count() + other.moduli.len() * self.modulus_count());
        let mut weights = Vec::with_capacity(self.modulus_count() * other.modulus_count());
        for a in 0..self.modulus_count() {
            for b in 0..other.modulus_count() {
                moduli.extend_from_slice(self.modulus(a));
                moduli.extend_from_slice(other.modulus(b));
                weights.push(self.weights[a] * other.weights[b]);
            }
        }
        let mut centers = self.centers.clone();
        centers.extend_from_slice(&other.centers);
        let mut angles = self.angles.clone();
        angles.extend_from_slice(&other.angles);
        VolumeRule {
            dim: self.dim + other.dim,
            centers,
            moduli,
            weights,
            angles,
        }
    }
}

/// Base rule × reference fiber rule; the fiber over base modulus node `m` is the reference
/// fiber scaled about its center by `scale[m]`.
#[derive(Clone, Debug)]
pub struct FiberedRule<T> {
    pub base: VolumeRule<T>,
    pub fiber: VolumeRule<T>,
    pub scale: Vec<T>,
}

impl<T: Real> FiberedRule<T> {
    pub fn is_unscaled(&self) -> bool {
        self.scale.iter().all(|&s| s == T::one())
    }

    pub fn len(&self) -> usize {
        self.base.len() * self.fiber.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fiber_center(&self) -> Cx<T> {
        self.fiber.centers[0]
    }
}

fn gl01<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    GaussLegendre::<T>::new(n).on_interval(T::zero(), T::one())
}

fn check_spec(spec: RuleSpec) -> Result<()> {
    if spec.radial < 1 || spec.angular < 1 {
        return Err(Error::RuleOrder(format!("{spec:?}")));
    }
    Ok(())
}

fn planar<T: Real>(center: Cx<T>, lo: T, hi: T, spec: RuleSpec) -> VolumeRule<T> {
    let (xs, ws) = GaussLegendre::<T>::new(spec.radial).on_interval(lo, hi);
    let wr: Vec<T> = xs.iter().zip(&ws).map(|(&r, &w)| r * w).collect();
    VolumeRule::from_parts(vec![center], xs, wr, vec![spec.angular])
}

fn ball<T: Real>(n: usize, spec: RuleSpec) -> VolumeRule<T> {
    // dV = 2^{1-n} ρ^{2n-1} dρ dσ dθ with |z_i| = ρ √σ_i on the simplex (Duffy collapsed).
    let (rs, rw) = gl01::<T>(spec.radial);
    let (us, uw) = gl01::<T>(spec.radial);
    let mut simplex: Vec<(Vec<T>, T)> = vec![(vec![], T::one())];
    for _ in 0..n.saturating_sub(1) {
        let mut next = Vec::new();
        for (s, w) in &simplex {
            let used: T = s.iter().fold(T::zero(), |a, &b| a + b);
            let rem = T::one() - used;
            for (&u, &wu) in us.iter().zip(&uw) {
                let mut v = s.clone();
                v.push(rem * u);
                next.push((v, *w * wu * rem));
            }
        }
        simplex = next;
    }
    let pref = T::lit(2.0).powi(1 - n as i32);
    let mut moduli = Vec::new();
    let mut weights = Vec::new();
    for (&r, &wr) in rs.iter().zip(&rw) {
        for (s, ws) in &simplex {
            let used: T = s.iter().fold(T::zero(), |a, &b| a + b);
            for &si in s {
                moduli.push(r * si.sqrt());
            }
            moduli.push(r * (T::one() - used).max(T::zero()).sqrt());
            weights.push(pref * r.powi(2 * n as i32 - 1) * wr * *ws);
        }
    }
    VolumeRule::from_parts(
        vec![Complex::new(T::zero(), T::zero()); n],
        moduli,
        weights,
        vec![spec.angular; n],
    )
}

fn ellipsoid<T: Real>(exponents: &[u32], spec: RuleSpec) -> Result<VolumeRule<T>> {
    // Base coordinate b has exponent 1; with |z_b|² = 1 − y^{2 m_f} the fiber radius is y.
    let b = exponents
        .iter()
        .position(|&m| m == 1)
        .ok_or_else(|| Error::Unsupported("ellipsoid without a unit exponent".into()))?;
    let f = 1 - b;
    let mf = exponents[f] as i32;
    let (ys, yw) = gl01::<T>(spec.radial);
    let (ss, sw) = gl01::<T>(spec.radial);
    let mut moduli = Vec::new();
    let mut weights = Vec::new();
    for (&y, &wy) in ys.iter().zip(&yw) {
        let rb = (T::one() - y.powi(2 * mf)).max(T::zero()).sqrt();
        let base_w = T::lit(mf as f64) * y.powi(2 * mf - 1) * wy;
        for (&s, &ws) in ss.iter().zip(&sw) {
            let mut m = [T::zero(); 2];
            m[b] = rb;
            m[f] = y * s;
            moduli.extend_from_slice(&m);
            weights.push(base_w * y * y * s * ws);
        }
    }
    Ok(VolumeRule::from_parts(
        vec![Complex::new(T::zero(), T::zero()); 2],
        moduli,
        weights,
        vec![spec.angular; 2],
    ))
}

pub(super) fn build<T: Real>(d: &Domain<T>, spec: RuleSpec) -> Result<VolumeRule<T>> {
    check_spec(spec)?;
    d.validate()?;
    match d {
        Domain::Disc { center, radius } => Ok(planar(*center, T::zero(), *radius, spec)),
        Domain::Annulus {
            center,
            inner,
            outer,
        } => Ok(planar(*center, *inner, *outer, spec)),
        Domain::Ball { dim } => Ok(ball(*dim, spec)),
        Domain::Polydisc { .. } | Domain::Product { .. } => {
            let mut it = d.factors().into_iter();
            let first = build(&it.next().unwrap(), spec)?;
            it.try_fold(first, |acc, f| Ok(acc.tensor(&build(&f, spec)?)))
        }
        Domain::Ellipsoid { exponents } => ellipsoid(exponents, spec),
        Domain::Hartogs { .. } => {
            let fr = build_fibered(d, spec, spec)?;
            let mut moduli = Vec::new();
            let mut weights = Vec::new();
            let ang_f = T::TAU() / T::from_usize_(fr.fiber.angles[0]);
            let ang_b = T::TAU() / T::from_usize_(fr.base.angles[0]);
            for m in 0..fr.base.modulus_count() {
                let s = fr.scale[m];
                for k in 0..fr.fiber.modulus_count() {
                    moduli.push(fr.base.modulus(m)[0]);
                    moduli.push(fr.fiber.modulus(k)[0] * s);
                    weights.push(fr.base.weights[m] * fr.fiber.weights[k] * s * s / (ang_f * ang_b));
                }
            }
            Ok(VolumeRule::from_parts(
                vec![Complex::new(T::zero(), T::zero()); 2],
                moduli,
                weights,
                vec![spec.angular; 2],
            ))
        }
    }
}

pub(super) fn build_fibered<T: Real>(
    d: &Domain<T>,
    base: RuleSpec,
    fiber: RuleSpec,
) -> Result<FiberedRule<T>> {
    check_spec(base)?;
    check_spec(fiber)?;
    match d {
        Domain::Hartogs {
            base_radius,
            profile,
        } => {
            let b = planar(Complex::new(T::zero(), T::zero()), T::zero(), *base_radius, base);
            let f = planar(Complex::new(T::zero(), T::zero()), T::zero(), T::one(), fiber);
            let scale = (0..b.modulus_count())
                .map(|m| {
                    let r = b.modulus(m)[0];
                    hartogs_radius(profile, r * r)
                })
                .collect();
            Ok(FiberedRule {
                base: b,
                fiber: f,
                scale,
            })
        }
        Domain::Product { .. } | Domain::Polydisc { .. } => {
            let bd = d.base_domain()?;
            let fd = d.factors().pop().unwrap();
            let b = build(&bd, base)?;
            let f = build(&fd, fiber)?;
            let scale = vec![T::one(); b.modulus_count()];
            Ok(FiberedRule {
                base: b,
                fiber: f,
                scale,
            })
        }
        _ => Err(Error::Unsupported(format!(
            "fibered rule for {}",
            d.kind_name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weight_sums_match_volumes() {
        let disc = Domain::<f64>::unit_disc();
        let r = disc.volume_rule(32).unwrap();
        assert!((r.weight_sum() - PI).abs() < 1e-12 * PI);
        let pd = Domain::<f64>::polydisc(vec![1.0, 1.0]).unwrap();
        assert!((pd.volume_rule(32).unwrap().weight_sum() - PI * PI).abs() < 1e-12 * PI * PI);
        let b = Domain::<f64>::ball(2).unwrap();
        assert!((b.volume_rule(32).unwrap().weight_sum() - PI * PI / 2.0).abs() < 1e-12 * PI * PI);
    }

    #[test]
    fn nodes_inside() {
        for d in [
            Domain::<f64>::ball(3).unwrap(),
            Domain::<f64>::std_annulus(0.5).unwrap(),
            Domain::<f64>::hartogs(1.0, vec![1.0, -0.5]).unwrap(),
            Domain::<f64>::ellipsoid(vec![1, 2]).unwrap(),
        ] {
            let r = d.volume_rule(6).unwrap();
            for (z, w) in r.nodes() {
                assert!(w > 0.0);
                assert!(d.contains(&z).unwrap(), "{z:?} outside {d:?}");
            }
        }
    }
}
