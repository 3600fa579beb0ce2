//! Truncated multivariate Taylor series ("jets") and the [`Holo`] abstraction that lets the
//! same holomorphic formula run on plain complex numbers or on jets.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex;
use smallvec::SmallVec;

use crate::scalar::{cpowi, factorial, Cx, Real};

type Exps = SmallVec<[u32; 4]>;

/// Monomial layout and product table for jets in `nvars` variables truncated at total `order`.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: u32,
    exps: Vec<Exps>,
    index: BTreeMap<Exps, usize>,
    table: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: u32) -> Arc<Self> {
        let mut exps: Vec<Exps> = Vec::new();
        for deg in 0..=order {
            let mut cur: Exps = SmallVec::from_elem(0, nvars);
            push_graded(&mut exps, &mut cur, 0, deg);
        }
        let index: BTreeMap<Exps, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut table = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let s: u32 = a.iter().zip(b).map(|(x, y)| x + y).sum();
                if s <= order {
                    let key: Exps = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    table.push((i as u32, j as u32, index[&key] as u32));
                }
            }
        }
        Arc::new(JetSpace {
            nvars,
            order,
            exps,
            index,
            table,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn len(&self) -> usize {
        self.exps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }
    pub fn exponents(&self) -> impl Iterator<Item = &[u32]> {
        self.exps.iter().map(|e| e.as_slice())
    }
    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

fn push_graded(out: &mut Vec<Exps>, cur: &mut Exps, pos: usize, remaining: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        push_graded(out, cur, pos + 1, remaining - k);
    }
    cur[pos] = 0;
}

/// Truncated Taylor expansion of a holomorphic quantity in the displacement variables δ.
#[derive(Clone, Debug)]
pub struct Jet<T: Real> {
    space: Arc<JetSpace>,
    c: SmallVec<[Cx<T>; 16]>,
}

impl<T: Real> Jet<T> {
    pub fn constant(space: &Arc<JetSpace>, value: Cx<T>) -> Self {
        let mut c = SmallVec::from_elem(Complex::new(T::zero(), T::zero()), space.len());
        c[0] = value;
        Jet {
            space: space.clone(),
            c,
        }
    }

    /// The coordinate `value + δ_var`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: Cx<T>) -> Self {
        let mut j = Self::constant(space, value);
        if space.order >= 1 {
            let mut e: Exps = SmallVec::from_elem(0, space.nvars);
            e[var] = 1;
            j.c[space.index[&e]] = Complex::new(T::one(), T::zero());
        }
        j
    }

    /// Jets for the point `z` with one variable per coordinate.
    pub fn point(space: &Arc<JetSpace>, z: &[Cx<T>]) -> Vec<Self> {
        z.iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(space, i, v))
            .collect()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.c
    }

    /// Taylor coefficient of δ^γ (zero when γ exceeds the truncation order).
    pub fn coeff(&self, gamma: &[u32]) -> Cx<T> {
        self.space
            .index_of(gamma)
            .map(|i| self.c[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// ∂^γ of the underlying function at the expansion point.
    pub fn derivative(&self, gamma: &[u32]) -> Cx<T> {
        let f = gamma
            .iter()
            .fold(T::one(), |acc, &g| acc * factorial::<T>(g));
        self.coeff(gamma) * f
    }

    pub fn max_abs(&self) -> T {
        self.c.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Antiderivative in variable `var` vanishing at δ_var = 0 (terms beyond the order are dropped).
    pub fn integrate(&self, var: usize) -> Self {
        let mut out = Self::constant(&self.space, Complex::new(T::zero(), T::zero()));
        for (i, e) in self.space.exps.iter().enumerate() {
            let deg: u32 = e.iter().sum();
            if deg >= self.space.order {
                continue;
            }
            let mut k = e.clone();
            k[var] += 1;
            let j = self.space.index[&k];
            out.c[j] = self.c[i] / T::lit(k[var] as f64);
        }
        out
    }

    fn mul_ref(&self, other: &Self) -> Self {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space) || self.space.len() == other.space.len());
        let mut c = SmallVec::from_elem(Complex::new(T::zero(), T::zero()), self.c.len());
        for &(i, j, k) in &self.space.table {
            c[k as usize] = c[k as usize] + self.c[i as usize] * other.c[j as usize];
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    fn nilpotent(&self) -> Self {
        let mut n = self.clone();
        n.c[0] = Complex::new(T::zero(), T::zero());
        n
    }

    /// Σ_{k=0}^{order} a_k N^k for the nilpotent part N.
    fn series(&self, a: impl Fn(u32) -> Cx<T>) -> Self {
        let n = self.nilpotent();
        let mut out = Self::constant(&self.space, a(0));
        let mut pow = Self::constant(&self.space, Complex::new(T::one(), T::zero()));
        for k in 1..=self.space.order {
            pow = pow.mul_ref(&n);
            let ak = a(k);
            for (o, p) in out.c.iter_mut().zip(pow.c.iter()) {
                *o = *o + *p * ak;
            }
        }
        out
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a = *a + *b;
        }
        self
    }
}
impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a = *a - *b;
        }
        self
    }
}
impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}
impl<'a, T: Real> Mul<&'a Jet<T>> for &'a Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &'a Jet<T>) -> Jet<T> {
        self.mul_ref(rhs)
    }
}
impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

/// A holomorphic "number": either a plain complex value or a jet of one.
pub trait Holo<T: Real>:
    Clone + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn value(&self) -> Cx<T>;
    /// Constant with the same shape as `self`.
    fn konst(&self, c: Cx<T>) -> Self;
    fn scale(&self, c: Cx<T>) -> Self;
    fn shift(&self, c: Cx<T>) -> Self;
    fn recip(&self) -> Self;
    fn exp(&self) -> Self;
    /// Principal logarithm (branch taken at the expansion point).
    fn ln(&self) -> Self;

    fn powi(&self, n: i32) -> Self {
        let base = if n < 0 { self.recip() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = self.konst(Complex::new(T::one(), T::zero()));
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b.clone();
            }
            e >>= 1;
            if e > 0 {
                b = b.clone() * b;
            }
        }
        acc
    }
}

impl<T: Real> Holo<T> for Cx<T> {
    #[inline]
    fn value(&self) -> Cx<T> {
        *self
    }
    #[inline]
    fn konst(&self, c: Cx<T>) -> Self {
        c
    }
    #[inline]
    fn scale(&self, c: Cx<T>) -> Self {
        *self * c
    }
    #[inline]
    fn shift(&self, c: Cx<T>) -> Self {
        *self + c
    }
    #[inline]
    fn recip(&self) -> Self {
        self.inv()
    }
    #[inline]
    fn exp(&self) -> Self {
        Complex::exp(*self)
    }
    #[inline]
    fn ln(&self) -> Self {
        Complex::ln(*self)
    }
    #[inline]
    fn powi(&self, n: i32) -> Self {
        cpowi(*self, n)
    }
}

impl<T: Real> Holo<T> for Jet<T> {
    fn value(&self) -> Cx<T> {
        self.c[0]
    }
    fn konst(&self, c: Cx<T>) -> Self {
        Jet::constant(&self.space, c)
    }
    fn scale(&self, c: Cx<T>) -> Self {
        let mut j = self.clone();
        for a in j.c.iter_mut() {
            *a = *a * c;
        }
        j
    }
    fn shift(&self, c: Cx<T>) -> Self {
        let mut j = self.clone();
        j.c[0] = j.c[0] + c;
        j
    }
    fn recip(&self) -> Self {
        // 1/(c0 + N) = Σ (-1)^k N^k / c0^{k+1}
        let r = self.c[0].inv();
        self.series(|k| {
            let s = cpowi(r, k as i32 + 1);
            if k % 2 == 1 {
                -s
            } else {
                s
            }
        })
    }
    fn exp(&self) -> Self {
        let e0 = self.c[0].exp();
        self.series(|k| e0 / factorial::<T>(k))
    }
    fn ln(&self) -> Self {
        let c0 = self.c[0];
        let r = c0.inv();
        self.series(|k| {
            if k == 0 {
                c0.ln()
            } else {
                let s = cpowi(r, k as i32) / T::lit(k as f64);
                if k % 2 == 0 {
                    -s
                } else {
                    s
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn layout_counts() {
        let s = JetSpace::new(2, 3);
        assert_eq!(s.len(), 10);
        assert_eq!(s.exponents().next().unwrap(), &[0, 0]);
        let s1 = JetSpace::new(1, 4);
        assert_eq!(s1.len(), 5);
    }

    #[test]
    fn recip_matches_geometric_series() {
        let s = JetSpace::new(1, 5);
        let x = Jet::variable(&s, 0, c(0.5, 0.0));
        // 1/(1 - x) at x=0.5: derivatives k!/(0.5)^{k+1}
        let one_minus = x.scale(c(-1.0, 0.0)).shift(c(1.0, 0.0));
        let r = one_minus.recip();
        for k in 0..=5u32 {
            let want = factorial::<f64>(k) / 0.5f64.powi(k as i32 + 1);
            assert!((r.derivative(&[k]) - c(want, 0.0)).norm() < 1e-10 * want);
        }
    }

    #[test]
    fn exp_ln_roundtrip() {
        let s = JetSpace::new(2, 4);
        let z = Jet::point(&s, &[c(0.3, 0.2), c(-0.1, 0.4)]);
        let f = (z[0].clone() * z[1].clone()).shift(c(1.0, 0.5));
        let back = f.ln().exp();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn integrate_inverts_derivative() {
        let s = JetSpace::new(2, 3);
        let z = Jet::point(&s, &[c(0.0, 0.0), c(0.0, 0.0)]);
        let f = z[0].clone() * z[1].clone();
        let g = f.integrate(1);
        assert!((g.coeff(&[1, 2]) - c(0.5, 0.0)).norm() < 1e-15);
    }
}
