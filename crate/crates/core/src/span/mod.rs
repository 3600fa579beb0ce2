//! Bergman-span elements Σ t_{jα} K^{(α)}(·, b_j).

mod factored;
mod fit;

pub use factored::Factored;
pub use fit::{fit_constant_one, FitOptions, FitReport, GridDescription, NodeLattice};

use std::sync::Arc;

use num_complex::Complex;
use serde::Serialize;

use crate::domains::{ComplexPoint, MultiIndex};
use crate::error::{check_dim, Error, Result};
use crate::jet::{Holo, Jet, JetSpace};
use crate::kernels::{KernelForm, KernelFunction};
use crate::scalar::{cpowi, Cx, Real};

/// Largest z-derivative order served by [`SpanElement::eval_deriv`].
pub const MAX_Z_ORDER: u32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanTerm<T> {
    pub node: ComplexPoint<T>,
    pub alpha: MultiIndex,
    pub coeff: Cx<T>,
}

impl<T: Real> SpanTerm<T> {
    pub fn new(node: Vec<Cx<T>>, alpha: Vec<u32>, coeff: Cx<T>) -> Self {
        SpanTerm {
            node: ComplexPoint { coords: node },
            alpha: MultiIndex(alpha),
            coeff,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpanElement<T: Real> {
    kernel: Arc<KernelFunction<T>>,
    terms: Vec<SpanTerm<T>>,
    /// Monomial coefficients when the kernel is a Reinhardt series (the element is then a polynomial).
    poly: Option<Vec<(MultiIndex, Cx<T>)>>,
}

impl<T: Real> SpanElement<T> {
    pub fn new(kernel: Arc<KernelFunction<T>>, terms: Vec<SpanTerm<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("span element needs at least one term".into()));
        }
        let n = kernel.dim();
        for t in &terms {
            check_dim(n, t.node.dim())?;
            check_dim(n, t.alpha.dim())?;
            if t.alpha.order() > kernel.max_order() {
                return Err(Error::UnsupportedOrder {
                    order: t.alpha.order(),
                    max: kernel.max_order(),
                });
            }
            if !kernel.domain().contains(&t.node.coords)? {
                return Err(Error::OutsideDomain(format!("span node {:?}", t.node.coords)));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite span coefficient".into()));
            }
        }
        let poly = match kernel.form() {
            KernelForm::SeriesReinhardt(s) => {
                let ts: Vec<_> = terms
                    .iter()
                    .map(|t| (t.node.coords.clone(), t.alpha.0.clone(), t.coeff))
                    .collect();
                Some(s.span_polynomial(&ts))
            }
            _ => None,
        };
        Ok(SpanElement { kernel, terms, poly })
    }

    /// The single-term element t·K^{(α)}(·, b).
    pub fn single(kernel: Arc<KernelFunction<T>>, node: Vec<Cx<T>>, alpha: Vec<u32>, coeff: Cx<T>) -> Result<Self> {
        Self::new(kernel, vec![SpanTerm::new(node, alpha, coeff)])
    }

    pub fn kernel(&self) -> &Arc<KernelFunction<T>> {
        &self.kernel
    }

    pub fn terms(&self) -> &[SpanTerm<T>] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn polynomial(&self) -> Option<&[(MultiIndex, Cx<T>)]> {
        self.poly.as_deref()
    }

    pub fn max_alpha(&self) -> u32 {
        self.terms.iter().map(|t| t.alpha.order()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[Cx<T>]) -> Result<Cx<T>> {
        check_dim(self.dim(), z.len())?;
        if !self.kernel.domain().contains(z)? {
            return Err(Error::OutsideDomain(format!("{z:?}")));
        }
        Ok(self.eval_raw(z))
    }

    pub fn eval_raw(&self, z: &[Cx<T>]) -> Cx<T> {
        self.eval_generic(z)
    }

    pub fn eval_generic<H: Holo<T>>(&self, z: &[H]) -> H {
        if let Some(p) = &self.poly {
            return eval_poly(p, z);
        }
        let mut acc = z[0].konst(Complex::new(T::zero(), T::zero()));
        for t in &self.terms {
            let v = self.kernel.eval_generic(&t.alpha.0, z, &t.node.coords);
            acc = acc + v.scale(t.coeff);
        }
        acc
    }

    /// ∂^β u at z through jets.
    pub fn eval_deriv(&self, beta: &[u32], z: &[Cx<T>]) -> Result<Cx<T>> {
        check_dim(self.dim(), beta.len())?;
        let order: u32 = beta.iter().sum();
        if order > MAX_Z_ORDER {
            return Err(Error::UnsupportedOrder {
                order,
                max: MAX_Z_ORDER,
            });
        }
        if !self.kernel.domain().contains(z)? {
            return Err(Error::OutsideDomain(format!("{z:?}")));
        }
        Ok(self.jet(z, order).derivative(beta))
    }

    pub fn jet(&self, z: &[Cx<T>], order: u32) -> Jet<T> {
        let space = JetSpace::new(self.dim(), order);
        self.eval_generic(&Jet::point(&space, z))
    }

    /// Primitive in z_n (closed form); None when the kernel has no closed-form fiber primitive.
    pub fn fiber_primitive(&self, z: &[Cx<T>]) -> Option<Cx<T>> {
        if let Some(p) = &self.poly {
            let n = z.len();
            let mut acc = Complex::new(T::zero(), T::zero());
            for (g, c) in p {
                let mut t = *c / T::from_usize_(g.0[n - 1] as usize + 1);
                for i in 0..n {
                    let e = if i == n - 1 { g.0[i] + 1 } else { g.0[i] };
                    t = t * cpowi(z[i], e as i32);
                }
                acc = acc + t;
            }
            return Some(acc);
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for t in &self.terms {
            acc = acc + self.kernel.fiber_primitive(&t.alpha.0, z, &t.node.coords)? * t.coeff;
        }
        Some(acc)
    }

    /// Coefficients of z_n ↦ u(z′, z_n) as a polynomial (Reinhardt kernels only).
    pub fn fiber_polynomial(&self, zprime: &[Cx<T>]) -> Option<Vec<Cx<T>>> {
        let p = self.poly.as_ref()?;
        let n = zprime.len() + 1;
        let deg = p.iter().map(|(g, _)| g.0[n - 1]).max().unwrap_or(0) as usize;
        let mut out = vec![Complex::new(T::zero(), T::zero()); deg + 1];
        for (g, c) in p {
            let mut t = *c;
            for i in 0..n - 1 {
                t = t * cpowi(zprime[i], g.0[i] as i32);
            }
            out[g.0[n - 1] as usize] = out[g.0[n - 1] as usize] + t;
        }
        Some(out)
    }

    /// Term-wise sum over the same kernel.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.kernel, &other.kernel) {
            return Err(Error::InvalidInput("span elements over different kernels".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.kernel.clone(), terms)
    }

    pub fn scaled(&self, c: Cx<T>) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| SpanTerm {
                coeff: t.coeff * c,
                ..t.clone()
            })
            .collect();
        Self::new(self.kernel.clone(), terms)
    }

    /// Merges terms with equal index whose nodes agree within `tol`, summing coefficients.
    pub fn merged(&self, tol: T) -> Result<Self> {
        let mut out: Vec<SpanTerm<T>> = Vec::new();
        for t in &self.terms {
            match out
                .iter_mut()
                .find(|o| o.alpha == t.alpha && o.node.dist(&t.node) <= tol)
            {
                Some(o) => o.coeff = o.coeff + t.coeff,
                None => out.push(t.clone()),
            }
        }
        Self::new(self.kernel.clone(), out)
    }

    /// Splits a product-kernel element into base (z′) and fiber (z_n) key tables.
    pub fn factored(&self) -> Option<Factored<T>> {
        Factored::from_span(self)
    }
}

pub(crate) fn eval_poly<T: Real, H: Holo<T>>(p: &[(MultiIndex, Cx<T>)], z: &[H]) -> H {
    let n = z.len();
    let one = Complex::new(T::one(), T::zero());
    let deg: Vec<usize> = (0..n)
        .map(|i| p.iter().map(|(g, _)| g.0[i]).max().unwrap_or(0) as usize)
        .collect();
    let pw: Vec<Vec<H>> = (0..n)
        .map(|i| {
            let mut v = vec![z[i].konst(one)];
            for k in 1..=deg[i] {
                let nx = v[k - 1].clone() * z[i].clone();
                v.push(nx);
            }
            v
        })
        .collect();
    let mut acc = z[0].konst(Complex::new(T::zero(), T::zero()));
    for (g, c) in p {
        let mut t = pw[0][g.0[0] as usize].clone();
        for i in 1..n {
            t = t * pw[i][g.0[i] as usize].clone();
        }
        acc = acc + t.scale(*c);
    }
    acc
}

/// Horner evaluation of Σ c_k x^k.
pub fn horner<T: Real>(c: &[Cx<T>], x: Cx<T>) -> Cx<T> {
    c.iter().rev().fold(Complex::new(T::zero(), T::zero()), |a, &k| a * x + k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn single_term_disc() {
        let k = Arc::new(KernelFunction::new(Domain::<f64>::unit_disc()).unwrap());
        let u = SpanElement::single(k.clone(), vec![c(0.0, 0.0)], vec![0], c(PI, 0.0)).unwrap();
        assert!((u.eval(&[c(0.0, 0.0)]).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let z = SpanElement::single(k.clone(), vec![c(0.2, 0.0)], vec![0], c(0.0, 0.0)).unwrap();
        assert_eq!(z.eval(&[c(0.3, 0.1)]).unwrap(), c(0.0, 0.0));
        assert!(SpanElement::new(k, vec![]).is_err());
    }

    #[test]
    fn cancelling_terms_vanish() {
        let k = Arc::new(KernelFunction::new(Domain::<f64>::std_annulus(0.5).unwrap()).unwrap());
        let b = vec![c(0.6, 0.3)];
        let u = SpanElement::new(
            k,
            vec![
                SpanTerm::new(b.clone(), vec![1], c(0.3, -1.0)),
                SpanTerm::new(b, vec![1], c(-0.3, 1.0)),
            ],
        )
        .unwrap();
        assert!(u.eval(&[c(-0.7, 0.2)]).unwrap().norm() < 1e-15);
    }
}
