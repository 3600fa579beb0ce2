//! Bergman kernels K(z, w) and their conjugate derivatives ∂^α_{w̄} K.

pub mod planar;
pub mod reinhardt;
pub mod selftest;

use num_complex::Complex;
use serde::Serialize;

use crate::domains::Domain;
use crate::error::{check_dim, Error, Result};
use crate::jet::{Holo, Jet, JetSpace};
use crate::scalar::{factorial, Cx, Real};
use planar::AnnulusConsts;
pub use reinhardt::ReinhardtSeries;

pub const DEFAULT_MAX_ORDER: u32 = 4;
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Clone, Debug)]
pub enum KernelForm<T> {
    ClosedFormDisc,
    ClosedFormBall,
    /// Image-summed annulus kernel; `images` is the truncation order of both image sums.
    SeriesAnnulus(AnnulusConsts<T>),
    Product(Vec<KernelFunction<T>>),
    SeriesReinhardt(ReinhardtSeries<T>),
}

#[derive(Clone, Debug)]
pub struct KernelFunction<T> {
    domain: Domain<T>,
    form: KernelForm<T>,
    max_order: u32,
    margin: T,
}

/// Serializable summary for reports.
#[derive(Clone, Debug, Serialize)]
pub struct KernelDescriptor {
    pub kind: String,
    pub truncation: Option<String>,
    pub certified_margin: f64,
    pub max_order: u32,
    pub factors: Vec<KernelDescriptor>,
}

impl<T: Real> KernelFunction<T> {
    /// Closed-form or image-sum kernel for disc, annulus, ball, polydisc and products of those.
    pub fn new(domain: Domain<T>) -> Result<Self> {
        Self::with_max_order(domain, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(domain: Domain<T>, max_order: u32) -> Result<Self> {
        domain.validate()?;
        let margin = T::lit(DEFAULT_MARGIN);
        let form = match &domain {
            Domain::Disc { .. } => KernelForm::ClosedFormDisc,
            Domain::Annulus { inner, outer, .. } => {
                KernelForm::SeriesAnnulus(AnnulusConsts::new(*inner / *outer, max_order))
            }
            Domain::Ball { .. } => KernelForm::ClosedFormBall,
            Domain::Polydisc { .. } | Domain::Product { .. } => {
                let fs = domain
                    .factors()
                    .into_iter()
                    .map(|f| Self::with_max_order(f, max_order))
                    .collect::<Result<Vec<_>>>()?;
                KernelForm::Product(fs)
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "no closed-form kernel for {}; build a series kernel",
                    other.kind_name()
                )))
            }
        };
        Ok(KernelFunction {
            domain,
            form,
            max_order,
            margin,
        })
    }

    /// Product kernel over explicit factor kernels.
    pub fn product(factors: Vec<KernelFunction<T>>) -> Result<Self> {
        let domain = Domain::product(factors.iter().map(|k| k.domain.clone()).collect())?;
        let max_order = factors.iter().map(|k| k.max_order).min().unwrap_or(DEFAULT_MAX_ORDER);
        Ok(KernelFunction {
            domain,
            form: KernelForm::Product(factors),
            max_order,
            margin: T::lit(DEFAULT_MARGIN),
        })
    }

    /// Series kernel Σ_{|γ| ≤ cap} z^γ w̄^γ / ‖z^γ‖² with norms from the domain's volume rule.
    pub fn reinhardt(domain: Domain<T>, degree_cap: u32, rule_order: usize) -> Result<Self> {
        let margin = T::lit(DEFAULT_MARGIN);
        let s = reinhardt::build(&domain, degree_cap, rule_order, margin)?;
        Ok(KernelFunction {
            domain,
            form: KernelForm::SeriesReinhardt(s),
            max_order: DEFAULT_MAX_ORDER,
            margin,
        })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }
    pub fn form(&self) -> &KernelForm<T> {
        &self.form
    }
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
    pub fn max_order(&self) -> u32 {
        self.max_order
    }
    pub fn margin(&self) -> T {
        self.margin
    }

    pub fn factors(&self) -> Option<&[KernelFunction<T>]> {
        match &self.form {
            KernelForm::Product(f) => Some(f),
            _ => None,
        }
    }

    pub fn descriptor(&self) -> KernelDescriptor {
        let (kind, truncation, factors) = match &self.form {
            KernelForm::ClosedFormDisc => ("closed_form_disc", None, vec![]),
            KernelForm::ClosedFormBall => ("closed_form_ball", None, vec![]),
            KernelForm::SeriesAnnulus(c) => (
                "series_annulus",
                Some(format!("image sums truncated at {} terms each", c.images)),
                vec![],
            ),
            KernelForm::Product(fs) => ("product", None, fs.iter().map(|f| f.descriptor()).collect()),
            KernelForm::SeriesReinhardt(s) => (
                "series_reinhardt",
                Some(format!(
                    "total degree <= {}, rule order {}, largest retained term at margin {:.3e}",
                    s.degree_cap,
                    s.rule_order,
                    s.tail_diagnostic.to_f64().unwrap_or(f64::NAN)
                )),
                vec![],
            ),
        };
        KernelDescriptor {
            kind: kind.to_string(),
            truncation,
            certified_margin: self.margin.to_f64().unwrap_or(f64::NAN),
            max_order: self.max_order,
            factors,
        }
    }

    fn check_order(&self, alpha: &[u32]) -> Result<()> {
        check_dim(self.dim(), alpha.len())?;
        let o: u32 = alpha.iter().sum();
        if o > self.max_order {
            return Err(Error::UnsupportedOrder {
                order: o,
                max: self.max_order,
            });
        }
        Ok(())
    }

    fn check_point(&self, p: &[Cx<T>], what: &str) -> Result<()> {
        if !self.domain.contains(p)? {
            return Err(Error::OutsideDomain(format!("{what} = {p:?}")));
        }
        Ok(())
    }

    pub fn eval(&self, z: &[Cx<T>], w: &[Cx<T>]) -> Result<Cx<T>> {
        let zero = vec![0; self.dim()];
        self.eval_deriv(&zero, z, w)
    }

    /// ∂^α_{w̄} K(z, w) with membership, order and truncation checks.
    pub fn eval_deriv(&self, alpha: &[u32], z: &[Cx<T>], w: &[Cx<T>]) -> Result<Cx<T>> {
        self.check_order(alpha)?;
        self.check_point(z, "z")?;
        self.check_point(w, "w")?;
        if let Some(b) = self.tail_bound(z, w) {
            let tol = T::lit(1e-12);
            if b > tol {
                return Err(Error::Truncation {
                    bound: b.to_f64().unwrap_or(f64::NAN),
                    tol: 1e-12,
                });
            }
        }
        Ok(self.eval_raw(alpha, z, w))
    }

    /// Estimated truncation error for series forms (None when the form is exact).
    pub fn tail_bound(&self, z: &[Cx<T>], w: &[Cx<T>]) -> Option<T> {
        match &self.form {
            KernelForm::SeriesReinhardt(s) => Some(s.tail_estimate(z, w)),
            KernelForm::Product(fs) => {
                let mut off = 0;
                let mut worst: Option<T> = None;
                for f in fs {
                    let d = f.dim();
                    if let Some(b) = f.tail_bound(&z[off..off + d], &w[off..off + d]) {
                        worst = Some(worst.map_or(b, |x: T| x.max(b)));
                    }
                    off += d;
                }
                worst
            }
            _ => None,
        }
    }

    /// Unchecked evaluation on plain complex points.
    pub fn eval_raw(&self, alpha: &[u32], z: &[Cx<T>], w: &[Cx<T>]) -> Cx<T> {
        self.eval_generic(alpha, z, w)
    }

    /// ∂^α_{w̄} K(z, w) for z given as holomorphic numbers (complex values or jets).
    pub fn eval_generic<H: Holo<T>>(&self, alpha: &[u32], z: &[H], w: &[Cx<T>]) -> H {
        match &self.form {
            KernelForm::ClosedFormDisc => {
                let (c, s) = self.domain.planar_affine().unwrap();
                let zeta = z[0].shift(-c).scale(Complex::new(s.recip(), T::zero()));
                let wbar = ((w[0] - c) / s).conj();
                let m = alpha[0];
                planar::disc_deriv(m, &zeta, wbar).scale(Complex::new(s.powi(-(m as i32) - 2), T::zero()))
            }
            KernelForm::SeriesAnnulus(k) => {
                let (c, s) = self.domain.planar_affine().unwrap();
                let zeta = z[0].shift(-c).scale(Complex::new(s.recip(), T::zero()));
                let wbar = ((w[0] - c) / s).conj();
                let m = alpha[0];
                planar::annulus_deriv(m, &zeta, wbar, k).scale(Complex::new(s.powi(-(m as i32) - 2), T::zero()))
            }
            KernelForm::ClosedFormBall => ball_deriv(alpha, z, w),
            KernelForm::Product(fs) => {
                let mut off = 0;
                let mut acc: Option<H> = None;
                for f in fs {
                    let d = f.dim();
                    let v = f.eval_generic(&alpha[off..off + d], &z[off..off + d], &w[off..off + d]);
                    acc = Some(match acc {
                        None => v,
                        Some(a) => a * v,
                    });
                    off += d;
                }
                acc.unwrap()
            }
            KernelForm::SeriesReinhardt(s) => s.eval(alpha, z, w),
        }
    }

    /// ∂^β_z ∂^α_{w̄} K(z, w) through jet arithmetic.
    pub fn eval_mixed(&self, beta: &[u32], alpha: &[u32], z: &[Cx<T>], w: &[Cx<T>]) -> Cx<T> {
        let order: u32 = beta.iter().sum();
        let space = JetSpace::new(self.dim(), order);
        let zj = Jet::point(&space, z);
        self.eval_generic(alpha, &zj, w).derivative(beta)
    }

    /// Primitive in the last variable: F with ∂F/∂z_n = ∂^α_{w̄} K(z, w). Available when the
    /// last factor is planar (disc or annulus) or the form is a Reinhardt series.
    pub fn fiber_primitive(&self, alpha: &[u32], z: &[Cx<T>], w: &[Cx<T>]) -> Option<Cx<T>> {
        match &self.form {
            KernelForm::ClosedFormDisc => {
                let (c, s) = self.domain.planar_affine().unwrap();
                let zeta = (z[0] - c) / s;
                let wbar = ((w[0] - c) / s).conj();
                let m = alpha[0];
                Some(planar::disc_primitive(m, zeta, wbar) * s.powi(-(m as i32) - 1))
            }
            KernelForm::SeriesAnnulus(k) => {
                let (c, s) = self.domain.planar_affine().unwrap();
                let zeta = (z[0] - c) / s;
                let wbar = ((w[0] - c) / s).conj();
                let m = alpha[0];
                Some(planar::annulus_primitive(m, zeta, wbar, k) * s.powi(-(m as i32) - 1))
            }
            KernelForm::Product(fs) => {
                let n = self.dim();
                let last = fs.last()?;
                let dl = last.dim();
                if dl != 1 {
                    return None;
                }
                let head = &fs[..fs.len() - 1];
                let mut off = 0;
                let mut acc = Complex::new(T::one(), T::zero());
                for f in head {
                    let d = f.dim();
                    acc = acc * f.eval_raw(&alpha[off..off + d], &z[off..off + d], &w[off..off + d]);
                    off += d;
                }
                Some(acc * last.fiber_primitive(&alpha[n - 1..], &z[n - 1..], &w[n - 1..])?)
            }
            KernelForm::SeriesReinhardt(s) => {
                let n = self.dim();
                let mut acc = Complex::new(T::zero(), T::zero());
                for (g, nrm) in &s.norms {
                    if !g.0.iter().zip(alpha).all(|(a, b)| a >= b) {
                        continue;
                    }
                    let mut c = Complex::new(T::one() / *nrm, T::zero());
                    for i in 0..n {
                        let e = g.0[i] - alpha[i];
                        c = c * crate::scalar::cpowi(w[i].conj(), e as i32) * crate::scalar::falling::<T>(g.0[i], alpha[i]);
                        let p = if i == n - 1 { g.0[i] + 1 } else { g.0[i] };
                        c = c * crate::scalar::cpowi(z[i], p as i32);
                    }
                    acc = acc + c / T::from_usize_(g.0[n - 1] as usize + 1);
                }
                Some(acc)
            }
            KernelForm::ClosedFormBall => None,
        }
    }

    /// The planar kernel of the last factor (the kernel itself when planar).
    pub fn fiber_kernel(&self) -> Option<&KernelFunction<T>> {
        match &self.form {
            KernelForm::Product(fs) if fs.last().map(|f| f.domain.is_planar()).unwrap_or(false) => fs.last(),
            _ if self.domain.is_planar() => Some(self),
            _ => None,
        }
    }
}

/// ∂^α_{w̄} of n!/πⁿ (1 − ⟨z, w⟩)^{-(n+1)} = (n+|α|)!/πⁿ z^α (1 − ⟨z,w⟩)^{-(n+1+|α|)}.
fn ball_deriv<T: Real, H: Holo<T>>(alpha: &[u32], z: &[H], w: &[Cx<T>]) -> H {
    let n = z.len();
    let a: u32 = alpha.iter().sum();
    let one = Complex::new(T::one(), T::zero());
    let mut inner = z[0].scale(w[0].conj());
    for i in 1..n {
        inner = inner + z[i].scale(w[i].conj());
    }
    let base = (-inner).shift(one).powi(-(n as i32 + 1 + a as i32));
    let mut mono = z[0].konst(one);
    for (zi, &k) in z.iter().zip(alpha) {
        if k > 0 {
            mono = mono * zi.powi(k as i32);
        }
    }
    let c = factorial::<T>(n as u32 + a) / T::PI().powi(n as i32);
    (mono * base).scale(Complex::new(c, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn closed_form_values() {
        let k = KernelFunction::new(Domain::<f64>::unit_disc()).unwrap();
        assert!((k.eval(&[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap() - c(1.0 / PI, 0.0)).norm() < 1e-15);
        let d1 = k.eval_deriv(&[1], &[c(0.5, 0.0)], &[c(0.0, 0.0)]).unwrap();
        assert!((d1 - c(1.0 / PI, 0.0)).norm() < 1e-15);
        let b = KernelFunction::new(Domain::<f64>::ball(2).unwrap()).unwrap();
        let v = b.eval(&[c(0.0, 0.0); 2], &[c(0.0, 0.0); 2]).unwrap();
        assert!((v - c(2.0 / (PI * PI), 0.0)).norm() < 1e-15);
        let p = KernelFunction::new(Domain::<f64>::polydisc(vec![1.0, 1.0]).unwrap()).unwrap();
        let v = p.eval(&[c(0.0, 0.0); 2], &[c(0.0, 0.0); 2]).unwrap();
        assert!((v - c(1.0 / (PI * PI), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn errors_are_reported() {
        let k = KernelFunction::new(Domain::<f64>::unit_disc()).unwrap();
        assert!(matches!(k.eval(&[c(1.5, 0.0)], &[c(0.0, 0.0)]), Err(Error::OutsideDomain(_))));
        assert!(matches!(
            k.eval_deriv(&[5], &[c(0.1, 0.0)], &[c(0.0, 0.0)]),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(KernelFunction::new(Domain::<f64>::ellipsoid(vec![1, 2]).unwrap()).is_err());
    }
}
