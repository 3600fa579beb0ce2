//! Polynomial automorphisms with polynomial inverses.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::poly::{poly_det, MultiPoly};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};

type C = Complex<f64>;

/// Points used by the inverse and Jacobian checks.
pub const CHECK_POINTS: usize = 100;
/// Allowed defect of f⁻¹∘f and of det Df.
pub const CHECK_TOL: f64 = 1e-12;

/// Declarative form of an automorphism, as read from a run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AutomorphismSpec {
    /// (z, w) ↦ (w, p(w) − z); `p` lists coefficients from the constant term up.
    Henon { p: Vec<C> },
    /// (z₁, z₂, z₃) ↦ (z₂, z₃, z₁ + q(z₃)).
    Shiftlike { q: Vec<C> },
    General {
        components: Vec<MultiPoly>,
        inverse: Vec<MultiPoly>,
        /// Declared by the caller; checked, never trusted.
        #[serde(default)]
        unit_jacobian: bool,
    },
}

impl AutomorphismSpec {
    pub fn build(&self) -> Result<PolyAutomorphism> {
        match self {
            AutomorphismSpec::Henon { p } => henon(p),
            AutomorphismSpec::Shiftlike { q } => shiftlike(q),
            AutomorphismSpec::General {
                components,
                inverse,
                unit_jacobian,
            } => PolyAutomorphism::general(components.clone(), inverse.clone(), *unit_jacobian),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Henon { p: Vec<C> },
    Shiftlike { q: Vec<C> },
    General,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolyAutomorphism {
    family: Family,
    components: Vec<MultiPoly>,
    inverse: Vec<MultiPoly>,
    declared_unit_jacobian: bool,
}

fn check_coeffs(c: &[C], name: &str) -> Result<()> {
    if c.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::InvalidInput(format!("non-finite coefficient in {name}")));
    }
    Ok(())
}

/// f(z, w) = (w, p(w) − z) with inverse (z, w) ↦ (p(z) − w, z).
pub fn henon(p: &[C]) -> Result<PolyAutomorphism> {
    check_coeffs(p, "p")?;
    let z = MultiPoly::var(2, 0);
    let w = MultiPoly::var(2, 1);
    let pw = MultiPoly::univariate(2, 1, p);
    let pz = MultiPoly::univariate(2, 0, p);
    Ok(PolyAutomorphism {
        family: Family::Henon { p: p.to_vec() },
        components: vec![w.clone(), pw.sub(&z)],
        inverse: vec![pz.sub(&w), z],
        declared_unit_jacobian: true,
    })
}

/// f(z₁, z₂, z₃) = (z₂, z₃, z₁ + q(z₃)) with inverse (z₁, z₂, z₃) ↦ (z₃ − q(z₂), z₁, z₂).
pub fn shiftlike(q: &[C]) -> Result<PolyAutomorphism> {
    check_coeffs(q, "q")?;
    let v: Vec<MultiPoly> = (0..3).map(|i| MultiPoly::var(3, i)).collect();
    let q3 = MultiPoly::univariate(3, 2, q);
    let q2 = MultiPoly::univariate(3, 1, q);
    Ok(PolyAutomorphism {
        family: Family::Shiftlike { q: q.to_vec() },
        components: vec![v[1].clone(), v[2].clone(), v[0].add(&q3)],
        inverse: vec![v[2].sub(&q2), v[0].clone(), v[1].clone()],
        declared_unit_jacobian: true,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AutomorphismChecks {
    /// max |f⁻¹(f(z)) − z| / (1 + |z|) over the check points.
    pub inverse_defect: f64,
    /// Largest coefficient of det Df − 1, expanded symbolically.
    pub symbolic_jacobian_defect: f64,
    /// max |det Df(z) − 1| from first-order jets at the check points.
    pub numeric_jacobian_defect: f64,
    pub points: usize,
    pub declared_unit_jacobian: bool,
}

impl AutomorphismChecks {
    pub fn inverse_ok(&self) -> bool {
        self.inverse_defect <= CHECK_TOL
    }

    pub fn jacobian_ok(&self) -> bool {
        self.symbolic_jacobian_defect <= CHECK_TOL && self.numeric_jacobian_defect <= CHECK_TOL
    }
}

impl PolyAutomorphism {
    pub fn general(components: Vec<MultiPoly>, inverse: Vec<MultiPoly>, declared_unit_jacobian: bool) -> Result<Self> {
        let n = components.len();
        if n == 0 || inverse.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} components with {} inverse components",
                n,
                inverse.len()
            )));
        }
        if components.iter().chain(&inverse).any(|p| p.nvars() != n) {
            return Err(Error::InvalidInput(format!("every component must be a polynomial in {n} variables")));
        }
        Ok(PolyAutomorphism {
            family: Family::General,
            components,
            inverse,
            declared_unit_jacobian,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MultiPoly] {
        &self.components
    }

    pub fn inverse_components(&self) -> &[MultiPoly] {
        &self.inverse
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn inverse_degree(&self) -> u32 {
        self.inverse.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn apply(&self, z: &[C]) -> Vec<C> {
        self.components.iter().map(|p| p.eval(z)).collect()
    }

    pub fn apply_inverse(&self, z: &[C]) -> Vec<C> {
        self.inverse.iter().map(|p| p.eval(z)).collect()
    }

    /// det Df as a polynomial.
    pub fn jacobian_determinant(&self) -> MultiPoly {
        let n = self.dim();
        let m: Vec<Vec<MultiPoly>> = self
            .components
            .iter()
            .map(|f| (0..n).map(|j| f.derivative(j)).collect())
            .collect();
        poly_det(&m)
    }

    /// Jacobian matrix at z from first-order jets.
    pub fn jacobian_at(&self, z: &[C]) -> DMatrix<C> {
        let n = self.dim();
        let space = JetSpace::new(n, 1);
        let pt = Jet::point(&space, z);
        let mut m = DMatrix::zeros(n, n);
        for (i, f) in self.components.iter().enumerate() {
            let j = f.eval_generic(&pt);
            for k in 0..n {
                let mut e = vec![0; n];
                e[k] = 1;
                m[(i, k)] = j.derivative(&e);
            }
        }
        m
    }

    pub fn checks(&self) -> AutomorphismChecks {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0xa17);
        let pts: Vec<Vec<C>> = (0..CHECK_POINTS)
            .map(|_| {
                (0..n)
                    .map(|_| C::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                    .collect()
            })
            .collect();
        let mut inverse_defect: f64 = 0.0;
        let mut numeric: f64 = 0.0;
        for z in &pts {
            let back = self.apply_inverse(&self.apply(z));
            let d = back.iter().zip(z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let s = 1.0 + z.iter().map(|x| x.norm()).fold(0.0, f64::max);
            inverse_defect = inverse_defect.max(if d.is_finite() { d / s } else { f64::INFINITY });
            numeric = numeric.max((self.jacobian_at(z).determinant() - C::new(1.0, 0.0)).norm());
        }
        let det = self.jacobian_determinant();
        let symbolic = det.sub(&MultiPoly::constant(n, C::new(1.0, 0.0))).max_coeff();
        AutomorphismChecks {
            inverse_defect,
            symbolic_jacobian_defect: symbolic,
            numeric_jacobian_defect: numeric,
            points: pts.len(),
            declared_unit_jacobian: self.declared_unit_jacobian,
        }
    }

    /// The quadrature node f⁻¹(0).
    pub fn node(&self) -> Vec<C> {
        self.apply_inverse(&vec![C::new(0.0, 0.0); self.dim()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn henon_fixes_origin() {
        let f = henon(&[C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)]).unwrap();
        assert_eq!(f.apply(&[C::new(0.0, 0.0); 2]), vec![C::new(0.0, 0.0); 2]);
        assert_eq!(f.node(), vec![C::new(0.0, 0.0); 2]);
        let c = f.checks();
        assert!(c.inverse_ok() && c.jacobian_ok(), "{c:?}");
    }

    #[test]
    fn scaling_map_fails_jacobian() {
        let z = MultiPoly::var(2, 0);
        let w = MultiPoly::var(2, 1);
        let f = PolyAutomorphism::general(
            vec![z.scale(C::new(2.0, 0.0)), w.clone()],
            vec![z.scale(C::new(0.5, 0.0)), w],
            true,
        )
        .unwrap();
        let c = f.checks();
        assert!(c.inverse_ok());
        assert!(!c.jacobian_ok());
        assert!((c.symbolic_jacobian_defect - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spec_deserializes() {
        let s: AutomorphismSpec = serde_json::from_str(r#"{"kind":"shiftlike","q":[[0,0],[0,0],[1,0]]}"#).unwrap();
        let f = s.build().unwrap();
        assert_eq!(f.dim(), 3);
        assert_eq!(f.inverse_degree(), 2);
        assert!(serde_json::from_str::<AutomorphismSpec>(r#"{"kind":"henon","q":[]}"#).is_err());
    }
}
