//! Sparse complex polynomials in several variables.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::domains::MultiIndex;
use crate::error::{Error, Result};
use crate::jet::Holo;

type C = Complex<f64>;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PolyTerm {
    exps: Vec<u32>,
    coeff: C,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PolyRepr {
    nvars: usize,
    terms: Vec<PolyTerm>,
}

/// Σ c_γ z^γ with exact-zero coefficients dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl TryFrom<PolyRepr> for MultiPoly {
    type Error = Error;

    fn try_from(r: PolyRepr) -> Result<Self> {
        let mut p = MultiPoly::zero(r.nvars);
        for t in r.terms {
            if t.exps.len() != r.nvars {
                return Err(Error::InvalidInput(format!(
                    "term {:?} has {} exponents, expected {}",
                    t.exps,
                    t.exps.len(),
                    r.nvars
                )));
            }
            if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                return Err(Error::InvalidInput("non-finite polynomial coefficient".into()));
            }
            p.add_term(t.exps, t.coeff);
        }
        Ok(p)
    }
}

impl From<MultiPoly> for PolyRepr {
    fn from(p: MultiPoly) -> Self {
        PolyRepr {
            nvars: p.nvars,
            terms: p.terms.into_iter().map(|(exps, coeff)| PolyTerm { exps, coeff }).collect(),
        }
    }
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate z_i.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, C::new(1.0, 0.0));
        p
    }

    /// Σ_k c_k z_i^k.
    pub fn univariate(nvars: usize, i: usize, coeffs: &[C]) -> Self {
        let mut p = Self::zero(nvars);
        for (k, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; nvars];
            e[i] = k as u32;
            p.add_term(e, c);
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: &[(MultiIndex, C)]) -> Self {
        let mut p = Self::zero(nvars);
        for (g, c) in terms {
            p.add_term(g.0.clone(), *c);
        }
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: C) {
        let e = self.terms.entry(exps).or_insert(C::new(0.0, 0.0));
        *e += c;
        if *e == C::new(0.0, 0.0) {
            self.terms.retain(|_, v| *v != C::new(0.0, 0.0));
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn to_terms(&self) -> Vec<(MultiIndex, C)> {
        self.terms.iter().map(|(e, c)| (MultiIndex(e.clone()), *c)).collect()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Highest power of z_i.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.nvars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let e = a.iter().zip(b).map(|(x, y)| x + y).collect();
                p.add_term(e, ca * cb);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.nvars, C::new(1.0, 0.0)), |a, _| a.mul(self))
    }

    /// ∂/∂z_i.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                p.add_term(d, c * e[i] as f64);
            }
        }
        p
    }

    /// self(g_1, …, g_n).
    pub fn compose(&self, g: &[MultiPoly]) -> Self {
        let m = g.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Self::zero(m);
        for (e, c) in &self.terms {
            let mut t = Self::constant(m, *c);
            for (gi, &k) in g.iter().zip(e) {
                if k > 0 {
                    t = t.mul(&gi.pow(k));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// max |c| over all coefficients.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Bound on |p| over the polydisc with the given radii.
    pub fn bound_on_polydisc(&self, radii: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.norm() * e.iter().zip(radii).map(|(&k, r)| r.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn eval(&self, z: &[C]) -> C {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(z).fold(*c, |a, (&k, x)| if k == 0 { a } else { a * x.powu(k) }))
            .sum()
    }

    /// Evaluation over any holomorphic number type (jets included).
    pub fn eval_generic<H: Holo<f64>>(&self, z: &[H]) -> H {
        let one = C::new(1.0, 0.0);
        let pw: Vec<Vec<H>> = (0..self.nvars)
            .map(|i| {
                let mut v = vec![z[i].konst(one)];
                for k in 1..=self.degree_in(i) as usize {
                    let nx = v[k - 1].clone() * z[i].clone();
                    v.push(nx);
                }
                v
            })
            .collect();
        let mut acc = z[0].konst(C::new(0.0, 0.0));
        for (e, c) in &self.terms {
            let mut t = z[0].konst(*c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * pw[i][k as usize].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }
}

/// Determinant of a square polynomial matrix by cofactor expansion along the first row.
pub fn poly_det(m: &[Vec<MultiPoly>]) -> MultiPoly {
    let n = m.len();
    let nv = m[0][0].nvars();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = MultiPoly::zero(nv);
    for j in 0..n {
        let minor: Vec<Vec<MultiPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, p)| p.clone()).collect())
            .collect();
        let t = m[0][j].mul(&poly_det(&minor));
        acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn arithmetic_and_calculus() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let p = x.mul(&x).sub(&y); // x² − y
        assert_eq!(p.degree(), 2);
        assert_eq!(p.derivative(0), x.scale(c(2.0)));
        assert_eq!(p.derivative(1), MultiPoly::constant(2, c(-1.0)));
        assert!(p.sub(&p).terms().next().is_none());
        let z = [C::new(0.3, 0.4), C::new(-0.2, 0.1)];
        assert!((p.eval(&z) - (z[0] * z[0] - z[1])).norm() < 1e-15);
    }

    #[test]
    fn composition_and_det() {
        // (x, y) ↦ (y, y² − x) composed with its inverse (x² − y, x) is the identity.
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let f = [y.clone(), y.mul(&y).sub(&x)];
        let g = [x.mul(&x).sub(&y), x.clone()];
        assert_eq!(f[0].compose(&g), x);
        assert_eq!(f[1].compose(&g), y);
        let jac: Vec<Vec<MultiPoly>> = f.iter().map(|fi| (0..2).map(|j| fi.derivative(j)).collect()).collect();
        assert_eq!(poly_det(&jac), MultiPoly::constant(2, c(1.0)));
    }

    #[test]
    fn serde_round_trip() {
        let p = MultiPoly::univariate(3, 2, &[c(0.0), c(1.0), C::new(0.5, -2.0)]);
        let s = serde_json::to_string(&p).unwrap();
        let q: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<MultiPoly>(r#"{"nvars":2,"terms":[{"exps":[1],"coeff":[1,0]}]}"#).is_err());
    }
}
