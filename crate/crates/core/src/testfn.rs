//! Holomorphic test functions for reproducing and quadrature-identity checks.

use num_complex::Complex;
use serde::Serialize;

use crate::domains::MultiIndex;
use crate::jet::{Holo, Jet, JetSpace};
use crate::scalar::{Cx, Real};

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction<T> {
    /// Π ((z_i − c_i)/s_i)^{e_i}; negative exponents allowed where c_i is outside the domain.
    Monomial { exps: Vec<i32>, center: Vec<Cx<T>>, scale: Vec<T> },
    /// exp(Σ λ_i z_i).
    Exp { lambda: Vec<Cx<T>> },
    /// Π (1 − z_i conj(p_i)/ρ²)^{-2}: a polydisc kernel section, holomorphic for |z_i| < ρ²/|p_i|.
    KernelSection { pole: Vec<Cx<T>>, radius: T },
    /// Σ c_γ z^γ.
    Poly { terms: Vec<(MultiIndex, Cx<T>)> },
}

impl<T: Real> TestFunction<T> {
    pub fn monomial(exps: &[u32]) -> Self {
        let n = exps.len();
        TestFunction::Monomial {
            exps: exps.iter().map(|&e| e as i32).collect(),
            center: vec![Complex::new(T::zero(), T::zero()); n],
            scale: vec![T::one(); n],
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Monomial { exps, .. } => format!("monomial{exps:?}"),
            TestFunction::Exp { .. } => "exp".to_string(),
            TestFunction::KernelSection { .. } => "kernel_section".to_string(),
            TestFunction::Poly { terms } => format!("poly[{} terms]", terms.len()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Monomial { exps, .. } => exps.len(),
            TestFunction::Exp { lambda } => lambda.len(),
            TestFunction::KernelSection { pole, .. } => pole.len(),
            TestFunction::Poly { terms } => terms.first().map(|t| t.0.dim()).unwrap_or(0),
        }
    }

    /// Total polynomial degree, when the function is a polynomial.
    pub fn degree(&self) -> Option<u32> {
        match self {
            TestFunction::Monomial { exps, .. } if exps.iter().all(|&e| e >= 0) => {
                Some(exps.iter().map(|&e| e as u32).sum())
            }
            TestFunction::Poly { terms } => terms.iter().map(|t| t.0.order()).max(),
            _ => None,
        }
    }

    pub fn eval<H: Holo<T>>(&self, z: &[H]) -> H {
        let one = Complex::new(T::one(), T::zero());
        match self {
            TestFunction::Monomial { exps, center, scale } => {
                let mut acc = z[0].konst(one);
                for i in 0..exps.len() {
                    if exps[i] != 0 {
                        let u = z[i].shift(-center[i]).scale(Complex::new(scale[i].recip(), T::zero()));
                        acc = acc * u.powi(exps[i]);
                    }
                }
                acc
            }
            TestFunction::Exp { lambda } => {
                let mut s = z[0].scale(lambda[0]);
                for i in 1..lambda.len() {
                    s = s + z[i].scale(lambda[i]);
                }
                s.exp()
            }
            TestFunction::KernelSection { pole, radius } => {
                let mut acc = z[0].konst(one);
                let r2 = *radius * *radius;
                for i in 0..pole.len() {
                    let f = z[i].scale(-pole[i].conj() / r2).shift(one);
                    acc = acc * f.powi(-2);
                }
                acc
            }
            TestFunction::Poly { terms } => {
                let n = z.len();
                let maxd = terms.iter().map(|t| t.0.order()).max().unwrap_or(0) as usize;
                let pw: Vec<Vec<H>> = (0..n)
                    .map(|i| {
                        let mut v = vec![z[i].konst(one)];
                        for k in 1..=maxd {
                            let p = v[k - 1].clone() * z[i].clone();
                            v.push(p);
                        }
                        v
                    })
                    .collect();
                let mut acc = z[0].konst(Complex::new(T::zero(), T::zero()));
                for (g, c) in terms {
                    let mut t = pw[0][g.0[0] as usize].clone();
                    for i in 1..n {
                        t = t * pw[i][g.0[i] as usize].clone();
                    }
                    acc = acc + t.scale(*c);
                }
                acc
            }
        }
    }

    pub fn value(&self, z: &[Cx<T>]) -> Cx<T> {
        self.eval(z)
    }

    /// ∂^α h at z via jets.
    pub fn derivative(&self, alpha: &[u32], z: &[Cx<T>]) -> Cx<T> {
        let order: u32 = alpha.iter().sum();
        if order == 0 {
            return self.value(z);
        }
        let space = JetSpace::new(z.len(), order);
        let zj = Jet::point(&space, z);
        self.eval(&zj).derivative(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::cauchy_derivative;

    #[test]
    fn jet_derivatives_match_cauchy_oracle() {
        let f: TestFunction<f64> = TestFunction::KernelSection {
            pole: vec![Complex::new(0.3, 0.1), Complex::new(-0.2, 0.4)],
            radius: 1.0,
        };
        let z = [Complex::new(0.1, 0.2), Complex::new(0.3, -0.1)];
        let d = f.derivative(&[0, 2], &z);
        let o = cauchy_derivative(|s| f.value(&[z[0], s]), z[1], 2, 0.05, 64);
        assert!((d - o).norm() < 1e-10 * o.norm());
    }
}
