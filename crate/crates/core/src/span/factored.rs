use num_complex::Complex;

use super::SpanElement;
use crate::jet::Holo;
use crate::kernels::KernelFunction;
use crate::scalar::{Cx, Real};

/// Product-kernel element written as v(z′, z_n) = Σ_{d,o} C[d][o] K_D^{(α′_d)}(z′, b′_d) K_Ω^{(α_o)}(z_n, b_o).
#[derive(Clone, Debug)]
pub struct Factored<T: Real> {
    pub base: KernelFunction<T>,
    pub fiber: KernelFunction<T>,
    pub dkeys: Vec<(Vec<Cx<T>>, Vec<u32>)>,
    pub okeys: Vec<(Cx<T>, u32)>,
    pub coef: Vec<Vec<Cx<T>>>,
}

impl<T: Real> Factored<T> {
    pub(super) fn from_span(u: &SpanElement<T>) -> Option<Self> {
        let fs = u.kernel().factors()?;
        if fs.len() < 2 || fs.last()?.dim() != 1 || !fs.last()?.domain().is_planar() {
            return None;
        }
        let head = &fs[..fs.len() - 1];
        let base = if head.len() == 1 {
            head[0].clone()
        } else {
            KernelFunction::product(head.to_vec()).ok()?
        };
        let fiber = fs.last()?.clone();
        let n = u.dim();
        let mut dkeys: Vec<(Vec<Cx<T>>, Vec<u32>)> = Vec::new();
        let mut okeys: Vec<(Cx<T>, u32)> = Vec::new();
        let mut entries = Vec::new();
        for t in u.terms() {
            let dk = (t.node.coords[..n - 1].to_vec(), t.alpha.0[..n - 1].to_vec());
            let ok = (t.node.coords[n - 1], t.alpha.0[n - 1]);
            let di = match dkeys.iter().position(|k| k.1 == dk.1 && k.0 == dk.0) {
                Some(i) => i,
                None => {
                    dkeys.push(dk);
                    dkeys.len() - 1
                }
            };
            let oi = match okeys.iter().position(|k| k.1 == ok.1 && k.0 == ok.0) {
                Some(i) => i,
                None => {
                    okeys.push(ok);
                    okeys.len() - 1
                }
            };
            entries.push((di, oi, t.coeff));
        }
        let mut coef = vec![vec![Complex::new(T::zero(), T::zero()); okeys.len()]; dkeys.len()];
        for (d, o, c) in entries {
            coef[d][o] = coef[d][o] + c;
        }
        Some(Factored {
            base,
            fiber,
            dkeys,
            okeys,
            coef,
        })
    }

    pub fn base_values<H: Holo<T>>(&self, zp: &[H]) -> Vec<H> {
        self.dkeys
            .iter()
            .map(|(b, a)| self.base.eval_generic(a, zp, b))
            .collect()
    }

    pub fn fiber_values<H: Holo<T>>(&self, zn: &H) -> Vec<H> {
        let z = [zn.clone()];
        self.okeys
            .iter()
            .map(|(b, a)| self.fiber.eval_generic(&[*a], &z, &[*b]))
            .collect()
    }

    /// Closed-form primitives in z_n of each fiber key.
    pub fn fiber_primitives(&self, zn: Cx<T>) -> Option<Vec<Cx<T>>> {
        self.okeys
            .iter()
            .map(|(b, a)| self.fiber.fiber_primitive(&[*a], &[zn], &[*b]))
            .collect()
    }

    /// W[d] = Σ_o C[d][o] k[o].
    pub fn contract_fiber<H: Holo<T>>(&self, k: &[H]) -> Vec<H> {
        self.coef
            .iter()
            .map(|row| {
                let mut acc = k[0].konst(Complex::new(T::zero(), T::zero()));
                for (c, v) in row.iter().zip(k) {
                    acc = acc + v.scale(*c);
                }
                acc
            })
            .collect()
    }

    pub fn dot<H: Holo<T>>(kd: &[H], w: &[H]) -> H {
        let mut acc = kd[0].clone() * w[0].clone();
        for (a, b) in kd.iter().zip(w).skip(1) {
            acc = acc + a.clone() * b.clone();
        }
        acc
    }

    pub fn eval(&self, z: &[Cx<T>]) -> Cx<T> {
        let n = z.len();
        let kd = self.base_values(&z[..n - 1]);
        let ko = self.fiber_values(&z[n - 1]);
        Self::dot(&kd, &self.contract_fiber(&ko))
    }
}
