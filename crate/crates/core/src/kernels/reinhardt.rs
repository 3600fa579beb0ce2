//! Series kernels Σ z^γ w̄^γ / ‖z^γ‖² for complete Reinhardt and complete Hartogs domains.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::domains::{Domain, MultiIndex, RuleSpec};
use crate::error::{Error, Result};
use crate::jet::Holo;
use crate::scalar::{falling, Cx, Real};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReinhardtSeries<T> {
    pub degree_cap: u32,
    /// (γ, ‖z^γ‖²) for |γ| ≤ cap, graded.
    pub norms: Vec<(MultiIndex, T)>,
    /// Largest degree-cap term at the margin-shrunk boundary.
    pub tail_diagnostic: T,
    pub rule_order: usize,
}

fn norms_at<T: Real>(d: &Domain<T>, exps: &[MultiIndex], order: usize) -> Result<Vec<T>> {
    let rule = d.volume_rule_spec(RuleSpec::new(order, 1))?;
    let n = d.dim();
    let mut out = vec![T::zero(); exps.len()];
    let cap = exps.iter().map(|e| e.order()).max().unwrap_or(0) as usize;
    for m in 0..rule.modulus_count() {
        let rho = rule.modulus(m);
        // squared-modulus power tables
        let pw: Vec<Vec<T>> = (0..n)
            .map(|i| {
                let s = rho[i] * rho[i];
                let mut v = Vec::with_capacity(cap + 1);
                let mut p = T::one();
                for _ in 0..=cap {
                    v.push(p);
                    p = p * s;
                }
                v
            })
            .collect();
        let w = rule.modulus_weight(m);
        for (o, e) in out.iter_mut().zip(exps) {
            let t = e.0.iter().enumerate().fold(T::one(), |a, (i, &k)| a * pw[i][k as usize]);
            *o = *o + w * t;
        }
    }
    Ok(out)
}

fn supported<T: Real>(d: &Domain<T>) -> bool {
    match d {
        Domain::Disc { center, .. } => center.norm() == T::zero(),
        Domain::Ball { .. } | Domain::Polydisc { .. } | Domain::Ellipsoid { .. } | Domain::Hartogs { .. } => true,
        _ => false,
    }
}

/// Boundary points in modulus space (positive orthant), shrunk by `delta`.
fn margin_points<T: Real>(d: &Domain<T>, delta: T) -> Vec<Vec<T>> {
    let n = d.dim();
    let dirs: Vec<Vec<T>> = if n == 1 {
        vec![vec![T::one()]]
    } else {
        // coarse grid of directions on the orthant
        let k = 32usize;
        let mut v = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let u: Vec<T> = idx.iter().map(|&i| T::from_usize_(i)).collect();
            let nr = u.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
            if nr > T::zero() {
                v.push(u.iter().map(|&x| x / nr).collect());
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return finish(d, v, delta);
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] <= k {
                    break;
                }
                idx[i] = 0;
            }
        }
    };
    finish(d, dirs, delta)
}

fn finish<T: Real>(d: &Domain<T>, dirs: Vec<Vec<T>>, delta: T) -> Vec<Vec<T>> {
    dirs.into_iter()
        .map(|u| {
            let mut lo = T::zero();
            let mut hi = T::lit(16.0);
            for _ in 0..60 {
                let mid = (lo + hi) * T::lit(0.5);
                let z: Vec<Cx<T>> = u.iter().map(|&x| Complex::new(x * mid, T::zero())).collect();
                if d.contains(&z).unwrap_or(false) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            u.iter().map(|&x| x * lo * (T::one() - delta)).collect()
        })
        .collect()
}

/// Builds the series kernel from norms computed by the domain's own volume rule.
pub fn build<T: Real>(d: &Domain<T>, cap: u32, rule_order: usize, margin: T) -> Result<ReinhardtSeries<T>> {
    if !supported(d) {
        return Err(Error::Unsupported(format!(
            "monomials are not orthogonal on {} (needs a complete circular domain centred at 0)",
            d.kind_name()
        )));
    }
    if rule_order < 4 {
        return Err(Error::RuleOrder(format!("rule order {rule_order} < 4")));
    }
    let exps = MultiIndex::all_up_to(d.dim(), cap);
    let a = norms_at(d, &exps, rule_order)?;
    let b = norms_at(d, &exps, rule_order + rule_order / 2)?;
    let worst = a
        .iter()
        .zip(&b)
        .fold(T::zero(), |m, (x, y)| m.max(((*x - *y) / *y).abs()));
    if !(worst <= T::lit(1e-10).max(T::epsilon() * T::lit(1e3))) {
        return Err(Error::RuleOrder(format!(
            "norm estimates move by {worst:?} relative under refinement of order {rule_order}"
        )));
    }
    let pts = margin_points(d, margin);
    let mut tail = T::zero();
    for (e, &nrm) in exps.iter().zip(&b) {
        if e.order() != cap {
            continue;
        }
        for p in &pts {
            let v = e.0.iter().zip(p).fold(T::one(), |acc, (&k, &x)| acc * x.powi(2 * k as i32));
            tail = tail.max(v / nrm);
        }
    }
    Ok(ReinhardtSeries {
        degree_cap: cap,
        norms: exps.into_iter().zip(b).collect(),
        tail_diagnostic: tail,
        rule_order,
    })
}

impl<T: Real> ReinhardtSeries<T> {
    pub fn eval<H: Holo<T>>(&self, alpha: &[u32], z: &[H], w: &[Cx<T>]) -> H {
        let n = z.len();
        let cap = self.degree_cap as usize;
        let one = Complex::new(T::one(), T::zero());
        let zp: Vec<Vec<H>> = z
            .iter()
            .map(|zi| {
                let mut v = Vec::with_capacity(cap + 1);
                let mut p = zi.konst(one);
                for _ in 0..=cap {
                    v.push(p.clone());
                    p = p * zi.clone();
                }
                v
            })
            .collect();
        let wp: Vec<Vec<Cx<T>>> = w
            .iter()
            .map(|wi| {
                let wb = wi.conj();
                let mut v = Vec::with_capacity(cap + 1);
                let mut p = one;
                for _ in 0..=cap {
                    v.push(p);
                    p = p * wb;
                }
                v
            })
            .collect();
        let mut acc = z[0].konst(Complex::new(T::zero(), T::zero()));
        for (g, nrm) in &self.norms {
            if !g.0.iter().zip(alpha).all(|(a, b)| a >= b) {
                continue;
            }
            let mut c = Complex::new(T::one() / *nrm, T::zero());
            for i in 0..n {
                let gi = g.0[i];
                c = c * wp[i][(gi - alpha[i]) as usize] * falling::<T>(gi, alpha[i]);
            }
            let mut term = zp[0][g.0[0] as usize].clone();
            for (i, row) in zp.iter().enumerate().skip(1) {
                term = term * row[g.0[i] as usize].clone();
            }
            acc = acc + term.scale(c);
        }
        acc
    }

    /// Coefficients C_γ of Σ_j t_j K^{(α_j)}(·, b_j) = Σ_γ C_γ z^γ.
    pub fn span_polynomial(&self, terms: &[(Vec<Cx<T>>, Vec<u32>, Cx<T>)]) -> Vec<(MultiIndex, Cx<T>)> {
        self.norms
            .iter()
            .map(|(g, nrm)| {
                let mut s = Complex::new(T::zero(), T::zero());
                for (b, alpha, t) in terms {
                    if !g.0.iter().zip(alpha).all(|(a, b)| a >= b) {
                        continue;
                    }
                    let mut c = *t / *nrm;
                    for i in 0..g.0.len() {
                        let e = g.0[i] - alpha[i];
                        c = c * crate::scalar::cpowi(b[i].conj(), e as i32) * falling::<T>(g.0[i], alpha[i]);
                    }
                    s = s + c;
                }
                (g.clone(), s)
            })
            .collect()
    }

    /// Estimate of the neglected tail at (z, w): the largest degree-cap term times a
    /// geometric continuation factor.
    pub fn tail_estimate(&self, z: &[Cx<T>], w: &[Cx<T>]) -> T {
        let mut top = T::zero();
        let mut prev = T::zero();
        for (g, nrm) in &self.norms {
            let o = g.order();
            if o + 1 < self.degree_cap {
                continue;
            }
            let v = g
                .0
                .iter()
                .enumerate()
                .fold(T::one(), |a, (i, &k)| a * (z[i].norm() * w[i].norm()).powi(k as i32))
                / *nrm;
            if o == self.degree_cap {
                top = top.max(v);
            } else {
                prev = prev.max(v);
            }
        }
        let ratio = if prev > T::zero() { (top / prev).min(T::lit(0.999)) } else { T::lit(0.5) };
        top * ratio / (T::one() - ratio)
    }
}
