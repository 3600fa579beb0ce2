//! Closed forms for the unit disc and the annulus `{ r < |ζ| < 1 }` in normalized
//! coordinates, with conjugate derivatives of any order and their primitives in ζ.
//!
//! The annulus kernel is evaluated in its image-summed form
//!
//! ```text
//! π K(ζ, ω) = Σ_{k≥0} q^k / (1 − q^k x)² + Σ_{j≥1} q^j / (q^j − x)² + 1 / (2 L x),
//! x = ζ ω̄, q = r², L = ln(1/r),
//! ```
//!
//! which equals the Laurent series with the logarithmic n = −1 term and converges like
//! q^k uniformly on the closed annulus.

use num_complex::Complex;

use crate::jet::Holo;
use crate::scalar::{cpowi, factorial, Cx, Real};

/// ∂^m_{ω̄} K_disc(ζ, ω) on the unit disc.
pub fn disc_deriv<T: Real, H: Holo<T>>(m: u32, zeta: &H, wbar: Cx<T>) -> H {
    let one = Complex::new(T::one(), T::zero());
    let den = zeta.scale(-wbar).shift(one).powi(-(m as i32 + 2));
    let c = factorial::<T>(m + 1) / T::PI();
    (zeta.powi(m as i32) * den).scale(Complex::new(c, T::zero()))
}

/// ∫_0^ζ ∂^m_{ω̄} K_disc(λ, ω) dλ = m! ζ^{m+1} / (π (1 − ζ ω̄)^{m+1}).
pub fn disc_primitive<T: Real>(m: u32, zeta: Cx<T>, wbar: Cx<T>) -> Cx<T> {
    let one = Complex::new(T::one(), T::zero());
    cpowi(zeta, m as i32 + 1) * cpowi(one - zeta * wbar, -(m as i32 + 1)) * (factorial::<T>(m) / T::PI())
}

/// Number of image terms so that the neglected tail is below 1e-18 relative.
pub fn annulus_images<T: Real>(r: T, max_order: u32) -> usize {
    let q = r * r;
    let k = (T::lit(18.0) * T::LN_10() / (-q.ln())).ceil();
    k.to_usize().unwrap_or(64).max(4) + max_order as usize + 3
}

#[derive(Clone, Copy, Debug)]
pub struct AnnulusConsts<T> {
    pub q: T,
    pub log_inv_r: T,
    pub images: usize,
}

impl<T: Real> AnnulusConsts<T> {
    pub fn new(r: T, max_order: u32) -> Self {
        AnnulusConsts {
            q: r * r,
            log_inv_r: -r.ln(),
            images: annulus_images(r, max_order),
        }
    }
}

/// ∂^m_{ω̄} K_annulus(ζ, ω) on `{ r < |ζ| < 1 }`.
pub fn annulus_deriv<T: Real, H: Holo<T>>(m: u32, zeta: &H, wbar: Cx<T>, c: &AnnulusConsts<T>) -> H {
    let one = Complex::new(T::one(), T::zero());
    let mi = m as i32;
    let fm1 = factorial::<T>(m + 1);
    let zw = zeta.scale(wbar);
    let mut acc = zeta.konst(Complex::new(T::zero(), T::zero()));
    let mut qk = T::one();
    for _ in 0..c.images {
        // q^{k(m+1)} (1 − q^k x)^{-(m+2)}
        let term = zw
            .scale(Complex::new(-qk, T::zero()))
            .shift(one)
            .powi(-(mi + 2))
            .scale(Complex::new(qk.powi(mi + 1), T::zero()));
        acc = acc + term;
        qk = qk * c.q;
    }
    let mut qj = c.q;
    for _ in 0..c.images {
        let term = (-zw.clone())
            .shift(Complex::new(qj, T::zero()))
            .powi(-(mi + 2))
            .scale(Complex::new(qj, T::zero()));
        acc = acc + term;
        qj = qj * c.q;
    }
    let series = (zeta.powi(mi) * acc).scale(Complex::new(fm1 / T::PI(), T::zero()));
    let sign = if m.is_multiple_of(2) { T::one() } else { -T::one() };
    let lc = cpowi(wbar, -(mi + 1))
        * (sign * factorial::<T>(m) / (T::lit(2.0) * T::PI() * c.log_inv_r));
    series + zeta.recip().scale(lc)
}

/// Primitive in ζ of ∂^m_{ω̄} K_annulus(ζ, ω), using the principal logarithm for the
/// n = −1 term (so it is single-valued on the plane cut along the negative real axis).
pub fn annulus_primitive<T: Real>(m: u32, zeta: Cx<T>, wbar: Cx<T>, c: &AnnulusConsts<T>) -> Cx<T> {
    let one = Complex::new(T::one(), T::zero());
    let mi = m as i32;
    let fm = factorial::<T>(m);
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut qk = T::one();
    for _ in 0..c.images {
        // (q^k ζ)^{m+1} / (1 − q^k ζ ω̄)^{m+1}
        let a = zeta * qk;
        acc = acc + cpowi(a / (one - a * wbar), mi + 1);
        qk = qk * c.q;
    }
    // Σ_j (−1)^m [ω̄^{-(m+1)} − (ω̄ − q^j/ζ)^{-(m+1)}], written through ε = q^j/(ζ ω̄) as
    // −(−1)^m ω̄^{-(m+1)} (a^{m+1} − 1), a = 1/(1 − ε), a^p − 1 = (a − 1) Σ_{i<p} a^i.
    let winv = cpowi(wbar, -(mi + 1));
    let sign = if m.is_multiple_of(2) { T::one() } else { -T::one() };
    let mut jsum = Complex::new(T::zero(), T::zero());
    let mut qj = c.q;
    let zw = zeta * wbar;
    for _ in 0..c.images {
        let eps = zw.inv() * qj;
        let a = (one - eps).inv();
        let mut geo = Complex::new(T::zero(), T::zero());
        let mut p = one;
        for _ in 0..=m {
            geo = geo + p;
            p = p * a;
        }
        jsum = jsum + (a - one) * geo;
        qj = qj * c.q;
    }
    let series = (acc - jsum * winv * sign) * (fm / T::PI());
    let log = zeta.ln() * winv * (sign * fm / (T::lit(2.0) * T::PI() * c.log_inv_r));
    series + log
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    /// Laurent series Σ_n ζ^n ω̄^n / N_n with N_n = π(1 − r^{2n+2})/(n+1), N_{−1} = 2π ln(1/r).
    fn laurent(r: f64, z: Cx<f64>, w: Cx<f64>, terms: i32) -> Cx<f64> {
        let x = z * w.conj();
        let mut s = Complex::new(0.0, 0.0);
        for n in -terms..=terms {
            let norm = if n == -1 {
                2.0 * PI * (1.0 / r).ln()
            } else {
                PI * (1.0 - r.powi(2 * n + 2)) / (n as f64 + 1.0)
            };
            s += x.powi(n) / norm;
        }
        s
    }

    #[test]
    fn annulus_matches_laurent_oracle() {
        let r = 0.5;
        let k = AnnulusConsts::new(r, 4);
        for (z, w) in [
            (c(0.7, 0.1), c(-0.3, 0.6)),
            (c(0.55, 0.0), c(0.0, 0.9)),
            (c(-0.8, -0.5), c(0.6, -0.2)),
        ] {
            let a = annulus_deriv(0, &z, w.conj(), &k);
            let b = laurent(r, z, w, 300);
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn primitive_differentiates_back() {
        let r = 0.5;
        let k = AnnulusConsts::new(r, 4);
        let w = c(0.2, 0.62);
        for m in 0..3 {
            let z = c(0.7, 0.3);
            let h = 1e-5;
            let d = (annulus_primitive(m, z + h, w.conj(), &k) - annulus_primitive(m, z - h, w.conj(), &k))
                / (2.0 * h);
            let want = annulus_deriv(m, &z, w.conj(), &k);
            assert!((d - want).norm() < 1e-7 * want.norm().max(1.0));
            let dd = (disc_primitive(m, z + h, w.conj()) - disc_primitive(m, z - h, w.conj())) / (2.0 * h);
            let want = disc_deriv(m, &z, w.conj());
            assert!((dd - want).norm() < 1e-7 * want.norm().max(1.0));
        }
    }
}
