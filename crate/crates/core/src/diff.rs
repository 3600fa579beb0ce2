//! Contour-integral differentiation, used as an independent derivative oracle.

use num_complex::Complex;

use crate::scalar::{factorial, Cx, Real};

/// f^{(k)}(z0) = k!/(N ρ^k) Σ_j f(z0 + ρ e^{iθ_j}) e^{−ikθ_j} (trapezoid on the Cauchy integral).
pub fn cauchy_derivative<T, F>(f: F, z0: Cx<T>, order: u32, radius: T, samples: usize) -> Cx<T>
where
    T: Real,
    F: Fn(Cx<T>) -> Cx<T>,
{
    let h = T::TAU() / T::from_usize_(samples);
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..samples {
        let th = h * T::from_usize_(j);
        let e = Complex::from_polar(T::one(), th);
        let back = Complex::from_polar(T::one(), -th * T::lit(order as f64));
        acc = acc + f(z0 + e * radius) * back;
    }
    acc * (factorial::<T>(order) / (T::from_usize_(samples) * radius.powi(order as i32)))
}

/// ∂^k/∂w̄^k of a function of w that is antiholomorphic, through s ↦ F(conj(conj(w) + s)).
pub fn conj_derivative<T, F>(f: F, w: Cx<T>, order: u32, radius: T, samples: usize) -> Cx<T>
where
    T: Real,
    F: Fn(Cx<T>) -> Cx<T>,
{
    cauchy_derivative(|s| f((w.conj() + s).conj()), Complex::new(T::zero(), T::zero()), order, radius, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_derivatives() {
        let z0 = Complex::new(0.3, -0.2);
        for k in 0..4 {
            let d = cauchy_derivative(|z: Cx<f64>| z.exp(), z0, k, 0.1, 32);
            assert!((d - z0.exp()).norm() < 1e-11);
        }
    }

    #[test]
    fn conjugate_direction() {
        // F(w) = conj(w)^2 → ∂_{w̄} F = 2 conj(w)
        let w = Complex::new(0.4, 0.7);
        let d = conj_derivative(|w: Cx<f64>| w.conj() * w.conj(), w, 1, 0.1, 16);
        assert!((d - w.conj() * 2.0).norm() < 1e-13);
    }
}
