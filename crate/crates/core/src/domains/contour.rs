use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Counterclockwise circle sampled at `samples` equispaced points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour<T> {
    pub center: Cx<T>,
    pub radius: T,
    pub samples: usize,
}

impl<T: Real> Contour<T> {
    pub fn new(center: Cx<T>, radius: T, samples: usize) -> Result<Self> {
        if samples < 16 || !samples.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "contour sample count must be even and at least 16, got {samples}"
            )));
        }
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(Error::InvalidInput("contour radius must be positive".into()));
        }
        Ok(Contour {
            center,
            radius,
            samples,
        })
    }

    pub fn with_samples(&self, samples: usize) -> Result<Self> {
        Self::new(self.center, self.radius, samples)
    }

    /// Sample points and the trapezoid weights of dλ at each.
    pub fn nodes(&self) -> Vec<(Cx<T>, Cx<T>)> {
        let n = self.samples;
        let h = T::TAU() / T::from_usize_(n);
        (0..n)
            .map(|k| {
                let e = Complex::from_polar(T::one(), h * T::from_usize_(k));
                let p = self.center + e * self.radius;
                let dl = Complex::new(T::zero(), self.radius * h) * e;
                (p, dl)
            })
            .collect()
    }

    pub fn points(&self) -> Vec<Cx<T>> {
        self.nodes().into_iter().map(|(p, _)| p).collect()
    }

    /// Trapezoid approximation of ∮ f(λ) dλ.
    pub fn integrate<F: Fn(Cx<T>) -> Cx<T>>(&self, f: F) -> Cx<T> {
        self.nodes()
            .into_iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (p, dl)| acc + f(p) * dl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_of_inverse() {
        let c = Contour::new(Complex::new(0.0, 0.0), 0.75, 64).unwrap();
        let v = c.integrate(|z| z.inv());
        assert!((v - Complex::new(0.0, std::f64::consts::TAU)).norm() < 1e-13);
        let w = c.integrate(|z| z * z);
        assert!(w.norm() < 1e-14);
    }

    #[test]
    fn rejects_odd_or_small_counts() {
        assert!(Contour::new(Complex::new(0.0, 0.0), 1.0, 15).is_err());
        assert!(Contour::new(Complex::new(0.0, 0.0), 1.0, 17).is_err());
    }
}
