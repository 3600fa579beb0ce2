//! One-dimensional quadrature primitives: Gauss–Legendre, periodic trapezoid, and an adaptive
//! Gauss–Legendre driver for vector-valued integrands.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::from_usize_(n);
        let half = T::lit(0.5);
        for i in 0..n.div_ceil(2) {
            let mut x = (T::PI() * (T::from_usize_(i + 1) - T::lit(0.25)) / (nf + half)).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    let (_, d) = legendre(n, x);
                    dp = d;
                    break;
                }
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on_interval(&self, a: T, b: T) -> (Vec<T>, Vec<T>) {
        let h = (b - a) * T::lit(0.5);
        let m = (b + a) * T::lit(0.5);
        (
            self.nodes.iter().map(|&x| m + h * x).collect(),
            self.weights.iter().map(|&w| w * h).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Equispaced angles 2πk/m, k = 0..m.
pub fn trapezoid_angles<T: Real>(m: usize) -> Vec<T> {
    let step = T::TAU() / T::from_usize_(m);
    (0..m).map(|k| step * T::from_usize_(k)).collect()
}

/// Adaptive Gauss–Legendre on [0, 1] for integrands with `width` complex components.
///
/// Bisects until the 16-point estimate and the sum over both halves agree to `tol`
/// (absolute, in the max-norm over components).
pub fn adaptive_gl<T, F>(f: &F, width: usize, tol: T, max_depth: u32) -> Result<Vec<Cx<T>>>
where
    T: Real,
    F: Fn(T) -> Vec<Cx<T>>,
{
    let gl = GaussLegendre::<T>::new(16);
    let whole = gl_panel(f, &gl, T::zero(), T::one(), width);
    let mut evals = 0usize;
    adapt(f, &gl, T::zero(), T::one(), whole, width, tol, max_depth, &mut evals)
}

fn gl_panel<T: Real, F: Fn(T) -> Vec<Cx<T>>>(
    f: &F,
    gl: &GaussLegendre<T>,
    a: T,
    b: T,
    width: usize,
) -> Vec<Cx<T>> {
    let (xs, ws) = gl.on_interval(a, b);
    let mut acc = vec![Complex::new(T::zero(), T::zero()); width];
    for (x, w) in xs.into_iter().zip(ws) {
        let v = f(x);
        for (a, b) in acc.iter_mut().zip(v) {
            *a = *a + b * w;
        }
    }
    acc
}

#[allow(clippy::too_many_arguments)]
fn adapt<T: Real, F: Fn(T) -> Vec<Cx<T>>>(
    f: &F,
    gl: &GaussLegendre<T>,
    a: T,
    b: T,
    whole: Vec<Cx<T>>,
    width: usize,
    tol: T,
    depth: u32,
    evals: &mut usize,
) -> Result<Vec<Cx<T>>> {
    let m = (a + b) * T::lit(0.5);
    let left = gl_panel(f, gl, a, m, width);
    let right = gl_panel(f, gl, m, b, width);
    *evals += 2;
    let err = whole
        .iter()
        .zip(left.iter().zip(right.iter()))
        .fold(T::zero(), |e, (w, (l, r))| e.max((*l + *r - *w).norm()));
    if err <= tol {
        return Ok(left.into_iter().zip(right).map(|(l, r)| l + r).collect());
    }
    if depth == 0 {
        return Err(Error::NonConvergence(format!(
            "adaptive Gauss-Legendre stalled with local error {err:?}"
        )));
    }
    let half = tol * T::lit(0.5);
    let l = adapt(f, gl, a, m, left, width, half, depth - 1, evals)?;
    let r = adapt(f, gl, m, b, right, width, half, depth - 1, evals)?;
    Ok(l.into_iter().zip(r).map(|(l, r)| l + r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let gl = GaussLegendre::<f64>::new(10);
        // ∫_{-1}^{1} x^18 = 2/19
        let s: f64 = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| w * x.powi(18))
            .sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-15);
        let total: f64 = gl.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_large_order_is_accurate() {
        let gl = GaussLegendre::<f64>::new(128);
        let s: f64 = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| w * (3.0 * x).cos())
            .sum();
        assert!((s - 2.0 * 3f64.sin() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |t: f64| vec![Complex::new(1.0 / (1e-3 + (t - 0.3).powi(2)), 0.0)];
        let v = adaptive_gl(&f, 1, 1e-12, 40).unwrap();
        let s = 1e-3f64.sqrt();
        let want = ((0.7 / s).atan() + (0.3 / s).atan()) / s;
        assert!((v[0].re - want).abs() < 1e-10);
    }
}
