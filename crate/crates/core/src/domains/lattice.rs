use num_complex::Complex;

use super::Domain;
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// `count` equispaced points on a circle, rotated by `phase`.
pub fn ring<T: Real>(center: Cx<T>, radius: T, count: usize, phase: T) -> Vec<Cx<T>> {
    let h = T::TAU() / T::from_usize_(count.max(1));
    (0..count)
        .map(|k| center + Complex::from_polar(radius, phase + h * T::from_usize_(k)))
        .collect()
}

/// Polar test lattice with `n_r` radii and `n_theta` angles inside a planar domain shrunk by
/// the relative margin `delta`; products of planar factors give the tensor lattice.
pub fn polar_lattice<T: Real>(
    d: &Domain<T>,
    delta: T,
    n_r: usize,
    n_theta: usize,
) -> Result<Vec<Vec<Cx<T>>>> {
    match d {
        Domain::Disc { center, radius } => {
            let rmax = *radius * (T::one() - delta);
            let mut out = vec![vec![*center]];
            for i in 1..=n_r {
                let rho = rmax * T::from_usize_(i) / T::from_usize_(n_r);
                out.extend(ring(*center, rho, n_theta, T::zero()).into_iter().map(|z| vec![z]));
            }
            Ok(out)
        }
        Domain::Annulus {
            center,
            inner,
            outer,
        } => {
            let lo = *inner * (T::one() + delta);
            let hi = *outer * (T::one() - delta);
            let mut out = Vec::new();
            for i in 0..n_r {
                let t = if n_r == 1 {
                    T::lit(0.5)
                } else {
                    T::from_usize_(i) / T::from_usize_(n_r - 1)
                };
                let rho = lo + (hi - lo) * t;
                out.extend(ring(*center, rho, n_theta, T::zero()).into_iter().map(|z| vec![z]));
            }
            Ok(out)
        }
        Domain::Product { .. } | Domain::Polydisc { .. } => {
            let mut acc: Vec<Vec<Cx<T>>> = vec![vec![]];
            for f in d.factors() {
                let l = polar_lattice(&f, delta, n_r, n_theta)?;
                acc = acc
                    .iter()
                    .flat_map(|a| {
                        l.iter().map(move |b| {
                            let mut v = a.clone();
                            v.extend_from_slice(b);
                            v
                        })
                    })
                    .collect();
            }
            Ok(acc)
        }
        _ => Err(Error::Unsupported(format!(
            "polar lattice for {}",
            d.kind_name()
        ))),
    }
}
