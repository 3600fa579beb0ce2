//! Preimages f⁻¹(B) of the unit ball and Monte Carlo integration over them.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::automorphism::{Family, PolyAutomorphism};
use crate::certify::BatteryEval;
use crate::error::{Error, Result};
use crate::span::horner;
use crate::testfn::TestFunction;

type C = Complex<f64>;

/// Samples drawn from one generator stream.
const CHUNK: usize = 1 << 16;
/// Ball points mapped by f⁻¹ when testing the bounding box.
const BOX_PROBES: usize = 4096;
/// Relative padding of the bounding box.
const BOX_PAD: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct PreimageDomain {
    map: PolyAutomorphism,
}

impl PreimageDomain {
    pub fn new(map: PolyAutomorphism) -> Self {
        PreimageDomain { map }
    }

    pub fn map(&self) -> &PolyAutomorphism {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// |f(z)|² written out per family; z belongs to the domain iff this is below 1.
    pub fn membership_value(&self, z: &[C]) -> f64 {
        match self.map.family() {
            Family::Henon { p } => {
                let (a, b) = (z[0], z[1]);
                let pb = horner(p, b);
                a.norm_sqr() + b.norm_sqr() + pb.norm_sqr() - 2.0 * (pb * a.conj()).re
            }
            Family::Shiftlike { q } => {
                let q3 = horner(q, z[2]);
                z[0].norm_sqr() + z[1].norm_sqr() + z[2].norm_sqr() + q3.norm_sqr() + 2.0 * (z[0] * q3.conj()).re
            }
            Family::General => self.direct_value(z),
        }
    }

    /// Σ |f_i(z)|² by direct evaluation.
    pub fn direct_value(&self, z: &[C]) -> f64 {
        self.map.apply(z).iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn contains(&self, z: &[C]) -> bool {
        self.membership_value(z) < 1.0
    }

    /// Shift-like only: the membership test with |z₃|³ in place of |z₃|².
    fn cubic_variant(&self, z: &[C]) -> Option<bool> {
        match self.map.family() {
            Family::Shiftlike { q } => {
                let q3 = horner(q, z[2]);
                let v = z[0].norm_sqr() + z[1].norm_sqr() + z[2].norm().powi(3) + q3.norm_sqr()
                    + 2.0 * (z[0] * q3.conj()).re;
                Some(v < 1.0)
            }
            _ => None,
        }
    }

    /// Half-widths R_i with f⁻¹(B) ⊂ Π {|Re z_i|, |Im z_i| ≤ R_i}, from coefficient bounds of f⁻¹
    /// on the unit polydisc, padded.
    pub fn coefficient_box(&self) -> Vec<f64> {
        let n = self.dim();
        self.map
            .inverse_components()
            .iter()
            .map(|p| (p.bound_on_polydisc(&vec![1.0; n]) * (1.0 + BOX_PAD)).max(1e-3))
            .collect()
    }

    /// Maps random ball points by f⁻¹ and widens any half-width they exceed; returns the
    /// number of widenings.
    pub fn probe_box(&self, half: &mut [f64], seed: u64) -> usize {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0c5);
        let mut widened = 0;
        for _ in 0..BOX_PROBES {
            let y = sample_ball(&mut rng, n);
            let x = self.map.apply_inverse(&y);
            for (h, xi) in half.iter_mut().zip(&x) {
                let m = xi.re.abs().max(xi.im.abs());
                if m > *h {
                    *h = m * (1.0 + BOX_PAD);
                    widened += 1;
                }
            }
        }
        widened
    }
}

/// Uniform point of the unit ball in ℂⁿ.
fn sample_ball(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    loop {
        let y: Vec<C> = (0..n)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        if y.iter().map(|v| v.norm_sqr()).sum::<f64>() < 1.0 {
            return y;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McEntry {
    pub label: String,
    pub estimate: C,
    /// √(Var Re + Var Im) of the estimator.
    pub std_error: f64,
    pub expected: C,
    /// |estimate − expected| / std_error.
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub samples: usize,
    pub seed: u64,
    pub half_widths: Vec<f64>,
    pub box_widenings: usize,
    pub accepted: usize,
    pub volume_estimate: f64,
    pub entries: Vec<McEntry>,
    pub max_deviation: f64,
    pub sigma_limit: f64,
    /// Shift-like maps: fraction of box samples on which the |z₃|³ variant disagrees.
    pub cubic_variant_disagreement: Option<f64>,
    pub pass: bool,
}

#[derive(Clone)]
struct Acc {
    sum: Vec<C>,
    sq: Vec<f64>,
    accepted: usize,
    disagree: usize,
}

impl Acc {
    fn new(m: usize) -> Self {
        Acc {
            sum: vec![C::new(0.0, 0.0); m],
            sq: vec![0.0; m],
            accepted: 0,
            disagree: 0,
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.sum.iter_mut().zip(o.sum) {
            *a += b;
        }
        for (a, b) in self.sq.iter_mut().zip(o.sq) {
            *a += b;
        }
        self.accepted += o.accepted;
        self.disagree += o.disagree;
        self
    }
}

/// Rejection-sampling estimates of ∫_{f⁻¹(B)} h, compared against `expected`.
///
/// Chunk k draws from stream k of a generator seeded with `seed`, so results do not
/// depend on the worker count.
pub fn monte_carlo(
    dom: &PreimageDomain,
    fns: &[TestFunction<f64>],
    expected: &[C],
    samples: usize,
    seed: u64,
    sigma_limit: f64,
) -> Result<McReport> {
    if samples == 0 || expected.len() != fns.len() {
        return Err(Error::InvalidInput("monte carlo needs samples and one expected value per function".into()));
    }
    let n = dom.dim();
    let mut half = dom.coefficient_box();
    let widenings = dom.probe_box(&mut half, seed);
    let ev = BatteryEval::new(fns);
    let chunks = samples.div_ceil(CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = CHUNK.min(samples - k * CHUNK);
            let mut acc = Acc::new(fns.len());
            let mut buf = vec![C::new(0.0, 0.0); fns.len()];
            let mut scratch = ev.scratch();
            let mut z = vec![C::new(0.0, 0.0); n];
            for _ in 0..count {
                for (zi, h) in z.iter_mut().zip(&half) {
                    *zi = C::new(rng.gen_range(-h..*h), rng.gen_range(-h..*h));
                }
                let inside = dom.contains(&z);
                if dom.cubic_variant(&z).is_some_and(|c| c != inside) {
                    acc.disagree += 1;
                }
                if !inside {
                    continue;
                }
                acc.accepted += 1;
                ev.eval_with(&z, &mut scratch, &mut buf);
                for (k, h) in buf.iter().enumerate() {
                    acc.sum[k] += h;
                    acc.sq[k] += h.norm_sqr();
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Acc::new(fns.len()), Acc::merge);
    let vbox: f64 = half.iter().map(|h| 4.0 * h * h).product();
    let nf = samples as f64;
    let entries: Vec<McEntry> = fns
        .iter()
        .zip(expected)
        .enumerate()
        .map(|(k, (h, &e))| {
            let mean = acc.sum[k] / nf;
            // E|X − EX|² summed over real and imaginary parts.
            let var = (acc.sq[k] / nf - mean.norm_sqr()).max(0.0);
            let se = vbox * (var / nf).sqrt();
            let est = mean * vbox;
            let dev = (est - e).norm();
            McEntry {
                label: h.label(),
                estimate: est,
                std_error: se,
                expected: e,
                deviation: if se > 0.0 {
                    dev / se
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect();
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    let shiftlike = matches!(dom.map().family(), Family::Shiftlike { .. });
    Ok(McReport {
        samples,
        seed,
        half_widths: half,
        box_widenings: widenings,
        accepted: acc.accepted,
        volume_estimate: vbox * acc.accepted as f64 / nf,
        entries,
        max_deviation,
        sigma_limit,
        cubic_variant_disagreement: shiftlike.then(|| acc.disagree as f64 / nf),
        pass: max_deviation <= sigma_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onepoint::{henon, shiftlike};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn expanded_membership_matches_direct() {
        let p = [c(0.1, 0.0), c(0.0, 0.2), c(1.0, 0.0), c(0.0, 0.0), c(-0.3, 0.1)];
        let doms = [
            PreimageDomain::new(henon(&p).unwrap()),
            PreimageDomain::new(shiftlike(&p[..3]).unwrap()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in &doms {
            for _ in 0..200 {
                let z: Vec<C> = (0..d.dim()).map(|_| c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect();
                let (a, b) = (d.membership_value(&z), d.direct_value(&z));
                assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn box_contains_preimage() {
        let d = PreimageDomain::new(henon(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap());
        let mut half = d.coefficient_box();
        assert_eq!(half, vec![2.2, 1.1]);
        assert_eq!(d.probe_box(&mut half, 1), 0);
        // A box that is too small is widened.
        let mut small = vec![0.5, 0.5];
        assert!(d.probe_box(&mut small, 1) > 0);
        assert!(small[0] > 1.0 && small[1] > 0.9);
    }
}
