//! Versioned test-function batteries and their batched evaluation.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domains::{Domain, MultiIndex};
use crate::testfn::TestFunction;

type C = Complex<f64>;

pub const BATTERY_VERSION: &str = "battery-v1";

#[derive(Clone, Debug, Serialize)]
pub struct Battery {
    pub version: String,
    pub functions: Vec<TestFunction<f64>>,
}

/// Center and outer radius of each coordinate's projection, plus whether the coordinate
/// carries a hole around its center (annulus factor).
pub fn coordinate_frames(d: &Domain<f64>) -> Vec<(C, f64, bool)> {
    match d {
        Domain::Ball { dim } => vec![(C::new(0.0, 0.0), 1.0, false); *dim],
        Domain::Ellipsoid { exponents } => vec![(C::new(0.0, 0.0), 1.0, false); exponents.len()],
        Domain::Hartogs { base_radius, profile } => {
            let r = (0..=64)
                .map(|k| crate::domains::hartogs_radius(profile, (base_radius * k as f64 / 64.0).powi(2)))
                .fold(0.0, f64::max);
            vec![(C::new(0.0, 0.0), *base_radius, false), (C::new(0.0, 0.0), r, false)]
        }
        Domain::Disc { center, radius } => vec![(*center, *radius, false)],
        Domain::Annulus { center, outer, .. } => vec![(*center, *outer, true)],
        Domain::Polydisc { .. } | Domain::Product { .. } => d.factors().iter().flat_map(coordinate_frames).collect(),
    }
}

impl Battery {
    /// All monomials z^γ with |γ| ≤ degree.
    pub fn monomials(dim: usize, degree: u32) -> Self {
        Battery {
            version: BATTERY_VERSION.into(),
            functions: MultiIndex::all_up_to(dim, degree)
                .into_iter()
                .map(|g| TestFunction::monomial(&g.0))
                .collect(),
        }
    }

    /// Monomials to degree 6, Laurent monomials around annulus holes, three kernel sections,
    /// three exponentials and five random polynomials (fixed seed).
    pub fn standard(d: &Domain<f64>) -> Self {
        let n = d.dim();
        let frames = coordinate_frames(d);
        let mut b = Self::monomials(n, 6);
        let centers: Vec<C> = frames.iter().map(|f| if f.2 { f.0 } else { C::new(0.0, 0.0) }).collect();
        for (i, f) in frames.iter().enumerate() {
            if !f.2 {
                continue;
            }
            for k in 1..=3 {
                let mut exps = vec![0; n];
                exps[i] = -k;
                b.functions.push(TestFunction::Monomial {
                    exps,
                    center: centers.clone(),
                    scale: vec![1.0; n],
                });
            }
        }
        if frames.iter().all(|f| f.0 == C::new(0.0, 0.0)) {
            // Singular on |z_i| = 2 R_i.
            for k in 0..3 {
                let pole = frames
                    .iter()
                    .enumerate()
                    .map(|(i, f)| C::from_polar(0.5 / f.1, 0.7 + 2.1 * (k + i) as f64))
                    .collect();
                b.functions.push(TestFunction::KernelSection { pole, radius: 1.0 });
            }
        }
        for k in 0..3 {
            let lambda = frames
                .iter()
                .enumerate()
                .map(|(i, f)| C::from_polar(0.8 / f.1, 0.3 + 1.7 * (k * n + i) as f64))
                .collect();
            b.functions.push(TestFunction::Exp { lambda });
        }
        b.functions.extend(random_polys(n, 5));
        b
    }

    /// Monomials to `degree` plus `random` random polynomials (fixed seed).
    pub fn polynomial(dim: usize, degree: u32, random: usize) -> Self {
        let mut b = Self::monomials(dim, degree);
        b.functions.extend(random_polys(dim, random));
        b
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

fn random_polys(n: usize, count: usize) -> Vec<TestFunction<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..count)
        .map(|_| {
            let terms = (0..6)
                .map(|_| {
                    let g: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
                    (MultiIndex(g), C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                })
                .collect();
            TestFunction::Poly { terms }
        })
        .collect()
}

/// Batched evaluation: monomials and polynomials share per-coordinate power tables.
pub struct BatteryEval<'a> {
    fns: &'a [TestFunction<f64>],
    /// Per coordinate: distinct (center, scale) keys with exponent range and table offset.
    keys: Vec<Vec<PowerKey>>,
    plans: Vec<Plan>,
    table_len: usize,
}

#[derive(Clone, Copy)]
struct PowerKey {
    center: C,
    scale: f64,
    lo: i32,
    hi: i32,
    offset: usize,
}

enum Plan {
    /// Table slots, one per coordinate.
    Monomial(Vec<usize>),
    /// (slots, coefficient) per term.
    Poly(Vec<(Vec<usize>, C)>),
    Direct,
}

impl<'a> BatteryEval<'a> {
    pub fn new(fns: &'a [TestFunction<f64>]) -> Self {
        let n = fns.first().map(|f| f.dim()).unwrap_or(0);
        let mut keys: Vec<Vec<PowerKey>> = vec![vec![]; n];
        let mut raw: Vec<Option<Vec<Vec<(usize, i32)>>>> = Vec::with_capacity(fns.len());
        let key_of = |keys: &mut Vec<Vec<PowerKey>>, i: usize, c: C, s: f64, e: i32| {
            let k = match keys[i].iter().position(|k| k.center == c && k.scale == s) {
                Some(k) => k,
                None => {
                    keys[i].push(PowerKey {
                        center: c,
                        scale: s,
                        lo: 0,
                        hi: 0,
                        offset: 0,
                    });
                    keys[i].len() - 1
                }
            };
            keys[i][k].lo = keys[i][k].lo.min(e);
            keys[i][k].hi = keys[i][k].hi.max(e);
            (k, e)
        };
        for f in fns {
            raw.push(match f {
                TestFunction::Monomial { exps, center, scale } => Some(vec![(0..n)
                    .map(|i| key_of(&mut keys, i, center[i], scale[i], exps[i]))
                    .collect()]),
                TestFunction::Poly { terms } => Some(
                    terms
                        .iter()
                        .map(|(g, _)| {
                            (0..n)
                                .map(|i| key_of(&mut keys, i, C::new(0.0, 0.0), 1.0, g.0[i] as i32))
                                .collect()
                        })
                        .collect(),
                ),
                _ => None,
            });
        }
        let mut off = 0;
        for ks in keys.iter_mut() {
            for k in ks.iter_mut() {
                k.offset = off;
                off += (k.hi - k.lo + 1) as usize;
            }
        }
        let slot = |keys: &Vec<Vec<PowerKey>>, i: usize, (k, e): (usize, i32)| {
            let pk = &keys[i][k];
            pk.offset + (e - pk.lo) as usize
        };
        let plans = fns
            .iter()
            .zip(raw)
            .map(|(f, r)| match (f, r) {
                (TestFunction::Monomial { .. }, Some(r)) => {
                    Plan::Monomial(r[0].iter().enumerate().map(|(i, &ke)| slot(&keys, i, ke)).collect())
                }
                (TestFunction::Poly { terms }, Some(r)) => Plan::Poly(
                    r.iter()
                        .zip(terms)
                        .map(|(t, (_, c))| (t.iter().enumerate().map(|(i, &ke)| slot(&keys, i, ke)).collect(), *c))
                        .collect(),
                ),
                _ => Plan::Direct,
            })
            .collect();
        BatteryEval {
            fns,
            keys,
            plans,
            table_len: off,
        }
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    /// Scratch buffer for [`BatteryEval::eval_with`].
    pub fn scratch(&self) -> Vec<C> {
        vec![C::new(0.0, 0.0); self.table_len]
    }

    /// Writes h_k(z) into `out[k]`.
    pub fn eval_into(&self, z: &[C], out: &mut [C]) {
        let mut t = self.scratch();
        self.eval_with(z, &mut t, out);
    }

    pub fn eval_with(&self, z: &[C], t: &mut [C], out: &mut [C]) {
        let one = C::new(1.0, 0.0);
        for (i, ks) in self.keys.iter().enumerate() {
            for k in ks {
                let u = (z[i] - k.center) / k.scale;
                let z0 = k.offset + (-k.lo) as usize;
                t[z0] = one;
                for e in 1..=k.hi as usize {
                    t[z0 + e] = t[z0 + e - 1] * u;
                }
                if k.lo < 0 {
                    let inv = u.inv();
                    for e in 1..=(-k.lo) as usize {
                        t[z0 - e] = t[z0 - e + 1] * inv;
                    }
                }
            }
        }
        for (k, (f, plan)) in self.fns.iter().zip(&self.plans).enumerate() {
            out[k] = match plan {
                Plan::Monomial(slots) => slots.iter().fold(one, |a, &s| a * t[s]),
                Plan::Poly(terms) => terms
                    .iter()
                    .map(|(slots, c)| slots.iter().fold(*c, |a, &s| a * t[s]))
                    .sum(),
                Plan::Direct => f.value(z),
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batched_matches_direct() {
        let d = Domain::product(vec![Domain::unit_disc(), Domain::std_annulus(0.5).unwrap()]).unwrap();
        let b = Battery::standard(&d);
        assert!(b.len() >= 20);
        let ev = BatteryEval::new(&b.functions);
        let z = [C::new(0.3, -0.2), C::new(-0.4, 0.5)];
        let mut out = vec![C::new(0.0, 0.0); b.len()];
        ev.eval_into(&z, &mut out);
        for (f, o) in b.functions.iter().zip(&out) {
            assert!((f.value(&z) - o).norm() <= 1e-14 * (1.0 + o.norm()), "{}", f.label());
        }
    }
}
