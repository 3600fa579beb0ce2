//! Symmetry and reproducing-property suite for the closed-form and image-sum kernels.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{KernelFunction, DEFAULT_MARGIN};
use crate::certify::BatteryEval;
use crate::diff::cauchy_derivative;
use crate::domains::{Domain, MultiIndex};
use crate::error::{Error, Result};
use crate::testfn::TestFunction;

type C = Complex<f64>;

/// Names accepted by [`SelftestOptions::domains`].
pub const SUITE_DOMAINS: [&str; 4] = ["disc", "annulus", "ball", "polydisc"];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestOptions {
    pub domains: Vec<String>,
    /// Relative distance of the reproducing points from the boundary.
    pub margin: f64,
    pub rule_order: usize,
    /// Rule for the derivative probes; None picks 128 on planar domains and 32 otherwise.
    pub derivative_rule_order: Option<usize>,
    pub symmetry_pairs: usize,
    pub reproduce_tol: f64,
    pub derivative_tol: f64,
    /// Relative to max(1, |K|).
    pub symmetry_tol: f64,
    pub seed: u64,
}

/// Reproducing-point margin of the default suite.
pub const DEFAULT_POINT_MARGIN: f64 = 0.3;

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            domains: SUITE_DOMAINS.iter().map(|s| s.to_string()).collect(),
            margin: DEFAULT_POINT_MARGIN,
            rule_order: 64,
            derivative_rule_order: None,
            symmetry_pairs: 100,
            reproduce_tol: 1e-8,
            derivative_tol: 1e-6,
            symmetry_tol: 1e-12,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReproduceEntry {
    pub function: String,
    pub point: Vec<C>,
    pub alpha: Vec<u32>,
    pub inner_product: C,
    pub expected: C,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainSelftest {
    pub name: String,
    pub kernel: String,
    pub functions: usize,
    pub points: usize,
    pub max_symmetry_defect: f64,
    pub max_reproduce_error: f64,
    pub max_derivative_error: f64,
    pub worst: Option<ReproduceEntry>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Degradation {
    pub margin: f64,
    pub baseline_margin: f64,
    pub max_reproduce_error: f64,
    pub baseline_max_reproduce_error: f64,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub options: SelftestOptions,
    pub domains: Vec<DomainSelftest>,
    pub degradation: Option<Degradation>,
    pub pass: bool,
}

pub fn suite_domain(name: &str) -> Result<Domain<f64>> {
    match name {
        "disc" => Ok(Domain::unit_disc()),
        "annulus" => Domain::std_annulus(0.5),
        "ball" => Domain::ball(2),
        "polydisc" => Domain::polydisc(vec![1.0, 1.0]),
        other => Err(Error::InvalidInput(format!(
            "unknown selftest domain `{other}` (expected one of {SUITE_DOMAINS:?})"
        ))),
    }
}

/// Ten holomorphic, square-integrable functions; Laurent monomials replace two of the
/// monomials on annuli.
pub fn suite_functions(d: &Domain<f64>) -> Vec<TestFunction<f64>> {
    let n = d.dim();
    let hole = matches!(d, Domain::Annulus { .. });
    let mono = |e: Vec<i32>| TestFunction::Monomial {
        exps: e,
        center: vec![C::new(0.0, 0.0); n],
        scale: vec![1.0; n],
    };
    let unit = |i: usize, k: i32| {
        let mut e = vec![0; n];
        e[i] = k;
        e
    };
    let last = n - 1;
    let mut out = vec![mono(vec![0; n]), mono(unit(0, 1)), mono(unit(last, 2))];
    if hole {
        out.push(mono(vec![-1]));
        out.push(mono(vec![-2]));
    } else if n == 1 {
        out.push(mono(vec![5]));
        out.push(mono(vec![6]));
    } else {
        let mut e = unit(0, 1);
        e[last] = 2;
        out.push(mono(e));
        let mut e = unit(0, 3);
        e[last] = 3;
        out.push(mono(e));
    }
    for k in 0..2 {
        let lambda = (0..n).map(|i| C::from_polar(0.8, 0.3 + 1.9 * (k * n + i) as f64)).collect();
        out.push(TestFunction::Exp { lambda });
    }
    // Poles at |z_i| = 2.
    let pole = (0..n).map(|i| C::from_polar(0.5, 0.7 + 2.3 * i as f64)).collect();
    out.push(TestFunction::KernelSection { pole, radius: 1.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2 {
        let terms = (0..5)
            .map(|_| {
                let g: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
                (MultiIndex(g), C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        out.push(TestFunction::Poly { terms });
    }
    out.truncate(10);
    out
}

/// Point at depth t ∈ [0, 1] toward the boundary of the domain shrunk by `margin`.
fn depth_point(d: &Domain<f64>, t: f64, margin: f64, phase: f64) -> Vec<C> {
    let s = 1.0 - margin;
    match d {
        Domain::Disc { center, radius } => vec![center + C::from_polar(t * radius * s, phase)],
        Domain::Annulus { center, inner, outer } => {
            // From the core circle √(r R), where both boundaries are equally far in ratio.
            let core = (inner * outer).sqrt();
            let hi = (outer * s).max(core);
            vec![center + C::from_polar(core * (hi / core).powf(t), phase)]
        }
        Domain::Ball { dim } => {
            let r = t * s / (*dim as f64).sqrt();
            (0..*dim).map(|i| C::from_polar(r, phase + 1.3 * i as f64)).collect()
        }
        _ => d
            .factors()
            .iter()
            .enumerate()
            .flat_map(|(i, f)| depth_point(f, t, margin, phase + 1.3 * i as f64))
            .collect(),
    }
}

fn random_point(d: &Domain<f64>, rng: &mut ChaCha8Rng, margin: f64) -> Vec<C> {
    let n = d.dim();
    let reach: Vec<f64> = match d {
        Domain::Ball { .. } => vec![1.0; n],
        _ => d.factors().iter().map(|f| f.planar_affine().map_or(1.0, |(c, r)| c.norm() + r)).collect(),
    };
    loop {
        let z: Vec<C> = reach
            .iter()
            .map(|&r| C::new(rng.gen_range(-r..r), rng.gen_range(-r..r)))
            .collect();
        if d.contains_with_margin(&z, margin).unwrap_or(false) {
            return z;
        }
    }
}

/// ∂^α h(a) by nested Cauchy integrals on circles of radius `rho`.
fn cauchy_partial(h: &TestFunction<f64>, a: &[C], alpha: &[u32], rho: f64) -> C {
    fn rec(h: &TestFunction<f64>, a: &mut Vec<C>, alpha: &[u32], i: usize, rho: f64) -> C {
        if i == a.len() {
            return h.value(a);
        }
        if alpha[i] == 0 {
            return rec(h, a, alpha, i + 1, rho);
        }
        let a0 = a[i];
        let v = cauchy_derivative(
            |zi| {
                let mut b = a.clone();
                b[i] = zi;
                rec(h, &mut b, alpha, i + 1, rho)
            },
            a0,
            alpha[i],
            rho,
            32,
        );
        a[i] = a0;
        v
    }
    rec(h, &mut a.to_vec(), alpha, 0, rho)
}

fn run_domain(name: &str, opts: &SelftestOptions) -> Result<DomainSelftest> {
    let d = suite_domain(name)?;
    let n = d.dim();
    let k = KernelFunction::new(d.clone())?;
    let fns = suite_functions(&d);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sym_margin = opts.margin.min(DEFAULT_MARGIN);
    let mut max_sym: f64 = 0.0;
    for _ in 0..opts.symmetry_pairs {
        let z = random_point(&d, &mut rng, sym_margin);
        let w = random_point(&d, &mut rng, sym_margin);
        let a = k.eval_raw(&vec![0; n], &z, &w);
        let b = k.eval_raw(&vec![0; n], &w, &z);
        max_sym = max_sym.max((a - b.conj()).norm() / a.norm().max(1.0));
    }

    let m = opts.margin.max(1e-3);
    let points: Vec<Vec<C>> = [0.3, 0.7, 1.0]
        .iter()
        .enumerate()
        .map(|(i, &t)| depth_point(&d, t, m, 0.4 + 2.1 * i as f64))
        .collect();
    let nf = fns.len();
    let ev = BatteryEval::new(&fns);
    // (point, α) probes integrated against every function on one rule.
    let integrate = |order: usize, probes: &[(usize, Vec<u32>)]| -> Result<Vec<C>> {
        let rule = d.volume_rule(order)?;
        Ok(rule.integrate_with(
            nf * probes.len(),
            || (vec![C::new(0.0, 0.0); nf], ev.scratch()),
            |z, w, (hv, scratch), acc| {
                ev.eval_with(z, scratch, hv);
                for (j, (p, alpha)) in probes.iter().enumerate() {
                    let kv = k.eval_raw(alpha, z, &points[*p]).conj() * w;
                    for (f, h) in hv.iter().enumerate() {
                        acc[j * nf + f] += h * kv;
                    }
                }
            },
        ))
    };
    let plain: Vec<(usize, Vec<u32>)> = (0..points.len()).map(|p| (p, vec![0; n])).collect();
    let derivs: Vec<(usize, Vec<u32>)> = MultiIndex::all_up_to(n, 2).into_iter().skip(1).map(|g| (0, g.0)).collect();
    let dorder = opts.derivative_rule_order.unwrap_or(if n == 1 { 128 } else { 32 });
    let mut ip = integrate(opts.rule_order, &plain)?;
    ip.extend(integrate(dorder, &derivs)?);
    let probes: Vec<(usize, Vec<u32>)> = plain.into_iter().chain(derivs).collect();
    let rho = 0.05 * m.min(0.5);
    let mut entries = Vec::new();
    for (j, (p, alpha)) in probes.iter().enumerate() {
        for (f, h) in fns.iter().enumerate() {
            let expected = if alpha.iter().all(|&x| x == 0) {
                h.value(&points[*p])
            } else {
                cauchy_partial(h, &points[*p], alpha, rho)
            };
            let v = ip[j * nf + f];
            entries.push(ReproduceEntry {
                function: h.label(),
                point: points[*p].clone(),
                alpha: alpha.clone(),
                inner_product: v,
                expected,
                error: (v - expected).norm(),
            });
        }
    }
    let is_plain = |e: &ReproduceEntry| e.alpha.iter().all(|&x| x == 0);
    let max_rep = entries.iter().filter(|e| is_plain(e)).map(|e| e.error).fold(0.0, f64::max);
    let max_der = entries.iter().filter(|e| !is_plain(e)).map(|e| e.error).fold(0.0, f64::max);
    let worst = entries
        .iter()
        .filter(|e| is_plain(e))
        .max_by(|a, b| a.error.total_cmp(&b.error))
        .cloned();
    Ok(DomainSelftest {
        name: name.to_string(),
        kernel: k.descriptor().kind,
        functions: nf,
        points: points.len(),
        max_symmetry_defect: max_sym,
        max_reproduce_error: max_rep,
        max_derivative_error: max_der,
        worst,
        pass: max_sym <= opts.symmetry_tol && max_rep <= opts.reproduce_tol && max_der <= opts.derivative_tol,
    })
}

/// Runs the suite; failed checks are report content, invalid options are errors.
pub fn kernels_selftest(opts: &SelftestOptions) -> Result<SelftestReport> {
    if opts.domains.is_empty() {
        return Err(Error::InvalidInput("empty selftest domain selection".into()));
    }
    if !(0.0..1.0).contains(&opts.margin) {
        return Err(Error::InvalidInput(format!("margin {} outside [0, 1)", opts.margin)));
    }
    for name in &opts.domains {
        suite_domain(name)?;
    }
    let domains = opts
        .domains
        .iter()
        .map(|name| run_domain(name, opts))
        .collect::<Result<Vec<_>>>()?;
    let degradation = if opts.margin < DEFAULT_POINT_MARGIN {
        let base = SelftestOptions {
            margin: DEFAULT_POINT_MARGIN,
            symmetry_pairs: 0,
            ..opts.clone()
        };
        let baseline = opts
            .domains
            .iter()
            .map(|name| run_domain(name, &base))
            .collect::<Result<Vec<_>>>()?;
        let worst = domains.iter().map(|d| d.max_reproduce_error).fold(0.0, f64::max);
        let base_worst = baseline.iter().map(|d| d.max_reproduce_error).fold(0.0, f64::max);
        Some(Degradation {
            margin: opts.margin,
            baseline_margin: DEFAULT_POINT_MARGIN,
            max_reproduce_error: worst,
            baseline_max_reproduce_error: base_worst,
            note: format!(
                "reproducing points within {} of the boundary: the order-{} rule under-resolves the near-singular kernel, error grows from {:.2e} to {:.2e}",
                opts.margin, opts.rule_order, base_worst, worst
            ),
        })
    } else {
        None
    };
    Ok(SelftestReport {
        pass: domains.iter().all(|d| d.pass),
        options: opts.clone(),
        domains,
        degradation,
    })
}
