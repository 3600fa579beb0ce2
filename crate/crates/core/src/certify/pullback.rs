//! ∫_{f(G)} h = ∫_G |det Df|² (h∘f) by volume rules on the source.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::battery::BatteryEval;
use crate::construct::{GraphMap, InjectivityReport};
use crate::domains::{Domain, RuleSpec, VolumeRule};
use crate::error::{Error, Result};
use crate::testfn::TestFunction;

type C = Complex<f64>;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PullbackSpec {
    pub base: RuleSpec,
    pub fiber: RuleSpec,
    /// Allowed |I − I_reduced| relative to ∫|h|, where I_reduced uses two thirds of the counts.
    pub check_tol: f64,
}

impl Default for PullbackSpec {
    fn default() -> Self {
        PullbackSpec {
            base: RuleSpec::new(24, 48),
            fiber: RuleSpec::new(48, 112),
            check_tol: 1e-9,
        }
    }
}

fn reduced(s: RuleSpec) -> RuleSpec {
    RuleSpec::new((s.radial * 2 / 3).max(1), (s.angular * 2 / 3).max(1))
}

#[derive(Clone, Debug, Serialize)]
pub struct PullbackValue {
    pub value: C,
    /// ∫ |h| over the image, the scale of relative residuals.
    pub abs_integral: f64,
    /// |I − I_reduced|.
    pub error_estimate: f64,
}

fn finish(full: Vec<C>, red: Vec<C>, tol: f64) -> Result<Vec<PullbackValue>> {
    let m = full.len() / 2;
    let out: Vec<PullbackValue> = (0..m)
        .map(|k| PullbackValue {
            value: full[2 * k],
            abs_integral: full[2 * k + 1].re,
            error_estimate: (full[2 * k] - red[2 * k]).norm(),
        })
        .collect();
    for (k, v) in out.iter().enumerate() {
        if !(v.error_estimate <= tol * v.abs_integral.max(f64::MIN_POSITIVE)) {
            return Err(Error::RuleOrder(format!(
                "battery entry {k}: reduced-rule change {:.3e} exceeds {:.1e} of ∫|h| = {:.3e}",
                v.error_estimate, tol, v.abs_integral
            )));
        }
    }
    Ok(out)
}

fn accumulate(ev: &BatteryEval, z: &[C], w: f64, scratch: &mut [C], buf: &mut [C], acc: &mut [C]) {
    ev.eval_with(z, scratch, buf);
    for (k, h) in buf.iter().enumerate() {
        acc[2 * k] += h * w;
        acc[2 * k + 1] += C::new(h.norm() * w, 0.0);
    }
}

fn rule_integral<F>(rule: &VolumeRule<f64>, fns: &[TestFunction<f64>], map: F) -> Vec<C>
where
    F: Fn(&[C]) -> (Vec<C>, f64) + Sync,
{
    let ev = BatteryEval::new(fns);
    rule.integrate_with(
        2 * fns.len(),
        || (vec![C::new(0.0, 0.0); fns.len()], ev.scratch()),
        |z, w, (buf, scratch), acc| {
            let (y, j) = map(z);
            accumulate(&ev, &y, w * j, scratch, buf, acc);
        },
    )
}

/// ∫_D h for every h, by the domain's own rule (the pullback under the identity).
pub fn pullback_identity(d: &Domain<f64>, fns: &[TestFunction<f64>], spec: RuleSpec, check_tol: f64) -> Result<Vec<PullbackValue>> {
    pullback_rule(d, fns, spec, check_tol, |z| (z.to_vec(), 1.0))
}

/// ∫_{F(D)} h = ∫_D |J_F|² h∘F, where `map` returns (F(z), |J_F(z)|²).
pub fn pullback_rule<F>(d: &Domain<f64>, fns: &[TestFunction<f64>], spec: RuleSpec, check_tol: f64, map: F) -> Result<Vec<PullbackValue>>
where
    F: Fn(&[C]) -> (Vec<C>, f64) + Sync,
{
    let full = rule_integral(&d.volume_rule_spec(spec)?, fns, &map);
    let red = rule_integral(&d.volume_rule_spec(reduced(spec))?, fns, &map);
    finish(full, red, check_tol)
}

fn graph_integral(graph: &GraphMap, fns: &[TestFunction<f64>], base: RuleSpec, fiber: RuleSpec) -> Result<Vec<C>> {
    let d = graph.domain();
    let fr = d.fibered_rule(base, fiber)?;
    let n = d.dim();
    let fnodes = fr.fiber.nodes();
    let fc = fr.fiber_center();
    let table = if fr.is_unscaled() {
        graph.fiber_table(&fnodes.iter().map(|(p, _)| p[0]).collect::<Vec<_>>())
    } else {
        None
    };
    let ev = BatteryEval::new(fns);
    let width = 2 * fns.len();
    let parts: Vec<Vec<C>> = (0..fr.base.modulus_count())
        .into_par_iter()
        .map(|m| -> Result<Vec<C>> {
            let s = fr.scale[m];
            let mut acc = vec![C::new(0.0, 0.0); width];
            let mut buf = vec![C::new(0.0, 0.0); fns.len()];
            let mut scratch = ev.scratch();
            let mut z = vec![C::new(0.0, 0.0); n];
            let pts: Vec<C> = fnodes.iter().map(|(p, _)| fc + (p[0] - fc) * s).collect();
            for (zp, wb) in fr.base.torus_points(m) {
                let slice = graph.slice(&zp)?;
                let vals = match &table {
                    Some(t) => slice.eval_table(t)?,
                    None => pts.iter().map(|&l| Ok((slice.g(l)?, slice.v(l)))).collect::<Result<Vec<_>>>()?,
                };
                z[..n - 1].copy_from_slice(&zp);
                for ((g, v), (_, wf)) in vals.iter().zip(&fnodes) {
                    z[n - 1] = *g;
                    accumulate(&ev, &z, wb * wf * s * s * v.norm_sqr(), &mut scratch, &mut buf, &mut acc);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![C::new(0.0, 0.0); width];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(total)
}

/// Battery integrals over the image f(G) of a certified graph map.
pub fn pullback_graph(
    graph: &GraphMap,
    cert: &InjectivityReport,
    fns: &[TestFunction<f64>],
    spec: &PullbackSpec,
) -> Result<Vec<PullbackValue>> {
    if !cert.certified() {
        return Err(Error::Uncertified(format!("injectivity certificate is {:?}", cert.status)));
    }
    let full = graph_integral(graph, fns, spec.base, spec.fiber)?;
    let red = graph_integral(graph, fns, reduced(spec.base), reduced(spec.fiber))?;
    finish(full, red, spec.check_tol)
}

/// Single-function form of [`pullback_graph`].
pub fn pullback_integral(graph: &GraphMap, cert: &InjectivityReport, h: &TestFunction<f64>, spec: &PullbackSpec) -> Result<C> {
    Ok(pullback_graph(graph, cert, std::slice::from_ref(h), spec)?[0].value)
}
