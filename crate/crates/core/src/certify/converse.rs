//! Recovering the Jacobian span element from image quadrature data (multiplicity one).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use super::extract::{chain_coefficients, source_jets, QuadratureData};
use crate::construct::GraphMap;
use crate::domains::{polar_lattice, MultiIndex};
use crate::error::{Error, Result};
use crate::span::{SpanElement, SpanTerm};

type C = Complex<f64>;

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructReport {
    /// max |t_rec − t| against the terms of the map's own span element.
    pub coefficient_error: f64,
    /// sup |u_rec − v| on the check grid.
    pub sup_residual: f64,
    pub grid_points: usize,
    /// max |f(b_j) − q_j| after inverting the map at the nodes.
    pub inversion_residual: f64,
}

/// Solves g(q′, b_n) = q_n for b_n by Newton's method from b_n = q_n.
pub fn invert_graph(graph: &GraphMap, q: &[C]) -> Result<Vec<C>> {
    let n = q.len();
    let s = graph.slice(&q[..n - 1])?;
    let mut b = q[n - 1];
    for _ in 0..50 {
        if !s.fiber.contains(&[b])? {
            return Err(Error::OutsideDomain(format!("Newton iterate {b} left the fiber")));
        }
        let r = s.g(b)? - q[n - 1];
        let step = r / s.v(b);
        b -= step;
        if step.norm() <= 1e-15 * (1.0 + b.norm()) {
            let mut out = q.to_vec();
            out[n - 1] = b;
            return Ok(out);
        }
    }
    Err(Error::NonConvergence(format!("inverting the graph map at {q:?}")))
}

/// Inverts the coefficient chain c_{jβ} = Σ_α conj(t_{jα}) α!/β! [δ^α](V Δ^β) node by node.
pub fn reconstruct_jacobian(qd: &QuadratureData, graph: &GraphMap) -> Result<(SpanElement<f64>, ReconstructReport)> {
    let v = graph.v();
    let mut terms = Vec::new();
    let mut inv_res = 0.0f64;
    for nd in &qd.nodes {
        let b = invert_graph(graph, &nd.point)?;
        let idx: Vec<MultiIndex> = nd.coeffs.iter().map(|(k, _)| k.clone()).collect();
        let ord = idx.iter().map(|a| a.order()).max().unwrap_or(0);
        let (vj, delta, q) = source_jets(graph, &b, ord)?;
        inv_res = inv_res.max(q.iter().zip(&nd.point).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
        let m = idx.len();
        let mut a = DMatrix::<C>::zeros(m, m);
        for (col, alpha) in idx.iter().enumerate() {
            for (beta, c) in chain_coefficients(&vj, &delta, &alpha.0) {
                if let Some(row) = idx.iter().position(|x| *x == beta) {
                    a[(row, col)] = c;
                } else if c.norm() > 1e-14 {
                    return Err(Error::Singular(format!("index {beta:?} missing from node data")));
                }
            }
        }
        let rhs = DVector::from_iterator(m, nd.coeffs.iter().map(|(_, c)| *c));
        let x = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("degenerate jet system at a node".into()))?;
        for (alpha, tc) in idx.iter().zip(x.iter()) {
            terms.push(SpanTerm::new(b.clone(), alpha.0.clone(), tc.conj()));
        }
    }
    let rec = SpanElement::new(v.kernel().clone(), terms)?;
    let mut cerr = 0.0f64;
    for t in v.terms() {
        let m = rec
            .terms()
            .iter()
            .filter(|r| r.alpha == t.alpha && r.node.dist(&t.node) <= 1e-8)
            .map(|r| r.coeff)
            .sum::<C>();
        cerr = cerr.max((m - t.coeff).norm());
    }
    let d = graph.domain();
    let base = d.base_domain()?;
    let mut sup = 0.0f64;
    let mut count = 0;
    for zp in polar_lattice(&base, 0.05, 4, 8)? {
        let fiber = d.fiber_domain(&zp)?;
        for p in polar_lattice(&fiber, 0.05, 4, 8)? {
            let mut z = zp.clone();
            z.extend(p);
            sup = sup.max((rec.eval_raw(&z) - v.eval_raw(&z)).norm());
            count += 1;
        }
    }
    let report = ReconstructReport {
        coefficient_error: cerr,
        sup_residual: sup,
        grid_points: count,
        inversion_residual: inv_res,
    };
    Ok((rec, report))
}
