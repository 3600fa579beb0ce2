//! Quadrature data from a span element: by jet expansion, and by collocation as a cross-check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use super::battery::coordinate_frames;
use super::pullback::{pullback_graph, PullbackSpec};
use crate::construct::{GraphMap, InjectivityReport};
use crate::domains::MultiIndex;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::span::MAX_Z_ORDER;
use crate::testfn::TestFunction;

type C = Complex<f64>;

/// Nodes closer than this (max-norm of coordinates) are merged.
pub const NODE_MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct QuadNode {
    pub point: Vec<C>,
    /// Preimage b_j of the node under the map.
    pub source: Vec<C>,
    /// c_{jβ} multiplying h^{(β)}(q_j).
    pub coeffs: Vec<(MultiIndex, C)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureData {
    pub nodes: Vec<QuadNode>,
    /// N = Σ_j n_j with n_j the number of functionals at node j.
    pub order: usize,
    /// Source terms whose nodes were merged into an earlier node.
    pub merged: usize,
}

impl QuadratureData {
    /// Σ c_{jβ} h^{(β)}(q_j).
    pub fn apply(&self, h: &TestFunction<f64>) -> C {
        self.nodes
            .iter()
            .map(|nd| {
                let ord = nd.coeffs.iter().map(|(b, _)| b.order()).max().unwrap_or(0);
                if ord == 0 {
                    return nd.coeffs.iter().map(|(_, c)| c).sum::<C>() * h.value(&nd.point);
                }
                let space = JetSpace::new(nd.point.len(), ord);
                let j = h.eval(&Jet::point(&space, &nd.point));
                nd.coeffs.iter().map(|(b, c)| c * j.derivative(&b.0)).sum()
            })
            .sum()
    }

    pub fn coefficient_count(&self) -> usize {
        self.nodes.iter().map(|n| n.coeffs.len()).sum()
    }

    fn insert(&mut self, point: Vec<C>, source: Vec<C>, beta: MultiIndex, c: C) {
        let close = |a: &[C], b: &[C]| a.iter().zip(b).all(|(x, y)| (x - y).norm() <= NODE_MERGE_TOL);
        let node = match self.nodes.iter_mut().position(|n| close(&n.point, &point)) {
            Some(i) => &mut self.nodes[i],
            None => {
                self.nodes.push(QuadNode {
                    point,
                    source,
                    coeffs: vec![],
                });
                self.nodes.last_mut().unwrap()
            }
        };
        match node.coeffs.iter_mut().find(|(b, _)| *b == beta) {
            Some(e) => e.1 += c,
            None => node.coeffs.push((beta, c)),
        }
    }

    fn finalize(mut self, terms: usize) -> Self {
        for n in &mut self.nodes {
            n.coeffs.sort_by(|a, b| a.0.order().cmp(&b.0.order()).then(a.0 .0.cmp(&b.0 .0)));
        }
        self.order = self.coefficient_count();
        self.merged = terms.saturating_sub(self.nodes.len());
        self
    }
}

/// [δ^α] of the product V Δ^β, scaled to the functional on ψ^{(β)}(a).
pub(crate) fn chain_coefficients(v: &Jet<f64>, delta: &[Jet<f64>], alpha: &[u32]) -> Vec<(MultiIndex, C)> {
    let a = MultiIndex(alpha.to_vec());
    let fa: f64 = a.factorial();
    let n = alpha.len();
    MultiIndex::all_up_to(n, a.order())
        .into_iter()
        .map(|beta| {
            let mut p = v.clone();
            for (i, &k) in beta.0.iter().enumerate() {
                for _ in 0..k {
                    p = &p * &delta[i];
                }
            }
            let fb: f64 = beta.factorial();
            (beta, p.coeff(alpha) * (fa / fb))
        })
        .collect()
}

/// Jets of v and of f − f(b) at b, to the given order.
pub(crate) fn source_jets(graph: &GraphMap, b: &[C], order: u32) -> Result<(Jet<f64>, Vec<Jet<f64>>, Vec<C>)> {
    let n = b.len();
    let space = JetSpace::new(n, order);
    let v = graph.v().eval_generic(&Jet::point(&space, b));
    let g = graph.g_jet(b, order)?;
    let gb = g.coeff(&vec![0; n]);
    let mut delta: Vec<Jet<f64>> = (0..n - 1).map(|i| Jet::variable(&space, i, C::new(0.0, 0.0))).collect();
    delta.push(g - Jet::constant(&space, gb));
    let mut q = b.to_vec();
    q[n - 1] = gb;
    Ok((v, delta, q))
}

/// c_{jβ} = conj(t_{jα}) α!/β! [δ^α](V Δ^β), from ∫_{f(G)} ψ = ⟨(ψ∘f) v, v⟩.
pub fn extract_quadrature_data(graph: &GraphMap) -> Result<QuadratureData> {
    let v = graph.v();
    let jmax = v.max_alpha();
    if jmax > MAX_Z_ORDER {
        return Err(Error::UnsupportedOrder { order: jmax, max: MAX_Z_ORDER });
    }
    let mut qd = QuadratureData {
        nodes: vec![],
        order: 0,
        merged: 0,
    };
    for t in v.terms() {
        let b = &t.node.coords;
        let ord = t.alpha.order();
        let (vj, delta, q) = source_jets(graph, b, ord)?;
        for (beta, c) in chain_coefficients(&vj, &delta, &t.alpha.0) {
            qd.insert(q.clone(), b.clone(), beta, t.coeff.conj() * c);
        }
    }
    qd.nodes.iter_mut().for_each(|n| n.coeffs.retain(|(_, c)| *c != C::new(0.0, 0.0)));
    Ok(qd.finalize(v.terms().len()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CollocationReport {
    pub basis_size: usize,
    pub unknowns: usize,
    pub residual: f64,
    pub condition: f64,
    /// Per-coordinate exponent ranges and scales of the basis.
    pub basis: Vec<(i32, i32, f64)>,
}

/// Scaled monomial / Laurent basis sized by the number of distinct source coordinates.
pub fn collocation_basis(graph: &GraphMap, structure: &QuadratureData) -> (Vec<TestFunction<f64>>, Vec<(i32, i32, f64)>) {
    let frames = coordinate_frames(graph.domain());
    let n = frames.len();
    let jmax: Vec<u32> = (0..n)
        .map(|i| {
            structure
                .nodes
                .iter()
                .flat_map(|nd| nd.coeffs.iter().map(move |(b, _)| b.0[i]))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut ranges = Vec::with_capacity(n);
    for (i, &(c, r, hole)) in frames.iter().enumerate() {
        let mut vals: Vec<C> = Vec::new();
        for nd in &structure.nodes {
            let x = nd.source[i];
            if !vals.iter().any(|y| (x - y).norm() <= 1e-9) {
                vals.push(x);
            }
        }
        let mean = vals.iter().map(|x| (x - c).norm()).sum::<f64>() / vals.len().max(1) as f64;
        let scale = if mean > 1e-3 * r { mean } else { 0.5 * r };
        let d = (vals.len() * (jmax[i] as usize + 1) + 2) as i32;
        let (lo, hi) = if hole { (-(d / 2), d - d / 2) } else { (0, d - 1) };
        ranges.push((lo, hi, scale));
    }
    let mut basis = vec![(vec![], 1.0)];
    for &(lo, hi, _) in &ranges {
        basis = basis
            .into_iter()
            .flat_map(|(e, _): (Vec<i32>, f64)| {
                (lo..=hi).map(move |k| {
                    let mut e = e.clone();
                    e.push(k);
                    (e, 1.0)
                })
            })
            .collect();
    }
    let center: Vec<C> = frames.iter().map(|f| f.0).collect();
    let scale: Vec<f64> = ranges.iter().map(|r| r.2).collect();
    let fns = basis
        .into_iter()
        .map(|(exps, _)| TestFunction::Monomial {
            exps,
            center: center.clone(),
            scale: scale.clone(),
        })
        .collect();
    (fns, ranges)
}

/// Solves ∫_{f(G)} h_k = Σ c_{jβ} h_k^{(β)}(q_j) in the least-squares sense over the
/// node/index structure of `structure`.
pub fn extract_by_collocation(
    graph: &GraphMap,
    cert: &InjectivityReport,
    structure: &QuadratureData,
    spec: &PullbackSpec,
) -> Result<(QuadratureData, CollocationReport)> {
    let (basis, ranges) = collocation_basis(graph, structure);
    let rhs = pullback_graph(graph, cert, &basis, spec)?;
    let cols: Vec<(usize, MultiIndex)> = structure
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(j, nd)| nd.coeffs.iter().map(move |(b, _)| (j, b.clone())))
        .collect();
    let (m, u) = (basis.len(), cols.len());
    if m < u {
        return Err(Error::Singular(format!("collocation basis {m} smaller than {u} unknowns")));
    }
    let mut a = DMatrix::<C>::zeros(m, u);
    for (k, h) in basis.iter().enumerate() {
        for (col, (j, beta)) in cols.iter().enumerate() {
            let p = &structure.nodes[*j].point;
            a[(k, col)] = if beta.order() == 0 { h.value(p) } else { h.derivative(&beta.0, p) };
        }
    }
    // Row scaling by ∫|h| makes every equation relative.
    let mut bvec = DVector::<C>::zeros(m);
    for k in 0..m {
        let s = rhs[k].abs_integral.max(f64::MIN_POSITIVE).recip();
        bvec[k] = rhs[k].value * s;
        for col in 0..u {
            a[(k, col)] *= s;
        }
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > smax * 1e-13) {
        return Err(Error::Singular(format!("collocation system, singular values {smax:.3e}..{smin:.3e}")));
    }
    let x = svd.solve(&bvec, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let residual = (&a * &x - &bvec).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut qd = QuadratureData {
        nodes: structure
            .nodes
            .iter()
            .map(|nd| QuadNode {
                point: nd.point.clone(),
                source: nd.source.clone(),
                coeffs: vec![],
            })
            .collect(),
        order: 0,
        merged: 0,
    };
    for (col, (j, beta)) in cols.iter().enumerate() {
        qd.nodes[*j].coeffs.push((beta.clone(), x[col]));
    }
    qd.order = qd.coefficient_count();
    qd.merged = structure.merged;
    let report = CollocationReport {
        basis_size: m,
        unknowns: u,
        residual,
        condition: smax / smin,
        basis: ranges,
    };
    Ok((qd, report))
}

/// max |c − c′| over matching (node, β) pairs; entries missing from `b` count as zero.
pub fn coefficient_distance(a: &QuadratureData, b: &QuadratureData) -> f64 {
    let mut d = 0.0f64;
    for na in &a.nodes {
        let nb = b
            .nodes
            .iter()
            .find(|n| n.point.iter().zip(&na.point).all(|(x, y)| (x - y).norm() <= NODE_MERGE_TOL));
        for (beta, ca) in &na.coeffs {
            let cb = nb
                .and_then(|n| n.coeffs.iter().find(|(b, _)| b == beta))
                .map(|x| x.1)
                .unwrap_or(C::new(0.0, 0.0));
            d = d.max((ca - cb).norm());
        }
    }
    d
}
