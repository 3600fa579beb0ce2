//! Least-squares fit of the constant function 1 by kernel translates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{horner, Factored, SpanElement, SpanTerm};
use crate::domains::{hartogs_radius, ring, ComplexPoint, Domain, MultiIndex};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::kernels::KernelFunction;

type C = Complex<f64>;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Node budget P.
    pub budget: usize,
    /// Conjugate-derivative order per node (0 = pure translates).
    pub max_alpha: u32,
    pub epsilon: f64,
    pub margin: f64,
    pub seed: u64,
    /// Budget doubling continues while the target is missed and the budget stays below this.
    pub max_budget: usize,
    /// Highest z-derivative order reported in `deriv_sup_errors`.
    pub deriv_report_order: u32,
    /// Number of base (z′) nodes; chosen from the budget when absent.
    pub base_nodes: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            budget: 40,
            max_alpha: 0,
            epsilon: 0.05,
            margin: 0.05,
            seed: 0,
            max_budget: 0,
            deriv_report_order: 1,
            base_nodes: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridDescription {
    pub fit_points: usize,
    pub verify_points: usize,
    pub margin: f64,
    pub layout: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetStep {
    pub budget: usize,
    pub terms: usize,
    pub sup_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub sup_error: f64,
    /// sup |∂^β u| over |β| = k on the fit grid, for k = 1, 2, ….
    pub deriv_sup_errors: Vec<f64>,
    pub rms_residual: f64,
    pub grid: GridDescription,
    pub residual_history: Vec<BudgetStep>,
    pub condition_estimate: f64,
    pub lambda: f64,
    pub nodes: Vec<ComplexPoint<f64>>,
    pub budget_exceeded: bool,
}

/// Interior node layout used by the fitter.
#[derive(Clone, Debug)]
pub enum NodeLattice {
    /// Tensor of base nodes (z′) and fiber nodes (z_n).
    Tensor { base: Vec<Vec<C>>, fiber: Vec<C> },
    /// Fiber node = R(|b1|²)·u for each unit-disc fiber node u.
    Hartogs { base: Vec<C>, fiber_unit: Vec<C>, profile: Vec<f64> },
    Points(Vec<Vec<C>>),
}

impl NodeLattice {
    pub fn points(&self) -> Vec<Vec<C>> {
        match self {
            NodeLattice::Tensor { base, fiber } => base
                .iter()
                .flat_map(|b| {
                    fiber.iter().map(move |f| {
                        let mut v = b.clone();
                        v.push(*f);
                        v
                    })
                })
                .collect(),
            NodeLattice::Hartogs {
                base,
                fiber_unit,
                profile,
            } => base
                .iter()
                .flat_map(|&b| {
                    let r = hartogs_radius(profile, b.norm_sqr());
                    fiber_unit.iter().map(move |&u| vec![b, u * r])
                })
                .collect(),
            NodeLattice::Points(p) => p.clone(),
        }
    }
}

fn phase(seed: u64, slot: usize, count: usize) -> f64 {
    let x = ((seed as f64 + 1.0 + slot as f64) * GOLDEN).fract();
    x * std::f64::consts::TAU / count.max(1) as f64
}

fn planar_nodes(d: &Domain<f64>, count: usize, ph: f64) -> Result<Vec<C>> {
    match d {
        Domain::Disc { center, radius } => {
            if count <= 1 {
                Ok(vec![*center])
            } else {
                let mut v = vec![*center];
                v.extend(ring(*center, 0.5 * radius, count - 1, ph));
                Ok(v)
            }
        }
        Domain::Annulus {
            center,
            inner,
            outer,
        } => Ok(ring(*center, (inner * outer).sqrt(), count.max(1), ph)),
        _ => Err(Error::Unsupported(format!("planar nodes on {}", d.kind_name()))),
    }
}

fn base_count(budget: usize, over: Option<usize>) -> usize {
    over.unwrap_or(if budget < 50 { 1 } else { 5 }).max(1)
}

pub fn build_lattice(d: &Domain<f64>, opts: &FitOptions) -> Result<NodeLattice> {
    let p = opts.budget.max(1);
    match d {
        Domain::Product { .. } | Domain::Polydisc { .. } => {
            let fs = d.factors();
            if fs.iter().any(|f| !f.is_planar()) {
                let pts = ball_like_nodes(d, p)?;
                return Ok(NodeLattice::Points(pts));
            }
            let nb = base_count(p, opts.base_nodes);
            let nf = (p / nb).max(1);
            let mut base: Vec<Vec<C>> = vec![vec![]];
            for (i, f) in fs[..fs.len() - 1].iter().enumerate() {
                let c = if i == 0 { nb } else { 1 };
                let ns = planar_nodes(f, c, phase(opts.seed, i, c))?;
                base = base
                    .iter()
                    .flat_map(|b| {
                        ns.iter().map(move |z| {
                            let mut v = b.clone();
                            v.push(*z);
                            v
                        })
                    })
                    .collect();
            }
            let last = fs.last().unwrap();
            let fiber = planar_nodes(last, nf, phase(opts.seed, fs.len() - 1, nf))?;
            Ok(NodeLattice::Tensor { base, fiber })
        }
        Domain::Hartogs {
            base_radius,
            profile,
        } => {
            let nb = base_count(p, opts.base_nodes);
            let nf = (p / nb).max(1);
            let bd = Domain::Disc {
                center: C::new(0.0, 0.0),
                radius: *base_radius,
            };
            let base = planar_nodes(&bd, nb, phase(opts.seed, 0, nb))?;
            let fiber_unit = if nf == 1 {
                vec![C::new(0.0, 0.0)]
            } else {
                ring(C::new(0.0, 0.0), 0.55, nf, phase(opts.seed, 1, nf))
            };
            Ok(NodeLattice::Hartogs {
                base,
                fiber_unit,
                profile: profile.clone(),
            })
        }
        Domain::Disc { .. } | Domain::Annulus { .. } => {
            let ns = planar_nodes(d, p, phase(opts.seed, 0, p))?;
            Ok(NodeLattice::Points(ns.into_iter().map(|z| vec![z]).collect()))
        }
        _ => Ok(NodeLattice::Points(ball_like_nodes(d, p)?)),
    }
}

/// Origin plus a deterministic scatter at half the radius of the domain's inscribed ball.
fn ball_like_nodes(d: &Domain<f64>, p: usize) -> Result<Vec<Vec<C>>> {
    let n = d.dim();
    let mut out = vec![vec![C::new(0.0, 0.0); n]];
    let mut k = 1usize;
    while out.len() < p {
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let a = ((k * (2 * i + 1)) as f64 * GOLDEN).fract() * std::f64::consts::TAU;
            let r = ((k * (i + 3)) as f64 * 0.754_877_666).fract();
            v.push(C::from_polar(0.5 * r / (n as f64).sqrt(), a));
        }
        k += 1;
        if d.contains(&v)? {
            out.push(v);
        }
    }
    Ok(out)
}

fn planar_grid(d: &Domain<f64>, n_ang: usize, n_rad: usize, delta: f64) -> Vec<C> {
    let off = std::f64::consts::PI / n_ang as f64;
    match d {
        Domain::Disc { center, radius } => {
            let mut v = vec![*center];
            for i in 1..=n_rad {
                let rho = radius * (1.0 - delta) * i as f64 / n_rad as f64;
                v.extend(ring(*center, rho, n_ang, off));
            }
            v
        }
        Domain::Annulus {
            center,
            inner,
            outer,
        } => {
            let lo = inner * (1.0 + delta);
            let hi = outer * (1.0 - delta);
            let mut v = Vec::new();
            for i in 0..n_rad {
                let rho = lo + (hi - lo) * i as f64 / (n_rad - 1).max(1) as f64;
                v.extend(ring(*center, rho, n_ang, off));
            }
            v
        }
        _ => vec![],
    }
}

fn ball_grid(d: &Domain<f64>, count: usize, delta: f64) -> Vec<Vec<C>> {
    let n = d.dim();
    let mut out = Vec::with_capacity(count);
    let mut k = 1usize;
    while out.len() < count && k < 100 * count + 1000 {
        let v: Vec<C> = (0..n)
            .map(|i| {
                let a = ((k * (2 * i + 3)) as f64 * GOLDEN).fract() * std::f64::consts::TAU;
                let r = ((k * (i + 2)) as f64 * 0.569_840_290_998).fract();
                C::from_polar(r, a)
            })
            .collect();
        k += 1;
        if d.contains_with_margin(&v, delta).unwrap_or(false) {
            out.push(v);
        }
    }
    out
}

/// Grid as a list of (z′, fiber points) blocks, or a flat list for non-fibered domains.
enum Grid {
    Tensor { base: Vec<Vec<C>>, fiber: Vec<C> },
    Fibered { blocks: Vec<(C, Vec<C>)> },
    Flat(Vec<Vec<C>>),
}

impl Grid {
    fn len(&self) -> usize {
        match self {
            Grid::Tensor { base, fiber } => base.len() * fiber.len(),
            Grid::Fibered { blocks } => blocks.iter().map(|b| b.1.len()).sum(),
            Grid::Flat(p) => p.len(),
        }
    }

    fn points(&self) -> Vec<Vec<C>> {
        match self {
            Grid::Tensor { base, fiber } => base
                .iter()
                .flat_map(|b| {
                    fiber.iter().map(move |f| {
                        let mut v = b.clone();
                        v.push(*f);
                        v
                    })
                })
                .collect(),
            Grid::Fibered { blocks } => blocks
                .iter()
                .flat_map(|(b, fs)| fs.iter().map(move |f| vec![*b, *f]))
                .collect(),
            Grid::Flat(p) => p.clone(),
        }
    }
}

fn make_grid(d: &Domain<f64>, lat: &NodeLattice, dens: usize, n_rad: usize, delta: f64) -> Grid {
    match (d, lat) {
        (_, NodeLattice::Tensor { base, fiber }) => {
            let fs = d.factors();
            let mut bgrid: Vec<Vec<C>> = vec![vec![]];
            for (i, f) in fs[..fs.len() - 1].iter().enumerate() {
                let c = if i == 0 { base.len() } else { 1 };
                let g = planar_grid(f, dens * c.max(2), n_rad, delta);
                bgrid = bgrid
                    .iter()
                    .flat_map(|b| {
                        g.iter().map(move |z| {
                            let mut v = b.clone();
                            v.push(*z);
                            v
                        })
                    })
                    .collect();
            }
            let fgrid = planar_grid(fs.last().unwrap(), dens * fiber.len().max(2), n_rad, delta);
            Grid::Tensor {
                base: bgrid,
                fiber: fgrid,
            }
        }
        (
            Domain::Hartogs { base_radius, profile },
            NodeLattice::Hartogs { base, fiber_unit, .. },
        ) => {
            let bd = Domain::Disc {
                center: C::new(0.0, 0.0),
                radius: *base_radius,
            };
            let ud = Domain::<f64>::unit_disc();
            let bg = planar_grid(&bd, dens * base.len().max(2), n_rad, delta);
            let fg = planar_grid(&ud, dens * fiber_unit.len().max(2), n_rad, delta);
            Grid::Fibered {
                blocks: bg
                    .into_iter()
                    .map(|b| {
                        let r = hartogs_radius(profile, b.norm_sqr());
                        (b, fg.iter().map(|&u| u * r).collect())
                    })
                    .collect(),
            }
        }
        (_, NodeLattice::Points(p)) if d.is_planar() => {
            Grid::Flat(planar_grid(d, dens * p.len().max(2), n_rad, delta).into_iter().map(|z| vec![z]).collect())
        }
        (_, lat) => Grid::Flat(ball_grid(d, dens * dens * lat.points().len().max(4), delta)),
    }
}

fn solve_min_norm(n: DMatrix<C>, rhs: DVector<C>) -> Result<(DVector<C>, f64, f64)> {
    let maxdiag = (0..n.nrows()).map(|i| n[(i, i)].re).fold(0.0, f64::max);
    let lambda = 1e-10 * maxdiag;
    let mut m = n;
    for i in 0..m.nrows() {
        m[(i, i)] += C::new(lambda, 0.0);
    }
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !cond.is_finite() {
        return Err(Error::IllConditioned(cond));
    }
    let x = svd
        .solve(&rhs, smax * 1e-15)
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok((x, cond, lambda))
}

fn gram(a: &DMatrix<C>) -> (DMatrix<C>, DVector<C>) {
    let ah = a.adjoint();
    let n = &ah * a;
    let ones = DVector::from_element(a.nrows(), C::new(1.0, 0.0));
    (n, &ah * ones)
}

struct Solved {
    u: SpanElement<f64>,
    cond: f64,
    lambda: f64,
}

fn alphas(n: usize, m: u32) -> Vec<MultiIndex> {
    MultiIndex::all_up_to(n, m)
}

fn solve_tensor(
    kernel: &Arc<KernelFunction<f64>>,
    base: &[Vec<C>],
    fiber: &[C],
    grid: &Grid,
    max_alpha: u32,
) -> Result<Solved> {
    let (bgrid, fgrid) = match grid {
        Grid::Tensor { base, fiber } => (base, fiber),
        _ => unreachable!("tensor lattice with tensor grid"),
    };
    let fs = kernel.factors().ok_or_else(|| Error::Unsupported("tensor fit needs a product kernel".into()))?;
    let head = &fs[..fs.len() - 1];
    let bk = if head.len() == 1 {
        head[0].clone()
    } else {
        KernelFunction::product(head.to_vec())?
    };
    let fk = fs.last().unwrap().clone();
    let nb = bk.dim();
    let bkeys: Vec<(Vec<C>, MultiIndex)> = base
        .iter()
        .flat_map(|b| alphas(nb, max_alpha).into_iter().map(move |a| (b.clone(), a)))
        .collect();
    let fkeys: Vec<(C, u32)> = fiber
        .iter()
        .flat_map(|&b| (0..=max_alpha).map(move |a| (b, a)))
        .collect();
    let ad = DMatrix::from_fn(bgrid.len(), bkeys.len(), |i, j| {
        bk.eval_raw(&bkeys[j].1 .0, &bgrid[i], &bkeys[j].0)
    });
    let rows: Vec<Vec<C>> = fgrid
        .par_iter()
        .map(|z| fkeys.iter().map(|(b, a)| fk.eval_raw(&[*a], &[*z], &[*b])).collect())
        .collect();
    let af = DMatrix::from_fn(fgrid.len(), fkeys.len(), |i, j| rows[i][j]);
    let (nd, rd) = gram(&ad);
    let (nf, rf) = gram(&af);
    let sel: Vec<(usize, usize)> = (0..bkeys.len())
        .flat_map(|d| (0..fkeys.len()).map(move |o| (d, o)))
        .filter(|&(d, o)| bkeys[d].1.order() + fkeys[o].1 <= max_alpha)
        .collect();
    let p = sel.len();
    let n = DMatrix::from_fn(p, p, |i, j| {
        let (d1, o1) = sel[i];
        let (d2, o2) = sel[j];
        nd[(d1, d2)] * nf[(o1, o2)]
    });
    let rhs = DVector::from_fn(p, |i, _| rd[sel[i].0] * rf[sel[i].1]);
    let (x, cond, lambda) = solve_min_norm(n, rhs)?;
    let terms = sel
        .iter()
        .enumerate()
        .map(|(i, &(d, o))| {
            let mut node = bkeys[d].0.clone();
            node.push(fkeys[o].0);
            let mut alpha = bkeys[d].1 .0.clone();
            alpha.push(fkeys[o].1);
            SpanTerm::new(node, alpha, x[i])
        })
        .collect();
    Ok(Solved {
        u: SpanElement::new(kernel.clone(), terms)?,
        cond,
        lambda,
    })
}

fn solve_dense(kernel: &Arc<KernelFunction<f64>>, nodes: &[Vec<C>], grid: &Grid, max_alpha: u32) -> Result<Solved> {
    let n = kernel.dim();
    let keys: Vec<(Vec<C>, MultiIndex)> = nodes
        .iter()
        .flat_map(|b| alphas(n, max_alpha).into_iter().map(move |a| (b.clone(), a)))
        .collect();
    let pts = grid.points();
    let cols: Vec<SpanElement<f64>> = keys
        .iter()
        .map(|(b, a)| SpanElement::single(kernel.clone(), b.clone(), a.0.clone(), C::new(1.0, 0.0)))
        .collect::<Result<_>>()?;
    let a = if let (true, Grid::Fibered { blocks }) = (cols.iter().all(|c| c.polynomial().is_some()), grid) {
        // Per base point, each column is a polynomial in the fiber variable.
        let parts: Vec<Vec<Vec<C>>> = blocks
            .par_iter()
            .map(|(b, fs)| {
                let cs: Vec<Vec<C>> = cols.iter().map(|c| c.fiber_polynomial(&[*b]).unwrap()).collect();
                fs.iter().map(|&z| cs.iter().map(|c| horner(c, z)).collect()).collect()
            })
            .collect();
        let rows: Vec<Vec<C>> = parts.into_iter().flatten().collect();
        DMatrix::from_fn(rows.len(), keys.len(), |i, j| rows[i][j])
    } else if cols.iter().all(|c| c.polynomial().is_some()) {
        // Series kernels: A = Z·C with Z the monomial table of the grid, built in row chunks.
        let exps: Vec<MultiIndex> = cols[0].polynomial().unwrap().iter().map(|(g, _)| g.clone()).collect();
        let cmat = DMatrix::from_fn(exps.len(), cols.len(), |i, j| cols[j].polynomial().unwrap()[i].1);
        let chunks: Vec<DMatrix<C>> = pts
            .par_chunks(256)
            .map(|ch| {
                let z = DMatrix::from_fn(ch.len(), exps.len(), |i, k| {
                    exps[k].0.iter().zip(&ch[i]).fold(C::new(1.0, 0.0), |acc, (&e, &x)| acc * x.powu(e))
                });
                z * &cmat
            })
            .collect();
        let mut a = DMatrix::zeros(pts.len(), cols.len());
        let mut off = 0;
        for c in chunks {
            a.rows_mut(off, c.nrows()).copy_from(&c);
            off += c.nrows();
        }
        a
    } else {
        let rows: Vec<Vec<C>> = pts
            .par_iter()
            .map(|z| cols.iter().map(|c| c.eval_raw(z)).collect())
            .collect();
        DMatrix::from_fn(pts.len(), keys.len(), |i, j| rows[i][j])
    };
    let (nm, rhs) = gram(&a);
    let (x, cond, lambda) = solve_min_norm(nm, rhs)?;
    let terms = keys
        .iter()
        .enumerate()
        .map(|(i, (b, a))| SpanTerm::new(b.clone(), a.0.clone(), x[i]))
        .collect();
    Ok(Solved {
        u: SpanElement::new(kernel.clone(), terms)?,
        cond,
        lambda,
    })
}

/// sup |u − 1| and the RMS residual over a grid.
fn grid_error(u: &SpanElement<f64>, grid: &Grid) -> (f64, f64) {
    let vals: Vec<f64> = match grid {
        Grid::Tensor { base, fiber } => {
            if let Some(f) = u.factored() {
                let w: Vec<Vec<C>> = fiber.par_iter().map(|z| f.contract_fiber(&f.fiber_values(z))).collect();
                base.par_iter()
                    .flat_map_iter(|b| {
                        let kd = f.base_values(b);
                        w.iter().map(move |wl| (Factored::dot(&kd, wl) - 1.0).norm()).collect::<Vec<_>>()
                    })
                    .collect()
            } else {
                grid.points().par_iter().map(|z| (u.eval_raw(z) - 1.0).norm()).collect()
            }
        }
        Grid::Fibered { blocks } => blocks
            .par_iter()
            .flat_map_iter(|(b, fs)| match u.fiber_polynomial(&[*b]) {
                Some(c) => fs.iter().map(|&z| (horner(&c, z) - 1.0).norm()).collect::<Vec<_>>(),
                None => fs.iter().map(|&z| (u.eval_raw(&[*b, z]) - 1.0).norm()).collect(),
            })
            .collect(),
        Grid::Flat(p) => p.par_iter().map(|z| (u.eval_raw(z) - 1.0).norm()).collect(),
    };
    let sup = vals.iter().cloned().fold(0.0, f64::max);
    let rms = (vals.iter().map(|v| v * v).sum::<f64>() / vals.len().max(1) as f64).sqrt();
    (sup, rms)
}

/// Jet of u at z, through the factored form when available.
pub(crate) fn span_jet(u: &SpanElement<f64>, f: Option<&Factored<f64>>, z: &[C], order: u32) -> Jet<f64> {
    match f {
        Some(f) => {
            let n = z.len();
            let space = JetSpace::new(n, order);
            let zj = Jet::point(&space, z);
            let kd = f.base_values(&zj[..n - 1]);
            let ko = f.fiber_values(&zj[n - 1]);
            Factored::dot(&kd, &f.contract_fiber(&ko))
        }
        None => u.jet(z, order),
    }
}

fn deriv_errors(u: &SpanElement<f64>, grid: &Grid, order: u32) -> Vec<f64> {
    if order == 0 {
        return vec![];
    }
    let pts = grid.points();
    let stride = (pts.len() / 400).max(1);
    let f = u.factored();
    let n = u.dim();
    let idx: Vec<Vec<MultiIndex>> = (1..=order)
        .map(|k| {
            MultiIndex::all_up_to(n, k)
                .into_iter()
                .filter(|a| a.order() == k)
                .collect()
        })
        .collect();
    let per: Vec<Vec<f64>> = pts
        .par_iter()
        .step_by(stride)
        .map(|z| {
            let j = span_jet(u, f.as_ref(), z, order);
            idx.iter()
                .map(|set| set.iter().map(|b| j.derivative(&b.0).norm()).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    (0..order as usize)
        .map(|k| per.iter().map(|v| v[k]).fold(0.0, f64::max))
        .collect()
}

/// Fits the constant 1 on the kernel's domain; escalates the budget by doubling up to
/// `max_budget` while the target is missed. A missed target is reported through
/// `budget_exceeded`, not as an error.
pub fn fit_constant_one(kernel: &Arc<KernelFunction<f64>>, opts: &FitOptions) -> Result<(SpanElement<f64>, FitReport)> {
    if opts.budget == 0 || !(opts.epsilon > 0.0) {
        return Err(Error::InvalidInput("fit needs P >= 1 and epsilon > 0".into()));
    }
    let d = kernel.domain().clone();
    let mut history = Vec::new();
    let mut budget = opts.budget;
    loop {
        let o = FitOptions {
            budget,
            ..opts.clone()
        };
        let lat = build_lattice(&d, &o)?;
        let fit_grid = make_grid(&d, &lat, 4, 4, opts.margin);
        let ver_grid = make_grid(&d, &lat, 16, 8, opts.margin);
        let solved = match &lat {
            NodeLattice::Tensor { base, fiber } => solve_tensor(kernel, base, fiber, &fit_grid, opts.max_alpha)?,
            other => solve_dense(kernel, &other.points(), &fit_grid, opts.max_alpha)?,
        };
        let (sup, _) = grid_error(&solved.u, &ver_grid);
        let (_, rms) = grid_error(&solved.u, &fit_grid);
        history.push(BudgetStep {
            budget,
            terms: solved.u.terms().len(),
            sup_error: sup,
        });
        let done = sup <= opts.epsilon || budget * 2 > opts.max_budget;
        if done {
            let deriv = deriv_errors(&solved.u, &fit_grid, opts.deriv_report_order);
            let layout = match &lat {
                NodeLattice::Tensor { base, fiber } => format!("tensor {} base x {} fiber nodes", base.len(), fiber.len()),
                NodeLattice::Hartogs { base, fiber_unit, .. } => {
                    format!("hartogs {} base x {} scaled fiber nodes", base.len(), fiber_unit.len())
                }
                NodeLattice::Points(p) => format!("{} scattered nodes", p.len()),
            };
            let report = FitReport {
                sup_error: sup,
                deriv_sup_errors: deriv,
                rms_residual: rms,
                grid: GridDescription {
                    fit_points: fit_grid.len(),
                    verify_points: ver_grid.len(),
                    margin: opts.margin,
                    layout,
                },
                residual_history: history,
                condition_estimate: solved.cond.sqrt(),
                lambda: solved.lambda,
                nodes: lat.points().into_iter().map(|c| ComplexPoint { coords: c }).collect(),
                budget_exceeded: sup > opts.epsilon,
            };
            return Ok((solved.u, report));
        }
        budget *= 2;
    }
}
