//! Fiber periods ∮_γ u(z′, λ) dλ, the period matrix of kernel sections, and the correction
//! v = u − Σ_l a_l(z′) K_Ω(·, ζ_l) that removes them.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::Serialize;

use crate::domains::{Contour, Domain};
use crate::error::{Error, Result};
use crate::kernels::KernelFunction;
use crate::span::{Factored, SpanElement, SpanTerm};
use rayon::prelude::*;

type C = Complex<f64>;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// Trapezoid ∮ f with N and 2N samples; the 2N value is returned after the doubling check.
fn contour_checked<F: Fn(C) -> C>(c: &Contour<f64>, f: F, tol: f64) -> Result<C> {
    let a = c.integrate(&f);
    let b = c.with_samples(c.samples * 2)?.integrate(&f);
    let d = (a - b).norm();
    if d > tol {
        return Err(Error::NonConvergence(format!(
            "contour integral changed by {d:.3e} under doubling of {} samples",
            c.samples
        )));
    }
    Ok(b)
}

fn check_contour(fiber: &Domain<f64>, c: &Contour<f64>, margin: f64) -> Result<()> {
    for p in c.with_samples(64)?.points() {
        if !fiber.contains_with_margin(&[p], margin)? {
            return Err(Error::OutsideDomain(format!(
                "contour of radius {} leaves the certified kernel margin",
                c.radius
            )));
        }
    }
    Ok(())
}

/// c_i(z′) = ∮_{γ_i} u(z′, λ) dλ.
pub fn compute_periods(u: &SpanElement<f64>, contours: &[Contour<f64>], zprime: &[C]) -> Result<Vec<C>> {
    periods_with(u, factored_periods(u, contours)?.as_ref(), contours, zprime)
}

/// Per-contour integrals ∮ K_Ω^{(α_o)}(λ, b_o) dλ of each fiber key of a factored element.
struct KeyPeriods(Vec<Vec<C>>);

impl KeyPeriods {
    fn new(f: &Factored<f64>, contours: &[Contour<f64>]) -> Result<Self> {
        let rows = contours
            .iter()
            .map(|c| {
                f.okeys
                    .iter()
                    .map(|(b, a)| contour_checked(c, |l| f.fiber.eval_raw(&[*a], &[l], &[*b]), 1e-12))
                    .collect::<Result<Vec<C>>>()
            })
            .collect::<Result<_>>()?;
        Ok(KeyPeriods(rows))
    }
}

fn periods_with(
    u: &SpanElement<f64>,
    fac: Option<&(Factored<f64>, KeyPeriods)>,
    contours: &[Contour<f64>],
    zprime: &[C],
) -> Result<Vec<C>> {
    let d = u.kernel().domain();
    let fiber = d.fiber_domain(zprime)?;
    let margin = u.kernel().margin();
    for c in contours {
        check_contour(&fiber, c, margin)?;
    }
    if let Some((f, kp)) = fac {
        let kd = f.base_values(zprime);
        let w: Vec<C> = (0..f.okeys.len())
            .map(|o| kd.iter().zip(&f.coef).map(|(k, row)| k * row[o]).sum())
            .collect();
        return Ok(kp.0.iter().map(|row| row.iter().zip(&w).map(|(p, w)| p * w).sum()).collect());
    }
    let mut z = zprime.to_vec();
    z.push(C::new(0.0, 0.0));
    let n = z.len() - 1;
    contours
        .iter()
        .map(|c| {
            contour_checked(
                c,
                |l| {
                    let mut p = z.clone();
                    p[n] = l;
                    u.eval_raw(&p)
                },
                1e-12,
            )
        })
        .collect()
}

fn factored_periods(u: &SpanElement<f64>, contours: &[Contour<f64>]) -> Result<Option<(Factored<f64>, KeyPeriods)>> {
    match u.factored() {
        Some(f) => {
            let kp = KeyPeriods::new(&f, contours)?;
            Ok(Some((f, kp)))
        }
        None => Ok(None),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodMatrix {
    /// M[i][j] = ∮_{γ_i} K_Ω(λ, ζ_j) dλ.
    pub entries: Vec<Vec<C>>,
    pub zetas: Vec<C>,
    pub condition: f64,
    pub retries: usize,
}

impl PeriodMatrix {
    pub fn empty() -> Self {
        PeriodMatrix {
            entries: vec![],
            zetas: vec![],
            condition: 1.0,
            retries: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.zetas.len()
    }

    fn matrix(&self) -> DMatrix<C> {
        let m = self.size();
        DMatrix::from_fn(m, m, |i, j| self.entries[i][j])
    }

    pub fn inverse(&self) -> Result<Vec<Vec<C>>> {
        let m = self.size();
        if m == 0 {
            return Ok(vec![]);
        }
        let inv = self
            .matrix()
            .try_inverse()
            .ok_or_else(|| Error::Singular("period matrix".into()))?;
        Ok((0..m).map(|i| (0..m).map(|j| inv[(i, j)]).collect()).collect())
    }
}

fn condition(m: &DMatrix<C>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let s = m.clone().singular_values();
    s.max() / s.min()
}

/// Default ζ placement: equispaced on the circle of geometric-mean radius.
pub fn default_zetas(omega: &Domain<f64>, count: usize, rotation: f64) -> Result<Vec<C>> {
    match omega {
        Domain::Annulus {
            center,
            inner,
            outer,
        } => {
            let rho = (inner * outer).sqrt();
            Ok((0..count)
                .map(|j| center + C::from_polar(rho, rotation + std::f64::consts::TAU * j as f64 / count as f64))
                .collect())
        }
        Domain::Disc { center, radius } => Ok((0..count)
            .map(|j| center + C::from_polar(0.5 * radius, rotation + std::f64::consts::TAU * j as f64 / count as f64))
            .collect()),
        _ => Err(Error::Unsupported("period points need a planar fiber".into())),
    }
}

const MAX_RETRIES: usize = 20;
const COND_LIMIT: f64 = 1e6;

pub fn build_period_matrix(
    k_omega: &KernelFunction<f64>,
    contours: &[Contour<f64>],
    candidates: Option<Vec<C>>,
) -> Result<PeriodMatrix> {
    let omega = k_omega.domain();
    let m = contours.len();
    if m == 0 {
        return Ok(PeriodMatrix::empty());
    }
    for c in contours {
        check_contour(omega, c, k_omega.margin())?;
    }
    let (center, _) = omega
        .planar_affine()
        .ok_or_else(|| Error::Unsupported("period matrix needs a planar kernel".into()))?;
    let initial = match candidates {
        Some(z) => {
            if z.len() != m {
                return Err(Error::InvalidInput(format!("need {m} period points, got {}", z.len())));
            }
            z
        }
        None => default_zetas(omega, m, 0.0)?,
    };
    let mut best = f64::INFINITY;
    for attempt in 0..=MAX_RETRIES {
        let rot = C::from_polar(1.0, GOLDEN_ANGLE * attempt as f64);
        let zetas: Vec<C> = initial.iter().map(|&z| center + (z - center) * rot).collect();
        for z in &zetas {
            if !omega.contains_with_margin(&[*z], k_omega.margin())? {
                return Err(Error::OutsideDomain(format!("period point {z} outside the certified margin")));
            }
        }
        let mut entries = vec![vec![C::new(0.0, 0.0); m]; m];
        for (i, c) in contours.iter().enumerate() {
            for (j, &zeta) in zetas.iter().enumerate() {
                entries[i][j] = contour_checked(c, |l| k_omega.eval_raw(&[0], &[l], &[zeta]), 1e-12)?;
            }
        }
        let mat = DMatrix::from_fn(m, m, |i, j| entries[i][j]);
        let cond = condition(&mat);
        if cond.is_finite() && cond <= COND_LIMIT {
            return Ok(PeriodMatrix {
                entries,
                zetas,
                condition: cond,
                retries: attempt,
            });
        }
        best = best.min(cond);
    }
    Err(Error::PeriodMatrixSingular {
        retries: MAX_RETRIES,
        condition: best,
    })
}

/// A(z′) = M⁻¹ C(z′), with C the period vector of u.
#[derive(Clone, Debug, Serialize)]
pub struct CorrectionCoefficients {
    pub m: Vec<Vec<C>>,
    pub minv: Vec<Vec<C>>,
}

impl CorrectionCoefficients {
    pub fn a(&self, c: &[C]) -> Vec<C> {
        self.minv
            .iter()
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// max_i |(M A)_i − C_i|.
    pub fn residual(&self, c: &[C]) -> f64 {
        let a = self.a(c);
        self.m
            .iter()
            .zip(c)
            .map(|(row, ci)| (row.iter().zip(&a).map(|(x, y)| x * y).sum::<C>() - ci).norm())
            .fold(0.0, f64::max)
    }

    /// Evaluates A(z′) for u at z′.
    pub fn at(&self, u: &SpanElement<f64>, contours: &[Contour<f64>], zprime: &[C]) -> Result<Vec<C>> {
        Ok(self.a(&compute_periods(u, contours, zprime)?))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectionReport {
    pub added_terms: usize,
    pub max_residual_period: f64,
    pub max_system_residual: f64,
    pub lattice_points: usize,
    pub sup_correction: f64,
}

/// Builds v from u: every term t·K^{(α′, α_n)}(·, (b′, b_n)) of u contributes
/// −t Σ_i (M⁻¹)_{li} ∮_{γ_i} K_Ω^{(α_n)}(λ, b_n) dλ as the coefficient of K^{(α′, 0)}(·, (b′, ζ_l)).
/// The zero-period invariant is then checked on `zlattice`.
pub fn correct_periods(
    u: &SpanElement<f64>,
    pm: &PeriodMatrix,
    contours: &[Contour<f64>],
    zlattice: &[Vec<C>],
    tol: f64,
) -> Result<(SpanElement<f64>, CorrectionCoefficients, CorrectionReport)> {
    let m = pm.size();
    if m != contours.len() {
        return Err(Error::InvalidInput("period matrix does not match the contour count".into()));
    }
    let minv = pm.inverse()?;
    let coeffs = CorrectionCoefficients {
        m: pm.entries.clone(),
        minv: minv.clone(),
    };
    if m == 0 {
        let report = CorrectionReport {
            added_terms: 0,
            max_residual_period: 0.0,
            max_system_residual: 0.0,
            lattice_points: 0,
            sup_correction: 0.0,
        };
        return Ok((u.clone(), coeffs, report));
    }
    let kernel: &Arc<KernelFunction<f64>> = u.kernel();
    let fk = kernel
        .fiber_kernel()
        .ok_or_else(|| Error::Unsupported("period correction needs a product kernel with a planar fiber".into()))?;
    let n = u.dim();
    let mut added: Vec<SpanTerm<f64>> = Vec::new();
    for t in u.terms() {
        let bn = t.node.coords[n - 1];
        let an = t.alpha.0[n - 1];
        let p: Vec<C> = contours
            .iter()
            .map(|c| contour_checked(c, |l| fk.eval_raw(&[an], &[l], &[bn]), 1e-12))
            .collect::<Result<_>>()?;
        for l in 0..m {
            let s: C = (0..m).map(|i| minv[l][i] * p[i]).sum();
            let coeff = -t.coeff * s;
            let mut node = t.node.coords[..n - 1].to_vec();
            node.push(pm.zetas[l]);
            let mut alpha = t.alpha.0[..n - 1].to_vec();
            alpha.push(0);
            match added.iter_mut().find(|o| o.node.coords == node && o.alpha.0 == alpha) {
                Some(o) => o.coeff += coeff,
                None => added.push(SpanTerm::new(node, alpha, coeff)),
            }
        }
    }
    let n_added = added.len();
    let mut terms = u.terms().to_vec();
    terms.extend(added.iter().cloned());
    let v = SpanElement::new(kernel.clone(), terms)?;
    let corr = SpanElement::new(kernel.clone(), added)?;
    let (fv, fu) = (factored_periods(&v, contours)?, factored_periods(u, contours)?);
    let per_point = zlattice
        .par_iter()
        .map(|zp| -> Result<(f64, f64, f64)> {
            let pv = periods_with(&v, fv.as_ref(), contours, zp)?;
            let pu = periods_with(u, fu.as_ref(), contours, zp)?;
            let fiber = kernel.domain().fiber_domain(zp)?;
            let mut sup = 0.0f64;
            for c in contours {
                for l in c.with_samples(32)?.points() {
                    if fiber.contains(&[l])? {
                        let mut z = zp.clone();
                        z.push(l);
                        sup = sup.max(corr.eval_raw(&z).norm());
                    }
                }
            }
            Ok((pv.iter().map(|c| c.norm()).fold(0.0, f64::max), coeffs.residual(&pu), sup))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_period = per_point.iter().map(|p| p.0).fold(0.0, f64::max);
    let max_sys = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    let sup_corr = per_point.iter().map(|p| p.2).fold(0.0, f64::max);
    if max_period > tol {
        return Err(Error::ResidualPeriod(max_period));
    }
    let report = CorrectionReport {
        added_terms: n_added,
        max_residual_period: max_period,
        max_system_residual: max_sys,
        lattice_points: zlattice.len(),
        sup_correction: sup_corr,
    };
    Ok((v, coeffs, report))
}
