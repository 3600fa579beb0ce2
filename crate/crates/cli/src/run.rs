//! Pipeline orchestration for each subcommand.

use std::time::Instant;

use num_complex::Complex;
use qdomain::certify::{
    certify_identity, coefficient_distance, extract_by_collocation, extract_quadrature_data, in_monomial_ranges,
    pullback_graph, reconstruct_jacobian, Battery,
};
use qdomain::construct::{base_lattice, construct_quadrature_domain, Construction, FiberMap};
use qdomain::domains::Domain;
use qdomain::kernels::selftest::kernels_selftest;
use qdomain::onepoint::{certify_onepoint, OnepointOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConstructRun, OnepointRun, SelftestRun, SCHEMA_VERSION};
use crate::report::*;

type C = Complex<f64>;

/// Everything a subcommand produces.
pub struct RunOutput {
    pub report: RunReport,
    pub timing: Timing,
    pub cloud: Option<PointCloud>,
}

struct Stages {
    list: Vec<StageOutcome>,
    notes: Vec<String>,
    failed: Option<(String, String)>,
    timing: Timing,
    clock: Instant,
    start: Instant,
}

impl Stages {
    fn new() -> Self {
        let now = Instant::now();
        Stages {
            list: vec![],
            notes: vec![],
            failed: None,
            timing: Timing::default(),
            clock: now,
            start: now,
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timing.stages.push((stage.to_string(), (now - self.clock).as_secs_f64()));
        self.clock = now;
    }

    fn pass(&mut self, stage: &str, detail: Option<String>) {
        self.lap(stage);
        self.list.push(StageOutcome {
            stage: stage.into(),
            pass: true,
            detail,
        });
    }

    fn fail(&mut self, stage: &str, msg: String) {
        self.lap(stage);
        self.list.push(StageOutcome {
            stage: stage.into(),
            pass: false,
            detail: Some(msg.clone()),
        });
        self.failed = Some((stage.into(), msg));
    }

    /// Records an outcome whose time was already booked by [`Stages::lap`].
    fn record(&mut self, stage: &str, pass: bool, detail: String) -> bool {
        if !pass {
            self.failed = Some((stage.into(), detail.clone()));
        }
        self.list.push(StageOutcome {
            stage: stage.into(),
            pass,
            detail: Some(detail),
        });
        pass
    }

    /// Records a boolean check; true when the run may continue.
    fn check(&mut self, stage: &str, ok: bool, detail: String) -> bool {
        if ok {
            self.pass(stage, Some(detail));
        } else {
            self.fail(stage, detail);
        }
        ok
    }

    fn finish(mut self, command: &'static str, seed: u64, scale: f64, config: serde_json::Value, results: Results) -> (RunReport, Timing) {
        self.timing.total_seconds = self.start.elapsed().as_secs_f64();
        let (failed_stage, error) = match self.failed {
            Some((s, e)) => (Some(s), Some(e)),
            None => (None, None),
        };
        let report = RunReport {
            schema: REPORT_SCHEMA,
            schema_version: SCHEMA_VERSION,
            command,
            seed,
            tolerance_scale: scale,
            config,
            status: if failed_stage.is_none() { Status::Pass } else { Status::Fail },
            failed_stage,
            error,
            stages: self.list,
            notes: self.notes,
            results,
        };
        (report, self.timing)
    }
}

fn echo<T: serde::Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

/// Fiber boundary circles over the base lattice, with their images (z′, g).
fn construct_cloud(c: &Construction, run: &ConstructRun) -> PointCloud {
    let d = c.graph.domain();
    let n = d.dim();
    let mut cloud = PointCloud {
        dim: n,
        rows: vec![],
    };
    let Ok(base) = d.base_domain() else { return cloud };
    let Ok(lattice) = base_lattice(&base, &run.construct.injectivity) else {
        return cloud;
    };
    let m = run.certify.boundary_samples.max(4);
    for zp in lattice {
        let circles: Vec<(C, f64)> = match d.fiber_domain(&zp) {
            Ok(Domain::Disc { center, radius }) => vec![(center, radius)],
            Ok(Domain::Annulus { center, inner, outer }) => vec![(center, outer), (center, inner)],
            _ => continue,
        };
        let ls: Vec<C> = circles
            .iter()
            .flat_map(|&(c, r)| (0..m).map(move |k| c + C::from_polar(r, std::f64::consts::TAU * k as f64 / m as f64)))
            .collect();
        let Ok(vals) = c.graph.fiber_values(&zp, &ls) else { continue };
        for (l, (g, _)) in ls.iter().zip(vals) {
            let mut src = zp.clone();
            src.push(*l);
            let mut img = zp.clone();
            img.push(g);
            cloud.push_pair(src, img);
        }
    }
    cloud
}

pub fn cmd_construct(run: &ConstructRun, scale: f64) -> RunOutput {
    let mut st = Stages::new();
    let mut res = ConstructResults::default();
    let mut cloud = None;
    'run: {
        let c = match construct_quadrature_domain(&run.construct) {
            Ok(c) => c,
            Err(e) => {
                st.fail(e.stage().unwrap_or("construct"), e.to_string());
                break 'run;
            }
        };
        for (stage, secs) in &c.timings {
            st.timing.stages.push((format!("construct.{stage}"), *secs));
        }
        st.clock = Instant::now();
        res.fit = Some(c.fit.clone());
        res.period_matrix = Some(PeriodSummary {
            size: c.period_matrix.size(),
            zetas: c.period_matrix.zetas.clone(),
            condition: c.period_matrix.condition,
            retries: c.period_matrix.retries,
        });
        res.correction = Some(c.correction.clone());
        res.checks = Some(c.checks.clone());
        res.injectivity = Some(c.injectivity.clone());
        res.graph_map = Some(c.graph.record());
        cloud = Some(construct_cloud(&c, run));
        let eps = run.construct.fit.epsilon;
        if !st.check(
            "fit",
            c.checks.fit_within_epsilon,
            format!("sup |u − 1| = {:.3e} (ε = {eps})", c.fit.sup_error),
        ) {
            break 'run;
        }
        let ptol = run.construct.tolerances.period;
        if !st.check(
            "periods",
            c.checks.max_residual_period <= ptol,
            format!("max corrected period {:.3e} on the base lattice", c.checks.max_residual_period),
        ) {
            break 'run;
        }
        if !st.check(
            "injectivity",
            c.certified(),
            format!(
                "{:?} over {} fibers, min separation {:.3e}",
                c.injectivity.status,
                c.injectivity.fibers,
                c.injectivity.min_separation
            ),
        ) {
            break 'run;
        }
        let qd = match extract_quadrature_data(&c.graph) {
            Ok(q) => q,
            Err(e) => {
                st.fail("extract", e.to_string());
                break 'run;
            }
        };
        st.pass("extract", Some(format!("{} nodes, order {}", qd.nodes.len(), qd.order)));
        res.quadrature = Some(qd.clone());

        let spec = &run.certify.pullback;
        let (qc, crep) = match extract_by_collocation(&c.graph, &c.injectivity, &qd, spec) {
            Ok(v) => v,
            Err(e) => {
                st.fail("collocation", e.to_string());
                break 'run;
            }
        };
        let dist = coefficient_distance(&qd, &qc);
        let ranges = crep.basis.clone();
        res.collocation = Some(CollocationSummary {
            report: crep,
            coefficient_distance: dist,
        });
        if !st.check(
            "collocation",
            dist <= run.certify.agreement_tol,
            format!("jet vs collocation coefficients differ by {dist:.3e}"),
        ) {
            break 'run;
        }

        let battery = Battery::standard(c.graph.domain());
        let vals = match pullback_graph(&c.graph, &c.injectivity, &battery.functions, spec) {
            Ok(v) => v,
            Err(e) => {
                st.fail("pullback", e.to_string());
                break 'run;
            }
        };
        st.pass("pullback", Some(format!("{} battery integrals", vals.len())));
        let identity = match certify_identity(&qd, &battery, &vals, in_monomial_ranges(&ranges), "pullback", run.certify.tolerance) {
            Ok(r) => r,
            Err(e) => {
                st.fail("identity", e.to_string());
                break 'run;
            }
        };
        let ok = identity.pass;
        let detail = format!(
            "max relative residual {:.3e} (in basis {:.3e}, held out {:.3e}) over {} functions",
            identity.max_relative, identity.max_relative_in_basis, identity.max_relative_held_out, identity.battery_size
        );
        res.identity = Some(identity);
        if !st.check("identity", ok, detail) {
            break 'run;
        }
        match reconstruct_jacobian(&qd, &c.graph) {
            Ok((_, rr)) => {
                let ok = rr.coefficient_error <= run.certify.converse_tol;
                let detail = format!("coefficient error {:.3e}", rr.coefficient_error);
                res.converse = Some(rr);
                st.check("converse", ok, detail);
            }
            Err(e) => st.fail("converse", e.to_string()),
        }
    }
    let (report, timing) = st.finish("construct", run.seed, scale, echo(run), Results::Construct(Box::new(res)));
    RunOutput { report, timing, cloud }
}

/// Points f⁻¹(y) for y on the unit sphere, paired with y.
fn onepoint_cloud(map: &qdomain::onepoint::PolyAutomorphism, samples: usize, seed: u64) -> PointCloud {
    let n = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1e);
    let mut cloud = PointCloud {
        dim: n,
        rows: vec![],
    };
    for _ in 0..samples {
        let mut y: Vec<C> = (0..n)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let r = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if r < 1e-3 {
            continue;
        }
        for c in y.iter_mut() {
            *c /= r;
        }
        cloud.push_pair(map.apply_inverse(&y), y);
    }
    cloud
}

pub fn cmd_onepoint(run: &OnepointRun, scale: f64) -> RunOutput {
    let mut st = Stages::new();
    let mut res = OnepointResults::default();
    let mut cloud = None;
    'run: {
        let map = match run.automorphism.build() {
            Ok(m) => m,
            Err(e) => {
                st.fail("automorphism", e.to_string());
                break 'run;
            }
        };
        let checks = map.checks();
        res.automorphism_checks = Some(checks.clone());
        st.lap("checks");
        let inv = format!("max defect {:.3e} over {} points", checks.inverse_defect, checks.points);
        if !st.record("inverse", checks.inverse_ok(), inv) {
            break 'run;
        }
        let jac = format!(
            "symbolic {:.3e}, numeric {:.3e}",
            checks.symbolic_jacobian_defect, checks.numeric_jacobian_defect
        );
        if !st.record("jacobian", checks.jacobian_ok(), jac) {
            break 'run;
        }
        cloud = Some(onepoint_cloud(&map, run.settings.boundary_samples, run.seed));
        let s = &run.settings;
        let battery = Battery::polynomial(map.dim(), s.battery_degree, s.random_polynomials);
        let opts = OnepointOptions {
            samples: s.samples,
            seed: run.seed,
            tolerance: s.tolerance,
            sigma_limit: s.sigma_limit,
            ..OnepointOptions::default()
        };
        let rep = match certify_onepoint(&map, &battery, &opts) {
            Ok(r) => r,
            Err(e) => {
                st.fail(e.stage().unwrap_or("onepoint"), e.to_string());
                break 'run;
            }
        };
        st.lap("certify");
        st.record("rule", true, format!("pure monomial integrals ≤ {:.3e}", rep.rule.symmetry_max));
        let ex = rep.exact.pass;
        let ex_detail = format!("max relative residual {:.3e}", rep.exact.max_relative);
        let mc = rep.monte_carlo.pass;
        let mc_detail = format!(
            "max deviation {:.2} standard errors over {} samples",
            rep.monte_carlo.max_deviation, rep.monte_carlo.samples
        );
        st.notes.extend(rep.notes.iter().cloned());
        res.certificate = Some(rep);
        if st.record("exact_pullback", ex, ex_detail) {
            st.record("monte_carlo", mc, mc_detail);
        }
    }
    let (report, timing) = st.finish("onepoint", run.seed, scale, echo(run), Results::Onepoint(Box::new(res)));
    RunOutput { report, timing, cloud }
}

pub fn cmd_selftest(run: &SelftestRun, scale: f64) -> RunOutput {
    let mut st = Stages::new();
    let rep = match kernels_selftest(&run.suite) {
        Ok(r) => {
            for d in &r.domains {
                let detail = format!(
                    "symmetry {:.2e}, reproducing {:.2e}, derivatives {:.2e}",
                    d.max_symmetry_defect, d.max_reproduce_error, d.max_derivative_error
                );
                st.check(&format!("kernel.{}", d.name), d.pass, detail);
            }
            if let Some(d) = &r.degradation {
                st.notes.push(d.note.clone());
            }
            Some(r)
        }
        Err(e) => {
            st.fail("selftest", e.to_string());
            None
        }
    };
    let (report, timing) = st.finish("selftest", run.suite.seed, scale, echo(run), Results::Selftest(Box::new(rep)));
    RunOutput {
        report,
        timing,
        cloud: None,
    }
}
