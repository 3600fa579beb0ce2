//! One PASS/FAIL line per acceptance criterion; exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C;
use qdomain::certify::{certify_identity, pullback_graph, pullback_identity, Battery, PullbackSpec, QuadNode, QuadratureData};
use qdomain::construct::construct_quadrature_domain;
use qdomain::domains::{Contour, Domain, MultiIndex, RuleSpec};
use qdomain::kernels::selftest::{kernels_selftest, SelftestOptions};
use qdomain::kernels::KernelFunction;
use qdomain_cli::config::{self, ConstructRun, OnepointRun, Overrides};
use qdomain_cli::report::{ConstructResults, Results, RunReport};
use qdomain_cli::run::{cmd_construct, cmd_onepoint};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn construct_run(name: &str) -> (RunReport, f64) {
    let run: ConstructRun = config::read(&config_path(name)).unwrap();
    let run = run.prepare(&Overrides::default()).unwrap();
    let t = Instant::now();
    let out = cmd_construct(&run, 1.0);
    (out.report, t.elapsed().as_secs_f64())
}

fn construct_results(r: &RunReport) -> &ConstructResults {
    match &r.results {
        Results::Construct(c) => c,
        _ => panic!("not a construct report"),
    }
}

struct Line {
    id: usize,
    pass: bool,
    detail: String,
}

fn line(id: usize, pass: bool, detail: String) -> Line {
    let l = Line { id, pass, detail };
    println!("criterion {:>2}: {}  {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    l
}

fn kernel_suite() -> Line {
    let t = Instant::now();
    let r = kernels_selftest(&SelftestOptions::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let worst = r.domains.iter().map(|d| d.max_reproduce_error).fold(0.0, f64::max);
    let counts: Vec<usize> = r.domains.iter().map(|d| d.functions).collect();
    let names: Vec<&str> = r.domains.iter().map(|d| d.name.as_str()).collect();
    let ok = r.pass
        && worst <= 1e-8
        && secs < 30.0
        && counts.iter().all(|&c| c >= 10)
        && names == ["disc", "annulus", "ball", "polydisc"];
    line(
        1,
        ok,
        format!("max reproducing error {worst:.2e} over {names:?}, functions per domain {counts:?}, {secs:.1} s"),
    )
}

fn mean_value() -> Line {
    let mut worst = 0.0f64;
    let mut count = 0;
    for (d, vol) in [
        (Domain::unit_disc(), PI),
        (Domain::ball(2).unwrap(), PI * PI / 2.0),
        (Domain::polydisc(vec![1.0, 1.0]).unwrap(), PI * PI),
    ] {
        let bat = Battery::monomials(d.dim(), 6);
        let vals = pullback_identity(&d, &bat.functions, RuleSpec::new(8, 16), 1e-12).unwrap();
        for (h, v) in bat.functions.iter().zip(&vals) {
            let expect = if h.degree() == Some(0) { vol } else { 0.0 };
            worst = worst.max((v.value - expect).norm() / v.abs_integral);
            count += 1;
        }
    }
    line(2, worst <= 1e-10, format!("max relative residual {worst:.2e} over {count} monomial integrals"))
}

fn annulus_periods() -> Line {
    let r = 0.5f64;
    let k = KernelFunction::new(Domain::std_annulus(r).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for j in 0..10 {
        let zeta = C::from_polar(0.55 + 0.04 * j as f64, 0.7 * j as f64 - 2.0);
        let rho = 0.55 + 0.035 * ((j * 7) % 10) as f64;
        let c = Contour::new(C::new(0.0, 0.0), rho, 512).unwrap();
        let got = c.integrate(|z| k.eval(&[z], &[zeta]).unwrap());
        let expect = C::i() / (zeta.conj() * (1.0 / r).ln());
        worst = worst.max((got - expect).norm());
    }
    line(3, worst <= 1e-12, format!("max |period − residue formula| {worst:.2e} over 10 (ζ, ρ)"))
}

fn annulus_pipeline(r: &RunReport, secs: f64) -> Line {
    let c = construct_results(r);
    let fit = c.fit.as_ref().map(|f| f.sup_error).unwrap_or(f64::INFINITY);
    let period = c.checks.as_ref().map(|k| k.max_residual_period).unwrap_or(f64::INFINITY);
    let inj = c.injectivity.as_ref().is_some_and(|i| i.certified());
    let (resid, held) = c.identity.as_ref().map_or((f64::INFINITY, 0), |i| {
        (i.max_relative, i.entries.iter().filter(|e| e.held_out).count())
    });
    let ok = r.passed() && fit <= 0.05 && period <= 1e-10 && inj && resid <= 1e-6 && held >= 20 && secs < 120.0;
    line(
        4,
        ok,
        format!(
            "sup|u−1| {fit:.2e}, periods {period:.2e}, injectivity {inj}, residual {resid:.2e} with {held} held out, {secs:.1} s"
        ),
    )
}

fn exact_fit() -> Line {
    let run: ConstructRun = config::read(&config_path("disc_disc_exact.json")).unwrap();
    let run = run.prepare(&Overrides::default()).unwrap();
    let c = construct_quadrature_domain(&run.construct).unwrap();
    let mut ident = 0.0f64;
    for j in 0..16 {
        let z = [C::from_polar(0.9 * (j % 4) as f64 / 4.0, j as f64), C::from_polar(0.95 * (j / 4) as f64 / 4.0, 2.0 * j as f64)];
        ident = ident.max((c.graph.g(&z).unwrap() - z[1]).norm());
    }
    let bat = Battery::monomials(2, 6);
    let vals = pullback_graph(&c.graph, &c.injectivity, &bat.functions, &PullbackSpec::default()).unwrap();
    let qd = QuadratureData {
        nodes: vec![QuadNode {
            point: vec![C::new(0.0, 0.0); 2],
            source: vec![C::new(0.0, 0.0); 2],
            coeffs: vec![(MultiIndex::zeros(2), C::new(PI * PI, 0.0))],
        }],
        order: 1,
        merged: 0,
    };
    let rep = certify_identity(&qd, &bat, &vals, |_| false, "pullback", 1e-10).unwrap();
    line(
        5,
        c.certified() && ident <= 1e-13 && rep.pass,
        format!("sup |g − z₂| {ident:.2e}, residual against π²·h(0) {:.2e}", rep.max_relative),
    )
}

fn hartogs(r: &RunReport) -> Line {
    let resid = construct_results(r).identity.as_ref().map_or(f64::INFINITY, |i| i.max_relative);
    line(6, r.passed() && resid <= 1e-6, format!("status {:?}, residual {resid:.2e}", r.status))
}

fn henon() -> Line {
    let run: OnepointRun = config::read(&config_path("henon.json")).unwrap();
    let run = run.prepare(&Overrides::default()).unwrap();
    let t = Instant::now();
    let out = cmd_onepoint(&run, 1.0);
    let secs = t.elapsed().as_secs_f64();
    let Results::Onepoint(res) = &out.report.results else { unreachable!() };
    let Some(cert) = &res.certificate else {
        return line(7, false, format!("no certificate: {:?}", out.report.error));
    };
    let monomials = cert.exact.entries.iter().filter(|e| e.label.starts_with("monomial")).count();
    let ok = out.report.passed()
        && (cert.coefficient - PI * PI / 2.0).abs() < 1e-14
        && cert.exact.max_relative <= 1e-10
        && monomials >= 28
        && cert.monte_carlo.samples >= 1_000_000
        && cert.monte_carlo.max_deviation <= 3.0
        && secs < 60.0;
    line(
        7,
        ok,
        format!(
            "exact residual {:.2e} over {monomials} monomials, Monte Carlo {:.2}σ at {} samples, {secs:.1} s",
            cert.exact.max_relative, cert.monte_carlo.max_deviation, cert.monte_carlo.samples
        ),
    )
}

fn converse(r: &RunReport) -> Line {
    let e = construct_results(r).converse.as_ref().map_or(f64::INFINITY, |c| c.coefficient_error);
    line(8, e <= 1e-8, format!("max coefficient error {e:.2e}"))
}

fn cross_agreement(reports: &[(&str, &RunReport)]) -> Line {
    let mut worst = 0.0f64;
    let mut parts = vec![];
    for (name, r) in reports {
        let d = construct_results(r).collocation.as_ref().map_or(f64::INFINITY, |c| c.coefficient_distance);
        worst = worst.max(d);
        parts.push(format!("{name} {d:.1e}"));
    }
    line(9, worst <= 1e-8, format!("jet vs collocation: {}", parts.join(", ")))
}

fn determinism(first: &RunReport) -> Line {
    let (second, _) = construct_run("disc_annulus.json");
    let a = serde_json::to_string(first).unwrap();
    let b = serde_json::to_string(&second).unwrap();
    line(10, a == b, format!("two seeded runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn main() {
    let mut lines = vec![kernel_suite(), mean_value(), annulus_periods()];
    let (annulus, secs) = construct_run("disc_annulus.json");
    lines.push(annulus_pipeline(&annulus, secs));
    lines.push(exact_fit());
    let (hart, _) = construct_run("hartogs.json");
    lines.push(hartogs(&hart));
    lines.push(henon());
    lines.push(converse(&annulus));
    let (exact, _) = construct_run("disc_disc_exact.json");
    lines.push(cross_agreement(&[("disc×annulus", &annulus), ("hartogs", &hart), ("disc×disc", &exact)]));
    lines.push(determinism(&annulus));
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria PASS", lines.len());
    } else {
        println!("acceptance: FAIL on {failed:?}");
        std::process::exit(1);
    }
}
