//! Run reports, timing records and point clouds.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use qdomain::certify::{CollocationReport, QuadratureData, ReconstructReport, ResidualReport};
use qdomain::construct::{ConstructChecks, CorrectionReport, GraphMapRecord, InjectivityReport};
use qdomain::kernels::selftest::SelftestReport;
use qdomain::onepoint::{AutomorphismChecks, OnepointReport};
use qdomain::span::FitReport;
use serde::Serialize;

type C = Complex<f64>;

pub const REPORT_SCHEMA: &str = "qdomain-run-report";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageOutcome {
    pub stage: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodSummary {
    pub size: usize,
    pub zetas: Vec<C>,
    pub condition: f64,
    pub retries: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollocationSummary {
    pub report: CollocationReport,
    /// max |c_jet − c_collocation| over all coefficients.
    pub coefficient_distance: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConstructResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period_matrix: Option<PeriodSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<ConstructChecks>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injectivity: Option<InjectivityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_map: Option<GraphMapRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collocation: Option<CollocationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converse: Option<ReconstructReport>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OnepointResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub automorphism_checks: Option<AutomorphismChecks>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<OnepointReport>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Results {
    Construct(Box<ConstructResults>),
    Onepoint(Box<OnepointResults>),
    Selftest(Box<Option<SelftestReport>>),
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub config: serde_json::Value,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub stages: Vec<StageOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub results: Results,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Wall-clock seconds per stage; kept out of the report so reports stay reproducible.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
}

/// Source points and their images, one row each.
#[derive(Clone, Debug, Default)]
pub struct PointCloud {
    pub dim: usize,
    pub rows: Vec<(&'static str, Vec<C>)>,
}

impl PointCloud {
    pub fn push_pair(&mut self, source: Vec<C>, image: Vec<C>) {
        self.rows.push(("source", source));
        self.rows.push(("image", image));
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tag");
        for i in 1..=self.dim {
            let _ = write!(s, ",re_z{i},im_z{i}");
        }
        s.push('\n');
        for (tag, z) in &self.rows {
            s.push_str(tag);
            for c in z {
                let _ = write!(s, ",{},{}", c.re, c.im);
            }
            s.push('\n');
        }
        s
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const POINTS_FILE: &str = "points.csv";

pub fn write_outputs(dir: &Path, report: &RunReport, timing: &Timing, cloud: Option<&PointCloud>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(REPORT_FILE), json + "\n")?;
    let t = serde_json::to_string_pretty(timing).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(TIMING_FILE), t + "\n")?;
    if let Some(c) = cloud {
        std::fs::write(dir.join(POINTS_FILE), c.to_csv())?;
    }
    Ok(())
}
