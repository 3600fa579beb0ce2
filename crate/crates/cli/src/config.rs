//! Versioned run configurations.

use std::path::Path;

use qdomain::certify::PullbackSpec;
use qdomain::construct::ConstructConfig;
use qdomain::kernels::selftest::SelftestOptions;
use qdomain::onepoint::AutomorphismSpec;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unsupported config version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Largest relative identity residual accepted.
    pub tolerance: f64,
    pub pullback: PullbackSpec,
    /// Allowed max difference between jet and collocation coefficients.
    pub agreement_tol: f64,
    /// Allowed coefficient error of the converse reconstruction.
    pub converse_tol: f64,
    /// Samples per boundary circle in the CSV point cloud.
    pub boundary_samples: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            tolerance: 1e-6,
            pullback: PullbackSpec::default(),
            agreement_tol: 1e-8,
            converse_tol: 1e-8,
            boundary_samples: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructRun {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub construct: ConstructConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnepointSettings {
    pub samples: usize,
    pub tolerance: f64,
    pub sigma_limit: f64,
    pub battery_degree: u32,
    pub random_polynomials: usize,
    pub boundary_samples: usize,
}

impl Default for OnepointSettings {
    fn default() -> Self {
        OnepointSettings {
            samples: 1_000_000,
            tolerance: 1e-10,
            sigma_limit: 3.0,
            battery_degree: 6,
            random_polynomials: 5,
            boundary_samples: 2000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnepointRun {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub automorphism: AutomorphismSpec,
    #[serde(default)]
    pub settings: OnepointSettings,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestRun {
    pub version: u32,
    #[serde(default)]
    pub suite: SelftestOptions,
}

impl Default for SelftestRun {
    fn default() -> Self {
        SelftestRun {
            version: SCHEMA_VERSION,
            suite: SelftestOptions::default(),
        }
    }
}

/// Overrides from the command line.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
}

impl Overrides {
    pub fn scale(&self) -> Result<f64, ConfigError> {
        let s = self.tolerance_scale.unwrap_or(1.0);
        if !(s.is_finite() && s > 0.0) {
            return Err(ConfigError::Invalid(format!("tolerance scale {s} must be positive")));
        }
        Ok(s)
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {v} must be positive")))
    }
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn check_version(v: u32) -> Result<(), ConfigError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(ConfigError::Version(v))
    }
}

impl ConstructRun {
    /// Validates and applies overrides.
    pub fn prepare(mut self, ov: &Overrides) -> Result<Self, ConfigError> {
        check_version(self.version)?;
        let s = ov.scale()?;
        if let Some(seed) = ov.seed {
            self.seed = seed;
        }
        self.construct.fit.seed = self.seed;
        self.construct
            .domain
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let t = &self.construct.tolerances;
        for (n, v) in [
            ("tolerances.period", t.period),
            ("tolerances.path", t.path),
            ("tolerances.jacobian", t.jacobian),
            ("tolerances.holomorphy", t.holomorphy),
            ("fit.epsilon", self.construct.fit.epsilon),
            ("certify.tolerance", self.certify.tolerance),
            ("certify.agreement_tol", self.certify.agreement_tol),
            ("certify.converse_tol", self.certify.converse_tol),
            ("certify.pullback.check_tol", self.certify.pullback.check_tol),
        ] {
            positive(n, v)?;
        }
        if self.construct.fit.budget == 0 && !self.construct.exact_fit {
            return Err(ConfigError::Invalid("fit.budget must be positive".into()));
        }
        self.construct.tolerances = self.construct.tolerances.scaled(s);
        self.certify.tolerance *= s;
        self.certify.agreement_tol *= s;
        self.certify.converse_tol *= s;
        Ok(self)
    }
}

impl OnepointRun {
    pub fn prepare(mut self, ov: &Overrides) -> Result<Self, ConfigError> {
        check_version(self.version)?;
        let s = ov.scale()?;
        if let Some(seed) = ov.seed {
            self.seed = seed;
        }
        positive("settings.tolerance", self.settings.tolerance)?;
        positive("settings.sigma_limit", self.settings.sigma_limit)?;
        if self.settings.samples == 0 {
            return Err(ConfigError::Invalid("settings.samples must be positive".into()));
        }
        self.automorphism
            .build()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.settings.tolerance *= s;
        Ok(self)
    }
}

impl SelftestRun {
    pub fn prepare(mut self, ov: &Overrides) -> Result<Self, ConfigError> {
        check_version(self.version)?;
        let s = ov.scale()?;
        if let Some(seed) = ov.seed {
            self.suite.seed = seed;
        }
        if self.suite.domains.is_empty() {
            return Err(ConfigError::Invalid("empty selftest domain selection".into()));
        }
        for d in &self.suite.domains {
            qdomain::kernels::selftest::suite_domain(d).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if !(0.0..1.0).contains(&self.suite.margin) {
            return Err(ConfigError::Invalid(format!("suite.margin {} outside [0, 1)", self.suite.margin)));
        }
        for (n, v) in [
            ("suite.reproduce_tol", self.suite.reproduce_tol),
            ("suite.derivative_tol", self.suite.derivative_tol),
            ("suite.symmetry_tol", self.suite.symmetry_tol),
        ] {
            positive(n, v)?;
        }
        self.suite.reproduce_tol *= s;
        self.suite.derivative_tol *= s;
        self.suite.symmetry_tol *= s;
        Ok(self)
    }
}
