use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point outside domain: {0}")]
    OutsideDomain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("derivative order {order} exceeds supported maximum {max}")]
    UnsupportedOrder { order: u32, max: u32 },
    #[error("truncation bound {bound:.3e} not achievable (tolerance {tol:.3e})")]
    Truncation { bound: f64, tol: f64 },
    #[error("rule order too low: {0}")]
    RuleOrder(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("period matrix singular after {retries} retries (best condition {condition:.3e})")]
    PeriodMatrixSingular { retries: usize, condition: f64 },
    #[error("residual period {0:.3e} above tolerance")]
    ResidualPeriod(f64),
    #[error("path exits domain at {0}")]
    PathExitsDomain(String),
    #[error("path independence violated: discrepancy {0:.3e}")]
    PathDependence(f64),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("uncertified map: {0}")]
    Uncertified(String),
    #[error("Jacobian determinant deviates from 1 by {0:.3e}")]
    JacobianDefect(f64),
    #[error("inverse composition deviates from the identity by {0:.3e}")]
    InverseDefect(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
