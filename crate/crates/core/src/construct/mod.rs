//! Construction of the quadrature-domain map: fit, period correction, fiber antiderivative,
//! injectivity.

mod graph;
mod inject;
mod periods;
mod pipeline;

pub use graph::{fiber_base_point, fiber_path, FiberSlice, FiberTable, GraphMap, PathKind, Segment};
pub use inject::{base_lattice, certify_fiber, injectivity_certificate, ClosureMap, FiberMap, CertificateStatus, FiberCertificate, InjectivityOptions, InjectivityReport};
pub use periods::{
    build_period_matrix, compute_periods, correct_periods, default_zetas, CorrectionCoefficients, CorrectionReport,
    PeriodMatrix,
};
pub use pipeline::{
    construct_quadrature_domain, ConstructChecks, ConstructConfig, ConstructTolerances, Construction, GraphMapRecord, KernelSpec,
};
