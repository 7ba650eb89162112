//! Feasibility-preserving convex relaxations of nonconvex quadratic programs
//!
//! ```text
//! minimize  x'Qx + 2c'x   subject to  Ax = b, x >= 0
//! ```
//!
//! The crate lifts an instance to `(n+1)x(n+1)` matrix variables over the
//! doubly nonnegative cone or the cone of PSD matrices with a nonnegative
//! row 0, solves the lifted problems with a first-order splitting method,
//! evaluates the induced convex underestimator, and checks the structural
//! conditions under which the relaxation is exact, trivial or unbounded.
//! A face-enumeration oracle supplies exact optima at desk scale.

// `!(x > 0.0)` style tests are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod conic;
pub mod error;
pub mod generators;
pub mod instance;
pub mod lift;
pub mod numerics;
pub mod oracle;
pub mod report;

pub use analysis::{
    analyze_recession_cone, check_copositivity_desk_scale, check_psd_on_nullspace, detect_unbounded, sample_envelope,
    write_envelope_csv, CopositivityReport, EnvelopeRow, FinitenessCertificate, NullspaceCurvatureReport,
    RecessionReport, UnboundednessStatus, UnboundednessVerdict,
};
pub use conic::{
    evaluate_underestimator, recession_certificate_search, solve_relaxation, verify_certificate, CertificateMode,
    CertificateOutcome, RecessionCertificate, RelaxationContext, RelaxationResult, RelaxationStatus, SolveOptions,
};
pub use error::{QpError, Result};
pub use generators::{horn_family, horn_instance, random_instance, GeneratedInstance, HornFamilyParams, RandomKind};
pub use instance::{index_sets, load_vector, IndexSets, LoadOptions, QpInstance};
pub use lift::{
    construct_lifted_from_mixture, lift_instance, validate_lifted_point, ConeKind, LiftedPoint, LiftedProblem,
    MixtureCertificate, ValidationReport,
};
pub use numerics::{nullspace_basis, project_cone, sym_eigen, AffineProjector, ConeProjection, EigenDecomposition};
pub use oracle::{
    enumerate_vertices, global_solve, minimize_quad_over_polytope, verify_local_minimizer, Bounds, KktCertificate,
    LocalMinVerdict, OracleOptions, OracleResult, OracleStatus,
};
pub use report::{compare_report, Report};
