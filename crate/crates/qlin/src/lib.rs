//! Numerics for linear quantum stochastic systems in quadrature form:
//! physical realizability checks, least mean squares estimator synthesis via
//! Riccati flows, coherent observers built by vacuum-noise augmentation, and
//! an independent joint-moment oracle.
//!
//! Start with the runnable examples (`cargo run --example ...`) or the
//! `qobs` binary for scenario-file driven use.

pub mod error;
pub mod estimator;
pub mod filter;
pub mod integrate;
pub mod model;
pub mod moments;
pub mod realizability;
pub mod scenario;
pub mod skew;

pub use error::{QlinError, Result};
pub use estimator::{
    check_estimator_pr, make_coherent_observer, CoherentObserver, EstimatorPRCase,
    EstimatorPRReport,
};
pub use filter::{
    audit_innovations, classical_kalman_reduce, optimal_gain, solve_steady_riccati,
    solve_steady_riccati_unchecked, EstimatorSynthesis, InnovationsAudit, SolverConfig,
    SteadyStatus,
};
pub use model::{
    make_canonical_theta, make_degenerate_theta, CommutationSpec, NoiseSpec,
    QuantumLinearSystem, ThetaKind,
};
pub use moments::{
    assemble_joint, extract_error_covariance, propagate_moments, JointMomentState, JointSystem,
};
pub use realizability::{
    check_nondemolition, check_plant_pr, random_pr_plant, RealizabilityReport,
};
pub use scenario::Scenario;
