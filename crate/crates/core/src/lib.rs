//! Marginal measurement-to-landmark association probabilities from the K best
//! assignments, with a certified bound on the error of every marginal.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod logmath;
pub mod lsap;
pub mod marginals;
pub mod murty;
pub mod oracle;
pub mod par;
pub mod problem;
pub mod random;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::{ellipsoid_distance, extract_center_shape, triangulate_measurement, Ellipsoid};
pub use marginals::{
    approximate_marginals, count_bound, error_bound, marginals, CountBound, FeasibilityMatrix,
};
pub use murty::{kbest, kbest_stream, KBestStream};
pub use par::Execution;
pub use problem::{
    Assignment, AssignmentProblem, MarginalTable, RankedAssignmentSet, Target, DEFAULT_NULL_LOG_LIK,
};
pub use scenario::{build_problem, generate_corpus, Scenario, ScenarioConfig};
