//! Exact reference computations used to validate the approximate marginals.

mod enumerate;
mod permanent;

pub use enumerate::{
    count_capped, count_exact, enumerate_all, top_assignments, true_marginals, EnumerationBudget,
    DEFAULT_MAX_ASSIGNMENTS, DEFAULT_TOP_TERMS,
};
pub use permanent::{
    log_permanent_from_logs, permanent_marginals, permanent_marginals_with, permanent_ryser,
    square_completion_logs, SquareMatrix, MAX_RYSER_DIM,
};
