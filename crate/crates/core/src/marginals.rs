//! Approximate marginal association probabilities and their certified error bound.
//!
//! Marginals are normalised sums over the enumerated set only. The bound
//! caps the mass that was not enumerated: every missing assignment is no more
//! likely than the last one enumerated, and there are at most
//! `count_bound - K` of them.

use crate::logmath::{ln_factorial, sigmoid};
use crate::murty::kbest;
use crate::problem::{AssignmentProblem, MarginalTable, RankedAssignmentSet};

/// 0/1 pattern of the null-augmented cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityMatrix {
    n_meas: usize,
    n_land: usize,
    zero_one: Vec<bool>,
    /// Feasible landmarks of each row plus its own null.
    pub row_degrees: Vec<usize>,
}

impl FeasibilityMatrix {
    pub fn from_problem(p: &AssignmentProblem) -> Self {
        let (n, m) = (p.n_meas(), p.n_land());
        let cols = n + m;
        let mut zero_one = vec![false; n * cols];
        let mut row_degrees = vec![0; n];
        for k in 0..n {
            for j in p.feasible_landmarks(k) {
                zero_one[k * cols + j] = true;
            }
            zero_one[k * cols + m + k] = true;
            row_degrees[k] = p.feasible_landmarks(k).count() + 1;
        }
        Self {
            n_meas: n,
            n_land: m,
            zero_one,
            row_degrees,
        }
    }

    /// Builds from an `n_meas × n_land` landmark pattern; null columns are always feasible.
    pub fn from_pattern(n_meas: usize, n_land: usize, landmark_ok: &[bool]) -> Self {
        assert_eq!(landmark_ok.len(), n_meas * n_land);
        let log_lik = landmark_ok
            .iter()
            .map(|&ok| if ok { 0.0 } else { f64::NEG_INFINITY })
            .collect();
        let p = AssignmentProblem::with_uniform_null(n_meas, n_land, log_lik, 0.0)
            .expect("pattern problems are valid");
        Self::from_problem(&p)
    }

    pub fn n_meas(&self) -> usize {
        self.n_meas
    }

    pub fn n_land(&self) -> usize {
        self.n_land
    }

    pub fn is_one(&self, k: usize, col: usize) -> bool {
        self.zero_one[k * (self.n_meas + self.n_land) + col]
    }
}

/// Upper bound on the number of assignments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountBound {
    /// Natural log of the bound.
    pub ln: f64,
    /// The bound as an integer when it is below 2^53.
    pub exact: Option<u64>,
}

const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

impl CountBound {
    fn from_integer(n: u64) -> Self {
        Self {
            ln: (n as f64).ln(),
            exact: Some(n),
        }
    }

    /// Floors a real-valued bound given in log space; valid because counts are integers.
    fn from_ln(ln: f64) -> Self {
        if ln.is_finite() && ln < EXACT_LIMIT.ln() - 1.0 {
            // slack absorbs rounding in ln/exp without undercutting the true count
            let n = (ln.exp() * (1.0 + 1e-9)).floor() as u64;
            Self::from_integer(n.max(1))
        } else {
            Self { ln, exact: None }
        }
    }
}

/// `min(∏ (f_k + 1), Brègman–Minc)` where the Brègman–Minc bound is applied to the
/// square completion (m all-ones rows appended) and divided by `m!`.
pub fn count_bound(f: &FeasibilityMatrix) -> CountBound {
    let (n, m) = (f.n_meas, f.n_land);

    let independent = f
        .row_degrees
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .filter(|&v| (v as f64) < EXACT_LIMIT)
        .map(CountBound::from_integer)
        .unwrap_or_else(|| CountBound {
            ln: f.row_degrees.iter().map(|&d| (d as f64).ln()).sum(),
            exact: None,
        });

    let d = (n + m) as u64;
    let real_rows: f64 = f
        .row_degrees
        .iter()
        .map(|&r| ln_factorial(r as u64) / r as f64)
        .sum();
    let dummy_rows = if m > 0 {
        m as f64 * ln_factorial(d) / d as f64
    } else {
        0.0
    };
    let minc = CountBound::from_ln(real_rows + dummy_rows - ln_factorial(m as u64));

    match (independent.exact, minc.exact) {
        (Some(a), Some(b)) => CountBound::from_integer(a.min(b)),
        _ if minc.ln < independent.ln => minc,
        _ => independent,
    }
}

/// Association error bound γ ∈ [0, 1] for a ranked set.
pub fn error_bound(ranked: &RankedAssignmentSet, f: &FeasibilityMatrix) -> f64 {
    if ranked.exhausted || ranked.is_empty() {
        return 0.0;
    }
    let k = ranked.len() as u64;
    let bound = count_bound(f);
    let ln_remaining = match bound.exact {
        Some(n) => match n.saturating_sub(k) {
            0 => return 0.0,
            rem => (rem as f64).ln(),
        },
        None if !bound.ln.is_finite() => return 1.0,
        // ln(N - K) = ln N + ln(1 - K/N), N > 2^53 > K
        None => bound.ln + (-(k as f64) * (-bound.ln).exp()).ln_1p(),
    };
    let tail = ranked.tail_log_prob().expect("non-empty");
    let ln_beta = ln_remaining + tail;
    sigmoid(ln_beta - ranked.total_log_mass())
}

/// Normalised marginals over the enumerated set, with γ filled in.
pub fn marginals(p: &AssignmentProblem, ranked: &RankedAssignmentSet) -> MarginalTable {
    let (n, m) = (p.n_meas(), p.n_land());
    let cols = m + 1;
    let mut w = vec![0.0; n * cols];
    let Some(first) = ranked.entries.first() else {
        return MarginalTable::from_parts(n, m, w);
    };
    // The head is the maximum, so every shifted weight is in (0, 1].
    let max = first.log_prob();
    let mut total = 0.0;
    for a in &ranked.entries {
        let weight = (a.log_prob() - max).exp();
        total += weight;
        for (k, t) in a.targets().iter().enumerate() {
            w[k * cols + t.column(m)] += weight;
        }
    }
    for v in &mut w {
        *v /= total;
    }
    let mut table = MarginalTable::from_parts(n, m, w);
    table.k_used = ranked.len();
    table.total_log_mass = max + total.ln();
    table.gamma = error_bound(ranked, &FeasibilityMatrix::from_problem(p));
    table
}

/// Enumerates the `k` likeliest assignments and returns their marginals.
pub fn approximate_marginals(p: &AssignmentProblem, k: usize) -> MarginalTable {
    marginals(p, &kbest(p, k))
}
