//! Domain types shared by every stage: the association problem, assignments,
//! ranked assignment sets and marginal tables.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Where a measurement is sent by an assignment.
///
/// The derived order puts every landmark before `Null`, which is the same
/// order as the marginal-table columns (null is the last column).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Landmark(usize),
    Null,
}

impl Target {
    /// Column of this target in a table with `n_land` landmark columns and a trailing null column.
    #[inline]
    pub fn column(self, n_land: usize) -> usize {
        match self {
            Target::Landmark(j) => j,
            Target::Null => n_land,
        }
    }

    /// Inverse of [`Target::column`].
    #[inline]
    pub fn from_column(col: usize, n_land: usize) -> Self {
        if col < n_land {
            Target::Landmark(col)
        } else {
            Target::Null
        }
    }

    /// Encoding used by the `truth` field of problem files: landmark index, or -1 for null.
    pub fn to_code(self) -> i64 {
        match self {
            Target::Landmark(j) => j as i64,
            Target::Null => -1,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Landmark(j) => write!(f, "{j}"),
            Target::Null => f.write_str("null"),
        }
    }
}

/// Log-likelihoods of every measurement/landmark pairing plus a null option per measurement.
///
/// Infeasible (gated) pairs carry `-inf`. Null log-likelihoods are always finite,
/// so every row has at least one feasible target.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentProblem {
    n_meas: usize,
    n_land: usize,
    log_lik: Vec<f64>,
    null_log_lik: Vec<f64>,
    truth: Option<Vec<Target>>,
    meta: BTreeMap<String, serde_json::Value>,
}

/// Null log-likelihood used when none is configured.
pub const DEFAULT_NULL_LOG_LIK: f64 = -8.0;

impl AssignmentProblem {
    /// Builds a problem from a row-major `n_meas × n_land` log-likelihood matrix.
    pub fn new(
        n_meas: usize,
        n_land: usize,
        log_lik: Vec<f64>,
        null_log_lik: Vec<f64>,
    ) -> Result<Self> {
        if log_lik.len() != n_meas * n_land {
            return Err(Error::InvalidProblem(format!(
                "log_lik has {} entries, expected {n_meas}x{n_land}",
                log_lik.len()
            )));
        }
        if null_log_lik.len() != n_meas {
            return Err(Error::InvalidProblem(format!(
                "null_log_lik has {} entries, expected {n_meas}",
                null_log_lik.len()
            )));
        }
        if let Some(i) = log_lik
            .iter()
            .position(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(Error::InvalidProblem(format!(
                "log_lik[{}][{}] is {}",
                i / n_land.max(1),
                i % n_land.max(1),
                log_lik[i]
            )));
        }
        if let Some(k) = null_log_lik.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "null_log_lik[{k}] must be finite, got {}",
                null_log_lik[k]
            )));
        }
        Ok(Self {
            n_meas,
            n_land,
            log_lik,
            null_log_lik,
            truth: None,
            meta: BTreeMap::new(),
        })
    }

    /// Same as [`AssignmentProblem::new`] with one shared null log-likelihood.
    pub fn with_uniform_null(
        n_meas: usize,
        n_land: usize,
        log_lik: Vec<f64>,
        null_log_lik: f64,
    ) -> Result<Self> {
        Self::new(n_meas, n_land, log_lik, vec![null_log_lik; n_meas])
    }

    /// Builds from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], null_log_lik: Vec<f64>) -> Result<Self> {
        let n_meas = rows.len();
        let n_land = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_land) {
            return Err(Error::InvalidProblem("ragged log_lik rows".into()));
        }
        Self::new(n_meas, n_land, rows.concat(), null_log_lik)
    }

    pub fn with_truth(mut self, truth: Vec<Target>) -> Result<Self> {
        self.set_truth(truth)?;
        Ok(self)
    }

    pub fn set_truth(&mut self, truth: Vec<Target>) -> Result<()> {
        // the truth has to be a valid assignment of this problem
        Assignment::from_targets(self, truth.clone())?;
        self.truth = Some(truth);
        Ok(())
    }

    pub fn with_meta(
        mut self,
        key: impl Into<String>,
        value: impl Into<serde_json::Value>,
    ) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub(crate) fn set_meta_map(&mut self, meta: BTreeMap<String, serde_json::Value>) {
        self.meta = meta;
    }

    #[inline]
    pub fn n_meas(&self) -> usize {
        self.n_meas
    }

    #[inline]
    pub fn n_land(&self) -> usize {
        self.n_land
    }

    pub fn max_dim(&self) -> usize {
        self.n_meas.max(self.n_land)
    }

    /// Zero-measurement frames are representable so generators can emit them; consumers skip them.
    pub fn is_empty(&self) -> bool {
        self.n_meas == 0
    }

    /// `ℓ_kj`, `-inf` when gated.
    #[inline]
    pub fn log_lik(&self, k: usize, j: usize) -> f64 {
        self.log_lik[k * self.n_land + j]
    }

    /// Log-likelihood of sending measurement `k` to `target`.
    #[inline]
    pub fn target_log_lik(&self, k: usize, target: Target) -> f64 {
        match target {
            Target::Landmark(j) => self.log_lik(k, j),
            Target::Null => self.null_log_lik[k],
        }
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.log_lik[k * self.n_land..(k + 1) * self.n_land]
    }

    pub fn log_lik_matrix(&self) -> &[f64] {
        &self.log_lik
    }

    pub fn null_log_lik(&self) -> &[f64] {
        &self.null_log_lik
    }

    pub fn is_feasible(&self, k: usize, j: usize) -> bool {
        self.log_lik(k, j) > f64::NEG_INFINITY
    }

    /// Landmarks measurement `k` may be assigned to.
    pub fn feasible_landmarks(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(k)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > f64::NEG_INFINITY)
            .map(|(j, _)| j)
    }

    pub fn truth(&self) -> Option<&[Target]> {
        self.truth.as_deref()
    }

    pub fn meta(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.meta
    }

    /// `meta.id` when present as a string or number.
    pub fn id(&self) -> Option<String> {
        match self.meta.get("id")? {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    }
}

/// An injective partial map from measurements to landmarks, unassigned measurements going to null.
/// Only feasible (non-gated) pairs appear, so `log_prob` is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    targets: Vec<Target>,
    log_prob: f64,
}

impl Assignment {
    /// Validates `targets` against `problem` and computes `log p(A)`.
    pub fn from_targets(problem: &AssignmentProblem, targets: Vec<Target>) -> Result<Self> {
        if targets.len() != problem.n_meas() {
            return Err(Error::InvalidProblem(format!(
                "assignment covers {} measurements, problem has {}",
                targets.len(),
                problem.n_meas()
            )));
        }
        let mut used = vec![false; problem.n_land()];
        for (k, t) in targets.iter().enumerate() {
            if let Target::Landmark(j) = *t {
                if j >= problem.n_land() {
                    return Err(Error::InvalidProblem(format!(
                        "measurement {k} assigned to landmark {j} of {}",
                        problem.n_land()
                    )));
                }
                if !problem.is_feasible(k, j) {
                    return Err(Error::InvalidProblem(format!(
                        "measurement {k} assigned to gated landmark {j}"
                    )));
                }
                if used[j] {
                    return Err(Error::InvalidProblem(format!(
                        "landmark {j} assigned twice"
                    )));
                }
                used[j] = true;
            }
        }
        let log_prob = Self::score(problem, &targets);
        Ok(Self { targets, log_prob })
    }

    /// Skips validation; `log_prob` must already be the sum over `targets`.
    pub(crate) fn from_parts(targets: Vec<Target>, log_prob: f64) -> Self {
        Self { targets, log_prob }
    }

    pub(crate) fn clamp_log_prob(&mut self, ceiling: f64) {
        self.log_prob = self.log_prob.min(ceiling);
    }

    /// Σ of the chosen log-likelihoods, in measurement order.
    pub fn score(problem: &AssignmentProblem, targets: &[Target]) -> f64 {
        targets
            .iter()
            .enumerate()
            .map(|(k, t)| problem.target_log_lik(k, *t))
            .sum()
    }

    #[inline]
    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    #[inline]
    pub fn target(&self, k: usize) -> Target {
        self.targets[k]
    }

    /// `log p(A)`.
    #[inline]
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    pub fn into_targets(self) -> Vec<Target> {
        self.targets
    }
}

/// K likeliest assignments, most likely first.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedAssignmentSet {
    pub entries: Vec<Assignment>,
    /// The problem has fewer than the requested K assignments and all of them are here.
    pub exhausted: bool,
}

impl RankedAssignmentSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `log Σ p(A)` over the set.
    pub fn total_log_mass(&self) -> f64 {
        crate::logmath::log_sum_exp_iter(self.entries.iter().map(Assignment::log_prob))
    }

    /// Likelihood of the last (least likely) entry.
    pub fn tail_log_prob(&self) -> Option<f64> {
        self.entries.last().map(Assignment::log_prob)
    }
}

/// Marginal association probabilities, one row per measurement and one
/// column per landmark plus a trailing null column.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTable {
    n_meas: usize,
    n_land: usize,
    w: Vec<f64>,
    /// Every true marginal lies within `gamma` of the corresponding entry.
    pub gamma: f64,
    pub k_used: usize,
    pub total_log_mass: f64,
    /// Computed from a truncated set of terms rather than the full sum.
    pub truncated: bool,
}

impl MarginalTable {
    pub(crate) fn from_parts(n_meas: usize, n_land: usize, w: Vec<f64>) -> Self {
        debug_assert_eq!(w.len(), n_meas * (n_land + 1));
        Self {
            n_meas,
            n_land,
            w,
            gamma: 0.0,
            k_used: 0,
            total_log_mass: f64::NEG_INFINITY,
            truncated: false,
        }
    }

    pub fn n_meas(&self) -> usize {
        self.n_meas
    }

    pub fn n_land(&self) -> usize {
        self.n_land
    }

    pub fn n_cols(&self) -> usize {
        self.n_land + 1
    }

    #[inline]
    pub fn get(&self, k: usize, target: Target) -> f64 {
        self.w[k * (self.n_land + 1) + target.column(self.n_land)]
    }

    #[inline]
    pub fn at(&self, k: usize, col: usize) -> f64 {
        self.w[k * (self.n_land + 1) + col]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let c = self.n_land + 1;
        &self.w[k * c..(k + 1) * c]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// Worst-case absolute difference over every cell, null column included.
    pub fn max_abs_diff(&self, other: &MarginalTable) -> f64 {
        assert_eq!((self.n_meas, self.n_land), (other.n_meas, other.n_land));
        self.w
            .iter()
            .zip(&other.w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
