//! Exact permanents by Ryser's formula and permanent-ratio marginals.
//!
//! `perm(A) = (-1)^d Σ_{S ⊆ cols} (-1)^{|S|} ∏_i Σ_{j ∈ S} a_ij`, walked in
//! Gray-code order so each subset differs from the previous by one column.
//! Rows are scaled to unit maximum first (`perm(DA) = det(D)·perm(A)`), the
//! running row sums are kept in double-double so that removing a column does
//! not cancel away small entries, and the signed terms are summed with
//! Neumaier compensation.

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::problem::{AssignmentProblem, MarginalTable, Target};

pub const MAX_RYSER_DIM: usize = 30;

/// Square matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Refused(format!(
                "matrix with {} entries is not {dim}x{dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Refused("matrix is not square".into()));
        }
        Self::new(d, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Copy without row `r` and column `c`.
    pub fn minor(&self, r: usize, c: usize) -> SquareMatrix {
        let d = self.dim;
        let mut data = Vec::with_capacity((d - 1) * (d - 1));
        for i in (0..d).filter(|&i| i != r) {
            for j in (0..d).filter(|&j| j != c) {
                data.push(self.data[i * d + j]);
            }
        }
        SquareMatrix { dim: d - 1, data }
    }
}

/// `ln perm(m)` for a non-negative matrix. `-inf` when the permanent is zero.
pub fn permanent_ryser(m: &SquareMatrix) -> Result<f64> {
    if m.data.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Refused(
            "entries must be finite and non-negative".into(),
        ));
    }
    let logs: Vec<f64> = m.data.iter().map(|v| v.ln()).collect();
    log_permanent_from_logs(m.dim, &logs)
}

/// `ln perm(exp(L))` for a matrix given entrywise in log space (`-inf` = 0).
pub fn log_permanent_from_logs(dim: usize, logs: &[f64]) -> Result<f64> {
    if logs.len() != dim * dim {
        return Err(Error::Refused("matrix is not square".into()));
    }
    if dim > MAX_RYSER_DIM {
        return Err(Error::Refused(format!(
            "dimension {dim} exceeds the Ryser limit of {MAX_RYSER_DIM}"
        )));
    }
    if dim == 0 {
        return Ok(0.0);
    }
    let mut scale = 0.0;
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        let row = &logs[i * dim..(i + 1) * dim];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        scale += max;
        for j in 0..dim {
            a[i * dim + j] = (row[j] - max).exp();
        }
    }
    let p = ryser_scaled(dim, &a);
    if p <= 0.0 {
        // A zero (or round-off negative) permanent of a non-negative matrix.
        return Ok(f64::NEG_INFINITY);
    }
    Ok(scale + p.ln())
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Ryser on a matrix with entries in [0, 1].
fn ryser_scaled(d: usize, a: &[f64]) -> f64 {
    // column-major copy so a column toggle touches contiguous memory
    let mut col = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            col[j * d + i] = a[i * d + j];
        }
    }
    let mut hi = vec![0.0f64; d];
    let mut lo = vec![0.0f64; d];
    let mut in_set = vec![false; d];
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut size = 0usize;
    let total: u64 = 1 << d;
    for g in 1..total {
        let j = g.trailing_zeros() as usize;
        let column = &col[j * d..(j + 1) * d];
        if in_set[j] {
            in_set[j] = false;
            size -= 1;
            for i in 0..d {
                let (s, e) = two_sum(hi[i], -column[i]);
                let (s, e2) = two_sum(s, lo[i] + e);
                hi[i] = s;
                lo[i] = e2;
            }
        } else {
            in_set[j] = true;
            size += 1;
            for i in 0..d {
                let (s, e) = two_sum(hi[i], column[i]);
                let (s, e2) = two_sum(s, lo[i] + e);
                hi[i] = s;
                lo[i] = e2;
            }
        }
        let mut prod = 1.0;
        for i in 0..d {
            prod *= hi[i] + lo[i];
        }
        let term = if (d - size).is_multiple_of(2) {
            prod
        } else {
            -prod
        };
        // Neumaier
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Log-space square completion of the null-augmented problem:
/// `n` measurement rows over `m` landmark + `n` null columns, then `m` all-ones rows.
/// Its permanent is `m!` times the sum of `p(A)` over all assignments.
pub fn square_completion_logs(p: &AssignmentProblem) -> (usize, Vec<f64>) {
    let (n, m) = (p.n_meas(), p.n_land());
    let d = n + m;
    let mut logs = vec![f64::NEG_INFINITY; d * d];
    for k in 0..n {
        logs[k * d..k * d + m].copy_from_slice(p.row(k));
        logs[k * d + m + k] = p.null_log_lik()[k];
    }
    for v in &mut logs[n * d..] {
        *v = 0.0;
    }
    (d, logs)
}

fn minor_logs(d: usize, logs: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((d - 1) * (d - 1));
    for i in (0..d).filter(|&i| i != r) {
        for j in (0..d).filter(|&j| j != c) {
            out.push(logs[i * d + j]);
        }
    }
    out
}

/// Exact marginals as permanent ratios: `w_kj = a_kj · perm(minor_kj) / perm(A)`.
/// One Ryser run per feasible cell; cells are spread over `exec`.
pub fn permanent_marginals_with(p: &AssignmentProblem, exec: Execution) -> Result<MarginalTable> {
    let (n, m) = (p.n_meas(), p.n_land());
    let (d, logs) = square_completion_logs(p);
    if d > MAX_RYSER_DIM {
        return Err(Error::Refused(format!(
            "square completion {d}x{d} exceeds the Ryser limit of {MAX_RYSER_DIM}"
        )));
    }
    let ln_total = log_permanent_from_logs(d, &logs)?;
    let cols = m + 1;
    let cells: Vec<(usize, Target)> = (0..n)
        .flat_map(|k| {
            p.feasible_landmarks(k)
                .map(Target::Landmark)
                .chain(std::iter::once(Target::Null))
                .map(move |t| (k, t))
        })
        .collect();
    let values = par::map(exec, &cells, |&(k, t)| {
        let c = match t {
            Target::Landmark(j) => j,
            Target::Null => m + k,
        };
        let ln_minor = log_permanent_from_logs(d - 1, &minor_logs(d, &logs, k, c))?;
        Ok::<f64, Error>((logs[k * d + c] + ln_minor - ln_total).exp())
    });
    let mut w = vec![0.0; n * cols];
    for (&(k, t), v) in cells.iter().zip(values) {
        w[k * cols + t.column(m)] = v?;
    }
    let mut table = MarginalTable::from_parts(n, m, w);
    // ln perm = ln m! + ln Σ p(A)
    table.total_log_mass = ln_total - crate::logmath::ln_factorial(m as u64);
    Ok(table)
}

/// [`permanent_marginals_with`] using the default execution mode.
pub fn permanent_marginals(p: &AssignmentProblem) -> Result<MarginalTable> {
    permanent_marginals_with(p, Execution::default())
}
