//! Exhaustive enumeration, exact counting and best-first top-T enumeration.
//!
//! None of this touches the LSAP solver or Murty's partitioning; it is the
//! independent reference those are checked against.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::problem::{Assignment, AssignmentProblem, MarginalTable, Target};

/// Limits for brute-force truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    /// Hard cap on enumerated assignments.
    pub max_assignments: u64,
    /// When set and the full enumeration is over budget, keep only the `T`
    /// likeliest assignments.
    pub top_terms: Option<usize>,
}

pub const DEFAULT_MAX_ASSIGNMENTS: u64 = 10_000_000;
pub const DEFAULT_TOP_TERMS: usize = 20_000;
const MIN_SEARCH_NODES: u64 = 1_000_000;

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_assignments: DEFAULT_MAX_ASSIGNMENTS,
            top_terms: None,
        }
    }
}

impl EnumerationBudget {
    pub fn new(max_assignments: u64) -> Self {
        Self {
            max_assignments: max_assignments.max(1),
            top_terms: None,
        }
    }

    pub fn with_top_terms(mut self, t: usize) -> Self {
        self.top_terms = Some(t.max(1));
        self
    }
}

/// Depth-first count that gives up once `cap` is exceeded.
/// Returns `Ok(count)` or `Err(counted_so_far)` with `counted_so_far > cap`.
pub fn count_capped(p: &AssignmentProblem, cap: u64) -> std::result::Result<u64, u64> {
    fn go(p: &AssignmentProblem, k: usize, used: &mut [bool], count: &mut u64, cap: u64) -> bool {
        if k == p.n_meas() {
            *count += 1;
            return *count <= cap;
        }
        if !go(p, k + 1, used, count, cap) {
            return false;
        }
        for j in 0..p.n_land() {
            if !used[j] && p.is_feasible(k, j) {
                used[j] = true;
                let ok = go(p, k + 1, used, count, cap);
                used[j] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    let mut count = 0;
    if go(p, 0, &mut vec![false; p.n_land()], &mut count, cap) {
        Ok(count)
    } else {
        Err(count)
    }
}

/// Every assignment of `p`, in depth-first order (null before landmarks at each row).
pub fn enumerate_all(p: &AssignmentProblem, b: EnumerationBudget) -> Result<Vec<Assignment>> {
    let total = count_capped(p, b.max_assignments).map_err(|counted| Error::BudgetExceeded {
        limit: b.max_assignments,
        counted,
    })?;
    let mut out = Vec::with_capacity(total as usize);
    let mut targets = vec![Target::Null; p.n_meas()];
    let mut used = vec![false; p.n_land()];
    visit(p, 0, &mut targets, &mut used, &mut |t, lp| {
        out.push(Assignment::from_parts(t.to_vec(), lp))
    });
    debug_assert_eq!(out.len() as u64, total);
    Ok(out)
}

fn visit(
    p: &AssignmentProblem,
    k: usize,
    targets: &mut [Target],
    used: &mut [bool],
    emit: &mut impl FnMut(&[Target], f64),
) {
    if k == p.n_meas() {
        // summed in measurement order, bit-identical to Assignment::score
        emit(targets, Assignment::score(p, targets));
        return;
    }
    targets[k] = Target::Null;
    visit(p, k + 1, targets, used, emit);
    for j in 0..p.n_land() {
        if !used[j] && p.is_feasible(k, j) {
            used[j] = true;
            targets[k] = Target::Landmark(j);
            visit(p, k + 1, targets, used, emit);
            used[j] = false;
        }
    }
    targets[k] = Target::Null;
}

/// Marginals of an explicit list of assignments (normalised over the list).
pub(crate) fn marginals_of(p: &AssignmentProblem, set: &[Assignment]) -> MarginalTable {
    let (n, m) = (p.n_meas(), p.n_land());
    let cols = m + 1;
    let max = set
        .iter()
        .map(Assignment::log_prob)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut w = vec![0.0; n * cols];
    let mut total = 0.0;
    for a in set {
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
    table.k_used = set.len();
    table.total_log_mass = max + total.ln();
    table
}

/// True marginals by full log-domain marginalisation.
///
/// Over budget, falls back to the `top_terms` likeliest assignments when that
/// is set (the table is then marked `truncated`); otherwise refuses.
pub fn true_marginals(p: &AssignmentProblem, b: EnumerationBudget) -> Result<MarginalTable> {
    match enumerate_all(p, b) {
        Ok(all) => Ok(marginals_of(p, &all)),
        Err(Error::BudgetExceeded { limit, counted }) => {
            let Some(t) = b.top_terms else {
                return Err(Error::BudgetExceeded { limit, counted });
            };
            let top = top_assignments(p, t, b.max_assignments.max(MIN_SEARCH_NODES))?;
            let mut table = marginals_of(p, &top);
            table.truncated = true;
            Ok(table)
        }
        Err(e) => Err(e),
    }
}

struct Partial {
    bound: f64,
    score: f64,
    targets: Vec<Target>,
}

impl PartialEq for Partial {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Partial {}
impl PartialOrd for Partial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Partial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| self.targets.len().cmp(&other.targets.len()))
    }
}

/// The `t` likeliest assignments by best-first search over partial assignments,
/// bounded above by each remaining row's best option ignoring injectivity.
/// `node_cap` limits the number of frontier insertions.
pub fn top_assignments(p: &AssignmentProblem, t: usize, node_cap: u64) -> Result<Vec<Assignment>> {
    let n = p.n_meas();
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let best = p.row(k).iter().copied().fold(p.null_log_lik()[k], f64::max);
        suffix[k] = suffix[k + 1] + best;
    }
    let mut heap = BinaryHeap::new();
    heap.push(Partial {
        bound: suffix[0],
        score: 0.0,
        targets: Vec::with_capacity(n),
    });
    let mut pushes = 1u64;
    let mut out = Vec::with_capacity(t);
    while let Some(node) = heap.pop() {
        let k = node.targets.len();
        if k == n {
            let lp = Assignment::score(p, &node.targets);
            out.push(Assignment::from_parts(node.targets, lp));
            if out.len() == t {
                break;
            }
            continue;
        }
        let mut push = |target: Target, ll: f64| {
            let mut targets = node.targets.clone();
            targets.push(target);
            let score = node.score + ll;
            heap.push(Partial {
                bound: score + suffix[k + 1],
                score,
                targets,
            });
        };
        push(Target::Null, p.null_log_lik()[k]);
        for j in p.feasible_landmarks(k) {
            if !node.targets.contains(&Target::Landmark(j)) {
                push(Target::Landmark(j), p.log_lik(k, j));
                pushes += 1;
            }
        }
        pushes += 1;
        if pushes > node_cap {
            return Err(Error::BudgetExceeded {
                limit: node_cap,
                counted: pushes,
            });
        }
    }
    Ok(out)
}

/// Exact number of assignments by dynamic programming over subsets of the smaller side.
///
/// Refuses when the smaller side exceeds 24 or the count exceeds 10^12.
pub fn count_exact(p: &AssignmentProblem) -> Result<u64> {
    const COUNT_CAP: u128 = 1_000_000_000_000;
    let (n, m) = (p.n_meas(), p.n_land());
    let (small, large) = (n.min(m), n.max(m));
    if small > 24 {
        return Err(Error::Refused(format!(
            "exact count needs 2^{small} states; limit is 2^24"
        )));
    }
    // rows of the DP walk over the larger side; the mask is over the smaller side
    let feasible = |big: usize, little: usize| {
        if n <= m {
            p.is_feasible(little, big)
        } else {
            p.is_feasible(big, little)
        }
    };
    let mut dp = vec![0u128; 1 << small];
    dp[0] = 1;
    for big in 0..large {
        let mut next = dp.clone(); // `big` left unmatched
        for mask in 0..dp.len() {
            let c = dp[mask];
            if c == 0 {
                continue;
            }
            for little in 0..small {
                if mask & (1 << little) == 0 && feasible(big, little) {
                    let slot = &mut next[mask | (1 << little)];
                    *slot = slot.saturating_add(c);
                }
            }
        }
        dp = next;
    }
    let total = dp.iter().fold(0u128, |a, &b| a.saturating_add(b));
    if total > COUNT_CAP {
        return Err(Error::Refused(format!("count {total} exceeds 10^12")));
    }
    Ok(total as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(n: usize, m: usize) -> AssignmentProblem {
        AssignmentProblem::with_uniform_null(n, m, vec![-1.0; n * m], -2.0).unwrap()
    }

    #[test]
    fn one_by_one_has_two() {
        let all = enumerate_all(&full(1, 1), EnumerationBudget::default()).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn three_by_three_has_34() {
        // Σ_r C(3,r)·P(3,r) = 1 + 9 + 18 + 6
        let p = full(3, 3);
        assert_eq!(
            enumerate_all(&p, EnumerationBudget::default())
                .unwrap()
                .len(),
            34
        );
        assert_eq!(count_exact(&p).unwrap(), 34);
        assert_eq!(count_capped(&p, 100), Ok(34));
    }

    #[test]
    fn gated_two_by_two() {
        // pair (1,0) gated: partial matchings {}, {00}, {01}, {11}, {00,11} = 5
        let p = AssignmentProblem::from_rows(
            &[vec![-1.0, -1.0], vec![f64::NEG_INFINITY, -1.0]],
            vec![-2.0, -2.0],
        )
        .unwrap();
        assert_eq!(
            enumerate_all(&p, EnumerationBudget::default())
                .unwrap()
                .len(),
            5
        );
        assert_eq!(count_exact(&p).unwrap(), 5);
    }

    #[test]
    fn no_landmarks_counts_one() {
        let p = AssignmentProblem::new(4, 0, vec![], vec![-1.0; 4]).unwrap();
        assert_eq!(count_exact(&p).unwrap(), 1);
    }

    #[test]
    fn budget_refusal_reports_count() {
        let err = enumerate_all(&full(3, 3), EnumerationBudget::new(10)).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                limit: 10,
                counted: 11
            }
        ));
    }

    #[test]
    fn count_exact_is_transpose_symmetric() {
        let rows = vec![
            vec![-1.0, f64::NEG_INFINITY, -1.0],
            vec![f64::NEG_INFINITY, -1.0, -1.0],
        ];
        let p = AssignmentProblem::from_rows(&rows, vec![0.0; 2]).unwrap();
        let t: Vec<Vec<f64>> = (0..3)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        let q = AssignmentProblem::from_rows(&t, vec![0.0; 3]).unwrap();
        assert_eq!(count_exact(&p).unwrap(), count_exact(&q).unwrap());
        assert_eq!(
            count_exact(&p).unwrap(),
            enumerate_all(&p, EnumerationBudget::default())
                .unwrap()
                .len() as u64
        );
    }

    #[test]
    fn example_true_marginal() {
        let p = AssignmentProblem::from_rows(
            &[
                vec![0.8f64.ln(), 0.2f64.ln()],
                vec![0.3f64.ln(), 0.7f64.ln()],
            ],
            vec![-20.0, -20.0],
        )
        .unwrap();
        let t = true_marginals(&p, EnumerationBudget::default()).unwrap();
        assert!((t.get(0, Target::Landmark(0)) - 0.903_225_8).abs() < 1e-6);
        assert_eq!(t.gamma, 0.0);
        assert!(!t.truncated);
    }

    #[test]
    fn symmetric_rows_are_uniform() {
        let t = true_marginals(&full(2, 2), EnumerationBudget::default()).unwrap();
        assert!((t.at(0, 0) - t.at(0, 1)).abs() < 1e-15);
        assert!((t.at(1, 0) - t.at(1, 1)).abs() < 1e-15);
    }

    #[test]
    fn top_assignments_are_the_head_of_the_sorted_list() {
        let p = AssignmentProblem::from_rows(
            &[
                vec![-0.3, -1.7, -2.2, f64::NEG_INFINITY],
                vec![-1.1, -0.4, -3.0, -0.9],
                vec![-2.5, -0.8, -0.2, -1.3],
            ],
            vec![-2.0, -2.5, -1.5],
        )
        .unwrap();
        let mut all = enumerate_all(&p, EnumerationBudget::default()).unwrap();
        all.sort_by(|a, b| b.log_prob().total_cmp(&a.log_prob()));
        let top = top_assignments(&p, 10, 1_000_000).unwrap();
        for (a, b) in top.iter().zip(&all) {
            assert!((a.log_prob() - b.log_prob()).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_truth_when_over_budget() {
        let b = EnumerationBudget::new(10).with_top_terms(5);
        let t = true_marginals(&full(3, 3), b).unwrap();
        assert!(t.truncated);
        assert_eq!(t.k_used, 5);
    }
}
