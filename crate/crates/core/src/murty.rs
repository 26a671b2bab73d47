//! Ranked assignment enumeration (Murty's partitioning over the LSAP solver).
//!
//! Each frontier node is a subproblem (locked pairs, banned pairs) together
//! with its optimal assignment and the solver's primal/dual state. Popping a
//! node yields its assignment; its children partition the remaining space:
//! with the node's free pairs `e_1..e_n` in measurement order, child `t` bans
//! `e_t` and locks `e_1..e_{t-1}`. Children inherit the parent's duals, so each
//! costs one augmenting path rather than a full solve.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::lsap::{augment, CostMatrix, LsapSolver, LsapState};
use crate::problem::{Assignment, AssignmentProblem, RankedAssignmentSet, Target};

/// A frontier entry: the best assignment of one cell of the partition.
struct Subproblem {
    log_prob: f64,
    targets: Vec<Target>,
    state: LsapState,
}

impl PartialEq for Subproblem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Subproblem {}

impl PartialOrd for Subproblem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Subproblem {
    /// Max-heap order: higher likelihood first, then the lexicographically smaller pair map.
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_prob
            .total_cmp(&other.log_prob)
            .then_with(|| other.targets.cmp(&self.targets))
    }
}

/// Lazily yields assignments in non-increasing likelihood order.
///
/// A popped node is only split when the next item is requested, so stopping
/// after `n` items costs at most `1 + (n - 1) * n_meas` solver calls.
pub struct KBestStream<'p> {
    problem: &'p AssignmentProblem,
    cost: CostMatrix,
    solver: LsapSolver,
    frontier: BinaryHeap<Subproblem>,
    pending: Option<Subproblem>,
    remaining: usize,
    last_log_prob: f64,
    yielded: usize,
}

impl<'p> KBestStream<'p> {
    /// Stream of at most `k` assignments.
    pub fn new(problem: &'p AssignmentProblem, k: usize) -> Self {
        let cost = augment(problem);
        let mut solver = LsapSolver::new();
        let mut frontier = BinaryHeap::new();
        if k > 0 {
            let mut state = LsapState::new(cost.rows(), cost.cols());
            if solver.solve_cold(&cost, &mut state) {
                frontier.push(node(problem, state));
            }
        }
        Self {
            problem,
            cost,
            solver,
            frontier,
            pending: None,
            remaining: k,
            last_log_prob: f64::INFINITY,
            yielded: 0,
        }
    }

    /// Solver invocations so far (cold solve plus one per child).
    pub fn solver_calls(&self) -> u64 {
        self.solver.solve_count()
    }

    /// Items produced so far.
    pub fn yielded(&self) -> usize {
        self.yielded
    }

    fn expand(&mut self, parent: Subproblem) {
        let rows = self.cost.rows();
        let mut base = parent.state;
        for row in 0..rows {
            if base.is_locked(row) {
                continue;
            }
            let mut child = base.clone();
            if self
                .solver
                .reoptimize_after_ban(&self.cost, &mut child, row)
            {
                self.frontier.push(node(self.problem, child));
            }
            base.lock(row);
        }
    }
}

fn node(problem: &AssignmentProblem, state: LsapState) -> Subproblem {
    let n_land = problem.n_land();
    let targets: Vec<Target> = (0..problem.n_meas())
        .map(|k| Target::from_column(state.col_of(k), n_land))
        .collect();
    let log_prob = Assignment::score(problem, &targets);
    Subproblem {
        log_prob,
        targets,
        state,
    }
}

impl Iterator for KBestStream<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.remaining == 0 {
            return None;
        }
        if let Some(parent) = self.pending.take() {
            self.expand(parent);
        }
        let best = self.frontier.pop()?;
        self.remaining -= 1;
        self.yielded += 1;
        // Children can never beat their parent, but summing a different set of
        // terms can land one ulp above it; keep the output sequence monotone.
        let log_prob = best.log_prob.min(self.last_log_prob);
        self.last_log_prob = log_prob;
        let mut out = Assignment::from_parts(best.targets.clone(), best.log_prob);
        out.clamp_log_prob(log_prob);
        if self.remaining > 0 {
            self.pending = Some(best);
        }
        Some(out)
    }
}

/// Streams the likeliest assignments of `problem`, at most `k` of them.
pub fn kbest_stream(problem: &AssignmentProblem, k: usize) -> KBestStream<'_> {
    KBestStream::new(problem, k)
}

/// The `k` likeliest assignments, most likely first.
///
/// `exhausted` is set when the problem has fewer than `k` assignments in total.
pub fn kbest(problem: &AssignmentProblem, k: usize) -> RankedAssignmentSet {
    assert!(k >= 1, "k must be positive");
    let entries: Vec<Assignment> = kbest_stream(problem, k).collect();
    let exhausted = entries.len() < k;
    RankedAssignmentSet { entries, exhausted }
}
