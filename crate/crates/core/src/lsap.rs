//! Rectangular linear sum assignment by shortest augmenting paths.
//!
//! Rows are measurements, columns are landmarks followed by one private null
//! column per measurement, so `rows <= cols` always holds and no padding rows
//! are needed. The solver keeps its dual variables so that Murty's
//! enumeration can re-optimise a child subproblem (one banned pair, some
//! locked rows) with a single augmentation instead of a cold solve.
//!
//! Warm starts on a rectangular matrix need care: freeing a column whose dual
//! is negative breaks the usual "free columns have zero dual" certificate. The
//! search therefore runs on the square completion in which the `cols - rows`
//! spare columns are held by identical zero-cost dummy rows. All dummies
//! share one dual, so they are represented by a single virtual node that is
//! scanned at most once per search.

use crate::error::{Error, Result};
use crate::problem::AssignmentProblem;

const NONE: u32 = u32::MAX;
const DUMMY: u32 = u32::MAX - 1;

/// Null-augmented cost matrix. Forbidden pairs are `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
}

impl CostMatrix {
    /// Row-major `rows × cols` costs; requires `rows <= cols`, no NaN and no `-inf`.
    pub fn new(rows: usize, cols: usize, cost: Vec<f64>) -> Result<Self> {
        if cost.len() != rows * cols {
            return Err(Error::Usage(format!(
                "cost has {} entries, expected {rows}x{cols}",
                cost.len()
            )));
        }
        if rows > cols {
            return Err(Error::Usage(format!(
                "more rows ({rows}) than columns ({cols})"
            )));
        }
        if cost.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
            return Err(Error::Usage("costs must be finite or +inf".into()));
        }
        Ok(Self { rows, cols, cost })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Usage("ragged cost rows".into()));
        }
        Self::new(n, m, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_finite()
    }
}

/// Negated log-likelihoods with the null options appended as a diagonal block:
/// column `n_land + k` is measurement `k`'s null, `+inf` for every other row.
pub fn augment(p: &AssignmentProblem) -> CostMatrix {
    let (n, m) = (p.n_meas(), p.n_land());
    let cols = m + n;
    let mut cost = vec![f64::INFINITY; n * cols];
    for k in 0..n {
        let row = &mut cost[k * cols..(k + 1) * cols];
        for (c, l) in row.iter_mut().zip(p.row(k)) {
            *c = -l;
        }
        row[m + k] = -p.null_log_lik()[k];
    }
    CostMatrix {
        rows: n,
        cols,
        cost,
    }
}

/// Optimal row-complete, column-injective matching.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// Column of each row.
    pub col_of_row: Vec<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LsapOutcome {
    Solved(Matching),
    /// No complete matching of finite cost exists.
    Infeasible,
}

impl LsapOutcome {
    pub fn matching(&self) -> Option<&Matching> {
        match self {
            LsapOutcome::Solved(m) => Some(m),
            LsapOutcome::Infeasible => None,
        }
    }
}

/// Flat `rows × cols` bit set of banned pairs.
#[derive(Clone, Debug)]
pub(crate) struct BanSet {
    cols: usize,
    bits: Vec<u64>,
}

impl BanSet {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            bits: vec![0; (rows * cols).div_ceil(64)],
        }
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: usize, j: usize) {
        let b = i * self.cols + j;
        self.bits[b / 64] |= 1 << (b % 64);
    }

    #[inline]
    pub(crate) fn contains(&self, i: usize, j: usize) -> bool {
        let b = i * self.cols + j;
        self.bits[b / 64] & (1 << (b % 64)) != 0
    }
}

/// Primal and dual state of one (sub)problem.
///
/// Invariants between searches, with `r(i,j) = c(i,j) - u[i] - v[j]`:
/// `r >= 0` on every allowed pair of an unlocked row, `r = 0` on matched
/// pairs, `v[j] <= -u_dummy` for every column with equality on unmatched ones.
#[derive(Clone, Debug)]
pub(crate) struct LsapState {
    col4row: Vec<u32>,
    row4col: Vec<u32>,
    u: Vec<f64>,
    v: Vec<f64>,
    u_dummy: f64,
    banned: BanSet,
    locked: Vec<bool>,
}

impl LsapState {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        Self {
            col4row: vec![NONE; rows],
            row4col: vec![NONE; cols],
            u: vec![0.0; rows],
            v: vec![0.0; cols],
            u_dummy: 0.0,
            banned: BanSet::new(rows, cols),
            locked: vec![false; rows],
        }
    }

    #[inline]
    pub(crate) fn col_of(&self, row: usize) -> usize {
        self.col4row[row] as usize
    }

    #[inline]
    pub(crate) fn is_locked(&self, row: usize) -> bool {
        self.locked[row]
    }

    pub(crate) fn lock(&mut self, row: usize) {
        debug_assert_ne!(self.col4row[row], NONE);
        self.locked[row] = true;
    }

    pub(crate) fn ban(&mut self, row: usize, col: usize) {
        self.banned.insert(row, col);
    }

    /// Frees `row` and returns the column it held, which becomes the only sink.
    fn unassign(&mut self, row: usize) -> usize {
        let col = self.col4row[row] as usize;
        self.col4row[row] = NONE;
        self.row4col[col] = NONE;
        col
    }

    pub(crate) fn matching(&self, c: &CostMatrix) -> Matching {
        let col_of_row: Vec<usize> = self.col4row.iter().map(|&j| j as usize).collect();
        let cost = col_of_row
            .iter()
            .enumerate()
            .map(|(i, &j)| c.get(i, j))
            .sum();
        Matching { col_of_row, cost }
    }
}

/// Shortest-augmenting-path solver. Owns scratch buffers; one instance per thread.
#[derive(Debug, Default)]
pub struct LsapSolver {
    dist: Vec<f64>,
    path: Vec<u32>,
    scanned_rows: Vec<u32>,
    scanned_cols: Vec<u32>,
    remaining: Vec<u32>,
    solves: u64,
}

impl LsapSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of cold solves plus warm re-optimisations performed so far.
    pub fn solve_count(&self) -> u64 {
        self.solves
    }

    /// Minimum-cost matching honouring forced (`locks`) and forbidden (`bans`) pairs.
    pub fn solve(
        &mut self,
        c: &CostMatrix,
        locks: &[(usize, usize)],
        bans: &[(usize, usize)],
    ) -> Result<LsapOutcome> {
        let mut state = LsapState::new(c.rows, c.cols);
        let mut col_locked = vec![false; c.cols];
        for &(i, j) in bans {
            if i >= c.rows || j >= c.cols {
                return Err(Error::Usage(format!("ban ({i}, {j}) out of range")));
            }
            state.ban(i, j);
        }
        for &(i, j) in locks {
            if i >= c.rows || j >= c.cols {
                return Err(Error::Usage(format!("lock ({i}, {j}) out of range")));
            }
            if state.locked[i] || col_locked[j] {
                return Err(Error::Usage(format!(
                    "lock ({i}, {j}) shares a row or column with another lock"
                )));
            }
            if state.banned.contains(i, j) {
                return Err(Error::Usage(format!(
                    "pair ({i}, {j}) is both locked and banned"
                )));
            }
            state.locked[i] = true;
            col_locked[j] = true;
            state.col4row[i] = j as u32;
            state.row4col[j] = i as u32;
        }
        if locks.iter().any(|&(i, j)| !c.get(i, j).is_finite()) {
            return Ok(LsapOutcome::Infeasible);
        }
        if self.solve_cold(c, &mut state) {
            Ok(LsapOutcome::Solved(state.matching(c)))
        } else {
            Ok(LsapOutcome::Infeasible)
        }
    }

    /// Assigns every unlocked row from a zero dual start. Returns false if infeasible.
    pub(crate) fn solve_cold(&mut self, c: &CostMatrix, state: &mut LsapState) -> bool {
        self.solves += 1;
        self.reserve(c.cols);
        for row in 0..c.rows {
            if state.locked[row] || state.col4row[row] != NONE {
                continue;
            }
            if !self.augment_from(c, state, row, None) {
                return false;
            }
        }
        true
    }

    /// Re-optimises after banning `row`'s current pair: a single augmentation
    /// from `row` on the parent's duals. Returns false if infeasible.
    pub(crate) fn reoptimize_after_ban(
        &mut self,
        c: &CostMatrix,
        state: &mut LsapState,
        row: usize,
    ) -> bool {
        self.solves += 1;
        self.reserve(c.cols);
        let col = state.unassign(row);
        state.ban(row, col);
        self.augment_from(c, state, row, Some(col))
    }

    fn reserve(&mut self, cols: usize) {
        self.dist.resize(cols, 0.0);
        self.path.resize(cols, NONE);
    }

    /// Dijkstra on reduced costs from `root` until a sink column is finalised,
    /// then dual update and path flip.
    ///
    /// With `sink == None` every unmatched column is a sink (cold solve).
    /// With `sink == Some(j)` only `j` is; other unmatched columns belong to
    /// dummy rows and are passed through via the virtual dummy node.
    fn augment_from(
        &mut self,
        c: &CostMatrix,
        state: &mut LsapState,
        root: usize,
        sink: Option<usize>,
    ) -> bool {
        let cols = c.cols;
        self.remaining.clear();
        for j in 0..cols {
            let r = state.row4col[j];
            // columns held by locked rows are outside this subproblem
            if r != NONE && state.locked[r as usize] {
                continue;
            }
            self.remaining.push(j as u32);
        }
        self.dist[..cols].fill(f64::INFINITY);
        self.scanned_rows.clear();
        self.scanned_cols.clear();

        let mut min_val = 0.0;
        let mut cur = root as u32;
        // column through which the dummy node was entered
        let mut dummy_entry: Option<usize> = None;
        let found: usize;

        loop {
            self.scanned_rows.push(cur);
            let mut lowest = f64::INFINITY;
            let mut best_idx = usize::MAX;
            let mut best_is_sink = false;

            if cur == DUMMY {
                let base = min_val - state.u_dummy;
                for (idx, &j) in self.remaining.iter().enumerate() {
                    let j = j as usize;
                    let r = base - state.v[j];
                    if r < self.dist[j] {
                        self.dist[j] = r;
                        self.path[j] = DUMMY;
                    }
                    let d = self.dist[j];
                    let is_sink = sink == Some(j);
                    if d < lowest || (d == lowest && is_sink && !best_is_sink) {
                        lowest = d;
                        best_idx = idx;
                        best_is_sink = is_sink;
                    }
                }
            } else {
                let i = cur as usize;
                let base = min_val - state.u[i];
                let row = c.row(i);
                for (idx, &j) in self.remaining.iter().enumerate() {
                    let j = j as usize;
                    let cij = row[j];
                    if cij.is_finite() && !state.banned.contains(i, j) {
                        let r = base + cij - state.v[j];
                        if r < self.dist[j] {
                            self.dist[j] = r;
                            self.path[j] = cur;
                        }
                    }
                    let d = self.dist[j];
                    let is_sink = match sink {
                        None => state.row4col[j] == NONE,
                        Some(s) => s == j,
                    };
                    if d < lowest || (d == lowest && is_sink && !best_is_sink) {
                        lowest = d;
                        best_idx = idx;
                        best_is_sink = is_sink;
                    }
                }
            }

            if !lowest.is_finite() {
                // callers discard the state on failure
                return false;
            }
            min_val = lowest;
            let j = self.remaining.swap_remove(best_idx) as usize;
            self.scanned_cols.push(j as u32);
            if best_is_sink {
                found = j;
                break;
            }
            let holder = state.row4col[j];
            if holder == NONE {
                // dummy-held column (warm mode only)
                if dummy_entry.is_none() {
                    dummy_entry = Some(j);
                    cur = DUMMY;
                    continue;
                }
                // Every dummy shares the same edges, so a second dummy adds nothing new.
                // Keep popping until a row is available to scan.
                if let Some(next) = self.next_pop_without_scan(state, sink, &mut min_val) {
                    match next {
                        Pop::Sink(s) => {
                            found = s;
                            break;
                        }
                        Pop::Row(r) => {
                            cur = r;
                            continue;
                        }
                    }
                } else {
                    return false;
                }
            }
            cur = holder;
        }

        // dual update
        for &r in &self.scanned_rows {
            if r == DUMMY {
                let entry = dummy_entry.expect("dummy scanned without entry");
                state.u_dummy += min_val - self.dist[entry];
            } else if r as usize == root {
                state.u[root] += min_val;
            } else {
                let r = r as usize;
                state.u[r] += min_val - self.dist[state.col4row[r] as usize];
            }
        }
        for &j in &self.scanned_cols {
            let j = j as usize;
            state.v[j] -= min_val - self.dist[j];
        }

        // flip the alternating path back to the root
        let mut j = found;
        loop {
            let i = self.path[j];
            if i == DUMMY {
                // the dummy releases its entry column and takes j
                state.row4col[j] = NONE;
                j = dummy_entry.expect("path through dummy without entry");
                continue;
            }
            let i = i as usize;
            state.row4col[j] = i as u32;
            let prev = state.col4row[i];
            state.col4row[i] = j as u32;
            if i == root {
                break;
            }
            j = prev as usize;
        }
        true
    }

    /// Pops columns without scanning (they are dummy-held and the dummy node is
    /// already scanned) until reaching a sink or a column held by a real row.
    fn next_pop_without_scan(
        &mut self,
        state: &LsapState,
        sink: Option<usize>,
        min_val: &mut f64,
    ) -> Option<Pop> {
        loop {
            let mut lowest = f64::INFINITY;
            let mut best_idx = usize::MAX;
            let mut best_is_sink = false;
            for (idx, &j) in self.remaining.iter().enumerate() {
                let j = j as usize;
                let d = self.dist[j];
                let is_sink = sink == Some(j);
                if d < lowest || (d == lowest && is_sink && !best_is_sink) {
                    lowest = d;
                    best_idx = idx;
                    best_is_sink = is_sink;
                }
            }
            if !lowest.is_finite() {
                return None;
            }
            *min_val = lowest;
            let j = self.remaining.swap_remove(best_idx) as usize;
            self.scanned_cols.push(j as u32);
            if best_is_sink {
                return Some(Pop::Sink(j));
            }
            let holder = state.row4col[j];
            if holder != NONE {
                return Some(Pop::Row(holder));
            }
        }
    }
}

enum Pop {
    Sink(usize),
    Row(u32),
}

/// One-shot convenience wrapper around [`LsapSolver::solve`].
pub fn solve_lsap(
    c: &CostMatrix,
    locks: &[(usize, usize)],
    bans: &[(usize, usize)],
) -> Result<LsapOutcome> {
    LsapSolver::new().solve(c, locks, bans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over row-complete column-injective matchings.
    fn brute_min(c: &CostMatrix, locks: &[(usize, usize)], bans: &[(usize, usize)]) -> Option<f64> {
        fn go(
            c: &CostMatrix,
            row: usize,
            used: &mut Vec<bool>,
            acc: f64,
            locks: &[(usize, usize)],
            bans: &[(usize, usize)],
            best: &mut Option<f64>,
        ) {
            if row == c.rows() {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            let forced = locks.iter().find(|l| l.0 == row).map(|l| l.1);
            for j in 0..c.cols() {
                if used[j] || forced.is_some_and(|f| f != j) || bans.contains(&(row, j)) {
                    continue;
                }
                if locks.iter().any(|l| l.1 == j && l.0 != row) {
                    continue;
                }
                let cij = c.get(row, j);
                if !cij.is_finite() {
                    continue;
                }
                used[j] = true;
                go(c, row + 1, used, acc + cij, locks, bans, best);
                used[j] = false;
            }
        }
        let mut best = None;
        go(
            c,
            0,
            &mut vec![false; c.cols()],
            0.0,
            locks,
            bans,
            &mut best,
        );
        best
    }

    fn cost_of(o: &LsapOutcome) -> f64 {
        o.matching().expect("feasible").cost
    }

    #[test]
    fn square_three_by_three() {
        let c = CostMatrix::from_rows(&[
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ])
        .unwrap();
        let out = solve_lsap(&c, &[], &[]).unwrap();
        assert_eq!(cost_of(&out), 5.0);
        assert_eq!(out.matching().unwrap().col_of_row, vec![1, 0, 2]);
        assert_eq!(brute_min(&c, &[], &[]), Some(5.0));
    }

    #[test]
    fn two_by_two_with_ban() {
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let out = solve_lsap(&c, &[], &[]).unwrap();
        assert_eq!(cost_of(&out), 2.0);
        assert_eq!(out.matching().unwrap().col_of_row, vec![0, 1]);
        let out = solve_lsap(&c, &[], &[(0, 0)]).unwrap();
        assert_eq!(cost_of(&out), 4.0);
        assert_eq!(out.matching().unwrap().col_of_row, vec![1, 0]);
    }

    #[test]
    fn infeasible_is_a_value() {
        let inf = f64::INFINITY;
        let c = CostMatrix::from_rows(&[vec![1.0, inf], vec![1.0, inf]]).unwrap();
        assert_eq!(solve_lsap(&c, &[], &[]).unwrap(), LsapOutcome::Infeasible);
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(
            solve_lsap(&c, &[], &[(0, 0), (0, 1)]).unwrap(),
            LsapOutcome::Infeasible
        );
    }

    #[test]
    fn contradictory_locks_are_usage_errors() {
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_lsap(&c, &[(0, 0)], &[(0, 0)]),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            solve_lsap(&c, &[(0, 0), (1, 0)], &[]),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            solve_lsap(&c, &[(0, 0), (0, 1)], &[]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn augment_layout() {
        let p = AssignmentProblem::from_rows(&[vec![-1.0], vec![-2.0]], vec![-5.0, -6.0]).unwrap();
        let c = augment(&p);
        assert_eq!((c.rows(), c.cols()), (2, 3));
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(0, 1), 5.0);
        assert_eq!(c.get(0, 2), f64::INFINITY);
        assert_eq!(c.get(1, 1), f64::INFINITY);
        assert_eq!(c.get(1, 2), 6.0);

        let p = AssignmentProblem::new(2, 0, vec![], vec![-1.0, -2.0]).unwrap();
        let c = augment(&p);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(1, 1), 2.0);
        assert_eq!(c.get(0, 1), f64::INFINITY);
        assert_eq!(c.get(1, 0), f64::INFINITY);
    }

    #[test]
    fn rows_exceeding_cols_rejected() {
        assert!(CostMatrix::from_rows(&[vec![1.0], vec![1.0]]).is_err());
    }

    /// Warm re-optimisation must agree with a cold solve of the same subproblem.
    #[test]
    fn warm_chain_matches_cold() {
        let c = CostMatrix::from_rows(&[
            vec![3.0, 1.0, 7.0, 2.0, f64::INFINITY],
            vec![2.0, 6.0, 1.0, f64::INFINITY, 4.0],
            vec![5.0, 2.0, 2.0, 9.0, 1.0],
        ])
        .unwrap();
        let mut solver = LsapSolver::new();
        let mut state = LsapState::new(3, 5);
        assert!(solver.solve_cold(&c, &mut state));
        let mut bans = vec![];
        for row in [0usize, 2, 1, 0] {
            let col = state.col_of(row);
            bans.push((row, col));
            let ok = solver.reoptimize_after_ban(&c, &mut state, row);
            let cold = brute_min(&c, &[], &bans);
            assert_eq!(ok, cold.is_some());
            if !ok {
                break;
            }
            assert!((state.matching(&c).cost - cold.unwrap()).abs() < 1e-12);
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = CostMatrix> {
        (1usize..=7, 0usize..=3).prop_flat_map(|(rows, extra)| {
            let cols = (rows + extra).min(10);
            prop::collection::vec(
                prop_oneof![4 => (-5.0f64..20.0).prop_map(|x| (x * 4.0).round() / 4.0), 1 => Just(f64::INFINITY)],
                rows * cols,
            )
            .prop_map(move |cost| CostMatrix::new(rows, cols, cost).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn optimal_against_brute_force(c in matrix_strategy()) {
            let out = solve_lsap(&c, &[], &[]).unwrap();
            match brute_min(&c, &[], &[]) {
                None => prop_assert_eq!(out, LsapOutcome::Infeasible),
                Some(best) => {
                    let m = out.matching().unwrap();
                    prop_assert!((m.cost - best).abs() < 1e-9, "{} vs {}", m.cost, best);
                    let mut seen = vec![false; c.cols()];
                    for &j in &m.col_of_row {
                        prop_assert!(!seen[j]);
                        seen[j] = true;
                    }
                }
            }
        }

        #[test]
        fn locks_and_bans_respected(c in matrix_strategy(), seed in any::<u64>()) {
            // pick a lock from a feasible matching and a ban elsewhere
            let Some(base) = solve_lsap(&c, &[], &[]).unwrap().matching().cloned() else { return Ok(()); };
            let r = (seed as usize) % c.rows();
            let lock = (r, base.col_of_row[r]);
            let br = (seed as usize / 7) % c.rows();
            let bc = (seed as usize / 13) % c.cols();
            let bans: Vec<_> = if (br, bc) == lock { vec![] } else { vec![(br, bc)] };
            let out = solve_lsap(&c, &[lock], &bans).unwrap();
            match brute_min(&c, &[lock], &bans) {
                None => prop_assert_eq!(out, LsapOutcome::Infeasible),
                Some(best) => {
                    let m = out.matching().unwrap();
                    prop_assert!((m.cost - best).abs() < 1e-9);
                    prop_assert_eq!(m.col_of_row[lock.0], lock.1);
                    for &(i, j) in &bans {
                        prop_assert_ne!(m.col_of_row[i], j);
                    }
                    // monotone: constraints never lower the optimum
                    prop_assert!(m.cost >= base.cost - 1e-9);
                }
            }
        }

        #[test]
        fn warm_reoptimisation_is_exact(c in matrix_strategy(), picks in prop::collection::vec(any::<usize>(), 1..6)) {
            let mut solver = LsapSolver::new();
            let mut state = LsapState::new(c.rows(), c.cols());
            if !solver.solve_cold(&c, &mut state) { return Ok(()); }
            let mut bans = vec![];
            let mut locks = vec![];
            for p in picks {
                let row = p % c.rows();
                if state.is_locked(row) { continue; }
                if p % 3 == 0 {
                    locks.push((row, state.col_of(row)));
                    state.lock(row);
                    continue;
                }
                bans.push((row, state.col_of(row)));
                let ok = solver.reoptimize_after_ban(&c, &mut state, row);
                let cold = brute_min(&c, &locks, &bans);
                prop_assert_eq!(ok, cold.is_some());
                if !ok { break; }
                let m = state.matching(&c);
                prop_assert!((m.cost - cold.unwrap()).abs() < 1e-9, "{} vs {:?}", m.cost, cold);
            }
        }
    }
}
