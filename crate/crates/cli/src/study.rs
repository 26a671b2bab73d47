//! Per-problem timing and marginal-error measurements over a corpus.

use std::time::Instant;

use anyhow::{bail, Result};
use kbassoc::oracle::{permanent_marginals_with, true_marginals, EnumerationBudget};
use kbassoc::{approximate_marginals, par, AssignmentProblem, Error, Execution};

pub const TIMING_HEADER: [&str; 7] = [
    "problem_id",
    "method",
    "k",
    "n_meas",
    "n_land",
    "max_dim",
    "wall_time_ns",
];

pub const ERROR_HEADER: [&str; 8] = [
    "problem_id",
    "k",
    "n_meas",
    "n_land",
    "max_dim",
    "delta",
    "gamma",
    "truncated",
];

/// Slack for round-off when checking `delta <= gamma`: with exhaustive
/// enumeration γ is exactly 0 while δ is a sum-order difference.
pub const GAMMA_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    KBest(usize),
    RyserExact,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::KBest(k) => write!(f, "kbest-{k}"),
            Method::RyserExact => f.write_str("ryser-exact"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRecord {
    pub problem_id: String,
    pub method: Method,
    pub n_meas: usize,
    pub n_land: usize,
    pub max_dim: usize,
    pub wall_time_ns: u128,
}

impl TimingRecord {
    pub fn csv_row(&self) -> [String; 7] {
        let k = match self.method {
            Method::KBest(k) => k.to_string(),
            Method::RyserExact => String::new(),
        };
        [
            self.problem_id.clone(),
            self.method.to_string(),
            k,
            self.n_meas.to_string(),
            self.n_land.to_string(),
            self.max_dim.to_string(),
            self.wall_time_ns.to_string(),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "problem_id": self.problem_id,
            "method": self.method.to_string(),
            "k": match self.method { Method::KBest(k) => Some(k), Method::RyserExact => None },
            "n_meas": self.n_meas,
            "n_land": self.n_land,
            "max_dim": self.max_dim,
            "wall_time_ns": self.wall_time_ns as u64,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub problem_id: String,
    pub k: usize,
    pub n_meas: usize,
    pub n_land: usize,
    pub max_dim: usize,
    pub delta: f64,
    pub gamma: f64,
    pub truncated: bool,
    pub k_used: usize,
    pub wall_time_ns: u128,
}

impl ErrorRecord {
    /// Fails if the measured error exceeds the certified bound. Truncated
    /// truth is itself approximate, so only exact truth is checked.
    pub fn check(self) -> Result<Self> {
        let within = self.delta <= self.gamma + GAMMA_SLACK;
        if !self.truncated && !within {
            bail!(
                "problem {} K={}: delta {:e} exceeds gamma {:e}",
                self.problem_id,
                self.k,
                self.delta,
                self.gamma
            );
        }
        Ok(self)
    }

    pub fn csv_row(&self) -> [String; 8] {
        [
            self.problem_id.clone(),
            self.k.to_string(),
            self.n_meas.to_string(),
            self.n_land.to_string(),
            self.max_dim.to_string(),
            format!("{:e}", self.delta),
            format!("{:e}", self.gamma),
            self.truncated.to_string(),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "problem_id": self.problem_id,
            "k": self.k,
            "n_meas": self.n_meas,
            "n_land": self.n_land,
            "max_dim": self.max_dim,
            "delta": self.delta,
            "gamma": self.gamma,
            "truncated": self.truncated,
            "k_used": self.k_used,
        })
    }
}

pub fn problem_id(p: &AssignmentProblem, index: usize) -> String {
    p.id().unwrap_or_else(|| index.to_string())
}

#[derive(Clone, Debug)]
pub struct TimingOptions {
    pub ks: Vec<usize>,
    pub warmup: usize,
    /// Largest square completion timed with Ryser; 0 disables it.
    pub ryser_max_dim: usize,
}

/// Times each method once per problem, sequentially, after `warmup` untimed runs.
/// Only the marginal computation is inside the timed region.
pub fn run_timing(corpus: &[AssignmentProblem], opts: &TimingOptions) -> Result<Vec<TimingRecord>> {
    let mut out = Vec::new();
    for (i, p) in corpus.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        let record = |method, wall_time_ns| TimingRecord {
            problem_id: problem_id(p, i),
            method,
            n_meas: p.n_meas(),
            n_land: p.n_land(),
            max_dim: p.max_dim(),
            wall_time_ns,
        };
        for &k in &opts.ks {
            for _ in 0..opts.warmup {
                std::hint::black_box(approximate_marginals(p, k));
            }
            let start = Instant::now();
            std::hint::black_box(approximate_marginals(p, k));
            out.push(record(Method::KBest(k), start.elapsed().as_nanos()));
        }
        if p.n_meas() + p.n_land() <= opts.ryser_max_dim {
            for _ in 0..opts.warmup {
                std::hint::black_box(permanent_marginals_with(p, Execution::Sequential)?);
            }
            let start = Instant::now();
            std::hint::black_box(permanent_marginals_with(p, Execution::Sequential)?);
            out.push(record(Method::RyserExact, start.elapsed().as_nanos()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ErrorOptions {
    pub ks: Vec<usize>,
    pub budget: EnumerationBudget,
    pub exec: Execution,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorStudy {
    pub records: Vec<ErrorRecord>,
    pub exact: usize,
    pub truncated: usize,
    pub skipped: usize,
}

enum Outcome {
    Records(Vec<ErrorRecord>, bool),
    Skipped,
}

/// δ and γ for every (problem, K). Problems whose truth is out of budget
/// even with truncation are skipped and counted.
pub fn run_error_study(corpus: &[AssignmentProblem], opts: &ErrorOptions) -> Result<ErrorStudy> {
    let indexed: Vec<(usize, &AssignmentProblem)> = corpus
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .collect();
    let outcomes = par::map(opts.exec, &indexed, |&(i, p)| -> Result<Outcome> {
        let truth = match true_marginals(p, opts.budget) {
            Ok(t) => t,
            Err(Error::BudgetExceeded { .. }) => return Ok(Outcome::Skipped),
            Err(e) => return Err(e.into()),
        };
        let records = opts
            .ks
            .iter()
            .map(|&k| {
                let start = Instant::now();
                let approx = approximate_marginals(p, k);
                let wall_time_ns = start.elapsed().as_nanos();
                ErrorRecord {
                    problem_id: problem_id(p, i),
                    k,
                    n_meas: p.n_meas(),
                    n_land: p.n_land(),
                    max_dim: p.max_dim(),
                    delta: truth.max_abs_diff(&approx),
                    gamma: approx.gamma,
                    truncated: truth.truncated,
                    k_used: approx.k_used,
                    wall_time_ns,
                }
                .check()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Outcome::Records(records, truth.truncated))
    });
    let mut study = ErrorStudy::default();
    for outcome in outcomes {
        match outcome? {
            Outcome::Records(r, truncated) => {
                if truncated {
                    study.truncated += 1;
                } else {
                    study.exact += 1;
                }
                study.records.extend(r);
            }
            Outcome::Skipped => study.skipped += 1,
        }
    }
    Ok(study)
}

/// The sorted δ values of one K.
pub fn delta_curve(records: &[ErrorRecord], k: usize) -> Vec<f64> {
    let mut d: Vec<f64> = records
        .iter()
        .filter(|r| r.k == k)
        .map(|r| r.delta)
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> AssignmentProblem {
        AssignmentProblem::from_rows(
            &[
                vec![0.8f64.ln(), 0.2f64.ln()],
                vec![0.3f64.ln(), 0.7f64.ln()],
            ],
            vec![-20.0, -20.0],
        )
        .unwrap()
        .with_meta("id", "ex")
    }

    #[test]
    fn bound_violation_is_an_error() {
        let r = ErrorRecord {
            problem_id: "x".into(),
            k: 1,
            n_meas: 1,
            n_land: 1,
            max_dim: 1,
            delta: 0.5,
            gamma: 0.1,
            truncated: false,
            k_used: 1,
            wall_time_ns: 0,
        };
        assert!(r.clone().check().is_err());
        assert!(ErrorRecord {
            truncated: true,
            ..r.clone()
        }
        .check()
        .is_ok());
        assert!(ErrorRecord {
            delta: 1e-16,
            gamma: 0.0,
            ..r
        }
        .check()
        .is_ok());
    }

    #[test]
    fn exhaustive_k_has_no_error() {
        let corpus = vec![example()];
        let s = run_error_study(
            &corpus,
            &ErrorOptions {
                ks: vec![8],
                budget: EnumerationBudget::default(),
                exec: Execution::Sequential,
            },
        )
        .unwrap();
        assert_eq!(s.exact, 1);
        assert!(s.records[0].delta <= 1e-12);
        assert_eq!(s.records[0].gamma, 0.0);
    }

    #[test]
    fn timing_rows_per_method() {
        let corpus = vec![example(), example()];
        let t = run_timing(
            &corpus,
            &TimingOptions {
                ks: vec![1, 200],
                warmup: 1,
                ryser_max_dim: 20,
            },
        )
        .unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t[2].method, Method::RyserExact);
        assert_eq!(t[0].csv_row()[1], "kbest-1");
        assert_eq!(t[2].csv_row()[2], "");
    }
}
