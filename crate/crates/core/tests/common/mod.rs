#![allow(dead_code)]

use kbassoc::AssignmentProblem;
use proptest::prelude::*;

/// Entries in `[-10, 0]`, a quarter of them gated.
pub fn problem(max_meas: usize, max_land: usize) -> impl Strategy<Value = AssignmentProblem> {
    (1..=max_meas, 0..=max_land).prop_flat_map(|(n, m)| {
        let entry = prop_oneof![
            1 => Just(f64::NEG_INFINITY),
            3 => -10.0f64..=0.0,
        ];
        (
            proptest::collection::vec(entry, n * m),
            proptest::collection::vec(-10.0f64..=0.0, n),
        )
            .prop_map(move |(l, nulls)| AssignmentProblem::new(n, m, l, nulls).unwrap())
    })
}

/// Descending log-probabilities of every assignment.
pub fn brute_log_probs(p: &AssignmentProblem) -> Vec<f64> {
    let mut v: Vec<f64> = kbassoc::oracle::enumerate_all(p, Default::default())
        .unwrap()
        .iter()
        .map(|a| a.log_prob())
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `cases` runs without on-disk failure persistence (integration tests have no source root).
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
