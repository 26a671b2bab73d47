//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use kbassoc::geometry::{ellipsoid_distance, extract_center_shape, Ellipsoid};
use kbassoc::oracle::{
    count_exact, enumerate_all, permanent_marginals, permanent_ryser, true_marginals,
    EnumerationBudget, SquareMatrix,
};
use kbassoc::random::random_corpus;
use kbassoc::{
    approximate_marginals, count_bound, kbest, marginals, AssignmentProblem, Execution,
    FeasibilityMatrix, ScenarioConfig,
};
use kbassoc_cli::study::{
    delta_curve, run_error_study, run_timing, ErrorOptions, Method, TimingOptions,
};
use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-9;
const MURTY_TOL: f64 = 1e-10;
const PERM_TOL: f64 = 1e-10;
const GAMMA_SLACK: f64 = kbassoc_cli::study::GAMMA_SLACK;
const CURVE_SLACK: f64 = 1e-15;
const DELTA_CEILING: f64 = 1e-5;
const GEOMETRY_TOL: f64 = 1e-8;
const SPEED_MEDIAN: Duration = Duration::from_millis(1);
const SPEED_P99: Duration = Duration::from_millis(10);
const RYSER_RATIO: f64 = 10.0;
const DEMO_FRAMES: usize = 600;
const DEMO_SEED: u64 = 1;
const MAX_DIM: usize = 25;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn oracle_corpus() -> Vec<AssignmentProblem> {
    random_corpus(20_240_601, 1000, 5, 5, 0.0)
}

fn exhaustive(p: &AssignmentProblem) -> usize {
    count_exact(p).unwrap() as usize + 1
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for p in &oracle_corpus() {
        let brute = true_marginals(p, EnumerationBudget::default()).unwrap();
        let perm = permanent_marginals(p).unwrap();
        let approx = approximate_marginals(p, exhaustive(p));
        if brute.truncated || approx.gamma != 0.0 {
            return outcome(false, format!("problem {:?} not computed exactly", p.id()));
        }
        worst = worst
            .max(brute.max_abs_diff(&perm))
            .max(brute.max_abs_diff(&approx))
            .max(perm.max_abs_diff(&approx));
    }
    let t = start.elapsed();
    outcome(
        worst <= ORACLE_TOL && t.as_secs() < 60,
        format!(
            "1000 problems, max pairwise diff {worst:.2e} in {:.1}s (tol {ORACLE_TOL:e}, < 60s)",
            t.as_secs_f64()
        ),
    )
}

fn error_bound_holds() -> Outcome {
    let start = Instant::now();
    let (mut checks, mut violations, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    for p in &oracle_corpus() {
        let truth = true_marginals(p, EnumerationBudget::default()).unwrap();
        let ranked = kbest(p, exhaustive(p));
        for k in [1, 2, 5, 10, ranked.len()] {
            let prefix = kbassoc::RankedAssignmentSet {
                entries: ranked.entries[..k.min(ranked.len())].to_vec(),
                exhausted: ranked.exhausted && k >= ranked.len(),
            };
            let approx = marginals(p, &prefix);
            let delta = truth.max_abs_diff(&approx);
            checks += 1;
            worst = worst.max(delta - approx.gamma);
            if delta > approx.gamma + GAMMA_SLACK {
                violations += 1;
            }
        }
    }
    let t = start.elapsed();
    outcome(
        violations == 0 && t.as_secs() < 120,
        format!(
            "{checks} (problem, K) pairs, {violations} violations, max delta-gamma {worst:.2e} in {:.1}s (slack {GAMMA_SLACK:e}, < 120s)",
            t.as_secs_f64()
        ),
    )
}

fn murty_matches_brute_force() -> Outcome {
    let start = Instant::now();
    let corpus = random_corpus(77, 500, 5, 5, 0.25);
    let mut worst = 0.0f64;
    let mut prefixes = 0usize;
    for p in &corpus {
        let mut brute: Vec<f64> = enumerate_all(p, EnumerationBudget::default())
            .unwrap()
            .iter()
            .map(|a| a.log_prob())
            .collect();
        brute.sort_by(|a, b| b.total_cmp(a));
        let total = brute.len();
        let ranked = kbest(p, total + 1);
        if ranked.len() != total || !ranked.exhausted {
            return outcome(
                false,
                format!(
                    "problem {:?}: {} of {total} assignments",
                    p.id(),
                    ranked.len()
                ),
            );
        }
        let got: Vec<f64> = ranked.entries.iter().map(|a| a.log_prob()).collect();
        for (g, b) in got.iter().zip(&brute) {
            worst = worst.max((g - b).abs());
        }
        prefixes += total;
        for k in [1, 2, 3, 5, 10, total / 2, total] {
            let k = k.clamp(1, total);
            let direct: Vec<f64> = kbest(p, k).entries.iter().map(|a| a.log_prob()).collect();
            if direct.len() != k {
                return outcome(
                    false,
                    format!("problem {:?}: kbest({k}) returned {}", p.id(), direct.len()),
                );
            }
            for (g, b) in direct.iter().zip(&brute) {
                worst = worst.max((g - b).abs());
            }
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= MURTY_TOL && t.as_secs() < 60,
        format!(
            "500 problems, {prefixes} ranks, max |log p| diff {worst:.2e} in {:.1}s (tol {MURTY_TOL:e}, < 60s)",
            t.as_secs_f64()
        ),
    )
}

fn direct_permanent(m: &SquareMatrix) -> f64 {
    fn go(m: &SquareMatrix, row: usize, used: &mut Vec<bool>) -> f64 {
        if row == m.dim() {
            return 1.0;
        }
        let mut s = 0.0;
        for c in 0..m.dim() {
            if !used[c] {
                used[c] = true;
                s += m.get(row, c) * go(m, row + 1, used);
                used[c] = false;
            }
        }
        s
    }
    go(m, 0, &mut vec![false; m.dim()])
}

fn permanent_identities() -> Outcome {
    let identity = permanent_ryser(&SquareMatrix::identity(6)).unwrap();
    let mut worst_ones = 0.0f64;
    for d in 2..=10 {
        let log_fact: f64 = (2..=d).map(|i| (i as f64).ln()).sum();
        let got = permanent_ryser(&SquareMatrix::new(d, vec![1.0; d * d]).unwrap()).unwrap();
        worst_ones = worst_ones.max((got - log_fact).abs() / log_fact);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_random = 0.0f64;
    for _ in 0..200 {
        let m =
            SquareMatrix::new(5, (0..25).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let want = direct_permanent(&m);
        let got = permanent_ryser(&m).unwrap().exp();
        worst_random = worst_random.max((got - want).abs() / want);
    }
    outcome(
        identity == 0.0 && worst_ones <= PERM_TOL && worst_random <= PERM_TOL,
        format!(
            "log perm(I) = {identity}, all-ones d=2..10 rel {worst_ones:.2e}, 200 random 5x5 rel {worst_random:.2e} (tol {PERM_TOL:e})"
        ),
    )
}

fn count_bound_valid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut below, mut gated, mut gated_equal) = (0usize, 0usize, 0usize);
    for i in 0..1000 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(0..=8);
        let density = match i % 4 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        };
        let ok: Vec<bool> = (0..n * m).map(|_| rng.random_bool(density)).collect();
        let f = FeasibilityMatrix::from_pattern(n, m, &ok);
        let log_lik = ok
            .iter()
            .map(|&b| if b { 0.0 } else { f64::NEG_INFINITY })
            .collect();
        let p = AssignmentProblem::new(n, m, log_lik, vec![0.0; n]).unwrap();
        let exact = count_exact(&p).unwrap();
        let bound = count_bound(&f);
        let holds = match bound.exact {
            Some(b) => b >= exact,
            None => bound.ln >= (exact as f64).ln(),
        };
        if !holds {
            below += 1;
        }
        if ok.iter().all(|&b| !b) {
            gated += 1;
            if bound.exact == Some(exact) {
                gated_equal += 1;
            }
        }
    }
    outcome(
        below == 0 && gated > 0 && gated_equal == gated,
        format!("1000 patterns, {below} below exact count, equality on {gated_equal}/{gated} fully gated"),
    )
}

fn demo_corpus() -> Vec<AssignmentProblem> {
    kbassoc::generate_corpus(
        &ScenarioConfig::demo(DEMO_FRAMES, DEMO_SEED),
        Execution::Parallel,
    )
    .unwrap()
    .into_iter()
    .filter(|p| p.max_dim() <= MAX_DIM)
    .collect()
}

fn percentile(sorted: &[u128], q: f64) -> Duration {
    let i = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    Duration::from_nanos(sorted[i] as u64)
}

fn speed(corpus: &[AssignmentProblem]) -> Outcome {
    let records = run_timing(
        corpus,
        &TimingOptions {
            ks: vec![200],
            warmup: 1,
            ryser_max_dim: 20,
        },
    )
    .unwrap();
    let mut kbest_ns: Vec<u128> = records
        .iter()
        .filter(|r| r.method == Method::KBest(200))
        .map(|r| r.wall_time_ns)
        .collect();
    kbest_ns.sort_unstable();
    let (median, p99) = (percentile(&kbest_ns, 0.5), percentile(&kbest_ns, 0.99));
    let mut ratios = Vec::new();
    for pair in records.windows(2) {
        let (k, r) = (&pair[0], &pair[1]);
        if r.method == Method::RyserExact && k.problem_id == r.problem_id && r.max_dim >= 18 {
            ratios.push(r.wall_time_ns as f64 / k.wall_time_ns.max(1) as f64);
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        kbest_ns.len() >= 500 && median < SPEED_MEDIAN && p99 < SPEED_P99 && !ratios.is_empty() && min_ratio >= RYSER_RATIO,
        format!(
            "{} problems, kbest-200 median {:.3}ms p99 {:.3}ms (< 1ms, < 10ms); ryser/kbest >= {min_ratio:.0}x on {} problems with max_dim >= 18 (>= {RYSER_RATIO}x)",
            kbest_ns.len(),
            median.as_secs_f64() * 1e3,
            p99.as_secs_f64() * 1e3,
            ratios.len()
        ),
    )
}

fn error_order_statistics(corpus: &[AssignmentProblem]) -> Outcome {
    let study = match run_error_study(
        corpus,
        &ErrorOptions {
            ks: vec![20, 200],
            budget: EnumerationBudget::default(),
            exec: Execution::Parallel,
        },
    ) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("{e:#}")),
    };
    let (c20, c200) = (
        delta_curve(&study.records, 20),
        delta_curve(&study.records, 200),
    );
    let dominated = c200
        .iter()
        .zip(&c20)
        .filter(|(a, b)| **a > **b + CURVE_SLACK)
        .count();
    let exact200: Vec<f64> = study
        .records
        .iter()
        .filter(|r| r.k == 200 && !r.truncated)
        .map(|r| r.delta)
        .collect();
    let above = exact200.iter().filter(|&&d| d > DELTA_CEILING).count();
    let worst = exact200.iter().copied().fold(0.0, f64::max);
    outcome(
        study.exact >= 500 && dominated == 0 && above == 0,
        format!(
            "{} exact-truth problems ({} truncated, {} skipped), K=200 curve above K=20 at {dominated} ranks, K=200 worst delta {worst:.2e} ({above} above {DELTA_CEILING:e})",
            study.exact, study.truncated, study.skipped
        ),
    )
}

fn random_ellipsoid(rng: &mut ChaCha8Rng) -> Ellipsoid {
    let mu = Vector3::from_fn(|_, _| rng.random_range(-20.0..20.0));
    let a = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
    let p = a * a.transpose() + Matrix3::identity() * rng.random_range(0.05..2.0);
    Ellipsoid::from_center_shape(mu, p).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn geometry_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut round_trip, mut normalisation, mut rigid) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let e = random_ellipsoid(&mut rng);
        let scale = 1.0 + e.center().norm_squared();
        let (mu, p) = extract_center_shape(e.dual()).unwrap();
        round_trip = round_trip.max((mu - e.center()).amax().max((p - e.shape()).amax()) / scale);

        let s = rng.random_range(0.01..100.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        let (mu, p) = extract_center_shape(&(e.dual() * s)).unwrap();
        normalisation =
            normalisation.max((mu - e.center()).amax().max((p - e.shape()).amax()) / scale);

        let other = random_ellipsoid(&mut rng);
        let pose = Isometry3::from_parts(
            Translation3::from(Vector3::from_fn(|_, _| rng.random_range(-30.0..30.0))),
            UnitQuaternion::from_scaled_axis(Vector3::from_fn(|_, _| {
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
            })),
        );
        let d = ellipsoid_distance(&e, &other).unwrap();
        let moved = ellipsoid_distance(
            &e.transform_dual(&pose).unwrap(),
            &other.transform_dual(&pose).unwrap(),
        )
        .unwrap();
        rigid = rigid.max(rel(moved, d));
    }
    let worst = round_trip.max(normalisation).max(rigid);
    outcome(
        worst <= GEOMETRY_TOL,
        format!(
            "1000 ellipsoids, round trip {round_trip:.2e}, normalisation {normalisation:.2e}, rigid motion {rigid:.2e} (tol {GEOMETRY_TOL:e})"
        ),
    )
}

fn run(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_kbassoc"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let frames = DEMO_FRAMES.to_string();
    let seed = DEMO_SEED.to_string();
    let gen = ["gen", "--frames", &frames, "--seed", &seed];
    let result = (|| -> Result<String, String> {
        let a = run(dir.path(), &gen)?;
        let b = run(dir.path(), &gen)?;
        let serial = run(
            dir.path(),
            &[
                "--workers",
                "1",
                "gen",
                "--frames",
                &frames,
                "--seed",
                &seed,
            ],
        )?;
        if a != b || a != serial {
            return Err("gen output differs between runs".into());
        }
        std::fs::write(dir.path().join("corpus.jsonl"), &a).unwrap();
        let bench = ["bench-error", "corpus.jsonl", "--format", "csv"];
        let x = run(dir.path(), &bench)?;
        let y = run(dir.path(), &bench)?;
        let serial = run(
            dir.path(),
            &[
                "--workers",
                "1",
                "bench-error",
                "corpus.jsonl",
                "--format",
                "csv",
            ],
        )?;
        if x != y || x != serial {
            return Err("bench-error CSV differs between runs".into());
        }
        Ok(format!(
            "gen {} bytes and bench-error CSV {} bytes identical over two runs and --workers 1",
            a.len(),
            x.len()
        ))
    })();
    match result {
        Ok(detail) => outcome(true, detail),
        Err(e) => outcome(false, e),
    }
}

fn main() {
    let corpus = demo_corpus();
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("error bound", Box::new(error_bound_holds)),
        ("murty correctness", Box::new(murty_matches_brute_force)),
        ("permanent identities", Box::new(permanent_identities)),
        ("count bound", Box::new(count_bound_valid)),
        ("speed", Box::new(|| speed(&corpus))),
        (
            "error order statistics",
            Box::new(|| error_order_statistics(&corpus)),
        ),
        ("geometry", Box::new(geometry_suites)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
