//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p bachet --test acceptance` (add `--release` for
//! representative timings; the time limits are also met by debug builds).

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bachet::analysis::{self, DeviationSeries, DropConstants, LemmaId, SLACK_TOLERANCE};
use bachet::cli::{self, Command, ExperimentConfig, Overrides, EXIT_OK};
use bachet::engine::{self, TieRule};
use bachet::lottery::{GameSpec, LotterySet};
use bachet::oracles::{self, brute_force_values, one_shot_deviations, Policy, SimConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn half_half() -> LotterySet {
    LotterySet::finite(vec![vec![0.5, 0.5]]).unwrap()
}

/// The three convergence configurations: ε = 0.05 truncated simplex for
/// m = 2 and m = 3, and {(0.9, 0.1), (0.1, 0.9)}.
fn convergence_sets() -> Vec<(&'static str, usize, LotterySet)> {
    vec![
        (
            "simplex eps=0.05 m=2",
            2,
            LotterySet::truncated_simplex(vec![0.05; 2]).unwrap(),
        ),
        (
            "simplex eps=0.05 m=3",
            3,
            LotterySet::truncated_simplex(vec![0.05; 3]).unwrap(),
        ),
        (
            "finite {(0.9,0.1),(0.1,0.9)}",
            2,
            LotterySet::finite(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap(),
        ),
    ]
}

fn k_json(set: &LotterySet) -> String {
    match set {
        LotterySet::TruncatedSimplex { epsilon } => {
            format!(r#"{{"type": "truncated_simplex", "epsilon": {epsilon:?}}}"#)
        }
        LotterySet::Finite(l) | LotterySet::PolytopeVertices(l) => {
            let rows: Vec<Vec<f64>> = l.iter().map(|x| x.probs().to_vec()).collect();
            format!(r#"{{"type": "finite", "lotteries": {rows:?}}}"#)
        }
    }
}

fn criterion_1() -> Outcome {
    let spec = GameSpec::new(6, 2, half_half()).unwrap();
    let start = Instant::now();
    let vt = engine::solve(&spec, TieRule::LowestIndex).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let want = [0.0, 0.5, 0.75, 0.375, 0.4375, 0.59375];
    for (k, w) in (1..=6).zip(want) {
        let got = vt.p(k);
        ensure((got - w).abs() <= 1e-12, || {
            format!("p_{k} = {got}, want {w}")
        })?;
    }
    ensure(elapsed < Duration::from_millis(1), || {
        format!("runtime {elapsed:?} >= 1 ms")
    })?;
    Ok(format!("p_1..p_6 match to 1e-12 in {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let corpus = vec![
        (2, half_half()),
        (
            2,
            LotterySet::finite(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap(),
        ),
        (3, LotterySet::pure_moves(3).unwrap()),
        (2, LotterySet::finite(vec![vec![1.0, 0.0]]).unwrap()),
        (
            3,
            LotterySet::truncated_simplex(vec![0.1, 0.2, 0.3]).unwrap(),
        ),
        (5, LotterySet::truncated_simplex(vec![0.05; 5]).unwrap()),
        (
            4,
            LotterySet::polytope_vertices(vec![
                vec![0.1, 0.2, 0.3, 0.4],
                vec![0.7, 0.1, 0.1, 0.1],
                vec![0.25, 0.25, 0.25, 0.25],
            ])
            .unwrap(),
        ),
        (3, LotterySet::finite(vec![vec![0.5, 0.5, 0.0]]).unwrap()),
    ];
    let count = corpus.len();
    for (m, set) in corpus {
        for tie_rule in [
            TieRule::LowestIndex,
            TieRule::HighestIndex,
            TieRule::SeededRandom { seed: 3 },
        ] {
            let vt = engine::solve(&GameSpec::new(25, m, set.clone()).unwrap(), tie_rule).unwrap();
            let boundary = &vt.values_with_boundary()[..m - 1];
            ensure(boundary.iter().all(|&p| p == 1.0), || {
                format!("boundary {boundary:?} for m={m}")
            })?;
            ensure(vt.p(0) == 1.0 && vt.p(1 - m as i64) == 1.0, || {
                "p_s != 1 for s <= 0".into()
            })?;
            ensure(vt.p(1) == 0.0, || {
                format!("p_1 = {:e} for {set:?}", vt.p(1))
            })?;
        }
    }
    Ok(format!(
        "p_s = 1 (s <= 0) and p_1 = 0 exactly on {count} sets x 3 tie rules"
    ))
}

fn criterion_3() -> Outcome {
    let vt = engine::solve(
        &GameSpec::new(50, 3, LotterySet::pure_moves(3).unwrap()).unwrap(),
        TieRule::LowestIndex,
    )
    .unwrap();
    for k in 1..=50i64 {
        let want = if k % 4 == 1 { 0.0 } else { 1.0 };
        ensure(vt.p(k) == want, || {
            format!("p_{k} = {}, want {want}", vt.p(k))
        })?;
    }
    Ok("pure moves m=3, n=50: p_k = 0 iff k = 1 (mod 4), exactly".into())
}

fn criterion_4() -> Outcome {
    const N: usize = 100_000;
    const TARGET: f64 = 1e-3;
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    for (name, m, set) in convergence_sets() {
        let c = set.conditions().unwrap();
        let dc = DropConstants::from_conditions(&c, None).map_err(|e| e.to_string())?;
        let horizon = dc.convergence_horizon(m, TARGET);
        let spec = GameSpec::new(N, m, set).unwrap();
        let start = Instant::now();
        let vt = engine::solve(&spec, TieRule::LowestIndex).unwrap();
        slowest = slowest.max(start.elapsed());
        let ds = DeviationSeries::from_table(&vt);
        ensure(horizon <= N, || {
            format!("{name}: horizon {horizon} beyond table")
        })?;
        for k in horizon..=N {
            let d = ds.delta(k as i64);
            ensure(d < TARGET, || {
                format!("{name}: Delta_{k} = {d} >= {TARGET}")
            })?;
        }
        for k in 2..=N as i64 {
            ensure(
                ds.delta_bar(k) <= ds.delta_bar(k - 1) + SLACK_TOLERANCE,
                || format!("{name}: DeltaBar increases at k = {k}"),
            )?;
        }
        notes.push(format!("{name}: delta*={:.4} N*={horizon}", dc.delta));
    }

    // ten candidates, the largest set the timing requirement covers
    let ten = LotterySet::truncated_simplex(vec![0.02; 10]).unwrap();
    let ten_spec = GameSpec::new(N, 10, ten).unwrap();
    let start = Instant::now();
    let vt = engine::solve(&ten_spec, TieRule::LowestIndex).unwrap();
    slowest = slowest.max(start.elapsed());
    ensure(vt.candidates().len() == 10, || {
        "expected 10 candidates".into()
    })?;
    ensure(slowest < Duration::from_secs(1), || {
        format!("solve at n=1e5 took {slowest:?}")
    })?;
    Ok(format!(
        "{}; slowest n=1e5 solve {slowest:?}",
        notes.join("; ")
    ))
}

fn criterion_5() -> Outcome {
    let required = [
        LemmaId::Monotonicity,
        LemmaId::MonotonicityWindow,
        LemmaId::NoLongWinningAfter,
        LemmaId::NoLongWinningBefore,
        LemmaId::KmBound,
        LemmaId::Corridor,
        LemmaId::DropDown,
        LemmaId::DropTwoM,
        LemmaId::DropThreeM,
        LemmaId::PlusMinus,
        LemmaId::EnvelopeBlocks,
        LemmaId::EnvelopeInterpolated,
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut checked = 0usize;
    for (i, (name, m, set)) in convergence_sets().into_iter().enumerate() {
        let text = format!(
            r#"{{"command": "verify", "game": {{"n": 10000, "m": {m}, "K": {}}}, "kappa_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]}}"#,
            k_json(&set)
        );
        let config = ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("v{i}"));
        let outcome = cli::run(
            Command::Verify,
            &config,
            &Overrides {
                output: Some(out.clone()),
                seed: None,
            },
        )
        .map_err(|e| format!("{name}: {e}"))?;
        ensure(outcome.exit_code == EXIT_OK, || {
            format!("{name}: exit {}", outcome.exit_code)
        })?;

        // recompute directly for per-lemma detail
        let c = set.conditions().unwrap();
        let dc = DropConstants::from_conditions(&c, None).unwrap();
        let vt = engine::solve(
            &GameSpec::new(10_000, m, set).unwrap(),
            TieRule::LowestIndex,
        )
        .unwrap();
        let v = analysis::verify_all(&vt, &c, &dc, &analysis::default_kappa_grid());
        for id in required {
            let reports: Vec<_> = v.reports.iter().filter(|r| r.lemma_id == id).collect();
            ensure(!reports.is_empty(), || {
                format!("{name}: no report for {id:?}")
            })?;
            for r in reports {
                ensure(r.passed(), || {
                    format!("{name}: {id:?} {:?}", &r.violations[..1])
                })?;
                checked += r.checked_k.len();
            }
        }
        let kappas = v
            .reports
            .iter()
            .filter(|r| r.lemma_id == LemmaId::KmBound)
            .count();
        ensure(kappas == 9, || format!("{name}: {kappas} kappa reports"))?;

        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("verification.json")).unwrap())
                .unwrap();
        ensure(json["total_violations"] == 0, || {
            format!("{name}: report lists violations")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("runtime {elapsed:?} >= 5 s")
    })?;
    Ok(format!(
        "0 violations across {checked} checked instances, slack 1e-9, {elapsed:?}"
    ))
}

fn oracle_corpus() -> Vec<(usize, Vec<Vec<f64>>)> {
    vec![
        (2, vec![vec![0.5, 0.5]]),
        (2, vec![vec![0.9, 0.1], vec![0.1, 0.9]]),
        (2, vec![vec![0.7, 0.3], vec![0.3, 0.7], vec![0.5, 0.5]]),
        (2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        (2, vec![vec![0.6, 0.4], vec![0.6, 0.4]]),
        (2, vec![vec![0.2, 0.8], vec![0.65, 0.35], vec![0.4, 0.6]]),
        (
            3,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        ),
        (
            3,
            vec![
                vec![0.8, 0.1, 0.1],
                vec![0.1, 0.8, 0.1],
                vec![0.1, 0.1, 0.8],
            ],
        ),
        (3, vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5]]),
        (
            3,
            vec![
                vec![0.2, 0.3, 0.5],
                vec![0.5, 0.3, 0.2],
                vec![0.2, 0.3, 0.5],
            ],
        ),
        (3, vec![vec![0.6, 0.2, 0.2]]),
    ]
}

fn criterion_6() -> Outcome {
    let mut instances = 0;
    for (m, rows) in oracle_corpus() {
        for n in 1..=10 {
            let spec = GameSpec::new(n, m, LotterySet::finite(rows.clone()).unwrap()).unwrap();
            let vt = engine::solve(&spec, TieRule::LowestIndex).unwrap();
            let bf = brute_force_values(&spec).map_err(|e| e.to_string())?;
            ensure(bf.equilibrium_profiles >= 1, || {
                format!("{rows:?} n={n}: no equilibrium")
            })?;
            for k in 1..=n {
                let diff = (bf.values[k - 1] - vt.p(k as i64)).abs();
                ensure(diff <= 1e-10, || {
                    format!("{rows:?} n={n} k={k}: diff {diff:e}")
                })?;
            }
            let gains = one_shot_deviations(&vt, 1e-12);
            ensure(gains.is_empty(), || {
                format!("{rows:?} n={n}: profitable deviation {:?}", gains[0])
            })?;
            instances += 1;
        }
    }
    Ok(format!(
        "{instances} instances: enumeration = engine to 1e-10, no profitable one-shot deviation"
    ))
}

fn criterion_7() -> Outcome {
    const R: u64 = 1_000_000;
    const SEED: u64 = 20_240_501;
    let vt = engine::solve(
        &GameSpec::new(20, 2, half_half()).unwrap(),
        TieRule::LowestIndex,
    )
    .unwrap();
    let policy = Policy::from_table(&vt);
    let start = Instant::now();
    let mut notes = Vec::new();
    for n in [2usize, 4, 7, 20] {
        let p = vt.p(n as i64);
        let r = oracles::estimate_win_prob(
            &policy,
            &SimConfig {
                n,
                replications: R,
                seed: SEED,
            },
        )
        .map_err(|e| e.to_string())?;
        let bound = 4.0 * (p * (1.0 - p) / R as f64).sqrt();
        let err = (r.p_hat - p).abs();
        ensure(err <= bound, || {
            format!("n={n}: |{} - {p}| = {err} > {bound}", r.p_hat)
        })?;
        notes.push(format!("n={n} z={:.2}", err / (bound / 4.0)));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("runtime {elapsed:?} >= 10 s")
    })?;
    Ok(format!("{}; {elapsed:?}", notes.join(", ")))
}

fn criterion_8() -> Outcome {
    let corpus: Vec<(usize, LotterySet)> = vec![
        (
            2,
            LotterySet::finite(vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        ),
        (
            2,
            LotterySet::finite(vec![vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap(),
        ),
        (3, LotterySet::pure_moves(3).unwrap()),
        (4, LotterySet::pure_moves(4).unwrap()),
        (3, LotterySet::truncated_simplex(vec![0.1; 3]).unwrap()),
        (
            2,
            LotterySet::finite(vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.9, 0.1]]).unwrap(),
        ),
        (
            3,
            LotterySet::finite(vec![
                vec![0.2, 0.3, 0.5],
                vec![0.5, 0.3, 0.2],
                vec![0.2, 0.3, 0.5],
            ])
            .unwrap(),
        ),
    ];
    let mut tie_states = 0usize;
    let mut differing_choices = 0usize;
    for (m, set) in corpus {
        let spec = GameSpec::new(2_000, m, set).unwrap();
        let tables: Vec<_> = [
            TieRule::LowestIndex,
            TieRule::HighestIndex,
            TieRule::SeededRandom { seed: 1 },
            TieRule::SeededRandom { seed: 2 },
        ]
        .into_iter()
        .map(|rule| engine::solve(&spec, rule).unwrap())
        .collect();
        let base = &tables[0];
        for other in &tables[1..] {
            for k in 1..=2_000i64 {
                let diff = (base.p(k) - other.p(k)).abs();
                ensure(diff <= 1e-12, || {
                    format!("m={m} k={k}: values differ by {diff:e}")
                })?;
            }
            differing_choices += (1..=2_000)
                .filter(|&k| base.argmax(k) != other.argmax(k))
                .count();
        }
        tie_states += (1..=2_000).filter(|&k| base.ties(k).len() > 1).count();
    }
    ensure(tie_states > 0 && differing_choices > 0, || {
        "corpus produced no exact ties".into()
    })?;
    Ok(format!(
        "identical values under 4 rules; {tie_states} tied states, {differing_choices} differing choices"
    ))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (
            Command::Verify,
            r#"{"game": {"n": 5000, "m": 3, "K": {"type": "truncated_simplex", "epsilon": [0.05, 0.05, 0.05]}}, "tie_rule": "seeded_random", "tie_seed": 4}"#,
        ),
        (
            Command::Simulate,
            r#"{"game": {"n": 20, "m": 2, "K": {"type": "finite", "lotteries": [[0.5, 0.5], [0.8, 0.2]]}}, "sim": {"replications": 200000, "seed": 77, "n_values": [3, 9, 20]}}"#,
        ),
        (
            Command::Sweep,
            r#"{"game": {"n": 100, "m": 2, "K": {"type": "finite", "lotteries": [[0.5, 0.5]]}}, "sweep": {"n_values": [10, 100], "epsilon_values": [0.05, 0.2]}}"#,
        ),
    ];
    let mut files = 0;
    for (i, (command, text)) in configs.iter().enumerate() {
        let config = ExperimentConfig::from_json(text).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("c{i}_run{run}"));
            let outcome = cli::run(
                *command,
                &config,
                &Overrides {
                    output: Some(out),
                    seed: None,
                },
            )
            .map_err(|e| e.to_string())?;
            outputs.push(outcome.artifacts);
        }
        for (a, b) in outputs[0].iter().zip(&outputs[1]) {
            ensure(same_bytes(a, b), || {
                format!("{} differs from {}", a.display(), b.display())
            })?;
            files += 1;
        }
    }
    Ok(format!(
        "{files} artifact pairs byte-identical across repeated verify/simulate/sweep runs"
    ))
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    matches!((fs::read(a), fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 hand-recursion golden values", criterion_1),
        ("2 boundary convention", criterion_2),
        ("3 classical degenerate regression", criterion_3),
        ("4 convergence at desk scale", criterion_4),
        ("5 lemma suite via verify", criterion_5),
        ("6 oracle equivalence", criterion_6),
        ("7 Monte-Carlo consistency", criterion_7),
        ("8 tie-break invariance", criterion_8),
        ("9 determinism", criterion_9),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
