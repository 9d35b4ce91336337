//! Acceptance gate: seven criteria, one pass/fail line each.
//!
//! Timed sections take a shared lock so the criteria's runtime budgets are
//! measured without interference from sibling tests on other threads.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use num::bigint::BigUint;
use num::complex::Complex64;
use qne::pcalc::{amplify_p, iterate_p, lift_p, plan_p};
use qne::plan::{eval_ne_d, parse_plan, Plan};
use qne::rational::{int, ratio, to_f64};
use qne::sim::{Direction, Simulator};
use qne::verify::{sensitivity_check, structured_inputs, verify_exact_exhaustive};
use qne::{fixtures, planner, presets};

static TIMING: Mutex<()> = Mutex::new(());

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let guard = TIMING.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    drop(guard);
    (out, elapsed)
}

fn report(criterion: &str, ok: bool, detail: &str) {
    println!("{criterion}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

#[test]
fn criterion_1_exact_ladder_to_eight_queries() {
    let ((ladder_ok, queries_ok), elapsed) = timed(|| {
        let p1 = iterate_p(&int(-1)).unwrap();
        let p2 = iterate_p(&p1).unwrap();
        let lifted = lift_p(&p2, &int(0)).unwrap();
        let p4 = amplify_p(&lifted.p_out, 2).unwrap();
        let ladder_ok = p1 == ratio(-7, 9)
            && p2 == ratio(-295, 729)
            && lifted.p_out == int(0)
            && p4 == int(-1);

        let plan = presets::by_name("exact-ne2").unwrap().plan();
        let mut ks: Vec<BigUint> = Vec::new();
        let mut node = Some(&plan);
        while let Some(n) = node {
            ks.push(n.queries());
            node = n.child();
        }
        ks.reverse(); // innermost first
        let want: Vec<BigUint> = [1u32, 2, 4, 4, 8].iter().map(|&k| BigUint::from(k)).collect();
        (ladder_ok, ks == want)
    });
    let ok = ladder_ok && queries_ok && elapsed < Duration::from_millis(1);
    report(
        "criterion 1 (exact 8-query ladder)",
        ok,
        &format!(
            "p ladder exact: {ladder_ok}, query counts 1,2,4,4,8: {queries_ok}, {elapsed:?} (budget 1 ms)"
        ),
    );
}

#[test]
fn criterion_2_exact_ladder_to_2048_queries() {
    // one recurrence step per node, innermost first; where two nodes share
    // a query count (the free lift), the inner one is the printed station
    fn fold_stations(
        plan: &Plan,
        stations: &mut std::collections::BTreeMap<BigUint, qne::Rational>,
    ) -> qne::Rational {
        let p = match plan {
            Plan::Base => int(-1),
            Plan::Iterate(child) => iterate_p(&fold_stations(child, stations)).unwrap(),
            Plan::Amplify { factor, child } => {
                amplify_p(&fold_stations(child, stations), *factor).unwrap()
            }
            Plan::Lift { target, child } => {
                lift_p(&fold_stations(child, stations), target).unwrap().p_out
            }
        };
        stations.entry(plan.queries()).or_insert_with(|| p.clone());
        p
    }

    let ((decimal_devs, final_ok), elapsed) = timed(|| {
        // ladder stations: (queries, printed decimal)
        let stations: [(u32, f64); 5] = [
            (8, 0.123075),
            (16, -0.969704),
            (128, 0.223874),
            (256, -0.8997602),
            (1024, -0.14353),
        ];
        let plan = presets::by_name("exact-ne8").unwrap().plan();
        let mut by_queries = std::collections::BTreeMap::new();
        let p_final = fold_stations(&plan, &mut by_queries);
        let devs: Vec<f64> = stations
            .iter()
            .map(|(k, printed)| {
                let p = &by_queries[&BigUint::from(*k)];
                (to_f64(p) - printed).abs()
            })
            .collect();
        let final_ok = p_final == int(-1) && plan.queries() == BigUint::from(2048u32);
        (devs, final_ok)
    });
    let worst = decimal_devs.iter().cloned().fold(0.0f64, f64::max);
    let ok = worst < 1e-6 && final_ok && elapsed < Duration::from_millis(1);
    report(
        "criterion 2 (exact 2048-query ladder)",
        ok,
        &format!(
            "worst printed-decimal deviation {worst:.2e} (tol 1e-6), final (-1, 2048): {final_ok}, {elapsed:?} (budget 1 ms)"
        ),
    );
}

#[test]
fn criterion_3_exhaustive_conformance_depth_two() {
    let (results, elapsed) = timed(|| {
        let mut out = Vec::new();
        for (text, n_bits) in [("iterate(base)", 3u32), ("iterate(iterate(base))", 9)] {
            let plan = parse_plan(text).unwrap();
            let sim = Simulator::new(&plan).unwrap();
            let p = to_f64(&plan_p(&plan).unwrap());
            let mut worst_overlap = 0.0f64;
            let mut worst_residual = 0.0f64;
            for idx in 0..(1u32 << n_bits) {
                let bits: Vec<u8> =
                    (0..n_bits).map(|i| ((idx >> (n_bits - 1 - i)) & 1) as u8).collect();
                let r = sim.overlap(&bits).unwrap();
                if eval_ne_d(plan.depth(), &bits).unwrap() == 0 {
                    worst_overlap =
                        worst_overlap.max((r.overlap - Complex64::new(1.0, 0.0)).norm());
                    worst_residual = worst_residual.max(r.residual_norm);
                } else {
                    worst_overlap = worst_overlap.max((r.overlap - Complex64::new(p, 0.0)).norm());
                }
            }
            out.push((text, worst_overlap, worst_residual));
        }
        out
    });
    let ok = results.iter().all(|(_, o, r)| *o < 1e-9 && *r < 1e-9)
        && elapsed < Duration::from_secs(1);
    let detail: Vec<String> = results
        .iter()
        .map(|(t, o, r)| format!("{t}: overlap dev {o:.2e}, ne0 residual {r:.2e}"))
        .collect();
    report(
        "criterion 3 (exhaustive conformance d<=2)",
        ok,
        &format!("{}; {elapsed:?} (budget 1 s)", detail.join("; ")),
    );
}

#[test]
fn criterion_4_exact_decision_depth_two() {
    let (reports, elapsed) = timed(|| {
        // the 4-query 0-computing plan, and the 8-query (-1)-plan measured
        // through a free lift to 0
        let four = presets::by_name("zero-ne2").unwrap().plan();
        let eight = Plan::lift(int(0), presets::by_name("exact-ne2").unwrap().plan()).unwrap();
        assert_eq!(eight.queries(), BigUint::from(8u32));
        [
            ("4-query", verify_exact_exhaustive(&four, 1e-9).unwrap()),
            ("8-query", verify_exact_exhaustive(&eight, 1e-9).unwrap()),
        ]
    });
    let ok = reports.iter().all(|(_, r)| {
        r.pass
            && r.mismatches == 0
            && r.ne0.count + r.ne1.count == 512
            && r.ne0.max_overlap_dev < 1e-9
            && r.ne1.max_overlap_dev < 1e-9
    }) && elapsed < Duration::from_secs(1);
    let detail: Vec<String> = reports
        .iter()
        .map(|(name, r)| {
            format!(
                "{name}: 512/512 correct={}, worst success-prob dev {:.2e}",
                r.mismatches == 0,
                r.ne0.max_overlap_dev.max(r.ne1.max_overlap_dev)
            )
        })
        .collect();
    report(
        "criterion 4 (exact decision at d=2)",
        ok,
        &format!("{}; {elapsed:?} (budget 1 s)", detail.join("; ")),
    );
}

#[test]
fn criterion_5_desk_scale_ne8_run() {
    let ((count, worst), elapsed) = timed(|| {
        let plan = presets::by_name("exact-ne8").unwrap().plan();
        let sim = Simulator::new(&plan).unwrap();
        assert_eq!(sim.dim(), 6562);
        assert_eq!(plan.queries(), BigUint::from(2048u32));
        let inputs = structured_inputs(8, 2024, 1000);
        assert!(inputs.len() >= 1000);
        let mut worst = 0.0f64;
        for bits in &inputs {
            let expect = if eval_ne_d(8, bits).unwrap() == 0 { 1.0 } else { -1.0 };
            let r = sim.overlap(bits).unwrap();
            worst = worst.max((r.overlap - Complex64::new(expect, 0.0)).norm());
        }
        (inputs.len(), worst)
    });
    let ok = worst < 1e-8 && elapsed < Duration::from_secs(300);
    report(
        "criterion 5 (desk-scale NE^8 run)",
        ok,
        &format!(
            "{count} inputs, worst overlap deviation {worst:.2e} (tol 1e-8), {elapsed:.2?} (budget 300 s, single-threaded)"
        ),
    );
}

#[test]
fn criterion_6_planner_reproduction() {
    let ((deep, shallow), elapsed) = timed(|| {
        let deep = planner::search(&planner::SearchConfig {
            t_max: 8,
            c_max: 2,
            ..planner::SearchConfig::default()
        })
        .unwrap();
        let shallow = planner::search(&planner::SearchConfig {
            t_max: 2,
            c_max: 2,
            ..planner::SearchConfig::default()
        })
        .unwrap();
        (deep, shallow)
    });
    let deep_ok = deep.depth == 8
        && deep.queries == BigUint::from(2048u32)
        && (deep.exponent - 2.59366).abs() < 1e-4;
    let shallow_ok = shallow.queries == BigUint::from(8u32)
        && (shallow.exponent - 2.82843).abs() < 1e-4;
    let ok = deep_ok && shallow_ok && elapsed < Duration::from_secs(60);
    report(
        "criterion 6 (planner reproduction)",
        ok,
        &format!(
            "t_max=8: {} queries at depth {}, exponent {:.6}; t_max=2: {} queries, exponent {:.6}; {elapsed:?} (budget 60 s)",
            deep.queries, deep.depth, deep.exponent, shallow.queries, shallow.exponent
        ),
    );
}

#[test]
fn criterion_7_property_suites() {
    let mut failures: Vec<String> = Vec::new();

    // unitarity and forward-inverse identity across all node kinds, dim <= 64
    let unitarity_plans = [
        "base",
        "iterate(base)",
        "amplify(2, iterate(base))",
        "amplify(3, lift(1/3, iterate(base)))",
        "iterate(iterate(base))",
        "lift(0, iterate(iterate(base)))",
        "amplify(2, lift(0, iterate(iterate(base))))",
        "iterate(lift(1/2, iterate(base)))",
    ];
    for text in unitarity_plans {
        let plan = parse_plan(text).unwrap();
        let sim = Simulator::new(&plan).unwrap();
        let n = sim.input_len();
        for idx in [0usize, 1, (1 << n) - 1, 0b101 % (1 << n)] {
            let bits: Vec<u8> = (0..n).map(|i| ((idx >> (n - 1 - i)) & 1) as u8).collect();
            let m = sim.to_dense_matrix(&bits, 64).unwrap();
            if m.unitarity_defect() >= 1e-9 {
                failures.push(format!("{text}: unitarity defect {:.2e}", m.unitarity_defect()));
            }
            let start = sim.start_state();
            let there = sim.apply(&bits, &start, Direction::Forward).unwrap();
            let back = sim.apply(&bits, &there, Direction::Inverse).unwrap();
            let drift: f64 = back
                .as_slice()
                .iter()
                .zip(start.as_slice())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if drift >= 1e-9 {
                failures.push(format!("{text}: forward-inverse drift {drift:.2e}"));
            }
        }
    }

    // Chebyshev composition law, exact
    for num in [-9i64, -5, 0, 3, 7] {
        let p = ratio(num, 10);
        let nested = amplify_p(&amplify_p(&p, 2).unwrap(), 3).unwrap();
        if nested != amplify_p(&p, 6).unwrap() {
            failures.push(format!("chebyshev composition broke at p={num}/10"));
        }
    }

    // reflected-component norm sqrt(2)(1-p)/3 on NE=1 inputs
    for child_text in ["base", "iterate(base)"] {
        let child = parse_plan(child_text).unwrap();
        let p = to_f64(&plan_p(&child).unwrap());
        let expect = (2.0f64).sqrt() * (1.0 - p) / 3.0;
        let child_sim = Simulator::new(&child).unwrap();
        let n = child_sim.input_len();
        let depth = child.depth() + 1;
        for bits in structured_inputs(depth, 5, 10) {
            if eval_ne_d(depth, &bits).unwrap() == 0 {
                continue;
            }
            let ov: Vec<f64> = (0..3)
                .map(|l| child_sim.overlap(&bits[l * n..(l + 1) * n]).unwrap().overlap.re)
                .collect();
            let sum: f64 = ov.iter().sum();
            let beta = (ov.iter().map(|o| o * o).sum::<f64>() / 3.0 - sum * sum / 9.0)
                .max(0.0)
                .sqrt();
            if (beta - expect).abs() >= 1e-9 {
                failures.push(format!(
                    "iterate({child_text}): reflected norm {beta} want {expect}"
                ));
            }
        }
    }

    // uniform overlap across the NE=1 class (d=2 exhaustive)
    {
        let plan = parse_plan("iterate(iterate(base))").unwrap();
        let sim = Simulator::new(&plan).unwrap();
        let mut extremes: Option<(f64, f64)> = None;
        for idx in 0..512u32 {
            let bits: Vec<u8> = (0..9).map(|i| ((idx >> (8 - i)) & 1) as u8).collect();
            if eval_ne_d(2, &bits).unwrap() == 1 {
                let o = sim.overlap(&bits).unwrap().overlap.re;
                extremes = Some(match extremes {
                    None => (o, o),
                    Some((lo, hi)) => (lo.min(o), hi.max(o)),
                });
            }
        }
        let (lo, hi) = extremes.unwrap();
        if hi - lo >= 1e-9 {
            failures.push(format!("NE=1 overlap spread {:.2e}", hi - lo));
        }
    }

    // dense oracle equals matrix-free interpreter at d <= 1
    for idx in 0..8u32 {
        let bits: Vec<u8> = (0..3).map(|i| ((idx >> (2 - i)) & 1) as u8).collect();
        let plan = parse_plan("iterate(base)").unwrap();
        let sim = Simulator::new(&plan).unwrap();
        let m = sim.to_dense_matrix(&bits, 64).unwrap();
        let fast = sim.apply(&bits, &sim.start_state(), Direction::Forward).unwrap();
        let slow = m.mul_vec(sim.start_state().as_slice());
        for (a, b) in fast.as_slice().iter().zip(&slow) {
            if (a - b).norm() >= 1e-9 {
                failures.push(format!("dense disagrees with interpreter on input {idx}"));
                break;
            }
        }
    }

    // sensitivity counts
    for d in 0..=3u32 {
        match sensitivity_check(d) {
            Ok(count) if count == 3u64.pow(d) => {}
            other => failures.push(format!("sensitivity d={d}: {other:?}")),
        }
    }

    // named fixtures including the orthogonality check at 1e-10
    for fixture in fixtures::all() {
        if let Err(e) = fixture.run(1e-9) {
            failures.push(e);
        }
    }

    let ok = failures.is_empty();
    report(
        "criterion 7 (property suites)",
        ok,
        &if ok {
            "unitarity, inverses, composition, residuals, uniformity, dense oracle, sensitivity, fixtures".to_string()
        } else {
            failures.join("; ")
        },
    );
}
