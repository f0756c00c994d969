//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{brute_force_opt, seeded_instance};
use gsleepy::conditions::{check_general, check_m3, parse_rational, recommended_params};
use gsleepy::instances::{f_case2, gen_case1, gen_case2, gen_one_one_two};
use gsleepy::metrics::{check_leftover, idle_during_delay, waste_bound_with, Profile};
use gsleepy::model::{scale_instance, trace_violations};
use gsleepy::opt::{exact_opt, DEFAULT_NODE_BUDGET};
use gsleepy::policies::{gsleepy, lpt, sleepy_two};
use gsleepy::stress::{run_stress, StressConfig};
use gsleepy::{simulate, Instance, PolicyParams, TAU};
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn policies_for(m: usize) -> Vec<(&'static str, PolicyParams)> {
    vec![
        ("lpt", lpt()),
        ("sleepy2", sleepy_two()),
        ("gsleepy-static", gsleepy(m, false).unwrap()),
        ("gsleepy-dynamic", gsleepy(m, true).unwrap()),
    ]
}

fn one_one_two_tightness() -> Outcome {
    let mut ratios = Vec::new();
    for m in 2..=4 {
        let inst = gen_one_one_two(m, 1e-6).unwrap();
        let opt = exact_opt(&inst, DEFAULT_NODE_BUDGET).unwrap();
        ensure(opt.exact, || format!("m={m}: OPT not certified"))?;
        let ratio = simulate(&inst, &lpt()).unwrap().makespan / opt.value;
        ensure((ratio - 3.0 / (2.0 + 1e-6)).abs() <= 1e-9, || format!("m={m}: ratio {ratio} != 3/(2+eps)"))?;
        ensure((1.499..=1.5).contains(&ratio), || format!("m={m}: ratio {ratio} outside [1.499, 1.5]"))?;
        ratios.push(format!("m={m} {ratio:.9}"));
    }
    Ok(ratios.join(", "))
}

fn stress_bound(m: usize, name: &str, params: PolicyParams, bound: f64) -> Outcome {
    let report = run_stress(&StressConfig {
        policies: vec![(name.into(), params)],
        m,
        n_max: 8,
        trials: 10_000,
        seed: 2024 + m as u64,
        node_budget: DEFAULT_NODE_BUDGET,
        eps: 1e-6,
        lower_bound_only: false,
    })
    .map_err(|e| e.to_string())?;
    let summary = &report.per_policy[0];
    ensure(summary.certified_count == report.trials, || {
        format!("only {} of {} trials certified", summary.certified_count, report.trials)
    })?;
    ensure(summary.worst_ratio <= bound, || {
        format!("worst ratio {} > {bound} at trial {:?}", summary.worst_ratio, summary.worst_trial)
    })?;
    Ok(format!("worst certified ratio {:.7} over {} trials (bound {bound:.7})", summary.worst_ratio, report.trials))
}

fn sleepy_two_bound() -> Outcome {
    stress_bound(2, "sleepy2", sleepy_two(), (5.0 - 5f64.sqrt()) / 2.0 + 1e-6)
}

fn three_machine_bound() -> Outcome {
    stress_bound(3, "gsleepy-static", gsleepy(3, false).unwrap(), 1.482 + 1e-6)
}

fn case1_hardness() -> Outcome {
    let inst = gen_case1(6).unwrap();
    let alg = simulate(&inst, &PolicyParams { alpha: 0.25, lambda: 1.0 }).unwrap().makespan;
    let opt = exact_opt(&inst, DEFAULT_NODE_BUDGET).unwrap();
    ensure((alg - 2.25).abs() <= TAU, || format!("makespan {alg} != 2.25"))?;
    ensure(opt.exact && (opt.value - 1.0).abs() <= TAU, || format!("OPT {} != 1", opt.value))?;
    let ratio = alg / opt.value;
    ensure(ratio >= 1.5, || format!("ratio {ratio} < 1.5"))?;
    Ok(format!("makespan {alg}, OPT {}, ratio {ratio}", opt.value))
}

fn case2_instance() -> Instance {
    gen_case2(6, 0.1, 1e-9).unwrap()
}

fn case2_hardness() -> Outcome {
    let eps = 1e-9;
    let inst = case2_instance();
    let alg = simulate(&inst, &PolicyParams { alpha: 0.1, lambda: 1.0 }).unwrap().makespan;
    let f = f_case2(0.1);
    ensure((alg / f - 1.0).abs() <= 1e-7, || format!("makespan {alg} vs f(0.1) = {f}"))?;
    let opt = exact_opt(&inst, DEFAULT_NODE_BUDGET).unwrap();
    ensure(opt.exact && (opt.value - (1.0 + eps)).abs() <= TAU, || format!("OPT {} != 1+eps", opt.value))?;
    let ratio = alg / opt.value;
    ensure(ratio > 1.5, || format!("ratio {ratio} <= 1.5"))?;
    let samples = 10_000;
    let low = (0..=samples).map(|i| f_case2(0.1 * i as f64 / samples as f64)).fold(f64::INFINITY, f64::min);
    ensure(low >= 1.5, || format!("min f(alpha) on [0, 0.1] is {low}"))?;
    Ok(format!("makespan {alg:.9} (f = {f:.9}), OPT {}, ratio {ratio:.6}, min f {low}", opt.value))
}

fn dynamic_contrast() -> Outcome {
    let inst = case2_instance();
    let alg = simulate(&inst, &gsleepy(6, true).unwrap()).unwrap().makespan;
    let opt = exact_opt(&inst, DEFAULT_NODE_BUDGET).unwrap();
    ensure(opt.exact, || "OPT not certified".into())?;
    let ratio = alg / opt.value;
    ensure(ratio < 1.5, || format!("ratio {ratio} >= 1.5"))?;
    Ok(format!("certified ratio {ratio:.6}"))
}

fn conditions_hold() -> Outcome {
    let failing: Vec<String> = (4u64..=1000)
        .into_par_iter()
        .filter_map(|m| {
            let params = recommended_params(m).unwrap().params.unwrap();
            let report = check_general(&params);
            (!report.all_satisfied())
                .then(|| format!("m={m}: {:?}", report.failures().map(|r| r.id.clone()).collect::<Vec<_>>()))
        })
        .collect();
    ensure(failing.is_empty(), || failing.join("; "))?;
    let m3 = check_m3(&parse_rational("0.07066").unwrap(), &parse_rational("0.4817").unwrap());
    ensure(m3.all_satisfied() && m3.results.len() == 10, || {
        format!("m=3 failures: {:?}", m3.failures().collect::<Vec<_>>())
    })?;
    Ok("m = 4..=1000 all 15 satisfied; m=3 all 10 satisfied".into())
}

fn waste_bound() -> Outcome {
    let results: Vec<(usize, Option<String>)> = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let inst = seeded_instance(k, 12, 6);
            let mut checked = 0;
            for (name, params) in policies_for(inst.m.max(2)) {
                let trace = simulate(&inst, &params).unwrap();
                let profile = Profile::new(&trace);
                let bp = profile.breakpoints();
                for (i, &t1) in bp.iter().enumerate() {
                    for &t2 in &bp[i..] {
                        let c = waste_bound_with(&trace, &profile, t1, t2).unwrap();
                        checked += 1;
                        if !c.ok {
                            return (checked, Some(format!("instance {k} {name} [{t1}, {t2}): {} > {}", c.lhs, c.rhs)));
                        }
                    }
                }
            }
            (checked, None)
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.0).sum();
    let violations: Vec<&String> = results.iter().filter_map(|r| r.1.as_ref()).collect();
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!("{checked} subintervals on 1000 instances, 0 violations"))
}

fn leftover() -> Outcome {
    let results: Vec<(usize, Option<String>)> = (0..500u64)
        .into_par_iter()
        .map(|k| {
            let inst = seeded_instance(5000 + k, 10, 4);
            let opt = exact_opt(&inst, DEFAULT_NODE_BUDGET).unwrap();
            let Some(opt_trace) = opt.trace.filter(|_| opt.exact) else {
                return (0, Some(format!("instance {k}: OPT not certified")));
            };
            let mut checked = 0;
            for (name, params) in policies_for(inst.m.max(2)) {
                let alg = simulate(&inst, &params).unwrap();
                let report = check_leftover(&alg, &opt_trace, alg.makespan.max(opt_trace.makespan)).unwrap();
                checked += report.checks.len();
                if !report.ok {
                    return (checked, Some(format!("instance {k} {name}: {:?}", report.tightest())));
                }
            }
            (checked, None)
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.0).sum();
    let violations: Vec<&String> = results.iter().filter_map(|r| r.1.as_ref()).collect();
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok(format!("{checked} breakpoints on 500 instances, 0 violations"))
}

fn oracle_equivalence() -> Outcome {
    let deviations: Vec<(f64, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let inst = seeded_instance(20_000 + k, 8, 4);
            let opt = exact_opt(&inst, DEFAULT_NODE_BUDGET).unwrap();
            ((opt.value - brute_force_opt(&inst)).abs(), opt.exact)
        })
        .collect();
    let worst = deviations.iter().map(|d| d.0).fold(0.0, f64::max);
    ensure(deviations.iter().all(|d| d.1), || "some OPT not certified".into())?;
    ensure(worst <= TAU, || format!("max deviation {worst}"))?;
    Ok(format!("1000 instances, max deviation {worst:e}"))
}

fn property_suite() -> Outcome {
    let failures: Vec<String> = (0..200u64)
        .into_par_iter()
        .flat_map_iter(|k| {
            let inst = seeded_instance(40_000 + k, 10, 5);
            let mut errs = Vec::new();
            for (name, params) in policies_for(inst.m.max(2)) {
                let trace = simulate(&inst, &params).unwrap();
                if !trace_violations(&trace).is_empty() {
                    errs.push(format!("instance {k} {name}: {:?}", trace_violations(&trace)));
                }
                if !idle_during_delay(&trace).is_empty() {
                    errs.push(format!("instance {k} {name}: machine idle while a job waits"));
                }
                if simulate(&inst, &params).unwrap().to_json() != trace.to_json() {
                    errs.push(format!("instance {k} {name}: rerun differs"));
                }
                for c in [0.5, 3.0] {
                    let scaled = simulate(&scale_instance(&inst, c).unwrap(), &params).unwrap();
                    let same = trace.starts.iter().zip(&scaled.starts).all(|(a, b)| {
                        (a.job, a.machine, a.reason) == (b.job, b.machine, b.reason)
                            && (b.start - c * a.start).abs() <= 1e-9 * (1.0 + b.start)
                    });
                    if !same || (scaled.makespan - c * trace.makespan).abs() > 1e-9 * (1.0 + scaled.makespan) {
                        errs.push(format!("instance {k} {name}: not scale invariant at c={c}"));
                    }
                }
            }
            errs
        })
        .collect();
    ensure(failures.is_empty(), || format!("{} failures, first: {}", failures.len(), failures[0]))?;
    Ok("200 instances x 4 policies: scale, no-idle, disjointness, determinism".into())
}

fn dynamic_below_three_halves() -> Outcome {
    let mut worst = Vec::new();
    for m in 4..=6 {
        let report = run_stress(&StressConfig {
            policies: vec![("gsleepy-dynamic".into(), gsleepy(m, true).unwrap())],
            m,
            n_max: 8,
            trials: 2000,
            seed: 77 + m as u64,
            node_budget: DEFAULT_NODE_BUDGET,
            eps: 1e-6,
            lower_bound_only: false,
        })
        .map_err(|e| e.to_string())?;
        let w = report.per_policy[0].worst_ratio;
        ensure(w < 1.5, || format!("m={m}: certified ratio {w}"))?;
        worst.push(format!("m={m} {w:.6}"));
    }
    Ok(format!("worst certified ratios {}", worst.join(", ")))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("1 one-one-two tightness", one_one_two_tightness),
        ("2 two-machine bound", sleepy_two_bound),
        ("3 three-machine bound", three_machine_bound),
        ("4 case 1 hardness", case1_hardness),
        ("5 case 2 hardness", case2_hardness),
        ("6 dynamic locking contrast", dynamic_contrast),
        ("7 parameter conditions", conditions_hold),
        ("8 waste bound", waste_bound),
        ("9 left-over inequality", leftover),
        ("10 oracle equivalence", oracle_equivalence),
        ("11 property suite", property_suite),
        ("note dynamic stress m=4..6", dynamic_below_three_halves),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.2}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.2}s) {detail}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
