//! Acceptance checks 1-12. Runs without the libtest harness so every check
//! prints one PASS/FAIL line; the process fails if any check fails.

use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gaussnl::bell::{self, BellExpression, CorrelatorTable};
use gaussnl::entanglement::{
    entanglement_threshold, symmetric_lower_bound, tripartite_renyi2_pure, tripartite_renyi2_symmetric,
};
use gaussnl::gaussian::{build_pure_standard_form, symmetric_pure, CovarianceMatrix, PureStateParams};
use gaussnl::optimizer::OptimizerOptions;
use gaussnl::sampler::{self, MixedLaw, SamplerConfig};
use gaussnl::svetlichny::{
    asymptotic_max, f_of_a, maximize_full, maximize_restricted, purity_cutoff, svetlichny_value,
    symmetric_max_analytic, symmetric_violating_branch, MeasurementSettings, SVETLICHNY_BOUND,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N_RANDOM: usize = 10_000;
const PURE_SEED: u64 = 2024;
const MIXED_SEED: u64 = 4048;

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn a_grid() -> Vec<f64> {
    (0..=40).map(|k| 1.0 + 0.1 * k as f64).collect()
}

fn pure_samples() -> Vec<PureStateParams> {
    let cfg = SamplerConfig {
        seed: PURE_SEED,
        count: N_RANDOM,
        ..SamplerConfig::default()
    };
    sampler::sample_pure_params(&cfg).unwrap()
}

fn check_1() -> Outcome {
    let started = Instant::now();
    let opts = OptimizerOptions::default();
    let mut worst: f64 = 0.0;
    for a in a_grid() {
        let num = maximize_restricted(&symmetric_pure(a).unwrap(), &opts).unwrap().value;
        let ana = symmetric_max_analytic(a).unwrap();
        worst = worst.max((num - ana).abs());
        ensure((num - ana).abs() < 1e-6, || format!("a = {a}: numeric {num} vs analytic {ana}"))?;
    }
    let t = started.elapsed();
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!("max |numeric - analytic| = {worst:.2e} over 41 values, {:.1}s", t.as_secs_f64()))
}

fn check_2() -> Outcome {
    for a in [1.0, 1.1, 1.2, 1.2247] {
        let v = symmetric_max_analytic(a).unwrap();
        ensure((v - 4.0).abs() <= 1e-12, || format!("a = {a}: {v}"))?;
    }
    let v = symmetric_max_analytic(1.23).unwrap();
    ensure(v > 4.0, || format!("a = 1.23: {v} not above 4"))?;
    Ok(format!("S(1.23) = {v:.12}"))
}

fn check_3() -> Outcome {
    let v50 = symmetric_max_analytic(50.0).unwrap();
    let asym = 16.0 / 3f64.powf(9.0 / 8.0);
    ensure((asym - asymptotic_max()).abs() < 1e-15, || "asymptote constant".into())?;
    ensure((v50 - asym).abs() < 0.01, || format!("S(50) = {v50} vs {asym}"))?;
    let values: Vec<f64> = a_grid().into_iter().map(|a| symmetric_max_analytic(a).unwrap()).collect();
    for w in values.windows(2) {
        ensure(w[1] >= w[0], || format!("decrease {} -> {}", w[0], w[1]))?;
    }
    Ok(format!("S(50) = {v50:.10}, 16/3^(9/8) = {asym:.10}"))
}

fn check_4() -> Outcome {
    let a = 1.5f64.sqrt();
    let f = f_of_a(a).unwrap();
    ensure((f - 3.0).abs() < 1e-14, || format!("f = {f}"))?;
    // exact arithmetic at a² = 3/2, f = 3: base 12 - 6 - 5 = 1, prefactor 4(6 + 9 - 4)/(6 + 5) = 44/11
    let (a2, f3) = (1.5f64, 3.0f64);
    let base = 8.0 * a2 - 2.0 * f3 - 5.0;
    let exact = 4.0 * (4.0 * a2 + 3.0 * f3 - 4.0) * base.powf(3.0 / (8.0 - 8.0 * a2 + 2.0 * f3)) / (4.0 * a2 + 5.0);
    ensure(base == 1.0 && exact == 4.0, || format!("base {base}, value {exact}"))?;
    let upper = symmetric_violating_branch(a).unwrap();
    let lower = symmetric_max_analytic(a).unwrap();
    ensure((upper - 4.0).abs() < 1e-12, || format!("violating branch {upper}"))?;
    ensure(lower == 4.0, || format!("local branch {lower}"))?;
    Ok(format!("violating branch at sqrt(3/2) = {upper:.15}"))
}

struct PureRow {
    entanglement: f64,
    s_max: f64,
}

fn pure_rows() -> Vec<PureRow> {
    use rayon::prelude::*;
    let opts = OptimizerOptions::with_seed(PURE_SEED);
    pure_samples()
        .par_iter()
        .map(|p| PureRow {
            entanglement: tripartite_renyi2_pure(p),
            s_max: maximize_restricted(&build_pure_standard_form(p).unwrap(), &opts).unwrap().value,
        })
        .collect()
}

fn check_5(rows: &[PureRow], elapsed: Duration) -> Outcome {
    let thr = entanglement_threshold();
    let above: Vec<&PureRow> = rows.iter().filter(|r| r.entanglement > thr + 1e-6).collect();
    let bad = above.iter().filter(|r| r.s_max <= SVETLICHNY_BOUND).count();
    ensure(bad == 0, || format!("{bad} samples above the threshold without violation"))?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} of {} samples above E = {thr:.6}, 0 counterexamples, {:.1}s",
        above.len(),
        rows.len(),
        elapsed.as_secs_f64()
    ))
}

fn check_6(rows: &[PureRow]) -> Outcome {
    let mut min_gap = f64::INFINITY;
    for r in rows {
        let bound = symmetric_lower_bound(r.entanglement).unwrap();
        min_gap = min_gap.min(r.s_max - bound);
        ensure(r.s_max >= bound - 1e-4, || {
            format!("E = {}: s_max {} below bound {bound}", r.entanglement, r.s_max)
        })?;
    }
    Ok(format!("min(s_max - bound) = {min_gap:.3e} over {} samples", rows.len()))
}

fn check_7() -> Outcome {
    use rayon::prelude::*;
    let started = Instant::now();
    let cfg = SamplerConfig {
        seed: MIXED_SEED,
        count: N_RANDOM,
        ..SamplerConfig::default()
    };
    let opts = OptimizerOptions::with_seed(MIXED_SEED);
    let samples = sampler::sample_mixed(&cfg, MixedLaw::Euler).unwrap();
    let rows: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|s| (s.cm.purity(), maximize_full(&s.cm, &opts).unwrap().value))
        .collect();
    let upper = asymptotic_max();
    let cutoff = purity_cutoff();
    let mut above_cutoff = 0;
    let mut violating = 0;
    for &(mu, s) in &rows {
        ensure(s >= 4.0 * mu - 1e-6, || format!("mu = {mu}: {s} below 4mu"))?;
        ensure(s <= mu * upper + 1e-6, || format!("mu = {mu}: {s} above mu*S_inf"))?;
        if mu <= cutoff {
            ensure(s <= SVETLICHNY_BOUND + 1e-9, || format!("mu = {mu} violates: {s}"))?;
        } else {
            above_cutoff += 1;
        }
        if s > SVETLICHNY_BOUND + 1e-9 {
            violating += 1;
        }
    }
    Ok(format!(
        "{} samples inside [4mu, mu*S_inf]; {above_cutoff} above the purity cutoff, {violating} violating; {:.1}s",
        rows.len(),
        started.elapsed().as_secs_f64()
    ))
}

fn check_8() -> Outcome {
    let pure = sampler::sample_pure_params(&SamplerConfig {
        seed: 8,
        count: 1,
        ..SamplerConfig::default()
    })
    .unwrap()[0];
    let mixed = sampler::mixed_sample_at(
        &SamplerConfig {
            seed: 8,
            ..SamplerConfig::default()
        },
        MixedLaw::Euler,
        0,
    )
    .unwrap()
    .cm;
    let states = [symmetric_pure(2.0).unwrap(), build_pure_standard_form(&pure).unwrap(), mixed];
    let opts = OptimizerOptions::default();
    let mut worst: f64 = 0.0;
    for cm in &states {
        let base = maximize_full(cm, &opts).unwrap().value;
        for c in [1.1, 1.5, 2.0] {
            let v = maximize_full(&cm.scaled(c).unwrap(), &opts).unwrap().value;
            let expected = base / (c * c * c);
            worst = worst.max((v - expected).abs());
            ensure((v - expected).abs() < 1e-5, || format!("c = {c}: {v} vs {expected}"))?;
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn check_9() -> Outcome {
    let cfg = SamplerConfig {
        seed: 9,
        count: 100,
        ..SamplerConfig::default()
    };
    let opts = OptimizerOptions::with_seed(9);
    let mut worst: f64 = 0.0;
    for p in sampler::sample_pure_params(&cfg).unwrap() {
        let cm = build_pure_standard_form(&p).unwrap();
        let full = maximize_full(&cm, &opts).unwrap().value;
        let restricted = maximize_restricted(&cm, &opts).unwrap().value;
        worst = worst.max(full - restricted);
        ensure(full - restricted < 1e-4, || {
            format!("{:?}: full {full} vs restricted {restricted}", p.values())
        })?;
    }
    Ok(format!("max(full - restricted) = {worst:.2e} over 100 states"))
}

fn check_10() -> Outcome {
    let expr = BellExpression::svetlichny();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pures = sampler::sample_pure_params(&SamplerConfig {
        seed: 10,
        count: 50,
        ..SamplerConfig::default()
    })
    .unwrap();
    let mixed_cfg = SamplerConfig {
        seed: 10,
        count: 50,
        ..SamplerConfig::default()
    };
    let mut states: Vec<CovarianceMatrix> = pures.iter().map(|p| build_pure_standard_form(p).unwrap()).collect();
    states.extend(sampler::sample_mixed_cm(&mixed_cfg).unwrap());
    let mut worst_eval: f64 = 0.0;
    let mut worst_prob: f64 = 0.0;
    for cm in &states {
        let coords: Vec<f64> = (0..12).map(|_| rng.random_range(-1.5..1.5)).collect();
        let s = MeasurementSettings::from_slice(&coords).unwrap();
        let d = (bell::evaluate(&expr, cm, &s).unwrap() - svetlichny_value(cm, &s).unwrap()).abs();
        worst_eval = worst_eval.max(d);
        ensure(d <= 1e-12, || format!("Bell vs Svetlichny differ by {d}"))?;

        let table = bell::correlator_table(cm, &s).unwrap();
        let mut all = [[0.0; 8]; 8];
        for (c, row) in all.iter_mut().enumerate() {
            *row = bell::correlators_to_probabilities(&table, [c >> 2, (c >> 1) & 1, c & 1])
                .map_err(|e| e.to_string())?;
            let sum: f64 = row.iter().sum();
            ensure(row.iter().all(|&p| p >= -1e-12), || format!("negative probability {row:?}"))?;
            ensure((sum - 1.0).abs() <= 1e-12, || format!("sum {sum}"))?;
            worst_prob = worst_prob.max((sum - 1.0).abs());
        }
        let back: CorrelatorTable = bell::probabilities_to_correlators(&all);
        for ((_, x), (_, y)) in back.entries().zip(table.entries()) {
            worst_prob = worst_prob.max((x - y).abs());
            ensure((x - y).abs() <= 1e-12, || format!("round trip {x} vs {y}"))?;
        }
    }
    Ok(format!(
        "{} pairs: max eval gap {worst_eval:.1e}, max probability error {worst_prob:.1e}",
        states.len()
    ))
}

fn check_11() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..=80 {
        let a = 1.0 + 0.05 * k as f64;
        let general = tripartite_renyi2_pure(&PureStateParams::symmetric(a).unwrap());
        let sym = tripartite_renyi2_symmetric(a).unwrap();
        worst = worst.max((general - sym).abs());
        ensure((general - sym).abs() <= 1e-9, || format!("a = {a}: {general} vs {sym}"))?;
    }
    let perms = [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut min_e = f64::INFINITY;
    for p in pure_samples() {
        let e = tripartite_renyi2_pure(&p);
        min_e = min_e.min(e);
        ensure(e >= 0.0, || format!("{:?}: negative residual {e}", p.values()))?;
        for perm in perms {
            let q = tripartite_renyi2_pure(&p.permuted(perm));
            ensure((q - e).abs() <= 1e-9, || format!("{:?} permuted: {q} vs {e}", p.values()))?;
        }
    }
    Ok(format!("symmetric gap {worst:.1e}; min residual over {N_RANDOM} triples {min_e:.3e}"))
}

fn run_cli(args: &[&str]) -> std::result::Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_gaussnl"))
        .args(args)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("{args:?} exited with {status}"))
}

fn check_12() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let read = |name: &str| std::fs::read(Path::new(&path(name))).map_err(|e| e.to_string());
    for (cmd, n) in [("scatter-pure", "300"), ("scatter-mixed", "40")] {
        let mut files = Vec::new();
        for threads in ["1", "2", "3"] {
            let out = path(&format!("{cmd}-{threads}.csv"));
            run_cli(&["--threads", threads, cmd, "--n", n, "--seed", "12", "--out", &out])?;
            files.push(read(&format!("{cmd}-{threads}.csv"))?);
        }
        ensure(files.windows(2).all(|w| w[0] == w[1]), || format!("{cmd}: outputs differ"))?;
    }
    Ok("scatter-pure and scatter-mixed byte-identical across 1, 2 and 3 threads".into())
}

fn main() {
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("PASS  criterion {id:>2} {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                format!("FAIL  criterion {id:>2} {name}: {why}")
            }
            Err(p) => {
                failed += 1;
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                format!("FAIL  criterion {id:>2} {name}: panicked: {msg}")
            }
        };
        println!("{line}");
    };

    report(1, "analytic-numeric oracle", panic::catch_unwind(check_1));
    report(2, "threshold sqrt(3/2)", panic::catch_unwind(check_2));
    report(3, "asymptote", panic::catch_unwind(check_3));
    report(4, "branch continuity", panic::catch_unwind(check_4));

    let started = Instant::now();
    match panic::catch_unwind(pure_rows) {
        Ok(rows) => {
            let elapsed = started.elapsed();
            report(5, "entanglement threshold", panic::catch_unwind(|| check_5(&rows, elapsed)));
            report(6, "pure lower bound", panic::catch_unwind(|| check_6(&rows)));
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().unwrap_or_default();
            report(5, "entanglement threshold", Ok(Err(format!("sampling panicked: {msg}"))));
            report(6, "pure lower bound", Ok(Err("no samples".into())));
        }
    }

    report(7, "mixed-state envelope", panic::catch_unwind(check_7));
    report(8, "scaling covariance", panic::catch_unwind(check_8));
    report(9, "restricted ansatz", panic::catch_unwind(check_9));
    report(10, "Bell identity", panic::catch_unwind(check_10));
    report(11, "Renyi-2 consistency", panic::catch_unwind(check_11));
    report(12, "determinism", panic::catch_unwind(check_12));

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
