//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero when any criterion fails.
//!
//! The n = 1000 rows of the Table 1 check take several minutes and only run
//! with `BANDITLAB_ACCEPT_N1000=1`.

use std::time::Instant;

use banditlab::algorithms::{Algo, RunSpec};
use banditlab::bounds::{combined_bound, permutation_total_bound};
use banditlab::confidence::ConfidenceSchedule;
use banditlab::harness::{
    bound_comparison_report, cli_dispatch, run_trials, table1_report, ExperimentConfig,
    InstanceSource, SummaryTable,
};
use banditlab::model::{ExpFamily, Instance};
use banditlab::rng::{standard_normal, Purpose, RngStream};
use banditlab::simlab::{fano_event_check, lecam_check, verify_balance};
use rayon::prelude::*;

#[derive(Default)]
struct Tally {
    failed: Vec<String>,
}

impl Tally {
    fn line(&mut self, id: &str, ok: bool, detail: impl AsRef<str>) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {id}: {}", detail.as_ref());
        if !ok {
            self.failed.push(id.to_string());
        }
    }

    fn skip(&self, id: &str, detail: impl AsRef<str>) {
        println!("[SKIP] {id}: {}", detail.as_ref());
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn correctness(t: &mut Tally) {
    const TRIALS: u64 = 500;
    let limit = 0.1 + 3.0 * (0.1f64 * 0.9 / TRIALS as f64).sqrt();
    let cases = [
        ("table1 n=20 k=5", InstanceSource::Table1 { n: 20 }),
        ("best-arm n=10 gap=0.5", InstanceSource::BestArm { n: 10, gap: 0.5 }),
    ];
    let (_, secs) = timed(|| {
        for (label, source) in cases {
            let k = source.build(None).unwrap().k();
            for algo in Algo::ALL {
                let id = format!("1 correctness {algo} on {label}");
                if algo == Algo::Staged && k != 1 {
                    t.skip(&id, "staged identifies the best arm only (k = 1)");
                    continue;
                }
                let cfg = ExperimentConfig::new(source.clone(), vec![algo], 0.1, TRIALS, 11);
                let recs = run_trials(&cfg).unwrap();
                let errors = recs.iter().filter(|r| !r.correct).count() as f64 / TRIALS as f64;
                let truncated = recs.iter().filter(|r| r.truncated).count();
                t.line(
                    &id,
                    errors <= limit,
                    format!("error rate {errors:.4} <= {limit:.4} ({truncated} truncated)"),
                );
            }
        }
    });
    t.line("1 correctness runtime", secs < 300.0, format!("{secs:.1} s < 300 s"));
}

fn ratio(table: &SummaryTable, algo: Algo) -> f64 {
    table.row(algo).and_then(|r| r.ratio).unwrap_or(f64::NAN)
}

fn table1(t: &mut Tally) {
    const BASELINES: [Algo; 3] = [Algo::Lucb, Algo::Oracle, Algo::Uniform];
    let long = std::env::var("BANDITLAB_ACCEPT_N1000").is_ok_and(|v| v == "1");
    let sizes: Vec<usize> = if long { vec![10, 100, 1000] } else { vec![10, 100] };
    let trials_for = |n: usize| if n >= 1000 { 50 } else { 100 };
    let mut tables = Vec::new();
    for &n in &sizes {
        tables.push(table1_report(&[n], trials_for(n), 1, 0.1).unwrap().remove(0));
    }

    let targets: [(usize, [f64; 3], bool, f64); 3] = [
        (10, [0.99, 1.60, 1.67], false, 0.25),
        (100, [1.17, 2.00, 3.4], true, 0.30),
        (1000, [1.50, 2.51, 5.32], true, 0.30),
    ];
    for (n, want, relative, tol) in targets {
        let id = format!("2 table1 ratios n={n}");
        let Some(table) = tables.iter().find(|tb| tb.n == n) else {
            t.skip(&id, "opt-in; set BANDITLAB_ACCEPT_N1000=1");
            continue;
        };
        let got: Vec<f64> = BASELINES.iter().map(|&a| ratio(table, a)).collect();
        let ok = got.iter().zip(want).all(|(&g, w)| {
            let slack = if relative { tol * w } else { tol };
            (g - w).abs() <= slack
        });
        let kind = if relative { "relative" } else { "absolute" };
        t.line(
            &id,
            ok,
            format!("lucb/oracle/uniform = {got:.2?} vs {want:?} within {tol} {kind}"),
        );
    }

    for algo in BASELINES {
        let got: Vec<f64> = tables.iter().map(|tb| ratio(tb, algo)).collect();
        let ok = got.windows(2).all(|w| w[1] > w[0]);
        let id = format!("2 table1 trend {algo}");
        let sizes_str = format!("{sizes:?}");
        t.line(&id, ok, format!("ratios {got:.2?} over n = {sizes_str} strictly increasing"));
    }
    if !long {
        t.skip("2 table1 trend to n=1000", "opt-in; set BANDITLAB_ACCEPT_N1000=1");
    }
}

fn lower_bound_consistency(t: &mut Tally) {
    let mut cfg = ExperimentConfig::new(
        InstanceSource::BestArm { n: 10, gap: 0.5 },
        vec![Algo::LucbPlusPlus],
        0.05,
        500,
        3,
    );
    cfg.permute_each_trial = true;
    let cmp = bound_comparison_report(&cfg).unwrap().remove(0);
    let inst = cfg.instance().unwrap();
    let perm = permutation_total_bound(&inst, 0.05).unwrap().value;
    let combined = combined_bound(&inst, 0.05).unwrap().value;
    t.line(
        "3 mean T >= permutation total bound",
        cmp.mean_t >= perm,
        format!("{:.1} >= {perm:.4}", cmp.mean_t),
    );
    t.line(
        "3 mean T >= 0.1 x combined bound",
        cmp.mean_t >= 0.1 * combined,
        format!("{:.1} >= 0.1 x {combined:.1}", cmp.mean_t),
    );
}

fn fano(t: &mut Tally) {
    let inst = Instance::two_valued(64, 1, 0.5, 0.0).unwrap();
    let spec = RunSpec::new(Algo::LucbPlusPlus, 0.125, 10_000_000);
    let (_, secs) = timed(|| {
        for m in [2, 4] {
            let r = fano_event_check(&inst, m, 1.0 / 16.0, &spec, 400, 5).unwrap();
            let floor = 0.75 - 3.0 * r.stderr;
            let vacuous = if r.threshold == 0.0 { ", vacuous since n/m <= 2^(1/beta)" } else { "" };
            t.line(
                &format!("4 fano subset event m={m}"),
                r.empirical >= floor,
                format!(
                    "{:.4} >= 0.75 - 3 x {:.4} (threshold {:.2} pulls{vacuous})",
                    r.empirical, r.stderr, r.threshold
                ),
            );
        }
    });
    t.line("4 fano runtime", secs < 600.0, format!("{secs:.1} s < 600 s"));
}

fn tilting(t: &mut Tally) {
    const MC: u64 = 1_000_000;
    let (_, secs) = timed(|| {
        let mut bad = Vec::new();
        let mut points = 0;
        for gap in [0.25, 0.5, 1.0] {
            for kappa in [0.05, 0.1, 0.25] {
                for tau in [1u64, 8, 32] {
                    points += 1;
                    let r = verify_balance(gap, 0.0, tau, kappa, ExpFamily::GaussianUnitVariance, MC, 9)
                        .unwrap();
                    let tv_ok = r.tv_analytic.is_some_and(|tv| tv <= kappa);
                    if !(r.passed() && tv_ok && r.p_event_analytic.is_some()) {
                        bad.push(format!("(gap {gap}, kappa {kappa}, tau {tau})"));
                    }
                }
            }
        }
        t.line(
            "5 tilting grid",
            bad.is_empty(),
            format!("{} of {points} points pass all four checks {}", points - bad.len(), bad.join(" ")),
        );
    });
    t.line("5 tilting runtime", secs < 300.0, format!("{secs:.1} s < 300 s"));
}

fn lecam(t: &mut Tally) {
    let inst = Instance::two_valued(5, 1, 0.5, 0.0).unwrap();
    let spec = RunSpec::new(Algo::LucbPlusPlus, 0.05, 10_000_000);
    let r = lecam_check(&inst, 1, 0.125, &spec, 1000, 13).unwrap();
    let floor = 0.075 - 3.0 * r.stderr;
    t.line(
        "6 le cam swap",
        r.lhs >= floor,
        format!(
            "(p_base {:.4} + p_swapped {:.4}) / 2 = {:.4} >= 0.075 - 3 x {:.4}",
            r.p_base, r.p_swapped, r.lhs, r.stderr
        ),
    );
}

fn coverage(t: &mut Tally) {
    const PATHS: u64 = 10_000;
    const LEN: u64 = 10_000;
    const DELTAS: [f64; 3] = [0.01, 0.05, 0.1];
    let sched = ConfidenceSchedule::default();
    let radii: Vec<Vec<f64>> = DELTAS
        .iter()
        .map(|&d| (1..=LEN).map(|s| sched.u_bound(s, d).unwrap()).collect())
        .collect();
    let crossings: Vec<[bool; 3]> = (0..PATHS)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(17, Purpose::MONTE_CARLO, p, 0).sequential();
            let mut hit = [false; 3];
            let mut sum = 0.0;
            for s in 1..=LEN {
                sum += standard_normal(&mut rng);
                let dev = (sum / s as f64).abs();
                for (h, r) in hit.iter_mut().zip(&radii) {
                    *h |= dev > r[(s - 1) as usize];
                }
            }
            hit
        })
        .collect();
    for (i, &d) in DELTAS.iter().enumerate() {
        let rate = crossings.iter().filter(|h| h[i]).count() as f64 / PATHS as f64;
        t.line(
            &format!("7 anytime coverage delta={d}"),
            rate <= d,
            format!("two-sided crossing rate {rate:.4} <= {d}"),
        );
    }
}

fn staged_scaling(t: &mut Tally) {
    const DELTAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut means = vec![0.5; 10];
    means[0] = 1.0;
    let source = InstanceSource::Means(means);
    let gap2: f64 = 0.5;
    let c1_over = 8.0 / (gap2 * gap2);
    let xs: Vec<f64> = DELTAS.iter().map(|d| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = DELTAS
        .iter()
        .map(|&d| {
            let cfg = ExperimentConfig::new(source.clone(), vec![Algo::Staged], d, 200, 21);
            let recs = run_trials(&cfg).unwrap();
            recs.iter().map(|r| r.total_pulls as f64).sum::<f64>() / recs.len() as f64
        })
        .collect();
    let xm = xs.iter().sum::<f64>() / 4.0;
    let ym = ys.iter().sum::<f64>() / 4.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    t.line(
        "8 staged slope",
        slope > 0.0 && slope >= c1_over / 4.0 && slope <= 4.0 * c1_over,
        format!("slope {slope:.1} within 4x of c1/gap2^2 = {c1_over:.0} (mean T {ys:.0?})"),
    );
    let at_tenth = slope * 10f64.ln();
    t.line(
        "8 staged intercept dominates at delta=0.1",
        intercept > at_tenth,
        format!("intercept {intercept:.0} > slope x log 10 = {at_tenth:.0}"),
    );
}

fn cli_capture(args: &[String]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("banditlab".to_string()).chain(args.iter().cloned());
    let code = cli_dispatch(argv, &mut out, &mut err);
    (code, out)
}

fn determinism(t: &mut Tally) {
    let dir = tempfile::tempdir().unwrap();
    let commands: [(&str, &str); 6] = [
        ("run", "run --preset table1 --n 10 --algo lucbpp,lucb,oracle,uniform --trials 20 --seed 4"),
        ("run --compare-bounds", "run --preset best-arm --n 6 --algo lucbpp --trials 20 --seed 4 --compare-bounds --delta 0.05"),
        ("table1", "table1 --sizes 10 --trials 10 --seed 2"),
        ("bounds", "bounds --preset best-arm --n 10 --gap 0.5"),
        ("tilting", "tilting --theta1 0.5 --thetaj 0 --tau 8 --kappa 0.1 --mc 100000 --seed 3"),
        ("simcheck", "simcheck --n 5 --trials 100 --seed 6"),
    ];
    for (label, cmd) in commands {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{}-{rep}.out", label.replace(' ', "_")));
            let mut args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            args.push("--out".into());
            args.push(path.to_string_lossy().into_owned());
            let (code, stdout) = cli_capture(&args);
            let file = std::fs::read(&path).unwrap_or_default();
            outputs.push((code, stdout, file));
        }
        let ok = outputs[0].0 == 0 && outputs[0] == outputs[1] && !outputs[0].2.is_empty();
        t.line(
            &format!("9 determinism {label}"),
            ok,
            format!("exit {} and {} output bytes identical across reruns", outputs[0].0, outputs[0].2.len()),
        );
    }
}

fn main() {
    let mut t = Tally::default();
    let (_, secs) = timed(|| {
        correctness(&mut t);
        table1(&mut t);
        lower_bound_consistency(&mut t);
        fano(&mut t);
        tilting(&mut t);
        lecam(&mut t);
        coverage(&mut t);
        staged_scaling(&mut t);
        determinism(&mut t);
    });
    println!("acceptance finished in {secs:.1} s");
    if t.failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("{} failed: {}", t.failed.len(), t.failed.join(", "));
        std::process::exit(1);
    }
}
