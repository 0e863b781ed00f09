//! Acceptance checks for criteria 1 to 13. Prints one line per criterion and
//! exits nonzero if any fails.

use std::cell::RefCell;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stickbreak::closed_form::{
    dtheta_upper_bound, expected_kl_coupled, expected_kl_reversed, expected_kl_uncoupled, series_inverse_rising,
    series_quotient_rising, variance_kl_coupled, variance_kl_uncoupled,
};
use stickbreak::divergence::{kl_direct, kl_forward_pathwise};
use stickbreak::error::Error;
use stickbreak::monte_carlo::{
    replicate_rng, run_dtheta_curve, run_kl_experiment, run_variance_curve, CurveOptions, Direction,
    ExperimentConfig, PinskerSummary,
};
use stickbreak::partition::{dtheta_partition_sum, enumerate_partitions, eppf_dp, f_theta, SetPartition};
use stickbreak::stick::{sample_beta, tail_mass, weights_from_lengths, Coupling, LengthSequence, ModelSpec};

type Outcome = (bool, String);

thread_local! {
    static PINSKER: RefCell<(u64, u64)> = const { RefCell::new((0, 0)) };
}

fn tally(p: PinskerSummary) {
    PINSKER.with(|t| {
        let mut t = t.borrow_mut();
        t.0 += p.checked;
        t.1 += p.violations;
    });
}

fn within(x: f64, target: f64, se: f64, k: f64) -> bool {
    (x - target).abs() <= k * se
}

struct CliRun {
    mean: f64,
    stderr: f64,
    violations: u64,
    seconds: f64,
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stickbreak-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn mc_kl(args: &[&str], out: &PathBuf) -> CliRun {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_stickbreak"))
        .arg("mc-kl")
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run mc-kl");
    let seconds = start.elapsed().as_secs_f64();
    assert!(output.status.success(), "mc-kl failed: {}", String::from_utf8_lossy(&output.stderr));
    let summary = String::from_utf8(output.stderr).unwrap();
    let field = |key: &str| -> String {
        summary
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(&format!("{key}=")).map(str::to_string))
            .unwrap_or_else(|| panic!("missing {key} in {summary}"))
    };
    let csv = std::fs::read_to_string(out).unwrap();
    let last_mean: f64 = csv.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let run = CliRun {
        mean: field("mean").parse().unwrap(),
        stderr: field("stderr").parse().unwrap(),
        violations: field("pinsker_violations").parse().unwrap(),
        seconds,
    };
    assert_eq!(format!("{last_mean}"), format!("{}", run.mean));
    run
}

fn criterion_1() -> Outcome {
    let m = expected_kl_uncoupled(5.0, 2.0, 3.0).unwrap();
    ((m - 1.716_667).abs() <= 1e-4, format!("expected_kl_uncoupled(5,2,3) = {m:.9}"))
}

fn criterion_2() -> Outcome {
    let m = expected_kl_coupled(5.0).unwrap();
    ((m - 5.0 / 6.0).abs() <= 1e-12, format!("expected_kl_coupled(5) = {m:.15}"))
}

fn criterion_3() -> Outcome {
    let worst = [0.5, 1.0, 2.0, 5.0, 10.0, 50.0]
        .iter()
        .map(|&t| (expected_kl_uncoupled(t, 1.0, t).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    (worst <= 1e-10, format!("max |E - 1| = {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let a = mc_kl(&["--theta", "5", "--a", "2", "--b", "3", "--workers", "1"], &scratch("c4a.csv"));
    let b = mc_kl(
        &["--theta", "5", "--a", "1", "--b", "5", "--coupled", "--seed", "42", "--workers", "1"],
        &scratch("c4b.csv"),
    );
    tally(PinskerSummary {
        checked: 200_000,
        violations: a.violations + b.violations,
        max_excess: 0.0,
    });
    let ok_a = within(a.mean, 1.716_667, a.stderr, 3.0);
    let ok_b = within(b.mean, 5.0 / 6.0, b.stderr, 3.0);
    let seconds = a.seconds + b.seconds;
    (
        ok_a && ok_b && seconds < 300.0,
        format!(
            "uncoupled {:.6} ± {:.6} vs 1.716667; coupled {:.6} ± {:.6} vs 0.833333; {seconds:.1}s single-threaded",
            a.mean, a.stderr, b.mean, b.stderr
        ),
    )
}

fn criterion_5() -> Outcome {
    let r = expected_kl_reversed(2.0, 1.0, 3.0, 1e-6).unwrap();
    let series_ok = (r.value - 1.166_667).abs() <= 1e-3;
    let mut cfg = ExperimentConfig::new(ModelSpec::dp(3.0).unwrap(), ModelSpec::geometric(2.0, 1.0).unwrap());
    cfg.direction = Direction::Reverse;
    cfg.seed = 5;
    let run = run_kl_experiment(&cfg).unwrap();
    tally(run.pinsker);
    let (mean, se) = (run.stats.mean, run.stats.std_error());
    let mc_ok = within(mean, r.value, se, 3.0);
    let infinite = matches!(expected_kl_reversed(1.0, 1.0, 3.0, 1e-6), Err(Error::Infinite(_)));
    (
        series_ok && mc_ok && infinite,
        format!(
            "series {:.7} ({} terms); MC {mean:.6} ± {se:.6}; a=1 infinite error: {infinite}",
            r.value, r.terms
        ),
    )
}

fn criterion_6() -> Outcome {
    let target = 0.6449;
    let (u, c) = (variance_kl_uncoupled(1000.0, 1.0, 1000.0).unwrap(), variance_kl_coupled(1000.0).unwrap());
    let limits = (u - target).abs() <= 0.01 && (c - target).abs() <= 0.01;
    let thetas: Vec<f64> = (1..=50).map(f64::from).collect();
    let unc: Vec<f64> = thetas.iter().map(|&t| variance_kl_uncoupled(t, 1.0, t).unwrap()).collect();
    let cpl: Vec<f64> = thetas.iter().map(|&t| variance_kl_coupled(t).unwrap()).collect();
    let monotone = unc.windows(2).all(|w| w[1] < w[0]) && cpl.windows(2).all(|w| w[1] > w[0]);

    let big = CurveOptions {
        reps: 1_000_000,
        seed: 6,
        ..CurveOptions::default()
    };
    let pu = run_variance_curve(&[1.0], Coupling::Uncoupled, big).unwrap()[0];
    let pc = run_variance_curve(&[5.0], Coupling::Coupled, big).unwrap()[0];
    tally(pu.pinsker);
    tally(pc.pinsker);
    let mc_ok = within(pu.mc_variance, pu.closed_form, pu.std_error, 3.0)
        && within(pc.mc_variance, pc.closed_form, pc.std_error, 3.0);

    let deep = CurveOptions {
        reps: 10_000,
        trunc: 12_000,
        seed: 6,
        workers: None,
    };
    let du = run_variance_curve(&[1000.0], Coupling::Uncoupled, deep).unwrap()[0];
    let dc = run_variance_curve(&[1000.0], Coupling::Coupled, deep).unwrap()[0];
    tally(du.pinsker);
    tally(dc.pinsker);
    let deep_ok = within(du.mc_variance, u, du.std_error, 3.0) && within(dc.mc_variance, c, dc.std_error, 3.0);
    (
        limits && monotone && mc_ok && deep_ok,
        format!(
            "θ=1000 closed forms {u:.5}/{c:.5} (MC {:.4} ± {:.4} / {:.4} ± {:.4}); monotone on 1..50: {monotone}; \
             (1,1,1) MC {:.5} ± {:.5} vs {:.5}; θ=5 coupled MC {:.5} ± {:.5} vs {:.5}",
            du.mc_variance,
            du.std_error,
            dc.mc_variance,
            dc.std_error,
            pu.mc_variance,
            pu.std_error,
            pu.closed_form,
            pc.mc_variance,
            pc.std_error,
            pc.closed_form
        ),
    )
}

fn criterion_7() -> Outcome {
    let theta = 100.0;
    let mut worst = [0.0f64; 2];
    let mut mean_abs = [0.0f64; 2];
    let paths = 1000;
    for (i, &n) in [2000usize, 4000].iter().enumerate() {
        for path in 0..paths {
            let mut rng = replicate_rng(7, path);
            let l = ModelSpec::dp(theta).unwrap().sample_lengths(n, &mut rng).unwrap();
            let v = sample_beta(1.0, theta, &mut rng).unwrap();
            let g = LengthSequence::constant(v, n, 1.0, theta).unwrap();
            let direct = kl_direct(&weights_from_lengths(&l), &weights_from_lengths(&g)).unwrap().divergence;
            let gap = (direct - kl_forward_pathwise(&l, v).unwrap()).abs();
            worst[i] = worst[i].max(gap);
            mean_abs[i] += gap / paths as f64;
        }
    }
    let ok = worst[0] <= 1e-6 && worst[1] <= 1e-6 && mean_abs[1] < mean_abs[0];
    (
        ok,
        format!(
            "θ={theta}: max gap {:.2e} (N=2000), {:.2e} (N=4000); mean gap {:.2e} -> {:.2e}",
            worst[0], worst[1], mean_abs[0], mean_abs[1]
        ),
    )
}

fn criterion_8() -> Outcome {
    let models = [
        ModelSpec::dp(3.0).unwrap(),
        ModelSpec::dp(0.3).unwrap(),
        ModelSpec::geometric(2.0, 3.0).unwrap(),
        ModelSpec::exchangeable_dp(2.0, 1.0).unwrap(),
        ModelSpec::exchangeable_dp(50.0, 5.0).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut paths = 0;
    for (mi, m) in models.iter().enumerate() {
        for path in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * mi as u64 + path);
            let l = m.sample_lengths(300, &mut rng).unwrap();
            let w = weights_from_lengths(&l);
            let mut tail = w.residual;
            for k in (0..=l.len()).rev() {
                worst = worst.max((tail_mass(&l, k).unwrap() - tail).abs());
                if k > 0 {
                    tail += w.weights[k - 1];
                }
            }
            paths += 1;
        }
    }
    (worst <= 1e-12, format!("{paths} paths over 3 models, every k ≤ 300: max error {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let s = series_inverse_rising(2.0, 200).unwrap();
    let q = series_quotient_rising(0.5, 4.0, 400).unwrap();
    let ok = (s.accelerated - 1.0).abs() <= 1e-8 && (q.accelerated - 2.0).abs() <= 1e-8;
    (
        ok,
        format!(
            "inverse-rising {:.12} (raw partial sum {:.6}); quotient-rising {:.12} (raw {:.6})",
            s.accelerated,
            s.partial_sum(),
            q.accelerated,
            q.partial_sum()
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        for &beta in &[0.5, 1.0, 2.0] {
            let total: f64 = enumerate_partitions(n).unwrap().map(|p| eppf_dp(&p, beta).unwrap()).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    let f_err = [0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&t| (f_theta(&SetPartition::singletons(2), t).unwrap() - t / (t + 1.0).powi(2)).abs())
        .fold(0.0, f64::max);
    let zero = (1..=13).all(|n| f_theta(&SetPartition::one_block(n), 2.0).unwrap() == 0.0);
    (
        worst <= 1e-12 && f_err <= 1e-12 && zero,
        format!("EPPF max |Σ - 1| = {worst:.2e}; F(0_2) error {f_err:.2e}; F(1_n) = 0: {zero}"),
    )
}

fn criterion_11() -> Outcome {
    let ps = dtheta_partition_sum(0.5, 2.0, 12).unwrap();
    let opts = CurveOptions {
        seed: 11,
        ..CurveOptions::default()
    };
    let mc = run_dtheta_curve(0.5, &[2.0], opts).unwrap()[0];
    let far = run_dtheta_curve(5.0, &[0.0, 10_000.0], opts).unwrap();
    for p in std::iter::once(&mc).chain(&far) {
        tally(p.pinsker);
    }
    let cross = (ps.value - mc.estimate).abs() <= 0.01;
    let limit = within(far[1].estimate, 5.0 / 6.0, far[1].stderr, 3.0);
    let zero = far[0].estimate == 0.0 && far[0].stderr == 0.0;
    (
        cross && limit && zero,
        format!(
            "partition sum {:.5} (last level {:.1e}) vs MC {:.5} ± {:.5}; θ=5: D(10^4) = {:.5} ± {:.5}, D(0) = {}",
            ps.value, ps.last_level, mc.estimate, mc.stderr, far[1].estimate, far[1].stderr, far[0].estimate
        ),
    )
}

fn criterion_12() -> Outcome {
    let opts = CurveOptions {
        seed: 12,
        ..CurveOptions::default()
    };
    let betas = [3.0, 5.0, 10.0, 20.0, 50.0];
    let pts = run_dtheta_curve(1.0, &betas, opts).unwrap();
    let mut detail = Vec::new();
    let mut bound_ok = true;
    for p in &pts {
        tally(p.pinsker);
        let bound = dtheta_upper_bound(1.0, p.beta).unwrap();
        bound_ok &= p.estimate <= bound + 3.0 * p.stderr;
        detail.push(format!("β={}: {:.4} ≤ {:.4}", p.beta, p.estimate, bound));
    }
    let (checked, violations) = PINSKER.with(|t| *t.borrow());
    (
        bound_ok && violations == 0 && checked > 0,
        format!("{}; Pinsker violations {violations} of {checked} pairs", detail.join(", ")),
    )
}

fn criterion_13() -> Outcome {
    let args = ["--theta", "5", "--a", "1", "--b", "5", "--coupled", "--seed", "13"];
    let files: Vec<Vec<u8>> = ["1", "2", "8"]
        .iter()
        .map(|w| {
            let out = scratch(&format!("c13-{w}.csv"));
            let mut full = args.to_vec();
            full.extend(["--workers", w]);
            let run = mc_kl(&full, &out);
            tally(PinskerSummary {
                checked: 100_000,
                violations: run.violations,
                max_excess: 0.0,
            });
            std::fs::read(out).unwrap()
        })
        .collect();
    let same = files.windows(2).all(|w| w[0] == w[1]);
    (same, format!("mc-kl outputs with 1/2/8 workers identical: {same} ({} bytes)", files[0].len()))
}

fn main() {
    // 12 reports the Pinsker tally of all the others.
    let criteria: [(usize, fn() -> Outcome); 13] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (13, criterion_13),
        (12, criterion_12),
    ];
    let mut results = Vec::new();
    for (id, f) in criteria {
        let start = Instant::now();
        let (ok, detail) = f();
        results.push((id, ok, detail, start.elapsed().as_secs_f64()));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, ok, detail, secs) in &results {
        println!("criterion {id:>2} {}: {detail} [{secs:.1}s]", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    let _ = std::fs::remove_dir_all(scratch("x").parent().unwrap());
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
