//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p softbound-validation --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use softbound_core::config::{Mechanism, Querying};
use softbound_core::error::Error;
use softbound_core::gp::{GpConfig, GpModel, SquaredExponential};
use softbound_core::metrics::{auc, ise};
use softbound_core::preference::{
    plackett_luce_likelihood, update_lambda_posterior, LikelihoodFactor, PreferenceConfig, PreferenceState,
};
use softbound_core::query::{sparsify, CoverageInstance};
use softbound_core::sensitivity::expected_improvement;
use softbound_core::session::{replay, SessionLog};
use softbound_core::shf::{scalarize, shf_normalize, shf_utility, Scalarizer, ShfParams, SoftHardBounds};
use softbound_core::simulator::{run_experiment, ExperimentArm, ExperimentConfig, SimulatedRun};
use softbound_validation as oracle;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn shf_exactness() -> Outcome {
    let p = ShfParams::default();
    let floor = p.utility_floor;
    let u = |f: f64, h: f64, s: f64| shf_utility(f, h, s, &p).map_err(|e| e.to_string());
    let hand = [
        (shf_normalize(0.4, 0.2, 0.6).map_err(|e| e.to_string())?, 0.25),
        (shf_normalize(0.6, 0.2, 0.6).map_err(|e| e.to_string())?, 0.5),
        (shf_normalize(0.2, 0.2, 0.6).map_err(|e| e.to_string())?, 0.0),
        (u(-0.5, 0.0, 1.0)?, floor),
        (u(0.0, 0.0, 1.0)?, 0.0),
        (u(0.5, 0.0, 1.0)?, 0.5),
        (u(1.0, 0.0, 1.0)?, 1.0),
        (u(1.5, 0.0, 1.0)?, 1.125),
        (u(3.0, 0.0, 1.0)?, 1.25),
    ];
    for (i, (got, want)) in hand.iter().enumerate() {
        ensure((got - want).abs() <= 1e-12, || format!("hand value {i}: {got} vs {want}"))?;
    }
    let s = Scalarizer {
        lambda: vec![1.0, 0.0],
        ideal_point: vec![1.25, 1.25],
        gamma: 0.05,
        utility_floor: floor,
    };
    let v = scalarize(&[0.75, 1.05], &s);
    ensure((v + 0.535).abs() <= 1e-12, || format!("scalarize {v} vs -0.535"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let hard = rng.random_range(0.0..0.9);
        let soft = rng.random_range(hard + 0.01..=1.0);
        let params = ShfParams {
            beta: rng.random_range(0.0..=1.0),
            zeta: rng.random_range(1.05..4.0),
            utility_floor: floor,
        };
        let f = |x: f64| shf_utility(x, hard, soft, &params).map_err(|e| e.to_string());
        let tau = hard + params.zeta * (soft - hard);
        let h = 1e-12;
        for edge in [soft, tau] {
            let (l, r) = (f(edge - h)?, f(edge + h)?);
            ensure((l - r).abs() <= 1e-9, || format!("jump {l} vs {r} at {edge}"))?;
        }
        for _ in 0..20 {
            let a = rng.random_range(-0.2..1.5 * tau);
            let b = rng.random_range(-0.2..1.5 * tau);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            ensure(f(lo)? <= f(hi)?, || format!("not monotone at {lo} < {hi}"))?;
            let want = oracle::shf(a, hard, soft, params.beta, params.zeta, floor);
            ensure((f(a)? - want).abs() <= 1e-12, || format!("oracle mismatch at {a}"))?;
        }
    }
    Ok("9 hand values, scalarizer example, 1000 random configs".into())
}

fn plackett_luce_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_sum: f64 = 0.0;
    let mut worst_shift: f64 = 0.0;
    for k in 2..=5 {
        let perms = oracle::permutations(k);
        for _ in 0..20 {
            let u: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c = rng.random_range(-50.0..50.0);
            let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
            let total: f64 = perms.iter().map(|r| plackett_luce_likelihood(&u, r)).sum();
            worst_sum = worst_sum.max((total - 1.0).abs());
            for r in &perms {
                let p = plackett_luce_likelihood(&u, r);
                worst_shift = worst_shift.max((p - plackett_luce_likelihood(&shifted, r)).abs());
                worst_shift = worst_shift.max((p - oracle::plackett_luce(&u, r)).abs());
            }
        }
    }
    ensure(worst_sum < 1e-10 && worst_shift < 1e-10, || {
        format!("sum error {worst_sum:.2e}, shift error {worst_shift:.2e}")
    })?;
    Ok(format!("sum error {worst_sum:.1e}, shift error {worst_shift:.1e}"))
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let y = x.iter().map(|p| (3.0 * p[0]).sin() + p.iter().sum::<f64>() * 0.5 + rng.random_range(-0.1..0.1)).collect();
    (x, y)
}

fn gp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let interp = GpConfig {
        noise_variance: 1e-8,
        ..GpConfig::default()
    };
    let mut worst_interp: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(5..=50);
        // one input per cell of a square grid keeps points apart
        let side = (n as f64).sqrt().ceil() as usize;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|c| {
                let (i, j) = ((c % side) as f64, (c / side) as f64);
                vec![(i + rng.random::<f64>()) / side as f64, (j + rng.random::<f64>()) / side as f64]
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = GpModel::fit(x.clone(), y.clone(), &interp).map_err(|e| e.to_string())?;
        for (xi, yi) in x.iter().zip(&y) {
            worst_interp = worst_interp.max((m.predict_mean(xi) - yi).abs());
        }
    }
    ensure(worst_interp <= 1e-6, || format!("interpolation error {worst_interp:.2e}"))?;

    let exact = GpConfig {
        noise_variance: 1e-4,
        jitter: 0.0,
        ..GpConfig::default()
    };
    let mut worst_oracle: f64 = 0.0;
    for _ in 0..20 {
        let d = rng.random_range(1..=3);
        let n = rng.random_range(5..=15);
        let (x, y) = random_dataset(&mut rng, n, d);
        let kernel = SquaredExponential {
            lengthscale: rng.random_range(0.1..1.0),
            signal_variance: 1.0,
        };
        let m = GpModel::fit_with_kernel(x.clone(), y.clone(), kernel.clone(), &exact).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let q: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let (mean, std) = m.predict(&q);
            let (om, ov) = oracle::gp_posterior(&x, &y, &q, kernel.lengthscale, 1.0, 1e-4);
            worst_oracle = worst_oracle.max((mean - om).abs()).max((std * std - ov.max(0.0)).abs());
        }
    }
    ensure(worst_oracle <= 1e-8, || format!("dense-solve oracle error {worst_oracle:.2e}"))?;

    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let (x, y) = random_dataset(&mut rng, 10, 2);
        let m = GpModel::fit(x, y, &GpConfig::default()).map_err(|e| e.to_string())?;
        let q: Vec<f64> = (0..2).map(|_| rng.random()).collect();
        let g = m.mean_gradient(&q);
        let h = 1e-6;
        for j in 0..2 {
            let mut a = q.clone();
            let mut b = q.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (m.predict_mean(&a) - m.predict_mean(&b)) / (2.0 * h);
            let rel = (g[j] - fd).abs() / fd.abs().max(1e-3);
            worst_grad = worst_grad.max(rel);
        }
    }
    ensure(worst_grad <= 1e-4, || format!("gradient relative error {worst_grad:.2e}"))?;
    Ok(format!(
        "interp {worst_interp:.1e}, oracle {worst_oracle:.1e}, gradient {worst_grad:.1e}"
    ))
}

fn ei_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let mean = rng.random_range(-2.0..2.0);
        let std = rng.random_range(0.05..2.0);
        // incumbents within a few std of the mean, where sampling resolves EI
        let incumbent = mean + std * rng.random_range(-2.0..2.5);
        let closed = expected_improvement(mean, std, incumbent);
        let (mc, se) = oracle::ei_monte_carlo(mean, std, incumbent, 100_000, &mut rng);
        let z = (closed - mc).abs() / se;
        worst = worst.max(z);
        ensure(z <= 3.0, || {
            format!("triple {i} ({mean:.3}, {std:.3}, {incumbent:.3}): {closed} vs {mc} +- {se}")
        })?;
    }
    Ok(format!("largest deviation {worst:.2} SE"))
}

fn sparsification_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = ShfParams::default();
    let mut tight = 0;
    for trial in 0..50 {
        let n = rng.random_range(4..=12);
        let lambdas = rng.random_range(1..=4);
        let k = rng.random_range(1..=3);
        let l = rng.random_range(2..=3);
        let hard: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..0.3)).collect();
        let soft: Vec<f64> = hard.iter().map(|h| rng.random_range(h + 0.1..0.9)).collect();
        let bounds = SoftHardBounds::new(soft, hard).map_err(|e| e.to_string())?;
        let d: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let y: Vec<f64> = (0..l).map(|_| rng.random()).collect();
                softbound_core::shf::shf_vector(&y, &bounds, &params).expect("lengths match")
            })
            .collect();
        let scalarizers: Vec<Scalarizer> = (0..lambdas)
            .map(|_| {
                let w: Vec<f64> = (0..l).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = w.iter().sum();
                Scalarizer::new(w.iter().map(|v| v / s).collect(), &params, 0.05).expect("simplex")
            })
            .collect();
        let instance = CoverageInstance::from_utilities(&d, &scalarizers).map_err(|e| e.to_string())?;
        let sel = sparsify(&instance, k).map_err(|e| e.to_string())?;
        let scores = instance.scores();
        let brute = oracle::best_of_k(scores, k);
        let psi = oracle::psi(scores);
        let got = instance.min_value(&sel.indices);
        ensure(got >= brute - 1e-12, || format!("trial {trial}: level {got} below brute force {brute}"))?;
        ensure(sel.indices.len() as f64 <= psi * k as f64 + 1e-9, || {
            format!("trial {trial}: {} points exceed psi*k = {}", sel.indices.len(), psi * k as f64)
        })?;
        if (got - brute).abs() <= 1e-12 {
            tight += 1;
        }
    }
    Ok(format!("50 instances, {tight} attain the brute-force level exactly"))
}

fn recovery_error(lambda_star: &[f64], seed: u64) -> Result<f64, String> {
    let l = lambda_star.len();
    let params = ShfParams::default();
    let config = PreferenceConfig::default();
    let bounds = SoftHardBounds::new(vec![0.6; l], vec![0.0; l]).map_err(|e| e.to_string())?;
    let truth = Scalarizer::new(lambda_star.to_vec(), &params, 0.05).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = PreferenceState::prior(l, config.particles, &mut rng);
    for _ in 0..50 {
        let objectives: Vec<Vec<f64>> = (0..4).map(|_| (0..l).map(|_| rng.random_range(0.01..1.0)).collect()).collect();
        let values: Vec<f64> = objectives.iter().map(|y| truth.value_of(y, &bounds, &params)).collect();
        let ranking = oracle::sample_plackett_luce(&values, &mut rng);
        let factor = LikelihoodFactor::new(&objectives, ranking, &bounds, &params);
        state = update_lambda_posterior(&state, Some(factor), &config, &params, 0.05, &mut rng);
    }
    Ok(oracle::l1(&state.mean(), lambda_star))
}

fn posterior_recovery() -> Outcome {
    let e2 = recovery_error(&[0.7, 0.3], 6)?;
    let e3 = recovery_error(&[0.5, 0.3, 0.2], 7)?;
    ensure(e2 <= 0.15 && e3 <= 0.15, || format!("L1 error L=2 {e2:.3}, L=3 {e3:.3}"))?;
    Ok(format!("L1 error L=2 {e2:.3}, L=3 {e3:.3}"))
}

const BASELINES: [&str; 4] = ["pairwise", "full_ranking", "partial_ranking", "random"];

fn mean_at(runs: &[SimulatedRun], problem: &str, arm: &str, unit: u32) -> f64 {
    let v: Vec<f64> = runs
        .iter()
        .filter(|r| r.record.problem == problem && r.record.trace.mechanism == arm)
        .map(|r| r.record.trace.value_at(unit))
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn ordering(problems: &[&str]) -> Outcome {
    let experiment = ExperimentConfig {
        problems: problems.iter().map(|p| p.to_string()).collect(),
        ..ExperimentConfig::default()
    };
    let runs = run_experiment(&experiment).map_err(|e| e.to_string())?;
    let unit = experiment.base.budget.total_units;
    let mut lines = Vec::new();
    let mut ok = true;
    for p in problems {
        let t = mean_at(&runs, p, "active_tmosh", unit);
        let m = mean_at(&runs, p, "active_mosh", unit);
        let base: Vec<f64> = BASELINES.iter().map(|b| mean_at(&runs, p, b, unit)).collect();
        let best = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ok &= t >= m && m >= best;
        let base_txt: Vec<String> = BASELINES.iter().zip(&base).map(|(b, v)| format!("{b} {v:.4}")).collect();
        lines.push(format!("{p}: tmosh {t:.4}, mosh {m:.4}, {}", base_txt.join(", ")));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ordering_two_objectives() -> Outcome {
    ordering(&["branin_currin", "four_bar_truss"])
}

fn ordering_three_objectives() -> Outcome {
    ordering(&["dtlz2_3"])
}

fn ablation() -> Outcome {
    let mut without_pl = ExperimentArm::new("without_pl", Mechanism::ActiveMosh, Querying::Native);
    without_pl.use_plackett_luce = Some(false);
    let experiment = ExperimentConfig {
        arms: vec![
            ExperimentArm::new("active_mosh", Mechanism::ActiveMosh, Querying::Native),
            without_pl,
            ExperimentArm::new("random_queries", Mechanism::ActiveMosh, Querying::Random),
        ],
        ..ExperimentConfig::default()
    };
    let runs = run_experiment(&experiment).map_err(|e| e.to_string())?;
    let area = |arm: &str, seed: u64| -> Result<f64, String> {
        let r = runs
            .iter()
            .find(|r| r.record.trace.mechanism == arm && r.record.trace.seed == seed)
            .ok_or_else(|| format!("missing run {arm} {seed}"))?;
        auc(&r.record.trace).map_err(|e| e.to_string())
    };
    let (mut over_pl, mut over_random, mut ties) = (0, 0, 0);
    for &seed in &experiment.seeds {
        let a = area("active_mosh", seed)?;
        let b = area("without_pl", seed)?;
        let c = area("random_queries", seed)?;
        over_pl += usize::from(a > b);
        over_random += usize::from(a > c);
        ties += usize::from(a == b) + usize::from(a == c);
    }
    let msg = format!("wins over w/o PL {over_pl}/10, over random queries {over_random}/10 ({ties} exact ties)");
    if over_pl >= 7 && over_random >= 7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ise_cases() -> Outcome {
    // M_G is the first good round, 1-based
    let first_good = |m_g: usize| {
        let mut flags = [false; 10];
        flags[m_g - 1..].fill(true);
        ise(&flags).map_err(|e| e.to_string())
    };
    let all = first_good(10)?;
    let third = first_good(3)?;
    let undefined = ise(&[false; 10]);
    ensure((all - 1.0).abs() < 1e-12, || format!("M_G=10 gave {all}"))?;
    ensure((third - 0.3).abs() < 1e-12, || format!("M_G=3 gave {third}"))?;
    ensure(matches!(undefined, Err(Error::UndefinedIse)), || format!("no good round gave {undefined:?}"))?;
    Ok("1.0, 0.3, undefined".into())
}

fn replay_determinism() -> Outcome {
    let mut without_pl = ExperimentArm::new("without_pl", Mechanism::ActiveMosh, Querying::Native);
    without_pl.use_plackett_luce = Some(false);
    let mut arms = ExperimentArm::standard();
    arms.push(without_pl);
    arms.push(ExperimentArm::new("random_queries", Mechanism::ActiveMosh, Querying::Random));
    let experiment = ExperimentConfig {
        problems: vec!["branin_currin".into(), "four_bar_truss".into()],
        arms,
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let runs = run_experiment(&experiment).map_err(|e| e.to_string())?;
    let mut queries = 0;
    for run in &runs {
        let mut bytes = Vec::new();
        run.log.write_jsonl(&mut bytes).map_err(|e| e.to_string())?;
        let parsed = SessionLog::read_jsonl(bytes.as_slice()).map_err(|e| e.to_string())?;
        let report = replay(&parsed).map_err(|e| e.to_string())?;
        ensure(report.is_clean(), || {
            format!("{} seed {}: {report:?}", run.record.trace.mechanism, run.record.trace.seed)
        })?;
        queries += report.queries_checked;
    }
    Ok(format!("{} logs, {queries} queries identical", runs.len()))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "SHF exactness", limit: Duration::from_secs(5), check: shf_exactness },
        Criterion { name: "Plackett-Luce normalization", limit: Duration::from_secs(5), check: plackett_luce_normalization },
        Criterion { name: "GP correctness", limit: Duration::from_secs(30), check: gp_correctness },
        Criterion { name: "EI Monte Carlo oracle", limit: Duration::from_secs(10), check: ei_oracle },
        Criterion { name: "Sparsification guarantee", limit: Duration::from_secs(120), check: sparsification_guarantee },
        Criterion { name: "Posterior recovery", limit: Duration::from_secs(120), check: posterior_recovery },
        Criterion { name: "Mechanism ordering, Branin-Currin and four-bar truss", limit: Duration::from_secs(900), check: ordering_two_objectives },
        Criterion { name: "Mechanism ordering, DTLZ2 (L=3)", limit: Duration::from_secs(900), check: ordering_three_objectives },
        Criterion { name: "Ablation directionality (AUC)", limit: Duration::from_secs(900), check: ablation },
        Criterion { name: "ISE cases", limit: Duration::from_secs(1), check: ise_cases },
        Criterion { name: "Replay determinism", limit: Duration::from_secs(120), check: replay_determinism },
    ];
    let only = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.as_deref().is_none_or(|o| c.name.contains(o))) {
        let start = Instant::now();
        let outcome = (c.check)();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over the time limit")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "{} {} [{:.1}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            took.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
