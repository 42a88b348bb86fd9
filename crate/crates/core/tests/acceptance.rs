//! Acceptance suite. Runs without the libtest harness so that each criterion
//! prints exactly one PASS/FAIL line; the process exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use fdrlab::async_alg::{run_async_schedule, AsyncAddis};
use fdrlab::offline::{d_stbh, BatchMethod};
use fdrlab::online::{
    addis_next_level, check_lemma_estimates, history_precedes, run_stream, AlgorithmKind, FdpEstimator, OnlineHistory,
};
use fdrlab::simulation::{
    figure_pi_grid, run_stopping_time_experiment, sample_schedule_with, Campaign, ExperimentReport,
    GaussianModelConfig, Method, MethodSpec, PointReport, StoppingRule,
};
use fdrlab::tuning::{tune_surface, with_empirical_power, MixtureCdf, DEFAULT_GRID};
use fdrlab::types::{AlgorithmConfig, StepOutcome};
use fdrlab::GammaSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA: f64 = 0.05;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- streams

/// Mixed stream families, including adversarial ones, for the exact-assertion suites.
fn random_stream(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let normal = |rng: &mut ChaCha8Rng, mu: f64| {
        let u: f64 = rng.sample(rand_distr::Open01);
        let z = mu + fdrlab::std_normal_quantile(u).unwrap();
        fdrlab::std_normal_cdf(-z).unwrap()
    };
    match rng.random_range(0..6) {
        // all null, uniform
        0 => (0..m).map(|_| rng.random()).collect(),
        // all signal
        1 => (0..m).map(|_| normal(rng, 4.0)).collect(),
        // exact zeros: every test rejects
        2 => vec![0.0; m],
        // values sitting on the thresholds
        3 => {
            let atoms = [0.0, 1e-300, 0.25, 0.5, 0.250_000_1, 0.499_999, 1.0, 0.5 + 1e-12];
            (0..m).map(|_| atoms[rng.random_range(0..atoms.len())]).collect()
        }
        // bursts of signal between long null runs
        4 => (0..m).map(|j| if (j / 25) % 4 == 0 { rng.random::<f64>() * 1e-4 } else { normal(rng, -1.0) }).collect(),
        // Gaussian mixture with random parameters
        _ => {
            let pi_a: f64 = rng.random();
            let mu_n = -2.0 * rng.random::<f64>();
            let mu_a = 1.0 + 3.0 * rng.random::<f64>();
            (0..m)
                .map(|_| {
                    let null = rng.random::<f64>() >= pi_a;
                    normal(rng, if null { mu_n } else { mu_a })
                })
                .collect()
        }
    }
}

fn random_finish(rng: &mut ChaCha8Rng, m: usize) -> Vec<usize> {
    if rng.random_bool(0.5) {
        sample_schedule_with(m, rng)
    } else {
        (1..=m).map(|j| j + rng.random_range(0..20)).collect()
    }
}

// ---------------------------------------------------------------- criteria

fn c1_invariants() -> Outcome {
    let start = Instant::now();
    let cfg = AlgorithmConfig::addis_default();
    let mut violations = [0usize; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let ps = random_stream(&mut rng, 500);
        let addis = run_stream(AlgorithmKind::Addis, cfg, &ps).unwrap();
        violations[0] += FdpEstimator::Addis.trajectory(&addis).iter().filter(|&&v| v > ALPHA).count();
        let dlord = run_stream(AlgorithmKind::DLord, cfg, &ps).unwrap();
        violations[1] += FdpEstimator::DLord.trajectory(&dlord).iter().filter(|&&v| v > ALPHA).count();
        let finish = random_finish(&mut rng, ps.len());
        let mut a = AsyncAddis::new(cfg).unwrap();
        fdrlab::async_alg::run_async_with(&mut a, &ps, &finish).unwrap();
        let last = finish.iter().max().copied().unwrap_or(0) + 1;
        violations[2] += (1..=last).filter(|&t| a.fdp_hat(t) > ALPHA).count();
    }
    let elapsed = start.elapsed();
    check(
        violations == [0, 0, 0] && elapsed < Duration::from_secs(60),
        format!("violations addis/dlord/async = {violations:?}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn c2_equivalences() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dyadic = [(0.25, 0.5), (0.125, 0.5), (0.375, 1.0), (0.0625, 0.25)];
    let mut mismatches = [0usize; 4];
    for s in 0..1000 {
        let ps = random_stream(&mut rng, 300);
        let (lambda, tau) = dyadic[s % dyadic.len()];
        let cfg = AlgorithmConfig::addis_default().with_lambda(lambda).with_tau(tau);
        let a = run_stream(AlgorithmKind::Addis, cfg, &ps).unwrap();
        let d = run_stream(AlgorithmKind::AddisDiscardForm, cfg, &ps).unwrap();
        mismatches[0] += usize::from(a != d);

        let lambda: f64 = rng.random_range(0.0..0.9);
        let full = AlgorithmConfig::saffron_default().with_lambda(lambda);
        let addis1 = run_stream(AlgorithmKind::Addis, full, &ps).unwrap();
        let saffron = run_stream(AlgorithmKind::Saffron, full, &ps).unwrap();
        let dlord1 = run_stream(AlgorithmKind::DLord, AlgorithmConfig::lord_default(), &ps).unwrap();
        let lordpp = run_stream(AlgorithmKind::LordPlusPlus, AlgorithmConfig::lord_default(), &ps).unwrap();
        mismatches[1] += usize::from(addis1 != saffron);
        mismatches[2] += usize::from(dlord1 != lordpp);

        let cfg = AlgorithmConfig::addis_default();
        let sync = run_stream(AlgorithmKind::Addis, cfg, &ps).unwrap();
        let asynchronous = run_async_schedule(cfg, &ps, &(1..=ps.len()).collect::<Vec<_>>()).unwrap();
        mismatches[3] += usize::from(sync != asynchronous);
    }
    let elapsed = start.elapsed();
    check(
        mismatches == [0; 4] && elapsed < Duration::from_secs(60),
        format!(
            "mismatching streams discard-form/saffron/lordpp/async = {mismatches:?}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Figure campaign shared by criteria 3 to 5.
fn figure_campaign() -> &'static (ExperimentReport, Vec<String>) {
    static REPORT: OnceLock<(ExperimentReport, Vec<String>)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let mut methods = fdrlab::simulation::figure_methods();
        methods.push(MethodSpec::new(Method::Online(AlgorithmKind::DLord)));
        methods.push(MethodSpec::new(Method::AsyncAddis));
        let labels = methods.iter().map(|m| m.label.clone()).collect();
        let campaign = Campaign {
            m: 1000,
            mu_n: vec![0.0, -0.5, -1.0, -1.5],
            mu_a: vec![3.0, 4.0],
            pi_a: figure_pi_grid(),
            trials: 200,
            seed: 2019,
            methods,
        };
        (campaign.run(|_, _| {}).expect("campaign runs"), labels)
    })
}

fn c3_fdr_control() -> Outcome {
    let start = Instant::now();
    let (report, labels) = figure_campaign();
    let failures: Vec<&PointReport> = report.points.iter().filter(|p| !p.fdr.within(ALPHA, 3.0)).collect();
    let worst = report.points.iter().map(|p| p.fdr.mean).fold(0.0, f64::max);
    let elapsed = start.elapsed().max(report.runtime);
    let detail = format!(
        "{} points x {} algorithms ({}), {} above alpha + 3 SE, max FDR {worst:.4}, {:.0}s",
        report.points.len() / labels.len(),
        labels.len(),
        labels.join(", "),
        failures.len(),
        elapsed.as_secs_f64()
    );
    check(failures.is_empty() && elapsed < Duration::from_secs(600), detail)
}

fn point<'a>(report: &'a ExperimentReport, label: &str, pi_a: f64, mu_n: f64, mu_a: f64) -> &'a PointReport {
    report.find(label, pi_a, mu_n, mu_a).unwrap_or_else(|| panic!("missing point {label} {pi_a} {mu_n} {mu_a}"))
}

fn c4_power_ordering() -> Outcome {
    let (report, _) = figure_campaign();
    let mut ok = true;
    let mut gaps = Vec::new();
    for pi_a in [0.2, 0.3, 0.4, 0.5] {
        let addis = point(report, "addis", pi_a, -1.0, 3.0).power;
        for other in ["saffron", "lordpp"] {
            let o = point(report, other, pi_a, -1.0, 3.0).power;
            let se = (addis.stderr.powi(2) + o.stderr.powi(2)).sqrt();
            let gap = addis.mean - o.mean;
            ok &= gap > 2.0 * se;
            gaps.push(format!("{other}@{pi_a}: {:.3}/{:.1}SE", gap, gap / se));
        }
    }
    check(ok, format!("power gaps {}", gaps.join(", ")))
}

fn c5_no_loss_uniform() -> Outcome {
    let (report, _) = figure_campaign();
    let mut worst: f64 = 0.0;
    for mu_a in [3.0, 4.0] {
        for pi_a in figure_pi_grid() {
            let a = point(report, "addis", pi_a, 0.0, mu_a).power.mean;
            let s = point(report, "saffron", pi_a, 0.0, mu_a).power.mean;
            worst = worst.max((a - s).abs());
        }
    }
    check(worst <= 0.05, format!("max |power(addis) - power(saffron)| at mu_N = 0: {worst:.4}"))
}

fn c6_lemma() -> Outcome {
    let grid = [0.25, 0.5, 0.75];
    let mut ok = true;
    let mut worst_z = f64::NEG_INFINITY;
    let mut worst_eq: f64 = 0.0;
    let mut seed = 60;
    for a in grid {
        for b in grid {
            for mu in [-0.5, -1.0] {
                seed += 1;
                let e = check_lemma_estimates(a, b, mu, 1_000_000, seed).unwrap();
                ok &= e.lhs_within(3.0);
                worst_z = worst_z.max((e.lhs - e.rhs) / e.diff_se);
            }
            seed += 1;
            let e = check_lemma_estimates(a, b, 0.0, 1_000_000, seed).unwrap();
            let z = (e.lhs - e.rhs).abs() / e.diff_se;
            ok &= z <= 3.0;
            worst_eq = worst_eq.max(z);
        }
    }
    check(ok, format!("conservative max (lhs - rhs)/SE = {worst_z:.2}; uniform max |lhs - rhs|/SE = {worst_eq:.2}"))
}

fn c7_dstbh() -> Outcome {
    let hand_a = d_stbh(&[0.01, 0.3, 0.6, 0.9], 0.05, 0.25, 0.5).unwrap();
    let hand_b = d_stbh(&[0.01, 0.3, 0.6, 0.9], 0.1, 0.25, 0.5).unwrap();
    let hand_ok = hand_a.pi0_hat == Some(2.0)
        && hand_a.rejected.is_empty()
        && hand_a.threshold == 0.0
        && hand_b.rejected == vec![1]
        && hand_b.pi0_hat == Some(2.0);
    let campaign = Campaign {
        m: 1000,
        mu_n: vec![0.0, -0.5, -1.0, -1.5],
        mu_a: vec![3.0],
        pi_a: figure_pi_grid(),
        trials: 200,
        seed: 7,
        methods: vec![
            MethodSpec::new(Method::Batch(BatchMethod::DStBh)),
            MethodSpec::new(Method::Batch(BatchMethod::StoreyBh)),
        ],
    };
    let report = campaign.run(|_, _| {}).unwrap();
    let fdr_fail = report.points.iter().filter(|p| p.label == "d-stbh" && !p.fdr.within(ALPHA, 3.0)).count();
    let mut power_ok = true;
    let mut gaps = Vec::new();
    for pi_a in [0.2, 0.3, 0.4, 0.5] {
        let d = point(&report, "d-stbh", pi_a, -1.0, 3.0).power;
        let s = point(&report, "storey-bh", pi_a, -1.0, 3.0).power;
        let se = (d.stderr.powi(2) + s.stderr.powi(2)).sqrt();
        power_ok &= d.mean - s.mean > 2.0 * se;
        gaps.push(format!("{pi_a}: {:.1}SE", (d.mean - s.mean) / se));
    }
    check(
        hand_ok && fdr_fail == 0 && power_ok,
        format!(
            "hand examples {}, FDR points above bound {fdr_fail}, power gap vs storey-bh at mu_N = -1 {}",
            if hand_ok { "match" } else { "differ" },
            gaps.join(", ")
        ),
    )
}

fn c8_tuning() -> Outcome {
    let in_box = |theta: f64, tau: f64| (0.25..=0.75).contains(&theta) && (0.15..=0.55).contains(&tau);
    let mut outside = Vec::new();
    for mu_n in [-0.5, -1.0] {
        for mu_a in [2.0, 3.0] {
            for pi_a in [0.2, 0.3] {
                let s = tune_surface(&MixtureCdf::new(pi_a, mu_n, mu_a).unwrap(), DEFAULT_GRID).unwrap();
                if !in_box(s.theta_star, s.tau_star) {
                    outside.push(format!("({mu_n},{mu_a},{pi_a})->({:.3},{:.3})", s.theta_star, s.tau_star));
                }
            }
        }
    }
    let f = MixtureCdf::new(0.2, -1.0, 3.0).unwrap();
    let surface = tune_surface(&f, DEFAULT_GRID).unwrap();
    let model = GaussianModelConfig::new(1000, 0.2, -1.0, 3.0, 8).unwrap();
    let surface = with_empirical_power(surface, &model, &AlgorithmConfig::addis_default(), 20).unwrap();
    let (at_argmin, max) = surface.power_at_argmin_and_max().unwrap();
    let power_ok = max - at_argmin <= 0.05;
    check(
        outside.is_empty() && power_ok,
        format!(
            "argmin outside safe box for {}/8 configs [{}]; empirical power at argmin {at_argmin:.3} vs max {max:.3}",
            outside.len(),
            outside.join(" ")
        ),
    )
}

fn c9_monotonicity() -> Outcome {
    const NC: StepOutcome = StepOutcome::new(false, false, true);
    const C: StepOutcome = StepOutcome::new(false, true, true);
    const R: StepOutcome = StepOutcome::new(true, true, true);
    const D: StepOutcome = StepOutcome::new(false, false, false);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = AlgorithmConfig::addis_default();
    let gamma = GammaSequence::power(1.6).unwrap();
    let mut violations = 0;
    let mut not_comparable = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(0..120);
        let weights =
            [rng.random_range(1..10), rng.random_range(1..10), rng.random_range(0..4), rng.random_range(1..10)];
        let total: u32 = weights.iter().sum();
        let lower: Vec<StepOutcome> = (0..len)
            .map(|_| {
                let mut x = rng.random_range(0..total);
                for (w, o) in weights.iter().zip([NC, C, R, D]) {
                    if x < *w {
                        return o;
                    }
                    x -= w;
                }
                unreachable!()
            })
            .collect();
        let move_rate: f64 = rng.random();
        let upper: Vec<StepOutcome> = lower
            .iter()
            .map(|&o| {
                if !rng.random_bool(move_rate) {
                    return o;
                }
                match o {
                    o if o == NC => [C, R, D][rng.random_range(0..3)],
                    o if o == C => R,
                    o => o,
                }
            })
            .collect();
        if !history_precedes(&lower, &upper).unwrap() {
            not_comparable += 1;
            continue;
        }
        let lo = addis_next_level(&OnlineHistory::from_outcomes(&lower).unwrap(), &cfg, &gamma).unwrap();
        let hi = addis_next_level(&OnlineHistory::from_outcomes(&upper).unwrap(), &cfg, &gamma).unwrap();
        violations += usize::from(hi < lo);
    }
    check(
        violations == 0 && not_comparable == 0,
        format!("10000 pairs, {violations} violations, {not_comparable} generator errors"),
    )
}

fn c10_stopping_time() -> Outcome {
    let spec = MethodSpec::new(Method::Online(AlgorithmKind::Addis));
    let mut ok = true;
    let mut parts = Vec::new();
    for mu_n in [0.0, -1.0] {
        for pi_a in [0.0, 0.1, 0.3] {
            let model = GaussianModelConfig::new(1000, pi_a, mu_n, 3.0, 10).unwrap();
            let e = run_stopping_time_experiment(&spec, &model, StoppingRule::AtRejection(10), 500).unwrap();
            ok &= e.within(ALPHA, 3.0);
            parts.push(format!("({mu_n},{pi_a}): {:.4}±{:.4}", e.mfdr, e.stderr));
        }
    }
    check(ok, format!("mFDR at 10th rejection {}", parts.join(", ")))
}

fn c11_gamma() -> Outcome {
    let power = GammaSequence::power(1.6).unwrap();
    let lord = GammaSequence::lord();
    let mut ok = true;
    for g in [&power, &lord] {
        let mut prev = f64::INFINITY;
        for j in 0..100_000 {
            let v = g.value(j);
            ok &= v >= 0.0 && v <= prev;
            prev = v;
        }
        for n in [1_000, 100_000] {
            let head: f64 = (0..n).map(|j| g.value(j)).sum();
            ok &= (head + g.tail_mass(n) - 1.0).abs() <= 1e-9;
        }
    }
    // oracles: direct partial sums plus a separately integrated tail
    let power_z: f64 =
        (1..=10_000_000u64).rev().map(|k| (k as f64).powf(-1.6)).sum::<f64>() + 10_000_000f64.powf(-0.6) / 0.6;
    let lord_term = |x: f64| x.max(2.0).ln() / (x * x.ln().sqrt().exp());
    let n = 1_000_000u64;
    let head: f64 = (1..n).rev().map(|k| lord_term(k as f64)).sum();
    // ∫_n^∞ term = ∫_{√ln n}^∞ 2v³e^{-v} dv, by composite Simpson on a long finite range
    let v0 = (n as f64).ln().sqrt();
    let (steps, width) = (200_000, 80.0);
    let h = width / steps as f64;
    let f = |v: f64| 2.0 * v.powi(3) * (-v).exp();
    let mut integral = f(v0) + f(v0 + width);
    for i in 1..steps {
        integral += f(v0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    integral *= h / 3.0;
    let lord_z = head + integral + lord_term(n as f64) / 2.0;
    let d_power = (power.value(0) - 1.0 / power_z).abs();
    let d_lord = (lord.value(0) - lord_term(1.0) / lord_z).abs();
    ok &= d_power <= 1e-4 && d_lord <= 1e-4;
    check(
        ok,
        format!(
            "gamma0 power {:.7} (oracle diff {d_power:.1e}), lord {:.7} (oracle diff {d_lord:.1e})",
            power.value(0),
            lord.value(0)
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("1 invariant suite", c1_invariants),
        ("2 equivalence oracles", c2_equivalences),
        ("3 FDR control", c3_fdr_control),
        ("4 power ordering, conservative nulls", c4_power_ordering),
        ("5 no loss under uniform nulls", c5_no_loss_uniform),
        ("6 discarding inequality Monte-Carlo", c6_lemma),
        ("7 D-StBH suite", c7_dstbh),
        ("8 tuning surface", c8_tuning),
        ("9 monotonicity", c9_monotonicity),
        ("10 stopping-time mFDR", c10_stopping_time),
        ("11 gamma contracts", c11_gamma),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
