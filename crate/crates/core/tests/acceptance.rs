//! Acceptance criteria, one test per criterion.
//!
//! Every test prints a single `PASS`/`FAIL` line before asserting, so
//! `cargo test --test acceptance -- --nocapture` doubles as a scorecard.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use frontlab_core::analytic::predict_log_level_envelope;
use frontlab_core::measurement::{fit_linear, FitResult};
use frontlab_core::nonlinearity::ReactionParams;
use frontlab_core::solver::GrowthPolicy;
use frontlab_core::verify::{
    envelope_sample_points, heat_error, reference_profiles, sandwich, sandwich_reference_config, verify, Subject,
};
use frontlab_core::{
    classify_regime, predict_level_envelope, run, select_model, FitWindow, InitialData, ReactionFamily,
    Regime, RegimeKind, RunOutput, SimulationConfig,
};

fn verdict(id: u32, title: &str, passed: bool, detail: &str) {
    println!("{} criterion {id} ({title}): {detail}", if passed { "PASS" } else { "FAIL" });
}

fn weak(alpha: f64) -> ReactionFamily {
    ReactionFamily::weakly_monostable(ReactionParams::with_alpha(alpha).unwrap())
}

fn finite_speed_config() -> SimulationConfig {
    SimulationConfig::new(weak(0.4), InitialData::sub_exponential(5.0, 1.0).unwrap(), 0.05, 0.01, 30.0)
}

fn power_config() -> SimulationConfig {
    SimulationConfig::new(weak(0.4), InitialData::sub_exponential(5.0, 0.2).unwrap(), 0.05, 0.01, 10.0)
}

fn cached(cell: &'static OnceLock<RunOutput>, config: fn() -> SimulationConfig) -> &'static RunOutput {
    cell.get_or_init(|| run(&config()).unwrap())
}

fn finite_speed_run() -> &'static RunOutput {
    static CELL: OnceLock<RunOutput> = OnceLock::new();
    cached(&CELL, finite_speed_config)
}

fn power_run() -> &'static RunOutput {
    static CELL: OnceLock<RunOutput> = OnceLock::new();
    cached(&CELL, power_config)
}

fn algebraic_run() -> &'static RunOutput {
    static CELL: OnceLock<RunOutput> = OnceLock::new();
    cached(&CELL, || sandwich_reference_config().unwrap())
}

fn candidate(fits: &[FitResult], kind: RegimeKind) -> Option<&FitResult> {
    fits.iter().find(|f| f.model.regime() == kind)
}

#[test]
fn criterion_01_hypothesis_bounds() {
    let start = Instant::now();
    let report = verify(Subject::Hypothesis).unwrap();
    let elapsed = start.elapsed();
    let passed = report.passed() && elapsed < Duration::from_secs(1);
    let detail = format!(
        "{} alpha values, all bounds hold: {}, {:.0} ms",
        report.checks.len(),
        report.passed(),
        elapsed.as_secs_f64() * 1e3
    );
    verdict(1, "hypothesis bounds", passed, &detail);
    assert!(passed, "{report}");
}

#[test]
fn criterion_02_envelope_residuals() {
    let start = Instant::now();
    let report = verify(Subject::Envelope).unwrap();
    let elapsed = start.elapsed();
    let min_points = reference_profiles()
        .unwrap()
        .iter()
        .map(|(_, p)| envelope_sample_points(p).len())
        .min()
        .unwrap();
    let passed = report.passed() && min_points >= 1000 && elapsed < Duration::from_secs(5);
    let worst = report
        .checks
        .iter()
        .map(|c| c.measured / c.tolerance)
        .fold(0.0, f64::max);
    let detail = format!(
        "{} checks, worst measured/tolerance {worst:.3e}, {min_points} points per profile, {:.2} s",
        report.checks.len(),
        elapsed.as_secs_f64()
    );
    verdict(2, "envelope residuals", passed, &detail);
    assert!(passed, "{report}");
}

#[test]
fn criterion_03_finite_speed() {
    let out = finite_speed_run();
    let trace = &out.traces[0];
    let sel = select_model(trace, 0.4, 1.0, FitWindow::LastHalf).unwrap();
    let slope = sel.best.model.headline();
    let early = fit_linear(trace, FitWindow::Range { t_start: 10.0, t_end: 20.0 }).unwrap();
    let late = fit_linear(trace, FitWindow::Range { t_start: 20.0, t_end: 30.0 }).unwrap();
    let (a1, a2) = (early.model.headline(), late.model.headline());
    let drift = (a2 - a1).abs() / a1.abs();

    let linear = sel.regime == RegimeKind::FiniteSpeed;
    let in_band = linear && (1.7..=2.1).contains(&slope);
    let stable = drift < 0.05;
    let passed = linear && in_band && stable;
    let detail = format!(
        "selected {} (headline {slope:.4}), slope in [1.7, 2.1]: {in_band}; window slopes {a1:.4} / {a2:.4}, drift {:.2}% < 5%: {stable}",
        sel.best.model.name(),
        drift * 100.0
    );
    verdict(3, "finite speed", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_04_power_acceleration() {
    let out = power_run();
    let sel = select_model(&out.traces[0], 0.4, 1.0, FitWindow::LastHalf).unwrap();
    let target = 1.0 / 0.28;
    let power = candidate(&sel.candidates, RegimeKind::PowerAcceleration).map(|f| f.model.headline());
    let chosen = sel.regime == RegimeKind::PowerAcceleration;
    let close = power.is_some_and(|p| (p / target - 1.0).abs() <= 0.15);
    let passed = chosen && close;
    let detail = format!(
        "selected {}; power exponent {} vs {target:.4} (15%); {} cells at end",
        sel.best.model.name(),
        power.map_or("n/a".into(), |p| format!("{p:.4}")),
        out.diagnostics.final_points
    );
    verdict(4, "power acceleration", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_05_exp_power_acceleration() {
    let out = algebraic_run();
    let sel = select_model(&out.traces[0], 0.4, 1.0, FitWindow::LastHalf).unwrap();
    let slope = candidate(&sel.candidates, RegimeKind::ExpPowerAcceleration).map(|f| f.model.headline());
    let chosen = sel.regime == RegimeKind::ExpPowerAcceleration;
    let close = slope.is_some_and(|s| (s - 1.0).abs() <= 0.15);
    let passed = chosen && close;
    let detail = format!(
        "selected {}; exp-power slope {} vs 1/beta = 1 (15%)",
        sel.best.model.name(),
        slope.map_or("n/a".into(), |s| format!("{s:.4}"))
    );
    verdict(5, "exp-power acceleration", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_06_regime_boundary() {
    // Exact rational comparison: beta >= 1/(alpha+1) <=> bn (an + ad) >= bd ad
    // with alpha = an/ad and beta = bn/bd.
    let alphas = [(2_i64, 10_i64), (4, 10), (6, 10)];
    let betas = [(1, 10), (2, 10), (3, 10), (10, 10)];
    let thresholds = [(5_i64, 6_i64), (5, 7), (5, 8)];
    let mut cases = Vec::new();
    for &(an, ad) in &alphas {
        for &(bn, bd) in &betas {
            cases.push((an, ad, bn, bd));
        }
    }
    for (&(an, ad), &(bn, bd)) in alphas.iter().zip(&thresholds) {
        cases.push((an, ad, bn, bd));
    }

    let mut mismatches = Vec::new();
    for &(an, ad, bn, bd) in &cases {
        let (alpha, beta) = (an as f64 / ad as f64, bn as f64 / bd as f64);
        let expected = bn * (an + ad) >= bd * ad;
        let data = InitialData::sub_exponential(5.0, beta).unwrap();
        let got = classify_regime(alpha, &data).unwrap().regime;
        let finite = matches!(got, Regime::FiniteSpeed);
        if finite != expected {
            mismatches.push(format!("alpha {alpha}, beta {beta}: {got:?}"));
        }
        if let Regime::PowerAcceleration { exponent } = got {
            if (exponent * beta * (alpha + 1.0) - 1.0).abs() > 1e-12 {
                mismatches.push(format!("alpha {alpha}, beta {beta}: exponent {exponent}"));
            }
        }
    }
    // Just below each threshold the front must accelerate.
    for (&(an, ad), &(bn, bd)) in alphas.iter().zip(&thresholds) {
        let alpha = an as f64 / ad as f64;
        let beta = bn as f64 / bd as f64 - 1e-6;
        let got = classify_regime(alpha, &InitialData::sub_exponential(5.0, beta).unwrap()).unwrap();
        if got.regime.kind() != RegimeKind::PowerAcceleration {
            mismatches.push(format!("alpha {alpha}, beta {beta} (below threshold): {:?}", got.regime));
        }
    }
    let passed = mismatches.is_empty();
    let detail = format!(
        "{} combinations plus 3 sub-threshold probes, mismatches: {}",
        cases.len(),
        if passed { "none".into() } else { mismatches.join("; ") }
    );
    verdict(6, "regime boundary", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_07_sandwich() {
    let config = sandwich_reference_config().unwrap();
    let out = algebraic_run();
    let report = sandwich(&config, out, 0.3, &[2.0, 4.0, 6.0, 8.0], 5e-2).unwrap();
    let (upper, lower) = (report.upper_check(), report.lower_check());

    let r = config.reaction.params.r;
    let mut inside = 0;
    let mut outside = Vec::new();
    for &(t, x) in out.traces[0].samples().iter().filter(|s| s.0 >= 4.0) {
        let (lo, hi) = predict_level_envelope(0.4, r, &config.data, 0.3 * r, t).unwrap();
        if lo <= x && x <= hi {
            inside += 1;
        } else {
            outside.push((t, x, lo, hi));
        }
    }
    let envelope_ok = outside.is_empty();
    let passed = upper.passed && lower.passed && envelope_ok;
    let first_miss = outside
        .first()
        .map_or(String::new(), |(t, x, lo, hi)| format!(", first miss t = {t:.2}: x = {x:.4} not in [{lo:.4}, {hi:.4}]"));
    let detail = format!(
        "max(u - m) = {:.3e}, max(v - u) = {:.3e} (tol 5e-2); level inside envelope at {inside}/{} samples{first_miss}",
        report.upper_excess,
        report.lower_excess,
        inside + outside.len()
    );
    verdict(7, "sandwich", passed, &detail);
    assert!(passed, "{detail}");
}

#[test]
fn criterion_08_convergence() {
    let start = Instant::now();
    let (dx, dt) = (0.1, 0.01);
    let e = heat_error(dx, dt, 1.0).unwrap();
    let constant = e / (dt + dx * dx);
    let coarse = heat_error(0.2, 1e-5, 1.0).unwrap();
    let fine = heat_error(0.1, 1e-5, 1.0).unwrap();
    let ratio = coarse / fine;
    let elapsed = start.elapsed();
    let passed = constant < 1.0 && (ratio / 4.0 - 1.0).abs() <= 0.2 && elapsed < Duration::from_secs(30);
    let detail = format!(
        "error / (dt + dx^2) = {constant:.4} (C = 1), halving dx shrinks error by {ratio:.3} (4 +- 20%), {:.1} s",
        elapsed.as_secs_f64()
    );
    verdict(8, "solver convergence", passed, &detail);
    assert!(passed, "{detail}");
}

fn static_config(data: InitialData) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(weak(0.4), data, 0.05, 0.01, 6.0);
    cfg.x_left = Some(-10.0);
    cfg.x_right = Some(120.0);
    cfg.growth = GrowthPolicy::Static;
    cfg.snapshot_times = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    cfg
}

#[test]
fn criterion_09_order_and_maximum_principle() {
    let pairs = [
        (InitialData::sub_exponential(5.0, 1.0).unwrap(), InitialData::sub_exponential(2.0, 1.0).unwrap()),
        (InitialData::sub_exponential(5.0, 0.2).unwrap(), InitialData::sub_exponential(1.0, 0.2).unwrap()),
        (InitialData::sub_exponential(5.0, 1.0).unwrap(), InitialData::algebraic(1.0, 1.0).unwrap()),
        (InitialData::algebraic(1.0, 100.0).unwrap(), InitialData::algebraic(1.0, 1.0).unwrap()),
    ];
    let mut order_violation = 0.0_f64;
    let mut monotone_violation = 0.0_f64;
    let mut clamps = 0;
    for (low, high) in pairs {
        for x in (0..2600).map(|i| -10.0 + 0.05 * i as f64) {
            assert!(low.u0(x) <= high.u0(x), "initial data not ordered at {x}");
        }
        let a = run(&static_config(low)).unwrap();
        let b = run(&static_config(high)).unwrap();
        clamps += a.diagnostics.clamp_events + b.diagnostics.clamp_events;
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(sa.values.len(), sb.values.len());
            for (&u, &w) in sa.values.iter().zip(&sb.values) {
                order_violation = order_violation.max(u - w);
            }
            for s in [sa, sb] {
                for pair in s.values.windows(2) {
                    monotone_violation = monotone_violation.max(pair[1] - pair[0]);
                }
            }
        }
    }
    let acceptance_runs = [finite_speed_run(), power_run(), algebraic_run()];
    let acceptance_clamps: usize = acceptance_runs.iter().map(|o| o.diagnostics.clamp_events).sum();
    let passed = order_violation <= 1e-8 && monotone_violation <= 1e-10 && clamps == 0 && acceptance_clamps == 0;
    let detail = format!(
        "max(u_low - u_high) = {order_violation:.3e} (1e-8), max increase in x = {monotone_violation:.3e} (1e-10), clamp events {clamps} in order runs and {acceptance_clamps} in long runs"
    );
    verdict(9, "order and maximum principle", passed, &detail);
    assert!(passed, "{detail}");
}

/// `(t, ln x_lower, ln x_upper)` for logarithmic data, beta = 2, alpha = 0.4,
/// r = 1, eps = 0.3, computed with 50-digit arithmetic by substituting
/// y = ((r -+ eps)(alpha+1) t)^(1/(alpha+1)) into ln x = exp(y / beta).
const LOG_ENVELOPE_ORACLE: [(f64, f64, f64); 20] = include!("data/log_envelope_oracle.in");

#[test]
fn criterion_10_log_exp_regime() {
    let (alpha, r, eps, beta) = (0.4, 1.0, 0.3, 2.0);
    let data = InitialData::logarithmic(beta).unwrap();
    let mut problems = Vec::new();

    match classify_regime(alpha, &data).unwrap().regime {
        Regime::LogExpAcceleration { inner_exponent, outer_factor } => {
            if (inner_exponent - 1.0 / 1.4).abs() > 1e-15 || (outer_factor - 0.5).abs() > 1e-15 {
                problems.push(format!("regime parameters {inner_exponent}, {outer_factor}"));
            }
        }
        other => problems.push(format!("regime {other:?}")),
    }

    let mut worst = 0.0_f64;
    for &(t, lo, hi) in &LOG_ENVELOPE_ORACLE {
        let (got_lo, got_hi) = predict_log_level_envelope(alpha, r, &data, eps, t).unwrap();
        worst = worst.max((got_lo / lo - 1.0).abs()).max((got_hi / hi - 1.0).abs());
        let (x_lo, x_hi) = predict_level_envelope(alpha, r, &data, eps, t).unwrap();
        if x_hi.is_finite() {
            worst = worst.max((x_lo.ln() / lo - 1.0).abs()).max((x_hi.ln() / hi - 1.0).abs());
        }
        // u0 composed with its inverse returns the bracketing densities.
        for (x, rate) in [(x_lo, r - eps), (x_hi, r + eps)] {
            if x.is_finite() {
                let y = (rate * (alpha + 1.0) * t).powf(1.0 / (alpha + 1.0));
                worst = worst.max((-data.u0(x).ln() / y - 1.0).abs());
            }
        }
    }
    if worst > 1e-12 {
        problems.push(format!("worst relative error {worst:.3e}"));
    }
    let passed = problems.is_empty();
    let detail = format!(
        "LogExpAcceleration with inner 1/(alpha+1), outer 1/beta; {} sample times, worst relative error {worst:.2e} (1e-12){}",
        LOG_ENVELOPE_ORACLE.len(),
        if passed { String::new() } else { format!("; {}", problems.join("; ")) }
    );
    verdict(10, "log-exp regime", passed, &detail);
    assert!(passed, "{detail}");
}
