//! Invariant suites behind `frontlab verify <subject>`.

use std::fmt;

use serde::Serialize;

use crate::analytic::{
    calibrate_subsolution, calibrate_supersolution_shift, calibrate_traveling_speed, min_wave_speed,
    subsolution_v, supersolution_m, OdeProfile, ProbeGrid, SubsolutionParams,
};
use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::nonlinearity::{
    default_hypothesis_grid, verify_hypothesis_bounds, ReactionFamily, ReactionKind, ReactionParams,
};
use crate::solver::{imex_step, run, ImexStepper, RunOutput, SimState, SimulationConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.6e} vs tolerance {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Hypothesis,
    Envelope,
    Sandwich,
    Convergence,
}

impl Subject {
    pub const ALL: [Subject; 4] = [Subject::Hypothesis, Subject::Envelope, Subject::Sandwich, Subject::Convergence];

    pub fn name(self) -> &'static str {
        match self {
            Subject::Hypothesis => "hypothesis",
            Subject::Envelope => "envelope",
            Subject::Sandwich => "sandwich",
            Subject::Convergence => "convergence",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub subject: Subject,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(
            f,
            "verify {}: {}",
            self.subject.name(),
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

pub fn verify(subject: Subject) -> Result<VerificationReport> {
    let checks = match subject {
        Subject::Hypothesis => hypothesis_checks(&[0.2, 0.4, 0.6])?,
        Subject::Envelope => envelope_checks()?,
        Subject::Sandwich => {
            let s = sandwich_for_reference_run()?;
            vec![s.upper_check(), s.lower_check()]
        }
        Subject::Convergence => convergence_checks()?,
    };
    Ok(VerificationReport { subject, checks })
}

/// Upper/lower structural bounds with `r = K = s0 = 1` on the default log grid.
pub fn hypothesis_checks(alphas: &[f64]) -> Result<Vec<Check>> {
    let grid = default_hypothesis_grid();
    alphas
        .iter()
        .map(|&alpha| {
            let params = ReactionParams::with_alpha(alpha)?;
            let family = ReactionFamily::weakly_monostable(params);
            let report = verify_hypothesis_bounds(&params, |s| family.rate(s), &grid)?;
            let violations = (report.upper_violations + report.lower_violations) as f64;
            Ok(Check::at_most(
                format!("hypothesis_bounds[alpha={alpha}]"),
                violations,
                0.0,
                format!("{} grid points", grid.len()),
            ))
        })
        .collect()
}

/// Five-point central difference.
fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnvelopeErrors {
    pub points: usize,
    pub ode_residual: f64,
    pub w_x: f64,
    pub w_xx: f64,
}

/// Sample points right of `x0(t)` with `w` between `1e-150` and `0.9`:
/// 32 times in `[0.5, 10]` by 32 positions spaced evenly in `-ln w`.
pub fn envelope_sample_points(profile: &OdeProfile) -> Vec<(f64, f64)> {
    let a1 = profile.alpha + 1.0;
    let mut pts = Vec::new();
    for i in 0..32 {
        let t = 0.5 + 9.5 * i as f64 / 31.0;
        for j in 0..32 {
            // Target -ln w between 0.1 and 345, i.e. 1 - ln w = L.
            let l = 1.1 + (346.0 - 1.1) * (j as f64 / 31.0).powi(2);
            let y = (l.powf(a1) + profile.rho * a1 * t).powf(1.0 / a1) - 1.0;
            let x = profile.data.inverse_neg_log(y);
            if x.is_finite() && x > profile.data.clamp_point() {
                pts.push((t, x));
            }
        }
    }
    pts
}

/// Relative errors of the ODE identity and the closed-form derivatives
/// against finite differences. The `w_xx` error is taken relative to the sum
/// of the magnitudes of its two terms, so sign changes of `w_xx` do not blow
/// it up.
pub fn envelope_errors(profile: &OdeProfile) -> Result<EnvelopeErrors> {
    let mut e = EnvelopeErrors::default();
    let p = *profile;
    for (t, x) in envelope_sample_points(profile) {
        let w = p.w(t, x)?;
        let l = p.one_minus_ln_w(t, x)?;
        let rate = p.rho * w / l.powf(p.alpha);

        let ht = 1e-3 * t.min(1.0);
        let w_t_fd = d1(|s| p.w(s, x).unwrap_or(f64::NAN), t, ht);
        e.ode_residual = e.ode_residual.max(((w_t_fd - rate) / rate).abs());

        let (w_x, w_xx) = p.derivatives(t, x)?;
        // Step on the local decay length w / |w_x|, kept clear of x0(t).
        let x0 = p.x0(t)?;
        let hx = 0.02 * (w / w_x.abs()).min(0.5 * (x - x0));
        let wx_fd = d1(|s| p.w(t, s).unwrap_or(f64::NAN), x, hx);
        let wxx_fd = d2(|s| p.w(t, s).unwrap_or(f64::NAN), x, hx);
        e.w_x = e.w_x.max(((wx_fd - w_x) / w_x).abs());

        let phi = p.data.phi0(x)?;
        let a = p.alpha;
        let grow = (1.0 + phi.value).powf(a);
        let base = w / l.powf(a);
        let bracket = l.powf(-a) + a * l.powf(-(a + 1.0)) - a * (1.0 + phi.value).powf(-(a + 1.0));
        let scale = base * ((phi.d1 * grow).powi(2) * bracket.abs() + (phi.d2 * grow).abs());
        e.w_xx = e.w_xx.max((wxx_fd - w_xx).abs() / scale);
        e.points += 1;
    }
    Ok(e)
}

/// The two profiles sampled by the envelope suite.
pub fn reference_profiles() -> Result<Vec<(String, OdeProfile)>> {
    Ok(vec![
        (
            "sub_exponential(mu=5,beta=0.2)".into(),
            OdeProfile::new(1.0, 0.4, InitialData::sub_exponential(5.0, 0.2)?)?,
        ),
        (
            "algebraic(beta=1,scale=100)".into(),
            OdeProfile::new(1.0, 0.4, InitialData::algebraic(1.0, 100.0)?)?,
        ),
    ])
}

fn envelope_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, profile) in reference_profiles()? {
        let e = envelope_errors(&profile)?;
        let pts = format!("{} points", e.points);
        checks.push(Check::at_most(format!("ode_residual[{name}]"), e.ode_residual, 1e-6, pts.clone()));
        checks.push(Check::at_most(format!("w_x[{name}]"), e.w_x, 1e-5, pts.clone()));
        checks.push(Check::at_most(format!("w_xx[{name}]"), e.w_xx, 1e-5, pts));

        // Diffusion becomes negligible against the ODE rate at late times.
        let sup_curv = |t: f64| -> Result<f64> {
            let x0 = profile.x0(t)?;
            let mut m: f64 = 0.0;
            for j in 1..=200 {
                let x = x0 * (1.0 + 0.05 * j as f64);
                if x > profile.data.clamp_point() {
                    m = m.max(profile.relative_curvature(t, x)?.abs());
                }
            }
            Ok(m)
        };
        let (early, late) = (sup_curv(5.0)?, sup_curv(80.0)?);
        checks.push(Check::at_most(
            format!("curvature_decay[{name}]"),
            late / early,
            1.0,
            format!("sup |w_xx| (1-ln w)^alpha / w: {early:.3e} at t=5, {late:.3e} at t=80"),
        ));

        let t = 40.0;
        let x0 = profile.x0(t)?;
        let mut worst = f64::NEG_INFINITY;
        for j in 1..=200 {
            let x = x0 * (1.0 + 0.05 * j as f64);
            let (w_x, w_xx) = profile.derivatives(t, x)?;
            let w = profile.w(t, x)?;
            worst = worst.max((w_x + w_xx) / w);
        }
        checks.push(Check::at_most(
            format!("wx_plus_wxx[{name}]"),
            worst,
            0.0,
            "max (w_x + w_xx)/w right of x0(40)",
        ));
    }

    let reaction = ReactionFamily::weakly_monostable(ReactionParams::with_alpha(0.4)?);
    let probes: Vec<f64> = (0..400).map(|i| 10f64.powf(-1.0 + 6.0 * i as f64 / 399.0)).collect();
    let bound = calibrate_traveling_speed(&reaction, 10.0, 1.0, &probes)?;
    let c0 = min_wave_speed(&reaction.params, 1.0)?;
    checks.push(Check::at_most(
        "traveling_speed",
        c0 / bound.c,
        1.0,
        format!("calibrated c = {:.4} against c0 = {c0:.4}", bound.c),
    ));
    Ok(checks)
}

/// Pointwise comparison of a run with calibrated comparison functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub eps: f64,
    pub shift: f64,
    pub sub_m: f64,
    pub tolerance: f64,
    /// Largest `u - m` over the compared points.
    pub upper_excess: f64,
    /// Largest `v - u` over the compared points.
    pub lower_excess: f64,
    pub points: usize,
    pub times: Vec<f64>,
}

impl SandwichReport {
    pub fn upper_check(&self) -> Check {
        Check::at_most(
            "u <= m + tol",
            self.upper_excess,
            self.tolerance,
            format!("shift t# = {}, {} points", self.shift, self.points),
        )
    }

    pub fn lower_check(&self) -> Check {
        Check::at_most(
            "v - tol <= u",
            self.lower_excess,
            self.tolerance,
            format!("M = {}, {} points", self.sub_m, self.points),
        )
    }
}

/// Calibrate `m` (rate `r + eps/2`) and `v` (rate inside `(r - eps/2, r)`)
/// on the run's domain and compare them with the snapshots at `times`.
pub fn sandwich(config: &SimulationConfig, output: &RunOutput, eps: f64, times: &[f64], tolerance: f64) -> Result<SandwichReport> {
    let params = config.reaction.params;
    let upper = OdeProfile::upper(&params, eps, config.data)?;
    let lower = OdeProfile::lower(&params, eps, config.data)?;
    let x_max = output.x_right_initial;
    let probes = ProbeGrid::new(&config.data, config.t_end, x_max, 17, 400);
    let shift = calibrate_supersolution_shift(&config.reaction, &upper, &probes)?;
    let sub = calibrate_subsolution(&config.reaction, &lower, 1.0, &probes)?;
    check_sandwich(config, output, &upper, shift, &lower, &sub, eps, times, tolerance)
}

#[allow(clippy::too_many_arguments)]
fn check_sandwich(
    config: &SimulationConfig,
    output: &RunOutput,
    upper: &OdeProfile,
    shift: f64,
    lower: &OdeProfile,
    sub: &SubsolutionParams,
    eps: f64,
    times: &[f64],
    tolerance: f64,
) -> Result<SandwichReport> {
    let clamp = config.data.clamp_point();
    let mut report = SandwichReport {
        eps,
        shift,
        sub_m: sub.m,
        tolerance,
        upper_excess: f64::NEG_INFINITY,
        lower_excess: f64::NEG_INFINITY,
        points: 0,
        times: Vec::new(),
    };
    for &t in times {
        let snap = output
            .snapshots
            .iter()
            .find(|s| (s.t - t).abs() < 1e-6 * (1.0 + t))
            .ok_or_else(|| Error::Analysis(format!("no snapshot at t = {t}")))?;
        report.times.push(snap.t);
        for (i, &u) in snap.values.iter().enumerate() {
            let x = snap.position(i);
            if x <= clamp {
                continue;
            }
            let m = supersolution_m(upper, shift, snap.t, x);
            let v = subsolution_v(sub, lower, snap.t, x);
            report.upper_excess = report.upper_excess.max(u - m);
            report.lower_excess = report.lower_excess.max(v - u);
            report.points += 1;
        }
    }
    Ok(report)
}

/// Algebraic data, `alpha = 0.4`, `t_end = 8`, compared at `t = 2, 4, 6, 8`.
pub fn sandwich_reference_config() -> Result<SimulationConfig> {
    let reaction = ReactionFamily::weakly_monostable(ReactionParams::with_alpha(0.4)?);
    let mut cfg = SimulationConfig::new(reaction, InitialData::algebraic(1.0, 100.0)?, 0.05, 0.01, 8.0);
    cfg.snapshot_times = vec![2.0, 4.0, 6.0, 8.0];
    Ok(cfg)
}

fn sandwich_for_reference_run() -> Result<SandwichReport> {
    let cfg = sandwich_reference_config()?;
    let out = run(&cfg)?;
    sandwich(&cfg, &out, 0.3, &[2.0, 4.0, 6.0, 8.0], 5e-2)
}

/// `exp(-x^2 / (4 s))` evolved by pure diffusion for time `t`.
pub fn heat_kernel(x: f64, t: f64, s: f64) -> f64 {
    (s / (s + t)).sqrt() * (-x * x / (4.0 * (s + t))).exp()
}

/// L-infinity error of the scheme against the heat kernel on `[0, 12]`
/// (reflecting at 0, which the even solution satisfies) at `t = 1`.
pub fn heat_error(dx: f64, dt: f64, theta: f64) -> Result<f64> {
    let s0 = 1.0;
    let t_end = 1.0;
    let n = (12.0 / dx).round() as usize + 1;
    let values = (0..n).map(|i| heat_kernel(i as f64 * dx, 0.0, s0)).collect();
    let mut state = SimState {
        t: 0.0,
        x_left: 0.0,
        dx,
        values,
    };
    let none = ReactionFamily::new(ReactionKind::None, ReactionParams::with_alpha(0.4)?)?;
    let steps = (t_end / dt).round() as usize;
    let dt = t_end / steps as f64;
    let right = heat_kernel(state.x_right(), 0.0, s0);
    let mut stepper = ImexStepper::new(none, dt, theta, dx, n, right, 0.0)?;
    for _ in 0..steps {
        imex_step(&mut state, &mut stepper)?;
    }
    Ok(state
        .values
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - heat_kernel(i as f64 * dx, t_end, s0)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementResult {
    pub coarse_dx: f64,
    pub x_coarse: f64,
    pub x_fine: f64,
}

/// `x_{1/2}(t_end)` for `min{e^{-5x}, 1}`, `alpha = 0.4`, at `(dx, dt)` and `(dx/2, dt/2)`.
pub fn level_refinement(dx: f64, dt: f64, t_end: f64) -> Result<RefinementResult> {
    let reaction = ReactionFamily::weakly_monostable(ReactionParams::with_alpha(0.4)?);
    let data = InitialData::sub_exponential(5.0, 1.0)?;
    let at = |dx: f64, dt: f64| -> Result<f64> {
        let out = run(&SimulationConfig::new(reaction, data, dx, dt, t_end))?;
        out.traces[0]
            .samples()
            .last()
            .map(|s| s.1)
            .ok_or_else(|| Error::Analysis("empty trace".into()))
    };
    Ok(RefinementResult {
        coarse_dx: dx,
        x_coarse: at(dx, dt)?,
        x_fine: at(0.5 * dx, 0.5 * dt)?,
    })
}

fn convergence_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let (dx, dt) = (0.1, 0.01);
    let e = heat_error(dx, dt, 1.0)?;
    checks.push(Check::at_most(
        "heat_kernel_error",
        e / (dt + dx * dx),
        1.0,
        format!("L-inf error {e:.3e} at dx = {dx}, dt = {dt}; measured is error / (dt + dx^2)"),
    ));
    let coarse = heat_error(0.2, 1e-5, 1.0)?;
    let fine = heat_error(0.1, 1e-5, 1.0)?;
    let ratio = coarse / fine;
    checks.push(Check::at_most(
        "spatial_order",
        (ratio / 4.0 - 1.0).abs(),
        0.2,
        format!("error ratio {ratio:.4} on halving dx (expect 4)"),
    ));
    let r = level_refinement(0.1, 0.02, 5.0)?;
    checks.push(Check::at_most(
        "level_refinement",
        (r.x_fine - r.x_coarse).abs(),
        r.coarse_dx,
        format!("x_1/2(5) = {:.5} coarse, {:.5} fine", r.x_coarse, r.x_fine),
    ));
    Ok(checks)
}
