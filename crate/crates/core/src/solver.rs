//! IMEX finite-difference integrator for `u_t = u_xx + f(u)` on a truncated
//! half-line.
//!
//! The reaction is advanced explicitly and the diffusion by a theta-scheme:
//!
//! ```text
//! (I - theta dt L) u^{n+1} = u^n + dt f(u^n) + (1 - theta) dt L u^n
//! ```
//!
//! `L` is the three-point Laplacian with a reflecting left end (ghost value
//! `u_{-1} = u_1`) and a right end pinned to `u0(x_right)`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::analytic::{classify_regime, predict_level_envelope, RegimeKind};
use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::measurement::{extract_level_position, LevelSetTrace};
use crate::nonlinearity::{ReactionFamily, UNDERFLOW_GUARD};
use crate::tridiag::TridiagFactor;

/// Values outside `[-CLAMP_TOLERANCE, 1 + CLAMP_TOLERANCE]` count as clamp events.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Default cap on grid points; doubling past it truncates the run.
pub const DEFAULT_MAX_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "margin", rename_all = "snake_case")]
pub enum GrowthPolicy {
    Static,
    /// Double the width once the front comes within this fraction of the
    /// width from the right end.
    DoubleWhenNear(f64),
}

impl Default for GrowthPolicy {
    fn default() -> Self {
        GrowthPolicy::DoubleWhenNear(0.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub reaction: ReactionFamily,
    pub data: InitialData,
    /// `None` places the left end 10 units before the clamp point.
    pub x_left: Option<f64>,
    /// `None` sizes the domain from the predicted level-set envelope.
    pub x_right: Option<f64>,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub theta: f64,
    pub snapshot_times: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub growth: GrowthPolicy,
    pub floor: f64,
    /// Level positions are recorded every `trace_stride` steps.
    pub trace_stride: usize,
    pub max_cells: usize,
}

impl SimulationConfig {
    /// Defaults: backward Euler, `lambda = 1/2`, doubling at 10% margin,
    /// floor `1e-300`, auto-sized domain, snapshot at `t_end` only.
    pub fn new(reaction: ReactionFamily, data: InitialData, dx: f64, dt: f64, t_end: f64) -> Self {
        SimulationConfig {
            reaction,
            data,
            x_left: None,
            x_right: None,
            dx,
            dt,
            t_end,
            theta: 1.0,
            snapshot_times: Vec::new(),
            lambdas: vec![0.5],
            growth: GrowthPolicy::default(),
            floor: UNDERFLOW_GUARD,
            trace_stride: 1,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reaction.params.validate()?;
        self.data.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("dx", self.dx)?;
        positive("dt", self.dt)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Parameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Parameter(format!(
                "theta must lie in [1/2, 1], got {}",
                self.theta
            )));
        }
        let slack = 1e-9 * (1.0 + self.t_end);
        if let Some(&bad) = self
            .snapshot_times
            .iter()
            .find(|&&s| !(s >= -slack && s <= self.t_end + slack))
        {
            return Err(Error::Parameter(format!(
                "snapshot time {bad} lies outside [0, {}]",
                self.t_end
            )));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter("snapshot times must be sorted".into()));
        }
        if self.lambdas.is_empty() {
            return Err(Error::Parameter("at least one level is required".into()));
        }
        if let Some(&bad) = self.lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::Parameter(format!("level {bad} lies outside (0, 1)")));
        }
        if !(self.floor >= 0.0 && self.floor < 1.0) {
            return Err(Error::Parameter(format!("floor must lie in [0, 1), got {}", self.floor)));
        }
        if let GrowthPolicy::DoubleWhenNear(m) = self.growth {
            if !(m > 0.0 && m < 1.0) {
                return Err(Error::Parameter(format!("growth margin must lie in (0, 1), got {m}")));
            }
        }
        if self.trace_stride == 0 {
            return Err(Error::Parameter("trace_stride must be >= 1".into()));
        }
        if self.max_cells < 3 {
            return Err(Error::Parameter("max_cells must be >= 3".into()));
        }
        if let (Some(l), Some(r)) = (self.x_left, self.x_right) {
            if !(r > l) {
                return Err(Error::Parameter(format!("x_right = {r} must exceed x_left = {l}")));
            }
        }
        Ok(())
    }

    fn min_lambda(&self) -> f64 {
        self.lambdas.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Domain ends: the left end 10 units behind the clamp point, the right end
/// at twice the fast-side envelope at `t_end` (`eps = r/4`), and never short
/// of twice the distance `2 sqrt(r) t_end` covered at the KPP speed.
pub fn auto_size_domain(config: &SimulationConfig) -> Result<(f64, f64)> {
    let clamp = config.data.clamp_point();
    let x_left = config.x_left.unwrap_or(clamp - 10.0);
    if let Some(x_right) = config.x_right {
        return Ok((x_left, x_right));
    }
    let params = config.reaction.params;
    let r = params.r;
    let t = config.t_end;
    let predicted = predict_level_envelope(params.alpha, r, &config.data, 0.25 * r, t)
        .map_err(|e| Error::Input(format!("cannot size the domain automatically ({e}); set x_right")))?;
    let mut upper = predicted.1;
    if let InitialData::Algebraic { beta, .. } = config.data {
        // The pure tail x^(-beta) bounds the algebraic envelope for any scale.
        let y = ((r + 0.25 * r) * (params.alpha + 1.0) * t).powf(1.0 / (params.alpha + 1.0));
        upper = upper.max((y / beta).exp());
    }
    let kpp = 2.0 * r.sqrt() * t;
    let x_right = (2.0 * upper).max(2.0 * kpp).max(clamp + 10.0).max(x_left + 10.0);
    if !x_right.is_finite() {
        return Err(Error::Input(
            "predicted envelope overflows; set x_right explicitly".into(),
        ));
    }
    Ok((x_left, x_right))
}

/// Solution on the uniform grid `x_i = x_left + i dx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimState {
    pub t: f64,
    pub x_left: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl SimState {
    /// `u0` sampled on `[x_left, x_right]`, the right end rounded to whole cells.
    pub fn sample(data: &InitialData, x_left: f64, x_right: f64, dx: f64) -> Result<Self> {
        let cells = ((x_right - x_left) / dx).round();
        if !(cells >= 2.0) {
            return Err(Error::Parameter(format!(
                "domain [{x_left}, {x_right}] holds fewer than 3 grid points at dx = {dx}"
            )));
        }
        let n = cells as usize + 1;
        let values = (0..n).map(|i| data.u0(x_left + i as f64 * dx)).collect();
        Ok(SimState {
            t: 0.0,
            x_left,
            dx,
            values,
        })
    }

    pub fn position(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.dx
    }

    pub fn x_right(&self) -> f64 {
        self.position(self.values.len() - 1)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.position(i)).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepReport {
    pub clamp_events: usize,
    /// Largest distance outside `[0, 1]` before clamping.
    pub max_excursion: f64,
}

/// Factored implicit operator plus scratch space for one grid size.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    reaction: ReactionFamily,
    dt: f64,
    theta: f64,
    dx: f64,
    points: usize,
    right_value: f64,
    floor: f64,
    factor: TridiagFactor,
    rhs: Vec<f64>,
}

impl ImexStepper {
    pub fn new(
        reaction: ReactionFamily,
        dt: f64,
        theta: f64,
        dx: f64,
        points: usize,
        right_value: f64,
        floor: f64,
    ) -> Result<Self> {
        if points < 3 {
            return Err(Error::Parameter(format!("need at least 3 grid points, got {points}")));
        }
        let m = points - 1;
        let a = theta * dt / (dx * dx);
        let lower = vec![-a; m - 1];
        let diag = vec![1.0 + 2.0 * a; m];
        let mut upper = vec![-a; m - 1];
        upper[0] = -2.0 * a;
        let factor = TridiagFactor::new(&lower, &diag, &upper)?;
        Ok(ImexStepper {
            reaction,
            dt,
            theta,
            dx,
            points,
            right_value,
            floor,
            factor,
            rhs: vec![0.0; m],
        })
    }

    pub fn for_state(config: &SimulationConfig, state: &SimState) -> Result<Self> {
        Self::new(
            config.reaction,
            config.dt,
            config.theta,
            state.dx,
            state.values.len(),
            config.data.u0(state.x_right()),
            config.floor,
        )
    }

    /// Override the nominal step (used to land exactly on `t_end`).
    fn with_dt(mut self, dt: f64) -> Result<Self> {
        if dt != self.dt {
            self = Self::new(
                self.reaction,
                dt,
                self.theta,
                self.dx,
                self.points,
                self.right_value,
                self.floor,
            )?;
        }
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> usize {
        self.points
    }
}

/// Advance `state` by one step of the stepper.
pub fn imex_step(state: &mut SimState, stepper: &mut ImexStepper) -> Result<StepReport> {
    let u = &mut state.values;
    if u.len() != stepper.points {
        return Err(Error::Input(format!(
            "stepper built for {} points, state has {}",
            stepper.points,
            u.len()
        )));
    }
    let m = u.len() - 1;
    let dt = stepper.dt;
    let k = (1.0 - stepper.theta) * dt / (stepper.dx * stepper.dx);
    let a = stepper.theta * dt / (stepper.dx * stepper.dx);
    let ur = stepper.right_value;
    let rhs = &mut stepper.rhs;
    for i in 0..m {
        let left = if i == 0 { u[1] } else { u[i - 1] };
        let right = u[i + 1];
        let mut v = u[i] + dt * stepper.reaction.rate(u[i]);
        if k != 0.0 {
            v += k * (left - 2.0 * u[i] + right);
        }
        rhs[i] = v;
    }
    rhs[m - 1] += a * ur;
    stepper.factor.solve_in_place(rhs)?;

    let mut report = StepReport::default();
    let t_next = state.t + dt;
    for (dst, &v) in u.iter_mut().zip(rhs.iter()) {
        if !v.is_finite() {
            return Err(Error::NonFinite { t: t_next });
        }
        let excursion = if v < 0.0 { -v } else { v - 1.0 };
        if excursion > CLAMP_TOLERANCE {
            report.clamp_events += 1;
        }
        report.max_excursion = report.max_excursion.max(excursion);
        let c = v.clamp(0.0, 1.0);
        *dst = if c < stepper.floor { 0.0 } else { c };
    }
    u[m] = ur;
    state.t = t_next;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthOutcome {
    Unchanged,
    Grown { old_points: usize, new_points: usize },
    /// Doubling would exceed `max_cells`; the state is untouched.
    CapReached,
}

/// Double the domain width when the front at `min(lambda)/10` comes within
/// the margin of the right end. New cells are filled with `u0`.
pub fn maybe_grow_domain(state: &mut SimState, config: &SimulationConfig) -> GrowthOutcome {
    let GrowthPolicy::DoubleWhenNear(margin) = config.growth else {
        return GrowthOutcome::Unchanged;
    };
    let threshold = 0.1 * config.min_lambda();
    let Some(i) = state.values.iter().rposition(|&v| v > threshold) else {
        return GrowthOutcome::Unchanged;
    };
    let width = state.x_right() - state.x_left;
    if state.x_right() - state.position(i) > margin * width {
        return GrowthOutcome::Unchanged;
    }
    let old = state.values.len();
    let new = 2 * (old - 1) + 1;
    if new > config.max_cells {
        return GrowthOutcome::CapReached;
    }
    state.values.reserve(new - old);
    for j in old..new {
        let x = state.position(j);
        state.values.push(config.data.u0(x));
    }
    GrowthOutcome::Grown {
        old_points: old,
        new_points: new,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub x_left: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    fn of(state: &SimState) -> Self {
        Snapshot {
            t: state.t,
            x_left: state.x_left,
            dx: state.dx,
            values: state.values.clone(),
        }
    }

    pub fn position(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.dx
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.position(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthEvent {
    pub t: f64,
    pub old_points: usize,
    pub new_points: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt_effective: f64,
    pub clamp_events: usize,
    pub max_excursion: f64,
    pub growth_events: Vec<GrowthEvent>,
    pub truncated: bool,
    pub truncated_at: Option<f64>,
    /// Steps on a fixed grid where the total mass dropped.
    pub mass_decreases: usize,
    /// Trace samples skipped because the level was absent or unresolved.
    pub trace_gaps: usize,
    pub final_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub x_left: f64,
    pub x_right_initial: f64,
    pub snapshots: Vec<Snapshot>,
    pub traces: Vec<LevelSetTrace>,
    pub diagnostics: Diagnostics,
}

impl RunOutput {
    pub fn trace(&self, lambda: f64) -> Option<&LevelSetTrace> {
        self.traces.iter().find(|t| t.lambda == lambda)
    }

    pub fn snapshot_near(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

fn record_traces(state: &SimState, traces: &mut [LevelSetTrace], gaps: &mut usize) -> Result<()> {
    let grid = state.grid();
    for trace in traces {
        match extract_level_position(&grid, &state.values, trace.lambda) {
            Ok(x) => trace.push(state.t, x)?,
            Err(Error::BelowLevel { .. } | Error::FrontExitedDomain { .. }) => *gaps += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Integrate from `u0` to `t_end`, recording snapshots, level traces and
/// diagnostics.
pub fn run(config: &SimulationConfig) -> Result<RunOutput> {
    config.validate()?;
    let (x_left, x_right) = auto_size_domain(config)?;
    let mut state = SimState::sample(&config.data, x_left, x_right, config.dx)?;
    let x_right_initial = state.x_right();

    let steps = if config.t_end == 0.0 {
        0
    } else {
        (config.t_end / config.dt - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if steps == 0 { config.dt } else { config.t_end / steps as f64 };

    let snapshot_steps: BTreeSet<usize> = if config.snapshot_times.is_empty() {
        BTreeSet::from([steps])
    } else {
        config
            .snapshot_times
            .iter()
            .map(|&s| ((s / dt).round().max(0.0) as usize).min(steps))
            .collect()
    };

    let mut traces = config
        .lambdas
        .iter()
        .map(|&l| LevelSetTrace::new(l))
        .collect::<Result<Vec<_>>>()?;
    let mut diagnostics = Diagnostics {
        dt_effective: dt,
        ..Diagnostics::default()
    };
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());

    record_traces(&state, &mut traces, &mut diagnostics.trace_gaps)?;
    if snapshot_steps.contains(&0) {
        snapshots.push(Snapshot::of(&state));
    }

    let mut stepper = ImexStepper::for_state(config, &state)?.with_dt(dt)?;
    let mut mass = state.mass();
    for k in 1..=steps {
        let report = imex_step(&mut state, &mut stepper)?;
        state.t = k as f64 * dt;
        diagnostics.steps = k;
        diagnostics.clamp_events += report.clamp_events;
        diagnostics.max_excursion = diagnostics.max_excursion.max(report.max_excursion);

        let new_mass = state.mass();
        if new_mass < mass * (1.0 - 1e-12) {
            diagnostics.mass_decreases += 1;
        }
        mass = new_mass;

        if k % config.trace_stride == 0 || k == steps {
            record_traces(&state, &mut traces, &mut diagnostics.trace_gaps)?;
        }
        if snapshot_steps.contains(&k) {
            snapshots.push(Snapshot::of(&state));
        }
        if k == steps {
            break;
        }
        match maybe_grow_domain(&mut state, config) {
            GrowthOutcome::Unchanged => {}
            GrowthOutcome::Grown {
                old_points,
                new_points,
            } => {
                diagnostics.growth_events.push(GrowthEvent {
                    t: state.t,
                    old_points,
                    new_points,
                });
                stepper = ImexStepper::for_state(config, &state)?.with_dt(dt)?;
                mass = state.mass();
            }
            GrowthOutcome::CapReached => {
                diagnostics.truncated = true;
                diagnostics.truncated_at = Some(state.t);
                break;
            }
        }
    }
    diagnostics.final_points = state.values.len();
    Ok(RunOutput {
        x_left,
        x_right_initial,
        snapshots,
        traces,
        diagnostics,
    })
}

/// Regime expected for the configured data, if the exponent is classifiable.
pub fn expected_regime(config: &SimulationConfig) -> Option<RegimeKind> {
    classify_regime(config.reaction.params.alpha, &config.data)
        .ok()
        .map(|c| c.regime.kind())
}
