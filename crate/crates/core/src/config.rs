//! Declarative experiment files.
//!
//! ```toml
//! [reaction]
//! alpha = 0.4
//!
//! [initial_data]
//! family = "algebraic"
//! beta = 1.0
//! scale = 100.0
//!
//! [grid]
//! dx = 0.05
//!
//! [time]
//! t_end = 8.0
//! dt = 0.01
//! ```
//!
//! Everything else has a default; unknown keys are rejected and every error
//! names the offending key and its line.

use std::fmt::Write as _;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::measurement::FitWindow;
use crate::nonlinearity::{ReactionFamily, ReactionKind, ReactionParams, UNDERFLOW_GUARD};
use crate::solver::{GrowthPolicy, SimulationConfig, DEFAULT_MAX_CELLS};

/// A simulation plus the window its level traces are fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub simulation: SimulationConfig,
    pub fit_window: FitWindow,
}

impl ExperimentConfig {
    pub fn new(simulation: SimulationConfig) -> Self {
        ExperimentConfig {
            simulation,
            fit_window: FitWindow::LastHalf,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    reaction: Option<Spanned<RawReaction>>,
    initial_data: Option<Spanned<RawInitial>>,
    grid: Option<Spanned<RawGrid>>,
    time: Option<Spanned<RawTime>>,
    measurement: Option<Spanned<RawMeasurement>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawReaction {
    kind: Option<Spanned<String>>,
    alpha: Option<Spanned<f64>>,
    r: Option<Spanned<f64>>,
    k: Option<Spanned<f64>>,
    s0: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    family: Option<Spanned<String>>,
    beta: Option<Spanned<f64>>,
    mu: Option<Spanned<f64>>,
    scale: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dx: Option<Spanned<f64>>,
    x_left: Option<Spanned<f64>>,
    x_right: Option<Spanned<f64>>,
    growth: Option<Spanned<String>>,
    growth_margin: Option<Spanned<f64>>,
    max_cells: Option<Spanned<i64>>,
    floor: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_end: Option<Spanned<f64>>,
    dt: Option<Spanned<f64>>,
    theta: Option<Spanned<f64>>,
    snapshot_times: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMeasurement {
    lambdas: Option<Spanned<Vec<f64>>>,
    trace_stride: Option<Spanned<i64>>,
    fit_window: Option<Spanned<Vec<f64>>>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].matches('\n').count() + 1
    }

    fn err(&self, span: Range<usize>, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line(span),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn require<T: Clone>(
        &self,
        v: &Option<Spanned<T>>,
        section: &Option<Spanned<impl Sized>>,
        key: &str,
    ) -> Result<Spanned<T>> {
        match v {
            Some(s) => Ok(s.clone()),
            None => {
                let line = section.as_ref().map_or(1, |s| self.line(s.span()));
                Err(Error::Config {
                    line,
                    key: key.to_string(),
                    message: "required key is missing".into(),
                })
            }
        }
    }

    fn check(&self, v: &Spanned<f64>, key: &str, ok: bool, rule: &str) -> Result<f64> {
        if ok && v.get_ref().is_finite() {
            Ok(*v.get_ref())
        } else {
            Err(self.err(v.span(), key, format!("{} violates {rule}", v.get_ref())))
        }
    }

    fn positive(&self, v: &Spanned<f64>, key: &str) -> Result<f64> {
        self.check(v, key, *v.get_ref() > 0.0, "> 0")
    }
}

/// Key named by a toml error: from a backticked field name when present,
/// otherwise from the `key =` text on the reported line.
fn key_from_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    e.span()
        .and_then(|s| {
            let line_start = text[..s.start.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
            let line = text[line_start..].lines().next()?;
            line.split_once('=').map(|(k, _)| k.trim().to_string())
        })
        .unwrap_or_default()
}

pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    parse_experiment(text).map(|e| e.simulation)
}

pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let ctx = Ctx { text };
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map_or(1, |s| ctx.line(s)),
        key: key_from_toml_error(text, &e),
        message: e.message().trim().to_string(),
    })?;

    let reaction_section = raw.reaction;
    let reaction = reaction_section.as_ref().map(|s| s.get_ref());
    let default_reaction = RawReaction::default();
    let reaction = reaction.unwrap_or(&default_reaction);

    let alpha_s = ctx.require(&reaction.alpha, &reaction_section, "reaction.alpha")?;
    let alpha = ctx.check(&alpha_s, "reaction.alpha", *alpha_s.get_ref() >= 0.0, ">= 0")?;
    let r = match &reaction.r {
        Some(v) => ctx.positive(v, "reaction.r")?,
        None => 1.0,
    };
    let k = match &reaction.k {
        Some(v) => ctx.check(v, "reaction.k", *v.get_ref() >= 0.0, ">= 0")?,
        None => 1.0,
    };
    let s0 = match &reaction.s0 {
        Some(v) => {
            let x = *v.get_ref();
            ctx.check(v, "reaction.s0", x > 0.0 && x <= 1.0, "0 < s0 <= 1")?
        }
        None => 1.0,
    };
    let kind = match &reaction.kind {
        Some(v) => ReactionKind::from_name(v.get_ref()).ok_or_else(|| {
            ctx.err(
                v.span(),
                "reaction.kind",
                format!(
                    "unknown kind `{}`; expected weakly_monostable, kpp, allee or none",
                    v.get_ref()
                ),
            )
        })?,
        None => ReactionKind::WeaklyMonostable,
    };
    let params = ReactionParams::new(r, alpha, k, s0)?;
    let family = ReactionFamily::new(kind, params)?;

    let init_section = raw.initial_data;
    let default_init = RawInitial::default();
    let init = init_section.as_ref().map_or(&default_init, |s| s.get_ref());
    let family_s = ctx.require(&init.family, &init_section, "initial_data.family")?;
    let beta_s = ctx.require(&init.beta, &init_section, "initial_data.beta")?;
    let beta = ctx.positive(&beta_s, "initial_data.beta")?;
    let reject = |v: &Option<Spanned<f64>>, key: &str, fam: &str| -> Result<()> {
        match v {
            Some(s) => Err(ctx.err(s.span(), key, format!("not a parameter of the {fam} family"))),
            None => Ok(()),
        }
    };
    let fam = family_s.get_ref().as_str();
    let data = match fam {
        "sub_exponential" => {
            reject(&init.scale, "initial_data.scale", fam)?;
            let mu_s = ctx.require(&init.mu, &init_section, "initial_data.mu")?;
            InitialData::SubExponential {
                mu: ctx.positive(&mu_s, "initial_data.mu")?,
                beta,
            }
        }
        "algebraic" => {
            reject(&init.mu, "initial_data.mu", fam)?;
            let scale = match &init.scale {
                Some(v) => ctx.positive(v, "initial_data.scale")?,
                None => 1.0,
            };
            InitialData::Algebraic { beta, scale }
        }
        "logarithmic" | "power_tail" => {
            reject(&init.mu, "initial_data.mu", fam)?;
            reject(&init.scale, "initial_data.scale", fam)?;
            if fam == "logarithmic" {
                InitialData::Logarithmic { beta }
            } else {
                InitialData::PowerTail { beta }
            }
        }
        other => {
            return Err(ctx.err(
                family_s.span(),
                "initial_data.family",
                format!(
                    "unknown family `{other}`; expected sub_exponential, algebraic, logarithmic or power_tail"
                ),
            ))
        }
    };

    let grid_section = raw.grid;
    let default_grid = RawGrid::default();
    let grid = grid_section.as_ref().map_or(&default_grid, |s| s.get_ref());
    let dx_s = ctx.require(&grid.dx, &grid_section, "grid.dx")?;
    let dx = ctx.positive(&dx_s, "grid.dx")?;
    let x_left = grid.x_left.as_ref().map(|v| ctx.check(v, "grid.x_left", true, "finite")).transpose()?;
    let x_right = grid.x_right.as_ref().map(|v| ctx.check(v, "grid.x_right", true, "finite")).transpose()?;
    if let (Some(l), Some(rs)) = (x_left, &grid.x_right) {
        ctx.check(rs, "grid.x_right", *rs.get_ref() > l, "x_right > x_left")?;
    }
    let margin = match &grid.growth_margin {
        Some(v) => {
            let m = *v.get_ref();
            ctx.check(v, "grid.growth_margin", m > 0.0 && m < 1.0, "0 < margin < 1")?
        }
        None => 0.1,
    };
    let growth = match &grid.growth {
        None => GrowthPolicy::DoubleWhenNear(margin),
        Some(v) => match v.get_ref().as_str() {
            "double_when_near" => GrowthPolicy::DoubleWhenNear(margin),
            "static" => {
                if let Some(m) = &grid.growth_margin {
                    return Err(ctx.err(m.span(), "grid.growth_margin", "has no effect with growth = \"static\""));
                }
                GrowthPolicy::Static
            }
            other => {
                return Err(ctx.err(
                    v.span(),
                    "grid.growth",
                    format!("unknown policy `{other}`; expected static or double_when_near"),
                ))
            }
        },
    };
    let max_cells = match &grid.max_cells {
        Some(v) => {
            if *v.get_ref() < 3 {
                return Err(ctx.err(v.span(), "grid.max_cells", format!("{} violates >= 3", v.get_ref())));
            }
            *v.get_ref() as usize
        }
        None => DEFAULT_MAX_CELLS,
    };
    let floor = match &grid.floor {
        Some(v) => {
            let f = *v.get_ref();
            ctx.check(v, "grid.floor", (0.0..1.0).contains(&f), "0 <= floor < 1")?
        }
        None => UNDERFLOW_GUARD,
    };

    let time_section = raw.time;
    let default_time = RawTime::default();
    let time = time_section.as_ref().map_or(&default_time, |s| s.get_ref());
    let t_end_s = ctx.require(&time.t_end, &time_section, "time.t_end")?;
    let t_end = ctx.check(&t_end_s, "time.t_end", *t_end_s.get_ref() >= 0.0, ">= 0")?;
    let dt_s = ctx.require(&time.dt, &time_section, "time.dt")?;
    let dt = ctx.positive(&dt_s, "time.dt")?;
    let theta = match &time.theta {
        Some(v) => {
            let th = *v.get_ref();
            ctx.check(v, "time.theta", (0.5..=1.0).contains(&th), "1/2 <= theta <= 1")?
        }
        None => 1.0,
    };
    let snapshot_times = match &time.snapshot_times {
        Some(v) => {
            let ts = v.get_ref();
            let slack = 1e-9 * (1.0 + t_end);
            if let Some(bad) = ts.iter().find(|&&s| !(s >= -slack && s <= t_end + slack)) {
                return Err(ctx.err(v.span(), "time.snapshot_times", format!("{bad} lies outside [0, t_end]")));
            }
            if ts.windows(2).any(|w| w[1] < w[0]) {
                return Err(ctx.err(v.span(), "time.snapshot_times", "times must be sorted"));
            }
            ts.clone()
        }
        None => Vec::new(),
    };

    let meas_section = raw.measurement;
    let default_meas = RawMeasurement::default();
    let meas = meas_section.as_ref().map_or(&default_meas, |s| s.get_ref());
    let lambdas = match &meas.lambdas {
        Some(v) => {
            let ls = v.get_ref();
            if ls.is_empty() {
                return Err(ctx.err(v.span(), "measurement.lambdas", "at least one level is required"));
            }
            if let Some(bad) = ls.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
                return Err(ctx.err(v.span(), "measurement.lambdas", format!("{bad} lies outside (0, 1)")));
            }
            ls.clone()
        }
        None => vec![0.5],
    };
    let trace_stride = match &meas.trace_stride {
        Some(v) if *v.get_ref() >= 1 => *v.get_ref() as usize,
        Some(v) => return Err(ctx.err(v.span(), "measurement.trace_stride", format!("{} violates >= 1", v.get_ref()))),
        None => 1,
    };
    let fit_window = match &meas.fit_window {
        Some(v) => match v.get_ref().as_slice() {
            &[a, b] if a < b => FitWindow::Range { t_start: a, t_end: b },
            _ => {
                return Err(ctx.err(
                    v.span(),
                    "measurement.fit_window",
                    "expected [t_start, t_end] with t_start < t_end",
                ))
            }
        },
        None => FitWindow::LastHalf,
    };

    let simulation = SimulationConfig {
        reaction: family,
        data,
        x_left,
        x_right,
        dx,
        dt,
        t_end,
        theta,
        snapshot_times,
        lambdas,
        growth,
        floor,
        trace_stride,
        max_cells,
    };
    simulation.validate().map_err(|e| Error::Config {
        line: 1,
        key: String::new(),
        message: e.to_string(),
    })?;
    Ok(ExperimentConfig {
        simulation,
        fit_window,
    })
}

/// Shortest round-trip decimal, which is also a valid TOML float.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn list(vs: &[f64]) -> String {
    let items: Vec<String> = vs.iter().map(|&v| num(v)).collect();
    format!("[{}]", items.join(", "))
}

/// Render a config that `parse_experiment` reads back to an equal value.
pub fn to_config_text(config: &ExperimentConfig) -> String {
    let sim = &config.simulation;
    let p = sim.reaction.params;
    let mut out = String::new();
    let _ = writeln!(out, "[reaction]");
    let _ = writeln!(out, "kind = \"{}\"", sim.reaction.kind.name());
    let _ = writeln!(out, "alpha = {}", num(p.alpha));
    let _ = writeln!(out, "r = {}", num(p.r));
    let _ = writeln!(out, "k = {}", num(p.k));
    let _ = writeln!(out, "s0 = {}", num(p.s0));

    let _ = writeln!(out, "\n[initial_data]");
    let _ = writeln!(out, "family = \"{}\"", sim.data.family_name());
    let _ = writeln!(out, "beta = {}", num(sim.data.beta()));
    match sim.data {
        InitialData::SubExponential { mu, .. } => {
            let _ = writeln!(out, "mu = {}", num(mu));
        }
        InitialData::Algebraic { scale, .. } => {
            let _ = writeln!(out, "scale = {}", num(scale));
        }
        InitialData::Logarithmic { .. } | InitialData::PowerTail { .. } => {}
    }

    let _ = writeln!(out, "\n[grid]");
    let _ = writeln!(out, "dx = {}", num(sim.dx));
    if let Some(l) = sim.x_left {
        let _ = writeln!(out, "x_left = {}", num(l));
    }
    if let Some(r) = sim.x_right {
        let _ = writeln!(out, "x_right = {}", num(r));
    }
    match sim.growth {
        GrowthPolicy::Static => {
            let _ = writeln!(out, "growth = \"static\"");
        }
        GrowthPolicy::DoubleWhenNear(m) => {
            let _ = writeln!(out, "growth = \"double_when_near\"");
            let _ = writeln!(out, "growth_margin = {}", num(m));
        }
    }
    let _ = writeln!(out, "max_cells = {}", sim.max_cells);
    let _ = writeln!(out, "floor = {}", num(sim.floor));

    let _ = writeln!(out, "\n[time]");
    let _ = writeln!(out, "t_end = {}", num(sim.t_end));
    let _ = writeln!(out, "dt = {}", num(sim.dt));
    let _ = writeln!(out, "theta = {}", num(sim.theta));
    if !sim.snapshot_times.is_empty() {
        let _ = writeln!(out, "snapshot_times = {}", list(&sim.snapshot_times));
    }

    let _ = writeln!(out, "\n[measurement]");
    let _ = writeln!(out, "lambdas = {}", list(&sim.lambdas));
    let _ = writeln!(out, "trace_stride = {}", sim.trace_stride);
    if let FitWindow::Range { t_start, t_end } = config.fit_window {
        let _ = writeln!(out, "fit_window = {}", list(&[t_start, t_end]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[reaction]
alpha = 0.4

[initial_data]
family = "algebraic"
beta = 1
scale = 100

[grid]
dx = 0.05

[time]
t_end = 8
dt = 0.01
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.theta, 1.0);
        assert_eq!(c.floor, 1e-300);
        assert_eq!(c.growth, GrowthPolicy::DoubleWhenNear(0.1));
        assert_eq!(c.lambdas, vec![0.5]);
        assert_eq!(c.reaction.kind, ReactionKind::WeaklyMonostable);
        assert_eq!(c.data, InitialData::Algebraic { beta: 1.0, scale: 100.0 });
        assert_eq!((c.dx, c.dt, c.t_end), (0.05, 0.01, 8.0));
    }

    fn expect_config_error(text: &str, key: &str, line: usize) {
        match parse_config(text) {
            Err(Error::Config { line: l, key: k, .. }) => {
                assert_eq!(k, key);
                assert_eq!(l, line, "line for {key}");
            }
            other => panic!("expected a config error for {key}, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_name_key_and_line() {
        let theta = MINIMAL.replace("dt = 0.01", "dt = 0.01\ntheta = 0.3");
        expect_config_error(&theta, "time.theta", 16);
        let beta = MINIMAL.replace("beta = 1", "beta = -1");
        expect_config_error(&beta, "initial_data.beta", 7);
    }

    #[test]
    fn unknown_and_missing_keys() {
        let unknown = MINIMAL.replace("dx = 0.05", "dx = 0.05\ndy = 1.0");
        expect_config_error(&unknown, "dy", 12);
        let missing = MINIMAL.replace("dt = 0.01", "");
        expect_config_error(&missing, "time.dt", 13);
        let wrong_family_key = MINIMAL.replace("scale = 100", "mu = 5");
        expect_config_error(&wrong_family_key, "initial_data.mu", 8);
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let bad = MINIMAL.replace("dx = 0.05", "dx = \"fine\"");
        match parse_config(&bad) {
            Err(Error::Config { line, key, .. }) => {
                assert_eq!(line, 11);
                assert_eq!(key, "dx");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let mut e = parse_experiment(MINIMAL).unwrap();
        e.simulation.snapshot_times = vec![0.0, 2.5, 8.0];
        e.simulation.lambdas = vec![0.1, 0.5, 0.9];
        e.simulation.x_right = Some(1e3 / 3.0);
        e.fit_window = FitWindow::Range { t_start: 4.0, t_end: 8.0 };
        let text = to_config_text(&e);
        assert_eq!(parse_experiment(&text).unwrap(), e);
    }
}
