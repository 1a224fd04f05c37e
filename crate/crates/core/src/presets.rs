//! Named experiments that regenerate each figure's data.
//!
//! `fig1` tabulates the three nonlinearities near zero, `fig2` the regime
//! map in the `(beta, alpha)` plane. `fig3`..`fig5` are sub-exponential data
//! `min{exp(-5 x^beta), 1}` for `alpha = 0.2, 0.4, 0.6` and
//! `beta in {0.1, 0.2, 0.3, 1.0}` (panels `a`..`d`); `fig6`..`fig8` are
//! algebraic data `min{1/(1 + 100 x^beta), 1}` with `beta in {1, 2, 3}`
//! (panels `a`..`c`). `fig9` compares the level-set positions of three data
//! types against the reference curves `1.9t - 4`, `0.0013 t^(1/0.28) + 40`
//! and `0.0236 exp((1.4t)^(1/1.4)) + 10`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{classify_regime, Regime, RegimeKind};
use crate::config::{ExperimentConfig, to_config_text};
use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::measurement::{select_model, FitWindow, ModelSelection, RateModel};
use crate::nonlinearity::{log_grid, ReactionFamily, ReactionKind, ReactionParams};
use crate::output;
use crate::solver::{run, Diagnostics, RunOutput, SimulationConfig};

const PANEL_T_END: f64 = 10.0;
const PANEL_SNAPSHOTS: [f64; 5] = [0.0, 2.5, 5.0, 7.5, 10.0];
const SUB_EXP_BETAS: [f64; 4] = [0.1, 0.2, 0.3, 1.0];
const ALGEBRAIC_BETAS: [f64; 3] = [1.0, 2.0, 3.0];
const FIGURE_ALPHAS: [f64; 3] = [0.2, 0.4, 0.6];

#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    pub label: String,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overlay {
    pub label: String,
    pub model: RateModel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetKind {
    NonlinearityTable,
    ClassificationTable,
    Simulations { runs: Vec<PresetRun>, overlays: Vec<Overlay> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub description: String,
    pub kind: PresetKind,
}

fn weak(alpha: f64) -> ReactionFamily {
    ReactionFamily::weakly_monostable(ReactionParams::with_alpha(alpha).expect("preset alpha is valid"))
}

fn panel_config(alpha: f64, data: InitialData) -> ExperimentConfig {
    let mut sim = SimulationConfig::new(weak(alpha), data, 0.05, 0.01, PANEL_T_END);
    sim.snapshot_times = PANEL_SNAPSHOTS.to_vec();
    ExperimentConfig::new(sim)
}

fn panel_letter(i: usize) -> char {
    (b'a' + i as u8) as char
}

/// The (figure, panel) run for `fig3a`..`fig8c`.
fn panel(figure: usize, letter: char) -> Option<PresetRun> {
    let idx = (letter as u8).checked_sub(b'a')? as usize;
    let (alpha, data) = match figure {
        3..=5 => {
            let beta = *SUB_EXP_BETAS.get(idx)?;
            (FIGURE_ALPHAS[figure - 3], InitialData::SubExponential { mu: 5.0, beta })
        }
        6..=8 => {
            let beta = *ALGEBRAIC_BETAS.get(idx)?;
            (FIGURE_ALPHAS[figure - 6], InitialData::Algebraic { beta, scale: 100.0 })
        }
        _ => return None,
    };
    Some(PresetRun {
        label: format!("fig{figure}{letter}"),
        experiment: panel_config(alpha, data),
    })
}

fn panel_count(figure: usize) -> usize {
    if figure <= 5 {
        SUB_EXP_BETAS.len()
    } else {
        ALGEBRAIC_BETAS.len()
    }
}

/// The three comparison runs. Horizons are long enough for the regimes to
/// separate: a linear front by `t = 30`, the power law by `t = 40`, the
/// exp-power law by `t = 18`.
pub fn fig9_runs() -> Vec<PresetRun> {
    let mk = |label: &str, data: InitialData, t_end: f64, x_right: Option<f64>, window: (f64, f64)| {
        let mut sim = SimulationConfig::new(weak(0.4), data, 0.05, 0.01, t_end);
        sim.x_right = x_right;
        sim.snapshot_times = (0..=4).map(|k| t_end * k as f64 / 4.0).collect();
        PresetRun {
            label: label.to_string(),
            experiment: ExperimentConfig {
                simulation: sim,
                fit_window: FitWindow::Range {
                    t_start: window.0,
                    t_end: window.1,
                },
            },
        }
    };
    vec![
        mk(
            "sub_exponential_bounded",
            InitialData::SubExponential { mu: 5.0, beta: 1.0 },
            30.0,
            None,
            (15.0, 30.0),
        ),
        mk(
            "sub_exponential_beta_0.2",
            InitialData::SubExponential { mu: 5.0, beta: 0.2 },
            40.0,
            None,
            (20.0, 40.0),
        ),
        // The auto-sized domain for t = 18 would need millions of cells;
        // start smaller and let the domain double as the front advances.
        mk(
            "algebraic_beta_1",
            InitialData::Algebraic { beta: 1.0, scale: 100.0 },
            18.0,
            Some(400.0),
            (9.0, 18.0),
        ),
    ]
}

pub fn fig9_overlays() -> Vec<Overlay> {
    vec![
        Overlay {
            label: "1.9t-4.0".into(),
            model: RateModel::Linear { a: 1.9, b: -4.0 },
        },
        Overlay {
            label: "0.0013t^(1/0.28)+40".into(),
            model: RateModel::Power {
                c: 0.0013,
                p: 1.0 / 0.28,
                b: 40.0,
            },
        },
        Overlay {
            label: "0.0236exp((1.4t)^(1/1.4))+10".into(),
            model: RateModel::ExpPower {
                c: 0.0236,
                slope: 1.0,
                inner_exponent: 1.0 / 1.4,
                rate: 1.4,
                b: 10.0,
            },
        },
    ]
}

pub fn preset_names() -> Vec<String> {
    let mut names = vec!["fig1".to_string(), "fig2".to_string()];
    for fig in 3..=8 {
        names.push(format!("fig{fig}"));
        for i in 0..panel_count(fig) {
            names.push(format!("fig{fig}{}", panel_letter(i)));
        }
    }
    names.push("fig9".into());
    names
}

pub fn preset(name: &str) -> Result<ExperimentPreset> {
    let unknown = || Error::UnknownPreset {
        name: name.to_string(),
        available: preset_names().join(", "),
    };
    let kind = match name {
        "fig1" => PresetKind::NonlinearityTable,
        "fig2" => PresetKind::ClassificationTable,
        "fig9" => PresetKind::Simulations {
            runs: fig9_runs(),
            overlays: fig9_overlays(),
        },
        _ => {
            let rest = name.strip_prefix("fig").ok_or_else(unknown)?;
            let digit = rest.chars().next().ok_or_else(unknown)?;
            let figure = digit.to_digit(10).ok_or_else(unknown)? as usize;
            if !(3..=8).contains(&figure) {
                return Err(unknown());
            }
            let tail = &rest[1..];
            let runs = match tail.chars().collect::<Vec<_>>().as_slice() {
                [] => (0..panel_count(figure))
                    .map(|i| panel(figure, panel_letter(i)).expect("panel index in range"))
                    .collect(),
                [letter] => vec![panel(figure, *letter).ok_or_else(unknown)?],
                _ => return Err(unknown()),
            };
            PresetKind::Simulations {
                runs,
                overlays: Vec::new(),
            }
        }
    };
    Ok(ExperimentPreset {
        name: name.to_string(),
        description: describe(name),
        kind,
    })
}

fn describe(name: &str) -> String {
    match name {
        "fig1" => "KPP, weakly monostable and Allee nonlinearities near zero (alpha = 0.4)".into(),
        "fig2" => "regime map for sub-exponential data in the (beta, alpha) plane".into(),
        "fig9" => "level-set positions for three data types, alpha = 0.4, lambda = 1/2".into(),
        _ => {
            let fig: usize = name[3..4].parse().unwrap_or(0);
            let (kind, alpha) = if fig <= 5 {
                ("min{exp(-5 x^beta), 1}", FIGURE_ALPHAS[fig - 3])
            } else {
                ("min{1/(1 + 100 x^beta), 1}", FIGURE_ALPHAS[fig - 6])
            };
            format!("solution snapshots for u0 = {kind}, alpha = {alpha}")
        }
    }
}

/// Regime expected for a configuration and its headline rate, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expectation {
    pub regime: RegimeKind,
    /// Power exponent or exp-power slope predicted for the fitted headline.
    pub headline: Option<f64>,
}

pub fn expectation(sim: &SimulationConfig) -> Option<Expectation> {
    let c = classify_regime(sim.reaction.params.alpha, &sim.data).ok()?;
    let headline = match c.regime {
        Regime::FiniteSpeed => None,
        Regime::PowerAcceleration { exponent } => Some(exponent),
        Regime::ExpPowerAcceleration { outer_factor, .. } => Some(outer_factor),
        Regime::LogExpAcceleration { .. } => None,
    };
    Some(Expectation {
        regime: c.regime.kind(),
        headline,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceFit {
    pub lambda: f64,
    pub selection: Option<ModelSelection>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub expected: Option<Expectation>,
    pub fits: Vec<TraceFit>,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn lines(&self) -> Vec<String> {
        let expected = match self.expected {
            Some(Expectation { regime, headline: Some(h) }) => format!("{} ({h:.4})", regime.name()),
            Some(Expectation { regime, headline: None }) => regime.name().to_string(),
            None => "unclassified".into(),
        };
        let mut out = Vec::new();
        for fit in &self.fits {
            let measured = match (&fit.selection, &fit.error) {
                (Some(sel), _) => format!(
                    "{} headline {:.4} (rms {:.3e}, window [{}, {}])",
                    sel.best.model.name(),
                    sel.best.model.headline(),
                    sel.best.rms_x,
                    sel.best.window.0,
                    sel.best.window.1
                ),
                (None, Some(e)) => format!("no fit: {e}"),
                (None, None) => "no fit".into(),
            };
            out.push(format!(
                "{} lambda={}: expected {expected}; measured {measured}",
                self.label, fit.lambda
            ));
        }
        if self.diagnostics.truncated {
            out.push(format!(
                "{}: run truncated at t = {:?} (cell cap)",
                self.label, self.diagnostics.truncated_at
            ));
        }
        out
    }
}

/// Fit every recorded trace of a finished run.
pub fn summarize(label: &str, experiment: &ExperimentConfig, output: &RunOutput) -> RunSummary {
    let sim = &experiment.simulation;
    let p = sim.reaction.params;
    let fits = output
        .traces
        .iter()
        .map(|trace| match select_model(trace, p.alpha, p.r, experiment.fit_window) {
            Ok(sel) => TraceFit {
                lambda: trace.lambda,
                selection: Some(sel),
                error: None,
            },
            Err(e) => TraceFit {
                lambda: trace.lambda,
                selection: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    RunSummary {
        label: label.to_string(),
        expected: expectation(sim),
        fits,
        diagnostics: output.diagnostics.clone(),
        files: Vec::new(),
    }
}

/// Run one experiment and write `config.toml`, CSVs and `fits.json` into `dir`.
pub fn execute(label: &str, experiment: &ExperimentConfig, dir: &Path) -> Result<(RunSummary, RunOutput)> {
    let out = run(&experiment.simulation)?;
    let mut summary = summarize(label, experiment, &out);
    std::fs::create_dir_all(dir)?;
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, to_config_text(experiment))?;
    let mut files = vec![cfg];
    files.extend(output::write_run_tables(dir, &out.snapshots, &out.traces)?);
    let fits = dir.join("fits.json");
    output::write_json(&fits, &summary)?;
    files.push(fits);
    summary.files = files;
    Ok((summary, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetReport {
    pub name: String,
    pub dir: PathBuf,
    pub runs: Vec<RunSummary>,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn nonlinearity_rows(alpha: f64) -> Vec<Vec<f64>> {
    let params = ReactionParams::with_alpha(alpha).expect("valid alpha");
    let fams = [ReactionKind::Kpp, ReactionKind::WeaklyMonostable, ReactionKind::Allee]
        .map(|k| ReactionFamily::new(k, params).expect("valid family"));
    let mut s = vec![0.0];
    s.extend(log_grid(1e-8, 1.0, 200));
    s.into_iter()
        .map(|s| {
            let mut row = vec![s];
            row.extend(fams.iter().map(|f| f.rate(s)));
            row.extend(fams.iter().map(|f| if s > 0.0 { f.rate(s) / s } else { 0.0 }));
            row
        })
        .collect()
}

fn classification_rows() -> (Vec<Vec<f64>>, Vec<String>) {
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for ia in 1..=20 {
        let alpha = ia as f64 / 10.0;
        for ib in 1..=30 {
            let beta = ib as f64 / 20.0;
            let data = InitialData::SubExponential { mu: 5.0, beta };
            let c = classify_regime(alpha, &data).expect("valid parameters");
            let exponent = match c.regime {
                Regime::PowerAcceleration { exponent } => exponent,
                _ => 1.0,
            };
            rows.push(vec![alpha, beta, exponent]);
            names.push(c.regime.kind().name().to_string());
        }
    }
    (rows, names)
}

/// Execute a preset and write its artifacts under `out_root/<name>/`.
pub fn run_preset(name: &str, out_root: &Path) -> Result<PresetReport> {
    let preset = preset(name)?;
    let dir = out_root.join(&preset.name);
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut summary = vec![format!("{}: {}", preset.name, preset.description)];
    let mut runs = Vec::new();
    match &preset.kind {
        PresetKind::NonlinearityTable => {
            let path = dir.join("nonlinearity.csv");
            output::write_table_csv(
                output::create(&path)?,
                &["s", "f_kpp", "f_weak", "f_allee", "f_kpp_over_s", "f_weak_over_s", "f_allee_over_s"],
                &nonlinearity_rows(0.4),
            )?;
            summary.push(format!("wrote {}", path.display()));
            files.push(path);
        }
        PresetKind::ClassificationTable => {
            let (rows, names) = classification_rows();
            let path = dir.join("classification.csv");
            let mut w = output::create(&path)?;
            use std::io::Write;
            writeln!(w, "alpha,beta,regime,exponent")?;
            for (row, name) in rows.iter().zip(&names) {
                writeln!(
                    w,
                    "{},{},{},{}",
                    crate::config::num(row[0]),
                    crate::config::num(row[1]),
                    name,
                    crate::config::num(row[2])
                )?;
            }
            w.flush()?;
            for alpha in FIGURE_ALPHAS {
                let threshold = 1.0 / (alpha + 1.0);
                summary.push(format!("alpha = {alpha}: finite speed iff beta >= {threshold:.6}"));
            }
            files.push(path);
        }
        PresetKind::Simulations { runs: planned, overlays } => {
            let single = planned.len() == 1;
            let results: Vec<Result<(RunSummary, RunOutput)>> = planned
                .par_iter()
                .map(|r| {
                    let sub = if single { dir.clone() } else { dir.join(&r.label) };
                    execute(&r.label, &r.experiment, &sub)
                })
                .collect();
            let mut outputs = Vec::new();
            for res in results {
                let (s, out) = res?;
                summary.extend(s.lines());
                files.extend(s.files.iter().cloned());
                runs.push(s);
                outputs.push(out);
            }
            if !overlays.is_empty() {
                let path = dir.join("overlays.csv");
                let t_max = outputs
                    .iter()
                    .filter_map(|o| o.traces.first()?.samples().last().map(|s| s.0))
                    .fold(0.0, f64::max);
                let rows: Vec<Vec<f64>> = (0..=400)
                    .map(|i| {
                        let t = t_max * i as f64 / 400.0;
                        let mut row = vec![t];
                        row.extend(overlays.iter().map(|o| o.model.evaluate(t)));
                        row
                    })
                    .collect();
                let mut header = vec!["t"];
                header.extend(overlays.iter().map(|o| o.label.as_str()));
                output::write_table_csv(output::create(&path)?, &header, &rows)?;
                files.push(path);
            }
        }
    }
    files.push(output::write_plot_script(&dir)?);
    Ok(PresetReport {
        name: preset.name,
        dir,
        runs,
        files,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_experiment;

    #[test]
    fn every_figure_has_a_preset() {
        let names = preset_names();
        for fig in [1, 2, 3, 4, 5, 6, 7, 8, 9] {
            assert!(names.contains(&format!("fig{fig}")));
        }
        assert!(names.contains(&"fig3d".to_string()));
        assert!(names.contains(&"fig8c".to_string()));
        assert!(!names.contains(&"fig6d".to_string()));
    }

    #[test]
    fn unknown_preset_lists_the_available_ones() {
        match preset("fig10") {
            Err(Error::UnknownPreset { available, .. }) => assert!(available.contains("fig3a")),
            other => panic!("{other:?}"),
        }
        assert!(preset("fig6d").is_err());
        assert!(preset("figx").is_err());
    }

    #[test]
    fn fig3a_is_alpha_02_beta_01() {
        let p = preset("fig3a").unwrap();
        let PresetKind::Simulations { runs, .. } = p.kind else { panic!() };
        let sim = &runs[0].experiment.simulation;
        assert_eq!(sim.reaction.params.alpha, 0.2);
        assert_eq!(sim.data, InitialData::SubExponential { mu: 5.0, beta: 0.1 });
        assert_eq!(sim.snapshot_times, PANEL_SNAPSHOTS.to_vec());
    }

    #[test]
    fn presets_round_trip_through_config_text() {
        for name in preset_names() {
            if let PresetKind::Simulations { runs, .. } = preset(&name).unwrap().kind {
                for r in runs {
                    let text = to_config_text(&r.experiment);
                    assert_eq!(parse_experiment(&text).unwrap(), r.experiment, "{name}/{}", r.label);
                }
            }
        }
    }
}
