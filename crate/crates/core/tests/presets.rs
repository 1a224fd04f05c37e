use std::fs;

use frontlab_core::presets::{fig9_overlays, preset, preset_names, run_preset, PresetKind};
use frontlab_core::{parse_experiment, to_config_text, FitWindow, GrowthPolicy, InitialData, ReactionKind};

const SAMPLE: &str = include_str!("../../../configs/algebraic.toml");

#[test]
fn sample_config_parses() {
    let exp = parse_experiment(SAMPLE).unwrap();
    let sim = &exp.simulation;
    assert_eq!(sim.reaction.kind, ReactionKind::WeaklyMonostable);
    assert_eq!(sim.data, InitialData::Algebraic { beta: 1.0, scale: 100.0 });
    assert_eq!(sim.x_left, Some(-10.0));
    assert_eq!(sim.x_right, None);
    assert_eq!(sim.growth, GrowthPolicy::DoubleWhenNear(0.1));
    assert_eq!(sim.lambdas, vec![0.5, 0.1]);
    assert_eq!(exp.fit_window, FitWindow::Range { t_start: 4.0, t_end: 8.0 });
    assert_eq!(parse_experiment(&to_config_text(&exp)).unwrap(), exp);
}

#[test]
fn nonlinearity_table() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_preset("fig1", dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("fig1/nonlinearity.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,f_kpp,f_weak,f_allee,f_kpp_over_s,f_weak_over_s,f_allee_over_s"
    );
    assert_eq!(lines.count(), 201);
    assert!(dir.path().join("fig1/plot.py").exists());
    assert_eq!(report.files.len(), 2);
}

#[test]
fn classification_table_matches_threshold() {
    let dir = tempfile::tempdir().unwrap();
    run_preset("fig2", dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("fig2/classification.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let alpha: f64 = cells[0].parse().unwrap();
        let beta: f64 = cells[1].parse().unwrap();
        let finite = beta * (alpha + 1.0) >= 1.0 - 1e-12;
        assert_eq!(cells[2] == "finite_speed", finite, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 600);
}

#[test]
fn single_panel_run_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_preset("fig3a", dir.path()).unwrap();
    let run = &report.runs[0];
    assert_eq!(run.diagnostics.clamp_events, 0);
    let snaps = fs::read_to_string(dir.path().join("fig3a/snapshots.csv")).unwrap();
    let mut times: Vec<&str> = snaps.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    times.dedup();
    assert_eq!(times, ["0.0", "2.5", "5.0", "7.5", "10.0"]);
    let cfg = parse_experiment(&fs::read_to_string(dir.path().join("fig3a/config.toml")).unwrap()).unwrap();
    assert_eq!(cfg.simulation.reaction.params.alpha, 0.2);
    assert_eq!(cfg.simulation.data.beta(), 0.1);
    let fits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig3a/fits.json")).unwrap()).unwrap();
    assert_eq!(fits["expected"]["regime"], "power_acceleration");
    assert!(report.summary.iter().any(|l| l.contains("expected power_acceleration")));
}

#[test]
fn comparison_preset_layout() {
    let p = preset("fig9").unwrap();
    let PresetKind::Simulations { runs, overlays } = p.kind else { panic!() };
    let labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["sub_exponential_bounded", "sub_exponential_beta_0.2", "algebraic_beta_1"]);
    for r in &runs {
        assert_eq!(r.experiment.simulation.reaction.params.alpha, 0.4);
        assert_eq!(r.experiment.simulation.lambdas, vec![0.5]);
    }
    assert_eq!(overlays.len(), 3);
    let at10: Vec<f64> = fig9_overlays().iter().map(|o| o.model.evaluate(10.0)).collect();
    assert!((at10[0] - 15.0).abs() < 1e-12);
    assert!((at10[1] - (0.0013 * 10f64.powf(1.0 / 0.28) + 40.0)).abs() < 1e-9);
    assert!((at10[2] - (0.0236 * 14f64.powf(1.0 / 1.4).exp() + 10.0)).abs() < 1e-9);
}

#[test]
fn figure_presets_expand_to_panels() {
    let names = preset_names();
    for fig in 3..=8 {
        let PresetKind::Simulations { runs, .. } = preset(&format!("fig{fig}")).unwrap().kind else { panic!() };
        let panels = names.iter().filter(|n| n.len() == 5 && n.starts_with(&format!("fig{fig}"))).count();
        assert_eq!(runs.len(), panels);
    }
    assert!(preset("fig3e").is_err());
    assert!(preset("fig10").is_err());
}
