use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use frontlab_core::analytic::predict_log_level_envelope;
use frontlab_core::presets::{execute, run_preset};
use frontlab_core::verify::{verify, Subject};
use frontlab_core::{classify_regime, parse_experiment, predict_level_envelope, Error, InitialData, Regime};

/// Front propagation in weakly monostable reaction-diffusion equations.
#[derive(Parser)]
#[command(name = "frontlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a config file.
    Simulate {
        config: PathBuf,
        /// Artifacts go to `<out>/<config stem>/`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named figure preset (fig1 .. fig9, fig3a .. fig8c).
    Preset {
        name: String,
        /// Artifacts go to `<out>/<name>/`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run an invariant suite; exits with status 1 if any check fails.
    Verify {
        #[arg(value_enum)]
        subject: SubjectArg,
    },
    /// Print the spreading regime predicted for an initial-data family.
    #[command(allow_negative_numbers = true)]
    Classify {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        beta: f64,
        /// Sub-exponential rate.
        #[arg(long, default_value_t = 5.0)]
        mu: f64,
        /// Algebraic scale.
        #[arg(long, default_value_t = 100.0)]
        scale: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Also print the level-set envelope at these times.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Envelope half-width in the rate, as a fraction of r.
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SubjectArg {
    Hypothesis,
    Envelope,
    Sandwich,
    Convergence,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    SubExponential,
    Algebraic,
    Logarithmic,
    PowerTail,
}

enum Failure {
    Verification,
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::UnknownPreset { .. } | Error::Parameter(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn simulate(config: &Path, out: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", config.display())))?;
    let experiment = parse_experiment(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let stem = config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
    let dir = out.join(&stem);
    let (summary, _) = execute(&stem, &experiment, &dir)?;
    frontlab_core::output::write_plot_script(&dir)?;
    for line in summary.lines() {
        println!("{line}");
    }
    let d = &summary.diagnostics;
    println!(
        "{stem}: {} steps, {} points at the end, {} clamp events, {} growth events",
        d.steps,
        d.final_points,
        d.clamp_events,
        d.growth_events.len()
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn preset(name: &str, out: &Path) -> Result<(), Failure> {
    let report = run_preset(name, out)?;
    for line in &report.summary {
        println!("{line}");
    }
    println!("wrote {} files to {}", report.files.len(), report.dir.display());
    Ok(())
}

fn verify_subjects(subject: SubjectArg) -> Result<(), Failure> {
    let subjects = match subject {
        SubjectArg::Hypothesis => vec![Subject::Hypothesis],
        SubjectArg::Envelope => vec![Subject::Envelope],
        SubjectArg::Sandwich => vec![Subject::Sandwich],
        SubjectArg::Convergence => vec![Subject::Convergence],
        SubjectArg::All => Subject::ALL.to_vec(),
    };
    let mut ok = true;
    for s in subjects {
        let report = verify(s)?;
        println!("{report}");
        ok &= report.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

#[allow(clippy::too_many_arguments)]
fn classify(alpha: f64, family: Family, beta: f64, mu: f64, scale: f64, r: f64, times: &[f64], eps: f64) -> Result<(), Failure> {
    let data = match family {
        Family::SubExponential => InitialData::sub_exponential(mu, beta),
        Family::Algebraic => InitialData::algebraic(beta, scale),
        Family::Logarithmic => InitialData::logarithmic(beta),
        Family::PowerTail => InitialData::power_tail(beta),
    }
    .map_err(|e| Failure::Config(e.to_string()))?;
    let c = classify_regime(alpha, &data).map_err(|e| Failure::Config(e.to_string()))?;
    println!("family: {} (beta = {beta})", data.family_name());
    println!("alpha: {alpha}");
    println!("regime: {}", c.regime.kind().name());
    let law = match c.regime {
        Regime::FiniteSpeed => "x_lambda(t) ~ c t".to_string(),
        Regime::PowerAcceleration { exponent } => format!("x_lambda(t) ~ t^{exponent:.6}"),
        Regime::ExpPowerAcceleration { inner_exponent, outer_factor } => {
            format!("x_lambda(t) ~ exp({outer_factor:.6} (r (alpha+1) t)^{inner_exponent:.6})")
        }
        Regime::LogExpAcceleration { inner_exponent, outer_factor } => {
            format!("ln x_lambda(t) ~ exp({outer_factor:.6} (r (alpha+1) t)^{inner_exponent:.6})")
        }
    };
    println!("law: {law}");
    if times.is_empty() {
        return Ok(());
    }
    println!("t,ln_x_lower,ln_x_upper,x_lower,x_upper");
    for &t in times {
        let (ll, lu) = predict_log_level_envelope(alpha, r, &data, eps * r, t).map_err(|e| Failure::Config(e.to_string()))?;
        let (xl, xu) = predict_level_envelope(alpha, r, &data, eps * r, t).map_err(|e| Failure::Config(e.to_string()))?;
        println!("{t},{ll},{lu},{xl},{xu}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, out } => simulate(config, out),
        Command::Preset { name, out } => preset(name, out),
        Command::Verify { subject } => verify_subjects(*subject),
        Command::Classify {
            alpha,
            family,
            beta,
            mu,
            scale,
            r,
            times,
            eps,
        } => classify(*alpha, *family, *beta, *mu, *scale, *r, times, *eps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verification => eprintln!("verification failed"),
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
