//! Front propagation for `u_t = u_xx + f(u)` with a weakly monostable
//! reaction `f(s) ~ r s / |ln s|^alpha` near zero.
//!
//! - [`nonlinearity`]: reaction families and their structural bounds.
//! - [`initial_data`]: front-like data, `phi0 = -ln u0` and its inverse.
//! - [`analytic`]: ODE envelope, super/subsolutions, regime classification.
//! - [`solver`]: IMEX finite-difference integrator on a growing domain.
//! - [`measurement`]: level-set extraction and rate-law fits.
//! - [`config`], [`presets`], [`verify`], [`output`]: experiment plumbing.

pub mod analytic;
pub mod config;
pub mod error;
pub mod initial_data;
pub mod measurement;
pub mod nonlinearity;
pub mod output;
pub mod presets;
pub mod solver;
pub mod tridiag;
pub mod verify;

pub use analytic::{classify_regime, predict_level_envelope, OdeProfile, Regime, RegimeKind};
pub use config::{parse_config, parse_experiment, to_config_text, ExperimentConfig};
pub use error::{Error, Result};
pub use initial_data::InitialData;
pub use measurement::{extract_level_position, select_model, FitResult, FitWindow, LevelSetTrace, OffsetMode, RateModel};
pub use nonlinearity::{ReactionFamily, ReactionKind, ReactionParams};
pub use solver::{run, GrowthPolicy, RunOutput, SimState, SimulationConfig};
