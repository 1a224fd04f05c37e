//! Shared fixtures for the kernel benchmarks.

use frontlab_core::{InitialData, LevelSetTrace, ReactionFamily, ReactionParams, SimState};

pub fn weak_reaction() -> ReactionFamily {
    ReactionFamily::weakly_monostable(ReactionParams::with_alpha(0.4).expect("valid alpha"))
}

pub fn front_data() -> InitialData {
    InitialData::algebraic(1.0, 100.0).expect("valid data")
}

/// Initial state on `[-10, x_right]` with spacing `dx`.
pub fn front_state(x_right: f64, dx: f64) -> SimState {
    SimState::sample(&front_data(), -10.0, x_right, dx).expect("valid grid")
}

/// Diagonally dominant tridiagonal system of size `n`.
pub fn tridiagonal_system(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let lower = vec![-0.4; n - 1];
    let upper = vec![-0.4; n - 1];
    let diag = vec![1.8; n];
    let rhs = (0..n).map(|i| (i as f64 * 0.01).sin()).collect();
    (lower, diag, upper, rhs)
}

/// Trace sampled from a power law with an offset.
pub fn power_trace(n: usize) -> LevelSetTrace {
    let samples = (0..n)
        .map(|i| {
            let t = 40.0 * i as f64 / (n - 1) as f64;
            (t, 0.0013 * t.powf(1.0 / 0.28) + 40.0)
        })
        .collect();
    LevelSetTrace::from_samples(0.5, samples).expect("valid trace")
}
