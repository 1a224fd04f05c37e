//! Front-like initial data with closed-form logarithmic transforms.
//!
//! Every family is clamped to 1 on a left half-line and strictly decreasing
//! to the right of its clamp point, so `u0` maps the tail one-to-one onto
//! `(0, 1)` and `phi0 = -ln u0` is smooth there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialData {
    /// `min{exp(-mu x^beta), 1}`, clamp at `x = 0`.
    SubExponential { mu: f64, beta: f64 },
    /// `min{1 / (1 + scale x^beta), 1}`, clamp at `x = 0`.
    Algebraic { beta: f64, scale: f64 },
    /// `min{(ln x)^-beta, 1}`, clamp at `x = e`.
    Logarithmic { beta: f64 },
    /// Unregularized algebraic tail `min{x^-beta, 1}`, clamp at `x = 1`.
    PowerTail { beta: f64 },
}

/// `phi0 = -ln u0` and its first two derivatives at a tail point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phi0 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl InitialData {
    pub fn sub_exponential(mu: f64, beta: f64) -> Result<Self> {
        let d = InitialData::SubExponential { mu, beta };
        d.validate()?;
        Ok(d)
    }

    pub fn algebraic(beta: f64, scale: f64) -> Result<Self> {
        let d = InitialData::Algebraic { beta, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn logarithmic(beta: f64) -> Result<Self> {
        let d = InitialData::Logarithmic { beta };
        d.validate()?;
        Ok(d)
    }

    pub fn power_tail(beta: f64) -> Result<Self> {
        let d = InitialData::PowerTail { beta };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be > 0, got {v}")))
            }
        };
        match *self {
            InitialData::SubExponential { mu, beta } => {
                positive("mu", mu)?;
                positive("beta", beta)
            }
            InitialData::Algebraic { beta, scale } => {
                positive("beta", beta)?;
                positive("scale", scale)
            }
            InitialData::Logarithmic { beta } | InitialData::PowerTail { beta } => {
                positive("beta", beta)
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            InitialData::SubExponential { .. } => "sub_exponential",
            InitialData::Algebraic { .. } => "algebraic",
            InitialData::Logarithmic { .. } => "logarithmic",
            InitialData::PowerTail { .. } => "power_tail",
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            InitialData::SubExponential { beta, .. }
            | InitialData::Algebraic { beta, .. }
            | InitialData::Logarithmic { beta }
            | InitialData::PowerTail { beta } => beta,
        }
    }

    /// Rightmost point where `u0 = 1`; the strict tail is `x > clamp_point`.
    pub fn clamp_point(&self) -> f64 {
        match self {
            InitialData::SubExponential { .. } | InitialData::Algebraic { .. } => 0.0,
            InitialData::Logarithmic { .. } => std::f64::consts::E,
            InitialData::PowerTail { .. } => 1.0,
        }
    }

    pub fn u0(&self, x: f64) -> f64 {
        if x <= self.clamp_point() {
            return 1.0;
        }
        let v = match *self {
            InitialData::SubExponential { mu, beta } => (-mu * x.powf(beta)).exp(),
            InitialData::Algebraic { beta, scale } => 1.0 / (1.0 + scale * x.powf(beta)),
            InitialData::Logarithmic { beta } => x.ln().powf(-beta),
            InitialData::PowerTail { beta } => x.powf(-beta),
        };
        v.min(1.0)
    }

    /// `phi0(x) = -ln u0(x)`, total on the real line (0 on the plateau).
    ///
    /// Computed from the closed form rather than `-ln(u0)` so that it stays
    /// accurate after `u0` underflows.
    pub fn phi0_value(&self, x: f64) -> f64 {
        if x <= self.clamp_point() {
            return 0.0;
        }
        match *self {
            InitialData::SubExponential { mu, beta } => mu * x.powf(beta),
            InitialData::Algebraic { beta, scale } => (scale * x.powf(beta)).ln_1p(),
            InitialData::Logarithmic { beta } => beta * x.ln().ln(),
            InitialData::PowerTail { beta } => beta * x.ln(),
        }
    }

    /// `phi0` with its first and second derivatives on the strict tail.
    pub fn phi0(&self, x: f64) -> Result<Phi0> {
        if !(x > self.clamp_point()) || !x.is_finite() {
            return Err(Error::domain(
                "x",
                x,
                format!("strict tail ({}, inf)", self.clamp_point()),
            ));
        }
        let value = self.phi0_value(x);
        let (d1, d2) = match *self {
            InitialData::SubExponential { mu, beta } => {
                let d1 = mu * beta * x.powf(beta) / x;
                (d1, d1 * (beta - 1.0) / x)
            }
            InitialData::Algebraic { beta, scale } => {
                // With q = scale x^beta: phi0' = beta q / (x (1+q)),
                // phi0'' = beta q (beta - 1 - q) / (x (1+q))^2.
                // Factored so that nothing overflows for huge x.
                let q = scale * x.powf(beta);
                let frac = q / (1.0 + q);
                let d1 = beta * frac / x;
                (d1, d1 * ((beta - 1.0 - q) / (1.0 + q)) / x)
            }
            InitialData::Logarithmic { beta } => {
                let lx = x.ln();
                let d1 = beta / (x * lx);
                (d1, -d1 * (1.0 + lx) / lx / x)
            }
            InitialData::PowerTail { beta } => (beta / x, -beta / x / x),
        };
        Ok(Phi0 { value, d1, d2 })
    }

    /// `U0(z) = sup{x : u0(x) = z}` for `z` in `(0, 1)`.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::domain("z", z, "(0, 1)"));
        }
        let x = self.inverse_neg_log(-z.ln());
        if !x.is_finite() {
            return Err(Error::Numerical(format!(
                "U0({z}) overflows f64; use log_inverse_neg_log"
            )));
        }
        Ok(x)
    }

    /// `U0(exp(-y))` for `y > 0`; stays finite for densities that underflow.
    pub fn inverse_neg_log(&self, y: f64) -> f64 {
        match *self {
            InitialData::SubExponential { mu, beta } => (y / mu).powf(1.0 / beta),
            InitialData::Algebraic { beta, scale } => (y.exp_m1() / scale).powf(1.0 / beta),
            InitialData::Logarithmic { beta } => (y / beta).exp().exp(),
            InitialData::PowerTail { beta } => (y / beta).exp(),
        }
    }

    /// `ln U0(exp(-y))`, finite where `U0` itself overflows (log-type tails).
    pub fn log_inverse_neg_log(&self, y: f64) -> f64 {
        match *self {
            InitialData::Logarithmic { beta } => (y / beta).exp(),
            InitialData::PowerTail { beta } => y / beta,
            InitialData::Algebraic { beta, scale } => {
                // ln((e^y - 1)/scale)/beta, written to survive large y.
                let ln_em1 = if y > 30.0 { y + (-(-y).exp()).ln_1p() } else { y.exp_m1().ln() };
                (ln_em1 - scale.ln()) / beta
            }
            InitialData::SubExponential { .. } => self.inverse_neg_log(y).ln(),
        }
    }

    /// Whether `phi0'' <= 0` holds for all sufficiently large `x`.
    pub fn has_concave_tail(&self) -> bool {
        match *self {
            InitialData::SubExponential { beta, .. } => beta <= 1.0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Sampled certificate for `phi0' = o(phi0^-alpha)` and `phi0'' = o(phi0')`.
    pub genoo_holds: bool,
    /// `phi0'' <= 0` at every probe.
    pub concave_tail: bool,
    /// `phi0' (1 + phi0)^alpha` at each probe.
    pub slope_ratio: Vec<f64>,
    /// `|phi0'' / phi0'|` at each probe.
    pub curvature_ratio: Vec<f64>,
}

/// A ratio sequence decays if its final value is below half its first and below 1e-2.
fn decays(seq: &[f64]) -> bool {
    match (seq.first(), seq.last()) {
        (Some(&first), Some(&last)) => last.is_finite() && last < 0.5 * first && last < 1e-2,
        _ => false,
    }
}

/// Sampled check of the growth conditions needed for the accelerating regime.
///
/// Probes must be increasing, lie in the strict tail and span at least four
/// decades.
pub fn check_growth_conditions(
    data: &InitialData,
    alpha: f64,
    probes: &[f64],
) -> Result<GrowthReport> {
    data.validate()?;
    if probes.len() < 3 {
        return Err(Error::Input(format!(
            "need at least 3 probe points, got {}",
            probes.len()
        )));
    }
    if probes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("probe points must be strictly increasing".into()));
    }
    let (first, last) = (probes[0], probes[probes.len() - 1]);
    if !(first > 0.0) || (last / first).log10() < 4.0 - 1e-9 {
        return Err(Error::Input(format!(
            "probe points must span at least 4 decades, got [{first}, {last}]"
        )));
    }

    let mut slope_ratio = Vec::with_capacity(probes.len());
    let mut curvature_ratio = Vec::with_capacity(probes.len());
    let mut concave = true;
    for &x in probes {
        let p = data.phi0(x)?;
        slope_ratio.push(p.d1 * (1.0 + p.value).powf(alpha));
        curvature_ratio.push((p.d2 / p.d1).abs());
        concave &= p.d2 <= 0.0;
    }
    Ok(GrowthReport {
        genoo_holds: decays(&slope_ratio) && decays(&curvature_ratio),
        concave_tail: concave,
        slope_ratio,
        curvature_ratio,
    })
}
