//! Level-set positions and propagation-rate fits.

use serde::Serialize;

use crate::analytic::RegimeKind;
use crate::error::{Error, Result};

/// Fewest samples a fit window may contain.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Offsets scanned on `[0, min x)` before refinement.
pub const OFFSET_SCAN_POINTS: usize = 51;

/// A more complex model must beat the current choice by this factor.
pub const SELECTION_MARGIN: f64 = 0.9;

/// Rightmost `lambda`-crossing, linearly interpolated: `sup {x : u(x) >= lambda}`.
pub fn extract_level_position(grid: &[f64], values: &[f64], lambda: f64) -> Result<f64> {
    if grid.len() != values.len() {
        return Err(Error::Input(format!(
            "grid has {} points but values has {}",
            grid.len(),
            values.len()
        )));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain("lambda", lambda, "(0, 1)"));
    }
    let Some(i) = values.iter().rposition(|&v| v >= lambda) else {
        return Err(Error::BelowLevel { lambda });
    };
    if i + 1 == values.len() {
        return Err(Error::FrontExitedDomain { lambda });
    }
    let (vi, vn) = (values[i], values[i + 1]);
    Ok(grid[i] + (grid[i + 1] - grid[i]) * (vi - lambda) / (vi - vn))
}

/// Samples `(t, x_lambda(t))` with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetTrace {
    pub lambda: f64,
    samples: Vec<(f64, f64)>,
}

impl LevelSetTrace {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::domain("lambda", lambda, "(0, 1)"));
        }
        Ok(LevelSetTrace {
            lambda,
            samples: Vec::new(),
        })
    }

    pub fn from_samples(lambda: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        let mut trace = Self::new(lambda)?;
        for (t, x) in samples {
            trace.push(t, x)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, t: f64, x: f64) -> Result<()> {
        if !t.is_finite() || !x.is_finite() {
            return Err(Error::Input(format!("non-finite trace sample ({t}, {x})")));
        }
        if let Some(&(last, _)) = self.samples.last() {
            if t <= last {
                return Err(Error::Input(format!(
                    "trace times must increase: {t} follows {last}"
                )));
            }
        }
        self.samples.push((t, x));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Position at the sample nearest to `t`.
    pub fn position_near(&self, t: f64) -> Option<f64> {
        self.samples
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|s| s.1)
    }

    fn select(&self, window: FitWindow) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        let (first, last) = match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => return Err(Error::Input("empty trace".into())),
        };
        let (lo, hi) = match window {
            FitWindow::LastHalf => (first + 0.5 * (last - first), last),
            FitWindow::Range { t_start, t_end } => (t_start, t_end),
        };
        let slack = 1e-9 * (1.0 + hi.abs());
        let (ts, xs): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|(t, _)| *t >= lo - slack && *t <= hi + slack)
            .copied()
            .unzip();
        if ts.len() < MIN_FIT_SAMPLES {
            return Err(Error::Input(format!(
                "fit window [{lo}, {hi}] holds {} samples, need at least {MIN_FIT_SAMPLES}",
                ts.len()
            )));
        }
        Ok((ts[0], ts[ts.len() - 1], ts, xs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWindow {
    /// Samples with `t` in the second half of the trace's time span.
    #[default]
    LastHalf,
    Range { t_start: f64, t_end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum OffsetMode {
    Fixed(f64),
    #[default]
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateModel {
    /// `x = a t + b`.
    Linear { a: f64, b: f64 },
    /// `x = c t^p + b`.
    Power { c: f64, p: f64, b: f64 },
    /// `x = c exp(slope s) + b` with `s = (rate t)^inner_exponent`,
    /// `rate = r (alpha+1)`, `inner_exponent = 1/(alpha+1)`.
    ExpPower {
        c: f64,
        slope: f64,
        inner_exponent: f64,
        rate: f64,
        b: f64,
    },
}

impl RateModel {
    pub fn name(&self) -> &'static str {
        match self {
            RateModel::Linear { .. } => "linear",
            RateModel::Power { .. } => "power",
            RateModel::ExpPower { .. } => "exp_power",
        }
    }

    /// Slope, exponent or log-slope, depending on the model.
    pub fn headline(&self) -> f64 {
        match *self {
            RateModel::Linear { a, .. } => a,
            RateModel::Power { p, .. } => p,
            RateModel::ExpPower { slope, .. } => slope,
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match *self {
            RateModel::Linear { a, b } => a * t + b,
            RateModel::Power { c, p, b } => c * t.powf(p) + b,
            RateModel::ExpPower {
                c,
                slope,
                inner_exponent,
                rate,
                b,
            } => c * (slope * (rate * t).powf(inner_exponent)).exp() + b,
        }
    }

    pub fn regime(&self) -> RegimeKind {
        match self {
            RateModel::Linear { .. } => RegimeKind::FiniteSpeed,
            RateModel::Power { .. } => RegimeKind::PowerAcceleration,
            RateModel::ExpPower { .. } => RegimeKind::ExpPowerAcceleration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub model: RateModel,
    pub window: (f64, f64),
    pub samples: usize,
    /// RMS of the regression in its own (possibly log) coordinates.
    pub residual: f64,
    pub r_squared: f64,
    /// RMS of `x - model(t)`, comparable across models.
    pub rms_x: f64,
}

struct Ols {
    slope: f64,
    intercept: f64,
    rms: f64,
    r_squared: f64,
}

fn ols(u: &[f64], y: &[f64]) -> Result<Ols> {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut suu, mut suy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(y) {
        suu += (a - mu) * (a - mu);
        suy += (a - mu) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(suu > 0.0) {
        return Err(Error::Input("regressor is constant over the fit window".into()));
    }
    let slope = suy / suu;
    let intercept = my - slope * mu;
    let ss_res: f64 = u
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let e = b - (slope * a + intercept);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).min(1.0)
    } else {
        1.0
    };
    Ok(Ols {
        slope,
        intercept,
        rms: (ss_res / n).sqrt(),
        r_squared,
    })
}

fn rms_x(model: &RateModel, ts: &[f64], xs: &[f64]) -> f64 {
    let ss: f64 = ts
        .iter()
        .zip(xs)
        .map(|(&t, &x)| {
            let e = x - model.evaluate(t);
            e * e
        })
        .sum();
    (ss / ts.len() as f64).sqrt()
}

pub fn fit_linear(trace: &LevelSetTrace, window: FitWindow) -> Result<FitResult> {
    let (t0, t1, ts, xs) = trace.select(window)?;
    let fit = ols(&ts, &xs)?;
    let model = RateModel::Linear {
        a: fit.slope,
        b: fit.intercept,
    };
    Ok(FitResult {
        model,
        window: (t0, t1),
        samples: ts.len(),
        residual: fit.rms,
        r_squared: fit.r_squared,
        rms_x: fit.rms,
    })
}

/// Regress `ln(x - b)` on a transformed time `u`.
fn log_regression(u: &[f64], xs: &[f64], b: f64) -> Result<Ols> {
    let min_x = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_x - b > 0.0) {
        return Err(Error::Offset { offset: b, min_x });
    }
    let y: Vec<f64> = xs.iter().map(|&x| (x - b).ln()).collect();
    ols(u, &y)
}

/// Best offset for the log regression, by grid scan plus golden-section
/// refinement around the best grid point.
fn best_offset(u: &[f64], xs: &[f64]) -> Result<f64> {
    let min_x = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_x > 0.0) {
        return Err(Error::Offset { offset: 0.0, min_x });
    }
    let cost = |b: f64| log_regression(u, xs, b).map_or(f64::INFINITY, |f| f.rms);
    let step = min_x / OFFSET_SCAN_POINTS as f64;
    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..OFFSET_SCAN_POINTS {
        let c = cost(k as f64 * step);
        if c < best {
            best = c;
            best_k = k;
        }
    }
    let mut lo = (best_k as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best_k as f64 + 1.0) * step).min(min_x * (1.0 - 1e-9));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut p = hi - g * (hi - lo);
    let mut q = lo + g * (hi - lo);
    let (mut cp, mut cq) = (cost(p), cost(q));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * min_x {
            break;
        }
        if cp <= cq {
            hi = q;
            q = p;
            cq = cp;
            p = hi - g * (hi - lo);
            cp = cost(p);
        } else {
            lo = p;
            p = q;
            cp = cq;
            q = lo + g * (hi - lo);
            cq = cost(q);
        }
    }
    let refined = 0.5 * (lo + hi);
    let candidate = best_k as f64 * step;
    Ok(if cost(refined) < cost(candidate) {
        refined
    } else {
        candidate
    })
}

fn resolve_offset(mode: OffsetMode, u: &[f64], xs: &[f64]) -> Result<f64> {
    match mode {
        OffsetMode::Fixed(b) => Ok(b),
        OffsetMode::Fitted => best_offset(u, xs),
    }
}

/// `x = c t^p + b` via `ln(x - b)` against `ln t`.
pub fn fit_power(trace: &LevelSetTrace, window: FitWindow, offset: OffsetMode) -> Result<FitResult> {
    let (t0, t1, ts, xs) = trace.select(window)?;
    if !(t0 > 0.0) {
        return Err(Error::Input(format!(
            "power fit needs positive times, window starts at {t0}"
        )));
    }
    let u: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let b = resolve_offset(offset, &u, &xs)?;
    let fit = log_regression(&u, &xs, b)?;
    let model = RateModel::Power {
        c: fit.intercept.exp(),
        p: fit.slope,
        b,
    };
    Ok(FitResult {
        model,
        window: (t0, t1),
        samples: ts.len(),
        residual: fit.rms,
        r_squared: fit.r_squared,
        rms_x: rms_x(&model, &ts, &xs),
    })
}

/// `x = c exp(slope (r (alpha+1) t)^(1/(alpha+1))) + b`; the slope estimates `1/beta`.
pub fn fit_exp_power(
    trace: &LevelSetTrace,
    window: FitWindow,
    alpha: f64,
    r: f64,
    offset: OffsetMode,
) -> Result<FitResult> {
    if !(alpha > 0.0) || !(r > 0.0) {
        return Err(Error::Parameter("alpha and r must be > 0".into()));
    }
    let (t0, t1, ts, xs) = trace.select(window)?;
    if t0 < 0.0 {
        return Err(Error::Input(format!(
            "exp-power fit needs nonnegative times, window starts at {t0}"
        )));
    }
    let rate = r * (alpha + 1.0);
    let inner = 1.0 / (alpha + 1.0);
    let u: Vec<f64> = ts.iter().map(|&t| (rate * t).powf(inner)).collect();
    let b = resolve_offset(offset, &u, &xs)?;
    let fit = log_regression(&u, &xs, b)?;
    let model = RateModel::ExpPower {
        c: fit.intercept.exp(),
        slope: fit.slope,
        inner_exponent: inner,
        rate,
        b,
    };
    Ok(FitResult {
        model,
        window: (t0, t1),
        samples: ts.len(),
        residual: fit.rms,
        r_squared: fit.r_squared,
        rms_x: rms_x(&model, &ts, &xs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSelection {
    pub best: FitResult,
    pub regime: RegimeKind,
    /// Every fit that succeeded, simplest first.
    pub candidates: Vec<FitResult>,
}

/// Fit all three laws with fitted offsets and keep the simplest one that no
/// more complex law beats by more than the selection margin in x-space RMS.
pub fn select_model(trace: &LevelSetTrace, alpha: f64, r: f64, window: FitWindow) -> Result<ModelSelection> {
    let attempts = [
        fit_linear(trace, window),
        fit_power(trace, window, OffsetMode::Fitted),
        fit_exp_power(trace, window, alpha, r, OffsetMode::Fitted),
    ];
    let mut errors = Vec::new();
    let mut candidates = Vec::new();
    for a in attempts {
        match a {
            Ok(fit) if fit.rms_x.is_finite() => candidates.push(fit),
            Ok(fit) => errors.push(format!("{}: non-finite residual", fit.model.name())),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let mut best: Option<FitResult> = None;
    for fit in &candidates {
        best = match best {
            None => Some(*fit),
            Some(cur) if fit.rms_x < SELECTION_MARGIN * cur.rms_x => Some(*fit),
            keep => keep,
        };
    }
    let best = best.ok_or_else(|| Error::Analysis(format!("every fit failed: {}", errors.join("; "))))?;
    Ok(ModelSelection {
        regime: best.model.regime(),
        best,
        candidates,
    })
}
