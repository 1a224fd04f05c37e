//! Closed-form comparison functions.
//!
//! The backbone is the explicit solution of the spatially decoupled ODE
//! `w_t = rho w / (1 - ln w)^alpha`, `w(0, x) = u0(x)`:
//!
//! ```text
//! w(t, x) = exp{ 1 - [ (1 + phi0(x))^(alpha+1) - rho (alpha+1) t ]^(1/(alpha+1)) }
//! ```
//!
//! valid right of `x0(t)`, where `w = 1`. Super- and subsolutions of the PDE
//! are built from `w` by capping at 1, shifting in time and space, or
//! composing with `g(y) = y (1 - M y)`. Shifts and amplitudes that exist only
//! abstractly are supplied by the caller or found by the `calibrate_*`
//! helpers, which double them until the differential inequality holds on a
//! probe grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::nonlinearity::{ReactionFamily, ReactionParams};

/// Doubling rounds attempted by the calibration helpers.
const MAX_DOUBLINGS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeProfile {
    pub rho: f64,
    pub alpha: f64,
    pub data: InitialData,
}

impl OdeProfile {
    pub fn new(rho: f64, alpha: f64, data: InitialData) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be > 0, got {rho}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be > 0, got {alpha}")));
        }
        data.validate()?;
        Ok(OdeProfile { rho, alpha, data })
    }

    /// `rho = r`: the sharp envelope.
    pub fn exact(params: &ReactionParams, data: InitialData) -> Result<Self> {
        Self::new(params.r, params.alpha, data)
    }

    /// `rho = r + eps/2`, the rate used by the upper envelope.
    pub fn upper(params: &ReactionParams, eps: f64, data: InitialData) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Parameter(format!("eps must be > 0, got {eps}")));
        }
        Self::new(params.r + 0.5 * eps, params.alpha, data)
    }

    /// A rate strictly inside `(max{r - eps/2, 3r/4}, r)`, the midpoint.
    pub fn lower(params: &ReactionParams, eps: f64, data: InitialData) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Parameter(format!("eps must be > 0, got {eps}")));
        }
        let r = params.r;
        let floor = (r - 0.5 * eps).max(0.75 * r);
        Self::new(0.5 * (floor + r), params.alpha, data)
    }

    #[inline]
    fn power(&self) -> f64 {
        self.alpha + 1.0
    }

    /// `(1 + phi0(x))^(alpha+1) - rho (alpha+1) t`.
    #[inline]
    pub fn bracket(&self, t: f64, x: f64) -> f64 {
        (1.0 + self.data.phi0_value(x)).powf(self.power()) - self.rho * self.power() * t
    }

    /// `bracket >= 1` up to rounding, snapped to at least 1.
    fn checked_bracket(&self, t: f64, x: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain("t", t, "[0, inf)"));
        }
        let b = self.bracket(t, x);
        let scale = (1.0 + self.data.phi0_value(x)).powf(self.power());
        if b < 1.0 - 1e-12 * scale {
            let x0 = self.x0(t).unwrap_or(f64::NAN);
            return Err(Error::BeyondEnvelope { t, x, x0 });
        }
        Ok(b.max(1.0))
    }

    /// `w(t, x)`, defined for `x >= x0(t)`.
    pub fn w(&self, t: f64, x: f64) -> Result<f64> {
        let b = self.checked_bracket(t, x)?;
        Ok((1.0 - b.powf(1.0 / self.power())).exp())
    }

    /// `1 - ln w(t, x)`, which stays accurate after `w` underflows.
    pub fn one_minus_ln_w(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.checked_bracket(t, x)?.powf(1.0 / self.power()))
    }

    /// `w_t = rho w / (1 - ln w)^alpha`.
    pub fn w_t(&self, t: f64, x: f64) -> Result<f64> {
        let l = self.one_minus_ln_w(t, x)?;
        Ok(self.rho * (1.0 - l).exp() / l.powf(self.alpha))
    }

    /// Edge of the plateau: `sup{x : u0(x) = exp(1 - (rho (alpha+1) t + 1)^(1/(alpha+1)))}`.
    pub fn x0(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::domain("t", t, "[0, inf)"));
        }
        let y = (self.rho * self.power() * t + 1.0).powf(1.0 / self.power()) - 1.0;
        if y <= 0.0 {
            return Ok(self.data.clamp_point());
        }
        Ok(self.data.inverse_neg_log(y))
    }

    /// `(w_x, w_xx)` on the strict tail right of `x0(t)`.
    pub fn derivatives(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let l = self.one_minus_ln_w(t, x)?;
        let p = self.data.phi0(x)?;
        let a = self.alpha;
        let w = (1.0 - l).exp();
        let base = w / l.powf(a);
        let grow = (1.0 + p.value).powf(a);
        let slope = p.d1 * grow;
        let w_x = -base * slope;
        let bracket = l.powf(-a) + a * l.powf(-(a + 1.0)) - a * (1.0 + p.value).powf(-(a + 1.0));
        let w_xx = base * (slope * slope * bracket - p.d2 * grow);
        Ok((w_x, w_xx))
    }

    /// `w_xx (1 - ln w)^alpha / w`: the diffusion term relative to the ODE rate.
    pub fn relative_curvature(&self, t: f64, x: f64) -> Result<f64> {
        let l = self.one_minus_ln_w(t, x)?;
        let p = self.data.phi0(x)?;
        let a = self.alpha;
        let grow = (1.0 + p.value).powf(a);
        let slope = p.d1 * grow;
        let bracket = l.powf(-a) + a * l.powf(-(a + 1.0)) - a * (1.0 + p.value).powf(-(a + 1.0));
        Ok(slope * slope * bracket - p.d2 * grow)
    }
}

/// Smallest speed for which `M exp(-mu z^p)`, `p = 1/(alpha+1)`, is a
/// traveling supersolution for large `z`: `2^alpha r (alpha+1) / mu^(alpha+1)`.
pub fn min_wave_speed(params: &ReactionParams, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Parameter(format!("mu must be > 0, got {mu}")));
    }
    let a = params.alpha;
    Ok(2f64.powf(a) * params.r * (a + 1.0) / mu.powf(a + 1.0))
}

/// Traveling profile `M exp(-mu z^p)` on `z >= z0 = (ln M / mu)^(1/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TravelingBound {
    pub m: f64,
    pub mu: f64,
    pub p: f64,
    pub z0: f64,
    pub c: f64,
}

impl TravelingBound {
    pub fn new(alpha: f64, m: f64, mu: f64, c: f64) -> Result<Self> {
        if !(m > std::f64::consts::E) {
            return Err(Error::Parameter(format!("M must exceed e, got {m}")));
        }
        if !(mu > 0.0) || !(c > 0.0) || !(alpha > 0.0) {
            return Err(Error::Parameter("mu, c and alpha must be > 0".into()));
        }
        let p = 1.0 / (alpha + 1.0);
        Ok(TravelingBound {
            m,
            mu,
            p,
            z0: (m.ln() / mu).powf(1.0 / p),
            c,
        })
    }

    pub fn value(&self, z: f64) -> f64 {
        if z <= self.z0 {
            1.0
        } else {
            self.m * (-self.mu * z.powf(self.p)).exp()
        }
    }

    /// `w'' + c w' + f(w)` at `z > z0`.
    pub fn residual(&self, reaction: &ReactionFamily, z: f64) -> f64 {
        let (mu, p) = (self.mu, self.p);
        let w = self.value(z);
        let d1 = -mu * p * z.powf(p - 1.0) * w;
        let d2 = (mu * p * (1.0 - p) * z.powf(p - 2.0) + (mu * p).powi(2) * z.powf(2.0 * (p - 1.0))) * w;
        d2 + self.c * d1 + reaction.rate(w)
    }

    /// Whether the residual is nonpositive at every probe right of `z0`.
    pub fn holds_on(&self, reaction: &ReactionFamily, probes: &[f64]) -> bool {
        probes
            .iter()
            .filter(|&&z| z > self.z0)
            .all(|&z| self.residual(reaction, z) <= 0.0)
    }
}

/// Start from `1.25 c0` and double `c` until the traveling inequality holds
/// on `probes`.
pub fn calibrate_traveling_speed(
    reaction: &ReactionFamily,
    m: f64,
    mu: f64,
    probes: &[f64],
) -> Result<TravelingBound> {
    let c0 = min_wave_speed(&reaction.params, mu)?;
    let mut bound = TravelingBound::new(reaction.params.alpha, m, mu, 1.25 * c0)?;
    for _ in 0..MAX_DOUBLINGS {
        if bound.holds_on(reaction, probes) {
            return Ok(bound);
        }
        bound.c *= 2.0;
    }
    Err(Error::Numerical(format!(
        "traveling supersolution inequality still fails at c = {}",
        bound.c
    )))
}

/// `1` left of `x0(t + shift)`, `w(t + shift, x)` right of it.
pub fn supersolution_m(profile: &OdeProfile, shift: f64, t: f64, x: f64) -> f64 {
    let b = profile.bracket(t + shift, x);
    if b <= 1.0 {
        1.0
    } else {
        (1.0 - b.powf(1.0 / profile.power())).exp()
    }
}

/// `1` left of `x0(t + shift) + t`, `w(t + shift, x - t)` right of it.
pub fn shifted_supersolution_m(profile: &OdeProfile, shift: f64, t: f64, x: f64) -> f64 {
    supersolution_m(profile, shift, t, x - t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsolutionParams {
    /// Plateau parameter: the plateau height is `1 / (4M)`.
    pub m: f64,
    /// `inf u0` left of the tail; 1 for the clamped families.
    pub zeta: f64,
}

impl SubsolutionParams {
    /// Requires `M >= max{1/(2 zeta), 1/(4 s0)}`.
    pub fn new(m: f64, zeta: f64, s0: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::Parameter(format!("zeta must lie in (0, 1], got {zeta}")));
        }
        let m0 = Self::threshold(zeta, s0);
        if !(m >= m0) {
            return Err(Error::Parameter(format!(
                "M = {m} is below the threshold max{{1/(2 zeta), 1/(4 s0)}} = {m0}"
            )));
        }
        Ok(SubsolutionParams { m, zeta })
    }

    pub fn threshold(zeta: f64, s0: f64) -> f64 {
        (0.5 / zeta).max(0.25 / s0)
    }

    pub fn plateau(&self) -> f64 {
        0.25 / self.m
    }

    pub fn g(&self, y: f64) -> f64 {
        y * (1.0 - self.m * y)
    }

    /// Bracket value at which `w = 1/(2M)`.
    fn plateau_bracket(&self, profile: &OdeProfile) -> f64 {
        (1.0 + (2.0 * self.m).ln()).powf(profile.power())
    }

    /// `x_M(t)`, where `w(t, x_M) = 1/(2M)`.
    pub fn x_m(&self, profile: &OdeProfile, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain("t", t, "[0, inf)"));
        }
        let inner = self.plateau_bracket(profile) + profile.rho * profile.power() * t;
        let y = inner.powf(1.0 / profile.power()) - 1.0;
        if y <= 0.0 {
            return Ok(profile.data.clamp_point());
        }
        Ok(profile.data.inverse_neg_log(y))
    }
}

/// `1/(4M)` up to `x_M(t)`, `g(w(t, x))` beyond.
pub fn subsolution_v(params: &SubsolutionParams, profile: &OdeProfile, t: f64, x: f64) -> f64 {
    let b = profile.bracket(t, x);
    if b <= params.plateau_bracket(profile) {
        params.plateau()
    } else {
        params.g((1.0 - b.powf(1.0 / profile.power())).exp())
    }
}

/// Probe points where a comparison inequality is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl ProbeGrid {
    /// `nt` uniform times in `[0, t_end]` and `nx` log-spaced offsets past the
    /// clamp point out to `x_max`.
    pub fn new(data: &InitialData, t_end: f64, x_max: f64, nt: usize, nx: usize) -> Self {
        let clamp = data.clamp_point();
        let span = (x_max - clamp).max(1e-6);
        let offsets = crate::nonlinearity::log_grid(1e-4 * span.min(1.0), span, nx.max(2));
        let times = if nt <= 1 {
            vec![t_end]
        } else {
            (0..nt).map(|i| t_end * i as f64 / (nt - 1) as f64).collect()
        };
        ProbeGrid {
            times,
            positions: offsets.into_iter().map(|o| clamp + o).collect(),
        }
    }
}

/// Worst (most negative) relative residual of `m_t - m_xx - f(m)` over the
/// probe points where `m < 1`. Normalized by the ODE rate `w / (1 - ln w)^alpha`.
pub fn supersolution_defect(
    reaction: &ReactionFamily,
    profile: &OdeProfile,
    shift: f64,
    probes: &ProbeGrid,
) -> f64 {
    let mut worst = f64::INFINITY;
    for &t in &probes.times {
        let s = t + shift;
        for &x in &probes.positions {
            if profile.bracket(s, x) <= 1.0 + 1e-9 {
                continue;
            }
            let (Ok(l), Ok(curv)) = (profile.one_minus_ln_w(s, x), profile.relative_curvature(s, x))
            else {
                continue;
            };
            let w = (1.0 - l).exp();
            if w <= 0.0 {
                continue;
            }
            let scale = w / l.powf(profile.alpha);
            // (rho * scale - w_xx - f(w)) / scale
            let rel = profile.rho - curv - reaction.rate(w) / scale;
            worst = worst.min(rel);
        }
    }
    worst
}

/// Smallest shift of the form `0, 1, 2, 4, ...` for which the capped envelope
/// is a supersolution on the probe grid.
pub fn calibrate_supersolution_shift(
    reaction: &ReactionFamily,
    profile: &OdeProfile,
    probes: &ProbeGrid,
) -> Result<f64> {
    let mut shift = 0.0;
    for _ in 0..MAX_DOUBLINGS {
        if supersolution_defect(reaction, profile, shift, probes) >= -1e-12 {
            return Ok(shift);
        }
        shift = if shift == 0.0 { 1.0 } else { 2.0 * shift };
    }
    Err(Error::Numerical(format!(
        "no supersolution shift up to {shift} makes the envelope a supersolution"
    )))
}

/// Largest relative residual of `v_t - v_xx - f(v)` right of `x_M(t)`,
/// normalized by `w / (1 - ln w)^alpha`. Nonpositive means subsolution.
pub fn subsolution_excess(
    reaction: &ReactionFamily,
    params: &SubsolutionParams,
    profile: &OdeProfile,
    probes: &ProbeGrid,
) -> f64 {
    let threshold = params.plateau_bracket(profile);
    let m = params.m;
    let mut worst = f64::NEG_INFINITY;
    for &t in &probes.times {
        for &x in &probes.positions {
            if profile.bracket(t, x) <= threshold || x <= profile.data.clamp_point() {
                continue;
            }
            let (Ok(l), Ok((w_x, w_xx))) = (profile.one_minus_ln_w(t, x), profile.derivatives(t, x))
            else {
                continue;
            };
            let w = (1.0 - l).exp();
            if w <= 0.0 {
                continue;
            }
            let scale = w / l.powf(profile.alpha);
            let damp = 1.0 - 2.0 * m * w;
            let v_t = profile.rho * scale * damp;
            let v_xx = damp * w_xx - 2.0 * m * w_x * w_x;
            let rel = (v_t - v_xx - reaction.rate(params.g(w))) / scale;
            worst = worst.max(rel);
        }
    }
    worst
}

/// Double `M` from `max{10, 1/(4 s0), 1/(2 zeta)}` until `v` is a subsolution
/// on the probe grid.
pub fn calibrate_subsolution(
    reaction: &ReactionFamily,
    profile: &OdeProfile,
    zeta: f64,
    probes: &ProbeGrid,
) -> Result<SubsolutionParams> {
    let s0 = reaction.params.s0;
    let mut m = SubsolutionParams::threshold(zeta, s0).max(10.0);
    for _ in 0..MAX_DOUBLINGS {
        let params = SubsolutionParams::new(m, zeta, s0)?;
        if subsolution_excess(reaction, &params, profile, probes) <= 1e-12 {
            return Ok(params);
        }
        m *= 2.0;
    }
    Err(Error::Numerical(format!(
        "no plateau parameter up to M = {m} makes g(w) a subsolution"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    FiniteSpeed,
    PowerAcceleration,
    ExpPowerAcceleration,
    LogExpAcceleration,
}

impl RegimeKind {
    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::FiniteSpeed => "finite_speed",
            RegimeKind::PowerAcceleration => "power_acceleration",
            RegimeKind::ExpPowerAcceleration => "exp_power_acceleration",
            RegimeKind::LogExpAcceleration => "log_exp_acceleration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// `x_lambda(t) ~ t`.
    FiniteSpeed,
    /// `x_lambda(t) ~ t^exponent`, `exponent = 1/(beta (alpha+1))`.
    PowerAcceleration { exponent: f64 },
    /// `x_lambda(t) ~ exp(outer_factor (r (alpha+1) t)^inner_exponent)`.
    ExpPowerAcceleration { inner_exponent: f64, outer_factor: f64 },
    /// `ln x_lambda(t) ~ exp(outer_factor (r (alpha+1) t)^inner_exponent)`.
    LogExpAcceleration { inner_exponent: f64, outer_factor: f64 },
}

impl Regime {
    pub fn kind(&self) -> RegimeKind {
        match self {
            Regime::FiniteSpeed => RegimeKind::FiniteSpeed,
            Regime::PowerAcceleration { .. } => RegimeKind::PowerAcceleration,
            Regime::ExpPowerAcceleration { .. } => RegimeKind::ExpPowerAcceleration,
            Regime::LogExpAcceleration { .. } => RegimeKind::LogExpAcceleration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    pub alpha: f64,
    pub data: InitialData,
}

/// Sub-exponential data spread at finite speed iff `beta >= 1/(alpha+1)`.
pub fn classify_regime(alpha: f64, data: &InitialData) -> Result<RegimeClassification> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be > 0, got {alpha}")));
    }
    data.validate()?;
    let inner = 1.0 / (alpha + 1.0);
    let beta = data.beta();
    let regime = match data {
        InitialData::SubExponential { .. } => {
            // beta >= 1/(alpha+1), tolerant to decimal round-off at the boundary.
            if beta * (alpha + 1.0) >= 1.0 - 1e-12 {
                Regime::FiniteSpeed
            } else {
                Regime::PowerAcceleration {
                    exponent: 1.0 / (beta * (alpha + 1.0)),
                }
            }
        }
        InitialData::Algebraic { .. } | InitialData::PowerTail { .. } => {
            Regime::ExpPowerAcceleration {
                inner_exponent: inner,
                outer_factor: 1.0 / beta,
            }
        }
        InitialData::Logarithmic { .. } => Regime::LogExpAcceleration {
            inner_exponent: inner,
            outer_factor: 1.0 / beta,
        },
    };
    Ok(RegimeClassification {
        regime,
        alpha,
        data: *data,
    })
}

/// The two exponents `[(r -+ eps)(alpha+1) t]^(1/(alpha+1))`, i.e. the
/// densities `exp(-y)` bracketing the level set.
fn envelope_exponents(alpha: f64, r: f64, data: &InitialData, eps: f64, t: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) || !(r > 0.0) {
        return Err(Error::Parameter("alpha and r must be > 0".into()));
    }
    if !(eps >= 0.0 && eps < r) {
        return Err(Error::Parameter(format!("eps must lie in [0, r), got {eps}")));
    }
    if eps == 0.0 && !data.has_concave_tail() {
        return Err(Error::Parameter(
            "the eps = 0 envelope needs phi0'' <= 0 for large x".into(),
        ));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("t", t, "(0, inf): density must lie in the tail"));
    }
    let p = alpha + 1.0;
    let y_slow = ((r - eps) * p * t).powf(1.0 / p);
    let y_fast = ((r + eps) * p * t).powf(1.0 / p);
    if !(y_slow > 0.0) {
        return Err(Error::domain("t", t, "large enough for the density to lie in the tail"));
    }
    Ok((y_slow, y_fast))
}

/// `(x_lower, x_upper) = (U0(e^{-y_slow}), U0(e^{-y_fast}))` with
/// `y = [(r -+ eps)(alpha+1) t]^(1/(alpha+1))`; lower-order terms and the
/// multiplicative constants are dropped.
pub fn predict_level_envelope(
    alpha: f64,
    r: f64,
    data: &InitialData,
    eps: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let (ys, yf) = envelope_exponents(alpha, r, data, eps, t)?;
    Ok((data.inverse_neg_log(ys), data.inverse_neg_log(yf)))
}

/// Same envelope in log coordinates, `(ln x_lower, ln x_upper)`.
pub fn predict_log_level_envelope(
    alpha: f64,
    r: f64,
    data: &InitialData,
    eps: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let (ys, yf) = envelope_exponents(alpha, r, data, eps, t)?;
    Ok((data.log_inverse_neg_log(ys), data.log_inverse_neg_log(yf)))
}
