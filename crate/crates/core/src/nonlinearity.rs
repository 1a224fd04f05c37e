//! Reaction terms.
//!
//! The weakly monostable family
//!
//! ```text
//! f(s) = r s (1 - s) / (1 + |ln s|)^alpha
//! ```
//!
//! sits between the Fisher-KPP term `r s (1 - s)` and the degenerate Allee
//! term `r s^(alpha+1) (1 - s)` near `s = 0`. Besides evaluation, this module
//! checks the two-sided bound
//!
//! ```text
//! r s (1 - K s) / (1 + |ln s|)^alpha  <=  f(s)  <=  r s / (1 + |ln s|)^alpha
//! ```
//!
//! on sampled grids (the lower bound only for `s <= s0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this density the weakly monostable and Allee terms are returned as 0.
pub const UNDERFLOW_GUARD: f64 = 1e-300;

/// Relative slack used when comparing `f` against its bounds, so that an
/// identity such as `f = bound * (1 - s)` is not reported as violated because
/// of the last bit of rounding.
pub const BOUND_REL_SLACK: f64 = 8.0 * f64::EPSILON;

/// Parameters of the weakly monostable nonlinearity and its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionParams {
    pub r: f64,
    pub alpha: f64,
    /// Lower-bound correction coefficient `K`.
    pub k: f64,
    /// Upper end `s0` of the interval where the lower bound is required.
    pub s0: f64,
}

impl ReactionParams {
    pub fn new(r: f64, alpha: f64, k: f64, s0: f64) -> Result<Self> {
        let p = ReactionParams { r, alpha, k, s0 };
        p.validate()?;
        Ok(p)
    }

    /// `r = 1, K = 1, s0 = 1`, the simulation defaults.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(1.0, alpha, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Parameter(format!("r must be > 0, got {}", self.r)));
        }
        // alpha = 0 is accepted: it is the KPP limit used by min_wave_speed.
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::Parameter(format!("K must be >= 0, got {}", self.k)));
        }
        if !(self.s0 > 0.0 && self.s0 <= 1.0) {
            return Err(Error::Parameter(format!(
                "s0 must lie in (0, 1], got {}",
                self.s0
            )));
        }
        Ok(())
    }

    /// `(1 + |ln s|)^alpha` for `s` in `(0, 1]`.
    #[inline]
    pub fn log_weight(&self, s: f64) -> f64 {
        log_weight(s, self.alpha)
    }

    /// Right-hand side of the upper bound, `r s / (1 + |ln s|)^alpha`.
    #[inline]
    pub fn upper_bound(&self, s: f64) -> f64 {
        self.r * s / self.log_weight(s)
    }

    /// Right-hand side of the lower bound, `r s (1 - K s) / (1 + |ln s|)^alpha`.
    #[inline]
    pub fn lower_bound(&self, s: f64) -> f64 {
        self.upper_bound(s) * (1.0 - self.k * s)
    }
}

impl Default for ReactionParams {
    fn default() -> Self {
        ReactionParams {
            r: 1.0,
            alpha: 0.4,
            k: 1.0,
            s0: 1.0,
        }
    }
}

/// `(1 + |ln s|)^alpha`, with `|ln s| = -ln s` on `(0, 1]`.
#[inline]
pub fn log_weight(s: f64, alpha: f64) -> f64 {
    (1.0 - s.ln()).powf(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKind {
    WeaklyMonostable,
    Kpp,
    Allee,
    /// `f = 0`: pure diffusion, used for convergence studies.
    None,
}

impl ReactionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReactionKind::WeaklyMonostable => "weakly_monostable",
            ReactionKind::Kpp => "kpp",
            ReactionKind::Allee => "allee",
            ReactionKind::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "weakly_monostable" => Some(ReactionKind::WeaklyMonostable),
            "kpp" => Some(ReactionKind::Kpp),
            "allee" => Some(ReactionKind::Allee),
            "none" => Some(ReactionKind::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionFamily {
    pub kind: ReactionKind,
    pub params: ReactionParams,
}

impl ReactionFamily {
    pub fn new(kind: ReactionKind, params: ReactionParams) -> Result<Self> {
        params.validate()?;
        Ok(ReactionFamily { kind, params })
    }

    pub fn weakly_monostable(params: ReactionParams) -> Self {
        ReactionFamily {
            kind: ReactionKind::WeaklyMonostable,
            params,
        }
    }

    /// Checked evaluation of `f(s)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain("s", s, "[0, 1]"));
        }
        Ok(self.rate(s))
    }

    /// Unchecked evaluation used in the time-stepping loop. Inputs outside
    /// `[0, 1]` are clamped to it.
    #[inline]
    pub fn rate(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let ReactionParams { r, alpha, .. } = self.params;
        match self.kind {
            ReactionKind::WeaklyMonostable => {
                if s <= UNDERFLOW_GUARD || s >= 1.0 {
                    0.0
                } else {
                    // Same association as `upper_bound(s) * (1 - s)`.
                    (r * s / log_weight(s, alpha)) * (1.0 - s)
                }
            }
            ReactionKind::Kpp => r * s * (1.0 - s),
            ReactionKind::Allee => {
                if s <= UNDERFLOW_GUARD {
                    0.0
                } else {
                    r * s.powf(alpha + 1.0) * (1.0 - s)
                }
            }
            ReactionKind::None => 0.0,
        }
    }

    /// Per-capita growth `f(s) / s` for `s` in `(0, 1]`.
    pub fn per_capita(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::domain("s", s, "(0, 1]"));
        }
        let ReactionParams { r, alpha, .. } = self.params;
        Ok(match self.kind {
            ReactionKind::WeaklyMonostable => r * (1.0 - s) / log_weight(s, alpha),
            ReactionKind::Kpp => r * (1.0 - s),
            ReactionKind::Allee => r * s.powf(alpha) * (1.0 - s),
            ReactionKind::None => 0.0,
        })
    }

    /// Lipschitz constant of `f` on `[0, 1]` estimated on a dense grid; used
    /// for time-step sanity checks.
    pub fn max_slope(&self) -> f64 {
        let n = 2000;
        let mut best: f64 = 0.0;
        let mut prev = self.rate(0.0);
        for i in 1..=n {
            let s = i as f64 / n as f64;
            let cur = self.rate(s);
            best = best.max(((cur - prev) * n as f64).abs());
            prev = cur;
        }
        best
    }
}

/// A sample where one side of the bound was violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundWitness {
    pub s: f64,
    /// `f(s)`.
    pub f: f64,
    /// The bound it was compared against.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub upper_violations: usize,
    pub lower_violations: usize,
    /// Worst upper-bound violation (largest `f - bound`).
    pub upper_witness: Option<BoundWitness>,
    /// Worst lower-bound violation (largest `bound - f`).
    pub lower_witness: Option<BoundWitness>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.upper_holds && self.lower_holds
    }
}

/// Sample the upper bound at every grid point and the lower bound at grid
/// points `<= s0`.
pub fn verify_hypothesis_bounds<F>(
    params: &ReactionParams,
    f: F,
    grid: &[f64],
) -> Result<HypothesisReport>
where
    F: Fn(f64) -> f64,
{
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::Input("hypothesis grid is empty".into()));
    }
    if let Some(&bad) = grid.iter().find(|&&s| !(s > 0.0 && s < 1.0)) {
        return Err(Error::domain("grid point", bad, "(0, 1)"));
    }

    let mut report = HypothesisReport {
        samples: grid.len(),
        upper_holds: true,
        lower_holds: true,
        upper_violations: 0,
        lower_violations: 0,
        upper_witness: None,
        lower_witness: None,
    };

    for &s in grid {
        let fs = f(s);
        let upper = params.upper_bound(s);
        if fs > upper * (1.0 + BOUND_REL_SLACK) {
            report.upper_violations += 1;
            let worse = report
                .upper_witness
                .map_or(true, |w| fs - upper > w.f - w.bound);
            if worse {
                report.upper_witness = Some(BoundWitness { s, f: fs, bound: upper });
            }
        }
        if s <= params.s0 {
            let lower = params.lower_bound(s);
            if fs < lower - lower.abs() * BOUND_REL_SLACK {
                report.lower_violations += 1;
                let worse = report
                    .lower_witness
                    .map_or(true, |w| lower - fs > w.bound - w.f);
                if worse {
                    report.lower_witness = Some(BoundWitness { s, f: fs, bound: lower });
                }
            }
        }
    }
    report.upper_holds = report.upper_violations == 0;
    report.lower_holds = report.lower_violations == 0;
    Ok(report)
}

/// `n` points log-spaced between `lo` and `hi` inclusive (`0 < lo < hi`).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo, "log_grid needs 0 < lo < hi");
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (n - 1) as f64;
            let mut g: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
            g[0] = lo;
            g[n - 1] = hi;
            g
        }
    }
}

/// Default verification grid: 10^4 log-spaced points in `[1e-12, 1 - 1e-12]`.
pub fn default_hypothesis_grid() -> Vec<f64> {
    log_grid(1e-12, 1.0 - 1e-12, 10_000)
}

/// One row of the three-family comparison near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyComparison {
    pub s: f64,
    pub kpp: f64,
    pub weakly_monostable: f64,
    pub allee: f64,
    pub kpp_per_capita: f64,
    pub weakly_monostable_per_capita: f64,
    pub allee_per_capita: f64,
    /// Whether the sample is small enough for the ordering to be expected.
    pub in_ordering_region: bool,
    /// `KPP >= weakly monostable >= Allee` per capita.
    pub ordered: bool,
}

/// Evaluate the KPP, weakly monostable and Allee terms with shared `r, alpha`.
///
/// The ordering is only asserted where `r / (1+|ln s|)^alpha < r` and
/// `r s^alpha < r / (1+|ln s|)^alpha`.
pub fn compare_families_near_zero(
    params: &ReactionParams,
    s_values: &[f64],
) -> Result<Vec<FamilyComparison>> {
    params.validate()?;
    let kpp = ReactionFamily::new(ReactionKind::Kpp, *params)?;
    let weak = ReactionFamily::new(ReactionKind::WeaklyMonostable, *params)?;
    let allee = ReactionFamily::new(ReactionKind::Allee, *params)?;
    let r = params.r;

    s_values
        .iter()
        .map(|&s| {
            let row_pc = |fam: &ReactionFamily| -> Result<f64> {
                if s == 0.0 {
                    Ok(0.0)
                } else {
                    fam.per_capita(s)
                }
            };
            let (pk, pw, pa) = (row_pc(&kpp)?, row_pc(&weak)?, row_pc(&allee)?);
            let weight = if s > 0.0 { params.log_weight(s) } else { f64::INFINITY };
            let in_region = s > 0.0
                && s < 1.0
                && r / weight < r
                && r * s.powf(params.alpha) < r / weight;
            Ok(FamilyComparison {
                s,
                kpp: kpp.eval(s)?,
                weakly_monostable: weak.eval(s)?,
                allee: allee.eval(s)?,
                kpp_per_capita: pk,
                weakly_monostable_per_capita: pw,
                allee_per_capita: pa,
                in_ordering_region: in_region,
                ordered: pk >= pw && pw >= pa,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn weak(alpha: f64) -> ReactionFamily {
        ReactionFamily::weakly_monostable(ReactionParams::with_alpha(alpha).unwrap())
    }

    #[test]
    fn endpoints_are_zero() {
        let f = weak(0.4);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert_eq!(f.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn midpoint_matches_high_precision_value() {
        // 0.25 / (1 + ln 2)^0.4 evaluated with 40-digit arithmetic.
        let expected = 0.202_517_297_814_915_97;
        assert_relative_eq!(weak(0.4).eval(0.5).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn out_of_range_state_is_rejected() {
        let f = weak(0.4);
        assert!(matches!(f.eval(-1e-9), Err(Error::Domain { .. })));
        assert!(matches!(f.eval(1.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn continuity_at_the_endpoints() {
        let f = weak(0.4);
        assert!(f.eval(1e-300).unwrap() < 1e-290);
        assert!(f.eval(1.0 - 1e-12).unwrap() < 1e-11 * f.params.r);
    }

    #[test]
    fn upper_bound_defect_is_r_s_squared_over_weight() {
        let p = ReactionParams::with_alpha(0.4).unwrap();
        let f = ReactionFamily::weakly_monostable(p);
        for s in log_grid(1e-12, 0.999, 500) {
            let bound = p.upper_bound(s);
            let defect = bound - f.rate(s);
            let expected = p.r * s * s / p.log_weight(s);
            let ulp = bound * f64::EPSILON;
            assert!(
                (defect - expected).abs() <= 2.0 * ulp,
                "s = {s}: defect {defect} vs {expected}"
            );
        }
    }

    #[test]
    fn kpp_is_symmetric() {
        let f = ReactionFamily::new(ReactionKind::Kpp, ReactionParams::default()).unwrap();
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            assert_relative_eq!(f.rate(s), f.rate(1.0 - s), epsilon = 1e-16);
        }
    }

    #[test]
    fn larger_alpha_decreases_the_weak_term() {
        let (lo, hi) = (weak(0.2), weak(0.6));
        for i in 1..=99 {
            let s = i as f64 / 100.0;
            assert!(hi.rate(s) < lo.rate(s), "s = {s}");
        }
    }

    #[test]
    fn hypothesis_passes_for_the_model_nonlinearity() {
        let p = ReactionParams::with_alpha(0.4).unwrap();
        let f = ReactionFamily::weakly_monostable(p);
        let report = verify_hypothesis_bounds(&p, |s| f.rate(s), &default_hypothesis_grid()).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.samples, 10_000);
    }

    #[test]
    fn hypothesis_fails_for_linear_growth_near_one() {
        let p = ReactionParams::with_alpha(0.4).unwrap();
        let report =
            verify_hypothesis_bounds(&p, |s| 2.0 * p.r * s, &default_hypothesis_grid()).unwrap();
        assert!(!report.upper_holds);
        let w = report.upper_witness.unwrap();
        assert!(w.s > 0.999, "witness at {}", w.s);
        assert!(w.f > w.bound);
    }

    #[test]
    fn empty_grid_is_an_input_error() {
        let p = ReactionParams::default();
        assert!(matches!(
            verify_hypothesis_bounds(&p, |s| s, &[]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn family_ordering_near_zero() {
        let p = ReactionParams::new(1.0, 0.5, 1.0, 1.0).unwrap();
        let rows = compare_families_near_zero(&p, &[1e-6]).unwrap();
        let row = rows[0];
        // (1 + 6 ln 10)^-0.5 at 40 digits, times (1 - s).
        assert_relative_eq!(row.kpp_per_capita, 1.0 - 1e-6, epsilon = 1e-15);
        assert_relative_eq!(
            row.weakly_monostable_per_capita,
            0.259_801_520_721_374_86 * (1.0 - 1e-6),
            max_relative = 1e-13
        );
        assert_relative_eq!(row.allee_per_capita, 1e-3 * (1.0 - 1e-6), max_relative = 1e-13);
        assert!(row.in_ordering_region && row.ordered);

        let limit = compare_families_near_zero(&p, &[1e-280]).unwrap()[0];
        assert!(limit.weakly_monostable_per_capita < 0.05);
        assert!(limit.allee_per_capita < 1e-139);
        assert!(limit.weakly_monostable_per_capita / limit.allee_per_capita > 1e130);

        let one = compare_families_near_zero(&p, &[1.0]).unwrap()[0];
        assert_eq!((one.kpp, one.weakly_monostable, one.allee), (0.0, 0.0, 0.0));
    }

    #[test]
    fn params_are_validated() {
        assert!(ReactionParams::new(0.0, 0.4, 1.0, 1.0).is_err());
        assert!(ReactionParams::new(1.0, -0.1, 1.0, 1.0).is_err());
        assert!(ReactionParams::new(1.0, 0.4, -1.0, 1.0).is_err());
        assert!(ReactionParams::new(1.0, 0.4, 1.0, 1.5).is_err());
    }
}
