//! Normal weight functions on `[0, 1)`.
//!
//! A weight `mu` is *normal* with parameters `(alpha, beta, delta0)` when, on
//! `[delta0, 1)`, `mu(r) / (1-r)^alpha` decreases to zero and
//! `mu(r) / (1-r)^beta` increases to infinity. The parameters are not unique,
//! so they are always supplied by the caller and checked here, never inferred.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adjacent-sample violations of monotonicity below this relative size are
/// treated as floating-point noise.
pub const MONOTONE_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `mu(r) = (1 - r^2)^gamma`.
    Power { gamma: f64 },
    /// `mu(r) = (1 - r)^c`.
    Edge { c: f64 },
    /// Samples `(r, mu(r))` with `r` strictly increasing from `0`,
    /// interpolated piecewise-linearly in `(ln(1-r), ln mu)`.
    Table { points: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeight", into = "RawWeight")]
pub struct NormalWeight {
    kind: WeightKind,
    alpha: f64,
    beta: f64,
    delta0: f64,
    // cached (ln(1-r), ln mu) for tables, ordered by decreasing ln(1-r)
    #[serde(skip)]
    table_log: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawWeight {
    #[serde(flatten)]
    kind: WeightKind,
    alpha: f64,
    beta: f64,
    delta0: f64,
}

impl TryFrom<RawWeight> for NormalWeight {
    type Error = Error;
    fn try_from(raw: RawWeight) -> Result<Self> {
        NormalWeight::new(raw.kind, raw.alpha, raw.beta, raw.delta0)
    }
}

impl From<NormalWeight> for RawWeight {
    fn from(w: NormalWeight) -> Self {
        RawWeight {
            kind: w.kind,
            alpha: w.alpha,
            beta: w.beta,
            delta0: w.delta0,
        }
    }
}

impl NormalWeight {
    pub fn new(kind: WeightKind, alpha: f64, beta: f64, delta0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < beta && beta.is_finite()) {
            return Err(Error::argument(format!(
                "normality exponents need 0 < alpha < beta, got alpha={alpha}, beta={beta}"
            )));
        }
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(Error::argument(format!("delta0 must lie in (0,1), got {delta0}")));
        }
        let mut table_log = Vec::new();
        match &kind {
            WeightKind::Power { gamma } if !(*gamma > 0.0 && gamma.is_finite()) => {
                return Err(Error::argument(format!("power exponent must be positive, got {gamma}")));
            }
            WeightKind::Edge { c } if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::argument(format!("edge exponent must be positive, got {c}")));
            }
            WeightKind::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::argument("a weight table needs at least two points"));
                }
                if points[0][0] != 0.0 {
                    return Err(Error::argument("a weight table must start at r = 0"));
                }
                for w in points.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return Err(Error::argument("table radii must be strictly increasing"));
                    }
                }
                for &[r, mu] in points {
                    if !(0.0..1.0).contains(&r) {
                        return Err(Error::argument(format!("table radius {r} outside [0,1)")));
                    }
                    if !(mu > 0.0 && mu.is_finite()) {
                        return Err(Error::argument(format!("table value {mu} at r={r} is not positive")));
                    }
                }
                table_log = points.iter().map(|&[r, mu]| ((-r).ln_1p(), mu.ln())).collect();
            }
            _ => {}
        }
        Ok(NormalWeight {
            kind,
            alpha,
            beta,
            delta0,
            table_log,
        })
    }

    pub fn power(gamma: f64, alpha: f64, beta: f64, delta0: f64) -> Result<Self> {
        Self::new(WeightKind::Power { gamma }, alpha, beta, delta0)
    }

    pub fn edge(c: f64, alpha: f64, beta: f64, delta0: f64) -> Result<Self> {
        Self::new(WeightKind::Edge { c }, alpha, beta, delta0)
    }

    pub fn table(points: Vec<[f64; 2]>, alpha: f64, beta: f64, delta0: f64) -> Result<Self> {
        Self::new(WeightKind::Table { points }, alpha, beta, delta0)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// `mu(r)` for `r` in `[0, 1)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::domain(format!("weight evaluated at r={r}, outside [0,1)")));
        }
        Ok(match self.kind {
            WeightKind::Power { gamma } => (1.0 - r * r).powf(gamma),
            WeightKind::Edge { c } => (1.0 - r).powf(c),
            WeightKind::Table { .. } => self.table_ln((-r).ln_1p()).exp(),
        })
    }

    /// `ln mu(1 - g)` given `ln g`, for gaps `g` in `(0, 1]`.
    ///
    /// This is the form used near the boundary, where `1 - g` is not
    /// representable.
    pub fn ln_at_gap(&self, ln_gap: f64) -> f64 {
        debug_assert!(ln_gap <= 1e-15, "gap above one: ln_gap={ln_gap}");
        match self.kind {
            WeightKind::Power { gamma } => {
                let g = ln_gap.exp();
                gamma * (ln_gap + (2.0 - g).ln())
            }
            WeightKind::Edge { c } => c * ln_gap,
            WeightKind::Table { .. } => self.table_ln(ln_gap),
        }
    }

    fn table_ln(&self, x: f64) -> f64 {
        let t = &self.table_log;
        // x = ln(1-r) decreases along the table.
        let idx = t.partition_point(|&(xi, _)| xi > x);
        let (a, b) = match idx {
            0 => (t[0], t[1]),
            i if i >= t.len() => (t[t.len() - 2], t[t.len() - 1]),
            i => (t[i - 1], t[i]),
        };
        if x == a.0 {
            return a.1;
        }
        let slope = (b.1 - a.1) / (b.0 - a.0);
        a.1 + slope * (x - a.0)
    }

    /// Samples `[delta0, 1 - 1/grid_size]` uniformly and checks both
    /// monotonicity conditions and both boundary trends.
    pub fn verify_normality(&self, grid_size: usize) -> Result<NormalityReport> {
        if grid_size < 2 {
            return Err(Error::argument("normality grid needs at least two samples"));
        }
        let hi = 1.0 - 1.0 / grid_size as f64;
        let radii: Vec<f64> = if hi <= self.delta0 {
            vec![self.delta0]
        } else {
            (0..grid_size)
                .map(|i| self.delta0 + (hi - self.delta0) * i as f64 / (grid_size - 1) as f64)
                .collect()
        };
        let lower: Vec<f64> = radii.iter().map(|&r| self.ln_ratio(r, self.alpha)).collect();
        let upper: Vec<f64> = radii.iter().map(|&r| self.ln_ratio(r, self.beta)).collect();

        let alpha_check = monotone_check(&radii, &lower, -1.0);
        let beta_check = monotone_check(&radii, &upper, 1.0);

        let decile = (radii.len() / 10).max(2).min(radii.len());
        let tail = radii.len() - decile;
        let slope = |v: &[f64]| -> f64 {
            if radii.len() < 2 {
                return 0.0;
            }
            (v[v.len() - 1] - v[tail]) / (radii[radii.len() - 1] - radii[tail])
        };
        let alpha_slope = slope(&lower);
        let beta_slope = slope(&upper);
        let alpha_trend_to_zero = alpha_slope < 0.0;
        let beta_trend_to_infinity = beta_slope > 0.0;

        Ok(NormalityReport {
            grid_size,
            r_min: radii[0],
            r_max: radii[radii.len() - 1],
            alpha_ratio_nonincreasing: alpha_check.ok,
            alpha_worst_increase: alpha_check.worst,
            alpha_first_violation: alpha_check.first_violation,
            beta_ratio_nondecreasing: beta_check.ok,
            beta_worst_decrease: beta_check.worst,
            beta_first_violation: beta_check.first_violation,
            alpha_tail_log_slope: alpha_slope,
            beta_tail_log_slope: beta_slope,
            alpha_trend_to_zero,
            beta_trend_to_infinity,
            pass: alpha_check.ok && beta_check.ok && alpha_trend_to_zero && beta_trend_to_infinity,
        })
    }

    fn ln_ratio(&self, r: f64, exponent: f64) -> f64 {
        let ln_gap = (-r).ln_1p();
        self.ln_at_gap(ln_gap) - exponent * ln_gap
    }

    /// The normality bracket between consecutive witness radii
    /// `1 - p^-(sM+j)` and `1 - p^-((s+1)M+j)`.
    pub fn ratio_bracket(&self, p: u64, m: u32, j: i64, s: u64) -> Result<RatioBracket> {
        if p < 2 || m < 1 {
            return Err(Error::argument(format!("need p >= 2 and M >= 1, got p={p}, M={m}")));
        }
        let ln_p = (p as f64).ln();
        let e1 = (s as i64 * m as i64 + j) as f64;
        let e2 = e1 + m as f64;
        // 1 - p^-e1 >= delta0  <=>  -e1 ln p <= ln(1 - delta0)
        if -e1 * ln_p > (-self.delta0).ln_1p() {
            return Err(Error::domain(format!(
                "radius 1 - {p}^-{e1} lies below delta0 = {}",
                self.delta0
            )));
        }
        let ratio = (self.ln_at_gap(-e1 * ln_p) - self.ln_at_gap(-e2 * ln_p)).exp();
        let lower = (m as f64 * self.alpha * ln_p).exp();
        let upper = (m as f64 * self.beta * ln_p).exp();
        let holds = ratio >= lower * (1.0 - MONOTONE_RTOL) && ratio <= upper * (1.0 + MONOTONE_RTOL);
        Ok(RatioBracket {
            lower,
            ratio,
            upper,
            holds,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioBracket {
    pub lower: f64,
    pub ratio: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub grid_size: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub alpha_ratio_nonincreasing: bool,
    /// Largest relative increase between adjacent samples of `mu/(1-r)^alpha`.
    pub alpha_worst_increase: f64,
    pub alpha_first_violation: Option<f64>,
    pub beta_ratio_nondecreasing: bool,
    pub beta_worst_decrease: f64,
    pub beta_first_violation: Option<f64>,
    pub alpha_tail_log_slope: f64,
    pub beta_tail_log_slope: f64,
    pub alpha_trend_to_zero: bool,
    pub beta_trend_to_infinity: bool,
    pub pass: bool,
}

struct MonotoneCheck {
    ok: bool,
    worst: f64,
    first_violation: Option<f64>,
}

/// `direction = -1` asks for a nonincreasing sequence, `+1` nondecreasing.
/// Works on logarithms, so the tolerance is relative.
fn monotone_check(radii: &[f64], ln_values: &[f64], direction: f64) -> MonotoneCheck {
    let mut worst = 0.0f64;
    let mut first_violation = None;
    for (i, w) in ln_values.windows(2).enumerate() {
        let wrong_way = -direction * (w[1] - w[0]);
        if wrong_way > 0.0 {
            worst = worst.max(wrong_way.exp_m1());
        }
        if wrong_way > MONOTONE_RTOL && first_violation.is_none() {
            first_violation = Some(radii[i + 1]);
        }
    }
    MonotoneCheck {
        ok: first_violation.is_none(),
        worst,
        first_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weight_values() {
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.7).unwrap();
        assert!((w.eval(0.6).unwrap() - 0.8).abs() < 1e-15);
        let w2 = NormalWeight::power(2.0, 1.0, 3.0, 0.5).unwrap();
        assert_eq!(w2.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_outside_unit_interval_is_domain_error() {
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.7).unwrap();
        assert!(matches!(w.eval(1.0), Err(Error::Domain(_))));
        assert!(matches!(w.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(NormalWeight::power(0.5, 0.6, 0.4, 0.5).is_err());
        assert!(NormalWeight::power(0.5, 0.4, 0.6, 1.0).is_err());
        assert!(NormalWeight::power(-1.0, 0.4, 0.6, 0.5).is_err());
        assert!(NormalWeight::table(vec![[0.1, 1.0], [0.5, 0.5]], 0.4, 0.6, 0.5).is_err());
        assert!(NormalWeight::table(vec![[0.0, 1.0], [0.5, 0.0]], 0.4, 0.6, 0.5).is_err());
    }

    #[test]
    fn tabulated_weight_tracks_closed_form() {
        // Oracle: the closed form the table was sampled from.
        let closed = |r: f64| (1.0 - r * r).powf(0.5);
        let points: Vec<[f64; 2]> = (0..2000)
            .map(|i| {
                let r = 1.0 - (-(i as f64) * 0.005).exp();
                [r, closed(r)]
            })
            .collect();
        let w = NormalWeight::table(points, 0.4, 0.6, 0.7).unwrap();
        assert!((w.eval(0.6).unwrap() - 0.8).abs() < 1e-5);
        for r in [0.01, 0.33, 0.9, 0.999, 0.99999] {
            let rel = (w.eval(r).unwrap() - closed(r)).abs() / closed(r);
            assert!(rel < 1e-5, "r={r}: rel err {rel}");
        }
    }

    #[test]
    fn table_is_exact_for_edge_power_laws() {
        let points: Vec<[f64; 2]> = [0.0, 0.5, 0.9, 0.99]
            .iter()
            .map(|&r| [r, (1.0f64 - r).powf(0.5)])
            .collect();
        let w = NormalWeight::table(points, 0.4, 0.6, 0.5).unwrap();
        for r in [0.3, 0.95, 0.9999] {
            assert!((w.eval(r).unwrap() - (1.0f64 - r).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn gap_form_agrees_with_direct_form() {
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.7).unwrap();
        for r in [0.0, 0.25, 0.8, 0.999] {
            let direct = w.eval(r).unwrap();
            let via_gap = w.ln_at_gap((1.0f64 - r).ln()).exp();
            assert!((direct - via_gap).abs() < 1e-14);
        }
    }

    // The first ratio for (1-r^2)^g over (1-r)^a is (1-r)^(g-a) (1+r)^g, whose
    // log-derivative is -(g-a)/(1-r) + g/(1+r). It is nonpositive exactly when
    // r >= a / (2g - a). For g=0.5, a=0.4 that threshold is 2/3.
    fn decreasing_threshold(gamma: f64, alpha: f64) -> f64 {
        alpha / (2.0 * gamma - alpha)
    }

    #[test]
    fn normality_passes_above_analytic_threshold() {
        assert!((decreasing_threshold(0.5, 0.4) - 2.0 / 3.0).abs() < 1e-15);
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.7).unwrap();
        assert!(w.verify_normality(10_000).unwrap().pass);
        let w = NormalWeight::power(1.0, 0.5, 2.0, 0.5).unwrap();
        assert!(w.verify_normality(10_000).unwrap().pass);
    }

    #[test]
    fn normality_fails_below_analytic_threshold() {
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.5).unwrap();
        let rep = w.verify_normality(10_000).unwrap();
        assert!(!rep.alpha_ratio_nonincreasing);
        assert!(rep.beta_ratio_nondecreasing);
        let first = rep.alpha_first_violation.unwrap();
        assert!(first < 2.0 / 3.0);
    }

    #[test]
    fn normality_fails_when_alpha_exceeds_gamma() {
        let w = NormalWeight::power(0.5, 0.6, 0.7, 0.5).unwrap();
        let rep = w.verify_normality(10_000).unwrap();
        assert!(!rep.pass);
        assert!(!rep.alpha_ratio_nonincreasing);
        assert!(!rep.alpha_trend_to_zero);
    }

    #[test]
    fn ratio_bracket_examples() {
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.7).unwrap();
        let b = w.ratio_bracket(6, 2, 1, 2).unwrap();
        // 50-digit reference for the ratio
        assert!((b.ratio - 5.9998124538669545093).abs() < 1e-12);
        assert!(b.holds);

        let w = NormalWeight::power(0.5, 0.49, 0.51, 0.5).unwrap();
        let b = w.ratio_bracket(6, 1, 1, 3).unwrap();
        assert!((b.ratio - 2.4490959278088837717).abs() < 1e-12);
        assert!(b.holds);
    }

    #[test]
    fn ratio_bracket_below_delta0_is_domain_error() {
        let w = NormalWeight::power(0.5, 0.4, 0.6, 0.9).unwrap();
        // 1 - 6^-1 = 0.833 < 0.9
        assert!(matches!(w.ratio_bracket(6, 2, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn config_block_round_trip() {
        let json = r#"{"kind":"power","gamma":0.5,"alpha":0.4,"beta":0.6,"delta0":0.5}"#;
        let w: NormalWeight = serde_json::from_str(json).unwrap();
        assert_eq!(w.kind(), &WeightKind::Power { gamma: 0.5 });
        let back: NormalWeight = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(w, back);
        let table = r#"{"kind":"table","points":[[0,1],[0.5,0.7],[0.9,0.3]],"alpha":0.4,"beta":0.6,"delta0":0.5}"#;
        let t: NormalWeight = serde_json::from_str(table).unwrap();
        assert!((t.eval(0.5).unwrap() - 0.7).abs() < 1e-15);
        let bad = r#"{"kind":"power","gamma":0.5,"alpha":0.7,"beta":0.6,"delta0":0.5}"#;
        assert!(serde_json::from_str::<NormalWeight>(bad).is_err());
    }
}
