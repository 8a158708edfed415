//! Lacunary series `f = sum_k P_{n_k}` of zonal homogeneous polynomials:
//! gap certificates, truncated evaluation with a rigorous tail bound, and
//! membership brackets for the weighted spaces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{check_ball, sup_norm, SpherePolynomial, ZonalPolynomial};
use crate::weights::NormalWeight;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub degree: u64,
    pub poly: ZonalPolynomial,
    /// Known value of the sup norm of `poly` on the sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supnorm_hint: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapSeries {
    terms: Vec<SeriesTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_ratio: Option<f64>,
    /// Assumed bound on the sup norms of terms beyond the stored ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_sup_bound: Option<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    terms: Vec<SeriesTerm>,
    #[serde(default)]
    gap_ratio: Option<f64>,
    #[serde(default)]
    tail_sup_bound: Option<f64>,
}

impl<'de> Deserialize<'de> for GapSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSeries::deserialize(d)?;
        GapSeries::new(raw.terms, raw.gap_ratio, raw.tail_sup_bound).map_err(serde::de::Error::custom)
    }
}

impl GapSeries {
    pub fn new(terms: Vec<SeriesTerm>, gap_ratio: Option<f64>, tail_sup_bound: Option<f64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::argument("series needs at least one term"));
        }
        let dim = terms[0].poly.dim();
        for (i, t) in terms.iter().enumerate() {
            if t.poly.degree() != t.degree {
                return Err(Error::argument(format!(
                    "term {i}: degree {} but polynomial of degree {}",
                    t.degree,
                    t.poly.degree()
                )));
            }
            if t.poly.dim() != dim {
                return Err(Error::argument(format!("term {i}: dimension differs from term 0")));
            }
            if let Some(h) = t.supnorm_hint {
                if !(h >= 0.0 && h.is_finite()) {
                    return Err(Error::argument(format!("term {i}: invalid sup-norm hint {h}")));
                }
            }
        }
        if let Some(w) = terms.windows(2).position(|w| w[1].degree <= w[0].degree) {
            return Err(Error::argument(format!("degrees not strictly increasing at term {}", w + 1)));
        }
        if let Some(c) = gap_ratio {
            if !(c > 1.0) {
                return Err(Error::argument(format!("gap ratio {c} must exceed 1")));
            }
            let stored = min_ratio(&terms);
            if stored < c {
                return Err(Error::argument(format!(
                    "stored degrees have ratio {stored}, below the declared gap ratio {c}"
                )));
            }
        }
        if let Some(b) = tail_sup_bound {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::argument(format!("invalid tail sup bound {b}")));
            }
        }
        Ok(GapSeries {
            terms,
            gap_ratio,
            tail_sup_bound,
        })
    }

    /// Series `sum_k coeff_k <z, zeta>^{n_k}` on a single center, with exact
    /// sup norms `|coeff_k|`.
    pub fn single_center(zeta: &crate::sphere::UnitVector, degrees: &[u64], coeffs: &[Complex64]) -> Result<Self> {
        if degrees.len() != coeffs.len() {
            return Err(Error::argument("degrees and coefficients differ in length"));
        }
        let terms = degrees
            .iter()
            .zip(coeffs)
            .map(|(&d, &c)| {
                Ok(SeriesTerm {
                    degree: d,
                    poly: ZonalPolynomial::new(d, vec![zeta.clone()], vec![c])?,
                    supnorm_hint: Some(c.norm()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GapSeries::new(terms, None, None)
    }

    pub fn terms(&self) -> &[SeriesTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].poly.dim()
    }

    pub fn gap_ratio(&self) -> Option<f64> {
        self.gap_ratio
    }

    /// First `k` terms; the gap ratio and tail assumption are kept.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        GapSeries::new(self.terms[..k.min(self.terms.len())].to_vec(), self.gap_ratio, self.tail_sup_bound)
    }

    fn term_upper(&self, t: &SeriesTerm) -> f64 {
        t.supnorm_hint.unwrap_or_else(|| t.poly.abs_coeff_sum())
    }

    /// Sup-norm bound used for terms beyond the stored prefix.
    pub fn tail_sup_bound(&self) -> f64 {
        self.tail_sup_bound
            .unwrap_or_else(|| self.terms.iter().map(|t| self.term_upper(t)).fold(0.0, f64::max))
    }
}

fn min_ratio(terms: &[SeriesTerm]) -> f64 {
    terms
        .windows(2)
        .map(|w| w[1].degree as f64 / w[0].degree as f64)
        .fold(f64::INFINITY, f64::min)
}

/// `(c > 1, c)` with `c` the smallest ratio of consecutive stored degrees;
/// fewer than two terms give `(true, inf)`.
pub fn check_hadamard(f: &GapSeries) -> (bool, f64) {
    let c = min_ratio(&f.terms);
    (c > 1.0, c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms_used: usize,
    pub within_tol: bool,
}

/// Sums the stored terms at `z` and bounds what the rest of the series can
/// contribute, assuming later degrees keep the gap ratio and later sup norms
/// stay below [`GapSeries::tail_sup_bound`].
pub fn eval_series(f: &GapSeries, z: &[Complex64], tol: f64) -> Result<SeriesValue> {
    check_ball(z, f.dim())?;
    let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if r >= 1.0 {
        return Err(Error::domain(format!("|z| = {r} must be below 1")));
    }
    if !(tol > 0.0) {
        return Err(Error::argument("tolerance must be positive"));
    }
    let value: Complex64 = f.terms.iter().map(|t| t.poly.value(z)).sum();
    let c = f.gap_ratio.unwrap_or_else(|| check_hadamard(f).1);
    let last = f.terms.last().expect("nonempty").degree as f64;
    let tail_bound = geometric_gap_tail(f.tail_sup_bound(), r, last, c);
    Ok(SeriesValue {
        value,
        tail_bound,
        terms_used: f.terms.len(),
        within_tol: tail_bound <= tol,
    })
}

/// Bound on `b * sum_{i>=1} r^{n c^i}`, using `c^i >= 1 + (i-1)(c-1)`:
/// the sum is at most `r^{nc} / (1 - r^{nc(c-1)})`.
fn geometric_gap_tail(b: f64, r: f64, n: f64, c: f64) -> f64 {
    if b == 0.0 || r == 0.0 || c.is_infinite() {
        return 0.0;
    }
    if !(c > 1.0) {
        return f64::INFINITY;
    }
    let ln_r = r.ln();
    let first = n.max(1.0) * c;
    let head = first * ln_r;
    let denom = -(first * (c - 1.0) * ln_r).exp_m1();
    b * head.exp() / denom
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOptions {
    pub samples: usize,
    pub polish_iters: usize,
    pub seed: u64,
    /// A sequence counts as tending to zero when its last third lies below this.
    pub little_threshold: f64,
    /// Relative slack when testing monotonicity.
    pub monotone_rtol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            samples: 4096,
            polish_iters: 100,
            seed: 0,
            little_threshold: 0.1,
            monotone_rtol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub k: usize,
    pub n_k: u64,
    /// `mu(1 - 1/n_k)`, or `mu(0)` when `n_k <= 1`.
    pub weight: f64,
    pub sup_lower: f64,
    pub sup_upper: f64,
    pub a_lower: f64,
    pub a_upper: f64,
    /// `hint` when a sup-norm value was supplied, `bracket` otherwise.
    pub source: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    ReportedSup,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub rows: Vec<ProfileRow>,
    pub gap_ratio: f64,
    pub in_hmu: Verdict,
    /// Which side of the brackets each verdict rests on.
    pub in_hmu_basis: String,
    pub sup_a_upper: f64,
    pub in_little: Verdict,
    pub in_little_basis: String,
    pub options: ProfileOptions,
}

/// Brackets `a_k = mu(1 - 1/n_k) M_{n_k}` for every stored term and reads off
/// trend verdicts from the last third of the sequence.
pub fn membership_profile(f: &GapSeries, w: &NormalWeight, opts: &ProfileOptions) -> Result<Profile> {
    let (is_gap, c) = check_hadamard(f);
    if !is_gap {
        return Err(Error::argument(format!("series has no Hadamard gap (min ratio {c})")));
    }
    let mut rows = Vec::with_capacity(f.terms.len());
    for (k, t) in f.terms.iter().enumerate() {
        let weight = if t.degree <= 1 {
            w.eval(0.0)?
        } else {
            w.ln_at_gap(-(t.degree as f64).ln()).exp()
        };
        let (lo, hi, source) = match t.supnorm_hint {
            Some(h) => (h, h, "hint"),
            None => {
                let s = sup_norm(&t.poly, opts.samples, opts.polish_iters, opts.seed.wrapping_add(k as u64))?;
                (s.lower, t.poly.abs_coeff_sum(), "bracket")
            }
        };
        rows.push(ProfileRow {
            k,
            n_k: t.degree,
            weight,
            sup_lower: lo,
            sup_upper: hi,
            a_lower: weight * lo,
            a_upper: weight * hi,
            source: source.into(),
        });
    }
    let start = rows.len() - rows.len().div_ceil(3);
    let tail = &rows[start..];
    let upper: Vec<f64> = tail.iter().map(|r| r.a_upper).collect();
    let lower: Vec<f64> = tail.iter().map(|r| r.a_lower).collect();
    let rtol = opts.monotone_rtol;
    let nonincreasing = |v: &[f64]| v.windows(2).all(|p| p[1] <= p[0] * (1.0 + rtol) + rtol);
    let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|p| p[1] > p[0] * (1.0 + rtol) + rtol);
    let sup_a_upper = rows.iter().map(|r| r.a_upper).fold(0.0, f64::max);

    let (in_hmu, in_hmu_basis) = if sup_a_upper.is_finite() && nonincreasing(&upper) {
        (Verdict::Yes, "upper brackets bounded and eventually nonincreasing")
    } else if increasing(&lower) {
        (Verdict::No, "lower brackets strictly increasing over the last third")
    } else {
        (Verdict::ReportedSup, "finite prefix only: see sup_a_upper")
    };
    let thr = opts.little_threshold;
    let (in_little, in_little_basis) = if upper.iter().all(|&a| a < thr) && nonincreasing(&upper) {
        (Verdict::Yes, "upper brackets below threshold and nonincreasing over the last third")
    } else if lower.iter().all(|&a| a >= thr) {
        (Verdict::No, "lower brackets at or above threshold over the last third")
    } else {
        (Verdict::Undetermined, "brackets straddle the threshold")
    };
    Ok(Profile {
        rows,
        gap_ratio: c,
        in_hmu,
        in_hmu_basis: in_hmu_basis.into(),
        sup_a_upper,
        in_little,
        in_little_basis: in_little_basis.into(),
        options: *opts,
    })
}

/// Cauchy estimate on the coefficient sup norms:
/// `M_k <= norm_f / (r^k mu(r))`.
pub fn cauchy_coefficient_bound(norm_f: f64, w: &NormalWeight, k: u32, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("radius {r} outside (0,1)")));
    }
    if k == 0 {
        return Err(Error::argument("degree must be at least 1"));
    }
    Ok(norm_f / (r.powi(k as i32) * w.eval(r)?))
}

/// `(1 - 1/k)^{-k}`, the constant obtained from the Cauchy estimate at
/// `r = 1 - 1/k`. Equals 4 at `k = 2` and decreases to `e`.
pub fn cauchy_constant(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::argument("constant defined for k >= 2"));
    }
    let kf = k as f64;
    if k <= i32::MAX as u32 {
        Ok((kf / (kf - 1.0)).powi(k as i32))
    } else {
        Ok((-kf * (-1.0 / kf).ln_1p()).exp())
    }
}

/// Bound on `mu(1 - 1/k) M_k` valid for every `k >= 1`:
/// `max(mu(0) M_1, 4 norm_f)`.
pub fn uniform_coefficient_bound(norm_f: f64, w: &NormalWeight, sup_m1: f64) -> Result<f64> {
    Ok((w.eval(0.0)? * sup_m1).max(4.0 * norm_f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::UnitVector;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn dyadic(k: usize, coeff: impl Fn(usize) -> f64) -> GapSeries {
        let degrees: Vec<u64> = (0..k).map(|i| 1u64 << i).collect();
        let coeffs: Vec<Complex64> = (0..k).map(|i| c(coeff(i))).collect();
        GapSeries::single_center(&UnitVector::basis(2, 0), &degrees, &coeffs).unwrap()
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(check_hadamard(&dyadic(6, |_| 1.0)), (true, 2.0));
        let e = UnitVector::basis(2, 0);
        let lin: Vec<u64> = (1..=11).collect();
        let f = GapSeries::single_center(&e, &lin, &vec![c(1.0); 11]).unwrap();
        let (g, r) = check_hadamard(&f);
        assert!(g);
        assert!((r - 1.1).abs() < 1e-15);
        let tri: Vec<u64> = (0..8).map(|i| 3u64.pow(i)).collect();
        assert_eq!(check_hadamard(&GapSeries::single_center(&e, &tri, &vec![c(1.0); 8]).unwrap()), (true, 3.0));
        let one = GapSeries::single_center(&e, &[5], &[c(1.0)]).unwrap();
        assert_eq!(check_hadamard(&one), (true, f64::INFINITY));
    }

    #[test]
    fn construction_validates_terms() {
        let e = UnitVector::basis(2, 0);
        assert!(GapSeries::single_center(&e, &[4, 2], &[c(1.0), c(1.0)]).is_err());
        let t = SeriesTerm {
            degree: 3,
            poly: ZonalPolynomial::unit(2, vec![e.clone()]).unwrap(),
            supnorm_hint: None,
        };
        assert!(GapSeries::new(vec![t], None, None).is_err());
        let f = dyadic(4, |_| 1.0);
        assert!(GapSeries::new(f.terms().to_vec(), Some(3.0), None).is_err());
        assert!(GapSeries::new(f.terms().to_vec(), Some(2.0), None).is_ok());
    }

    #[test]
    fn single_term_has_no_tail() {
        let f = dyadic(1, |_| 1.0);
        let z = [c(0.4), c(0.2)];
        let v = eval_series(&f, &z, 1e-12).unwrap();
        assert_eq!(v.value, f.terms()[0].poly.eval(&z).unwrap());
        assert_eq!(v.tail_bound, 0.0);
    }

    #[test]
    fn dyadic_series_at_half() {
        let f = dyadic(6, |_| 1.0);
        let v = eval_series(&f, &[c(0.5), c(0.0)], 1e-9).unwrap();
        let oracle: f64 = (0..6).map(|k| 0.5f64.powi(1 << k)).sum();
        assert!((v.value.re - oracle).abs() < 1e-16);
        assert!((v.value.re - 0.81642150902189314365).abs() < 1e-15);
        assert!(v.tail_bound < 1e-9);
        assert!(v.within_tol);
    }

    #[test]
    fn slow_tail_is_reported_honestly() {
        let f = dyadic(6, |_| 1.0);
        let v = eval_series(&f, &[c(0.99), c(0.0)], 1e-3).unwrap();
        // The next omitted term alone is 0.99^64.
        assert!(v.tail_bound >= 0.99f64.powi(64));
        assert!(!v.within_tol);
        assert!(eval_series(&f, &[c(1.0), c(0.0)], 1e-3).is_err());
    }

    #[test]
    fn membership_unit_family() {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let mu = |k: usize| w.ln_at_gap(-(k as f64) * std::f64::consts::LN_2).exp();
        let f = dyadic(12, |k| 1.0 / mu(k));
        let p = membership_profile(&f, &w, &ProfileOptions::default()).unwrap();
        for r in &p.rows {
            assert!((r.a_lower - 1.0).abs() < 1e-9 && (r.a_upper - 1.0).abs() < 1e-9);
        }
        assert_eq!(p.in_hmu, Verdict::Yes);
        assert_eq!(p.in_little, Verdict::No);

        let decaying = dyadic(30, |k| 1.0 / (mu(k) * (k + 1) as f64));
        let p = membership_profile(&decaying, &w, &ProfileOptions::default()).unwrap();
        assert_eq!(p.in_little, Verdict::Yes);
        assert_eq!(p.in_hmu, Verdict::Yes);

        let growing = dyadic(12, |k| (k + 1) as f64 / mu(k));
        let p = membership_profile(&growing, &w, &ProfileOptions::default()).unwrap();
        assert_eq!(p.in_hmu, Verdict::No);
    }

    #[test]
    fn membership_without_hints_brackets_sup() {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let terms = (0..4)
            .map(|i| SeriesTerm {
                degree: 2u64 << i,
                poly: ZonalPolynomial::unit(2u64 << i, vec![UnitVector::basis(2, 0), UnitVector::basis(2, 1)]).unwrap(),
                supnorm_hint: None,
            })
            .collect();
        let f = GapSeries::new(terms, None, None).unwrap();
        let opts = ProfileOptions { samples: 512, ..Default::default() };
        let p = membership_profile(&f, &w, &opts).unwrap();
        for r in &p.rows {
            assert!(r.sup_lower <= r.sup_upper);
            assert!(r.sup_lower > 0.99, "{}", r.sup_lower);
            assert_eq!(r.sup_upper, 2.0);
        }
    }

    #[test]
    fn single_term_series_counts_as_gap() {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let f = GapSeries::new(dyadic(1, |_| 1.0).terms().to_vec(), None, None).unwrap();
        assert!(membership_profile(&f, &w, &ProfileOptions::default()).is_ok());
    }

    #[test]
    fn cauchy_examples() {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let b = cauchy_coefficient_bound(1.0, &w, 2, 0.5).unwrap();
        assert!((b - 4.618802153517006).abs() < 1e-14);
        assert_eq!(cauchy_constant(2).unwrap(), 4.0);
        assert!((cauchy_constant(1_000_000).unwrap() - std::f64::consts::E).abs() < 2e-6);
        assert!(cauchy_coefficient_bound(1.0, &w, 2, 1.0).is_err());
        assert!(cauchy_coefficient_bound(1.0, &w, 2, 0.0).is_err());
        assert_eq!(uniform_coefficient_bound(1.0, &w, 2.0).unwrap(), 4.0);
    }
}
