//! Certified lower bounds on `|g_{i,j}|`, `|h_{i,j}|` and the growth check.
//!
//! Each level term `P_{i,vM+j}(z) / mu(1 - 1/N)` gets a lower and an upper
//! bound at the point. Lower bounds come from the nearest center
//! (`|<eta,zeta>|^N` minus the other centers' moduli, in log domain) or, for
//! moderate degrees, from direct complex evaluation minus a rounding
//! allowance. Upper bounds use direct evaluation when available and the
//! closed form `B |z|^N / mu` otherwise.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{FamilyKind, Level, WitnessFamily};
use super::params::{power_degree, q_degree, tau_owner, tau_power, Mode, TailPolicy};
use crate::error::{Error, Result};
use crate::logmag::{ln_neg_ln_one_minus, ln_pow_modulus, LogMag};
use crate::poly::{cpow, zonal_sum_bound_scaled};
use crate::rng::{self, tag};
use crate::sphere::{distance, inner, UnitVector};

/// Relative slack on computed weights.
const WEIGHT_RTOL: f64 = 1e-13;

/// A point `z = (1 - exp(ln_gap)) eta` of the ball.
#[derive(Clone, Debug)]
pub struct BallPoint {
    pub eta: Vec<Complex64>,
    pub ln_gap: f64,
}

impl BallPoint {
    pub fn new(eta: &UnitVector, modulus: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&modulus) {
            return Err(Error::domain(format!("|z| = {modulus} outside [0,1)")));
        }
        Ok(BallPoint {
            eta: eta.coords().to_vec(),
            ln_gap: (-modulus).ln_1p(),
        })
    }

    pub fn modulus(&self) -> f64 {
        1.0 - self.ln_gap.exp()
    }

    pub fn z(&self) -> Vec<Complex64> {
        let r = 1.0 - self.ln_gap.exp();
        self.eta.iter().map(|c| c * r).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermBound {
    pub v: u32,
    /// Best certified lower bound on the term modulus, if any route applies.
    pub lower: Option<f64>,
    pub lower_magnitude: Option<f64>,
    pub lower_pointwise: Option<f64>,
    pub upper: f64,
}

/// Per-level bounds for the series `(kind, i, j)` and the bound on levels
/// beyond the stored depth.
pub fn term_bounds(fam: &WitnessFamily, kind: FamilyKind, i: u32, j: u32, pt: &BallPoint) -> Result<(Vec<TermBound>, f64)> {
    let l = tau_power(fam.params.m, i as u64, j)?;
    let terms = fam
        .column(kind, j)?
        .into_iter()
        .map(|level| level_term(fam, level, l, pt))
        .collect();
    let tail = match fam.params.tail {
        TailPolicy::Truncated => 0.0,
        TailPolicy::Infinite => beyond_depth(fam, kind, j, pt),
    };
    Ok((terms, tail))
}

fn level_term(fam: &WitnessFamily, level: &Level, class: u32, pt: &BallPoint) -> TermBound {
    let n = fam.params.n;
    let ln_zn = ln_pow_modulus(pt.ln_gap, level.degree.ln).ln();
    let inv_w = (-level.ln_weight).exp();
    let Some(c) = level.constructed() else {
        return TermBound {
            v: level.v,
            lower: None,
            lower_magnitude: None,
            lower_pointwise: None,
            upper: level.zonal_bound * (ln_zn - level.ln_weight).exp() * (1.0 + WEIGHT_RTOL),
        };
    };
    let members = level.class_members(class);
    if members.is_empty() {
        return TermBound {
            v: level.v,
            lower: Some(0.0),
            lower_magnitude: Some(0.0),
            lower_pointwise: Some(0.0),
            upper: 0.0,
        };
    }
    let points = c.set.points();
    let big_n = level.degree.ln.exp();

    // Nearest center in the class, lowest index on ties.
    let dists: Vec<f64> = members.iter().map(|&k| distance(&pt.eta, points[k].coords())).collect();
    let near = dists
        .iter()
        .enumerate()
        .fold(0, |best, (k, &d)| if d < dists[best] { k } else { best });
    let ln_pow = |d: f64| LogMag::from_ln(0.5 * big_n * (-d * d).ln_1p());
    let lead = ln_pow(dists[near]);
    let others: LogMag = dists.iter().enumerate().filter(|&(k, _)| k != near).map(|(_, &d)| ln_pow(d)).sum();
    let scale = (ln_zn - level.ln_weight).exp();
    let lower_magnitude = Some(lead.signed_diff(others) * scale * (1.0 - WEIGHT_RTOL));

    let closed_bound = if c.overfull {
        members.len() as f64
    } else {
        (members.len() as f64).min(level.zonal_bound)
    };
    let mut upper = closed_bound * scale * (1.0 + WEIGHT_RTOL);
    let mut lower_pointwise = None;
    if let Some(d) = level.pointwise_degree() {
        let z = pt.z();
        let mut value = Complex64::new(0.0, 0.0);
        let mut allowance = 0.0;
        let per_term = (d as f64 * (n as f64 + 4.0) + 8.0) * f64::EPSILON;
        for &k in &members {
            let t = inner(&z, points[k].coords());
            value += cpow(t, d);
            let a = (t.norm() + (n as f64 + 1.0) * f64::EPSILON).min(1.0);
            allowance += per_term * a.powi(d.saturating_sub(1).min(i32::MAX as u64) as i32);
        }
        let modulus = value.norm();
        lower_pointwise = Some((modulus - allowance).max(0.0) * inv_w * (1.0 - WEIGHT_RTOL));
        upper = upper.min((modulus + allowance) * inv_w * (1.0 + WEIGHT_RTOL));
    }
    let lower = match (lower_magnitude, lower_pointwise) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    TermBound {
        v: level.v,
        lower,
        lower_magnitude,
        lower_pointwise,
        upper,
    }
}

/// Bound on `sum_{k > V} B |z|^{N_k} / mu(1 - 1/N_k)`, summed explicitly
/// until the ratio bound `(p^M + 1)^beta |z|^{N_{k+1} - N_k}` closes the
/// remainder geometrically.
fn beyond_depth(fam: &WitnessFamily, kind: FamilyKind, j: u32, pt: &BallPoint) -> f64 {
    let params = &fam.params;
    let w = &params.weight;
    let m = params.m as u64;
    let degree = |e: u64| match kind {
        FamilyKind::G => power_degree(params.p, e),
        FamilyKind::H => q_degree(params.p, e),
    };
    let ratio_base = w.beta() * ((params.p as f64).powi(params.m as i32) + 1.0).ln();
    let ln_l = ln_neg_ln_one_minus(pt.ln_gap);
    let mut sum = 0.0;
    let mut k = params.depth as u64 + 1;
    for _ in 0..10_000 {
        let e = k * m + j as u64;
        let d = degree(e);
        let ln_w = w.ln_at_gap(-d.ln);
        let radius = (-params.a.ln() - 0.5 * d.ln).exp();
        let target = radius.min(1.0);
        let bound = match zonal_sum_bound_scaled(params.n, target * target * d.ln.exp()) {
            Ok(b) => b,
            Err(_) => return f64::INFINITY,
        };
        let term = bound * (ln_pow_modulus(pt.ln_gap, d.ln).ln() - ln_w).exp() * (1.0 + WEIGHT_RTOL);
        sum += term;
        let next = degree(e + m);
        let ln_step = ln_l + log_diff_exp(next.ln, d.ln);
        let rho = (ratio_base - ln_step.exp()).exp();
        let normal_range = 1.0 - (-d.ln).exp() >= w.delta0() && radius < 1.0;
        if normal_range && rho < 1.0 {
            let rest = term * rho / (1.0 - rho);
            if rest <= 1e-16 * sum || rest == 0.0 {
                return sum + rest;
            }
        }
        k += 1;
    }
    f64::INFINITY
}

/// `ln(exp(a) - exp(b))` for `a > b`.
fn log_diff_exp(a: f64, b: f64) -> f64 {
    a + (-(b - a).exp()).ln_1p()
}

/// `max_v (lower_v - sum_{k != v} upper_k - tail)`, a certified lower bound
/// on the modulus of the series `(kind, i, j)` at the point.
pub fn series_lower_bound(fam: &WitnessFamily, kind: FamilyKind, i: u32, j: u32, pt: &BallPoint) -> Result<Option<f64>> {
    let (terms, tail) = term_bounds(fam, kind, i, j, pt)?;
    let total_upper: f64 = terms.iter().map(|t| t.upper).sum();
    Ok(terms
        .iter()
        .filter_map(|t| t.lower.map(|lo| lo - (total_upper - t.upper) - tail))
        .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b)))))
}

/// `|sum_v P_{i,vM+j}(z) / mu_v|` by complex arithmetic over the stored
/// levels; `None` unless every level is constructed with a moderate degree.
pub fn direct_abs(fam: &WitnessFamily, kind: FamilyKind, i: u32, j: u32, z: &[Complex64]) -> Result<Option<f64>> {
    let l = tau_power(fam.params.m, i as u64, j)?;
    let mut total = Complex64::new(0.0, 0.0);
    for level in fam.column(kind, j)? {
        let (Some(c), Some(d)) = (level.constructed(), level.pointwise_degree()) else {
            return Ok(None);
        };
        let sum: Complex64 = level
            .class_members(l)
            .into_iter()
            .map(|k| cpow(inner(z, c.set.points()[k].coords()), d))
            .sum();
        total += sum * (-level.ln_weight).exp();
    }
    Ok(Some(total.norm()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBound {
    /// Series index owning the nearest center.
    pub i: u32,
    pub bound: f64,
    pub i1_lower: f64,
    pub i1_magnitude: Option<f64>,
    pub i1_pointwise: Option<f64>,
    pub i2_upper: f64,
    pub i3_upper: f64,
    /// The recomputed leading term fell below `2 / (27 mu(1 - 1/N))`.
    pub below_reference_i1: bool,
}

/// Range of `ln(1 - |z|)` on the shell of level `(kind, j, v)`.
pub fn shell_gap_range(fam: &WitnessFamily, kind: FamilyKind, j: u32, v: u32) -> (f64, f64) {
    let e = v as f64 * fam.params.m as f64 + j as f64;
    let ln_p = (fam.params.p as f64).ln();
    let (lo, hi) = match kind {
        FamilyKind::G => (e + 0.5, e),
        FamilyKind::H => (e + 1.0, e + 0.5),
    };
    (-lo * ln_p, -hi * ln_p)
}

/// Lower bound on `|g_{i,j}(z)|` (or `h`) at a point of the level's shell,
/// with `i` chosen so that the nearest center of the level belongs to the
/// leading polynomial.
pub fn certified_lower_bound(
    fam: &WitnessFamily,
    kind: FamilyKind,
    pt: &BallPoint,
    j: u32,
    v: u32,
) -> Result<CertifiedBound> {
    let level = fam.level(kind, j, v)?;
    let (lo, hi) = shell_gap_range(fam, kind, j, v);
    let slack = 1e-12 * lo.abs();
    if !(pt.ln_gap >= lo - slack && pt.ln_gap <= hi + slack) {
        return Err(Error::domain(format!(
            "|z| = {} outside the shell of level {} j={j} v={v}",
            pt.modulus(),
            kind.name()
        )));
    }
    let c = level.constructed().ok_or_else(|| {
        Error::LevelUnavailable(format!("{} j={j} v={v} has no point set", kind.name()))
    })?;
    let (near, _) = c.set.nearest(&pt.eta);
    let i = tau_owner(fam.params.m, j, c.classes[near]);
    let (terms, tail) = term_bounds(fam, kind, i, j, pt)?;
    let own = &terms[v as usize];
    let i1_lower = own.lower.unwrap_or(0.0);
    let i2_upper: f64 = terms[..v as usize].iter().map(|t| t.upper).sum();
    let i3_upper: f64 = terms[v as usize + 1..].iter().map(|t| t.upper).sum::<f64>() + tail;
    Ok(CertifiedBound {
        i,
        bound: i1_lower - i2_upper - i3_upper,
        i1_lower,
        i1_magnitude: own.lower_magnitude,
        i1_pointwise: own.lower_pointwise,
        i2_upper,
        i3_upper,
        below_reference_i1: i1_lower < 2.0 / 27.0 * (-level.ln_weight).exp(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub family: FamilyKind,
    pub j: u32,
    pub v: u32,
    pub exponent: u64,
    pub samples: usize,
    /// `verified` or `unverified-<reason>`.
    pub coverage: String,
    /// Smallest `mu(|z|) max_{i,j} bound` over the samples.
    pub min_mu_bound: Option<f64>,
    pub argmin_modulus: Option<f64>,
    pub argmin_direction: Option<Vec<f64>>,
    /// Samples whose recomputed leading term fell below `2/(27 mu)`.
    pub i1_below_reference: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meets_reference: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub mode: Mode,
    pub samples_per_shell: usize,
    pub seed: u64,
    pub shells: Vec<ShellRow>,
    /// Smallest per-shell minimum over the verified shells.
    pub c_emp: Option<f64>,
    pub c_emp_positive: bool,
    /// `1/(20 p^{beta/2})`, strict mode only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_constant: Option<f64>,
    /// Per-shell `(|z|, mu(|z|) bound)` samples, in shell order.
    #[serde(skip)]
    pub curves: Vec<Vec<(f64, f64)>>,
}

struct Sample {
    modulus: f64,
    direction: Vec<f64>,
    mu_bound: f64,
    i1_below: bool,
}

/// Samples every listed shell of both families and records the smallest
/// certified `mu(|z|) max_{i,j} |f_{i,j}(z)|`.
pub fn verify_growth(fam: &WitnessFamily, shells: &[(u32, u32)], samples: usize, seed: u64) -> Result<GrowthReport> {
    if shells.is_empty() {
        return Err(Error::argument("verify_growth needs at least one shell"));
    }
    if samples == 0 {
        return Err(Error::argument("verify_growth needs at least one sample per shell"));
    }
    let reference = (fam.params.mode == Mode::Strict).then(|| fam.params.reference_constant());
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut index = 0u64;
    for &(j, v) in shells {
        for kind in [FamilyKind::G, FamilyKind::H] {
            let level = fam.level(kind, j, v)?;
            let shell_id = index;
            index += 1;
            let mut row = ShellRow {
                family: kind,
                j,
                v,
                exponent: level.exponent,
                samples: 0,
                coverage: "verified".into(),
                min_mu_bound: None,
                argmin_modulus: None,
                argmin_direction: None,
                i1_below_reference: 0,
                meets_reference: None,
            };
            if let super::family::LevelContent::Unconstructed { reason } = &level.content {
                let short = reason.split(':').next().unwrap_or("unconstructed");
                row.coverage = format!("unverified-{short}");
                rows.push(row);
                curves.push(Vec::new());
                continue;
            }
            let (lo, hi) = shell_gap_range(fam, kind, j, v);
            let results = (0..samples)
                .into_par_iter()
                .map(|s| shell_sample(fam, kind, j, v, lo, hi, seed, shell_id, s as u64))
                .collect::<Result<Vec<_>>>()?;
            row.samples = samples;
            row.i1_below_reference = results.iter().filter(|s| s.i1_below).count();
            let worst = results
                .iter()
                .enumerate()
                .fold(0, |b, (k, s)| if s.mu_bound < results[b].mu_bound { k } else { b });
            row.min_mu_bound = Some(results[worst].mu_bound);
            row.argmin_modulus = Some(results[worst].modulus);
            row.argmin_direction = Some(results[worst].direction.clone());
            row.meets_reference = reference.map(|r| results[worst].mu_bound >= r);
            curves.push(results.iter().map(|s| (s.modulus, s.mu_bound)).collect());
            rows.push(row);
        }
    }
    let c_emp = rows
        .iter()
        .filter(|r| r.coverage == "verified")
        .filter_map(|r| r.min_mu_bound)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
    Ok(GrowthReport {
        mode: fam.params.mode,
        samples_per_shell: samples,
        seed,
        shells: rows,
        c_emp,
        c_emp_positive: c_emp.is_some_and(|c| c > 0.0),
        reference_constant: reference,
        curves,
    })
}

#[allow(clippy::too_many_arguments)]
fn shell_sample(
    fam: &WitnessFamily,
    kind: FamilyKind,
    j: u32,
    v: u32,
    lo: f64,
    hi: f64,
    seed: u64,
    shell_id: u64,
    s: u64,
) -> Result<Sample> {
    use rand::Rng as _;
    let mut rng = rng::stream(seed, tag::GROWTH + (shell_id << 28) + s);
    let eta = rng::unit_sphere(&mut rng, fam.params.n);
    let u: f64 = rng.random();
    let pt = BallPoint {
        eta,
        ln_gap: lo + (hi - lo) * u,
    };
    let m = fam.params.m;
    let mut best = f64::NEG_INFINITY;
    for i in 1..=m {
        for jj in 1..=m {
            if let Some(b) = series_lower_bound(fam, kind, i, jj, &pt)? {
                best = best.max(b);
            }
        }
    }
    let own = certified_lower_bound(fam, kind, &pt, j, v)?;
    let mu = fam.params.weight.ln_at_gap(pt.ln_gap).exp();
    Ok(Sample {
        modulus: 1.0 - pt.ln_gap.exp(),
        direction: pt.eta.iter().flat_map(|c| [c.re, c.im]).collect(),
        mu_bound: mu * best,
        i1_below: own.below_reference_i1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::NormalWeight;
    use crate::witness::family::{build_witness_family, BuildOptions};
    use crate::witness::params::WitnessParams;

    fn micro() -> WitnessFamily {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let params = WitnessParams::new(2, 1.0, 2, 2, Mode::Micro, 1, w).unwrap();
        build_witness_family(params, BuildOptions::default(), 5).unwrap()
    }

    #[test]
    fn bounds_never_exceed_direct_values() {
        let fam = micro();
        let mut rng = rng::stream(9, 0);
        for s in 0..200 {
            let eta = UnitVector::random(&mut rng, 2);
            let (kind, j, v) = [(FamilyKind::G, 1, 0), (FamilyKind::G, 2, 1), (FamilyKind::H, 1, 1), (FamilyKind::H, 2, 0)][s % 4];
            let (lo, hi) = shell_gap_range(&fam, kind, j, v);
            let pt = BallPoint {
                eta: eta.coords().to_vec(),
                ln_gap: lo + (hi - lo) * (s as f64 / 200.0),
            };
            let cb = certified_lower_bound(&fam, kind, &pt, j, v).unwrap();
            assert!(cb.i2_upper >= 0.0 && cb.i3_upper >= 0.0);
            let direct = direct_abs(&fam, kind, cb.i, j, &pt.z()).unwrap().unwrap();
            assert!(cb.bound <= direct + 1e-9, "{} > {direct}", cb.bound);
            for i in 1..=2 {
                if let Some(b) = series_lower_bound(&fam, kind, i, j, &pt).unwrap() {
                    assert!(b <= direct_abs(&fam, kind, i, j, &pt.z()).unwrap().unwrap() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn shell_precondition_is_enforced() {
        let fam = micro();
        let eta = UnitVector::basis(2, 0);
        let pt = BallPoint::new(&eta, 0.1).unwrap();
        assert!(matches!(certified_lower_bound(&fam, FamilyKind::G, &pt, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn unconstructed_level_is_unavailable() {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let params = WitnessParams::new(2, 1.0, 2, 2, Mode::Micro, 1, w).unwrap();
        let opts = BuildOptions {
            cardinality_budget: 10,
            ..Default::default()
        };
        let fam = build_witness_family(params, opts, 1).unwrap();
        let (lo, _) = shell_gap_range(&fam, FamilyKind::G, 2, 1);
        let pt = BallPoint {
            eta: UnitVector::basis(2, 0).coords().to_vec(),
            ln_gap: lo,
        };
        assert!(matches!(
            certified_lower_bound(&fam, FamilyKind::G, &pt, 2, 1),
            Err(Error::LevelUnavailable(_))
        ));
        let rep = verify_growth(&fam, &[(2, 1)], 4, 0).unwrap();
        assert!(rep.shells.iter().any(|r| r.coverage == "unverified-cardinality"));
    }

    #[test]
    fn growth_is_positive_on_micro_family() {
        let fam = micro();
        let rep = verify_growth(&fam, &[(1, 0), (2, 0), (1, 1), (2, 1)], 100, 3).unwrap();
        assert_eq!(rep.shells.len(), 8);
        assert!(rep.c_emp_positive, "{:?}", rep.c_emp);
    }

    #[test]
    fn more_samples_never_raise_the_minimum() {
        let fam = micro();
        let small = verify_growth(&fam, &[(1, 0)], 20, 4).unwrap();
        let large = verify_growth(&fam, &[(1, 0)], 60, 4).unwrap();
        for (a, b) in small.shells.iter().zip(&large.shells) {
            assert!(b.min_mu_bound.unwrap() <= a.min_mu_bound.unwrap());
        }
    }

    #[test]
    fn infinite_tail_is_small_and_finite() {
        let fam = micro();
        let mut fam_inf = fam.clone();
        fam_inf.params.tail = TailPolicy::Infinite;
        let (lo, hi) = shell_gap_range(&fam, FamilyKind::G, 1, 1);
        let pt = BallPoint {
            eta: UnitVector::basis(2, 0).coords().to_vec(),
            ln_gap: 0.5 * (lo + hi),
        };
        let (_, tail) = term_bounds(&fam_inf, FamilyKind::G, 1, 1, &pt).unwrap();
        assert!(tail.is_finite() && tail > 0.0);
        let (_, none) = term_bounds(&fam, FamilyKind::G, 1, 1, &pt).unwrap();
        assert_eq!(none, 0.0);
    }
}
