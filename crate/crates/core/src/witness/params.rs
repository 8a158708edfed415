//! Parameter selection and the radius/degree schedules of the witness family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::zonal_sum_excess;
use crate::sphere::{decompose_separated, maximal_separated_set};
use crate::weights::NormalWeight;

/// Largest `p` tried by [`select_p`].
pub const P_SCAN_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Full constants: zonal excess `1/27`, tail shares `1/200`.
    Strict,
    /// Relaxed constants `1/3` and `1/20`.
    Desk,
    /// Every parameter supplied by the user; constraints only recorded.
    Micro,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Mode::Strict),
            "desk" => Ok(Mode::Desk),
            "micro" => Ok(Mode::Micro),
            _ => Err(Error::Config(format!("unknown mode `{s}` (expected strict, desk or micro)"))),
        }
    }
}

/// Right-hand sides of the selection inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Bound on `sum_{m>=1} (m+2)^{2n-2} exp(-m^2 / (2A^2))`.
    pub zonal_excess: f64,
    /// Bound on each of the two neighbouring-level shares.
    pub tail_share: f64,
}

impl Constants {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Strict | Mode::Micro => Constants {
                zonal_excess: 1.0 / 27.0,
                tail_share: 1.0 / 200.0,
            },
            Mode::Desk => Constants {
                zonal_excess: 1.0 / 3.0,
                tail_share: 1.0 / 20.0,
            },
        }
    }
}

/// Which contributions beyond the stored depth are charged to the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailPolicy {
    /// The family is the finite sum over `v = 0..=depth`.
    Truncated,
    /// Levels beyond the depth are bounded in closed form.
    Infinite,
}

/// Largest `A = i / N` (`N = round(1/grid)`) in `(0,1)` with
/// `sum_{m>=1} (m+2)^{2n-2} exp(-m^2/(2A^2)) <= bound`.
pub fn select_a(n: usize, grid: f64, bound: f64) -> Result<f64> {
    if !(grid > 0.0 && grid <= 0.01) {
        return Err(Error::argument(format!("grid step {grid} outside (0, 0.01]")));
    }
    if n == 0 {
        return Err(Error::argument("dimension must be at least 1"));
    }
    let steps = (1.0 / grid).round() as u64;
    for i in (1..steps).rev() {
        let a = i as f64 / steps as f64;
        if zonal_sum_excess(n, 1.0 / (a * a))? <= bound {
            return Ok(a);
        }
    }
    Err(Error::argument(format!("no grid value of A satisfies the bound {bound}")))
}

/// Subset of the four inequalities enforced by [`select_p`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PConstraints {
    /// `1 - 1/p >= delta0`.
    pub radius: bool,
    /// `1/3 <= (1 - 1/p)^p <= 1/2`.
    pub shell: bool,
    /// `1/(p^{alpha M} - 1) <= tail_share`.
    pub inner: bool,
    /// The outer-tail inequality in `p^{beta M}` and `2^{-p^{M-1/2}}`.
    pub outer: bool,
}

impl PConstraints {
    pub const ALL: PConstraints = PConstraints {
        radius: true,
        shell: true,
        inner: true,
        outer: true,
    };
    pub const NONE: PConstraints = PConstraints {
        radius: false,
        shell: false,
        inner: false,
        outer: false,
    };
}

impl Default for PConstraints {
    fn default() -> Self {
        Self::ALL
    }
}

/// Names of the enabled inequalities that `p` violates.
pub fn p_violations(w: &NormalWeight, m: u32, p: u64, which: PConstraints, k: &Constants) -> Vec<&'static str> {
    let pf = p as f64;
    let ln_p = pf.ln();
    let mf = m as f64;
    let mut out = Vec::new();
    if which.radius && 1.0 - 1.0 / pf < w.delta0() {
        out.push("radius");
    }
    if which.shell {
        let v = (pf * (-1.0 / pf).ln_1p()).exp();
        if !(1.0 / 3.0 <= v && v <= 0.5) {
            out.push("shell");
        }
    }
    if which.inner {
        let denom = (w.alpha() * mf * ln_p).exp_m1();
        if !(denom > 0.0 && 1.0 / denom <= k.tail_share) {
            out.push("inner");
        }
    }
    if which.outer && !outer_holds(w.beta(), mf, ln_p, k.tail_share) {
        out.push("outer");
    }
    out
}

/// `p^{bM} 2^{-p^{M-1/2}} / (1 - p^{bM} 2^{-(p^{2M-1/2} - p^{M-1/2})}) <= share`,
/// failing when the denominator is not positive.
fn outer_holds(beta: f64, m: f64, ln_p: f64, share: f64) -> bool {
    let ln2 = std::f64::consts::LN_2;
    let e1 = ((m - 0.5) * ln_p).exp();
    let e2 = e1 * (m * ln_p).exp_m1();
    let ln_base = beta * m * ln_p;
    let ln_num = ln_base - e1 * ln2;
    let ln_x = ln_base - e2 * ln2;
    if !(ln_x < 0.0) {
        return false;
    }
    let denom = -ln_x.exp_m1();
    ln_num - denom.ln() <= share.ln()
}

/// Smallest `p >= 2` meeting every enabled inequality.
pub fn select_p(w: &NormalWeight, m: u32, which: PConstraints, k: &Constants) -> Result<u64> {
    if m == 0 {
        return Err(Error::argument("M must be at least 1"));
    }
    for p in 2..=P_SCAN_CAP {
        if p_violations(w, m, p, which, k).is_empty() {
            return Ok(p);
        }
    }
    Err(Error::ScanCap {
        cap: P_SCAN_CAP,
        binding: p_violations(w, m, P_SCAN_CAP, which, k).join(", "),
    })
}

/// Largest class count over the probes when an `(A/2) delta`-separated
/// maximal set is colored at separation `delta`.
pub fn estimate_m(n: usize, a: f64, probes: &[f64], seed: u64, budget: u64) -> Result<u32> {
    if probes.is_empty() {
        return Err(Error::argument("estimate_M needs at least one probe"));
    }
    if !(a > 0.0 && a <= 2.0) {
        return Err(Error::argument(format!("A = {a} outside (0, 2]")));
    }
    let mut best = 0;
    for (i, &delta) in probes.iter().enumerate() {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::argument(format!("probe {delta} outside (0,1)")));
        }
        let set = maximal_separated_set(n, (a / 2.0 * delta).min(1.0), seed.wrapping_add(i as u64), budget)?;
        let classes = decompose_separated(&set, delta.max(set.separation()))?;
        best = best.max(classes.len());
    }
    Ok(best as u32)
}

/// `delta_{j,v} = 1 / (A p^{(vM+j)/2})`.
pub fn delta_schedule(a: f64, p: u64, m: u32, j: u32, v: u32) -> Result<f64> {
    check_j(m, j)?;
    let e = v as f64 * m as f64 + j as f64;
    Ok((-a.ln() - 0.5 * e * (p as f64).ln()).exp())
}

fn check_j(m: u32, j: u32) -> Result<()> {
    if m == 0 || j == 0 || j > m {
        return Err(Error::argument(format!("index j = {j} outside 1..={m}")));
    }
    Ok(())
}

/// The cyclic shift `j -> j+1 (j < M), M -> 1` applied `i` times.
pub fn tau_power(m: u32, i: u64, j: u32) -> Result<u32> {
    check_j(m, j)?;
    Ok(((j as u64 - 1 + i) % m as u64) as u32 + 1)
}

/// The `i in 1..=M` with `tau^i(j) = l`.
pub fn tau_owner(m: u32, j: u32, l: u32) -> u32 {
    let r = (l as i64 - j as i64).rem_euclid(m as i64) as u32;
    if r == 0 {
        m
    } else {
        r
    }
}

/// A polynomial degree, exact when it fits in `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degree {
    pub ln: f64,
    pub exact: Option<u64>,
}

impl Degree {
    pub fn exact(d: u64) -> Self {
        Degree {
            ln: (d as f64).ln(),
            exact: Some(d),
        }
    }
}

/// `p^e`.
pub fn power_degree(p: u64, e: u64) -> Degree {
    match u32::try_from(e).ok().and_then(|e| p.checked_pow(e)) {
        Some(d) => Degree::exact(d),
        None => Degree {
            ln: e as f64 * (p as f64).ln(),
            exact: None,
        },
    }
}

/// `q_k = ceil(p^{k + 1/2})`, computed exactly as `ceil(sqrt(p^{2k+1}))`
/// while that fits in 128 bits.
pub fn q_degree(p: u64, k: u64) -> Degree {
    let square = u32::try_from(2 * k + 1).ok().and_then(|e| (p as u128).checked_pow(e));
    if let Some(x) = square {
        let s = x.isqrt();
        let q = if s * s == x { s } else { s + 1 };
        if let Ok(q) = u64::try_from(q) {
            return Degree::exact(q);
        }
    }
    Degree {
        ln: (k as f64 + 0.5) * (p as f64).ln(),
        exact: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    pub n: usize,
    pub a: f64,
    pub p: u64,
    pub m: u32,
    pub mode: Mode,
    /// Deepest level index `V`.
    pub depth: u32,
    pub weight: NormalWeight,
    pub constants: Constants,
    pub tail: TailPolicy,
    /// Inequalities the parameters fail (recorded, micro mode only).
    #[serde(default)]
    pub violations: Vec<String>,
}

impl WitnessParams {
    /// Validates the parameters against the constants of their mode.
    /// Strict and desk modes reject violations; micro mode records them.
    pub fn new(n: usize, a: f64, p: u64, m: u32, mode: Mode, depth: u32, weight: NormalWeight) -> Result<Self> {
        if n < 2 {
            return Err(Error::argument("the witness construction needs n >= 2"));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::argument(format!("A = {a} outside (0,1]")));
        }
        if p < 2 || m == 0 {
            return Err(Error::argument("need p >= 2 and M >= 1"));
        }
        let constants = Constants::for_mode(mode);
        let mut violations: Vec<String> = Vec::new();
        if zonal_sum_excess(n, 1.0 / (a * a))? > constants.zonal_excess {
            violations.push("zonal-excess".into());
        }
        violations.extend(p_violations(&weight, m, p, PConstraints::ALL, &constants).into_iter().map(String::from));
        if mode != Mode::Micro && !violations.is_empty() {
            return Err(Error::argument(format!(
                "{mode:?} mode parameters violate: {}",
                violations.join(", ")
            )));
        }
        let tail = match mode {
            Mode::Micro => TailPolicy::Truncated,
            _ => TailPolicy::Infinite,
        };
        Ok(WitnessParams {
            n,
            a,
            p,
            m,
            mode,
            depth,
            weight,
            constants,
            tail,
            violations,
        })
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Self {
        self.tail = tail;
        self
    }

    /// `1 / (20 p^{beta/2})`, the growth constant the construction guarantees
    /// under the strict constants.
    pub fn reference_constant(&self) -> f64 {
        1.0 / (20.0 * (self.p as f64).powf(self.weight.beta() / 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weight(alpha: f64, beta: f64, delta0: f64) -> NormalWeight {
        NormalWeight::power(0.5, alpha, beta, delta0).unwrap()
    }

    #[test]
    fn select_a_matches_direct_scan() {
        let strict = Constants::for_mode(Mode::Strict);
        assert_eq!(select_a(2, 0.01, strict.zonal_excess).unwrap(), 0.30);
        assert_eq!(select_a(1, 0.01, strict.zonal_excess).unwrap(), 0.38);
        assert_eq!(select_a(3, 0.01, strict.zonal_excess).unwrap(), 0.25);
        let desk = Constants::for_mode(Mode::Desk);
        assert_eq!(select_a(2, 0.01, desk.zonal_excess).unwrap(), 0.38);
        assert!(select_a(2, 0.1, 1.0).is_err());
    }

    #[test]
    fn select_p_single_constraints() {
        let k = Constants::for_mode(Mode::Strict);
        let w = weight(0.4, 0.6, 0.5);
        let shell = PConstraints { shell: true, ..PConstraints::NONE };
        assert_eq!(select_p(&w, 3, shell, &k).unwrap(), 6);
        let radius = PConstraints { radius: true, ..PConstraints::NONE };
        assert_eq!(select_p(&weight(0.4, 0.6, 0.9), 3, radius, &k).unwrap(), 10);
        let inner = PConstraints { inner: true, ..PConstraints::NONE };
        assert_eq!(select_p(&w, 3, inner, &k).unwrap(), 84);
        assert_eq!(select_p(&w, 3, PConstraints::ALL, &k).unwrap(), 84);
        assert!(p_violations(&w, 3, 84, PConstraints::ALL, &k).is_empty());
        assert!(select_p(&weight(0.4, 0.6, 0.9), 3, PConstraints::ALL, &k).unwrap() >= 10);
    }

    #[test]
    fn select_p_reports_binding_constraint() {
        let k = Constants {
            zonal_excess: 1.0 / 27.0,
            tail_share: 1e-300,
        };
        let w = weight(0.01, 0.6, 0.5);
        match select_p(&w, 1, PConstraints::ALL, &k) {
            Err(Error::ScanCap { cap, binding }) => {
                assert_eq!(cap, P_SCAN_CAP);
                assert!(binding.contains("inner"));
            }
            other => panic!("expected scan cap, got {other:?}"),
        }
    }

    #[test]
    fn outer_constraint_fails_on_nonpositive_denominator() {
        // p = 2, M = 1, beta large: the base overwhelms the power of two.
        assert!(!outer_holds(10.0, 1.0, 2f64.ln(), 1.0));
    }

    #[test]
    fn delta_schedule_closed_form_and_recursion() {
        let d = delta_schedule(0.3, 6, 2, 2, 0).unwrap();
        assert!((d - 1.0 / 1.8).abs() < 1e-15);
        for j in 1..=3 {
            for v in 1..20 {
                let cur = delta_schedule(0.3, 6, 3, j, v).unwrap();
                let prev = delta_schedule(0.3, 6, 3, j, v - 1).unwrap();
                assert!((cur - prev / 6f64.powf(1.5)).abs() <= 1e-12 * cur);
                let ident = 0.09 * 6f64.powi((3 * v + j) as i32) * cur * cur;
                assert!((ident - 1.0).abs() < 1e-12);
            }
        }
        assert!(delta_schedule(0.3, 6, 3, 0, 0).is_err());
        assert!(delta_schedule(0.3, 6, 3, 4, 0).is_err());
    }

    #[test]
    fn tau_cycles() {
        assert_eq!(tau_power(3, 1, 1).unwrap(), 2);
        assert_eq!(tau_power(3, 1, 3).unwrap(), 1);
        for m in 1..6 {
            for j in 1..=m {
                assert_eq!(tau_power(m, m as u64, j).unwrap(), j);
                for l in 1..=m {
                    let i = tau_owner(m, j, l);
                    assert!((1..=m).contains(&i));
                    assert_eq!(tau_power(m, i as u64, j).unwrap(), l);
                }
            }
        }
        assert!(tau_power(3, 1, 4).is_err());
    }

    #[test]
    fn q_degrees() {
        let q: Vec<u64> = (1..=8).map(|k| q_degree(2, k).exact.unwrap()).collect();
        assert_eq!(q, [3, 6, 12, 23, 46, 91, 182, 363]);
        // Perfect-square base: p^{k+1/2} is an integer.
        assert_eq!(q_degree(4, 1).exact, Some(8));
        let big = q_degree(6, 40);
        assert!(big.exact.is_none());
        assert!((big.ln - 40.5 * 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn estimate_m_trivial_ratio() {
        assert_eq!(estimate_m(2, 2.0, &[0.4], 1, 2000).unwrap(), 1);
        assert!(estimate_m(2, 0.3, &[], 1, 10).is_err());
    }

    #[test]
    fn params_validation() {
        let w = weight(0.4, 0.6, 0.7);
        assert!(WitnessParams::new(2, 1.0, 2, 2, Mode::Micro, 1, w.clone()).is_ok());
        assert!(WitnessParams::new(2, 1.0, 2, 2, Mode::Strict, 1, w.clone()).is_err());
        assert!(WitnessParams::new(1, 1.0, 2, 2, Mode::Micro, 1, w.clone()).is_err());
        let micro = WitnessParams::new(2, 1.0, 2, 2, Mode::Micro, 1, w).unwrap();
        assert!(micro.violations.contains(&"zonal-excess".to_string()));
        assert_eq!(micro.tail, TailPolicy::Truncated);
    }
}
