//! Mixed-norm integrals and the integral criteria for weighted composition
//! operators `f -> u (f o phi)` from the weighted-type space into a
//! mixed-norm space.
//!
//! Radial integrals `int_0^1 F(r) dr / (1 - r)` are computed in the variable
//! `s = -ln(1 - r)`, where they become `int_0^inf F(1 - e^{-s}) ds`, with
//! composite Gauss-Legendre panels of equal width in `s` (a fixed number per
//! decade of `1 - r`). Sphere averages use one shared set of random
//! directions for every radius.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, SpherePolynomial, ZonalPolynomial};
use crate::rng::{self, tag};
use crate::weights::NormalWeight;

/// Slack allowed on `|phi(z)| <= 1` before a map is rejected.
pub const RANGE_TOL: f64 = 1e-12;

/// Grid size of the normality check applied to the target weight.
const NORMALITY_GRID: usize = 1000;

const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// A function on the closed ball that can be sampled.
pub trait BallFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[Complex64]) -> Complex64;
}

impl BallFunction for ZonalPolynomial {
    fn dim(&self) -> usize {
        SpherePolynomial::dim(self)
    }
    fn value(&self, z: &[Complex64]) -> Complex64 {
        SpherePolynomial::value(self, z)
    }
}

impl BallFunction for Polynomial {
    fn dim(&self) -> usize {
        SpherePolynomial::dim(self)
    }
    fn value(&self, z: &[Complex64]) -> Complex64 {
        SpherePolynomial::value(self, z)
    }
}

/// A complex number given either as a real or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

fn de_complex<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
    Ok(match ComplexInput::deserialize(d)? {
        ComplexInput::Real(x) => Complex64::new(x, 0.0),
        ComplexInput::Pair([re, im]) => Complex64::new(re, im),
    })
}

fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if c.im == 0.0 {
        ComplexInput::Real(c.re).serialize(s)
    } else {
        ComplexInput::Pair([c.re, c.im]).serialize(s)
    }
}

/// The multiplier `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Multiplier {
    Const {
        #[serde(deserialize_with = "de_complex", serialize_with = "ser_complex")]
        value: Complex64,
    },
    Zonal(ZonalPolynomial),
    Polynomial(Polynomial),
}

impl Multiplier {
    pub fn constant(c: f64) -> Self {
        Multiplier::Const {
            value: Complex64::new(c, 0.0),
        }
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Multiplier::Const { value } => *value,
            Multiplier::Zonal(p) => SpherePolynomial::value(p, z),
            Multiplier::Polynomial(p) => SpherePolynomial::value(p, z),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Multiplier::Const { .. } => None,
            Multiplier::Zonal(p) => Some(SpherePolynomial::dim(p)),
            Multiplier::Polynomial(p) => Some(SpherePolynomial::dim(p)),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Multiplier::Const { value } => *value == Complex64::new(0.0, 0.0),
            Multiplier::Zonal(p) => p.coeffs().iter().all(|c| c.norm() == 0.0),
            Multiplier::Polynomial(p) => p.terms().iter().all(|t| t.coeff.norm() == 0.0),
        }
    }
}

/// The self-map `phi` of the ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SelfMap {
    Identity,
    /// `z -> s z` with `0 < s <= 1`.
    Scale { s: f64 },
    /// `z -> A z` with operator norm at most 1; rows of `A`.
    Linear { matrix: Vec<Vec<Complex64>> },
    /// One polynomial per output coordinate; the range is checked at every
    /// evaluation.
    Polynomial { components: Vec<Polynomial> },
}

impl SelfMap {
    /// `|phi(z)|`.
    fn modulus(&self, z: &[Complex64]) -> Result<f64> {
        let norm2 = |v: &mut dyn Iterator<Item = Complex64>| v.map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let m = match self {
            SelfMap::Identity => norm2(&mut z.iter().copied()),
            SelfMap::Scale { s } => s * norm2(&mut z.iter().copied()),
            SelfMap::Linear { matrix } => norm2(&mut matrix.iter().map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())),
            SelfMap::Polynomial { components } => norm2(&mut components.iter().map(|p| SpherePolynomial::value(p, z))),
        };
        if m > 1.0 + RANGE_TOL {
            return Err(Error::domain(format!("|phi(z)| = {m} exceeds 1")));
        }
        Ok(m.min(1.0))
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            SelfMap::Identity => Ok(()),
            SelfMap::Scale { s } => {
                if *s > 0.0 && *s <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::argument(format!("scale {s} outside (0,1]")))
                }
            }
            SelfMap::Linear { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::argument(format!("linear map must be {n}x{n}")));
                }
                let norm = operator_norm(matrix);
                if norm > 1.0 + RANGE_TOL {
                    return Err(Error::argument(format!("linear map has operator norm {norm} > 1")));
                }
                Ok(())
            }
            SelfMap::Polynomial { components } => {
                if components.len() != n || components.iter().any(|p| SpherePolynomial::dim(p) != n) {
                    return Err(Error::argument(format!("polynomial map needs {n} components in dimension {n}")));
                }
                Ok(())
            }
        }
    }

    /// `sup |phi|` over the ball when known in closed form.
    fn sup_modulus(&self, n: usize) -> Option<f64> {
        match self {
            SelfMap::Identity => Some(1.0),
            SelfMap::Scale { s } => Some(*s),
            SelfMap::Linear { matrix } => Some(operator_norm(matrix)),
            SelfMap::Polynomial { .. } => {
                let _ = n;
                None
            }
        }
    }
}

/// Largest singular value by power iteration on `A^* A`.
fn operator_norm(a: &[Vec<Complex64>]) -> f64 {
    let n = a.len();
    let mut x: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + i as f64 * 0.1, 0.3)).collect();
    let mut sigma2 = 0.0;
    for _ in 0..500 {
        let ax: Vec<Complex64> = a.iter().map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        let y: Vec<Complex64> = (0..n).map(|j| (0..n).map(|i| a[i][j].conj() * ax[i]).sum()).collect();
        let ny = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let nx = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        let next = ny / nx;
        x = y.into_iter().map(|c| c / ny).collect();
        if (next - sigma2).abs() <= 1e-15 * next {
            sigma2 = next;
            break;
        }
        sigma2 = next;
    }
    sigma2.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolPair {
    pub dim: usize,
    pub u: Multiplier,
    pub phi: SelfMap,
}

impl SymbolPair {
    pub fn new(dim: usize, u: Multiplier, phi: SelfMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("dimension must be at least 1"));
        }
        if let Some(d) = u.dim() {
            if d != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d });
            }
        }
        phi.validate(dim)?;
        Ok(SymbolPair { dim, u, phi })
    }
}

/// Target space parameters: exponents `p`, `q` and the radial weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormParams {
    pub p: f64,
    pub q: f64,
    pub phi: NormalWeight,
}

impl MixedNormParams {
    pub fn new(p: f64, q: f64, phi: NormalWeight) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::argument(format!("exponents p = {p}, q = {q} must be positive")));
        }
        let report = phi.verify_normality(NORMALITY_GRID)?;
        if !report.pass {
            return Err(Error::argument(
                "radial weight of the mixed-norm space fails its normality check",
            ));
        }
        Ok(MixedNormParams { p, q, phi })
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Shared sphere directions.
struct Directions {
    points: Vec<Vec<Complex64>>,
}

impl Directions {
    fn new(n: usize, samples: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, tag::SPHERE_MEAN);
        Directions {
            points: (0..samples).map(|_| rng::unit_sphere(&mut rng, n)).collect(),
        }
    }
}

fn scaled(z: &[Complex64], r: f64) -> Vec<Complex64> {
    z.iter().map(|c| c * r).collect()
}

/// Mean and standard error of the mean; exact when all values agree.
fn mean_stderr(values: &[f64]) -> (f64, f64, bool) {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return (first, 0.0, true);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), false)
}

/// `M_q(f, r) = (int_S |f(r zeta)|^q d sigma)^{1/q}` by Monte Carlo.
pub fn sphere_mean<F: BallFunction + ?Sized>(f: &F, r: f64, q: f64, samples: usize, seed: u64) -> Result<Estimate> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("radius {r} outside [0,1)")));
    }
    if samples < 2 {
        return Err(Error::argument("sphere_mean needs at least two samples"));
    }
    if !(q > 0.0) {
        return Err(Error::argument(format!("exponent q = {q} must be positive")));
    }
    let dirs = Directions::new(f.dim(), samples, seed);
    Ok(sphere_mean_on(f, r, q, &dirs))
}

fn sphere_mean_on<F: BallFunction + ?Sized>(f: &F, r: f64, q: f64, dirs: &Directions) -> Estimate {
    let abs: Vec<f64> = dirs.points.iter().map(|z| f.value(&scaled(z, r)).norm()).collect();
    if abs.iter().all(|&a| a == abs[0]) {
        return Estimate {
            value: abs[0],
            stderr: 0.0,
        };
    }
    let powered: Vec<f64> = abs.iter().map(|a| a.powf(q)).collect();
    let (mean, se, _) = mean_stderr(&powered);
    let value = mean.powf(1.0 / q);
    let stderr = if mean > 0.0 { value / (q * mean) * se } else { 0.0 };
    Estimate { value, stderr }
}

/// Radial nodes in `s = -ln(1-r)` on `[0, ln(1/eps)]`.
struct RadialRule {
    /// `(s, weight)` grouped by panel, four nodes each.
    nodes: Vec<(f64, f64)>,
    panels_per_decade: usize,
}

impl RadialRule {
    fn new(panels_per_decade: usize, eps: f64) -> Self {
        let h = std::f64::consts::LN_10 / panels_per_decade as f64;
        let total = -eps.ln();
        let panels = (total / h - 1e-9).ceil() as usize;
        let mut nodes = Vec::with_capacity(4 * panels);
        for k in 0..panels {
            let a = k as f64 * h;
            let b = ((k + 1) as f64 * h).min(total);
            let half = 0.5 * (b - a);
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                nodes.push((a + half * (1.0 + x), w * half));
            }
        }
        RadialRule {
            nodes,
            panels_per_decade,
        }
    }

    fn radius(s: f64) -> f64 {
        -(-s).exp_m1()
    }

    /// Number of panels covering `[0, ln(1/eps)]`.
    fn panels_to(&self, eps: f64) -> usize {
        let h = std::f64::consts::LN_10 / self.panels_per_decade as f64;
        ((-eps.ln()) / h - 1e-9).ceil() as usize
    }
}

fn check_quadrature(radial_grid: usize, eps: f64) -> Result<()> {
    if radial_grid < 8 {
        return Err(Error::argument(format!("radial_grid {radial_grid} must be at least 8")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::argument(format!("eps_edge {eps} outside (0, 0.5)")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNorm {
    pub value: f64,
    /// `p`-th power of the norm from the quadrature part.
    pub truncated: f64,
    /// `p`-th power bound on the part beyond `1 - eps_edge`.
    pub tail: f64,
}

/// `(int_0^1 M_q^p(f,r) phi^p(r) dr/(1-r))^{1/p}`: quadrature on
/// `[0, 1-eps_edge]` plus the normality tail
/// `M_q(f,1)^p phi(1-eps)^p / (alpha p)`; `+inf` when that bound diverges.
pub fn mixed_norm<F: BallFunction + ?Sized>(
    f: &F,
    mp: &MixedNormParams,
    radial_grid: usize,
    eps_edge: f64,
    mc: MonteCarlo,
) -> Result<MixedNorm> {
    check_quadrature(radial_grid, eps_edge)?;
    if mc.samples < 2 {
        return Err(Error::argument("need at least two sphere samples"));
    }
    let dirs = Directions::new(f.dim(), mc.samples, mc.seed);
    let rule = RadialRule::new(radial_grid, eps_edge);
    let parts: Vec<f64> = rule
        .nodes
        .par_iter()
        .map(|&(s, w)| {
            let r = RadialRule::radius(s);
            let m = sphere_mean_on(f, r, mp.q, &dirs).value;
            let phi = mp.phi.ln_at_gap(-s).exp();
            w * (m * phi).powf(mp.p)
        })
        .collect();
    let truncated: f64 = parts.iter().sum();
    let edge = sphere_mean_on(f, 1.0, mp.q, &dirs).value;
    let phi_edge = mp.phi.ln_at_gap(eps_edge.ln()).exp();
    let alpha = mp.phi.alpha();
    let tail = if edge == 0.0 {
        0.0
    } else {
        (edge * phi_edge).powf(mp.p) / (alpha * mp.p)
    };
    let total = truncated + tail;
    Ok(MixedNorm {
        value: total.powf(1.0 / mp.p),
        truncated,
        tail,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeOptions {
    pub mc_samples: usize,
    /// Panels per decade of `1 - r`.
    pub radial_grid: usize,
    pub seed: u64,
    /// Relative change below which refinements count as converged.
    pub stable_rtol: f64,
    /// Growth across the edge ladder that counts as divergence.
    pub growth_factor: f64,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        ComposeOptions {
            mc_samples: 2000,
            radial_grid: 8,
            seed: 0,
            stable_rtol: 0.05,
            growth_factor: 10.0,
        }
    }
}

/// Edge distances `1 - r` at which truncated integrals are compared.
pub const EPS_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finiteness {
    Finite,
    Divergent,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub eps_edge: f64,
    /// Quadrature over `[0, 1 - eps_edge]`.
    pub truncated: f64,
    /// Extrapolated remainder `F(S) / kappa`, `+inf` if the integrand does
    /// not decay at the edge.
    pub tail: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    pub finiteness: Finiteness,
    pub ladder: Vec<LadderRow>,
    /// Total at the finest edge with twice the panels.
    pub refined_total: f64,
    pub refinement_change: f64,
    pub ladder_change: f64,
    /// `truncated(finest) / truncated(coarsest)`.
    pub ladder_growth: f64,
}

/// Radial integrand samples for one symbol configuration.
struct RadialProfile {
    rule: RadialRule,
    /// `F(s)` at every node (integrand in the `s` variable).
    values: Vec<f64>,
}

impl RadialProfile {
    fn truncated(&self, eps: f64) -> f64 {
        let nodes = 4 * self.rule.panels_to(eps);
        self.values[..nodes].iter().zip(&self.rule.nodes).map(|(v, (_, w))| v * w).sum()
    }

    /// Log-slope `kappa` of `F` over the last panel ending at `eps`, and `F`
    /// extrapolated to the edge.
    fn edge_decay(&self, eps: f64) -> (f64, f64) {
        let end = 4 * self.rule.panels_to(eps);
        let (s0, f0) = (self.rule.nodes[end - 4].0, self.values[end - 4]);
        let (s1, f1) = (self.rule.nodes[end - 1].0, self.values[end - 1]);
        if f0 <= 0.0 || f1 <= 0.0 {
            return (f64::INFINITY, 0.0);
        }
        let kappa = -(f1.ln() - f0.ln()) / (s1 - s0);
        let s_edge = -eps.ln();
        (kappa, f1 * (-kappa * (s_edge - s1)).exp())
    }
}

fn inner_integrand(
    sym: &SymbolPair,
    w: &NormalWeight,
    mp: &MixedNormParams,
    dirs: &Directions,
    r: f64,
    threshold: Option<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for zeta in &dirs.points {
        let z = scaled(zeta, r);
        let m = sym.phi.modulus(&z)?;
        if threshold.is_some_and(|t| m <= t) {
            continue;
        }
        let u = sym.u.value(&z).norm();
        if u == 0.0 {
            continue;
        }
        if m >= 1.0 {
            return Err(Error::domain("phi maps an interior point to the boundary"));
        }
        acc += (u / w.eval(m)?).powf(mp.q);
    }
    Ok((acc / dirs.points.len() as f64).powf(mp.p / mp.q))
}

fn radial_profile(
    sym: &SymbolPair,
    w: &NormalWeight,
    mp: &MixedNormParams,
    dirs: &Directions,
    panels_per_decade: usize,
    eps: f64,
    threshold: Option<f64>,
) -> Result<RadialProfile> {
    let rule = RadialRule::new(panels_per_decade, eps);
    let values = rule
        .nodes
        .par_iter()
        .map(|&(s, _)| {
            let inner = inner_integrand(sym, w, mp, dirs, RadialRule::radius(s), threshold)?;
            Ok(inner * mp.phi.ln_at_gap(-s).exp().powf(mp.p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile { rule, values })
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn validate_inputs(sym: &SymbolPair, opts: &ComposeOptions) -> Result<()> {
    if opts.mc_samples < 2 {
        return Err(Error::argument("need at least two sphere samples"));
    }
    check_quadrature(opts.radial_grid, EPS_LADDER[0])?;
    let _ = sym;
    Ok(())
}

fn ladder_rows(profile: &RadialProfile, kappa_source: &RadialProfile) -> Vec<LadderRow> {
    EPS_LADDER
        .iter()
        .map(|&eps| {
            let truncated = profile.truncated(eps);
            let (kappa, _) = kappa_source.edge_decay(eps);
            let (_, edge_value) = profile.edge_decay(eps);
            let tail = if edge_value == 0.0 {
                0.0
            } else if kappa > 0.0 {
                edge_value / kappa
            } else {
                f64::INFINITY
            };
            LadderRow {
                eps_edge: eps,
                truncated,
                tail,
                total: truncated + tail,
            }
        })
        .collect()
}

/// The boundedness integral
/// `int_0^1 (int_S |u(r xi)|^q / mu(|phi(r xi)|)^q d sigma)^{p/q} phi^p(r) dr/(1-r)`
/// with convergence diagnostics.
pub fn boundedness_integral(
    sym: &SymbolPair,
    w: &NormalWeight,
    mp: &MixedNormParams,
    opts: &ComposeOptions,
) -> Result<IntegralReport> {
    validate_inputs(sym, opts)?;
    let dirs = Directions::new(sym.dim, opts.mc_samples, opts.seed);
    let finest = *EPS_LADDER.last().expect("nonempty ladder");
    let profile = radial_profile(sym, w, mp, &dirs, opts.radial_grid, finest, None)?;
    let refined = radial_profile(sym, w, mp, &dirs, 2 * opts.radial_grid, finest, None)?;
    let ladder = ladder_rows(&profile, &profile);
    let refined_row = &ladder_rows(&refined, &refined)[EPS_LADDER.len() - 1];
    let first = &ladder[0];
    let last = &ladder[EPS_LADDER.len() - 1];
    let ladder_growth = if first.truncated > 0.0 {
        last.truncated / first.truncated
    } else {
        1.0
    };
    let refinement_change = rel_change(last.total, refined_row.total);
    let ladder_change = rel_change(first.total, last.total);
    let finiteness = if last.total == 0.0 {
        Finiteness::Finite
    } else if ladder_growth >= opts.growth_factor {
        Finiteness::Divergent
    } else if ladder_change < opts.stable_rtol && refinement_change < opts.stable_rtol {
        Finiteness::Finite
    } else {
        Finiteness::Undetermined
    };
    let value = match finiteness {
        Finiteness::Divergent => f64::INFINITY,
        _ => last.total,
    };
    Ok(IntegralReport {
        value,
        finiteness,
        ladder,
        refined_total: refined_row.total,
        refinement_change,
        ladder_change,
        ladder_growth,
    })
}

/// The boundedness integral restricted to `|phi(r xi)| > t`, at the finest
/// edge distance. The edge remainder uses the unrestricted decay rate, so
/// the value is nonincreasing in `t` and never exceeds the full integral.
pub fn tail_integral(
    sym: &SymbolPair,
    w: &NormalWeight,
    mp: &MixedNormParams,
    t: f64,
    opts: &ComposeOptions,
) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::argument(format!("threshold t = {t} outside (0,1)")));
    }
    validate_inputs(sym, opts)?;
    if sym.phi.sup_modulus(sym.dim).is_some_and(|s| s <= t) {
        return Ok(0.0);
    }
    let dirs = Directions::new(sym.dim, opts.mc_samples, opts.seed);
    let finest = *EPS_LADDER.last().expect("nonempty ladder");
    let full = radial_profile(sym, w, mp, &dirs, opts.radial_grid, finest, None)?;
    let restricted = radial_profile(sym, w, mp, &dirs, opts.radial_grid, finest, Some(t))?;
    Ok(ladder_rows(&restricted, &full)[EPS_LADDER.len() - 1].total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorClass {
    #[serde(rename = "bounded AND compact")]
    BoundedCompact,
    #[serde(rename = "unbounded")]
    Unbounded,
    #[serde(rename = "undetermined")]
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorVerdict {
    pub verdict: OperatorClass,
    pub integral: IntegralReport,
    /// `(t, tail_integral(t))` pairs.
    pub tail_ladder: Vec<(f64, f64)>,
    /// Agreement between the integral and the tail criterion.
    pub consistency: String,
}

pub const T_LADDER: [f64; 3] = [0.9, 0.99, 0.999];

/// Classifies `u C_phi` from the boundedness integral and cross-checks the
/// verdict against the tail ladder.
pub fn operator_verdict(
    sym: &SymbolPair,
    w: &NormalWeight,
    mp: &MixedNormParams,
    opts: &ComposeOptions,
    t_ladder: &[f64],
) -> Result<OperatorVerdict> {
    let integral = if sym.u.is_zero() {
        validate_inputs(sym, opts)?;
        IntegralReport {
            value: 0.0,
            finiteness: Finiteness::Finite,
            ladder: EPS_LADDER
                .iter()
                .map(|&e| LadderRow {
                    eps_edge: e,
                    truncated: 0.0,
                    tail: 0.0,
                    total: 0.0,
                })
                .collect(),
            refined_total: 0.0,
            refinement_change: 0.0,
            ladder_change: 0.0,
            ladder_growth: 1.0,
        }
    } else {
        boundedness_integral(sym, w, mp, opts)?
    };
    let verdict = match integral.finiteness {
        Finiteness::Finite => OperatorClass::BoundedCompact,
        Finiteness::Divergent => OperatorClass::Unbounded,
        Finiteness::Undetermined => OperatorClass::Undetermined,
    };
    let mut tail_ladder = Vec::with_capacity(t_ladder.len());
    for &t in t_ladder {
        let v = if sym.u.is_zero() { 0.0 } else { tail_integral(sym, w, mp, t, opts)? };
        tail_ladder.push((t, v));
    }
    let consistency = tail_consistency(verdict, &integral, &tail_ladder);
    Ok(OperatorVerdict {
        verdict,
        integral,
        tail_ladder,
        consistency,
    })
}

fn tail_consistency(verdict: OperatorClass, integral: &IntegralReport, ladder: &[(f64, f64)]) -> String {
    let (Some(first), Some(last)) = (ladder.first(), ladder.last()) else {
        return "not checked".into();
    };
    let decreasing = ladder.windows(2).all(|p| p[1].1 <= p[0].1);
    match verdict {
        OperatorClass::BoundedCompact => {
            let shrinks = last.1 == 0.0 || last.1 < first.1;
            if decreasing && shrinks && last.1 <= integral.value {
                "consistent: tail integrals decrease toward 0".into()
            } else {
                "inconsistent: tail integrals do not decrease".into()
            }
        }
        OperatorClass::Unbounded => {
            if last.1.is_infinite() || last.1 > 0.5 * first.1 {
                "consistent: tail integrals stay large".into()
            } else {
                "inconsistent: tail integrals shrink although the integral diverges".into()
            }
        }
        OperatorClass::Undetermined => "undetermined integral: tail ladder reported only".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    fn z1(n: usize) -> Polynomial {
        let mut e = vec![0; n];
        e[0] = 1;
        Polynomial::new(
            n,
            vec![Monomial {
                coeff: Complex64::new(1.0, 0.0),
                exponents: e,
            }],
        )
        .unwrap()
    }

    fn edge_table(c: f64, alpha: f64, beta: f64) -> NormalWeight {
        let points: Vec<[f64; 2]> = (0..400)
            .map(|i| {
                let r = 1.0 - 10f64.powf(-6.0 * i as f64 / 399.0);
                [if i == 0 { 0.0 } else { r }, (1.0 - r).powf(c)]
            })
            .collect();
        NormalWeight::table(points, alpha, beta, 0.5).unwrap()
    }

    #[test]
    fn sphere_mean_of_constant_is_exact() {
        let f = Polynomial::constant(3, Complex64::new(-2.0, 0.0));
        let e = sphere_mean(&f, 0.4, 3.0, 10, 1).unwrap();
        assert_eq!(e, Estimate { value: 2.0, stderr: 0.0 });
        assert!(sphere_mean(&f, 1.0, 2.0, 10, 1).is_err());
        assert!(sphere_mean(&f, 0.5, 2.0, 1, 1).is_err());
    }

    #[test]
    fn sphere_mean_of_coordinate() {
        for n in [2usize, 3] {
            for r in [0.2, 0.5, 0.8] {
                let e = sphere_mean(&z1(n), r, 2.0, 20_000, 7).unwrap();
                let exact = r / (n as f64).sqrt();
                assert!((e.value - exact).abs() <= 3.0 * e.stderr, "n={n} r={r}: {e:?} vs {exact}");
            }
        }
    }

    #[test]
    fn mixed_norm_examples() {
        let mp = MixedNormParams::new(2.0, 2.0, edge_table(0.5, 0.25, 1.0)).unwrap();
        let mc = MonteCarlo { samples: 64, seed: 3 };
        let one = Polynomial::constant(2, Complex64::new(1.0, 0.0));
        let v = mixed_norm(&one, &mp, 8, 1e-4, mc).unwrap();
        assert!((v.value - 1.0).abs() < 0.01, "{v:?}");
        let zero = Polynomial::constant(2, Complex64::new(0.0, 0.0));
        assert_eq!(mixed_norm(&zero, &mp, 8, 1e-4, mc).unwrap().value, 0.0);
        let v = mixed_norm(&z1(2), &mp, 8, 1e-4, MonteCarlo { samples: 20_000, seed: 3 }).unwrap();
        assert!((v.value - (1.0f64 / 6.0).sqrt()).abs() < 0.02, "{v:?}");
        assert!(mixed_norm(&one, &mp, 4, 1e-4, mc).is_err());
        assert!(mixed_norm(&one, &mp, 8, 0.7, mc).is_err());
    }

    #[test]
    fn mixed_norm_is_homogeneous() {
        let mp = MixedNormParams::new(2.0, 3.0, edge_table(0.5, 0.25, 1.0)).unwrap();
        let mc = MonteCarlo { samples: 500, seed: 1 };
        let base = mixed_norm(&z1(2), &mp, 8, 1e-3, mc).unwrap().value;
        let lambda = Complex64::new(-1.5, 2.0);
        let f = Polynomial::new(2, vec![Monomial { coeff: lambda, exponents: vec![1, 0] }]).unwrap();
        let scaled = mixed_norm(&f, &mp, 8, 1e-3, mc).unwrap().value;
        assert!((scaled - lambda.norm() * base).abs() <= 1e-12 * scaled);
    }

    #[test]
    fn self_map_validation() {
        assert!(SymbolPair::new(2, Multiplier::constant(1.0), SelfMap::Scale { s: 1.5 }).is_err());
        let big = vec![
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)],
        ];
        assert!(SymbolPair::new(2, Multiplier::constant(1.0), SelfMap::Linear { matrix: big }).is_err());
        let rot = vec![
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
        ];
        assert!(SymbolPair::new(2, Multiplier::constant(1.0), SelfMap::Linear { matrix: rot.clone() }).is_ok());
        assert!((operator_norm(&rot) - 1.0).abs() < 1e-12);
        let sq = Polynomial::new(
            1,
            vec![Monomial { coeff: Complex64::new(2.0, 0.0), exponents: vec![1] }],
        )
        .unwrap();
        let map = SelfMap::Polynomial { components: vec![sq] };
        assert!(map.modulus(&[Complex64::new(0.9, 0.0)]).is_err());
        assert!(map.modulus(&[Complex64::new(0.4, 0.0)]).is_ok());
    }

    #[test]
    fn symbol_config_parses() {
        let u: Multiplier = serde_json::from_str(r#"{"kind":"const","value":1}"#).unwrap();
        assert_eq!(u, Multiplier::constant(1.0));
        let u: Multiplier = serde_json::from_str(r#"{"kind":"const","value":[0,2]}"#).unwrap();
        assert_eq!(u, Multiplier::Const { value: Complex64::new(0.0, 2.0) });
        let phi: SelfMap = serde_json::from_str(r#"{"kind":"scale","s":0.5}"#).unwrap();
        assert_eq!(phi, SelfMap::Scale { s: 0.5 });
    }

    #[test]
    fn zero_multiplier_is_bounded_with_value_zero() {
        let sym = SymbolPair::new(2, Multiplier::constant(0.0), SelfMap::Identity).unwrap();
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let mp = MixedNormParams::new(2.0, 2.0, NormalWeight::edge(0.75, 0.5, 1.0, 0.5).unwrap()).unwrap();
        let v = operator_verdict(&sym, &w, &mp, &ComposeOptions::default(), &T_LADDER).unwrap();
        assert_eq!(v.verdict, OperatorClass::BoundedCompact);
        assert_eq!(v.integral.value, 0.0);
    }

    #[test]
    fn contraction_tail_vanishes_above_half() {
        let sym = SymbolPair::new(2, Multiplier::constant(1.0), SelfMap::Scale { s: 0.5 }).unwrap();
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let mp = MixedNormParams::new(2.0, 2.0, NormalWeight::edge(0.75, 0.5, 1.0, 0.5).unwrap()).unwrap();
        let opts = ComposeOptions { mc_samples: 64, ..Default::default() };
        assert_eq!(tail_integral(&sym, &w, &mp, 0.6, &opts).unwrap(), 0.0);
        assert!(tail_integral(&sym, &w, &mp, 0.0, &opts).is_err());
    }

    #[test]
    fn threshold_examples() {
        let sym = SymbolPair::new(2, Multiplier::constant(1.0), SelfMap::Identity).unwrap();
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let opts = ComposeOptions { mc_samples: 64, ..Default::default() };
        let finite = MixedNormParams::new(2.0, 2.0, NormalWeight::edge(0.75, 0.5, 1.0, 0.5).unwrap()).unwrap();
        let r = boundedness_integral(&sym, &w, &finite, &opts).unwrap();
        eprintln!("{r:?}");
        assert_eq!(r.finiteness, Finiteness::Finite);
        assert!((r.value - 1.246_450_480_280_461).abs() < 0.05 * 1.246_450_480_280_461);
        let divergent = MixedNormParams::new(2.0, 2.0, NormalWeight::edge(0.25, 0.1, 1.0, 0.5).unwrap()).unwrap();
        let r = boundedness_integral(&sym, &w, &divergent, &opts).unwrap();
        eprintln!("{r:?}");
        assert_eq!(r.finiteness, Finiteness::Divergent);
        let half = SymbolPair::new(2, Multiplier::constant(1.0), SelfMap::Scale { s: 0.5 }).unwrap();
        let v = operator_verdict(&half, &w, &finite, &opts, &T_LADDER).unwrap();
        eprintln!("{v:?}");
        assert_eq!(v.verdict, OperatorClass::BoundedCompact);
    }
}
