//! Polynomials on the closed unit ball of `C^n`: zonal sums
//! `P(z) = sum c_j <z, zeta_j>^k`, sparse monomial polynomials, sup-norm
//! lower bounds on the sphere, and the separated-set bound for zonal sums.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::sphere::{inner, UnitVector};

/// Slack on `|z| <= 1` for evaluation points.
pub const BALL_TOL: f64 = 1e-12;

/// `z^k` by binary exponentiation.
pub fn cpow(z: Complex64, mut k: u64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut base = z;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        k >>= 1;
        if k > 0 {
            base *= base;
        }
    }
    acc
}

pub(crate) fn check_ball(z: &[Complex64], dim: usize) -> Result<()> {
    if z.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: z.len(),
        });
    }
    let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    if !(r2 <= 1.0 + BALL_TOL) {
        return Err(Error::domain(format!("|z| = {} exceeds 1", r2.sqrt())));
    }
    Ok(())
}

/// A holomorphic polynomial that can be searched for its sphere maximum.
pub trait SpherePolynomial: Sync {
    fn dim(&self) -> usize;
    /// Total degree (largest over terms).
    fn degree(&self) -> u64;
    /// Value at `z`; the caller guarantees the dimension.
    fn value(&self, z: &[Complex64]) -> Complex64;
    /// Value and holomorphic gradient `(dP/dz_i)`.
    fn value_grad(&self, z: &[Complex64]) -> (Complex64, Vec<Complex64>);
    /// An upper bound on `sup |P|` over the sphere from the coefficients.
    fn coefficient_bound(&self) -> f64;

    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        check_ball(z, self.dim())?;
        Ok(self.value(z))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZonalPolynomial {
    dim: usize,
    degree: u64,
    centers: Vec<UnitVector>,
    coeffs: Vec<Complex64>,
}

impl ZonalPolynomial {
    pub fn new(degree: u64, centers: Vec<UnitVector>, coeffs: Vec<Complex64>) -> Result<Self> {
        let dim = centers
            .first()
            .map(UnitVector::dim)
            .ok_or_else(|| Error::argument("zonal polynomial needs at least one center"))?;
        Self::with_dim(dim, degree, centers, coeffs)
    }

    /// As [`ZonalPolynomial::new`], but an empty center list (the zero
    /// polynomial) is allowed.
    pub fn with_dim(dim: usize, degree: u64, centers: Vec<UnitVector>, coeffs: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("dimension must be at least 1"));
        }
        if centers.iter().any(|c| c.dim() != dim) {
            return Err(Error::argument("centers of mixed dimension"));
        }
        if coeffs.len() != centers.len() {
            return Err(Error::argument(format!(
                "{} coefficients for {} centers",
                coeffs.len(),
                centers.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::argument("non-finite coefficient"));
        }
        Ok(ZonalPolynomial {
            dim,
            degree,
            centers,
            coeffs,
        })
    }

    /// All coefficients equal to one.
    pub fn unit(degree: u64, centers: Vec<UnitVector>) -> Result<Self> {
        let coeffs = vec![Complex64::new(1.0, 0.0); centers.len()];
        Self::new(degree, centers, coeffs)
    }

    pub fn centers(&self) -> &[UnitVector] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Same centers with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        ZonalPolynomial {
            dim: self.dim,
            degree: self.degree,
            centers: self.centers.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `sum |c_j|`, the triangle-inequality bound on the sup norm.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

impl SpherePolynomial for ZonalPolynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn degree(&self) -> u64 {
        self.degree
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(zeta, c)| c * cpow(inner(z, zeta.coords()), self.degree))
            .sum()
    }

    fn value_grad(&self, z: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let mut value = Complex64::new(0.0, 0.0);
        let mut grad = vec![Complex64::new(0.0, 0.0); z.len()];
        let k = self.degree;
        for (zeta, c) in self.centers.iter().zip(&self.coeffs) {
            let t = inner(z, zeta.coords());
            if k == 0 {
                value += c;
                continue;
            }
            let lower = cpow(t, k - 1);
            value += c * lower * t;
            let scale = c * lower * k as f64;
            for (g, w) in grad.iter_mut().zip(zeta.coords()) {
                *g += scale * w.conj();
            }
        }
        (value, grad)
    }

    fn coefficient_bound(&self) -> f64 {
        self.abs_coeff_sum()
    }
}

/// Sparse polynomial `sum c_a z^a` over multi-indices `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial")]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: Complex64,
    pub exponents: Vec<u32>,
}

#[derive(Deserialize)]
struct RawPolynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl TryFrom<RawPolynomial> for Polynomial {
    type Error = Error;
    fn try_from(raw: RawPolynomial) -> Result<Self> {
        Polynomial::new(raw.dim, raw.terms)
    }
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("polynomial of dimension zero"));
        }
        if let Some(t) = terms.iter().find(|t| t.exponents.len() != dim) {
            return Err(Error::argument(format!(
                "monomial has {} exponents, expected {dim}",
                t.exponents.len()
            )));
        }
        Ok(Polynomial { dim, terms })
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        Polynomial {
            dim,
            terms: vec![Monomial {
                coeff: c,
                exponents: vec![0; dim],
            }],
        }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.iter().map(Monomial::degree);
        match degrees.next() {
            Some(d) => degrees.all(|e| e == d),
            None => true,
        }
    }
}

impl Monomial {
    pub fn degree(&self) -> u64 {
        self.exponents.iter().map(|&e| e as u64).sum()
    }
}

impl SpherePolynomial for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn degree(&self) -> u64 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    fn value(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .zip(z)
                    .fold(t.coeff, |acc, (&e, zi)| acc * cpow(*zi, e as u64))
            })
            .sum()
    }

    fn value_grad(&self, z: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let mut grad = vec![Complex64::new(0.0, 0.0); z.len()];
        for t in &self.terms {
            for i in 0..z.len() {
                if t.exponents[i] == 0 {
                    continue;
                }
                let mut d = t.coeff * t.exponents[i] as f64;
                for (j, (&e, zj)) in t.exponents.iter().zip(z).enumerate() {
                    let e = if j == i { e - 1 } else { e };
                    d *= cpow(*zj, e as u64);
                }
                grad[i] += d;
            }
        }
        (self.value(z), grad)
    }

    fn coefficient_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupNorm {
    /// `|P(argmax)|`, a lower bound on the sphere maximum.
    pub lower: f64,
    pub argmax: UnitVector,
}

const SUP_CHUNK: usize = 1024;
const POLISH_STARTS: usize = 4;

/// Lower bound on `sup |P|` over the sphere: best of `samples` uniform points,
/// then projected ascent on `|P|^2` from the best few.
pub fn sup_norm<P: SpherePolynomial + ?Sized>(
    poly: &P,
    samples: usize,
    polish_iters: usize,
    seed: u64,
) -> Result<SupNorm> {
    if samples == 0 {
        return Err(Error::argument("sup_norm needs at least one sample"));
    }
    let n = poly.dim();
    let chunks = samples.div_ceil(SUP_CHUNK);
    let mut best: Vec<(f64, Vec<Complex64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, tag::SUPNORM + c as u64);
            let count = SUP_CHUNK.min(samples - c * SUP_CHUNK);
            let mut top: Vec<(f64, Vec<Complex64>)> = Vec::new();
            for _ in 0..count {
                let x = rng::unit_sphere(&mut rng, n);
                let v = poly.value(&x).norm();
                push_top(&mut top, (v, x));
            }
            top
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    best.sort_by(|a, b| b.0.total_cmp(&a.0));
    best.truncate(POLISH_STARTS);

    let polished: Vec<(f64, Vec<Complex64>)> = best
        .into_par_iter()
        .map(|(v, x)| polish(poly, x, v, polish_iters))
        .collect();
    let (_, x) = polished
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one sample");
    let argmax = UnitVector::normalized(x)?;
    let lower = poly.value(argmax.coords()).norm().min(poly.coefficient_bound());
    Ok(SupNorm { lower, argmax })
}

fn push_top(top: &mut Vec<(f64, Vec<Complex64>)>, item: (f64, Vec<Complex64>)) {
    if top.len() < POLISH_STARTS {
        top.push(item);
    } else if let Some((i, _)) = top
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .filter(|(_, m)| m.0 < item.0)
    {
        top[i] = item;
    }
}

/// Backtracking ascent along the tangential part of `P conj(grad P)`.
fn polish<P: SpherePolynomial + ?Sized>(
    poly: &P,
    mut x: Vec<Complex64>,
    mut v: f64,
    iters: usize,
) -> (f64, Vec<Complex64>) {
    let mut step = 0.5;
    for _ in 0..iters {
        let (val, grad) = poly.value_grad(&x);
        let mut dir: Vec<Complex64> = grad.iter().map(|g| val * g.conj()).collect();
        let radial = inner(&dir, &x).re;
        for (d, xi) in dir.iter_mut().zip(&x) {
            *d -= xi * radial;
        }
        let dn = dir.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
        if !(dn > 0.0) {
            break;
        }
        let mut improved = false;
        while step > 1e-14 {
            let mut y: Vec<Complex64> = x.iter().zip(&dir).map(|(xi, d)| xi + d * (step / dn)).collect();
            let yn = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            y.iter_mut().for_each(|c| *c /= yn);
            let w = poly.value(&y).norm();
            if w > v {
                x = y;
                v = w;
                step = (step * 1.5).min(1.0);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (v, x)
}

/// Relative size of the neglected tail in [`zonal_sum_bound`].
const ZONAL_TAIL_RTOL: f64 = 1e-15;

/// Upper bound `1 + sum_{m>=1} (m+2)^{2n-2} exp(-m^2 delta^2 k / 2)` on the
/// modulus of a unit-coefficient zonal sum of degree `k` whose centers are
/// `delta`-separated.
pub fn zonal_sum_bound(n: usize, delta: f64, k: u64) -> Result<f64> {
    if !(delta > 0.0) || k == 0 {
        return Err(Error::argument("zonal_sum_bound needs delta > 0 and k >= 1"));
    }
    zonal_sum_bound_scaled(n, delta * delta * k as f64)
}

/// [`zonal_sum_bound`] in terms of `s = delta^2 k`.
pub fn zonal_sum_bound_scaled(n: usize, s: f64) -> Result<f64> {
    Ok(1.0 + zonal_sum_excess(n, s)?)
}

/// `sum_{m>=1} (m+2)^{2n-2} exp(-m^2 s / 2)` with a certified tail.
pub fn zonal_sum_excess(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::argument("dimension must be at least 1"));
    }
    if !(s > 0.0) {
        return Err(Error::argument(format!("delta^2 k = {s} must be positive")));
    }
    let power = (2 * n - 2) as f64;
    let ln_term = |m: f64| power * (m + 2.0).ln() - m * m * s / 2.0;
    let mut sum = 0.0;
    let mut m = 1.0;
    loop {
        sum += ln_term(m).exp();
        // Consecutive-term ratios decrease in m, so the tail after m is
        // dominated by a geometric series with the first ratio.
        let next = ln_term(m + 1.0);
        let ratio = (ln_term(m + 2.0) - next).exp();
        if ratio < 1.0 {
            let tail = next.exp() / (1.0 - ratio);
            if tail <= ZONAL_TAIL_RTOL * (1.0 + sum) {
                return Ok(sum + tail);
            }
        }
        m += 1.0;
        if m > 1e9 {
            return Err(Error::argument(format!("zonal sum bound does not settle for s = {s}")));
        }
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RawZonal {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub degree: u64,
    pub centers: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Complex64>>,
}

impl Serialize for ZonalPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawZonal {
            dim: Some(self.dim),
            degree: self.degree,
            centers: self.centers.iter().map(UnitVector::to_reals).collect(),
            coeffs: Some(self.coeffs.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ZonalPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawZonal::deserialize(d)?;
        let centers = raw
            .centers
            .iter()
            .map(|row| UnitVector::from_reals(row))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let coeffs = raw
            .coeffs
            .unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); centers.len()]);
        let dim = match (raw.dim, centers.first()) {
            (Some(d), _) => d,
            (None, Some(c)) => c.dim(),
            (None, None) => return Err(D::Error::custom("empty zonal polynomial needs an explicit dim")),
        };
        ZonalPolynomial::with_dim(dim, raw.degree, centers, coeffs).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cpow_matches_powi() {
        let z = c(0.3, -0.7);
        for k in 0..20u64 {
            let a = cpow(z, k);
            let b = z.powi(k as i32);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn zonal_evaluation_examples() {
        let e1 = UnitVector::basis(2, 0);
        let e2 = UnitVector::basis(2, 1);
        let p = ZonalPolynomial::unit(3, vec![e1.clone()]).unwrap();
        assert!((p.eval(&[c(0.5, 0.0), c(0.5, 0.0)]).unwrap() - c(0.125, 0.0)).norm() < 1e-15);

        let q = ZonalPolynomial::unit(2, vec![e1, e2]).unwrap();
        let r = 0.37;
        assert!((q.eval(&[c(r, 0.0), c(0.0, 0.0)]).unwrap() - c(r * r, 0.0)).norm() < 1e-15);
        assert_eq!(q.eval(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(), c(0.0, 0.0));
        assert!(q.eval(&[c(0.9, 0.0), c(0.9, 0.0)]).is_err());
        assert!(q.eval(&[c(0.1, 0.0)]).is_err());
    }

    #[test]
    fn degree_zero_counts_centers() {
        let p = ZonalPolynomial::new(
            0,
            vec![UnitVector::basis(2, 0), UnitVector::basis(2, 1)],
            vec![c(2.0, 0.0), c(0.5, 1.0)],
        )
        .unwrap();
        assert_eq!(p.eval(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(), c(2.5, 1.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let zeta = UnitVector::normalized(vec![c(0.3, 0.4), c(-0.2, 0.8)]).unwrap();
        let p = ZonalPolynomial::new(5, vec![zeta, UnitVector::basis(2, 0)], vec![c(1.0, 0.5), c(-0.3, 0.0)]).unwrap();
        let mono = Polynomial::new(
            2,
            vec![
                Monomial { coeff: c(1.0, 0.0), exponents: vec![2, 1] },
                Monomial { coeff: c(0.0, 2.0), exponents: vec![0, 3] },
            ],
        )
        .unwrap();
        let z = [c(0.2, 0.1), c(-0.4, 0.3)];
        let h = 1e-6;
        for poly in [&p as &dyn SpherePolynomial, &mono] {
            let (_, g) = poly.value_grad(&z);
            for i in 0..2 {
                let mut zp = z;
                let mut zm = z;
                zp[i] += h;
                zm[i] -= h;
                let fd = (poly.value(&zp) - poly.value(&zm)) / (2.0 * h);
                assert!((fd - g[i]).norm() < 1e-7, "component {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn sup_norm_single_center_is_one() {
        let zeta = UnitVector::normalized(vec![c(0.6, 0.2), c(0.1, -0.5), c(0.3, 0.0)]).unwrap();
        let p = ZonalPolynomial::unit(6, vec![zeta.clone()]).unwrap();
        let s = sup_norm(&p, 500, 100, 3).unwrap();
        assert!(s.lower <= 1.0);
        assert!(s.lower > 1.0 - 1e-9, "{}", s.lower);
        let d = crate::sphere::pseudo_distance(&s.argmax, &zeta).unwrap();
        assert!(d < 1e-4);
    }

    #[test]
    fn sup_norm_of_z1_z2_is_half() {
        let p = Polynomial::new(2, vec![Monomial { coeff: c(1.0, 0.0), exponents: vec![1, 1] }]).unwrap();
        let s = sup_norm(&p, 200, 100, 1).unwrap();
        assert!(s.lower <= 0.5 + 1e-15);
        assert!(s.lower > 0.5 - 1e-9);
    }

    #[test]
    fn sup_norm_of_two_fourth_powers() {
        // Oracle: with |z_1|^2 = t and phases aligned, |P| = t^2 + (1-t)^2,
        // maximised at the endpoints.
        let oracle = (0..=10_000)
            .map(|i| {
                let t = i as f64 / 10_000.0;
                t * t + (1.0 - t) * (1.0 - t)
            })
            .fold(0.0, f64::max);
        let p = ZonalPolynomial::unit(4, vec![UnitVector::basis(2, 0), UnitVector::basis(2, 1)]).unwrap();
        let s = sup_norm(&p, 2000, 200, 11).unwrap();
        assert!((s.lower - oracle).abs() < 1e-8, "{} vs {oracle}", s.lower);
    }

    #[test]
    fn zonal_sum_bound_examples() {
        // Direct summation oracles.
        let direct = |n: usize, s: f64| {
            1.0 + (1..200)
                .map(|m| ((m + 2) as f64).powi(2 * n as i32 - 2) * (-(m * m) as f64 * s / 2.0).exp())
                .sum::<f64>()
        };
        for (n, s, frozen) in [
            (2, 1.0 / 0.09, 1.0347932848290656),
            (1, 2.0, 1.3863186024133261),
            (3, 5.0, 7.660507376298624),
        ] {
            let got = zonal_sum_bound_scaled(n, s).unwrap();
            assert!((got - frozen).abs() < 1e-14 * frozen);
            assert!(got >= direct(n, s) * (1.0 - 1e-15));
        }
        assert_eq!(zonal_sum_bound_scaled(3, 1e4).unwrap(), 1.0);
        let via_k = zonal_sum_bound(2, 0.5, 40).unwrap();
        assert_eq!(via_k, zonal_sum_bound_scaled(2, 10.0).unwrap());
        assert!(zonal_sum_bound(2, 0.0, 4).is_err());
        assert!(zonal_sum_bound(2, 0.5, 0).is_err());
    }

    #[test]
    fn zonal_round_trip_and_default_coeffs() {
        let json = r#"{"degree":3,"centers":[[1,0,0,0],[0,0,0,1]]}"#;
        let p: ZonalPolynomial = serde_json::from_str(json).unwrap();
        assert_eq!(p.coeffs(), &[c(1.0, 0.0), c(1.0, 0.0)]);
        let back: ZonalPolynomial = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn polynomial_deserialize_validates_exponents() {
        let ok = r#"{"dim":2,"terms":[{"coeff":[1,0],"exponents":[1,2]}]}"#;
        let p: Polynomial = serde_json::from_str(ok).unwrap();
        assert_eq!(p.degree(), 3);
        let bad = r#"{"dim":2,"terms":[{"coeff":[1,0],"exponents":[1]}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
    }
}
