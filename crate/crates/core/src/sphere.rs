//! The unit sphere of `C^n` under the pseudo-metric
//! `d(x, y) = (1 - |<x, y>|^2)^(1/2)`.
//!
//! A set is *separated* by `s` when every pair of distinct points is at
//! `d`-distance at least `s`. Maximal separated sets are grown greedily from
//! uniform random candidates; maximality is certified statistically.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Tolerance on `|x| = 1` accepted for stored unit vectors.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    coords: Vec<Complex64>,
}

impl UnitVector {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::argument("unit vector of dimension zero"));
        }
        let norm = norm(&coords);
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::argument(format!("vector norm {norm} is not 1")));
        }
        Ok(UnitVector { coords })
    }

    /// Scales a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<Complex64>) -> Result<Self> {
        let norm = norm(&coords);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::argument("cannot normalize a zero vector"));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(UnitVector { coords })
    }

    /// From `2n` interleaved reals `re_0, im_0, re_1, im_1, ...`.
    pub fn from_reals(reals: &[f64]) -> Result<Self> {
        if reals.len() % 2 != 0 {
            return Err(Error::argument("odd number of reals for a complex vector"));
        }
        Self::new(reals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut coords = vec![Complex64::new(0.0, 0.0); n];
        coords[i] = Complex64::new(1.0, 0.0);
        UnitVector { coords }
    }

    pub fn random(rng: &mut rng::Rng, n: usize) -> Self {
        UnitVector {
            coords: rng::unit_sphere(rng, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    /// Hermitian inner product `<self, other>`.
    pub fn inner(&self, other: &UnitVector) -> Complex64 {
        inner(&self.coords, &other.coords)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `<z, w> = sum z_i conj(w_i)`.
pub fn inner(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn pseudo_distance(x: &UnitVector, y: &UnitVector) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(distance(&x.coords, &y.coords))
}

/// `d(x, y)` for unit vectors of equal dimension.
///
/// Near-parallel pairs use the Lagrange identity
/// `|x|^2|y|^2 - |<x,y>|^2 = sum_{i<j} |x_i y_j - x_j y_i|^2`, which keeps
/// relative accuracy for small `d` where `1 - |<x,y>|^2` cancels.
pub(crate) fn distance(x: &[Complex64], y: &[Complex64]) -> f64 {
    let s = inner(x, y).norm_sqr();
    let d2 = if s < 0.5 {
        1.0 - s
    } else {
        let mut acc = 0.0;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                acc += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
            }
        }
        acc
    };
    d2.clamp(0.0, 1.0).sqrt()
}

/// Bucket index over a 1-Lipschitz projection of the embedding
/// `x -> x x^*`, under which `|x x^* - y y^*|_F = sqrt(2) d(x, y)`.
struct ProjectiveGrid {
    cell: f64,
    width: usize,
    buckets: HashMap<[i64; 4], Vec<usize>>,
}

impl ProjectiveGrid {
    /// Grid for queries of the form `d < radius`.
    fn new(n: usize, radius: f64) -> Self {
        ProjectiveGrid {
            cell: std::f64::consts::SQRT_2 * radius,
            width: if n <= 2 { 3 } else { 4 },
            buckets: HashMap::new(),
        }
    }

    fn key(&self, x: &[Complex64]) -> [i64; 4] {
        let s2 = std::f64::consts::SQRT_2;
        let x01 = x[0] * x[1].conj();
        let mut coords = [s2 * x01.re, s2 * x01.im, x[0].norm_sqr(), 0.0];
        if self.width == 4 {
            coords[3] = s2 * (x[0] * x[2].conj()).re;
        }
        let mut key = [0i64; 4];
        for (k, c) in key.iter_mut().zip(coords).take(self.width) {
            *k = (c / self.cell).floor() as i64;
        }
        key
    }

    fn insert(&mut self, x: &[Complex64], id: usize) {
        let key = self.key(x);
        self.buckets.entry(key).or_default().push(id);
    }

    /// Calls `f` on every stored id whose bucket neighbours the query's.
    /// Returns early with `true` as soon as `f` does.
    fn any_near(&self, x: &[Complex64], mut f: impl FnMut(usize) -> bool) -> bool {
        let center = self.key(x);
        let offsets = 3usize.pow(self.width as u32);
        for o in 0..offsets {
            let mut key = center;
            let mut rest = o;
            for k in key.iter_mut().take(self.width) {
                *k += (rest % 3) as i64 - 1;
                rest /= 3;
            }
            if let Some(ids) = self.buckets.get(&key) {
                if ids.iter().any(|&id| f(id)) {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparatedSet {
    dim: usize,
    separation: f64,
    points: Vec<UnitVector>,
    maximal: bool,
    /// Set for `n = 1`, where `d` vanishes identically and no two points
    /// can be separated.
    degenerate: bool,
    seed: u64,
}

impl SeparatedSet {
    /// Wraps explicit points after checking the pairwise invariant.
    pub fn from_points(points: Vec<UnitVector>, separation: f64, seed: u64) -> Result<Self> {
        let dim = points.first().map(UnitVector::dim).unwrap_or(0);
        if dim == 0 {
            return Err(Error::argument("a separated set needs at least one point"));
        }
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::argument("points of mixed dimension"));
        }
        let set = SeparatedSet {
            dim,
            separation,
            points,
            maximal: false,
            degenerate: dim == 1,
            seed,
        };
        if let Some((a, b, d)) = set.first_violation() {
            return Err(Error::argument(format!(
                "points {a} and {b} are at distance {d} < {separation}"
            )));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_maximal(&self) -> bool {
        self.maximal
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// First pair closer than the declared separation, if any.
    pub fn first_violation(&self) -> Option<(usize, usize, f64)> {
        if self.dim == 1 {
            return (self.points.len() > 1).then(|| (0, 1, 0.0));
        }
        let mut grid = ProjectiveGrid::new(self.dim, self.separation);
        for (i, p) in self.points.iter().enumerate() {
            let mut hit = None;
            grid.any_near(p.coords(), |j| {
                let d = distance(p.coords(), self.points[j].coords());
                if d < self.separation {
                    hit = Some((j, i, d));
                    true
                } else {
                    false
                }
            });
            if hit.is_some() {
                return hit;
            }
            grid.insert(p.coords(), i);
        }
        None
    }

    /// Index of the point nearest to `x`; ties go to the lowest index.
    pub fn nearest(&self, x: &[Complex64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = distance(x, p.coords());
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

/// Greedy maximal `sep`-separated set: uniform candidates are accepted when at
/// distance `>= sep` from every accepted point; construction stops after
/// `budget` consecutive rejections.
pub fn maximal_separated_set(n: usize, sep: f64, seed: u64, budget: u64) -> Result<SeparatedSet> {
    packing(n, sep, seed, budget, None)?
        .ok_or_else(|| Error::argument("packing exceeded its cardinality cap"))
}

/// As [`maximal_separated_set`], but gives up (returning `None`) once the set
/// grows beyond `cap` points.
pub fn maximal_separated_set_capped(
    n: usize,
    sep: f64,
    seed: u64,
    budget: u64,
    cap: usize,
) -> Result<Option<SeparatedSet>> {
    packing(n, sep, seed, budget, Some(cap))
}

fn packing(n: usize, sep: f64, seed: u64, budget: u64, cap: Option<usize>) -> Result<Option<SeparatedSet>> {
    if n == 0 {
        return Err(Error::argument("dimension must be at least 1"));
    }
    if !(sep > 0.0 && sep <= 1.0) {
        return Err(Error::argument(format!("separation {sep} outside (0,1]")));
    }
    if budget == 0 {
        return Err(Error::argument("rejection budget must be positive"));
    }
    let mut rng = rng::stream(seed, tag::PACKING);
    let first = UnitVector::random(&mut rng, n);
    let finish = |points: Vec<UnitVector>, degenerate: bool| SeparatedSet {
        dim: n,
        separation: sep,
        points,
        maximal: true,
        degenerate,
        seed,
    };
    if n == 1 {
        return Ok(Some(finish(vec![first], true)));
    }
    if sep == 1.0 {
        // d = 1 means exact orthogonality: complete to an orthonormal basis.
        let mut points = vec![first];
        while points.len() < n {
            let mut v = rng::unit_sphere(&mut rng, n);
            for p in &points {
                let c = inner(&v, p.coords());
                for (vi, pi) in v.iter_mut().zip(p.coords()) {
                    *vi -= c * pi;
                }
            }
            if let Ok(u) = UnitVector::normalized(v) {
                if points.iter().all(|p| distance(u.coords(), p.coords()) >= 1.0) {
                    points.push(u);
                }
            }
        }
        return Ok(Some(finish(points, false)));
    }

    let mut grid = ProjectiveGrid::new(n, sep);
    grid.insert(first.coords(), 0);
    let mut points = vec![first];
    let mut rejections = 0u64;
    while rejections < budget {
        let cand = rng::unit_sphere(&mut rng, n);
        let blocked = grid.any_near(&cand, |j| distance(&cand, points[j].coords()) < sep);
        if blocked {
            rejections += 1;
        } else {
            grid.insert(&cand, points.len());
            points.push(UnitVector { coords: cand });
            rejections = 0;
            if cap.is_some_and(|c| points.len() > c) {
                return Ok(None);
            }
        }
    }
    Ok(Some(finish(points, false)))
}

/// Greedy coloring of the conflict graph (edge when `d < target`), visiting
/// points in insertion order and taking the smallest free color.
pub fn greedy_coloring(set: &SeparatedSet, target: f64) -> Vec<usize> {
    if set.dim == 1 {
        return (0..set.len()).collect();
    }
    let mut grid = ProjectiveGrid::new(set.dim, target);
    let mut colors = Vec::with_capacity(set.len());
    let mut taken = Vec::new();
    for (i, p) in set.points.iter().enumerate() {
        taken.clear();
        grid.any_near(p.coords(), |j| {
            if distance(p.coords(), set.points[j].coords()) < target {
                taken.push(colors[j]);
            }
            false
        });
        taken.sort_unstable();
        taken.dedup();
        let color = taken.iter().enumerate().find(|(k, &c)| *k != c).map_or(taken.len(), |(k, _)| k);
        colors.push(color);
        grid.insert(p.coords(), i);
    }
    colors
}

/// Splits `set` into `target`-separated classes by greedy coloring.
pub fn decompose_separated(set: &SeparatedSet, target: f64) -> Result<Vec<SeparatedSet>> {
    if target < set.separation {
        return Err(Error::argument(format!(
            "target {target} is finer than the set's separation {}",
            set.separation
        )));
    }
    if target > 1.0 {
        return Err(Error::argument(format!("target {target} exceeds 1")));
    }
    let colors = greedy_coloring(set, target);
    let count = colors.iter().max().map_or(0, |c| c + 1);
    let mut classes: Vec<Vec<UnitVector>> = vec![Vec::new(); count];
    for (p, &c) in set.points.iter().zip(&colors) {
        classes[c].push(p.clone());
    }
    Ok(classes
        .into_iter()
        .map(|points| SeparatedSet {
            dim: set.dim,
            separation: target,
            points,
            maximal: false,
            degenerate: set.degenerate,
            seed: set.seed,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub samples: usize,
    pub covered: usize,
    pub fraction: f64,
    /// Largest nearest-point distance over all samples.
    pub worst_nearest: f64,
}

const COVER_CHUNK: usize = 1024;

/// Fraction of uniform samples lying within `d < radius` of the set.
pub fn covering_check(set: &SeparatedSet, radius: f64, samples: usize, seed: u64) -> Result<CoverReport> {
    if samples == 0 {
        return Err(Error::argument("covering check needs at least one sample"));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::argument(format!("radius {radius} outside (0,1]")));
    }
    let mut grid = ProjectiveGrid::new(set.dim.max(2), radius);
    if set.dim >= 2 {
        for (i, p) in set.points.iter().enumerate() {
            grid.insert(p.coords(), i);
        }
    }
    let chunks = samples.div_ceil(COVER_CHUNK);
    let per_chunk: Vec<(usize, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, tag::COVER + c as u64);
            let count = COVER_CHUNK.min(samples - c * COVER_CHUNK);
            let mut covered = 0;
            let mut worst = 0.0f64;
            for _ in 0..count {
                let x = rng::unit_sphere(&mut rng, set.dim);
                let mut near = f64::INFINITY;
                if set.dim >= 2 {
                    grid.any_near(&x, |j| {
                        near = near.min(distance(&x, set.points[j].coords()));
                        false
                    });
                }
                if near >= radius {
                    near = set.nearest(&x).1;
                }
                if near < radius {
                    covered += 1;
                }
                worst = worst.max(near);
            }
            (covered, worst)
        })
        .collect();
    let covered = per_chunk.iter().map(|c| c.0).sum();
    let worst_nearest = per_chunk.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(CoverReport {
        samples,
        covered,
        fraction: covered as f64 / samples as f64,
        worst_nearest,
    })
}

#[derive(Serialize, Deserialize)]
struct RawSet {
    dim: usize,
    separation: f64,
    seed: u64,
    maximal: bool,
    #[serde(default)]
    degenerate: bool,
    points: Vec<Vec<f64>>,
}

impl Serialize for SeparatedSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSet {
            dim: self.dim,
            separation: self.separation,
            seed: self.seed,
            maximal: self.maximal,
            degenerate: self.degenerate,
            points: self.points.iter().map(UnitVector::to_reals).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeparatedSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawSet::deserialize(d)?;
        let points = raw
            .points
            .iter()
            .map(|row| {
                if row.len() != 2 * raw.dim {
                    return Err(D::Error::custom(format!(
                        "point row has {} reals, expected {}",
                        row.len(),
                        2 * raw.dim
                    )));
                }
                UnitVector::from_reals(row).map_err(D::Error::custom)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let set = SeparatedSet {
            dim: raw.dim,
            separation: raw.separation,
            points,
            maximal: raw.maximal,
            degenerate: raw.degenerate,
            seed: raw.seed,
        };
        if !set.degenerate {
            if let Some((a, b, dist)) = set.first_violation() {
                return Err(D::Error::custom(format!(
                    "points {a} and {b} at distance {dist} violate separation {}",
                    set.separation
                )));
            }
        }
        Ok(set)
    }
}
