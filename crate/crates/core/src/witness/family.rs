//! Point systems and lacunary series of the witness family.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{power_degree, q_degree, tau_power, Degree, WitnessParams};
use crate::error::{Error, Result};
use crate::poly::{zonal_sum_bound_scaled, SpherePolynomial, ZonalPolynomial};
use crate::polyseries::{GapSeries, SeriesTerm};
use crate::rng::{self, tag};
use crate::sphere::{greedy_coloring, maximal_separated_set_capped, SeparatedSet};

/// Degrees up to this size are also evaluated with complex arithmetic.
pub const POINTWISE_MAX_DEGREE: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// Degrees `p^{vM+j}`.
    G,
    /// Degrees `q_{vM+j} = ceil(p^{vM+j+1/2})`.
    H,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::G => "g",
            FamilyKind::H => "h",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildOptions {
    /// Largest number of points allowed in one level's set.
    pub cardinality_budget: usize,
    /// Consecutive rejections that end a greedy packing.
    pub rejection_budget: u64,
    /// Random sphere points per class for the zonal-sum bound check.
    pub zonal_samples: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            cardinality_budget: 20_000,
            rejection_budget: 10_000,
            zonal_samples: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZonalCheck {
    pub samples: usize,
    /// Largest `|P|` seen over all classes and samples.
    pub max_sampled: f64,
    /// Zonal-sum bound at the level's separation and degree.
    pub bound: f64,
    pub passes: bool,
    pub within_two: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructedLevel {
    pub set: SeparatedSet,
    /// Class label in `1..=M` for each point of `set`.
    pub classes: Vec<u32>,
    /// Number of greedy colors before folding into `M` classes.
    pub colors: usize,
    /// More than `M` colors were needed; classes are not target-separated.
    pub overfull: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zonal_check: Option<ZonalCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LevelContent {
    Constructed(ConstructedLevel),
    Unconstructed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub kind: FamilyKind,
    pub j: u32,
    pub v: u32,
    pub exponent: u64,
    pub degree: Degree,
    /// `delta_{j,v}` for g, `eps_{j,v}` for h.
    pub radius: f64,
    /// Coloring separation `min(radius, 1)`.
    pub target: f64,
    /// `radius >= 1`, so the target was clamped to 1.
    pub clamped: bool,
    /// Packing separation `min(A radius / 2, 1)`.
    pub separation: f64,
    /// `ln mu(1 - 1/N)` for the level degree `N`.
    pub ln_weight: f64,
    /// Zonal-sum bound for target-separated classes of this degree.
    pub zonal_bound: f64,
    pub content: LevelContent,
}

impl Level {
    pub fn constructed(&self) -> Option<&ConstructedLevel> {
        match &self.content {
            LevelContent::Constructed(c) => Some(c),
            LevelContent::Unconstructed { .. } => None,
        }
    }

    /// Indices of the points in class `l` (1-based).
    pub fn class_members(&self, l: u32) -> Vec<usize> {
        self.constructed()
            .map(|c| c.classes.iter().enumerate().filter(|(_, &k)| k == l).map(|(i, _)| i).collect())
            .unwrap_or_default()
    }

    /// Exact degree when complex evaluation is affordable.
    pub fn pointwise_degree(&self) -> Option<u64> {
        self.degree.exact.filter(|&d| d <= POINTWISE_MAX_DEGREE)
    }

    fn file_name(&self) -> String {
        format!("level_{}_{}_{}.json", self.kind.name(), self.j, self.v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessFamily {
    pub params: WitnessParams,
    pub options: BuildOptions,
    pub seed: u64,
    /// All levels: g before h, then by `j`, then by `v`.
    levels: Vec<Level>,
}

/// Level radius, degree and exponent for `(kind, j, v)`.
fn schedule(params: &WitnessParams, kind: FamilyKind, j: u32, v: u32) -> (u64, Degree, f64) {
    let e = v as u64 * params.m as u64 + j as u64;
    let degree = match kind {
        FamilyKind::G => power_degree(params.p, e),
        FamilyKind::H => q_degree(params.p, e),
    };
    // A^2 N radius^2 = 1.
    let radius = (-params.a.ln() - 0.5 * degree.ln).exp();
    (e, degree, radius)
}

pub fn build_witness_family(params: WitnessParams, options: BuildOptions, seed: u64) -> Result<WitnessFamily> {
    if options.cardinality_budget == 0 || options.rejection_budget == 0 {
        return Err(Error::argument("budgets must be positive"));
    }
    if params.n < 2 {
        return Err(Error::argument("the witness construction needs n >= 2"));
    }
    let mut keys = Vec::new();
    for kind in [FamilyKind::G, FamilyKind::H] {
        for j in 1..=params.m {
            for v in 0..=params.depth {
                keys.push((kind, j, v));
            }
        }
    }
    let levels = keys
        .into_par_iter()
        .map(|(kind, j, v)| build_level(&params, &options, seed, kind, j, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(WitnessFamily {
        params,
        options,
        seed,
        levels,
    })
}

fn build_level(
    params: &WitnessParams,
    options: &BuildOptions,
    seed: u64,
    kind: FamilyKind,
    j: u32,
    v: u32,
) -> Result<Level> {
    let n = params.n;
    let m = params.m;
    let (exponent, degree, radius) = schedule(params, kind, j, v);
    let target = radius.min(1.0);
    let separation = (params.a * radius / 2.0).min(1.0);
    let ln_weight = params.weight.ln_at_gap(-degree.ln);
    let zonal_bound = zonal_sum_bound_scaled(n, target * target * degree.ln.exp())?;
    let level_seed = rng::derive_seed(seed, tag::FAMILY + ((kind as u64) << 32) + exponent);

    // A covering by separation-balls of measure sep^{2(n-1)} needs at least
    // sep^{-2(n-1)} points.
    let floor = separation.powi(-2 * (n as i32 - 1));
    let content = if floor > options.cardinality_budget as f64 {
        LevelContent::Unconstructed {
            reason: format!("cardinality: at least {floor:.3e} points needed"),
        }
    } else {
        match maximal_separated_set_capped(n, separation, level_seed, options.rejection_budget, options.cardinality_budget)? {
            None => LevelContent::Unconstructed {
                reason: format!("cardinality: more than {} points", options.cardinality_budget),
            },
            Some(set) => {
                let raw = greedy_coloring(&set, target);
                let colors = raw.iter().max().map_or(0, |c| c + 1);
                let classes: Vec<u32> = raw.iter().map(|&c| (c % m as usize) as u32 + 1).collect();
                let mut level = ConstructedLevel {
                    set,
                    classes,
                    colors,
                    overfull: colors > m as usize,
                    zonal_check: None,
                };
                if let Some(d) = degree.exact.filter(|&d| d <= POINTWISE_MAX_DEGREE) {
                    if options.zonal_samples > 0 {
                        level.zonal_check = Some(zonal_check(&level, n, m, d, zonal_bound, options.zonal_samples, level_seed)?);
                    }
                }
                LevelContent::Constructed(level)
            }
        }
    };
    Ok(Level {
        kind,
        j,
        v,
        exponent,
        degree,
        radius,
        target,
        clamped: radius >= 1.0,
        separation,
        ln_weight,
        zonal_bound,
        content,
    })
}

fn zonal_check(
    level: &ConstructedLevel,
    n: usize,
    m: u32,
    degree: u64,
    bound: f64,
    samples: usize,
    seed: u64,
) -> Result<ZonalCheck> {
    let mut rng = rng::stream(seed, tag::SUPNORM);
    let polys = (1..=m)
        .map(|l| {
            let centers: Vec<_> = level
                .set
                .points()
                .iter()
                .zip(&level.classes)
                .filter(|(_, &k)| k == l)
                .map(|(p, _)| p.clone())
                .collect();
            ZonalPolynomial::with_dim(n, degree, centers.clone(), vec![Complex64::new(1.0, 0.0); centers.len()])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_sampled = 0.0f64;
    for _ in 0..samples {
        let x = rng::unit_sphere(&mut rng, n);
        for p in &polys {
            max_sampled = max_sampled.max(p.value(&x).norm());
        }
    }
    Ok(ZonalCheck {
        samples,
        max_sampled,
        bound,
        passes: max_sampled <= bound,
        within_two: max_sampled <= 2.0,
    })
}

impl WitnessFamily {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, kind: FamilyKind, j: u32, v: u32) -> Result<&Level> {
        let m = self.params.m;
        if j == 0 || j > m || v > self.params.depth {
            return Err(Error::argument(format!("level (j={j}, v={v}) outside the family")));
        }
        let base = if kind == FamilyKind::G { 0 } else { m as usize * (self.params.depth as usize + 1) };
        Ok(&self.levels[base + (j as usize - 1) * (self.params.depth as usize + 1) + v as usize])
    }

    /// Levels `v = 0..=V` of the series with index `j`.
    pub fn column(&self, kind: FamilyKind, j: u32) -> Result<Vec<&Level>> {
        (0..=self.params.depth).map(|v| self.level(kind, j, v)).collect()
    }

    /// The truncated series `sum_v P_{i,vM+j} / mu(1 - 1/N_v)` over the
    /// constructed levels with an exact degree; `None` when there are none.
    pub fn series(&self, kind: FamilyKind, i: u32, j: u32) -> Result<Option<GapSeries>> {
        let l = tau_power(self.params.m, i as u64, j)?;
        let mut terms = Vec::new();
        for level in self.column(kind, j)? {
            let (Some(c), Some(d)) = (level.constructed(), level.degree.exact) else {
                continue;
            };
            let centers: Vec<_> = level.class_members(l).into_iter().map(|k| c.set.points()[k].clone()).collect();
            let coeff = Complex64::new((-level.ln_weight).exp(), 0.0);
            terms.push(SeriesTerm {
                degree: d,
                poly: ZonalPolynomial::with_dim(self.params.n, d, centers.clone(), vec![coeff; centers.len()])?,
                supnorm_hint: None,
            });
        }
        if terms.is_empty() {
            return Ok(None);
        }
        GapSeries::new(terms, None, None).map(Some)
    }

    /// All `M^2` series of one kind, keyed by `(i, j)`.
    pub fn all_series(&self, kind: FamilyKind) -> Result<Vec<((u32, u32), Option<GapSeries>)>> {
        let m = self.params.m;
        let mut out = Vec::with_capacity((m * m) as usize);
        for i in 1..=m {
            for j in 1..=m {
                out.push(((i, j), self.series(kind, i, j)?));
            }
        }
        Ok(out)
    }

    /// Writes `params.json`, one file per level and `manifest.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("params.json"), &self.params)?;
        let mut entries = Vec::new();
        for level in &self.levels {
            let file = level.file_name();
            write_json(&dir.join(&file), level)?;
            entries.push(ManifestLevel::new(level, file));
        }
        let mut series = Vec::new();
        for kind in [FamilyKind::G, FamilyKind::H] {
            for ((i, j), s) in self.all_series(kind)? {
                series.push(ManifestSeries {
                    kind,
                    i,
                    j,
                    degrees: s.as_ref().map(|s| s.terms().iter().map(|t| t.degree).collect()).unwrap_or_default(),
                    centers: s
                        .as_ref()
                        .map(|s| s.terms().iter().map(|t| t.poly.centers().len()).collect())
                        .unwrap_or_default(),
                });
            }
        }
        let manifest = Manifest {
            seed: self.seed,
            options: self.options,
            levels: entries,
            series,
        };
        write_json(&dir.join("manifest.json"), &manifest)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let params: WitnessParams = read_json(&dir.join("params.json"))?;
        let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
        let levels = manifest
            .levels
            .iter()
            .map(|e| read_json::<Level>(&dir.join(&e.file)))
            .collect::<Result<Vec<_>>>()?;
        let expected = 2 * params.m as usize * (params.depth as usize + 1);
        if levels.len() != expected {
            return Err(Error::Config(format!("manifest lists {} levels, expected {expected}", levels.len())));
        }
        let fam = WitnessFamily {
            params,
            options: manifest.options,
            seed: manifest.seed,
            levels,
        };
        for kind in [FamilyKind::G, FamilyKind::H] {
            for j in 1..=fam.params.m {
                for v in 0..=fam.params.depth {
                    let l = fam.level(kind, j, v)?;
                    if (l.kind, l.j, l.v) != (kind, j, v) {
                        return Err(Error::Config(format!("level file order broken at {} j={j} v={v}", kind.name())));
                    }
                }
            }
        }
        Ok(fam)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    seed: u64,
    options: BuildOptions,
    levels: Vec<ManifestLevel>,
    series: Vec<ManifestSeries>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLevel {
    kind: FamilyKind,
    j: u32,
    v: u32,
    exponent: u64,
    degree: Degree,
    radius: f64,
    status: String,
    points: usize,
    colors: usize,
    overfull: bool,
    clamped: bool,
    file: String,
}

impl ManifestLevel {
    fn new(level: &Level, file: String) -> Self {
        let c = level.constructed();
        ManifestLevel {
            kind: level.kind,
            j: level.j,
            v: level.v,
            exponent: level.exponent,
            degree: level.degree,
            radius: level.radius,
            status: match &level.content {
                LevelContent::Constructed(_) => "constructed".into(),
                LevelContent::Unconstructed { reason } => format!("unconstructed: {reason}"),
            },
            points: c.map_or(0, |c| c.set.len()),
            colors: c.map_or(0, |c| c.colors),
            overfull: c.is_some_and(|c| c.overfull),
            clamped: level.clamped,
            file,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestSeries {
    kind: FamilyKind,
    i: u32,
    j: u32,
    degrees: Vec<u64>,
    centers: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::params::Mode;
    use crate::weights::NormalWeight;

    fn micro() -> WitnessFamily {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let params = WitnessParams::new(2, 1.0, 2, 2, Mode::Micro, 1, w).unwrap();
        build_witness_family(params, BuildOptions::default(), 5).unwrap()
    }

    #[test]
    fn micro_family_shape() {
        let fam = micro();
        assert_eq!(fam.levels().len(), 8);
        let g: Vec<Vec<u64>> = (1..=2)
            .map(|j| fam.column(FamilyKind::G, j).unwrap().iter().map(|l| l.degree.exact.unwrap()).collect())
            .collect();
        assert_eq!(g, vec![vec![2, 8], vec![4, 16]]);
        let h: Vec<Vec<u64>> = (1..=2)
            .map(|j| fam.column(FamilyKind::H, j).unwrap().iter().map(|l| l.degree.exact.unwrap()).collect())
            .collect();
        assert_eq!(h, vec![vec![3, 12], vec![6, 23]]);
        for kind in [FamilyKind::G, FamilyKind::H] {
            let all = fam.all_series(kind).unwrap();
            assert_eq!(all.len(), 4);
            for (_, s) in all {
                assert_eq!(s.unwrap().terms().len(), 2);
            }
        }
    }

    #[test]
    fn micro_sets_are_separated_and_classes_partition() {
        let fam = micro();
        for level in fam.levels() {
            let c = level.constructed().expect("micro levels fit the budget");
            assert!(c.set.first_violation().is_none());
            assert!((level.separation - level.radius / 2.0).abs() < 1e-15);
            let total: usize = (1..=2).map(|l| level.class_members(l).len()).sum();
            assert_eq!(total, c.set.len());
        }
    }

    #[test]
    fn tiny_budget_leaves_levels_unconstructed() {
        let w = NormalWeight::power(0.5, 0.4, 0.7, 0.7).unwrap();
        let params = WitnessParams::new(2, 1.0, 2, 2, Mode::Micro, 1, w).unwrap();
        let opts = BuildOptions {
            cardinality_budget: 10,
            ..Default::default()
        };
        let fam = build_witness_family(params, opts, 1).unwrap();
        let deep = fam.level(FamilyKind::G, 2, 1).unwrap();
        assert!(deep.constructed().is_none());
        assert!(matches!(&deep.content, LevelContent::Unconstructed { reason } if reason.starts_with("cardinality")));
    }

    #[test]
    fn directory_round_trip() {
        let fam = micro();
        let dir = tempfile::tempdir().unwrap();
        fam.write_dir(dir.path()).unwrap();
        let back = WitnessFamily::read_dir(dir.path()).unwrap();
        assert_eq!(fam, back);
    }

    #[test]
    fn family_is_reproducible() {
        assert_eq!(micro(), micro());
    }
}
