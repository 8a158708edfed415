use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use super::config::{Command, LacunarySpec, RunConfig, SeriesInputs, WitnessInputs};
use crate::compose::{operator_verdict, MixedNormParams, OperatorClass, OperatorVerdict, SymbolPair};
use crate::error::{Error, Result};
use crate::polyseries::{membership_profile, GapSeries, Profile, Verdict};
use crate::sphere::UnitVector;
use crate::weights::NormalityReport;
use crate::witness::{
    build_witness_family, verify_growth, FamilyKind, GrowthReport, LevelContent, Mode, WitnessFamily,
    WitnessParams,
};

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
}

/// Directory name of the family written by `witness-build`.
pub const FAMILY_DIR: &str = "family";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: Command,
    pub seed: u64,
    pub verdict: String,
    pub exit_code: i32,
    /// The configuration after defaults, overrides and parameter selection.
    pub config: RunConfig,
    pub result: Outcome,
    /// Family to be written next to the report.
    #[serde(skip)]
    pub family: Option<WitnessFamily>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Weights(NormalityReport),
    Series(Profile),
    WitnessBuild(BuildSummary),
    WitnessVerify(VerifySummary),
    Compose(OperatorVerdict),
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildSummary {
    pub params: WitnessParams,
    pub family_dir: String,
    pub constructed: usize,
    pub unconstructed: usize,
    pub levels: Vec<LevelRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRow {
    pub family: FamilyKind,
    pub j: u32,
    pub v: u32,
    pub exponent: u64,
    pub degree: Option<u64>,
    pub ln_degree: f64,
    pub radius: f64,
    pub separation: f64,
    pub status: String,
    pub points: Option<usize>,
    pub colors: Option<usize>,
    pub overfull: Option<bool>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub params: WitnessParams,
    pub growth: GrowthReport,
}

/// Runs the selected pipeline. Verdict failures are reported through
/// `exit_code`; errors mean the run could not complete.
pub fn run(config: &RunConfig, overrides: &Overrides) -> Result<Report> {
    let command = overrides
        .command
        .or(config.command)
        .ok_or_else(|| Error::Config("no command given on the command line or in the config".into()))?;
    let mut cfg = config.narrowed(command);
    cfg.base_dir = config.base_dir.clone();
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let (Some(mode), Some(w)) = (overrides.mode, cfg.witness.as_mut()) {
        w.params.mode = mode;
    }
    let seed = cfg.seed;
    let (verdict, exit_code, result, family) = match command {
        Command::WeightsVerify => {
            let inputs = cfg.weights.as_ref().ok_or_else(|| RunConfig::missing(command))?;
            let report = inputs.weight.verify_normality(inputs.grid)?;
            let (v, code) = if report.pass { ("pass", 0) } else { ("fail", 1) };
            (v.to_string(), code, Outcome::Weights(report), None)
        }
        Command::SeriesCheck => {
            let inputs = cfg.series.as_mut().ok_or_else(|| RunConfig::missing(command))?;
            inputs.options.seed = seed;
            let series = load_series(inputs, &config.base_dir)?;
            let profile = membership_profile(&series, &inputs.weight, &inputs.options)?;
            let verdict = format!(
                "in_hmu={} in_little={}",
                verdict_name(profile.in_hmu),
                verdict_name(profile.in_little)
            );
            let code = if profile.in_hmu == Verdict::No { 1 } else { 0 };
            (verdict, code, Outcome::Series(profile), None)
        }
        Command::WitnessBuild => {
            let inputs = cfg.witness.as_mut().ok_or_else(|| RunConfig::missing(command))?;
            let params = inputs.params.resolve()?;
            let fam = build_witness_family(params, inputs.build, seed)?;
            let summary = build_summary(&fam);
            let code = if summary.constructed > 0 { 0 } else { 1 };
            let verdict = format!("built {} of {} levels", summary.constructed, fam.levels().len());
            (verdict, code, Outcome::WitnessBuild(summary), Some(fam))
        }
        Command::WitnessVerify => {
            let inputs = cfg.witness.as_mut().ok_or_else(|| RunConfig::missing(command))?;
            let fam = load_or_build(inputs, &config.base_dir, seed)?;
            let shells = match &inputs.verify.shells {
                Some(s) => s.clone(),
                None => (1..=fam.params.m)
                    .flat_map(|j| (0..=fam.params.depth).map(move |v| (j, v)))
                    .collect(),
            };
            let growth = verify_growth(&fam, &shells, inputs.verify.samples, seed)?;
            let meets = growth.shells.iter().all(|r| r.meets_reference != Some(false));
            let code = if growth.c_emp_positive && meets { 0 } else { 1 };
            let verdict = match (growth.c_emp_positive, meets) {
                (true, true) => "growth-verified",
                (true, false) => "below-reference",
                _ => "growth-not-verified",
            };
            let summary = VerifySummary {
                params: fam.params.clone(),
                growth,
            };
            (verdict.to_string(), code, Outcome::WitnessVerify(summary), None)
        }
        Command::ComposeVerdict => {
            let inputs = cfg.compose.as_mut().ok_or_else(|| RunConfig::missing(command))?;
            inputs.options.seed = seed;
            let sym = SymbolPair::new(inputs.dim, inputs.u.clone(), inputs.phi.clone())?;
            let mp = MixedNormParams::new(inputs.target.p, inputs.target.q, inputs.target.phi.clone())?;
            let v = operator_verdict(&sym, &inputs.weight, &mp, &inputs.options, &inputs.t_ladder)?;
            let code = if v.verdict == OperatorClass::BoundedCompact { 0 } else { 1 };
            let name = serde_json::to_value(v.verdict)?.as_str().unwrap_or_default().to_string();
            (name, code, Outcome::Compose(v), None)
        }
    };
    Ok(Report {
        command,
        seed,
        verdict,
        exit_code,
        config: cfg,
        result,
        family,
    })
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|x| x.as_str().map(String::from))
        .unwrap_or_default()
}

fn load_series(inputs: &SeriesInputs, base: &Path) -> Result<GapSeries> {
    let given = [inputs.series.is_some(), inputs.series_file.is_some(), inputs.lacunary.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(Error::Config(
            "series block needs exactly one of \"series\", \"series_file\", \"lacunary\"".into(),
        ));
    }
    if let Some(s) = &inputs.series {
        return Ok(s.clone());
    }
    if let Some(p) = &inputs.series_file {
        let path = if p.is_absolute() { p.clone() } else { base.join(p) };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())));
    }
    lacunary_series(inputs.lacunary.as_ref().expect("checked above"), &inputs.weight)
}

/// The single-center lacunary family normalized so that `a_k` equals the
/// scaling factor.
pub fn lacunary_series(spec: &LacunarySpec, w: &crate::weights::NormalWeight) -> Result<GapSeries> {
    if spec.dim == 0 || spec.terms == 0 || spec.ratio < 2 {
        return Err(Error::Config("lacunary needs dim >= 1, terms >= 1 and ratio >= 2".into()));
    }
    let mut degrees = Vec::with_capacity(spec.terms as usize);
    let mut coeffs = Vec::with_capacity(spec.terms as usize);
    for k in 1..=spec.terms {
        let n_k = spec
            .ratio
            .checked_pow(k)
            .ok_or_else(|| Error::Config(format!("degree {}^{k} overflows", spec.ratio)))?;
        let mu = w.ln_at_gap(-(n_k as f64).ln()).exp();
        degrees.push(n_k);
        coeffs.push(Complex64::new(spec.scaling.factor(k) / mu, 0.0));
    }
    GapSeries::single_center(&UnitVector::basis(spec.dim, 0), &degrees, &coeffs)
}

fn load_or_build(inputs: &mut WitnessInputs, base: &Path, seed: u64) -> Result<WitnessFamily> {
    match &inputs.family_dir {
        Some(dir) => {
            let path = if dir.is_absolute() { dir.clone() } else { base.join(dir) };
            let fam = WitnessFamily::read_dir(&path)?;
            if fam.params.mode != inputs.params.mode {
                return Err(Error::Config(format!(
                    "family in {} was built in {:?} mode, requested {:?}",
                    path.display(),
                    fam.params.mode,
                    inputs.params.mode
                )));
            }
            Ok(fam)
        }
        None => {
            let params = inputs.params.resolve()?;
            build_witness_family(params, inputs.build, seed)
        }
    }
}

fn build_summary(fam: &WitnessFamily) -> BuildSummary {
    let levels: Vec<LevelRow> = fam
        .levels()
        .iter()
        .map(|l| {
            let mut row = LevelRow {
                family: l.kind,
                j: l.j,
                v: l.v,
                exponent: l.exponent,
                degree: l.degree.exact,
                ln_degree: l.degree.ln,
                radius: l.radius,
                separation: l.separation,
                status: "constructed".into(),
                points: None,
                colors: None,
                overfull: None,
                reason: None,
            };
            match &l.content {
                LevelContent::Constructed(c) => {
                    row.points = Some(c.set.len());
                    row.colors = Some(c.colors);
                    row.overfull = Some(c.overfull);
                }
                LevelContent::Unconstructed { reason } => {
                    row.status = "unconstructed".into();
                    row.reason = Some(reason.clone());
                }
            }
            row
        })
        .collect();
    let constructed = levels.iter().filter(|r| r.status == "constructed").count();
    BuildSummary {
        params: fam.params.clone(),
        family_dir: FAMILY_DIR.into(),
        constructed,
        unconstructed: levels.len() - constructed,
        levels,
    }
}
