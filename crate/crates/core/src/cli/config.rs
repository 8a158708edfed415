use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compose::{ComposeOptions, Multiplier, SelfMap, T_LADDER};
use crate::error::{Error, Result};
use crate::polyseries::{GapSeries, ProfileOptions};
use crate::weights::NormalWeight;
use crate::witness::{select_a, select_p, BuildOptions, Constants, Mode, PConstraints, TailPolicy, WitnessParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    WeightsVerify,
    SeriesCheck,
    WitnessBuild,
    WitnessVerify,
    ComposeVerdict,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::WeightsVerify => "weights-verify",
            Command::SeriesCheck => "series-check",
            Command::WitnessBuild => "witness-build",
            Command::WitnessVerify => "witness-verify",
            Command::ComposeVerdict => "compose-verdict",
        }
    }

    fn block(self) -> &'static str {
        match self {
            Command::WeightsVerify => "weights",
            Command::SeriesCheck => "series",
            Command::WitnessBuild | Command::WitnessVerify => "witness",
            Command::ComposeVerdict => "compose",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A run configuration file. Only the block of the selected command is
/// used; the others may be present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    /// Where reports are written; not echoed into reports.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsInputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesInputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessInputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compose: Option<ComposeInputs>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsInputs {
    pub weight: NormalWeight,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesInputs {
    pub weight: NormalWeight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<GapSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lacunary: Option<LacunarySpec>,
    #[serde(default)]
    pub options: ProfileOptions,
}

/// `sum_k s_k <z, e_1>^{b^k} / mu(1 - b^{-k})` for `k = 1..=terms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LacunarySpec {
    pub dim: usize,
    pub terms: u32,
    #[serde(default = "default_ratio")]
    pub ratio: u64,
    #[serde(default)]
    pub scaling: Scaling,
}

fn default_ratio() -> u64 {
    2
}

/// Extra factor `s_k` on term `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `1`
    #[default]
    Flat,
    /// `1/(k+1)`
    Damped,
    /// `k+1`
    Amplified,
}

impl Scaling {
    pub fn factor(self, k: u32) -> f64 {
        match self {
            Scaling::Flat => 1.0,
            Scaling::Damped => 1.0 / (k as f64 + 1.0),
            Scaling::Amplified => k as f64 + 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessInputs {
    pub params: WitnessSpec,
    #[serde(default)]
    pub build: BuildOptions,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Previously built family for `witness-verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_dir: Option<PathBuf>,
}

/// Witness parameters; `a` and `p` are selected when omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub m: u32,
    pub mode: Mode,
    pub depth: u32,
    pub weight: NormalWeight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailPolicy>,
    #[serde(default = "default_a_grid")]
    pub a_grid: f64,
}

fn default_a_grid() -> f64 {
    0.01
}

impl WitnessSpec {
    /// Fills in `a` and `p` when omitted and validates the parameters.
    pub fn resolve(&mut self) -> Result<WitnessParams> {
        let constants = Constants::for_mode(self.mode);
        let a = match self.a {
            Some(a) => a,
            None => select_a(self.n, self.a_grid, constants.zonal_excess)?,
        };
        let p = match self.p {
            Some(p) => p,
            None => select_p(&self.weight, self.m, PConstraints::ALL, &constants)?,
        };
        self.a = Some(a);
        self.p = Some(p);
        let params = WitnessParams::new(self.n, a, p, self.m, self.mode, self.depth, self.weight.clone())?;
        Ok(match self.tail {
            Some(t) => params.with_tail(t),
            None => {
                self.tail = Some(params.tail);
                params
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub samples: usize,
    /// `(j, v)` shells; every stored shell when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shells: Option<Vec<(u32, u32)>>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            samples: 1000,
            shells: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeInputs {
    pub dim: usize,
    pub u: Multiplier,
    pub phi: SelfMap,
    /// Weight of the source space.
    pub weight: NormalWeight,
    pub target: TargetSpec,
    #[serde(default)]
    pub options: ComposeOptions,
    #[serde(default = "default_t_ladder")]
    pub t_ladder: Vec<f64>,
}

fn default_t_ladder() -> Vec<f64> {
    T_LADDER.to_vec()
}

/// Mixed-norm target space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub p: f64,
    pub q: f64,
    pub phi: NormalWeight,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
    }

    /// Reads a config file; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub(crate) fn missing(command: Command) -> Error {
        Error::Config(format!(
            "command {command} needs a \"{}\" block",
            command.block()
        ))
    }

    /// Keeps only the block the command uses.
    pub(crate) fn narrowed(&self, command: Command) -> RunConfig {
        let mut out = RunConfig {
            command: Some(command),
            seed: self.seed,
            output_dir: None,
            base_dir: PathBuf::new(),
            ..Default::default()
        };
        match command {
            Command::WeightsVerify => out.weights = self.weights.clone(),
            Command::SeriesCheck => out.series = self.series.clone(),
            Command::WitnessBuild | Command::WitnessVerify => out.witness = self.witness.clone(),
            Command::ComposeVerdict => out.compose = self.compose.clone(),
        }
        out
    }
}
