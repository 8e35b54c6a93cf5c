//! Experiment configuration: a versioned, human-readable TOML schema that
//! resolves into concrete channel, modulation, and detector parameters.
//!
//! Detector `rho` values may be numeric or the keywords `"zf"` (0) and
//! `"lmmse"` (`sigma_v^2 / sigma_x^2`, resolved per SNR point).

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, ChannelModel, ElaaGeometry};
use crate::detectors::{DetectorConfig, DetectorKind, InitKind, RzfSolver, DEFAULT_MLD_CAP};
use crate::modem::Constellation;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub channel: ChannelSection,
    pub modulation: ModulationSection,
    pub detectors: Vec<DetectorSection>,
    /// Es/No grid in dB: `10 log10(sigma_x^2 sigma_h^2 / sigma_v^2)`.
    pub snr_db: Vec<f64>,
    /// Optional user-count sweep; each entry replaces `channel.n`.
    #[serde(default)]
    pub load_sweep: Option<Vec<usize>>,
    pub trials: TrialsSection,
    #[serde(default)]
    pub theory: TheorySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub model: ChannelModel,
    pub m: usize,
    pub n: usize,
    #[serde(default = "default_unit")]
    pub sigma_h_sq: f64,
    #[serde(default = "default_one")]
    pub subarrays: usize,
    #[serde(default)]
    pub geometry: Option<GeometrySection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "default_carrier")]
    pub carrier_freq_hz: f64,
    #[serde(default = "default_array_length")]
    pub array_length_m: f64,
    #[serde(default = "default_perp_distance")]
    pub user_perp_distance_m: f64,
    #[serde(default = "default_pathloss")]
    pub pathloss_exponent: f64,
    /// Explicit user positions; omitted means uniform along the array.
    #[serde(default)]
    pub user_positions_m: Option<Vec<f64>>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            carrier_freq_hz: default_carrier(),
            array_length_m: default_array_length(),
            user_perp_distance_m: default_perp_distance(),
            pathloss_exponent: default_pathloss(),
            user_positions_m: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    /// QAM order J (a power of 4).
    pub j: usize,
    #[serde(default = "default_unit")]
    pub sigma_x_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsSection {
    #[serde(default)]
    pub min_trials: u64,
    pub max_trials: u64,
    pub min_errors: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    /// Channel realizations averaged into each theory curve (0 disables).
    #[serde(default)]
    pub realizations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Also render a self-contained SVG chart next to the CSV.
    #[serde(default)]
    pub svg: bool,
}

/// Regularization policy: a keyword resolved per SNR point, or a number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Keyword(RhoKeyword),
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoKeyword {
    Zf,
    Lmmse,
}

impl RhoSpec {
    pub fn resolve(&self, sigma_v_sq: f64, sigma_x_sq: f64) -> Result<f64> {
        let rho = match self {
            RhoSpec::Keyword(RhoKeyword::Zf) => 0.0,
            RhoSpec::Keyword(RhoKeyword::Lmmse) => sigma_v_sq / sigma_x_sq,
            RhoSpec::Value(v) => *v,
        };
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "resolved rho must be finite and nonnegative, got {rho}"
            )));
        }
        Ok(rho)
    }

    fn label(&self, prefix: &str) -> String {
        match self {
            RhoSpec::Keyword(RhoKeyword::Zf) => "zf".to_string(),
            RhoSpec::Keyword(RhoKeyword::Lmmse) => "lmmse".to_string(),
            RhoSpec::Value(v) => format!("{prefix}({v})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKindTag {
    Mf,
    Rzf,
    Jacobi,
    Pj,
    Mfb,
    Mld,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub kind: DetectorKindTag,
    #[serde(default)]
    pub rho: Option<RhoSpec>,
    /// Iteration count for `jacobi` and `pj`.
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub init: Option<InitSection>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKindTag {
    Zero,
    Mf,
    Rzf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitKindTag,
    #[serde(default)]
    pub rho: Option<RhoSpec>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKindTag {
    Direct,
    Jacobi,
    Cg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKindTag,
    #[serde(default)]
    pub iters: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl SolverSection {
    fn resolve(&self, n: usize) -> Result<RzfSolver> {
        match self.kind {
            SolverKindTag::Direct => Ok(RzfSolver::Direct),
            SolverKindTag::Jacobi => {
                let iters = self.iters.ok_or_else(|| {
                    Error::InvalidConfig("jacobi solver needs an iters field".into())
                })?;
                Ok(RzfSolver::JacobiIter { iters })
            }
            SolverKindTag::Cg => {
                let default = RzfSolver::cg_square_order(n);
                let default_iters = match default {
                    RzfSolver::ConjugateGradient { iters, .. } => iters,
                    _ => unreachable!(),
                };
                Ok(RzfSolver::ConjugateGradient {
                    iters: self.iters.unwrap_or(default_iters),
                    tol: self.tol.unwrap_or(1e-8),
                })
            }
        }
    }
}

impl DetectorSection {
    /// Stable label for results; independent of the SNR point.
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.kind {
            DetectorKindTag::Mf => "mf".into(),
            DetectorKindTag::Mfb => "mfb".into(),
            DetectorKindTag::Mld => "mld".into(),
            DetectorKindTag::Jacobi => "jacobi".into(),
            DetectorKindTag::Rzf => self
                .rho
                .unwrap_or(RhoSpec::Keyword(RhoKeyword::Zf))
                .label("rzf"),
            DetectorKindTag::Pj => {
                let init = match &self.init {
                    None => "zero".to_string(),
                    Some(i) => match i.kind {
                        InitKindTag::Zero => "zero".to_string(),
                        InitKindTag::Mf => "mf".to_string(),
                        InitKindTag::Rzf => i
                            .rho
                            .unwrap_or(RhoSpec::Keyword(RhoKeyword::Zf))
                            .label("rzf"),
                    },
                };
                format!("pj-{init}")
            }
        }
    }

    /// Concrete detector parameters for one operating point.
    pub fn resolve(&self, n: usize, sigma_v_sq: f64, sigma_x_sq: f64) -> Result<DetectorConfig> {
        let cfg = match self.kind {
            DetectorKindTag::Mf => DetectorConfig::mf(),
            DetectorKindTag::Mfb => DetectorConfig::mfb(),
            DetectorKindTag::Mld => DetectorConfig {
                mld_cap: DEFAULT_MLD_CAP,
                ..DetectorConfig::mld()
            },
            DetectorKindTag::Rzf => {
                let rho = self
                    .rho
                    .unwrap_or(RhoSpec::Keyword(RhoKeyword::Zf))
                    .resolve(sigma_v_sq, sigma_x_sq)?;
                let solver = match &self.solver {
                    None => RzfSolver::Direct,
                    Some(s) => s.resolve(n)?,
                };
                DetectorConfig {
                    solver,
                    ..DetectorConfig::rzf(rho)
                }
            }
            DetectorKindTag::Jacobi => {
                let rho = self
                    .rho
                    .unwrap_or(RhoSpec::Value(0.0))
                    .resolve(sigma_v_sq, sigma_x_sq)?;
                let t = self.t.ok_or_else(|| {
                    Error::InvalidConfig("jacobi detector needs a t field".into())
                })?;
                DetectorConfig::jacobi(rho, t)
            }
            DetectorKindTag::Pj => {
                let rho = self
                    .rho
                    .unwrap_or(RhoSpec::Value(0.0))
                    .resolve(sigma_v_sq, sigma_x_sq)?;
                let t = self
                    .t
                    .ok_or_else(|| Error::InvalidConfig("pj detector needs a t field".into()))?;
                let init = match &self.init {
                    None => InitKind::Zero,
                    Some(i) => match i.kind {
                        InitKindTag::Zero => InitKind::Zero,
                        InitKindTag::Mf => InitKind::Mf,
                        InitKindTag::Rzf => {
                            let init_rho = i
                                .rho
                                .unwrap_or(RhoSpec::Keyword(RhoKeyword::Zf))
                                .resolve(sigma_v_sq, sigma_x_sq)?;
                            let solver = match &i.solver {
                                None => RzfSolver::cg_square_order(n),
                                Some(s) => s.resolve(n)?,
                            };
                            InitKind::Rzf {
                                rho: init_rho,
                                solver,
                            }
                        }
                    },
                };
                DetectorConfig {
                    rho,
                    ..DetectorConfig::pj(t, init)
                }
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn kind(&self) -> DetectorKind {
        match self.kind {
            DetectorKindTag::Mf => DetectorKind::Mf,
            DetectorKindTag::Rzf => DetectorKind::Rzf,
            DetectorKindTag::Jacobi => DetectorKind::Jacobi,
            DetectorKindTag::Pj => DetectorKind::Pj,
            DetectorKindTag::Mfb => DetectorKind::Mfb,
            DetectorKindTag::Mld => DetectorKind::Mld,
        }
    }

    /// Whether this detector needs a Gram-matrix system at all.
    pub fn needs_system(&self) -> bool {
        !matches!(self.kind(), DetectorKind::Mfb | DetectorKind::Mld)
    }
}

impl ChannelSection {
    /// Concrete channel config for a possibly overridden user count.
    pub fn to_channel_config(&self, n: usize) -> Result<ChannelConfig> {
        let cfg = match self.model {
            ChannelModel::IidRayleigh => ChannelConfig::iid(self.m, n, self.sigma_h_sq),
            ChannelModel::IndRayleigh => {
                let g = self.geometry.clone().unwrap_or_default();
                let geometry = match g.user_positions_m {
                    Some(pos) => ElaaGeometry {
                        carrier_freq_hz: g.carrier_freq_hz,
                        array_length_m: g.array_length_m,
                        user_perp_distance_m: g.user_perp_distance_m,
                        user_positions_m: pos,
                        pathloss_exponent: g.pathloss_exponent,
                    },
                    None => ElaaGeometry::uniform(
                        g.carrier_freq_hz,
                        g.array_length_m,
                        g.user_perp_distance_m,
                        n,
                        g.pathloss_exponent,
                    ),
                };
                ChannelConfig::ind(self.m, n, self.sigma_h_sq, self.subarrays, geometry)
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// User counts covered by this experiment.
    pub fn loads(&self) -> Vec<usize> {
        match &self.load_sweep {
            Some(v) if !v.is_empty() => v.clone(),
            _ => vec![self.channel.n],
        }
    }

    /// Noise variance for one Es/No point under the configured normalization.
    pub fn sigma_v_sq(&self, snr_db: f64) -> f64 {
        self.modulation.sigma_x_sq * self.channel.sigma_h_sq / 10f64.powf(snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidConfig("snr_db list is empty".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("snr_db contains NaN".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::InvalidConfig("no detectors configured".into()));
        }
        if self.trials.min_errors < 1 {
            return Err(Error::InvalidConfig("min_errors must be >= 1".into()));
        }
        if self.trials.max_trials < self.trials.min_trials.max(1) {
            return Err(Error::InvalidConfig(
                "max_trials must be >= max(min_trials, 1)".into(),
            ));
        }
        Constellation::make_qam(self.modulation.j, self.modulation.sigma_x_sq)?;
        let loads = self.loads();
        for &n in &loads {
            if n < 1 || n > self.channel.m {
                return Err(Error::InvalidConfig(format!(
                    "load n={n} outside 1..=m (m={})",
                    self.channel.m
                )));
            }
            self.channel.to_channel_config(n)?;
            // Dry-run detector resolution at an arbitrary operating point.
            for d in &self.detectors {
                d.resolve(n, 1.0, self.modulation.sigma_x_sq)?;
            }
        }
        if let Some(g) = &self.channel.geometry {
            if let Some(pos) = &g.user_positions_m {
                if loads.iter().any(|&n| n != pos.len()) {
                    return Err(Error::InvalidConfig(
                        "explicit user_positions_m cannot cover a load sweep with a different user count".into(),
                    ));
                }
            }
        }
        let mut labels: Vec<String> = self.detectors.iter().map(|d| d.label()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.detectors.len() {
            return Err(Error::InvalidConfig(
                "detector labels collide; set explicit label fields".into(),
            ));
        }
        Ok(())
    }
}

fn default_unit() -> f64 {
    1.0
}

fn default_one() -> usize {
    1
}

fn default_carrier() -> f64 {
    3.5e9
}

fn default_array_length() -> f64 {
    214.0
}

fn default_perp_distance() -> f64 {
    50.0
}

fn default_pathloss() -> f64 {
    2.0
}
