use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attribution::DEFAULT_EPSILON;
use crate::circuit::{defaults, SynthesisSpec};
use crate::dynamics::{LorenzParams, PulseConfig};
use crate::error::{Error, Result};
use crate::snn::{ModelConfig, TrainConfig};

/// Environment variable that re-roots relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "TECTAL_OUTPUT_ROOT";

pub const DEFAULT_SEED: u64 = 42;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

fn default_communities() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySpec {
    pub name: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeasibilityConfig {
    pub pulse: PulseConfig,
    pub pathways: Vec<PathwaySpec>,
    /// Write a per-pathway activity trace CSV.
    pub traces: bool,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            pulse: PulseConfig::default(),
            pathways: defaults::pathways()
                .into_iter()
                .map(|(name, source, target)| PathwaySpec { name, source, target })
                .collect(),
            traces: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    /// Group names; the single entry `all` selects every configured group.
    pub groups: Vec<String>,
    pub epsilon: f64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            groups: defaults::sweep_groups(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Accuracy sweep tables; unset entries use the bundled tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    pub budget_table: Option<PathBuf>,
    pub noise_table: Option<PathBuf>,
}

/// Everything a run needs. Exactly one of `matrix` and `synthesis` names the
/// circuit. The global `seed` overrides the synthesis, initialisation and
/// data-shuffling seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisSpec>,
    /// Group configuration file; unset means the built-in groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_communities")]
    pub communities: usize,
    #[serde(default)]
    pub lorenz: LorenzParams,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub feasibility: FeasibilityConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
    #[serde(default)]
    pub transfer: TransferConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            matrix: None,
            synthesis: Some(SynthesisSpec::default()),
            groups: None,
            output_dir: default_output_dir(),
            communities: default_communities(),
            lorenz: LorenzParams::default(),
            model: ModelConfig::default(),
            feasibility: FeasibilityConfig::default(),
            train: TrainConfig::default(),
            ablation: AblationConfig::default(),
            transfer: TransferConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config; input paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.matrix);
        rebase(base, &mut cfg.groups);
        rebase(base, &mut cfg.transfer.budget_table);
        rebase(base, &mut cfg.transfer.noise_table);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is serialisable")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Uses a circuit file instead of synthesis.
    pub fn with_matrix(mut self, path: impl Into<PathBuf>) -> Self {
        self.matrix = Some(path.into());
        self.synthesis = None;
        self
    }

    /// Propagates the global seed and checks the circuit source.
    pub fn resolved(mut self) -> Result<Self> {
        match (&self.matrix, &mut self.synthesis) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `matrix` or `synthesis`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config("one of `matrix` or `synthesis` is required".into()))
            }
            (None, Some(s)) => s.seed = self.seed,
            (Some(_), None) => {}
        }
        self.train.seed = self.seed;
        if !(self.ablation.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "ablation epsilon must be positive, got {}",
                self.ablation.epsilon
            )));
        }
        self.train.validate()?;
        self.lorenz.validate()?;
        Ok(self)
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config is serialisable");
        hex::encode(Sha256::digest(&json))
    }

    /// Output directory after applying [`OUTPUT_ROOT_ENV`] to relative paths.
    pub fn output_path(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}
