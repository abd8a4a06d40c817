use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fsio::read_to_string;
use crate::objective::TrainConfig;
use crate::optimizer::OptimizerConfig;

/// How the training input file is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `child<TAB>parent` edges; trained on the transitive closure.
    #[default]
    Taxonomy,
    /// `id1<TAB>id2<TAB>score` with symmetric nonnegative scores.
    Similarity,
    /// `entity<TAB>set` rows; scored by shared-set similarity.
    Annotations,
    /// `id_a<TAB>id_b<TAB>weight` events, summed per pair.
    Interactions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Canvas width and height in pixels.
    pub size: u32,
    /// Point radius in pixels.
    pub radius: f64,
    /// Draw taxonomy edges as line segments.
    pub edges: bool,
    /// Draw id labels next to points.
    pub labels: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            size: 800,
            radius: 3.0,
            edges: false,
            labels: false,
        }
    }
}

/// Optimizer keys as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub lr: f64,
    pub epochs: usize,
    pub burnin: usize,
    pub burnin_factor: f64,
    pub seed: u64,
    pub renormalize_every: u64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerConfig::default().into()
    }
}

impl From<OptimizerConfig> for OptimizerSection {
    fn from(o: OptimizerConfig) -> Self {
        OptimizerSection {
            lr: o.learning_rate,
            epochs: o.epochs,
            burnin: o.burnin_epochs,
            burnin_factor: o.burnin_factor,
            seed: o.seed,
            renormalize_every: o.renormalize_every,
        }
    }
}

impl From<&OptimizerSection> for OptimizerConfig {
    fn from(o: &OptimizerSection) -> Self {
        OptimizerConfig {
            learning_rate: o.lr,
            epochs: o.epochs,
            burnin_epochs: o.burnin,
            burnin_factor: o.burnin_factor,
            seed: o.seed,
            renormalize_every: o.renormalize_every,
        }
    }
}

/// Resolved run configuration. Flags override file keys, which override
/// the defaults below.
///
/// ```toml
/// mode = "taxonomy"
/// dim = 5
/// negatives = 50
/// eval_every = 50
/// input = "tree.tsv"
/// output = "emb.tsv"
///
/// [optimizer]
/// lr = 0.3
/// epochs = 300
/// seed = 7
///
/// [render]
/// size = 600
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub dim: usize,
    pub negatives: usize,
    pub threads: usize,
    /// Evaluate every this many epochs; 0 disables periodic evaluation.
    pub eval_every: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Ground truth for periodic evaluation; defaults to the input in
    /// taxonomy mode.
    pub taxonomy: Option<PathBuf>,
    pub optimizer: OptimizerSection,
    pub render: RenderOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            mode: Mode::default(),
            dim: t.dim,
            negatives: t.negatives,
            threads: t.threads,
            eval_every: 0,
            input: None,
            output: None,
            taxonomy: None,
            optimizer: t.optimizer.into(),
            render: RenderOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, source: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {}", source.display(), e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_to_string(path)?, path)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            negatives: self.negatives,
            threads: self.threads,
            optimizer: (&self.optimizer).into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        for (name, p) in [("input", &self.input), ("output", &self.output), ("taxonomy", &self.taxonomy)] {
            if matches!(p, Some(p) if p.as_os_str().is_empty()) {
                return Err(Error::Config(format!("{name} path is empty")));
            }
        }
        if self.render.size == 0 {
            return Err(Error::Config("render size must be positive".into()));
        }
        if !(self.render.radius.is_finite() && self.render.radius >= 0.0) {
            return Err(Error::Config("render radius must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
