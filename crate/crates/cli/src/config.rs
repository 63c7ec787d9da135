//! Experiment configuration: a TOML document with explicit seeds.
//!
//! Every run is fully determined by this file; the only environment input
//! honored is `PMLAB_OUTPUT_DIR`, which overrides the output directory.

use anyhow::{Context, Result};
use pmlab::attack::AttackConfig;
use pmlab::model::{Activation, AdvTrainSettings, OptimizerKind, TrainConfig};
use pmlab::sampler::{PgaConfig, PgaOptimizer};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form tag recorded in outputs.
    pub experiment: String,
    /// Master seed; sub-experiments derive their streams from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub toy: ToySection,
    pub pga: PgaSection,
    pub attack: AttackSection,
    pub ellipsoid: EllipsoidSection,
    pub spectral: SpectralSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "pmlab".into(),
            seed: 42,
            output_dir: PathBuf::from("pmlab-out"),
            toy: ToySection::default(),
            pga: PgaSection::default(),
            attack: AttackSection::default(),
            ellipsoid: EllipsoidSection::default(),
            spectral: SpectralSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySection {
    pub ambient_dim: usize,
    pub n_classes: usize,
    pub intrinsic_dim: usize,
    pub n_per_class: usize,
    pub n_test_per_class: usize,
    pub noise_sigma: f64,
    pub hidden_dims: Vec<usize>,
    /// `tanh`, `softplus` or `relu`.
    pub activation: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Momentum for SGD; `adam = true` switches optimizer.
    pub momentum: f64,
    pub adam: bool,
    pub weight_decay: f64,
    /// Adversarial-training radii; 0 means standard training. One model is
    /// trained per entry.
    pub train_eps: Vec<f64>,
    /// Attack radius for robust-accuracy scoring.
    pub eval_eps: f64,
    pub n_pm_per_class: usize,
    pub n_distance_inits: usize,
}

impl Default for ToySection {
    fn default() -> Self {
        Self {
            ambient_dim: 64,
            n_classes: 3,
            intrinsic_dim: 4,
            n_per_class: 5000,
            n_test_per_class: 300,
            noise_sigma: 0.02,
            hidden_dims: vec![128],
            activation: "tanh".into(),
            epochs: 60,
            batch_size: 64,
            learning_rate: 0.05,
            momentum: 0.9,
            adam: false,
            weight_decay: 4e-4,
            train_eps: vec![0.0, 0.03, 0.06],
            eval_eps: 0.06,
            n_pm_per_class: 2000,
            n_distance_inits: 300,
        }
    }
}

impl ToySection {
    pub fn activation(&self) -> Result<Activation> {
        match self.activation.as_str() {
            "tanh" => Ok(Activation::Tanh),
            "softplus" => Ok(Activation::Softplus),
            "relu" => Ok(Activation::Relu),
            other => anyhow::bail!("unknown activation '{other}'"),
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.ambient_dim];
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.n_classes);
        dims
    }

    pub fn train_config(&self, eps: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: if self.adam {
                OptimizerKind::adam_default()
            } else {
                OptimizerKind::Sgd {
                    momentum: self.momentum,
                }
            },
            weight_decay: self.weight_decay,
            adversarial: (eps > 0.0).then(|| AdvTrainSettings::new(eps)),
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgaSection {
    pub step_size: f64,
    pub threshold: f64,
    pub max_iters: usize,
    /// `plain` or `adam`.
    pub optimizer: String,
    pub noise_sigma: f64,
    pub momentum: f64,
    pub allow_adam_fallback: bool,
}

impl Default for PgaSection {
    fn default() -> Self {
        let d = PgaConfig::default();
        Self {
            step_size: d.step_size,
            threshold: d.threshold,
            max_iters: d.max_iters,
            optimizer: "plain".into(),
            noise_sigma: d.noise_sigma,
            momentum: d.momentum,
            allow_adam_fallback: d.allow_adam_fallback,
        }
    }
}

impl PgaSection {
    pub fn to_config(&self) -> Result<PgaConfig> {
        let optimizer = match self.optimizer.as_str() {
            "plain" => PgaOptimizer::Plain,
            "adam" => PgaOptimizer::Adam,
            other => anyhow::bail!("unknown PGA optimizer '{other}'"),
        };
        Ok(PgaConfig {
            step_size: self.step_size,
            threshold: self.threshold,
            max_iters: self.max_iters,
            optimizer,
            noise_sigma: self.noise_sigma,
            momentum: self.momentum,
            allow_adam_fallback: self.allow_adam_fallback,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub steps: usize,
    pub restarts: usize,
    /// Step size as a fraction of epsilon.
    pub step_fraction: f64,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            steps: 40,
            restarts: 2,
            step_fraction: 0.25,
        }
    }
}

impl AttackSection {
    pub fn to_config(&self, epsilon: f64, seed: u64) -> AttackConfig {
        AttackConfig {
            epsilon,
            steps: self.steps,
            step_size: epsilon * self.step_fraction,
            restarts: self.restarts,
            target: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipsoidSection {
    pub ambient_dim: usize,
    pub radius_low: f64,
    pub radius_high: f64,
    pub n_points: usize,
    /// Intrinsic-dimension grid; log-spaced plus both endpoints by default.
    pub d_grid: Vec<usize>,
    pub svg: bool,
}

impl Default for EllipsoidSection {
    fn default() -> Self {
        Self {
            ambient_dim: 3072,
            radius_low: 6.0,
            radius_high: 30.0,
            n_points: 200,
            d_grid: vec![1, 2, 5, 12, 30, 75, 190, 480, 1000, 1500, 2000, 3072],
            svg: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    /// Paths of manifold sample-set files.
    pub pm_sets: Vec<PathBuf>,
    /// Paths of data sample-set files.
    pub data_sets: Vec<PathBuf>,
    pub n_bins: usize,
    pub variance_fraction: f64,
    pub baseline_trials: usize,
    /// Images per synthetic control set.
    pub control_images: usize,
    /// Side of the synthetic control images.
    pub control_side: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self {
            pm_sets: Vec::new(),
            data_sets: Vec::new(),
            n_bins: 40,
            variance_fraction: 0.9,
            baseline_trials: 200,
            control_images: 24,
            control_side: 64,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Output directory after the environment override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os("PMLAB_OUTPUT_DIR") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Hash of the canonical serialized config, stamped into every CSV.
    /// The output directory is excluded: writing the same experiment to a
    /// different destination must not change its identity.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = toml::to_string(&canonical).unwrap_or_default();
        format!("{:08x}", pmlab::io::crc32(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.config_hash(), back.config_hash());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        b.seed = 43;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn rejects_unknown_fields() {
        let err = toml::from_str::<ExperimentConfig>("unknown_key = 1");
        assert!(err.is_err());
    }
}
