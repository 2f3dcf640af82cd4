//! Run configuration: one JSON document driving every pipeline stage.
//!
//! Unknown keys are rejected and every random choice traces back to a seed
//! in the document; there is no implicit entropy. Artifacts embed the
//! canonical SHA-256 hash of the configuration that produced them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{Hyperparams, ModelKind};
use crate::error::ArcError;
use crate::eval::EvalOptions;
use crate::features::FeatureBands;
use crate::monitor::MonitorConfig;
use crate::seed;
use crate::signal::{RegimeLabel, RegimeParams};
use crate::Result;

/// Spectral pipeline geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub window_len: usize,
    pub hop: usize,
    pub nfft: usize,
    pub sample_rate: f64,
    /// Band geometry for the spectral descriptors.
    pub bands: FeatureBands,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_len: crate::signal::DEFAULT_WINDOW_LEN,
            hop: crate::signal::DEFAULT_HOP,
            nfft: crate::tfr::DEFAULT_NFFT,
            sample_rate: crate::signal::DEFAULT_SAMPLE_RATE,
            bands: FeatureBands::default(),
        }
    }
}

/// Generator section: one parameter set per phase, synthesized in the fixed
/// phase order transient, stable, extinction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub transient: RegimeParams,
    pub stable: RegimeParams,
    pub extinction: RegimeParams,
}

impl GenerateConfig {
    /// Phase parameter sets in order, paired with their regime label.
    pub fn phases(&self) -> [(RegimeLabel, &RegimeParams); 3] {
        [
            (RegimeLabel::Transient, &self.transient),
            (RegimeLabel::Stable, &self.stable),
            (RegimeLabel::Extinction, &self.extinction),
        ]
    }
}

/// Training section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub hyperparams: Hyperparams,
    /// Select SVM (C, gamma) by inner 5-fold CV over a small grid.
    pub grid_search: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::SvmRbf,
            hyperparams: Hyperparams::default(),
            grid_search: false,
        }
    }
}

/// Acceptance thresholds the eval stage enforces via its exit code.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalThresholds {
    pub min_accuracy: Option<f64>,
    pub min_macro_f1: Option<f64>,
}

/// Evaluation section.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub options: EvalOptions,
    pub thresholds: EvalThresholds,
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; stage and phase seeds derive from it.
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub generate: GenerateConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub monitor: MonitorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::with_seed(42)
    }
}

impl RunConfig {
    /// The shipped default configuration: three phases of 49 windows each
    /// under the default pipeline, all seeds derived from the master.
    pub fn with_seed(master: u64) -> Self {
        let pipeline = PipelineConfig::default();
        // 49 windows per phase: window_len + 48 * hop samples exactly
        let phase_samples = pipeline.window_len + 48 * pipeline.hop;
        let duration_s = phase_samples as f64 / pipeline.sample_rate;
        let phase = |idx: u64| RegimeParams {
            duration_s,
            seed: seed::derive(master, idx),
            ..RegimeParams::default()
        };
        Self {
            seed: master,
            pipeline,
            generate: GenerateConfig {
                transient: phase(0),
                stable: phase(1),
                extinction: RegimeParams {
                    // reach full modulation depth well inside the phase
                    instability_lambda: 2.5,
                    ..phase(2)
                },
            },
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            monitor: MonitorConfig::default(),
        }
    }

    /// Replace the master seed and re-derive the per-phase seeds.
    pub fn override_seed(&mut self, master: u64) {
        self.seed = master;
        self.generate.transient.seed = seed::derive(master, 0);
        self.generate.stable.seed = seed::derive(master, 1);
        self.generate.extinction.seed = seed::derive(master, 2);
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| ArcError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Canonical SHA-256 over the key-sorted JSON encoding.
    pub fn hash(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let canonical = serde_json::to_string(&value)?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Ok(hex_string(&hasher.finalize()))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::window_count;

    #[test]
    fn default_config_yields_49_windows_per_phase() {
        let cfg = RunConfig::default();
        let n = (cfg.generate.stable.duration_s * cfg.pipeline.sample_rate).round() as usize;
        assert_eq!(
            window_count(n, cfg.pipeline.window_len, cfg.pipeline.hop),
            49
        );
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let mut c = RunConfig::default();
        c.train.model = ModelKind::Knn;
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn json_round_trip_preserves_hash() {
        let cfg = RunConfig::default();
        let json = cfg.to_json().unwrap();
        let back = RunConfig::from_json(&json).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash().unwrap(), back.hash().unwrap());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut value: serde_json::Value = serde_json::to_value(RunConfig::default()).unwrap();
        value["surprise"] = serde_json::json!(1);
        let err = RunConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("surprise"), "{err}");
    }

    #[test]
    fn override_seed_rederives_phase_seeds() {
        let mut cfg = RunConfig::default();
        let before = cfg.generate.stable.seed;
        cfg.override_seed(7);
        assert_eq!(cfg.seed, 7);
        assert_ne!(cfg.generate.stable.seed, before);
        assert_eq!(cfg, RunConfig::with_seed(7));
    }
}
