use std::path::{Path, PathBuf};

use endsel::evaluation::{GridSpec, PipelineConfig, SplitPlan};
use endsel::signal::DEFAULT_WINDOW_LEN;
use endsel::synth::SynthSpec;
use serde::{Deserialize, Serialize};

/// Listed under `--help`; kept in step with [`RunConfig`].
pub const CONFIG_KEYS: &str = "\
CONFIG FILE (--config, one JSON object; unknown keys are rejected, flags win):
  dataset            path to a dataset manifest
  synth              synthetic dataset used when no manifest is given:
    n_per_class, n_samples, n_channels, planted_channels, effect_size
  window_len         samples per segment (2048)
  seed               master seed for synthesis, splits and models (0)
  out                output directory (out)
  workers            worker threads (all cores)
  pipeline:
    method           en | end
    n_channels       channels kept from the ranking (3)
    extractor        emd | dwt | slbp
    classifier       knn | svm | ens
    classifier_params: knn_k, svm_c, svm_gamma, svm_tol, svm_max_iter,
                       ens_trees, ens_max_depth
    features:        dwt_levels, emd_imfs,
                     sift { max_sift_iters, theta1, theta2, alpha },
                     slbp { half_width }
    entropy_bins     histogram bins for channel entropy (256)
    chi2_bins        equal-frequency bins for the chi-square test (10)
    keep_fraction    share of features kept after the chi-square test (0.5)
    feature_order    ranked | canonical
  split:
    strategy         chrono | random | kfold
    repeats          random 70/30 repeats (10)
    folds            k in k-fold (10)
    unit             segment | subject
  grid:              axes for `run --grid` and `sweep`:
    methods, extractors, classifiers, n_channels, strategies";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    pub window_len: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub pipeline: PipelineConfig,
    pub split: SplitPlan,
    pub grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            synth: None,
            window_len: DEFAULT_WINDOW_LEN,
            seed: 0,
            out: PathBuf::from("out"),
            workers: None,
            pipeline: PipelineConfig::default(),
            split: SplitPlan::default(),
            grid: GridSpec::default(),
        }
    }
}

/// A problem with the configuration itself, reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Checks that need no data; run before any computation.
    pub fn validate(&self) -> Result<(), endsel::Error> {
        if self.window_len == 0 {
            return Err(endsel::Error::InvalidParameter("window_len must be ≥ 1".into()));
        }
        if self.workers == Some(0) {
            return Err(endsel::Error::InvalidParameter("workers must be ≥ 1".into()));
        }
        if let Some(spec) = &self.synth {
            spec.validate()?;
        }
        self.split.validate()?;
        self.pipeline.validate(self.max_channels())
    }

    fn max_channels(&self) -> usize {
        self.synth
            .as_ref()
            .map_or(endsel::signal::MONTAGE.len(), |s| s.n_channels)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parse a lowercase enum name through its serde representation.
pub fn parse_name<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}
