//! Pipeline configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vsd_core::audio::MfccConfig;
use vsd_core::blood::{
    DEFAULT_ACCEPT_THRESHOLD, DEFAULT_BINARIZE_THRESHOLD, DEFAULT_TARGET_TOTAL,
};
use vsd_core::svm::{GridCell, Scaling};

use crate::error::{io_err, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BloodConfig {
    pub binarize_threshold: f64,
    pub accept_threshold: f64,
    pub target_total: u64,
}

impl Default for BloodConfig {
    fn default() -> Self {
        BloodConfig {
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
            accept_threshold: DEFAULT_ACCEPT_THRESHOLD,
            target_total: DEFAULT_TARGET_TOTAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Explicit kernel grid; the per-channel default grid when absent.
    pub grid: Option<Vec<GridCell>>,
    pub tolerance: f64,
    pub max_passes: usize,
    pub scaling: Scaling,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            grid: None,
            tolerance: 1e-3,
            max_passes: 1000,
            scaling: Scaling::MinMax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Balanced training segments per channel classifier.
    pub n_train: usize,
    /// Balanced test segments for `evaluate --balanced`.
    pub n_test: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_train: 2000,
            n_test: 3000,
        }
    }
}

/// Default input locations; command-line arguments take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub blood_model: Option<PathBuf>,
    pub nonblood_model: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub models_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset_id: String,
    pub fps: f64,
    pub seed: u64,
    pub mfcc: MfccConfig,
    pub blood: BloodConfig,
    pub grid_step: f64,
    pub svm: SvmConfig,
    pub sampling: SamplingConfig,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset_id: "unnamed".into(),
            fps: 25.0,
            seed: 0,
            mfcc: MfccConfig::default(),
            blood: BloodConfig::default(),
            grid_step: vsd_core::fusion::DEFAULT_STEP,
            svm: SvmConfig::default(),
            sampling: SamplingConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Read a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path.display(), e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.blood_model,
            &mut cfg.paths.nonblood_model,
            &mut cfg.paths.split,
            &mut cfg.paths.models_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        self.mfcc
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.blood.binarize_threshold) {
            return bad("blood.binarize_threshold must lie in [0,1]".into());
        }
        if !(self.blood.accept_threshold > 0.0 && self.blood.accept_threshold < 1.0) {
            return bad("blood.accept_threshold must lie in (0,1)".into());
        }
        vsd_core::fusion::divisions_for_step(self.grid_step)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.svm.tolerance > 0.0) || self.svm.max_passes == 0 {
            return bad("svm.tolerance and svm.max_passes must be positive".into());
        }
        if let Some(grid) = &self.svm.grid {
            if grid.is_empty() {
                return bad("svm.grid must not be empty".into());
            }
            for cell in grid {
                cell.kernel
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                if !(cell.c > 0.0) {
                    return bad(format!("svm.grid C must be positive, got {}", cell.c));
                }
            }
        }
        if !self.sampling.n_train.is_multiple_of(2) || !self.sampling.n_test.is_multiple_of(2) {
            return bad("sampling sizes must be even".into());
        }
        for p in [
            &self.paths.blood_model,
            &self.paths.nonblood_model,
            &self.paths.split,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return bad(format!("path {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
