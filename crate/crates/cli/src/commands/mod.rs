//! Subcommand implementations. Each returns a summary for the caller to
//! print; all artifacts are written before returning.

mod build_blood;
mod evaluate;
mod extract;
mod fuse;
mod predict;
mod train;

use std::path::{Path, PathBuf};

use serde::Serialize;
use vsd_core::dataset::{TableHeader, FEATURE_TABLE_FORMAT_VERSION};
use vsd_core::dataset::FeatureRow;
use vsd_core::fusion::ChannelScores;
use vsd_core::svm::TrainedClassifier;
use vsd_core::types::FeatureChannel;

use crate::config::PipelineConfig;
use crate::error::{io_err, CliError, CliResult};

pub use build_blood::{build_blood_model, BuildBloodArgs, BuildBloodSummary};
pub use evaluate::{evaluate, EvaluateArgs, EvaluateSummary, EvalMode};
pub use extract::{extract, ExtractArgs, ExtractSummary, Manifest, VideoInput};
pub use fuse::{fuse_search, FuseSearchArgs, FuseSearchSummary};
pub use predict::{load_predictions, predict, PredictArgs, PredictSummary};
pub use train::{train, TrainArgs, TrainSummary};

/// Validated configuration plus its hash.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub config_hash: String,
}

impl Context {
    pub fn new(config: PipelineConfig) -> CliResult<Self> {
        config.validate()?;
        let config_hash = config.hash();
        Ok(Context {
            config,
            config_hash,
        })
    }

    pub fn header(&self) -> TableHeader {
        TableHeader {
            format_version: FEATURE_TABLE_FORMAT_VERSION,
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
        }
    }
}

pub fn classifier_path(dir: &Path, channel: FeatureChannel) -> PathBuf {
    dir.join(format!("{}.json", channel.token()))
}

/// The four channel classifiers stored in `dir`.
pub fn load_classifiers(dir: &Path) -> CliResult<[TrainedClassifier; 4]> {
    let mut out = Vec::with_capacity(4);
    for c in FeatureChannel::ALL {
        let clf = TrainedClassifier::load(&classifier_path(dir, c))?;
        if clf.channel != c {
            return Err(CliError::Core(vsd_core::Error::Format(format!(
                "{} holds a {} classifier",
                classifier_path(dir, c).display(),
                clf.channel
            ))));
        }
        out.push(clf);
    }
    Ok(out.try_into().expect("four channels"))
}

/// Calibrated probabilities of every channel present in the row.
pub fn channel_scores(row: &FeatureRow, classifiers: &[TrainedClassifier; 4]) -> CliResult<ChannelScores> {
    let mut scores = ChannelScores::default();
    for (c, clf) in FeatureChannel::ALL.into_iter().zip(classifiers) {
        if let Some(x) = row.feature(c) {
            scores.0[c.index()] = Some(clf.predict_proba(x)?);
        }
    }
    Ok(scores)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path.display(), e))
}

pub(crate) fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path.display(), e))
}
