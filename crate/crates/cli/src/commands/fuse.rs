use std::path::PathBuf;

use serde::Serialize;
use vsd_core::dataset::{load_feature_table, SplitRole};
use vsd_core::fusion::{weight_search, ClassSearchReport, Provenance, WeightsFile};
use vsd_core::Error;

use super::train::resolve_split;
use super::{channel_scores, load_classifiers, write_json, Context};
use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct FuseSearchArgs {
    pub features: PathBuf,
    pub split: Option<PathBuf>,
    pub classifiers: PathBuf,
    /// Overrides the configured grid step.
    pub step: Option<f64>,
    pub out: PathBuf,
    /// Defaults to `<out stem>_report.json` beside the weights file.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuseSearchSummary {
    pub config_hash: String,
    pub seed: u64,
    pub step: f64,
    pub validation_segments: usize,
    pub skipped_incomplete: usize,
    pub classes: Vec<ClassSearchReport>,
}

/// Per-class fusion weights minimizing the EER on the validation videos.
pub fn fuse_search(ctx: &Context, args: &FuseSearchArgs) -> CliResult<FuseSearchSummary> {
    let split = resolve_split(ctx, &args.split)?;
    let step = args.step.unwrap_or(ctx.config.grid_step);
    let classifiers = load_classifiers(&args.classifiers)?;
    let (_, rows) = load_feature_table(&args.features)?;

    let mut scores = Vec::new();
    let mut truth = Vec::new();
    let mut skipped = 0;
    for row in rows.iter().filter(|r| split.role_of(&r.video_id) == Some(SplitRole::Validation)) {
        if row.incomplete {
            skipped += 1;
            continue;
        }
        scores.push(channel_scores(row, &classifiers)?);
        truth.push(row.class_truth());
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} incomplete validation rows");
    }
    if scores.is_empty() {
        return Err(Error::MissingFeature("no complete validation rows".into()).into());
    }

    let outcome = weight_search(&scores, &truth, step)?;
    let mut file = WeightsFile::new(
        &outcome.weights,
        Provenance {
            dataset_id: ctx.config.dataset_id.clone(),
            seed: ctx.config.seed,
        },
    );
    file.config_hash = Some(ctx.config_hash.clone());
    file.save(&args.out)?;

    let summary = FuseSearchSummary {
        config_hash: ctx.config_hash.clone(),
        seed: ctx.config.seed,
        step,
        validation_segments: scores.len(),
        skipped_incomplete: skipped,
        classes: outcome.reports,
    };
    let report = args.report.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("weights");
        args.out.with_file_name(format!("{stem}_report.json"))
    });
    write_json(&report, &summary)?;
    Ok(summary)
}
