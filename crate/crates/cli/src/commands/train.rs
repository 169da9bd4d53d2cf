use std::path::PathBuf;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vsd_core::dataset::{load_feature_table, sample_balanced, FeatureRow, SampleEntry, SplitRole, SplitSpec};
use vsd_core::svm::{default_grid, kernel_grid_search, GridReport, KernelSpec, Sample, TrainConfig};
use vsd_core::types::FeatureChannel;
use vsd_core::Error;

use super::{classifier_path, create_dir, write_json, Context};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub features: PathBuf,
    /// Falls back to the configured split.
    pub split: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelTrainReport {
    pub channel: FeatureChannel,
    pub train_samples: usize,
    pub validation_samples: usize,
    pub validation_positives: usize,
    pub kernel: KernelSpec,
    pub c: f64,
    pub validation_eer: f64,
    pub grid: GridReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub config_hash: String,
    pub seed: u64,
    pub channels: Vec<ChannelTrainReport>,
}

pub(crate) fn resolve_split(ctx: &Context, split: &Option<PathBuf>) -> CliResult<SplitSpec> {
    let path = split
        .clone()
        .or_else(|| ctx.config.paths.split.clone())
        .ok_or_else(|| CliError::Config("no split file given".into()))?;
    Ok(SplitSpec::load(&path)?)
}

fn samples(rows: &[FeatureRow], entries: impl IntoIterator<Item = usize>, channel: FeatureChannel) -> Vec<Sample> {
    entries
        .into_iter()
        .map(|i| Sample {
            x: rows[i].feature(channel).expect("filtered on presence").to_vec(),
            label: rows[i].violent,
        })
        .collect()
}

fn train_channel(
    ctx: &Context,
    rows: &[FeatureRow],
    split: &SplitSpec,
    channel: FeatureChannel,
) -> CliResult<(vsd_core::svm::TrainedClassifier, ChannelTrainReport)> {
    let cfg = &ctx.config;
    let in_role = |role: SplitRole| {
        rows.iter()
            .enumerate()
            .filter(move |(_, r)| r.feature(channel).is_some() && split.role_of(&r.video_id) == Some(role))
            .map(|(i, _)| i)
    };

    let pool: Vec<SampleEntry> = in_role(SplitRole::Train)
        .map(|i| SampleEntry {
            video_id: rows[i].video_id.clone(),
            index: rows[i].index,
            position: i,
            label: rows[i].violent,
        })
        .collect();
    let positives = pool.iter().filter(|e| e.label).count();
    if positives == 0 || positives == pool.len() {
        return Err(Error::DegenerateData(format!(
            "{channel}: training rows hold a single label ({} rows)",
            pool.len()
        ))
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(channel.index() as u64);
    let picked = sample_balanced(&pool, cfg.sampling.n_train, &mut rng)?;
    let train_set = samples(rows, picked.iter().map(|e| e.position), channel);

    let validation = samples(rows, in_role(SplitRole::Validation), channel);
    let validation_positives = validation.iter().filter(|s| s.label).count();
    if validation_positives == 0 || validation_positives == validation.len() {
        return Err(Error::DegenerateData(format!(
            "{channel}: validation rows hold a single label ({} rows)",
            validation.len()
        ))
        .into());
    }

    let dim = train_set[0].x.len();
    let grid = cfg.svm.grid.clone().unwrap_or_else(|| default_grid(channel, dim));
    let base = TrainConfig {
        c: 1.0,
        tolerance: cfg.svm.tolerance,
        max_passes: cfg.svm.max_passes,
        seed: cfg.seed,
    };
    let (mut clf, grid_report) =
        kernel_grid_search(channel, &train_set, &validation, &grid, cfg.svm.scaling, &base)?;
    clf.config_hash = Some(ctx.config_hash.clone());
    let best = &grid_report.cells[grid_report.best];
    let report = ChannelTrainReport {
        channel,
        train_samples: train_set.len(),
        validation_samples: validation.len(),
        validation_positives,
        kernel: best.kernel,
        c: best.c,
        validation_eer: best.validation_eer.expect("best cell succeeded"),
        grid: grid_report,
    };
    Ok((clf, report))
}

/// One calibrated classifier per channel, trained on balanced samples of the
/// training videos and selected and calibrated on the validation videos.
pub fn train(ctx: &Context, args: &TrainArgs) -> CliResult<TrainSummary> {
    let split = resolve_split(ctx, &args.split)?;
    let (_, rows) = load_feature_table(&args.features)?;
    let mut reports = Vec::new();
    let mut classifiers = Vec::new();
    for channel in FeatureChannel::ALL {
        let (clf, report) = train_channel(ctx, &rows, &split, channel)?;
        log::info!(
            "{channel}: {} (C={}) validation EER {:.4}",
            report.kernel,
            report.c,
            report.validation_eer
        );
        classifiers.push(clf);
        reports.push(report);
    }

    create_dir(&args.out_dir)?;
    for clf in &classifiers {
        clf.save(&classifier_path(&args.out_dir, clf.channel))?;
    }
    let summary = TrainSummary {
        config_hash: ctx.config_hash.clone(),
        seed: ctx.config.seed,
        channels: reports,
    };
    write_json(&args.out_dir.join("train_report.json"), &summary)?;
    Ok(summary)
}
