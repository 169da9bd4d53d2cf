use std::collections::HashMap;
use std::path::PathBuf;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vsd_core::dataset::{load_feature_table, sample_balanced, SampleEntry};
use vsd_core::eval::{roc, MetricsReport};
use vsd_core::types::{PerClass, SegmentScoreRecord, ViolenceClass};
use vsd_core::Error;

use super::predict::load_predictions;
use super::{create_dir, write_json, Context};
use crate::error::{io_err, CliResult};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// One ROC per violence class over its fused class score.
    Multiclass,
    /// One ROC over the maximum class score against violent/non-violent.
    Binary,
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub predictions: PathBuf,
    /// Feature table carrying the ground-truth labels.
    pub ground_truth: PathBuf,
    pub mode: EvalMode,
    pub out_dir: PathBuf,
    pub svg: bool,
    /// Evaluate on a balanced random subset of `sampling.n_test` segments.
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateSummary {
    pub mode: EvalMode,
    pub config_hash: String,
    pub seed: u64,
    pub segments: usize,
    /// Multi-class mode; `null` for classes without both labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<PerClass<Option<MetricsReport>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary: Option<MetricsReport>,
    pub roc_files: Vec<String>,
}

struct Joined<'a> {
    record: &'a SegmentScoreRecord,
    classes: PerClass<bool>,
    violent: bool,
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> CliResult<EvaluateSummary> {
    let (_, records) = load_predictions(&args.predictions)?;
    let (_, rows) = load_feature_table(&args.ground_truth)?;
    let truth: HashMap<(&str, usize), _> = rows
        .iter()
        .map(|r| ((r.video_id.as_str(), r.index), r))
        .collect();

    let mut joined = Vec::with_capacity(records.len());
    for rec in &records {
        let row = truth
            .get(&(rec.segment.video_id.as_str(), rec.segment.index))
            .ok_or_else(|| {
                Error::MissingFeature(format!(
                    "no ground truth for {}#{}",
                    rec.segment.video_id, rec.segment.index
                ))
            })?;
        joined.push(Joined {
            record: rec,
            classes: row.class_truth(),
            violent: row.violent,
        });
    }
    if joined.is_empty() {
        return Err(Error::MissingFeature("no predictions".into()).into());
    }

    if args.balanced {
        let pool: Vec<SampleEntry> = joined
            .iter()
            .enumerate()
            .map(|(i, j)| SampleEntry {
                video_id: j.record.segment.video_id.clone(),
                index: j.record.segment.index,
                position: i,
                label: j.violent,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
        rng.set_stream(1);
        let picked = sample_balanced(&pool, ctx.config.sampling.n_test, &mut rng)?;
        let mut keep = vec![false; joined.len()];
        picked.iter().for_each(|e| keep[e.position] = true);
        let mut k = keep.into_iter();
        joined.retain(|_| k.next().unwrap_or(false));
    }

    create_dir(&args.out_dir)?;
    let mut roc_files = Vec::new();
    let mut emit = |name: &str, scores: &[f64], labels: &[bool]| -> CliResult<MetricsReport> {
        let curve = roc(scores, labels)?;
        let csv = args.out_dir.join(format!("roc_{name}.csv"));
        std::fs::write(&csv, curve.to_csv()).map_err(|e| io_err(csv.display(), e))?;
        // names relative to the output directory keep metrics.json portable
        roc_files.push(format!("roc_{name}.csv"));
        if args.svg {
            let svg = args.out_dir.join(format!("roc_{name}.svg"));
            std::fs::write(&svg, curve.to_svg(&format!("ROC {name}")))
                .map_err(|e| io_err(svg.display(), e))?;
        }
        Ok(MetricsReport::compute(scores, labels, DECISION_THRESHOLD)?)
    };

    let (classes, binary) = match args.mode {
        EvalMode::Multiclass => {
            let mut out = PerClass::from_fn(|_| None);
            for class in ViolenceClass::ALL {
                let scores: Vec<f64> = joined.iter().map(|j| j.record.class_scores[class]).collect();
                let labels: Vec<bool> = joined.iter().map(|j| j.classes[class]).collect();
                let pos = labels.iter().filter(|&&l| l).count();
                if pos == 0 || pos == labels.len() {
                    log::warn!("class {class}: single-label ground truth, not evaluated");
                    continue;
                }
                out[class] = Some(emit(class.token(), &scores, &labels)?);
            }
            (Some(out), None)
        }
        EvalMode::Binary => {
            let scores: Vec<f64> = joined
                .iter()
                .map(|j| vsd_core::types::argmax_class(&j.record.class_scores).1)
                .collect();
            let labels: Vec<bool> = joined.iter().map(|j| j.violent).collect();
            (None, Some(emit("binary", &scores, &labels)?))
        }
    };

    let summary = EvaluateSummary {
        mode: args.mode,
        config_hash: ctx.config_hash.clone(),
        seed: ctx.config.seed,
        segments: joined.len(),
        classes,
        binary,
        roc_files,
    };
    write_json(&args.out_dir.join("metrics.json"), &summary)?;
    Ok(summary)
}
