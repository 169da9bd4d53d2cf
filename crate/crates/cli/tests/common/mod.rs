#![allow(dead_code)]

pub mod oracles;
pub mod synth;

use std::path::{Path, PathBuf};

use vsd_cli::commands::{self, EvalMode, Manifest};
use vsd_cli::{Context, PipelineConfig};
use vsd_core::dataset::SplitRole;

pub struct PipelineRun {
    pub dir: PathBuf,
    pub blood_model: PathBuf,
    pub nonblood_model: PathBuf,
    pub features: PathBuf,
    pub classifiers: PathBuf,
    pub weights: PathBuf,
    pub predictions: PathBuf,
    pub train: commands::TrainSummary,
    pub fuse: commands::FuseSearchSummary,
    pub multiclass: commands::EvaluateSummary,
    pub binary: commands::EvaluateSummary,
}

pub fn context(corpus: &synth::SynthCorpus) -> Context {
    Context::new(PipelineConfig::load(&corpus.config).unwrap()).unwrap()
}

/// build → extract → train → fuse-search → predict → evaluate, all outputs
/// under `dir`.
pub fn run_pipeline(corpus: &synth::SynthCorpus, dir: &Path) -> PipelineRun {
    std::fs::create_dir_all(dir).unwrap();
    let ctx = context(corpus);
    let blood_model = dir.join("blood.vfbm");
    let nonblood_model = dir.join("nonblood.vfbm");
    commands::build_blood_model(
        &ctx,
        &commands::BuildBloodArgs {
            blood_dir: corpus.blood_dir.clone(),
            nonblood_dir: corpus.nonblood_dir.clone(),
            extend_dir: None,
            out_blood: blood_model.clone(),
            out_nonblood: nonblood_model.clone(),
        },
    )
    .unwrap();

    let features = dir.join("features.jsonl");
    commands::extract(
        &ctx,
        &commands::ExtractArgs {
            videos: Manifest::load(&corpus.manifest).unwrap().videos,
            blood_model: Some(blood_model.clone()),
            nonblood_model: Some(nonblood_model.clone()),
            out: features.clone(),
        },
    )
    .unwrap();

    let classifiers = dir.join("classifiers");
    let train = commands::train(
        &ctx,
        &commands::TrainArgs {
            features: features.clone(),
            split: Some(corpus.split.clone()),
            out_dir: classifiers.clone(),
        },
    )
    .unwrap();

    let weights = dir.join("weights.json");
    let fuse = commands::fuse_search(
        &ctx,
        &commands::FuseSearchArgs {
            features: features.clone(),
            split: Some(corpus.split.clone()),
            classifiers: classifiers.clone(),
            step: None,
            out: weights.clone(),
            report: None,
        },
    )
    .unwrap();

    let predictions = dir.join("predictions.jsonl");
    commands::predict(
        &ctx,
        &commands::PredictArgs {
            features: features.clone(),
            classifiers: classifiers.clone(),
            weights: weights.clone(),
            role: Some(SplitRole::Test),
            split: Some(corpus.split.clone()),
            out: predictions.clone(),
        },
    )
    .unwrap();

    let eval = |mode, name: &str| {
        commands::evaluate(
            &ctx,
            &commands::EvaluateArgs {
                predictions: predictions.clone(),
                ground_truth: features.clone(),
                mode,
                out_dir: dir.join(name),
                svg: true,
                balanced: false,
            },
        )
        .unwrap()
    };
    let multiclass = eval(EvalMode::Multiclass, "eval_multiclass");
    let binary = eval(EvalMode::Binary, "eval_binary");

    PipelineRun {
        dir: dir.to_path_buf(),
        blood_model,
        nonblood_model,
        features,
        classifiers,
        weights,
        predictions,
        train,
        fuse,
        multiclass,
        binary,
    }
}
