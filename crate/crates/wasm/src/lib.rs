//! Browser demo of three pipeline stages: blood probability maps, per-class
//! fusion weights and ROC metrics.
//!
//! Every export is a thin wrapper over a plain function so the logic is
//! testable natively. Structured results cross the boundary as JSON strings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use vsd_core::blood::{
    binarize_bpm, build_model, compute_bpm_with, BloodFeature, ProbabilityLut, Rgb, RgbImage,
};
use vsd_core::eval::{self, MetricsReport};
use vsd_core::fusion::{fuse, weight_search, ChannelScores, WeightTuple};
use vsd_core::types::{PerClass, ViolenceClass};
use wasm_bindgen::prelude::*;

const FUSION_STEP: f64 = 0.05;

fn js_err(msg: String) -> JsError {
    JsError::new(&msg)
}

fn clamp_u8(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// Color models trained on sampled pixels: dark reds against skin tones,
/// greys and uniform noise.
pub fn demo_lut(seed: u64, pixels: usize) -> ProbabilityLut {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng, mean: [f64; 3], sd: f64| -> [u8; 3] {
        let n = Normal::new(0.0, sd).expect("finite deviation");
        mean.map(|m| clamp_u8(m + n.sample(rng)))
    };
    let blood: Vec<[u8; 3]> = (0..pixels)
        .map(|_| sample(&mut rng, [150.0, 15.0, 20.0], 25.0))
        .collect();
    let nonblood: Vec<[u8; 3]> = (0..pixels)
        .map(|i| match i % 3 {
            0 => sample(&mut rng, [205.0, 160.0, 130.0], 25.0),
            1 => {
                let g = rng.gen_range(0.0..255.0);
                sample(&mut rng, [g, g, g], 10.0)
            }
            _ => rng.gen(),
        })
        .collect();
    ProbabilityLut::new(&build_model(blood), &build_model(nonblood))
}

#[derive(Debug, Clone, Serialize)]
pub struct BloodSummary {
    pub width: usize,
    pub height: usize,
    pub threshold: f64,
    pub blood_pixels: usize,
    pub features: [f64; 14],
}

pub struct BloodAnalysisData {
    pub summary: BloodSummary,
    /// RGBA heat map: probability as red intensity, mask pixels opaque.
    pub overlay: Vec<u8>,
}

pub fn analyze_rgba(
    lut: &ProbabilityLut,
    rgba: &[u8],
    width: u32,
    height: u32,
    threshold: f64,
) -> Result<BloodAnalysisData, String> {
    let expected = width as usize * height as usize * 4;
    if rgba.len() != expected {
        return Err(format!("expected {expected} RGBA bytes, got {}", rgba.len()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(format!("threshold must lie in [0,1], got {threshold}"));
    }
    let frame = RgbImage::from_fn(width, height, |x, y| {
        let i = (y as usize * width as usize + x as usize) * 4;
        Rgb([rgba[i], rgba[i + 1], rgba[i + 2]])
    });
    let bpm = compute_bpm_with(&frame, lut).map_err(|e| e.to_string())?;
    let mask = binarize_bpm(&bpm, threshold);
    let features = BloodFeature::from_map(&bpm, &mask).to_array();
    let overlay = bpm
        .p
        .iter()
        .zip(&mask.bits)
        .flat_map(|(&p, &on)| [clamp_u8(255.0 * p), 0, 0, if on { 255 } else { 96 }])
        .collect();
    Ok(BloodAnalysisData {
        summary: BloodSummary {
            width: bpm.width,
            height: bpm.height,
            threshold,
            blood_pixels: mask.count_ones(),
            features,
        },
        overlay,
    })
}

#[wasm_bindgen]
pub struct BloodExplorer {
    lut: ProbabilityLut,
}

#[wasm_bindgen]
pub struct BloodAnalysis {
    data: BloodAnalysisData,
}

#[wasm_bindgen]
impl BloodExplorer {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> BloodExplorer {
        BloodExplorer {
            lut: demo_lut(seed, 50_000),
        }
    }

    /// Blood probability of one pixel.
    pub fn probability(&self, r: u8, g: u8, b: u8) -> f64 {
        self.lut.get([r, g, b])
    }

    pub fn analyze(&self, rgba: &[u8], width: u32, height: u32, threshold: f64) -> Result<BloodAnalysis, JsError> {
        analyze_rgba(&self.lut, rgba, width, height, threshold)
            .map(|data| BloodAnalysis { data })
            .map_err(js_err)
    }
}

#[wasm_bindgen]
impl BloodAnalysis {
    pub fn overlay(&self) -> Vec<u8> {
        self.data.overlay.clone()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.data.summary).expect("summary serializes")
    }
}

/// Validation segments of one class with per-channel score separations.
pub struct FusionFixture {
    pub scores: Vec<ChannelScores>,
    pub labels: Vec<bool>,
}

/// Half the segments are positive; a positive's channel score is shifted up
/// by that channel's separation before squashing into `[0,1]`.
pub fn fusion_fixture(seed: u64, n: usize, separation: [f64; 4]) -> Result<FusionFixture, String> {
    if n < 2 {
        return Err("need at least two segments".into());
    }
    if separation.iter().any(|s| !s.is_finite()) {
        return Err("separations must be finite".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let scores = labels
        .iter()
        .map(|&positive| {
            ChannelScores::complete(std::array::from_fn(|k| {
                let shift = if positive { separation[k] } else { 0.0 };
                logistic(noise.sample(&mut rng) + shift - separation[k] / 2.0)
            }))
        })
        .collect();
    Ok(FusionFixture { scores, labels })
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct FusionResult {
    pub weights: [f64; 4],
    pub eer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FusionSearchResult {
    pub best: FusionResult,
    pub single_channel_eer: [f64; 4],
    pub tuples_evaluated: usize,
}

/// Snaps `weights` onto the grid and reports the fused EER.
pub fn fused_eer(fixture: &FusionFixture, weights: [f64; 4]) -> Result<FusionResult, String> {
    let tuple = WeightTuple::from_weights(weights, FUSION_STEP).map_err(|e| e.to_string())?;
    let fused = fixture
        .scores
        .iter()
        .map(|s| fuse(s, &tuple))
        .collect::<vsd_core::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?;
    let curve = eval::roc(&fused, &fixture.labels).map_err(|e| e.to_string())?;
    Ok(FusionResult {
        weights: tuple.weights(),
        eer: curve.eer,
    })
}

pub fn search_weights(fixture: &FusionFixture) -> Result<FusionSearchResult, String> {
    // a single-class truth table; every other class is skipped
    let truth: Vec<PerClass<bool>> = fixture
        .labels
        .iter()
        .map(|&l| PerClass::from_fn(|c| l && c == ViolenceClass::Gunshots))
        .collect();
    let outcome = weight_search(&fixture.scores, &truth, FUSION_STEP).map_err(|e| e.to_string())?;
    let report = outcome
        .reports
        .into_iter()
        .find(|r| r.class == ViolenceClass::Gunshots)
        .ok_or("search produced no report")?;
    Ok(FusionSearchResult {
        best: FusionResult {
            weights: report.weights,
            eer: report.eer.ok_or("class was skipped")?,
        },
        single_channel_eer: report.single_channel_eer.ok_or("class was skipped")?,
        tuples_evaluated: report.tuples_evaluated,
    })
}

fn four(values: &[f64]) -> Result<[f64; 4], JsError> {
    values
        .try_into()
        .map_err(|_| JsError::new(&format!("expected 4 values, got {}", values.len())))
}

#[wasm_bindgen]
pub struct FusionExplorer {
    fixture: FusionFixture,
}

#[wasm_bindgen]
impl FusionExplorer {
    /// `separation` holds one score shift per channel: audio, blood, motion,
    /// concepts.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, segments: usize, separation: &[f64]) -> Result<FusionExplorer, JsError> {
        let fixture = fusion_fixture(seed, segments, four(separation)?).map_err(js_err)?;
        Ok(FusionExplorer { fixture })
    }

    /// EER for weights summing to 1 in steps of 0.05, as JSON.
    pub fn evaluate(&self, weights: &[f64]) -> Result<String, JsError> {
        let r = fused_eer(&self.fixture, four(weights)?).map_err(js_err)?;
        Ok(serde_json::to_string(&r).expect("result serializes"))
    }

    /// Exhaustive grid search, as JSON.
    pub fn search(&self) -> Result<String, JsError> {
        let r = search_weights(&self.fixture).map_err(js_err)?;
        Ok(serde_json::to_string(&r).expect("result serializes"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RocView {
    /// `(fpr, tpr)` vertices.
    pub points: Vec<(f64, f64)>,
    pub metrics: MetricsReport,
    pub threshold: f64,
}

/// Binary fixture with normal scores `N(separation, 1)` for positives and
/// `N(0, 1)` for negatives, squashed into `[0,1]`, evaluated at `threshold`.
pub fn roc_view(seed: u64, n: usize, separation: f64, prevalence: f64, threshold: f64) -> Result<RocView, String> {
    if !(prevalence > 0.0 && prevalence < 1.0) {
        return Err(format!("prevalence must lie in (0,1), got {prevalence}"));
    }
    if !separation.is_finite() {
        return Err("separation must be finite".into());
    }
    if n < 2 {
        return Err("need at least two segments".into());
    }
    let positives = ((n as f64 * prevalence).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let labels: Vec<bool> = (0..n).map(|i| i < positives).collect();
    let scores: Vec<f64> = labels
        .iter()
        .map(|&l| logistic(noise.sample(&mut rng) + if l { separation } else { 0.0 } - separation / 2.0))
        .collect();
    let curve = eval::roc(&scores, &labels).map_err(|e| e.to_string())?;
    let metrics = MetricsReport::compute(&scores, &labels, threshold).map_err(|e| e.to_string())?;
    Ok(RocView {
        points: curve.points.iter().map(|p| (p.fpr, p.tpr)).collect(),
        metrics,
        threshold,
    })
}

/// ROC vertices and metrics of a generated fixture, as JSON.
#[wasm_bindgen]
pub fn roc_json(seed: u64, n: usize, separation: f64, prevalence: f64, threshold: f64) -> Result<String, JsError> {
    let view = roc_view(seed, n, separation, prevalence, threshold).map_err(js_err)?;
    Ok(serde_json::to_string(&view).expect("view serializes"))
}
