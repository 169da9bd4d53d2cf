//! Late fusion of the four channel probabilities.
//!
//! Weight tuples are stored as integer units of a grid step, so the fused
//! score `Σ unitsᵢ·scoreᵢ / divisions` never carries representation error
//! from the weights themselves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::types::{multiclass_label, FeatureChannel, PerClass, SegmentLabel, ViolenceClass};

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_STEP: f64 = 0.05;

const CHANNELS: usize = FeatureChannel::COUNT;

/// A point of the simplex grid: `weightᵢ = units[i] / divisions`, in the
/// channel order audio, blood, motion, concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightTuple {
    pub units: [u32; CHANNELS],
    pub divisions: u32,
}

/// Number of grid divisions for `step`, which must divide 1 evenly.
pub fn divisions_for_step(step: f64) -> Result<u32> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(format!("grid step must lie in (0, 1], got {step}")));
    }
    let d = (1.0 / step).round();
    if (d * step - 1.0).abs() > 1e-9 || d > 10_000.0 {
        return Err(Error::invalid(format!("1/step is not an integer for step {step}")));
    }
    Ok(d as u32)
}

impl WeightTuple {
    pub fn new(units: [u32; CHANNELS], divisions: u32) -> Result<Self> {
        if divisions == 0 || units.iter().sum::<u32>() != divisions {
            return Err(Error::invalid(format!(
                "weight units {units:?} do not sum to {divisions}"
            )));
        }
        Ok(WeightTuple { units, divisions })
    }

    /// Snap real weights onto the grid of `step`. Each weight must already
    /// be a multiple of the step within 1e-9.
    pub fn from_weights(weights: [f64; CHANNELS], step: f64) -> Result<Self> {
        let divisions = divisions_for_step(step)?;
        let mut units = [0u32; CHANNELS];
        for (u, &w) in units.iter_mut().zip(&weights) {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!("weight {w} outside [0, 1]")));
            }
            let k = (w * divisions as f64).round();
            if (k / divisions as f64 - w).abs() > 1e-9 {
                return Err(Error::invalid(format!("weight {w} is not a multiple of {step}")));
            }
            *u = k as u32;
        }
        Self::new(units, divisions)
    }

    pub fn uniform() -> Self {
        WeightTuple {
            units: [1; CHANNELS],
            divisions: CHANNELS as u32,
        }
    }

    /// Unit vector selecting one channel.
    pub fn single(channel: FeatureChannel) -> Self {
        let mut units = [0; CHANNELS];
        units[channel.index()] = 1;
        WeightTuple { units, divisions: 1 }
    }

    pub fn weights(&self) -> [f64; CHANNELS] {
        self.units.map(|u| u as f64 / self.divisions as f64)
    }

    pub fn weight(&self, channel: FeatureChannel) -> f64 {
        self.units[channel.index()] as f64 / self.divisions as f64
    }

    /// Fused score of complete channel scores.
    pub fn apply(&self, scores: &[f64; CHANNELS]) -> f64 {
        let mut acc = 0.0;
        for (&u, &s) in self.units.iter().zip(scores) {
            acc += u as f64 * s;
        }
        acc / self.divisions as f64
    }
}

/// All tuples of non-negative multiples of `step` summing to 1, in
/// lexicographic order of the units.
pub fn enumerate_weight_grid(step: f64) -> Result<Vec<WeightTuple>> {
    let d = divisions_for_step(step)?;
    let mut out = Vec::new();
    for a in 0..=d {
        for b in 0..=d - a {
            for m in 0..=d - a - b {
                out.push(WeightTuple {
                    units: [a, b, m, d - a - b - m],
                    divisions: d,
                });
            }
        }
    }
    Ok(out)
}

/// Calibrated channel probabilities of one segment; `None` marks a channel
/// whose input was missing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelScores(pub [Option<f64>; CHANNELS]);

impl ChannelScores {
    pub fn complete(scores: [f64; CHANNELS]) -> Self {
        ChannelScores(scores.map(Some))
    }

    pub fn get(&self, channel: FeatureChannel) -> Option<f64> {
        self.0[channel.index()]
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn require_complete(&self) -> Result<[f64; CHANNELS]> {
        let mut out = [0.0; CHANNELS];
        for (c, slot) in FeatureChannel::ALL.into_iter().zip(&mut out) {
            *slot = self.get(c).ok_or(Error::IncompleteInput(c.token()))?;
        }
        Ok(out)
    }
}

pub fn fuse(scores: &ChannelScores, weights: &WeightTuple) -> Result<f64> {
    Ok(weights.apply(&scores.require_complete()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_id: String,
    pub seed: u64,
}

/// Per-class weight tuples on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    pub step: f64,
    pub per_class: PerClass<WeightTuple>,
}

impl FusionWeights {
    pub fn uniform(step: f64) -> Result<Self> {
        divisions_for_step(step)?;
        Ok(FusionWeights {
            step,
            per_class: PerClass::from_fn(|_| WeightTuple::uniform()),
        })
    }

    pub fn class_scores(&self, scores: &ChannelScores) -> Result<PerClass<f64>> {
        let complete = scores.require_complete()?;
        Ok(PerClass::from_fn(|c| self.per_class[c].apply(&complete)))
    }
}

/// On-disk weights file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub format_version: u32,
    pub step: f64,
    pub weights: PerClass<[f64; CHANNELS]>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl WeightsFile {
    pub fn new(weights: &FusionWeights, provenance: Provenance) -> Self {
        WeightsFile {
            format_version: WEIGHTS_FORMAT_VERSION,
            step: weights.step,
            weights: PerClass::from_fn(|c| weights.per_class[c].weights()),
            provenance,
            config_hash: None,
        }
    }

    /// Rebuild grid tuples; uniform tuples are accepted on any grid.
    pub fn fusion_weights(&self) -> Result<FusionWeights> {
        let mut per_class = PerClass::from_fn(|_| WeightTuple::uniform());
        for (c, w) in self.weights.iter() {
            per_class[c] = if *w == WeightTuple::uniform().weights() {
                WeightTuple::uniform()
            } else {
                WeightTuple::from_weights(*w, self.step)
                    .map_err(|e| Error::Format(format!("weights for {c}: {e}")))?
            };
        }
        Ok(FusionWeights {
            step: self.step,
            per_class,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let file: WeightsFile = serde_json::from_str(&text)?;
        if file.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported weights format {}",
                path.display(),
                file.format_version
            )));
        }
        file.fusion_weights()?;
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSearchReport {
    pub class: ViolenceClass,
    pub weights: [f64; CHANNELS],
    /// `None` when the class was skipped.
    pub eer: Option<f64>,
    /// EER of each unit-vector tuple, in channel order.
    pub single_channel_eer: Option<[f64; CHANNELS]>,
    pub tuples_evaluated: usize,
    pub positives: usize,
    pub negatives: usize,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub weights: FusionWeights,
    pub reports: Vec<ClassSearchReport>,
}

fn tuple_eers(grid: &[WeightTuple], scores: &[[f64; CHANNELS]], labels: &[bool]) -> Result<Vec<f64>> {
    let eer_of = |t: &WeightTuple| -> Result<f64> {
        let fused: Vec<f64> = scores.iter().map(|s| t.apply(s)).collect();
        Ok(eval::roc(&fused, labels)?.eer)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(eer_of).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(eer_of).collect()
    }
}

/// Exhaustive per-class search for the tuple minimizing the EER of fused
/// scores. `truth[i][c]` is the ground truth of row `i` for class `c`.
/// Ties keep the lexicographically smallest tuple. A class whose truth is
/// single-valued is skipped and gets uniform weights.
pub fn weight_search(
    scores: &[ChannelScores],
    truth: &[PerClass<bool>],
    step: f64,
) -> Result<SearchOutcome> {
    if scores.len() != truth.len() {
        return Err(Error::invalid("scores and ground truth differ in length"));
    }
    if scores.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    let complete = scores
        .iter()
        .map(ChannelScores::require_complete)
        .collect::<Result<Vec<_>>>()?;
    let grid = enumerate_weight_grid(step)?;
    let divisions = grid[0].divisions;

    let mut weights = FusionWeights::uniform(step)?;
    let mut reports = Vec::with_capacity(ViolenceClass::COUNT);
    for class in ViolenceClass::ALL {
        let labels: Vec<bool> = truth.iter().map(|t| t[class]).collect();
        let positives = labels.iter().filter(|&&l| l).count();
        let negatives = labels.len() - positives;
        if positives == 0 || negatives == 0 {
            log::warn!("class {class}: single-label validation truth, using uniform weights");
            reports.push(ClassSearchReport {
                class,
                weights: WeightTuple::uniform().weights(),
                eer: None,
                single_channel_eer: None,
                tuples_evaluated: 0,
                positives,
                negatives,
                skipped: true,
            });
            continue;
        }

        let eers = tuple_eers(&grid, &complete, &labels)?;
        let mut best = 0;
        for (i, &e) in eers.iter().enumerate().skip(1) {
            if e < eers[best] {
                best = i;
            }
        }
        let single = FeatureChannel::ALL.map(|c| {
            let mut units = [0; CHANNELS];
            units[c.index()] = divisions;
            let idx = grid
                .binary_search(&WeightTuple { units, divisions })
                .expect("unit vectors are grid members");
            eers[idx]
        });
        weights.per_class[class] = grid[best];
        reports.push(ClassSearchReport {
            class,
            weights: grid[best].weights(),
            eer: Some(eers[best]),
            single_channel_eer: Some(single),
            tuples_evaluated: grid.len(),
            positives,
            negatives,
            skipped: false,
        });
    }
    Ok(SearchOutcome { weights, reports })
}

/// Fused score per class and the multi-class label.
pub fn decide_multiclass(
    scores: &ChannelScores,
    weights: &FusionWeights,
) -> Result<(SegmentLabel, PerClass<f64>)> {
    let class_scores = weights.class_scores(scores)?;
    Ok((multiclass_label(&class_scores), class_scores))
}

pub fn decide_binary(class_scores: &PerClass<f64>) -> bool {
    crate::types::binary_decision(class_scores)
}
