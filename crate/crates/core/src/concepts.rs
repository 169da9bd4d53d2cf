//! Precomputed per-frame concept-detector scores.
//!
//! Any bank of per-frame detectors can feed this channel as long as every
//! frame carries a score vector of the same dimension. Files are JSON Lines:
//! `{"frame": 0, "scores": [0.1, 0.9]}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureChannel, FeatureVector, Segment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptVector {
    #[serde(rename = "frame")]
    pub frame_idx: u64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptTable {
    dim: Option<usize>,
    frames: BTreeMap<u64, Vec<f64>>,
}

impl ConceptTable {
    /// Shared score dimension, unknown for an empty table.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.frames.keys().next_back().copied()
    }

    pub fn get(&self, frame: u64) -> Option<&[f64]> {
        self.frames.get(&frame).map(Vec::as_slice)
    }

    pub fn insert(&mut self, v: ConceptVector) -> Result<()> {
        match self.dim {
            Some(d) if d != v.scores.len() => {
                return Err(Error::Format(format!(
                    "frame {} has {} scores, expected {d}",
                    v.frame_idx,
                    v.scores.len()
                )))
            }
            None if v.scores.is_empty() => {
                return Err(Error::Format(format!("frame {} has no scores", v.frame_idx)))
            }
            _ => {}
        }
        if v.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Format(format!("frame {} has non-finite scores", v.frame_idx)));
        }
        self.dim = Some(v.scores.len());
        self.frames.insert(v.frame_idx, v.scores);
        Ok(())
    }

    /// Serialize as JSON Lines in frame order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (&frame_idx, scores) in &self.frames {
            let row = ConceptVector {
                frame_idx,
                scores: scores.clone(),
            };
            out.push_str(&serde_json::to_string(&row).expect("finite scores serialize"));
            out.push('\n');
        }
        out
    }
}

pub fn parse_concepts_str(text: &str, origin: &str) -> Result<ConceptTable> {
    let mut table = ConceptTable::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ConceptVector = serde_json::from_str(line)
            .map_err(|e| Error::parse(origin, i + 1, format!("bad concept row: {e}")))?;
        table.insert(row).map_err(|e| match e {
            Error::Format(msg) => Error::parse(origin, i + 1, msg),
            other => other,
        })?;
    }
    Ok(table)
}

pub fn load_concepts(path: &Path) -> Result<ConceptTable> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_concepts_str(&text, &path.display().to_string())
}

/// Scores of the segment's first frame, or of the first frame inside the
/// segment that has scores.
pub fn segment_concept_feature(table: &ConceptTable, segment: &Segment) -> Result<FeatureVector> {
    let (_, scores) = table
        .frames
        .range(segment.start_frame..segment.end_frame)
        .next()
        .ok_or_else(|| {
            Error::MissingFeature(format!(
                "no concept scores in frames {}..{} of {}",
                segment.start_frame, segment.end_frame, segment.video_id
            ))
        })?;
    FeatureVector::new(FeatureChannel::Concepts, scores.clone())
}
