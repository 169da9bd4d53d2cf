//! Domain types shared by every stage of the pipeline.
//!
//! Videos are cut into one-second [`Segment`]s, each segment carries one
//! [`FeatureVector`] per [`FeatureChannel`], and the pipeline emits one
//! [`SegmentScoreRecord`] per segment with a fused score for every
//! [`ViolenceClass`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The eight violence categories, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolenceClass {
    Blood,
    ColdArms,
    Explosions,
    Fights,
    Fire,
    Firearms,
    Gunshots,
    Screams,
}

impl ViolenceClass {
    pub const COUNT: usize = 8;

    pub const ALL: [ViolenceClass; 8] = [
        ViolenceClass::Blood,
        ViolenceClass::ColdArms,
        ViolenceClass::Explosions,
        ViolenceClass::Fights,
        ViolenceClass::Fire,
        ViolenceClass::Firearms,
        ViolenceClass::Gunshots,
        ViolenceClass::Screams,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lowercase token used in annotation files and JSON keys.
    pub fn token(self) -> &'static str {
        match self {
            ViolenceClass::Blood => "blood",
            ViolenceClass::ColdArms => "coldarms",
            ViolenceClass::Explosions => "explosions",
            ViolenceClass::Fights => "fights",
            ViolenceClass::Fire => "fire",
            ViolenceClass::Firearms => "firearms",
            ViolenceClass::Gunshots => "gunshots",
            ViolenceClass::Screams => "screams",
        }
    }
}

impl fmt::Display for ViolenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ViolenceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViolenceClass::ALL
            .into_iter()
            .find(|c| c.token() == s)
            .ok_or_else(|| Error::invalid(format!("unknown violence class `{s}`")))
    }
}

impl Serialize for ViolenceClass {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for ViolenceClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The four feature modalities. `Concepts` carries precomputed per-frame
/// concept-detector scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureChannel {
    Audio,
    Blood,
    Motion,
    Concepts,
}

impl FeatureChannel {
    pub const COUNT: usize = 4;

    pub const ALL: [FeatureChannel; 4] = [
        FeatureChannel::Audio,
        FeatureChannel::Blood,
        FeatureChannel::Motion,
        FeatureChannel::Concepts,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn token(self) -> &'static str {
        match self {
            FeatureChannel::Audio => "audio",
            FeatureChannel::Blood => "blood",
            FeatureChannel::Motion => "motion",
            FeatureChannel::Concepts => "concepts",
        }
    }

    /// Fixed feature dimension, `None` for the configurable concept channel.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            FeatureChannel::Audio => Some(crate::audio::MFCC_DIM),
            FeatureChannel::Blood => Some(crate::blood::BLOOD_FEATURE_DIM),
            FeatureChannel::Motion => Some(crate::motion::MOTION_FEATURE_DIM),
            FeatureChannel::Concepts => None,
        }
    }
}

impl fmt::Display for FeatureChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FeatureChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureChannel::ALL
            .into_iter()
            .find(|c| c.token() == s)
            .ok_or_else(|| Error::invalid(format!("unknown feature channel `{s}`")))
    }
}

impl Serialize for FeatureChannel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for FeatureChannel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Dense array indexed by [`ViolenceClass`]. Serialized as a map keyed by
/// class token.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerClass<T>(pub [T; ViolenceClass::COUNT]);

impl<T> PerClass<T> {
    pub fn from_fn(mut f: impl FnMut(ViolenceClass) -> T) -> Self {
        PerClass(ViolenceClass::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ViolenceClass, &T)> {
        ViolenceClass::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<ViolenceClass> for PerClass<T> {
    type Output = T;
    fn index(&self, c: ViolenceClass) -> &T {
        &self.0[c.index()]
    }
}

impl<T> IndexMut<ViolenceClass> for PerClass<T> {
    fn index_mut(&mut self, c: ViolenceClass) -> &mut T {
        &mut self.0[c.index()]
    }
}

impl<T: Serialize> Serialize for PerClass<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(ViolenceClass::COUNT))?;
        for (c, v) in self.iter() {
            map.serialize_entry(c.token(), v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for PerClass<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut map: BTreeMap<ViolenceClass, T> = BTreeMap::deserialize(d)?;
        let mut values = Vec::with_capacity(ViolenceClass::COUNT);
        for c in ViolenceClass::ALL {
            let v = map
                .remove(&c)
                .ok_or_else(|| D::Error::custom(format!("missing class `{c}`")))?;
            values.push(v);
        }
        match values.try_into() {
            Ok(arr) => Ok(PerClass(arr)),
            Err(_) => unreachable!("exactly eight classes collected"),
        }
    }
}

/// One-second slice of a video. `end_frame` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub video_id: String,
    pub index: usize,
    pub start_frame: u64,
    pub end_frame: u64,
}

impl Segment {
    pub fn len(&self) -> u64 {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.end_frame <= self.start_frame
    }
}

/// Frames per one-second segment: `round(fps)`.
pub fn frames_per_segment(fps: f64) -> Result<u64> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::invalid(format!("fps must be positive, got {fps}")));
    }
    let n = fps.round();
    if n < 1.0 {
        return Err(Error::invalid(format!("fps {fps} rounds to zero frames per second")));
    }
    Ok(n as u64)
}

/// Cut a video into consecutive one-second segments. A trailing partial
/// second is dropped.
pub fn segmentize(video_id: &str, frame_count: u64, fps: f64) -> Result<Vec<Segment>> {
    let per = frames_per_segment(fps)?;
    Ok((0..frame_count / per)
        .map(|i| Segment {
            video_id: video_id.to_string(),
            index: i as usize,
            start_frame: i * per,
            end_frame: (i + 1) * per,
        })
        .collect())
}

/// Ground-truth violent interval. `end_frame` is inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub start_frame: u64,
    pub end_frame: u64,
    pub classes: BTreeSet<ViolenceClass>,
    pub multiple_action: bool,
}

impl Annotation {
    /// Number of frames of `[start, end)` covered by this annotation.
    pub fn overlap(&self, start: u64, end: u64) -> u64 {
        if end == 0 {
            return 0;
        }
        let lo = self.start_frame.max(start);
        let hi = self.end_frame.min(end - 1);
        if hi < lo {
            0
        } else {
            hi - lo + 1
        }
    }
}

/// Ground truth inherited by one segment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentTruth {
    pub classes: BTreeSet<ViolenceClass>,
    /// True when any annotation, including a class-less one, covers the
    /// segment. Always true when `classes` is non-empty.
    pub violent: bool,
}

/// Assign ground truth to segments. A segment takes class `C` when a single
/// annotation carrying `C` covers at least half of its frames; qualifying
/// annotations are unioned.
pub fn label_segments(
    segments: &[Segment],
    annotations: &[Annotation],
) -> Vec<(Segment, SegmentTruth)> {
    let mut sorted: Vec<&Annotation> = annotations.iter().collect();
    sorted.sort_by_key(|a| (a.start_frame, a.end_frame));

    segments
        .iter()
        .map(|seg| {
            let mut truth = SegmentTruth::default();
            let len = seg.len();
            for ann in &sorted {
                if ann.start_frame >= seg.end_frame {
                    break;
                }
                let overlap = ann.overlap(seg.start_frame, seg.end_frame);
                if overlap > 0 && 2 * overlap >= len {
                    truth.violent = true;
                    truth.classes.extend(ann.classes.iter().copied());
                }
            }
            (seg.clone(), truth)
        })
        .collect()
}

/// Channel-tagged feature vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub channel: FeatureChannel,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(channel: FeatureChannel, values: Vec<f64>) -> Result<Self> {
        if let Some(dim) = channel.fixed_dim() {
            if values.len() != dim {
                return Err(Error::invalid(format!(
                    "{channel} feature must have dimension {dim}, got {}",
                    values.len()
                )));
            }
        } else if values.is_empty() {
            return Err(Error::invalid(format!("{channel} feature must not be empty")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "{channel} feature entry {i} is not finite"
            )));
        }
        Ok(FeatureVector { channel, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Decision for one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentLabel {
    Violent(ViolenceClass),
    NonViolent,
}

impl SegmentLabel {
    pub fn token(self) -> &'static str {
        match self {
            SegmentLabel::Violent(c) => c.token(),
            SegmentLabel::NonViolent => "nonviolent",
        }
    }
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl Serialize for SegmentLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for SegmentLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "nonviolent" {
            Ok(SegmentLabel::NonViolent)
        } else {
            s.parse().map(SegmentLabel::Violent).map_err(D::Error::custom)
        }
    }
}

/// Highest-scoring class and its score, ties going to the earlier class.
pub fn argmax_class(scores: &PerClass<f64>) -> (ViolenceClass, f64) {
    let mut best = (ViolenceClass::ALL[0], scores.0[0]);
    for (c, &s) in scores.iter().skip(1) {
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

/// Multi-class rule: the argmax class when its score is at least 0.5.
pub fn multiclass_label(scores: &PerClass<f64>) -> SegmentLabel {
    let (class, max) = argmax_class(scores);
    if max >= 0.5 {
        SegmentLabel::Violent(class)
    } else {
        SegmentLabel::NonViolent
    }
}

/// Binary rule: violent when some class score strictly exceeds 0.5.
pub fn binary_decision(scores: &PerClass<f64>) -> bool {
    argmax_class(scores).1 > 0.5
}

/// Pipeline output for one segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentScoreRecord {
    pub segment: Segment,
    pub class_scores: PerClass<f64>,
    pub label: SegmentLabel,
    pub binary: bool,
}

impl SegmentScoreRecord {
    pub fn new(segment: Segment, class_scores: PerClass<f64>) -> Result<Self> {
        if let Some((c, s)) = class_scores
            .iter()
            .find(|(_, s)| !(0.0..=1.0).contains(*s))
        {
            return Err(Error::invalid(format!("score for {c} outside [0,1]: {s}")));
        }
        Ok(SegmentScoreRecord {
            label: multiclass_label(&class_scores),
            binary: binary_decision(&class_scores),
            segment,
            class_scores,
        })
    }
}

#[derive(Deserialize)]
struct RawRecord {
    segment: Segment,
    class_scores: PerClass<f64>,
    label: SegmentLabel,
    binary: bool,
}

impl<'de> Deserialize<'de> for SegmentScoreRecord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawRecord::deserialize(d)?;
        let rec = SegmentScoreRecord::new(raw.segment, raw.class_scores).map_err(D::Error::custom)?;
        if rec.label != raw.label || rec.binary != raw.binary {
            return Err(D::Error::custom(format!(
                "record {}#{} violates the decision rules",
                rec.segment.video_id, rec.segment.index
            )));
        }
        Ok(rec)
    }
}
