//! Annotation files, video splits, feature tables and balanced sampling.
//!
//! Annotation grammar, one interval per line:
//!
//! ```text
//! <start_frame> <end_frame> [<class_token>...] [multiple_action]
//! ```
//!
//! Frames are inclusive. Blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Annotation, FeatureChannel, PerClass, Segment, SegmentTruth, ViolenceClass};

pub const MULTIPLE_ACTION_TOKEN: &str = "multiple_action";
pub const FEATURE_TABLE_FORMAT_VERSION: u32 = 1;

pub fn parse_annotations_str(text: &str, origin: &str) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let mut tokens = line.split_whitespace();
        let mut frame = |what: &str| -> Result<u64> {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::parse(origin, lineno, format!("missing {what} frame")))?;
            tok.parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad {what} frame `{tok}`")))
        };
        let start = frame("start")?;
        let end = frame("end")?;
        if start > end {
            return Err(Error::parse(
                origin,
                lineno,
                format!("start frame {start} after end frame {end}"),
            ));
        }
        let mut classes = BTreeSet::new();
        let mut multiple_action = false;
        for tok in tokens {
            if tok == MULTIPLE_ACTION_TOKEN {
                multiple_action = true;
            } else {
                let class: ViolenceClass = tok
                    .parse()
                    .map_err(|_| Error::parse(origin, lineno, format!("unknown token `{tok}`")))?;
                classes.insert(class);
            }
        }
        out.push(Annotation {
            start_frame: start,
            end_frame: end,
            classes,
            multiple_action,
        });
    }
    Ok(out)
}

pub fn parse_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_annotations_str(&text, &path.display().to_string())
}

/// Canonical text form: classes in canonical order, flag last.
pub fn serialize_annotations(annotations: &[Annotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        out.push_str(&format!("{} {}", a.start_frame, a.end_frame));
        for c in &a.classes {
            out.push(' ');
            out.push_str(c.token());
        }
        if a.multiple_action {
            out.push(' ');
            out.push_str(MULTIPLE_ACTION_TOKEN);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

/// Video-level partition into training, fusion-validation and test sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for id in self.train_ids.iter().chain(&self.validation_ids).chain(&self.test_ids) {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("video `{id}` appears in more than one split")));
            }
        }
        Ok(())
    }

    pub fn role_of(&self, video_id: &str) -> Option<SplitRole> {
        let has = |ids: &[String]| ids.iter().any(|i| i == video_id);
        if has(&self.train_ids) {
            Some(SplitRole::Train)
        } else if has(&self.validation_ids) {
            Some(SplitRole::Validation)
        } else if has(&self.test_ids) {
            Some(SplitRole::Test)
        } else {
            None
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let split: SplitSpec = serde_json::from_str(&text)?;
        split.validate()?;
        Ok(split)
    }
}

/// First line of a feature table file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableHeader {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
}

/// One segment of a feature table. Missing channels are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub video_id: String,
    pub index: usize,
    pub start_frame: u64,
    pub end_frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blood: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concepts: Option<Vec<f64>>,
    pub labels: BTreeSet<ViolenceClass>,
    pub violent: bool,
    pub incomplete: bool,
}

impl FeatureRow {
    pub fn new(segment: &Segment, truth: &SegmentTruth) -> Self {
        FeatureRow {
            video_id: segment.video_id.clone(),
            index: segment.index,
            start_frame: segment.start_frame,
            end_frame: segment.end_frame,
            audio: None,
            blood: None,
            motion: None,
            concepts: None,
            labels: truth.classes.clone(),
            violent: truth.violent || !truth.classes.is_empty(),
            incomplete: true,
        }
    }

    pub fn segment(&self) -> Segment {
        Segment {
            video_id: self.video_id.clone(),
            index: self.index,
            start_frame: self.start_frame,
            end_frame: self.end_frame,
        }
    }

    pub fn feature(&self, channel: FeatureChannel) -> Option<&[f64]> {
        match channel {
            FeatureChannel::Audio => self.audio.as_deref(),
            FeatureChannel::Blood => self.blood.as_deref(),
            FeatureChannel::Motion => self.motion.as_deref(),
            FeatureChannel::Concepts => self.concepts.as_deref(),
        }
    }

    pub fn set_feature(&mut self, channel: FeatureChannel, values: Option<Vec<f64>>) {
        let slot = match channel {
            FeatureChannel::Audio => &mut self.audio,
            FeatureChannel::Blood => &mut self.blood,
            FeatureChannel::Motion => &mut self.motion,
            FeatureChannel::Concepts => &mut self.concepts,
        };
        *slot = values;
        self.incomplete = FeatureChannel::ALL.iter().any(|&c| self.feature(c).is_none());
    }

    pub fn class_truth(&self) -> PerClass<bool> {
        PerClass::from_fn(|c| self.labels.contains(&c))
    }
}

pub fn write_feature_table<W: Write>(
    mut out: W,
    header: &TableHeader,
    rows: &[FeatureRow],
) -> Result<()> {
    let io = |e| Error::io("writing feature table", e);
    writeln!(out, "{}", serde_json::to_string(header)?).map_err(io)?;
    for row in rows {
        writeln!(out, "{}", serde_json::to_string(row)?).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Parse a feature table; the header line is optional.
pub fn parse_feature_table_str(text: &str, origin: &str) -> Result<(Option<TableHeader>, Vec<FeatureRow>)> {
    let mut header = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(h) = serde_json::from_str::<TableHeader>(line) {
                if h.format_version != FEATURE_TABLE_FORMAT_VERSION {
                    return Err(Error::parse(
                        origin,
                        1,
                        format!("unsupported feature table format {}", h.format_version),
                    ));
                }
                header = Some(h);
                continue;
            }
        }
        let mut row: FeatureRow = serde_json::from_str(line)
            .map_err(|e| Error::parse(origin, i + 1, format!("bad feature row: {e}")))?;
        if FeatureChannel::ALL
            .iter()
            .filter_map(|&c| row.feature(c))
            .any(|v| v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::parse(origin, i + 1, "non-finite feature value"));
        }
        row.incomplete = FeatureChannel::ALL.iter().any(|&c| row.feature(c).is_none());
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn load_feature_table(path: &Path) -> Result<(Option<TableHeader>, Vec<FeatureRow>)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_feature_table_str(&text, &path.display().to_string())
}

/// A candidate for sampling. `position` indexes the caller's table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub video_id: String,
    pub index: usize,
    pub position: usize,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledSet {
    pub entries: Vec<SampleEntry>,
    pub seed: u64,
}

/// Draw `n/2` positives and `n/2` negatives uniformly without replacement.
/// Entries keep their relative input order, positives first.
pub fn sample_balanced(pool: &[SampleEntry], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<SampleEntry>> {
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("sample size must be even, got {n}")));
    }
    let half = n / 2;
    let mut out = Vec::with_capacity(n);
    for (label, name) in [(true, "positive"), (false, "negative")] {
        let candidates: Vec<&SampleEntry> = pool.iter().filter(|e| e.label == label).collect();
        if candidates.len() < half {
            return Err(Error::Shortage {
                label: name,
                requested: half,
                available: candidates.len(),
            });
        }
        let mut picked = index::sample(rng, candidates.len(), half).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| candidates[i].clone()));
    }
    Ok(out)
}

/// Balanced training and test sets drawn from the train and test videos of
/// `split`. The two draws use independent streams of one seed.
pub fn balanced_sample(
    pool: &[SampleEntry],
    split: &SplitSpec,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(SampledSet, SampledSet)> {
    split.validate()?;
    let draw = |role: SplitRole, n: usize, stream: u64| -> Result<SampledSet> {
        let subset: Vec<SampleEntry> = pool
            .iter()
            .filter(|e| split.role_of(&e.video_id) == Some(role))
            .cloned()
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(SampledSet {
            entries: sample_balanced(&subset, n, &mut rng)?,
            seed,
        })
    };
    Ok((draw(SplitRole::Train, n_train, 0)?, draw(SplitRole::Test, n_test, 1)?))
}
