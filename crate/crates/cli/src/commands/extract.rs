use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vsd_core::audio::{mfcc_track, read_wav, segment_audio_feature};
use vsd_core::blood::{blood_feature_with, read_ppm, ColorModel3D, ProbabilityLut};
use vsd_core::concepts::{load_concepts, segment_concept_feature};
use vsd_core::dataset::{parse_annotations, write_feature_table, FeatureRow};
use vsd_core::motion::{parse_sidecar, segment_motion_feature};
use vsd_core::types::{label_segments, segmentize, FeatureChannel};
use vsd_core::Error;

use super::build_blood::list_ppm;
use super::Context;
use crate::error::{io_err, CliError, CliResult};

/// Inputs of one video. Every channel input is optional; a missing input
/// leaves that channel absent from the video's rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoInput {
    pub video_id: String,
    /// Directory of PPM frames whose file names end in the frame index.
    #[serde(default)]
    pub frames_dir: Option<PathBuf>,
    #[serde(default)]
    pub wav: Option<PathBuf>,
    #[serde(default)]
    pub sidecar: Option<PathBuf>,
    #[serde(default)]
    pub concepts: Option<PathBuf>,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub frame_count: Option<u64>,
    #[serde(default)]
    pub frame_width: Option<u32>,
    #[serde(default)]
    pub frame_height: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub videos: Vec<VideoInput>,
}

impl Manifest {
    /// Relative paths resolve against the manifest's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path.display(), e))?;
        let mut m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for v in &mut m.videos {
            for p in [
                &mut v.frames_dir,
                &mut v.wav,
                &mut v.sidecar,
                &mut v.concepts,
                &mut v.annotations,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct ExtractArgs {
    pub videos: Vec<VideoInput>,
    pub blood_model: Option<PathBuf>,
    pub nonblood_model: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractSummary {
    pub videos: usize,
    pub rows: usize,
    pub incomplete_rows: usize,
    /// Rows lacking each channel, in channel order.
    pub missing: [usize; 4],
}

/// Frame index from the last run of digits in a file stem.
fn frame_index(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let end = stem.rfind(|c: char| c.is_ascii_digit())? + 1;
    let start = stem[..end]
        .rfind(|c: char| !c.is_ascii_digit())
        .map_or(0, |i| i + 1);
    stem[start..end].parse().ok()
}

fn extract_video(ctx: &Context, input: &VideoInput, lut: Option<&ProbabilityLut>) -> CliResult<Vec<FeatureRow>> {
    let cfg = &ctx.config;
    let id = &input.video_id;

    let mut frames = BTreeMap::new();
    if let Some(dir) = &input.frames_dir {
        for path in list_ppm(dir)? {
            match frame_index(&path) {
                Some(i) => {
                    frames.insert(i, path);
                }
                None => warn!("{id}: skipping frame without an index: {}", path.display()),
            }
        }
    } else {
        warn!("{id}: no frames directory, blood channel missing");
    }

    let audio = match &input.wav {
        Some(p) => Some(mfcc_track(&read_wav(p)?, cfg.fps, &cfg.mfcc)?),
        None => {
            warn!("{id}: no wav, audio channel missing");
            None
        }
    };
    let sidecar = match &input.sidecar {
        Some(p) => Some(parse_sidecar(p)?),
        None => {
            warn!("{id}: no motion sidecar, motion channel missing");
            None
        }
    };
    let concepts = match &input.concepts {
        Some(p) => Some(load_concepts(p)?),
        None => {
            warn!("{id}: no concept scores, concepts channel missing");
            None
        }
    };

    let frame_count = match (input.frame_count, &audio) {
        (Some(n), _) => n,
        (None, Some(a)) => a.len() as u64,
        (None, None) => {
            let last = [
                frames.keys().next_back().copied(),
                sidecar.as_ref().and_then(|s| s.keys().next_back().copied()),
                concepts.as_ref().and_then(|c| c.last_frame()),
            ]
            .into_iter()
            .flatten()
            .max()
            .ok_or_else(|| Error::invalid(format!("{id}: cannot determine the frame count")))?;
            warn!("{id}: frame count inferred from the last indexed frame");
            last + 1
        }
    };

    let dims = match (input.frame_width, input.frame_height) {
        (Some(w), Some(h)) => Some((w, h)),
        _ => match frames.values().next() {
            Some(p) => {
                let img = read_ppm(p)?;
                Some((img.width(), img.height()))
            }
            None => None,
        },
    };
    if sidecar.is_some() && dims.is_none() {
        warn!("{id}: frame size unknown, motion channel missing");
    }

    let annotations = match &input.annotations {
        Some(p) => parse_annotations(p)?,
        None => Vec::new(),
    };
    let segments = segmentize(id, frame_count, cfg.fps)?;

    let mut rows = Vec::with_capacity(segments.len());
    for (seg, truth) in label_segments(&segments, &annotations) {
        let mut row = FeatureRow::new(&seg, &truth);

        if let Some(vectors) = &audio {
            match segment_audio_feature(vectors, &seg) {
                Ok(v) => row.set_feature(FeatureChannel::Audio, Some(v.values)),
                Err(e) => warn!("{id}#{}: {e}", seg.index),
            }
        }
        if let Some(lut) = lut {
            if let Some((_, path)) = frames.range(seg.start_frame..seg.end_frame).next() {
                let frame = read_ppm(path)?;
                let v = blood_feature_with(&frame, lut, cfg.blood.binarize_threshold)?;
                row.set_feature(FeatureChannel::Blood, Some(v.values));
            }
        }
        if let (Some(map), Some((w, h))) = (&sidecar, dims) {
            let v = segment_motion_feature(map, &seg, w, h)?;
            row.set_feature(FeatureChannel::Motion, Some(v.values));
        }
        if let Some(table) = &concepts {
            match segment_concept_feature(table, &seg) {
                Ok(v) => row.set_feature(FeatureChannel::Concepts, Some(v.values)),
                Err(Error::MissingFeature(m)) => log::debug!("{m}"),
                Err(e) => return Err(e.into()),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn load_lut(args: &ExtractArgs, ctx: &Context) -> CliResult<Option<ProbabilityLut>> {
    let blood = args.blood_model.clone().or_else(|| ctx.config.paths.blood_model.clone());
    let nonblood = args
        .nonblood_model
        .clone()
        .or_else(|| ctx.config.paths.nonblood_model.clone());
    match (blood, nonblood) {
        (Some(b), Some(n)) => Ok(Some(ProbabilityLut::new(
            &ColorModel3D::load(&b)?,
            &ColorModel3D::load(&n)?,
        ))),
        (None, None) => {
            warn!("no blood models given, blood channel missing");
            Ok(None)
        }
        _ => Err(CliError::Config(
            "blood and non-blood models must be given together".into(),
        )),
    }
}

pub fn extract(ctx: &Context, args: &ExtractArgs) -> CliResult<ExtractSummary> {
    if args.videos.is_empty() {
        return Err(CliError::Config("no videos to extract".into()));
    }
    let mut ids = HashSet::new();
    for v in &args.videos {
        if !ids.insert(v.video_id.as_str()) {
            return Err(CliError::Config(format!("duplicate video id `{}`", v.video_id)));
        }
    }
    let lut = load_lut(args, ctx)?;

    let per_video: Vec<CliResult<Vec<FeatureRow>>> = args
        .videos
        .par_iter()
        .map(|v| extract_video(ctx, v, lut.as_ref()))
        .collect();
    let mut rows = Vec::new();
    for r in per_video {
        rows.extend(r?);
    }

    let file = File::create(&args.out).map_err(|e| io_err(args.out.display(), e))?;
    write_feature_table(BufWriter::new(file), &ctx.header(), &rows)?;

    let mut missing = [0usize; 4];
    for row in &rows {
        for c in FeatureChannel::ALL {
            if row.feature(c).is_none() {
                missing[c.index()] += 1;
            }
        }
    }
    let incomplete_rows = rows.iter().filter(|r| r.incomplete).count();
    if incomplete_rows == rows.len() {
        return Err(Error::MissingFeature(format!(
            "all {} rows lack at least one channel",
            rows.len()
        ))
        .into());
    }
    Ok(ExtractSummary {
        videos: args.videos.len(),
        rows: rows.len(),
        incomplete_rows,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_index_from_name() {
        assert_eq!(frame_index(Path::new("frame_000025.ppm")), Some(25));
        assert_eq!(frame_index(Path::new("v3_f17.ppm")), Some(17));
        assert_eq!(frame_index(Path::new("0.ppm")), Some(0));
        assert_eq!(frame_index(Path::new("cover.ppm")), None);
    }
}
