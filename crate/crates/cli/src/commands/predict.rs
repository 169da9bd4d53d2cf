use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use vsd_core::dataset::{load_feature_table, SplitRole, TableHeader, FEATURE_TABLE_FORMAT_VERSION};
use vsd_core::fusion::{decide_multiclass, WeightsFile};
use vsd_core::types::SegmentScoreRecord;
use vsd_core::Error;

use super::train::resolve_split;
use super::{channel_scores, load_classifiers, Context};
use crate::error::{io_err, CliResult};

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub features: PathBuf,
    pub classifiers: PathBuf,
    pub weights: PathBuf,
    /// Restrict to the videos of one split role.
    pub role: Option<SplitRole>,
    pub split: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictSummary {
    pub records: usize,
    pub violent: usize,
    pub skipped_incomplete: usize,
}

/// Fused class scores and decisions for every complete row.
pub fn predict(ctx: &Context, args: &PredictArgs) -> CliResult<PredictSummary> {
    let classifiers = load_classifiers(&args.classifiers)?;
    let weights = WeightsFile::load(&args.weights)?.fusion_weights()?;
    let (_, rows) = load_feature_table(&args.features)?;
    let split = match args.role {
        Some(_) => Some(resolve_split(ctx, &args.split)?),
        None => None,
    };

    let mut records = Vec::new();
    let mut skipped = 0;
    for row in &rows {
        if let (Some(split), Some(role)) = (&split, args.role) {
            if split.role_of(&row.video_id) != Some(role) {
                continue;
            }
        }
        if row.incomplete {
            skipped += 1;
            continue;
        }
        let scores = channel_scores(row, &classifiers)?;
        let (_, class_scores) = decide_multiclass(&scores, &weights)?;
        records.push(SegmentScoreRecord::new(row.segment(), class_scores)?);
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} incomplete rows");
    }
    if records.is_empty() {
        return Err(Error::MissingFeature("no complete rows to predict".into()).into());
    }
    write_predictions(&args.out, &ctx.header(), &records)?;
    Ok(PredictSummary {
        records: records.len(),
        violent: records.iter().filter(|r| r.binary).count(),
        skipped_incomplete: skipped,
    })
}

fn write_predictions(path: &Path, header: &TableHeader, records: &[SegmentScoreRecord]) -> CliResult<()> {
    let file = File::create(path).map_err(|e| io_err(path.display(), e))?;
    let mut w = BufWriter::new(file);
    let io = |e| io_err(path.display(), e);
    writeln!(w, "{}", serde_json::to_string(header)?).map_err(io)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Read a predictions file; the header line is optional.
pub fn load_predictions(path: &Path) -> CliResult<(Option<TableHeader>, Vec<SegmentScoreRecord>)> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path.display(), e))?;
    let origin = path.display().to_string();
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(h) = serde_json::from_str::<TableHeader>(line) {
                if h.format_version != FEATURE_TABLE_FORMAT_VERSION {
                    return Err(Error::parse(&origin, 1, "unsupported predictions format").into());
                }
                header = Some(h);
                continue;
            }
        }
        let rec: SegmentScoreRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(&origin, i + 1, format!("bad prediction record: {e}")))?;
        records.push(rec);
    }
    Ok((header, records))
}
