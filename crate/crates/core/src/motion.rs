//! Codec motion-vector features.
//!
//! Motion vectors arrive in a CSV sidecar exported from the codec. Each
//! frame is split into 3 columns by 4 rows; every block adds `|dx|` and
//! `|dy|` weighted by its area to the cell holding its center. Cell sums are
//! normalized by frame area and by the number of frames in the segment.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureChannel, FeatureVector, Segment};

pub const GRID_COLUMNS: usize = 3;
pub const GRID_ROWS: usize = 4;
pub const MOTION_FEATURE_DIM: usize = GRID_COLUMNS * GRID_ROWS * 2;

pub const SIDECAR_HEADER: [&str; 7] = ["frame", "dst_x", "dst_y", "dx", "dy", "block_w", "block_h"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionVectorRecord {
    #[serde(rename = "frame")]
    pub frame_idx: u64,
    pub dst_x: i64,
    pub dst_y: i64,
    pub dx: f64,
    pub dy: f64,
    pub block_w: u32,
    pub block_h: u32,
}

pub type SidecarMap = BTreeMap<u64, Vec<MotionVectorRecord>>;

/// Parse sidecar CSV text. `origin` names the source in errors.
pub fn parse_sidecar_str(text: &str, origin: &str) -> Result<SidecarMap> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());

    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{origin}: unreadable header: {e}")))?
        .clone();
    if headers.is_empty() && text.trim().is_empty() {
        return Ok(SidecarMap::new());
    }
    if headers.iter().ne(SIDECAR_HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "{origin}: unknown sidecar header `{}`, expected `{}`",
            headers.iter().collect::<Vec<_>>().join(","),
            SIDECAR_HEADER.join(",")
        )));
    }

    let mut map = SidecarMap::new();
    for row in rdr.deserialize::<MotionVectorRecord>() {
        let rec = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(origin, line, format!("malformed motion record: {e}"))
        })?;
        if rec.block_w == 0 || rec.block_h == 0 || !rec.dx.is_finite() || !rec.dy.is_finite() {
            return Err(Error::parse(
                origin,
                0,
                format!("invalid motion record for frame {}", rec.frame_idx),
            ));
        }
        map.entry(rec.frame_idx).or_default().push(rec);
    }
    Ok(map)
}

pub fn parse_sidecar(path: &Path) -> Result<SidecarMap> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_sidecar_str(&text, &path.display().to_string())
}

/// Render records in sidecar format.
pub fn write_sidecar(records: impl IntoIterator<Item = MotionVectorRecord>) -> String {
    let mut out = SIDECAR_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.frame_idx, r.dst_x, r.dst_y, r.dx, r.dy, r.block_w, r.block_h
        ));
    }
    out
}

/// Cell index `row * 3 + col` holding pixel `(x, y)`, or `None` outside the
/// frame. Remainder pixels belong to the last column and row.
pub fn cell_of(x: i64, y: i64, frame_w: u32, frame_h: u32) -> Option<usize> {
    if x < 0 || y < 0 || x >= frame_w as i64 || y >= frame_h as i64 {
        return None;
    }
    let col_w = (frame_w as usize / GRID_COLUMNS).max(1);
    let row_h = (frame_h as usize / GRID_ROWS).max(1);
    let col = (x as usize / col_w).min(GRID_COLUMNS - 1);
    let row = (y as usize / row_h).min(GRID_ROWS - 1);
    Some(row * GRID_COLUMNS + col)
}

fn check_frame(frame_w: u32, frame_h: u32) -> Result<()> {
    if (frame_w as usize) < GRID_COLUMNS || (frame_h as usize) < GRID_ROWS {
        return Err(Error::invalid(format!(
            "frame {frame_w}x{frame_h} too small for a {GRID_COLUMNS}x{GRID_ROWS} grid"
        )));
    }
    Ok(())
}

/// Unnormalized `(Σ|dx|·area, Σ|dy|·area)` per cell.
fn accumulate<'a>(
    records: impl IntoIterator<Item = &'a MotionVectorRecord>,
    frame_w: u32,
    frame_h: u32,
    sums: &mut [f64; MOTION_FEATURE_DIM],
) {
    for r in records {
        let Some(cell) = cell_of(r.dst_x, r.dst_y, frame_w, frame_h) else {
            warn!(
                "frame {}: block center ({}, {}) outside {}x{} frame, skipped",
                r.frame_idx, r.dst_x, r.dst_y, frame_w, frame_h
            );
            continue;
        };
        let area = r.block_w as f64 * r.block_h as f64;
        sums[2 * cell] += r.dx.abs() * area;
        sums[2 * cell + 1] += r.dy.abs() * area;
    }
}

fn finish(mut sums: [f64; MOTION_FEATURE_DIM], frame_w: u32, frame_h: u32, frames: u64) -> Result<FeatureVector> {
    let norm = frame_w as f64 * frame_h as f64 * frames as f64;
    sums.iter_mut().for_each(|s| *s /= norm);
    FeatureVector::new(FeatureChannel::Motion, sums.to_vec())
}

/// Motion histogram of one frame's records, normalized as if the frame sat in
/// a segment of `frames_in_segment` frames.
pub fn motion_feature(
    records: &[MotionVectorRecord],
    frame_w: u32,
    frame_h: u32,
    frames_in_segment: u64,
) -> Result<FeatureVector> {
    check_frame(frame_w, frame_h)?;
    if frames_in_segment == 0 {
        return Err(Error::invalid("segment must contain at least one frame"));
    }
    let mut sums = [0.0; MOTION_FEATURE_DIM];
    accumulate(records, frame_w, frame_h, &mut sums);
    finish(sums, frame_w, frame_h, frames_in_segment)
}

/// Motion histogram of every record inside the segment's frame range.
pub fn segment_motion_feature(
    sidecar: &SidecarMap,
    segment: &Segment,
    frame_w: u32,
    frame_h: u32,
) -> Result<FeatureVector> {
    check_frame(frame_w, frame_h)?;
    if segment.is_empty() {
        return Err(Error::invalid("empty segment"));
    }
    let mut sums = [0.0; MOTION_FEATURE_DIM];
    let in_range = sidecar
        .range(segment.start_frame..segment.end_frame)
        .flat_map(|(_, recs)| recs.iter());
    accumulate(in_range, frame_w, frame_h, &mut sums);
    finish(sums, frame_w, frame_h, segment.len())
}
