//! Blood detection from RGB color statistics.
//!
//! Two 32x32x32 color histograms are built, one from pixels showing blood and
//! one from pixels that do not. A pixel's blood probability is
//! `Pb / (Pb + Pn)` where `Pb` and `Pn` are the normalized bin masses of its
//! color in each model. Per frame, the probability map is thresholded, the
//! resulting mask is split into 4-connected components, and a 14-entry
//! feature vector summarizes both.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub use image::{Rgb, RgbImage};
use log::warn;

use crate::error::{Error, Result};
use crate::types::{FeatureChannel, FeatureVector};

pub const BINS_PER_AXIS: usize = 32;
pub const BIN_WIDTH: usize = 8;
pub const NUM_BINS: usize = BINS_PER_AXIS * BINS_PER_AXIS * BINS_PER_AXIS;
pub const BLOOD_FEATURE_DIM: usize = 14;

pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 0.5;
pub const DEFAULT_ACCEPT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_TARGET_TOTAL: u64 = 1_000_000;

const MODEL_MAGIC: &[u8; 4] = b"VFBM";
const MODEL_VERSION: u8 = 1;

/// Histogram bin of an RGB triple. Components must lie in `0..=255`.
pub fn bin_of(pixel: [i32; 3]) -> Result<[usize; 3]> {
    let mut out = [0usize; 3];
    for (o, &c) in out.iter_mut().zip(pixel.iter()) {
        if !(0..=255).contains(&c) {
            return Err(Error::invalid(format!("color component {c} outside 0..=255")));
        }
        *o = c as usize / BIN_WIDTH;
    }
    Ok(out)
}

/// Flat row-major `(r, g, b)` index of the bin holding `pixel`.
#[inline]
pub fn flat_bin(pixel: [u8; 3]) -> usize {
    let [r, g, b] = pixel.map(|c| c as usize / BIN_WIDTH);
    (r * BINS_PER_AXIS + g) * BINS_PER_AXIS + b
}

/// Normalized 3-D color histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorModel3D {
    counts: Vec<u64>,
    probs: Vec<f64>,
    total: u64,
}

impl Default for ColorModel3D {
    fn default() -> Self {
        ColorModel3D {
            counts: vec![0; NUM_BINS],
            probs: vec![0.0; NUM_BINS],
            total: 0,
        }
    }
}

impl ColorModel3D {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// A model built from zero pixels has all-zero probabilities.
    pub fn is_normalized(&self) -> bool {
        self.total > 0
    }

    pub fn prob(&self, pixel: [u8; 3]) -> f64 {
        self.probs[flat_bin(pixel)]
    }

    pub fn add(&mut self, pixel: [u8; 3]) {
        self.counts[flat_bin(pixel)] += 1;
        self.total += 1;
    }

    /// Recompute probabilities from counts.
    pub fn normalize(&mut self) {
        if self.total == 0 {
            self.probs.iter_mut().for_each(|p| *p = 0.0);
            return;
        }
        let total = self.total as f64;
        for (p, &c) in self.probs.iter_mut().zip(&self.counts) {
            *p = c as f64 / total;
        }
    }

    /// Write the model in the `VFBM` binary format.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&[MODEL_VERSION])?;
        w.write_all(&(BINS_PER_AXIS as u32).to_le_bytes())?;
        w.write_all(&self.total.to_le_bytes())?;
        for p in &self.probs {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a `VFBM` model. The file stores only probabilities and the
    /// total, so counts are recovered as `round(p * total)`.
    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 17];
        r.read_exact(&mut header)
            .map_err(|e| Error::Format(format!("truncated model header: {e}")))?;
        if &header[0..4] != MODEL_MAGIC {
            return Err(Error::Format("bad model magic, expected VFBM".into()));
        }
        if header[4] != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", header[4])));
        }
        let bins = u32::from_le_bytes(header[5..9].try_into().unwrap());
        if bins as usize != BINS_PER_AXIS {
            return Err(Error::Format(format!("unsupported bins_per_axis {bins}")));
        }
        let total = u64::from_le_bytes(header[9..17].try_into().unwrap());
        let mut buf = vec![0u8; NUM_BINS * 8];
        r.read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated model body: {e}")))?;
        let probs: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Format("model contains invalid probabilities".into()));
        }
        let counts = probs
            .iter()
            .map(|p| (p * total as f64).round() as u64)
            .collect();
        Ok(ColorModel3D {
            counts,
            probs,
            total,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::read_from(BufReader::new(f))
    }
}

/// Histogram of a pixel stream, normalized.
pub fn build_model(pixels: impl IntoIterator<Item = [u8; 3]>) -> ColorModel3D {
    let mut model = ColorModel3D::default();
    for p in pixels {
        model.add(p);
    }
    model.normalize();
    model
}

#[derive(Debug, Clone, Copy)]
pub struct ExtendOptions {
    pub accept_threshold: f64,
    /// Stop accepting pixels once the model holds this many.
    pub target_total: u64,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        ExtendOptions {
            accept_threshold: DEFAULT_ACCEPT_THRESHOLD,
            target_total: DEFAULT_TARGET_TOTAL,
        }
    }
}

/// Grow `model` with every corpus pixel whose blood probability under the
/// fixed `blood`/`nonblood` pair reaches the acceptance threshold. Corpus
/// entries that failed to load are skipped.
pub fn extend_model<I>(
    model: &ColorModel3D,
    blood: &ColorModel3D,
    nonblood: &ColorModel3D,
    images: I,
    opts: ExtendOptions,
) -> Result<ColorModel3D>
where
    I: IntoIterator<Item = Result<RgbImage>>,
{
    if !(opts.accept_threshold > 0.0 && opts.accept_threshold < 1.0) {
        return Err(Error::invalid(format!(
            "accept threshold must lie in (0,1), got {}",
            opts.accept_threshold
        )));
    }
    let lut = ProbabilityLut::new(blood, nonblood);
    let mut out = model.clone();
    'images: for img in images {
        let img = match img {
            Ok(img) => img,
            Err(e) => {
                warn!("skipping corpus image: {e}");
                continue;
            }
        };
        for px in img.pixels() {
            if out.total >= opts.target_total {
                break 'images;
            }
            if lut.get(px.0) >= opts.accept_threshold {
                out.add(px.0);
            }
        }
    }
    out.normalize();
    Ok(out)
}

/// `Pb / (Pb + Pn)`, or 0 when both masses vanish.
pub fn blood_probability_from(pb: f64, pn: f64) -> f64 {
    let denom = pb + pn;
    if denom > 0.0 {
        pb / denom
    } else {
        0.0
    }
}

pub fn blood_probability(pixel: [u8; 3], blood: &ColorModel3D, nonblood: &ColorModel3D) -> f64 {
    blood_probability_from(blood.prob(pixel), nonblood.prob(pixel))
}

/// Blood probability of every color bin, precomputed.
#[derive(Debug, Clone)]
pub struct ProbabilityLut {
    table: Vec<f64>,
}

impl ProbabilityLut {
    pub fn new(blood: &ColorModel3D, nonblood: &ColorModel3D) -> Self {
        let table = blood
            .probs
            .iter()
            .zip(&nonblood.probs)
            .map(|(&pb, &pn)| blood_probability_from(pb, pn))
            .collect();
        ProbabilityLut { table }
    }

    #[inline]
    pub fn get(&self, pixel: [u8; 3]) -> f64 {
        self.table[flat_bin(pixel)]
    }
}

/// Per-pixel blood probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BloodProbabilityMap {
    pub width: usize,
    pub height: usize,
    pub p: Vec<f64>,
}

pub fn compute_bpm(
    frame: &RgbImage,
    blood: &ColorModel3D,
    nonblood: &ColorModel3D,
) -> Result<BloodProbabilityMap> {
    compute_bpm_with(frame, &ProbabilityLut::new(blood, nonblood))
}

pub fn compute_bpm_with(frame: &RgbImage, lut: &ProbabilityLut) -> Result<BloodProbabilityMap> {
    let (w, h) = frame.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::invalid("frame has zero width or height"));
    }
    Ok(BloodProbabilityMap {
        width: w as usize,
        height: h as usize,
        p: frame.pixels().map(|px| lut.get(px.0)).collect(),
    })
}

/// Binary image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "mask of {width}x{height} needs {} entries, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

pub fn binarize_bpm(bpm: &BloodProbabilityMap, threshold: f64) -> Mask {
    Mask {
        width: bpm.width,
        height: bpm.height,
        bits: bpm.p.iter().map(|&p| p >= threshold).collect(),
    }
}

/// Component labels of a mask: 0 for background, components numbered from 1
/// in raster order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: u32,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let next = parent[x as usize];
        parent[x as usize] = parent[next as usize];
        x = next;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Two-pass 4-connected labeling with union-find.
pub fn label_components(mask: &Mask) -> Labeling {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    // parent[0] is the background sentinel
    let mut parent: Vec<u32> = vec![0];

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask.bits[i] {
                continue;
            }
            let left = if x > 0 { labels[i - 1] } else { 0 };
            let up = if y > 0 { labels[i - w] } else { 0 };
            labels[i] = match (left, up) {
                (0, 0) => {
                    let l = parent.len() as u32;
                    parent.push(l);
                    l
                }
                (l, 0) | (0, l) => l,
                (l, u) => {
                    union(&mut parent, l, u);
                    l.min(u)
                }
            };
        }
    }

    // Provisional labels are created in raster order and roots are the
    // smallest member, so renumbering roots in increasing order yields
    // first-pixel raster order.
    let mut remap = vec![0u32; parent.len()];
    let mut count = 0u32;
    for l in 1..parent.len() as u32 {
        let r = find(&mut parent, l);
        if r == l {
            count += 1;
            remap[l as usize] = count;
        }
    }
    for l in labels.iter_mut().filter(|l| **l != 0) {
        *l = remap[find(&mut parent, *l) as usize];
    }
    Labeling {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// Geometry of one connected component. Bounding box bounds are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub label: u32,
    pub area: usize,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
    /// Pixel edges shared with background or the image border.
    pub perimeter: usize,
}

impl Component {
    pub fn bbox_area(&self) -> usize {
        (self.max_x - self.min_x + 1) * (self.max_y - self.min_y + 1)
    }
}

/// Connected components sorted by area, largest first. Equal areas keep
/// raster order.
pub fn connected_components(mask: &Mask) -> Vec<Component> {
    let lab = label_components(mask);
    let (w, h) = (mask.width, mask.height);
    let mut comps: Vec<Component> = (1..=lab.count)
        .map(|label| Component {
            label,
            area: 0,
            min_x: usize::MAX,
            min_y: usize::MAX,
            max_x: 0,
            max_y: 0,
            centroid_x: 0.0,
            centroid_y: 0.0,
            perimeter: 0,
        })
        .collect();

    for y in 0..h {
        for x in 0..w {
            let l = lab.labels[y * w + x];
            if l == 0 {
                continue;
            }
            let c = &mut comps[l as usize - 1];
            c.area += 1;
            c.min_x = c.min_x.min(x);
            c.min_y = c.min_y.min(y);
            c.max_x = c.max_x.max(x);
            c.max_y = c.max_y.max(y);
            c.centroid_x += x as f64;
            c.centroid_y += y as f64;
            let open = |nx: Option<usize>, ny: Option<usize>| match (nx, ny) {
                (Some(nx), Some(ny)) if nx < w && ny < h => !mask.get(nx, ny),
                _ => true,
            };
            c.perimeter += [
                open(x.checked_sub(1), Some(y)),
                open(Some(x + 1), Some(y)),
                open(Some(x), y.checked_sub(1)),
                open(Some(x), Some(y + 1)),
            ]
            .iter()
            .filter(|&&b| b)
            .count();
        }
    }
    for c in &mut comps {
        c.centroid_x /= c.area as f64;
        c.centroid_y /= c.area as f64;
    }
    comps.sort_by_key(|c| std::cmp::Reverse(c.area));
    comps
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Named view of the 14 blood feature entries, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BloodFeature {
    pub blood_ratio: f64,
    pub mean_probability: f64,
    pub probability_variance: f64,
    pub max_probability: f64,
    pub probability_ratio: f64,
    pub largest_area: f64,
    pub second_area: f64,
    pub component_density: f64,
    pub largest_fill: f64,
    pub largest_centroid_x: f64,
    pub largest_centroid_y: f64,
    pub largest_compactness: f64,
    pub row_ratio_variance: f64,
    pub column_ratio_variance: f64,
}

impl BloodFeature {
    pub fn from_map(bpm: &BloodProbabilityMap, mask: &Mask) -> Self {
        let (w, h) = (bpm.width, bpm.height);
        let n = (w * h) as f64;
        let ones = mask.count_ones();

        let (mean_p, var_p) = mean_var(bpm.p.iter().copied());
        let max_p = bpm.p.iter().copied().fold(0.0, f64::max);
        let masked_sum: f64 = bpm
            .p
            .iter()
            .zip(&mask.bits)
            .filter(|(_, &b)| b)
            .map(|(p, _)| p)
            .sum();
        let probability_ratio = if ones > 0 && mean_p > 0.0 {
            (masked_sum / ones as f64) / mean_p
        } else {
            0.0
        };

        let comps = connected_components(mask);
        let mut f = BloodFeature {
            blood_ratio: ones as f64 / n,
            mean_probability: mean_p,
            probability_variance: var_p,
            max_probability: max_p,
            probability_ratio,
            component_density: comps.len() as f64 / (n / 1000.0),
            ..Default::default()
        };
        if let Some(big) = comps.first() {
            f.largest_area = big.area as f64 / n;
            f.largest_fill = big.area as f64 / big.bbox_area() as f64;
            f.largest_centroid_x = (big.centroid_x + 0.5) / w as f64;
            f.largest_centroid_y = (big.centroid_y + 0.5) / h as f64;
            f.largest_compactness = (big.perimeter * big.perimeter) as f64
                / (4.0 * std::f64::consts::PI * big.area as f64);
        }
        if let Some(second) = comps.get(1) {
            f.second_area = second.area as f64 / n;
        }

        let rows = (0..h).map(|y| (0..w).filter(|&x| mask.get(x, y)).count() as f64 / w as f64);
        let cols = (0..w).map(|x| (0..h).filter(|&y| mask.get(x, y)).count() as f64 / h as f64);
        f.row_ratio_variance = mean_var(rows).1;
        f.column_ratio_variance = mean_var(cols).1;
        f
    }

    pub fn to_array(&self) -> [f64; BLOOD_FEATURE_DIM] {
        [
            self.blood_ratio,
            self.mean_probability,
            self.probability_variance,
            self.max_probability,
            self.probability_ratio,
            self.largest_area,
            self.second_area,
            self.component_density,
            self.largest_fill,
            self.largest_centroid_x,
            self.largest_centroid_y,
            self.largest_compactness,
            self.row_ratio_variance,
            self.column_ratio_variance,
        ]
    }
}

/// Blood feature vector of one frame.
pub fn blood_feature(
    frame: &RgbImage,
    blood: &ColorModel3D,
    nonblood: &ColorModel3D,
    threshold: f64,
) -> Result<FeatureVector> {
    blood_feature_with(frame, &ProbabilityLut::new(blood, nonblood), threshold)
}

pub fn blood_feature_with(
    frame: &RgbImage,
    lut: &ProbabilityLut,
    threshold: f64,
) -> Result<FeatureVector> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "binarization threshold must lie in [0,1], got {threshold}"
        )));
    }
    let bpm = compute_bpm_with(frame, lut)?;
    let mask = binarize_bpm(&bpm, threshold);
    let feature = BloodFeature::from_map(&bpm, &mask);
    FeatureVector::new(FeatureChannel::Blood, feature.to_array().to_vec())
}

/// Decode an 8-bit binary PPM (P6) frame.
pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = image::ImageReader::with_format(BufReader::new(f), image::ImageFormat::Pnm);
    let img = reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.into_rgb8())
}

pub fn write_ppm(path: &Path, frame: &RgbImage) -> Result<()> {
    frame
        .save_with_format(path, image::ImageFormat::Pnm)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}
