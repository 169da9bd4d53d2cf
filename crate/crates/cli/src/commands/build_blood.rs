use std::path::{Path, PathBuf};

use serde::Serialize;
use vsd_core::blood::{build_model, extend_model, read_ppm, ExtendOptions, RgbImage};
use vsd_core::Error;

use super::Context;
use crate::error::{io_err, CliResult};

#[derive(Debug, Clone)]
pub struct BuildBloodArgs {
    pub blood_dir: PathBuf,
    pub nonblood_dir: PathBuf,
    /// Unlabeled images whose confidently-blood pixels grow the blood model.
    pub extend_dir: Option<PathBuf>,
    pub out_blood: PathBuf,
    pub out_nonblood: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildBloodSummary {
    pub blood_images: usize,
    pub nonblood_images: usize,
    pub blood_total: u64,
    pub nonblood_total: u64,
    pub extension_images: usize,
}

/// PPM files in `dir`, sorted by file name.
pub(crate) fn list_ppm(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir.display(), e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir.display(), e))?.path();
        let is_ppm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
        if is_ppm && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn corpus(dir: &Path) -> CliResult<Vec<RgbImage>> {
    let files = list_ppm(dir)?;
    if files.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()).into());
    }
    Ok(files.iter().map(|p| read_ppm(p)).collect::<Result<_, _>>()?)
}

pub fn build_blood_model(ctx: &Context, args: &BuildBloodArgs) -> CliResult<BuildBloodSummary> {
    let blood_imgs = corpus(&args.blood_dir)?;
    let nonblood_imgs = corpus(&args.nonblood_dir)?;
    let mut blood = build_model(blood_imgs.iter().flat_map(|i| i.pixels().map(|p| p.0)));
    let nonblood = build_model(nonblood_imgs.iter().flat_map(|i| i.pixels().map(|p| p.0)));

    let mut extension_images = 0;
    if let Some(dir) = &args.extend_dir {
        let files = list_ppm(dir)?;
        extension_images = files.len();
        let opts = ExtendOptions {
            accept_threshold: ctx.config.blood.accept_threshold,
            target_total: ctx.config.blood.target_total,
        };
        blood = extend_model(&blood, &blood.clone(), &nonblood, files.iter().map(|p| read_ppm(p)), opts)?;
    }

    blood.save(&args.out_blood)?;
    nonblood.save(&args.out_nonblood)?;
    Ok(BuildBloodSummary {
        blood_images: blood_imgs.len(),
        nonblood_images: nonblood_imgs.len(),
        blood_total: blood.total(),
        nonblood_total: nonblood.total(),
        extension_images,
    })
}
