//! Synthetic corpus with planted per-class channel signals.
//!
//! Each video carries one violent interval of whole seconds. Its class
//! decides which two channels show the planted signal, so every class has a
//! distinct channel pair:
//!
//! | class      | channels          |
//! |------------|-------------------|
//! | gunshots   | audio, blood      |
//! | explosions | audio, motion     |
//! | screams    | audio, concepts   |
//! | firearms   | blood, motion     |
//! | blood      | blood, concepts   |
//! | fights     | motion, concepts  |

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use vsd_core::audio::{write_wav_i16, AudioTrack};
use vsd_core::blood::{write_ppm, Rgb, RgbImage};
use vsd_core::concepts::{ConceptTable, ConceptVector};
use vsd_core::dataset::{serialize_annotations, SplitSpec};
use vsd_core::motion::{write_sidecar, MotionVectorRecord};
use vsd_core::types::{Annotation, FeatureChannel, ViolenceClass};

pub const PLANTED: [(ViolenceClass, [FeatureChannel; 2]); 6] = [
    (ViolenceClass::Gunshots, [FeatureChannel::Audio, FeatureChannel::Blood]),
    (ViolenceClass::Explosions, [FeatureChannel::Audio, FeatureChannel::Motion]),
    (ViolenceClass::Screams, [FeatureChannel::Audio, FeatureChannel::Concepts]),
    (ViolenceClass::Firearms, [FeatureChannel::Blood, FeatureChannel::Motion]),
    (ViolenceClass::Blood, [FeatureChannel::Blood, FeatureChannel::Concepts]),
    (ViolenceClass::Fights, [FeatureChannel::Motion, FeatureChannel::Concepts]),
];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub videos: usize,
    pub seconds: u64,
    pub fps: u64,
    pub sample_rate: u32,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            videos: 200,
            seconds: 10,
            fps: 25,
            sample_rate: 8000,
            width: 32,
            height: 24,
            seed: 2024,
            n_train: 600,
            n_test: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub split: PathBuf,
    pub config: PathBuf,
    pub blood_dir: PathBuf,
    pub nonblood_dir: PathBuf,
    pub planted: Vec<(String, ViolenceClass)>,
}

fn background(rng: &mut ChaCha8Rng) -> [u8; 3] {
    match rng.gen_range(0..3) {
        0 => {
            let g = rng.gen_range(60..200);
            [g, g, g]
        }
        1 => [rng.gen_range(0..60), rng.gen_range(60..160), rng.gen_range(120..255)],
        _ => [rng.gen_range(0..80), rng.gen_range(120..230), rng.gen_range(0..90)],
    }
}

fn blood_red(rng: &mut ChaCha8Rng) -> [u8; 3] {
    [rng.gen_range(130..200), rng.gen_range(0..24), rng.gen_range(0..24)]
}

fn frame(rng: &mut ChaCha8Rng, w: u32, h: u32, bloody: bool) -> RgbImage {
    let mut img = RgbImage::from_fn(w, h, |_, _| Rgb(background(rng)));
    if bloody {
        let (pw, ph) = (rng.gen_range(w / 4..w / 2), rng.gen_range(h / 4..h / 2));
        let (x0, y0) = (rng.gen_range(0..w - pw), rng.gen_range(0..h - ph));
        for y in y0..y0 + ph {
            for x in x0..x0 + pw {
                img.put_pixel(x, y, Rgb(blood_red(rng)));
            }
        }
    }
    img
}

fn write_color_corpus(dir: &Path, rng: &mut ChaCha8Rng, red: bool) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..3 {
        let img = RgbImage::from_fn(64, 64, |_, _| {
            Rgb(if red { blood_red(rng) } else { background(rng) })
        });
        write_ppm(&dir.join(format!("img_{i}.ppm")), &img).unwrap();
    }
}

pub fn generate(root: &Path, spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let blood_dir = root.join("corpus/blood");
    let nonblood_dir = root.join("corpus/nonblood");
    write_color_corpus(&blood_dir, &mut rng, true);
    write_color_corpus(&nonblood_dir, &mut rng, false);

    let frames_total = spec.seconds * spec.fps;
    let spf = (spec.sample_rate as u64 / spec.fps) as usize;
    let (w, h) = (spec.width, spec.height);
    let mut videos = Vec::new();
    let mut planted = Vec::new();
    let mut split = SplitSpec::default();

    for v in 0..spec.videos {
        let id = format!("video{v:03}");
        let (class, channels) = PLANTED[v % PLANTED.len()];
        let len = rng.gen_range(3..=5);
        let start = rng.gen_range(1..=spec.seconds - len - 1);
        let violent = |sec: u64| sec >= start && sec < start + len;
        let has = |c: FeatureChannel| channels.contains(&c);
        let dir = root.join(&id);
        let frames_dir = dir.join("frames");
        std::fs::create_dir_all(&frames_dir).unwrap();

        // one frame per second
        for sec in 0..spec.seconds {
            let img = frame(&mut rng, w, h, violent(sec) && has(FeatureChannel::Blood));
            write_ppm(&frames_dir.join(format!("frame_{:06}.ppm", sec * spec.fps)), &img).unwrap();
        }

        let tone = rng.gen_range(150.0..400.0);
        let mut samples = Vec::with_capacity(frames_total as usize * spf);
        for sec in 0..spec.seconds {
            let loud = violent(sec) && has(FeatureChannel::Audio);
            for k in 0..spec.fps as usize * spf {
                let t = (sec as usize * spec.fps as usize * spf + k) as f64 / spec.sample_rate as f64;
                let s = if loud {
                    rng.gen_range(-0.6..0.6)
                } else {
                    0.3 * (2.0 * std::f64::consts::PI * tone * t).sin() + rng.gen_range(-0.01..0.01)
                };
                samples.push(s);
            }
        }
        write_wav_i16(
            &dir.join("audio.wav"),
            &AudioTrack {
                sample_rate: spec.sample_rate,
                samples,
            },
        )
        .unwrap();

        let mut records = Vec::new();
        for f in 0..frames_total {
            let moving = violent(f / spec.fps) && has(FeatureChannel::Motion);
            let mag = if moving { 6.0 } else { 0.4 };
            for by in 0..h / 8 {
                for bx in 0..w / 8 {
                    records.push(MotionVectorRecord {
                        frame_idx: f,
                        dst_x: (bx * 8 + 4) as i64,
                        dst_y: (by * 8 + 4) as i64,
                        dx: rng.gen_range(-mag..mag),
                        dy: rng.gen_range(-mag..mag),
                        block_w: 8,
                        block_h: 8,
                    });
                }
            }
        }
        std::fs::write(dir.join("motion.csv"), write_sidecar(records)).unwrap();

        let mut table = ConceptTable::default();
        for sec in 0..spec.seconds {
            let on = violent(sec) && has(FeatureChannel::Concepts);
            let base = if on { 0.75 } else { 0.25 };
            table
                .insert(ConceptVector {
                    frame_idx: sec * spec.fps,
                    scores: vec![
                        base + rng.gen_range(-0.15..0.15),
                        base + rng.gen_range(-0.15..0.15),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                    ],
                })
                .unwrap();
        }
        std::fs::write(dir.join("concepts.jsonl"), table.to_jsonl()).unwrap();

        let ann = Annotation {
            start_frame: start * spec.fps,
            end_frame: (start + len) * spec.fps - 1,
            classes: BTreeSet::from([class]),
            multiple_action: false,
        };
        std::fs::write(
            dir.join("annotations.txt"),
            format!("# planted {class}\n{}", serialize_annotations(&[ann])),
        )
        .unwrap();

        videos.push(json!({
            "video_id": id,
            "frames_dir": format!("{id}/frames"),
            "wav": format!("{id}/audio.wav"),
            "sidecar": format!("{id}/motion.csv"),
            "concepts": format!("{id}/concepts.jsonl"),
            "annotations": format!("{id}/annotations.txt"),
            "frame_count": frames_total,
        }));
        // groups of one video per class share a split
        match (v / PLANTED.len()) % 4 {
            0 | 1 => split.train_ids.push(id.clone()),
            2 => split.validation_ids.push(id.clone()),
            _ => split.test_ids.push(id.clone()),
        }
        planted.push((id, class));
    }

    let manifest = root.join("manifest.json");
    std::fs::write(&manifest, serde_json::to_string_pretty(&json!({ "videos": videos })).unwrap()).unwrap();
    let split_path = root.join("split.json");
    std::fs::write(&split_path, serde_json::to_string_pretty(&split).unwrap()).unwrap();
    let config = root.join("config.json");
    let cfg = json!({
        "dataset_id": "synthetic",
        "fps": spec.fps as f64,
        "seed": spec.seed,
        "sampling": { "n_train": spec.n_train, "n_test": spec.n_test },
    });
    std::fs::write(&config, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    SynthCorpus {
        root: root.to_path_buf(),
        manifest,
        split: split_path,
        config,
        blood_dir,
        nonblood_dir,
        planted,
    }
}
