//! MFCC features aligned to video frames.
//!
//! The audio track is cut into non-overlapping windows of
//! `round(sample_rate / fps)` samples so that every video frame gets one
//! 22-coefficient vector. Segment features are the mean of their frames'
//! vectors.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureChannel, FeatureVector, Segment};

pub const MFCC_DIM: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFunction {
    Rectangular,
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/N)`.
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub n_mel_filters: usize,
    pub include_c0: bool,
    pub log_floor: f64,
    pub window: WindowFunction,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            n_coeffs: MFCC_DIM,
            n_mel_filters: 26,
            include_c0: false,
            log_floor: 1e-10,
            window: WindowFunction::Hann,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        let needed = self.n_coeffs + usize::from(!self.include_c0);
        if self.n_coeffs == 0 || needed > self.n_mel_filters {
            return Err(Error::invalid(format!(
                "{} coefficients (c0 {}) do not fit {} mel filters",
                self.n_coeffs,
                if self.include_c0 { "included" } else { "excluded" },
                self.n_mel_filters
            )));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(Error::invalid("log floor must be positive"));
        }
        Ok(())
    }
}

/// Mono PCM samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrack {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

/// Samples per video frame: `round(sample_rate / fps)`.
pub fn window_length(sample_rate: u32, fps: f64) -> Result<usize> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::invalid(format!("fps must be positive, got {fps}")));
    }
    Ok((sample_rate as f64 / fps).round() as usize)
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters over DFT bins `0..=n/2`, centers evenly spaced on the
/// mel scale between 0 Hz and Nyquist. Weights are evaluated at each bin's
/// exact frequency.
pub fn mel_filterbank(n_filters: usize, window_len: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let n_bins = window_len / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / window_len as f64;

    (0..n_filters)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= center {
                        (f - lo) / (center - lo)
                    } else {
                        (hi - f) / (hi - center)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II.
pub fn dct2_orthonormal(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Orthonormal DCT-III, the inverse of [`dct2_orthonormal`].
pub fn dct3_orthonormal(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    (0..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, v)| {
                    let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    scale * v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
                })
                .sum()
        })
        .collect()
}

/// MFCC extractor for a fixed window length and sample rate.
pub struct Mfcc {
    config: MfccConfig,
    window_len: usize,
    window: Vec<f64>,
    filters: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl Mfcc {
    pub fn new(window_len: usize, sample_rate: u32, config: MfccConfig) -> Result<Self> {
        config.validate()?;
        if window_len < 2 {
            return Err(Error::invalid(format!(
                "MFCC window needs at least 2 samples, got {window_len}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let window = match config.window {
            WindowFunction::Rectangular => vec![1.0; window_len],
            WindowFunction::Hann => (0..window_len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / window_len as f64).cos())
                .collect(),
        };
        let m = config.n_mel_filters;
        let first = usize::from(!config.include_c0);
        let dct = (first..first + config.n_coeffs)
            .map(|k| {
                let scale = if k == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
                (0..m)
                    .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * m) as f64).cos())
                    .collect()
            })
            .collect();
        Ok(Mfcc {
            filters: mel_filterbank(m, window_len, sample_rate),
            fft: FftPlanner::new().plan_fft_forward(window_len),
            config,
            window_len,
            window,
            dct,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// Log mel energies of one window.
    pub fn log_mel_energies(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.window_len {
            return Err(Error::invalid(format!(
                "expected a window of {} samples, got {}",
                self.window_len,
                samples.len()
            )));
        }
        let mut buf: Vec<Complex<f64>> = samples
            .iter()
            .zip(&self.window)
            .map(|(s, w)| Complex::new(s * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..self.window_len / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        Ok(self
            .filters
            .iter()
            .map(|row| {
                let e: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(self.config.log_floor).ln()
            })
            .collect())
    }

    pub fn coefficients(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let log_e = self.log_mel_energies(samples)?;
        Ok(self
            .dct
            .iter()
            .map(|row| row.iter().zip(&log_e).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// MFCC vector of a single window.
pub fn mfcc_frame(samples: &[f64], sample_rate: u32, config: &MfccConfig) -> Result<FeatureVector> {
    let mfcc = Mfcc::new(samples.len(), sample_rate, *config)?;
    audio_vector(mfcc.coefficients(samples)?, config)
}

fn audio_vector(values: Vec<f64>, config: &MfccConfig) -> Result<FeatureVector> {
    if config.n_coeffs == MFCC_DIM {
        FeatureVector::new(FeatureChannel::Audio, values)
    } else {
        // non-default configs are allowed for study but leave the channel contract
        Ok(FeatureVector {
            channel: FeatureChannel::Audio,
            values,
        })
    }
}

/// One MFCC vector per video frame; a trailing partial window is dropped.
pub fn mfcc_track(track: &AudioTrack, fps: f64, config: &MfccConfig) -> Result<Vec<FeatureVector>> {
    let wl = window_length(track.sample_rate, fps)?;
    let mfcc = Mfcc::new(wl, track.sample_rate, *config)?;
    track
        .samples
        .chunks_exact(wl)
        .map(|w| audio_vector(mfcc.coefficients(w)?, config))
        .collect()
}

/// Mean of the per-frame vectors inside the segment. Frames past the end of
/// the track are ignored.
pub fn segment_audio_feature(vectors: &[FeatureVector], segment: &Segment) -> Result<FeatureVector> {
    let start = segment.start_frame as usize;
    let end = (segment.end_frame as usize).min(vectors.len());
    if start >= end {
        return Err(Error::invalid(format!(
            "no audio frames in segment {}#{} (track has {} frames)",
            segment.video_id,
            segment.index,
            vectors.len()
        )));
    }
    let slice = &vectors[start..end];
    let dim = slice[0].dim();
    let mut mean = vec![0.0; dim];
    for v in slice {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    let n = slice.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    FeatureVector::new(FeatureChannel::Audio, mean)
}

/// Read a PCM WAV file (16-bit integer or 32-bit float), downmixing to mono
/// by channel mean.
pub fn read_wav(path: &Path) -> Result<AudioTrack> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{}: unsupported WAV encoding {fmt:?} {bits}-bit",
                path.display()
            )))
        }
    };
    let samples = interleaved
        .chunks_exact(channels.max(1))
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Ok(AudioTrack {
        sample_rate: spec.sample_rate,
        samples,
    })
}

pub fn write_wav_i16(path: &Path, track: &AudioTrack) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: track.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &track.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, sr: u32, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / sr as f64).sin())
            .collect()
    }

    /// Textbook MFCC: naive DFT, filterbank by direct loops, DCT-II by its
    /// defining sum.
    fn reference_mfcc(x: &[f64], sr: u32) -> Vec<f64> {
        let n = x.len();
        let windowed: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v * (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()))
            .collect();
        let power: Vec<f64> = (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in windowed.iter().enumerate() {
                    let ang = -2.0 * PI * (k * t % n) as f64 / n as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                re * re + im * im
            })
            .collect();
        let m = 26;
        let mel_max = 2595.0 * (1.0 + (sr as f64 / 2.0) / 700.0).log10();
        let pts: Vec<f64> = (0..m + 2)
            .map(|i| 700.0 * (10f64.powf(mel_max * i as f64 / (m + 1) as f64 / 2595.0) - 1.0))
            .collect();
        let loge: Vec<f64> = (0..m)
            .map(|j| {
                let mut e = 0.0;
                for (k, p) in power.iter().enumerate() {
                    let f = k as f64 * sr as f64 / n as f64;
                    let w = if f > pts[j] && f <= pts[j + 1] {
                        (f - pts[j]) / (pts[j + 1] - pts[j])
                    } else if f > pts[j + 1] && f < pts[j + 2] {
                        (pts[j + 2] - f) / (pts[j + 2] - pts[j + 1])
                    } else {
                        0.0
                    };
                    e += w * p;
                }
                e.max(1e-10).ln()
            })
            .collect();
        (1..=22)
            .map(|k| {
                (2.0 / m as f64).sqrt()
                    * loge
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m as f64).cos())
                        .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn window_lengths() {
        assert_eq!(window_length(44100, 25.0).unwrap(), 1764);
        assert_eq!(window_length(48000, 25.0).unwrap(), 1920);
        assert_eq!(window_length(44100, 29.97).unwrap(), 1471);
        assert!(window_length(44100, 0.0).is_err());
    }

    #[test]
    fn zero_window_gives_zero_coefficients() {
        let f = mfcc_frame(&vec![0.0; 1764], 44100, &MfccConfig::default()).unwrap();
        assert_eq!(f.dim(), 22);
        assert!(f.values.iter().all(|c| c.abs() < 1e-9), "{:?}", f.values);
    }

    #[test]
    fn doubling_amplitude_keeps_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..1764).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = mfcc_frame(&x, 44100, &MfccConfig::default()).unwrap();
        let b = mfcc_frame(&x2, 44100, &MfccConfig::default()).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn sine_matches_reference() {
        let x = sine(1000.0, 44100, 1764);
        let got = mfcc_frame(&x, 44100, &MfccConfig::default()).unwrap().values;
        let want = reference_mfcc(&x, 44100);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-6 * w.abs().max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn short_window_rejected() {
        assert!(mfcc_frame(&[0.3], 44100, &MfccConfig::default()).is_err());
        let bad = MfccConfig {
            n_coeffs: 26,
            ..Default::default()
        };
        assert!(mfcc_frame(&[0.0; 64], 8000, &bad).is_err());
    }

    #[test]
    fn c0_tracks_level() {
        let cfg = MfccConfig {
            include_c0: true,
            ..Default::default()
        };
        let x = sine(440.0, 8000, 320);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = mfcc_frame(&x, 8000, &cfg).unwrap().values;
        let b = mfcc_frame(&x2, 8000, &cfg).unwrap().values;
        // ln(4) added to every log energy shifts c0 by sqrt(M)·ln 4
        assert!((b[0] - a[0] - 26f64.sqrt() * 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn track_window_counts() {
        let cfg = MfccConfig::default();
        let t = AudioTrack {
            sample_rate: 44100,
            samples: vec![0.0; 44100],
        };
        let v = mfcc_track(&t, 25.0, &cfg).unwrap();
        assert_eq!(v.len(), 25);
        assert!(v.iter().all(|f| f.values.iter().all(|c| c.abs() < 1e-9)));
        let t = AudioTrack {
            sample_rate: 44100,
            samples: vec![0.0; 44099],
        };
        assert_eq!(mfcc_track(&t, 25.0, &cfg).unwrap().len(), 24);
    }

    fn fv(values: Vec<f64>) -> FeatureVector {
        FeatureVector::new(FeatureChannel::Audio, values).unwrap()
    }

    fn seg(start: u64, end: u64) -> Segment {
        Segment {
            video_id: "v".into(),
            index: 0,
            start_frame: start,
            end_frame: end,
        }
    }

    #[test]
    fn pooling() {
        let v: Vec<f64> = (0..22).map(|i| i as f64 * 0.5 - 3.0).collect();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let same = vec![fv(v.clone()); 25];
        assert_eq!(segment_audio_feature(&same, &seg(0, 25)).unwrap().values, v);
        let mixed = vec![fv(v.clone()), fv(neg)];
        assert!(segment_audio_feature(&mixed, &seg(0, 2))
            .unwrap()
            .values
            .iter()
            .all(|x| *x == 0.0));
        assert!(segment_audio_feature(&same, &seg(25, 50)).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn pooling_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vecs: Vec<FeatureVector> = (0..60)
            .map(|_| fv((0..22).map(|_| rng.gen_range(-20.0..20.0)).collect()))
            .collect();
        let got = segment_audio_feature(&vecs, &seg(25, 50)).unwrap().values;
        for d in 0..22 {
            let mut acc = 0.0;
            for i in 25..50 {
                acc += vecs[i].values[d];
            }
            assert!((got[d] - acc / 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn filterbank_shape() {
        let fb = mel_filterbank(26, 1764, 44100);
        assert_eq!(fb.len(), 26);
        assert!(fb.iter().all(|row| row.iter().sum::<f64>() > 0.0));
        let peaks: Vec<usize> = fb
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0
            })
            .collect();
        assert!(peaks.windows(2).all(|w| w[0] < w[1]), "{peaks:?}");
    }

    #[test]
    fn wav_roundtrip_and_stereo_downmix() {
        let dir = tempfile::tempdir().unwrap();
        let mono = dir.path().join("m.wav");
        let t = AudioTrack {
            sample_rate: 8000,
            samples: vec![0.0, 0.5, -0.5, 0.25],
        };
        write_wav_i16(&mono, &t).unwrap();
        let back = read_wav(&mono).unwrap();
        assert_eq!(back.sample_rate, 8000);
        for (a, b) in back.samples.iter().zip(&t.samples) {
            assert!((a - b).abs() < 1e-4);
        }

        let stereo = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        for s in [0.5f32, -0.5, 1.0, 0.0] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read_wav(&stereo).unwrap().samples, vec![0.0, 0.5]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn dct_roundtrip(x in proptest::collection::vec(-30.0f64..30.0, 1..40)) {
            let back = dct3_orthonormal(&dct2_orthonormal(&x));
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn amplitude_invariance(seed in 0u64..10_000, alpha in 0.05f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..320).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let y: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let m = Mfcc::new(320, 8000, MfccConfig::default()).unwrap();
            let a = m.coefficients(&x).unwrap();
            let b = m.coefficients(&y).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
