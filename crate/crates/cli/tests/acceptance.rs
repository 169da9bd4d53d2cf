//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! wall-clock time and exits nonzero when any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::oracles;
use common::synth::{generate, SynthSpec, PLANTED};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vsd_core::audio::{window_length, Mfcc, MfccConfig};
use vsd_core::blood::{
    blood_probability, blood_probability_from, build_model, compute_bpm, label_components, Mask, Rgb,
    RgbImage,
};
use vsd_core::eval;
use vsd_core::fusion::{enumerate_weight_grid, fuse, weight_search, ChannelScores, WeightTuple};
use vsd_core::svm::{kernel_eval, train_detailed, KernelSpec, Sample, TrainConfig};
use vsd_core::types::{binary_decision, multiclass_label, PerClass, SegmentLabel, ViolenceClass};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mfcc_window() -> Outcome {
    let n = window_length(44100, 25.0).map_err(|e| e.to_string())?;
    ensure(n == 1764, || format!("window_length(44100, 25) = {n}"))?;
    Ok("1764 samples".into())
}

fn mfcc_amplitude_invariance() -> Outcome {
    let mfcc = Mfcc::new(1764, 44100, MfccConfig::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for w in 0..100 {
        let window: Vec<f64> = (0..1764).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let base = mfcc.coefficients(&window).map_err(|e| e.to_string())?;
        ensure(base.len() == 22, || format!("{} coefficients", base.len()))?;
        for alpha in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = window.iter().map(|s| s * alpha).collect();
            let got = mfcc.coefficients(&scaled).map_err(|e| e.to_string())?;
            for (k, (a, b)) in base.iter().zip(&got).enumerate() {
                let d = (a - b).abs();
                worst = worst.max(d);
                ensure(d <= 1e-9, || format!("window {w} alpha {alpha} c{}: {a} vs {b}", k + 1))?;
            }
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn blood_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..10_000 {
        let (pb, pn) = match i % 10 {
            0 => (0.0, 0.0),
            1 => (0.0, rng.gen_range(0.0..1.0)),
            2 => (rng.gen_range(0.0..1.0), 0.0),
            _ => (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
        };
        let want = if pb + pn > 0.0 { pb / (pb + pn) } else { 0.0 };
        let got = blood_probability_from(pb, pn);
        ensure(got == want, || format!("P({pb}, {pn}) = {got}, expected {want}"))?;
    }
    // the per-pixel form reads both model probabilities
    let pixels = |n: usize, rng: &mut ChaCha8Rng| -> Vec<[u8; 3]> { (0..n).map(|_| rng.gen()).collect() };
    let blood = build_model(pixels(5000, &mut rng));
    let nonblood = build_model(pixels(5000, &mut rng));
    for _ in 0..1000 {
        let px: [u8; 3] = rng.gen();
        let (pb, pn) = (blood.prob(px), nonblood.prob(px));
        let want = if pb + pn > 0.0 { pb / (pb + pn) } else { 0.0 };
        ensure(blood_probability(px, &blood, &nonblood) == want, || format!("pixel {px:?}"))?;
    }

    let red = [200u8, 10, 10];
    let grey = [90u8, 90, 90];
    let blood = build_model(std::iter::repeat_n(red, 100));
    let nonblood = build_model(std::iter::repeat_n(grey, 100));
    let image = RgbImage::from_fn(64, 64, |x, y| Rgb(if (x / 8 + y / 8) % 2 == 0 { red } else { grey }));
    let bpm = compute_bpm(&image, &blood, &nonblood).map_err(|e| e.to_string())?;
    for (i, &p) in bpm.p.iter().enumerate() {
        let (x, y) = ((i % 64) as u32, (i / 64) as u32);
        let want = if image.get_pixel(x, y).0 == red { 1.0 } else { 0.0 };
        ensure(p == want, || format!("pixel ({x},{y}) has probability {p}"))?;
    }
    Ok("10000 pairs exact, BPM binary".into())
}

fn connected_components() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0;
    for m in 0..200 {
        let density = [0.1, 0.3, 0.5, 0.59, 0.7, 0.9][m % 6];
        let bits: Vec<bool> = (0..64 * 64).map(|_| rng.gen_bool(density)).collect();
        let got = label_components(&Mask::new(64, 64, bits.clone()).map_err(|e| e.to_string())?);
        let (want, count) = oracles::flood_fill_labels(64, 64, &bits);
        ensure(got.count == count && got.labels == want, || format!("mask {m} differs"))?;
        total += count;
    }
    Ok(format!("200 masks, {total} components"))
}

fn svm_dual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for p in 0..20 {
        let data: Vec<Sample> = (0..40)
            .map(|i| {
                let label = i % 2 == 0;
                let shift = if label { 0.6 } else { -0.6 };
                Sample {
                    x: vec![shift + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    label,
                }
            })
            .collect();
        let kernel = match p % 3 {
            0 => KernelSpec::Linear,
            1 => KernelSpec::Rbf { gamma: 0.5 },
            _ => KernelSpec::Rbf { gamma: 2.0 },
        };
        let config = TrainConfig {
            c: [0.5, 2.0, 10.0][p % 3],
            ..TrainConfig::default()
        };
        let out = train_detailed(&data, kernel, &config).map_err(|e| e.to_string())?;
        let y: Vec<f64> = data.iter().map(|s| if s.label { 1.0 } else { -1.0 }).collect();
        let q: Vec<Vec<f64>> = data
            .iter()
            .enumerate()
            .map(|(i, a)| {
                data.iter()
                    .enumerate()
                    .map(|(j, b)| y[i] * y[j] * kernel_eval(&kernel, &a.x, &b.x).unwrap())
                    .collect()
            })
            .collect();
        let (best, _) = oracles::qp_dual_optimum(&q, &y, config.c, 20_000);
        let gap = (out.dual_objective - best).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-4, || format!("problem {p}: smo {} oracle {best}", out.dual_objective))?;

        // box and equality constraints
        let balance: f64 = out.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        ensure(balance.abs() <= 1e-9, || format!("problem {p}: sum alpha*y = {balance}"))?;
        ensure(out.alphas.iter().all(|&a| (0.0..=config.c).contains(&a)), || {
            format!("problem {p}: alpha outside [0, C]")
        })?;
        // complementary slackness, to the solver tolerance
        let tol = config.tolerance;
        for (i, s) in data.iter().enumerate() {
            let margin = y[i] * out.model.decision_value(&s.x).map_err(|e| e.to_string())?;
            let a = out.alphas[i];
            let ok = if a <= 0.0 {
                margin >= 1.0 - tol
            } else if a >= config.c {
                margin <= 1.0 + tol
            } else {
                (margin - 1.0).abs() <= tol
            };
            ensure(ok, || format!("problem {p}: KKT violated at {i}, alpha {a} margin {margin}"))?;
        }
    }
    Ok(format!("max dual gap {worst:.2e}"))
}

fn roc_eer_ap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in 0..100 {
        let n = rng.gen_range(2..=200);
        let prevalence = rng.gen_range(0.1..0.9);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(prevalence)).collect();
        labels[0] = true;
        labels[1] = false;
        let levels = rng.gen_range(2..50);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / (levels - 1) as f64).collect();
        let curve = eval::roc(&scores, &labels).map_err(|e| e.to_string())?;
        let sweep = oracles::sweep_roc(&scores, &labels);
        let got: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        ensure(got.len() == sweep.len(), || format!("fixture {f}: vertex count"))?;
        for (a, b) in got.iter().zip(&sweep) {
            ensure((a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12, || {
                format!("fixture {f}: vertex {a:?} vs {b:?}")
            })?;
        }
        let auc = oracles::mann_whitney(&scores, &labels);
        ensure((curve.auc - auc).abs() <= 1e-12, || format!("fixture {f}: auc {} vs {auc}", curve.auc))?;
        let eer = oracles::sweep_eer(&sweep);
        ensure((curve.eer - eer).abs() <= 1e-12, || format!("fixture {f}: eer {} vs {eer}", curve.eer))?;
        for cutoff in [None, Some(rng.gen_range(1..=n))] {
            let ap = eval::average_precision(&scores, &labels, cutoff).map_err(|e| e.to_string())?;
            let want = oracles::rank_walk_ap(&scores, &labels, cutoff);
            ensure((ap - want).abs() <= 1e-12, || format!("fixture {f}: ap@{cutoff:?} {ap} vs {want}"))?;
        }
        let m = eval::threshold_metrics(&scores, &labels, 0.5).map_err(|e| e.to_string())?;
        let (tp, fp, tn, fneg) = oracles::confusion(&scores, &labels, 0.5);
        ensure((m.accuracy - (tp + tn) as f64 / n as f64).abs() <= 1e-12, || format!("fixture {f}: accuracy"))?;
        ensure((m.recall - tp as f64 / (tp + fneg) as f64).abs() <= 1e-12, || format!("fixture {f}: recall"))?;
        if tp + fp > 0 {
            ensure((m.precision - tp as f64 / (tp + fp) as f64).abs() <= 1e-12, || {
                format!("fixture {f}: precision")
            })?;
        }
    }

    let scores: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
    let mut labels: Vec<bool> = (0..2000).map(|i| i < 1000).collect();
    labels.shuffle(&mut rng);
    let eer = eval::roc(&scores, &labels).map_err(|e| e.to_string())?.eer;
    ensure((0.45..=0.55).contains(&eer), || format!("shuffled EER {eer}"))?;
    Ok(format!("100 fixtures, shuffled EER {eer:.4}"))
}

fn weight_grid() -> Outcome {
    let grid = enumerate_weight_grid(0.05).map_err(|e| e.to_string())?;
    ensure(grid.len() == 1771, || format!("{} tuples", grid.len()))?;
    for t in &grid {
        let sum: f64 = t.weights().iter().sum();
        ensure((sum - 1.0).abs() <= 1e-12, || format!("{t:?} sums to {sum}"))?;
    }
    Ok("1771 tuples".into())
}

const REPORTED_WEIGHTS: [(&str, [f64; 4]); 8] = [
    ("GunShots", [0.50, 0.45, 0.00, 0.05]),
    ("Fights", [0.40, 0.05, 0.25, 0.30]),
    ("Explosions", [0.90, 0.00, 0.00, 0.10]),
    ("Fire", [0.05, 0.05, 0.05, 0.85]),
    ("Cold arms", [0.05, 0.00, 0.00, 0.95]),
    ("Firearms", [0.05, 0.30, 0.05, 0.60]),
    ("Blood", [0.00, 0.05, 0.00, 0.95]),
    ("Screams", [0.05, 0.20, 0.00, 0.75]),
];

fn fusion_fixture() -> Outcome {
    let gunshots = WeightTuple::from_weights(REPORTED_WEIGHTS[0].1, 0.05).map_err(|e| e.to_string())?;
    let fused = fuse(&ChannelScores::complete([0.8, 0.6, 0.2, 0.4]), &gunshots).map_err(|e| e.to_string())?;
    ensure(fused == 0.69, || format!("fused score {fused}"))?;
    for (name, w) in REPORTED_WEIGHTS {
        let t = WeightTuple::from_weights(w, 0.05).map_err(|e| format!("{name}: {e}"))?;
        let sum: f64 = t.weights().iter().sum();
        ensure((sum - 1.0).abs() <= 1e-12 && t.weights().iter().all(|&x| x >= 0.0), || {
            format!("{name} leaves the simplex")
        })?;
    }
    Ok("0.69 exact, 8 rows on the simplex".into())
}

fn fusion_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut margin = f64::INFINITY;
    for f in 0..50 {
        let n = rng.gen_range(40..120);
        // each class leans on a random channel strength profile
        let strength: PerClass<[f64; 4]> =
            PerClass::from_fn(|_| [0; 4].map(|_| rng.gen_range(0.0..0.6)));
        let truth: Vec<PerClass<bool>> = (0..n)
            .map(|i| {
                let class = ViolenceClass::ALL[rng.gen_range(0..8)];
                PerClass::from_fn(|c| i % 2 == 0 && c == class)
            })
            .collect();
        let scores: Vec<ChannelScores> = truth
            .iter()
            .map(|t| {
                let class = t.iter().find(|(_, &v)| v).map(|(c, _)| c);
                ChannelScores::complete(std::array::from_fn(|k| {
                    let lift = class.map_or(0.0, |c| strength[c][k]);
                    (rng.gen_range(0.0..0.7) + lift).min(1.0)
                }))
            })
            .collect();
        let outcome = weight_search(&scores, &truth, 0.05).map_err(|e| e.to_string())?;
        for report in &outcome.reports {
            let Some(eer) = report.eer else { continue };
            let labels: Vec<bool> = truth.iter().map(|t| t[report.class]).collect();
            for k in 0..4 {
                let single: Vec<f64> = scores.iter().map(|s| s.0[k].unwrap()).collect();
                let single_eer = eval::roc(&single, &labels).map_err(|e| e.to_string())?.eer;
                margin = margin.min(single_eer - eer);
                ensure(eer <= single_eer, || {
                    format!("fixture {f} {}: fused {eer} above channel {k} {single_eer}", report.class)
                })?;
            }
        }
    }
    Ok(format!("50 fixtures, min margin {margin:.4}"))
}

fn read_outputs(run: &common::PipelineRun) -> Vec<(String, Vec<u8>)> {
    let mut files = vec![
        run.blood_model.clone(),
        run.nonblood_model.clone(),
        run.features.clone(),
        run.weights.clone(),
        run.predictions.clone(),
    ];
    for dir in [run.classifiers.clone(), run.dir.join("eval_multiclass"), run.dir.join("eval_binary")] {
        let mut entries: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        files.extend(entries);
    }
    files
        .into_iter()
        .map(|p| {
            let name = p.strip_prefix(&run.dir).unwrap().display().to_string();
            (name, std::fs::read(&p).unwrap())
        })
        .collect()
}

fn end_to_end(root: &Path) -> Outcome {
    let spec = SynthSpec::default();
    let mut runs = Vec::new();
    for tag in ["a", "b"] {
        // the corpus itself is regenerated from the seed for each run
        let corpus = generate(&root.join(format!("corpus_{tag}")), &spec);
        runs.push(common::run_pipeline(&corpus, &root.join(format!("run_{tag}"))));
    }
    let run = &runs[0];
    let classes = run.multiclass.classes.as_ref().ok_or("no multiclass metrics")?;
    let mut detail = Vec::new();
    for (class, _) in PLANTED {
        let m = classes[class].as_ref().ok_or_else(|| format!("{class} not evaluated"))?;
        ensure(m.eer <= 0.15, || format!("{class} EER {:.4}", m.eer))?;
        detail.push(format!("{class} {:.3}", m.eer));
    }
    let binary = run.binary.binary.as_ref().ok_or("no binary metrics")?;
    ensure(binary.eer <= 0.10, || format!("binary EER {:.4}", binary.eer))?;
    let (a, b) = (read_outputs(&runs[0]), read_outputs(&runs[1]));
    ensure(a.len() == b.len(), || "output file sets differ".into())?;
    for ((na, da), (nb, db)) in a.iter().zip(&b) {
        ensure(na == nb && da == db, || format!("{na} differs between runs"))?;
    }
    Ok(format!("{}, binary {:.3}, {} files identical", detail.join(", "), binary.eer, a.len()))
}

fn decision_boundary() -> Outcome {
    let mut scores = PerClass::from_fn(|_| 0.1);
    scores[ViolenceClass::Fights] = 0.5;
    let label = multiclass_label(&scores);
    ensure(label == SegmentLabel::Violent(ViolenceClass::Fights), || format!("label {label:?}"))?;
    ensure(!binary_decision(&scores), || "binary true at 0.5".into())?;
    scores[ViolenceClass::Fights] = 0.5f64.next_down();
    ensure(multiclass_label(&scores) == SegmentLabel::NonViolent, || "label below 0.5".into())?;
    scores[ViolenceClass::Fights] = 0.5f64.next_up();
    ensure(binary_decision(&scores), || "binary false above 0.5".into())?;
    Ok("0.5 labelled, binary false".into())
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path().to_path_buf();
    let ms = Duration::from_millis;
    let criteria: Vec<Criterion> = vec![
        ("mfcc window arithmetic", ms(1), Box::new(mfcc_window)),
        ("mfcc amplitude invariance", ms(1000), Box::new(mfcc_amplitude_invariance)),
        ("blood formula suite", ms(1000), Box::new(blood_formula)),
        ("connected components equivalence", ms(5000), Box::new(connected_components)),
        ("svm dual correctness", ms(30_000), Box::new(svm_dual)),
        ("roc/eer/ap oracle equivalence", ms(10_000), Box::new(roc_eer_ap)),
        ("weight grid cardinality", ms(1000), Box::new(weight_grid)),
        ("fusion fixture with reported weights", ms(1), Box::new(fusion_fixture)),
        ("fusion dominance", ms(30_000), Box::new(fusion_dominance)),
        ("end-to-end synthetic pipeline", ms(300_000), Box::new(move || end_to_end(&root))),
        ("decision-rule boundary", ms(1), Box::new(decision_boundary)),
    ];
    let mut failures = 0;
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= *budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {budget:?} budget"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
