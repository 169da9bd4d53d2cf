//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::VecDeque;

/// Raster-order breadth-first flood fill, 4-connected. Returns labels
/// (0 = background) and the component count.
pub fn flood_fill_labels(width: usize, height: usize, bits: &[bool]) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; width * height];
    let mut next = 0u32;
    for start in 0..width * height {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % width, i / width);
            let mut visit = |j: usize| {
                if bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < width {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - width);
            }
            if y + 1 < height {
                visit(i + width);
            }
        }
    }
    (labels, next)
}

/// Euclidean projection onto `{0 <= a <= c, y·a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> {
        v.iter().zip(y).map(|(vi, yi)| (vi + lam * yi).clamp(0.0, c)).collect()
    };
    let g = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(&at(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Dual objective `Σa - ½ aᵀQa`.
pub fn dual_value(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * q[i][j] * a[j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the SVM dual by accelerated projected gradient with restarts.
/// `q` is the signed kernel matrix `yᵢyⱼK(xᵢ,xⱼ)`.
pub fn qp_dual_optimum(q: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> (f64, Vec<f64>) {
    let n = y.len();
    // Lipschitz constant of the gradient: largest eigenvalue by power iteration
    let mut v = vec![1.0; n];
    let mut lip = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lip = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (lip * 1.01 + 1e-12);

    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect()
    };
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut fx = dual_value(q, &x);
    for _ in 0..iterations {
        let g = grad(&z);
        let ascent: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + step * gi).collect();
        let nx = project(&ascent, y, c);
        let nf = dual_value(q, &nx);
        if nf < fx {
            // restart momentum when the objective drops
            z = x.clone();
            t = 1.0;
            continue;
        }
        let nt = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = nx.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / nt * (a - b)).collect();
        x = nx;
        fx = nf;
        t = nt;
    }
    (fx, x)
}

/// ROC vertices by counting at every distinct threshold, `score >= t`.
pub fn sweep_roc(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64)> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let p = labels.iter().filter(|&&l| l).count() as f64;
    let n = labels.len() as f64 - p;
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **l && **s >= t).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(s, l)| !**l && **s >= t).count() as f64;
        pts.push((fp / n, tp / p));
    }
    pts
}

/// Mann-Whitney statistic with ties counted as one half.
pub fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

/// First crossing of `fpr = 1 - tpr`, scanning every polyline segment.
pub fn sweep_eer(points: &[(f64, f64)]) -> f64 {
    for k in 0..points.len() {
        let (f1, t1) = points[k];
        let d1 = f1 + t1 - 1.0;
        if d1 == 0.0 {
            return f1;
        }
        if k > 0 {
            let (f0, t0) = points[k - 1];
            let d0 = f0 + t0 - 1.0;
            if d0 < 0.0 && d1 > 0.0 {
                return f0 + (f1 - f0) * d0 / (d0 - d1);
            }
        }
    }
    1.0
}

/// Average precision by walking a stable descending ranking.
pub fn rank_walk_ap(scores: &[f64], labels: &[bool], cutoff: Option<usize>) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // insertion sort keeps the input order of ties
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && scores[idx[j - 1]] < scores[idx[j]] {
            idx.swap(j - 1, j);
            j -= 1;
        }
    }
    let k = cutoff.unwrap_or(scores.len()).min(scores.len());
    let positives = labels.iter().filter(|&&l| l).count();
    let mut total = 0.0;
    for r in 0..k {
        if labels[idx[r]] {
            let hits = idx[..=r].iter().filter(|&&i| labels[i]).count();
            total += hits as f64 / (r + 1) as f64;
        }
    }
    total / positives.min(k) as f64
}

/// Confusion counts `(tp, fp, tn, fn)` with `score > threshold` positive.
pub fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, false) => c.2 += 1,
            (false, true) => c.3 += 1,
        }
    }
    c
}
