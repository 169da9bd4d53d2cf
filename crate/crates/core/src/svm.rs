//! Binary soft-margin SVM.
//!
//! The dual problem
//!
//! ```text
//! min  ½ αᵀQα − eᵀα    s.t.  0 ≤ αᵢ ≤ C,  yᵀα = 0,   Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)
//! ```
//!
//! is solved by sequential minimal optimization with second-order working
//! set selection. Decision values are mapped to probabilities with a Platt
//! sigmoid fitted on held-out data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::types::FeatureChannel;

pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    #[serde(rename = "chisquare")]
    ChiSquare { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } | KernelSpec::ChiSquare { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("kernel gamma must be positive, got {gamma}")))
                }
            }
        }
    }

    pub fn requires_non_negative(&self) -> bool {
        matches!(self, KernelSpec::ChiSquare { .. })
    }

    /// Kernel value without argument checks.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d).exp()
            }
            KernelSpec::ChiSquare { gamma } => {
                let d: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let s = a + b;
                        if s > 0.0 {
                            (a - b) * (a - b) / s
                        } else {
                            0.0
                        }
                    })
                    .sum();
                (-gamma * d).exp()
            }
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
            KernelSpec::ChiSquare { gamma } => write!(f, "chisquare(gamma={gamma})"),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "kernel arguments differ in dimension: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if spec.requires_non_negative() && x.iter().chain(y).any(|v| *v < 0.0) {
        return Err(Error::invalid("chi-square kernel needs non-negative inputs"));
    }
    Ok(spec.eval_unchecked(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    /// Stop when the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
    /// Recorded for provenance; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 1000,
            seed: 0,
        }
    }
}

/// A labeled training sample; `label` is `true` for the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: bool,
}

/// Kernel expansion `f(x) = Σ coefᵢ K(svᵢ, x) + bias` with `coefᵢ = αᵢyᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(Error::invalid(format!(
                    "classifier expects dimension {d}, got {}",
                    x.len()
                )));
            }
        }
        if self.kernel.requires_non_negative() && x.iter().any(|v| *v < 0.0) {
            return Err(Error::invalid("chi-square kernel needs non-negative inputs"));
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, a)| a * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias)
    }
}

/// Solver output, including the raw dual solution.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub alphas: Vec<f64>,
    /// Dual objective `eᵀα − ½ αᵀQα` at the solution.
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_training_set(data: &[Sample], kernel: &KernelSpec, config: &TrainConfig) -> Result<usize> {
    kernel.validate()?;
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::invalid(format!("C must be positive, got {}", config.c)));
    }
    let Some(first) = data.first() else {
        return Err(Error::DegenerateData("empty training set".into()));
    };
    let dim = first.x.len();
    if data.iter().any(|s| s.x.len() != dim) {
        return Err(Error::invalid("training vectors differ in dimension"));
    }
    if data.iter().any(|s| s.x.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("training vectors contain non-finite values"));
    }
    if kernel.requires_non_negative() && data.iter().any(|s| s.x.iter().any(|v| *v < 0.0)) {
        return Err(Error::invalid("chi-square kernel needs non-negative inputs"));
    }
    let pos = data.iter().filter(|s| s.label).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::DegenerateData(
            "training set holds a single class".into(),
        ));
    }
    Ok(dim)
}

/// Solve the soft-margin dual.
pub fn train_detailed(data: &[Sample], kernel: KernelSpec, config: &TrainConfig) -> Result<TrainOutcome> {
    check_training_set(data, &kernel, config)?;
    let n = data.len();
    let c = config.c;
    let y: Vec<f64> = data.iter().map(|s| if s.label { 1.0 } else { -1.0 }).collect();

    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = y[i] * y[j] * kernel.eval_unchecked(&data[i].x, &data[j].x);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = config.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    while iterations < max_iter {
        // first index: maximal violation from the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax - v;
            if b > 0.0 {
                let mut a = q[i_sel * n + i_sel] + q[t * n + t] - 2.0 * y[i_sel] * y[t] * q[i_sel * n + t];
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = t;
                }
            }
        }
        if gmax - gmin < config.tolerance || i_sel == usize::MAX || j_sel == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qii = q[i * n + i];
        let qjj = q[j * n + j];
        let qij = q[i * n + j];
        if y[i] != y[j] {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance");
    }

    // bias from free multipliers, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let dual_objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>();
    let (support_vectors, coefficients) = alpha
        .iter()
        .zip(data)
        .zip(&y)
        .filter(|((a, _), _)| **a > 0.0)
        .map(|((a, s), yi)| (s.x.clone(), a * yi))
        .unzip();

    Ok(TrainOutcome {
        model: SvmModel {
            kernel,
            c,
            support_vectors,
            coefficients,
            bias: -rho,
        },
        alphas: alpha,
        dual_objective,
        iterations,
        converged,
    })
}

pub fn train(data: &[Sample], kernel: KernelSpec, config: &TrainConfig) -> Result<SvmModel> {
    train_detailed(data, kernel, config).map(|o| o.model)
}

/// Sigmoid `P(y=1|f) = 1 / (1 + exp(a·f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

const PROB_EPS: f64 = 1e-15;

impl PlattParams {
    pub fn probability(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        let p = if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        };
        p.clamp(PROB_EPS, 1.0 - PROB_EPS)
    }
}

/// Regularized maximum-likelihood sigmoid fit with Newton steps and
/// backtracking. Targets are smoothed to `(N₊+1)/(N₊+2)` and `1/(N₋+2)`.
pub fn platt_fit(decision_values: &[f64], labels: &[bool]) -> Result<PlattParams> {
    if decision_values.len() != labels.len() {
        return Err(Error::invalid("decision values and labels differ in length"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateFit("calibration needs both labels".into()));
    }
    if decision_values.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("non-finite decision value"));
    }
    let first = decision_values[0];
    if decision_values.iter().all(|&f| f == first) {
        return Err(Error::DegenerateFit("all decision values are identical".into()));
    }

    let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let lo = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        decision_values
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = f * a + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
    let mut fval = objective(a, b);
    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &t) in decision_values.iter().zip(&targets) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(PlattParams { a, b })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    None,
    /// Per-dimension min-max to `[0, 1]` fitted on the training set; values
    /// outside the training range are clamped.
    #[default]
    MinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut iter = rows.into_iter();
        let first = iter.next().ok_or_else(|| Error::invalid("cannot fit a scaler on no rows"))?;
        let (mut min, mut max) = (first.to_vec(), first.to_vec());
        for row in iter {
            if row.len() != min.len() {
                return Err(Error::invalid("rows differ in dimension"));
            }
            for ((lo, hi), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
        Ok(FeatureScaler { min, max })
    }

    /// Constant dimensions map to 0.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.min.len() {
            return Err(Error::invalid(format!(
                "scaler expects dimension {}, got {}",
                self.min.len(),
                x.len()
            )));
        }
        Ok(x
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 })
            .collect())
    }
}

/// Calibrated per-channel classifier, the unit persisted to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format_version: u32,
    pub channel: FeatureChannel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<FeatureScaler>,
    #[serde(flatten)]
    pub model: SvmModel,
    pub platt: PlattParams,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl TrainedClassifier {
    /// Decision value of a raw (unscaled) feature vector.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        match &self.scaler {
            Some(s) => self.model.decision_value(&s.transform(x)?),
            None => self.model.decision_value(x),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.platt.probability(self.decision_value(x)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let clf: TrainedClassifier = serde_json::from_str(&text)?;
        if clf.format_version != CLASSIFIER_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported classifier format {}",
                path.display(),
                clf.format_version
            )));
        }
        if clf.model.support_vectors.len() != clf.model.coefficients.len() {
            return Err(Error::Format(format!(
                "{}: support vector and coefficient counts differ",
                path.display()
            )));
        }
        clf.model.kernel.validate()?;
        Ok(clf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub kernel: KernelSpec,
    pub c: f64,
}

/// Default search grid for a channel with `dim` features. Chi-square cells
/// are left out for the audio channel, whose MFCCs can be negative.
pub fn default_grid(channel: FeatureChannel, dim: usize) -> Vec<GridCell> {
    let gammas = [1.0 / dim.max(1) as f64, 0.1, 1.0];
    let mut grid = Vec::new();
    for c in [0.1, 1.0, 10.0, 100.0] {
        grid.push(GridCell {
            kernel: KernelSpec::Linear,
            c,
        });
        for &gamma in &gammas {
            grid.push(GridCell {
                kernel: KernelSpec::Rbf { gamma },
                c,
            });
        }
        if channel != FeatureChannel::Audio {
            for &gamma in &gammas {
                grid.push(GridCell {
                    kernel: KernelSpec::ChiSquare { gamma },
                    c,
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub kernel: KernelSpec,
    pub c: f64,
    pub validation_eer: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub channel: FeatureChannel,
    pub cells: Vec<CellReport>,
    pub best: usize,
}

struct CellResult {
    classifier: TrainedClassifier,
    eer: f64,
}

fn run_cell(
    channel: FeatureChannel,
    cell: &GridCell,
    train_set: &[Sample],
    validation: &[Sample],
    scaler: &Option<FeatureScaler>,
    base: &TrainConfig,
) -> Result<CellResult> {
    let config = TrainConfig { c: cell.c, ..*base };
    let model = train(train_set, cell.kernel, &config)?;
    let mut classifier = TrainedClassifier {
        format_version: CLASSIFIER_FORMAT_VERSION,
        channel,
        scaler: scaler.clone(),
        model,
        platt: PlattParams { a: -1.0, b: 0.0 },
        seed: base.seed,
        config_hash: None,
    };
    let values = validation
        .iter()
        .map(|s| classifier.decision_value(&s.x))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<bool> = validation.iter().map(|s| s.label).collect();
    let eer = eval::roc(&values, &labels)?.eer;
    classifier.platt = platt_fit(&values, &labels)?;
    Ok(CellResult { classifier, eer })
}

/// Train every grid cell and keep the one with the lowest validation EER,
/// earliest cell on ties. The winner is calibrated on the validation
/// decision values. `validation` holds raw features.
pub fn kernel_grid_search(
    channel: FeatureChannel,
    train_set: &[Sample],
    validation: &[Sample],
    grid: &[GridCell],
    scaling: Scaling,
    base: &TrainConfig,
) -> Result<(TrainedClassifier, GridReport)> {
    if grid.is_empty() {
        return Err(Error::invalid("empty kernel grid"));
    }
    if validation.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    let scaler = match scaling {
        Scaling::MinMax if !train_set.is_empty() => {
            Some(FeatureScaler::fit(train_set.iter().map(|s| s.x.as_slice()))?)
        }
        _ => None,
    };
    let scaled;
    let train_set = match &scaler {
        Some(sc) => {
            scaled = train_set
                .iter()
                .map(|s| Ok(Sample { x: sc.transform(&s.x)?, label: s.label }))
                .collect::<Result<Vec<_>>>()?;
            &scaled[..]
        }
        None => train_set,
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<CellResult>> = {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|cell| run_cell(channel, cell, train_set, validation, &scaler, base))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<CellResult>> = grid
        .iter()
        .map(|cell| run_cell(channel, cell, train_set, validation, &scaler, base))
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut cells = Vec::with_capacity(grid.len());
    for (idx, (cell, res)) in grid.iter().zip(&results).enumerate() {
        match res {
            Ok(r) => {
                if best.is_none_or(|(_, e)| r.eer < e) {
                    best = Some((idx, r.eer));
                }
                cells.push(CellReport {
                    kernel: cell.kernel,
                    c: cell.c,
                    validation_eer: Some(r.eer),
                    error: None,
                });
            }
            Err(e) => cells.push(CellReport {
                kernel: cell.kernel,
                c: cell.c,
                validation_eer: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let Some((best_idx, _)) = best else {
        // every cell failed: surface the first failure
        let first = results.into_iter().find_map(|r| r.err());
        return Err(match first {
            Some(Error::DegenerateData(m)) => Error::DegenerateData(m),
            Some(e) => Error::DegenerateData(format!("every grid cell failed, first: {e}")),
            None => unreachable!("no successes implies a failure"),
        });
    };
    let winner = results
        .into_iter()
        .nth(best_idx)
        .expect("index in range")
        .expect("best cell succeeded");
    Ok((
        winner.classifier,
        GridReport {
            channel,
            cells,
            best: best_idx,
        },
    ))
}
