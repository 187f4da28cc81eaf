//! Proper agnostic ReLU regression.
//!
//! Regression at degree `⌈1/ε^{4/3}⌉`, the influence subspace at `η = ε²/C`,
//! then an exhaustive search over `cover × scales × biases` for the smallest
//! holdout squared loss. Hypotheses are `a·ρ(v·x + t)` with `ρ(z) = max(0, z)`,
//! `‖v‖ = 1` and `0 < a ≤ 1`; the bias `t` is in unit-normal units, so a
//! ReLU `ρ(w·x + T)` with `‖w‖ = a` is `a·ρ(v·x + T/a)`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{recommended_holdout, unit_ball_cover, DEFAULT_ENUMERATION_CAP};
use crate::hermite::{eval_hermite_1d, DEFAULT_FEATURE_CAP};
use crate::influence::{influence_matrix, Subspace};
use crate::linalg::{dot, norm};
use crate::proper::{fit_subspace, PipelineParams, REGRESSION_SHARE};
use crate::report::{GridStats, ParameterRecord, RunReport, Stopwatch};
use crate::sample::{LabelMode, SampleBatch};
use crate::{Error, Result};

#[inline]
pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluHypothesis {
    pub v: Vec<f64>,
    pub a: f64,
    pub t: f64,
}

impl ReluHypothesis {
    pub fn new(v: Vec<f64>, a: f64, t: f64) -> Result<Self> {
        if (norm(&v) - 1.0).abs() > 1e-10 {
            return Err(Error::Usage(format!("direction must be a unit vector, norm is {}", norm(&v))));
        }
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Usage(format!("scale must lie in (0, 1], got {a}")));
        }
        if !t.is_finite() {
            return Err(Error::Usage("bias must be finite".into()));
        }
        Ok(Self { v, a, t })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.a * relu(dot(&self.v, x) + self.t)
    }

    /// Mean squared error on `batch`.
    pub fn mse(&self, batch: &SampleBatch) -> Result<f64> {
        if batch.dim() != self.v.len() {
            return Err(Error::Usage(format!(
                "hypothesis has dimension {}, samples have {}",
                self.v.len(),
                batch.dim()
            )));
        }
        if batch.is_empty() {
            return Err(Error::Usage("empty batch".into()));
        }
        let s: f64 = batch
            .points
            .rows()
            .zip(&batch.labels)
            .map(|(x, y)| (y - self.predict(x)).powi(2))
            .sum();
        Ok(s / batch.len() as f64)
    }
}

/// Scale grid `{ε/A, 2ε/A, …, 1}` and bias grid with step `ε²/√ln(1/ε)`
/// over `[−√ln(1/ε), upper]`, both ascending; the bias grid contains 0.
pub fn relu_grids(eps: f64, scale_divisor: f64, bias_upper: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::config("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(scale_divisor >= 1.0 && scale_divisor.is_finite()) {
        return Err(Error::config("scale_divisor", "must be ≥ 1"));
    }
    if !(bias_upper >= 0.0 && bias_upper.is_finite()) {
        return Err(Error::config("bias_upper", "must be finite and ≥ 0"));
    }
    let step = eps / scale_divisor;
    let n_scales = (1.0 / step - 1e-9).ceil() as usize;
    let scales = (1..=n_scales).map(|j| (j as f64 * step).min(1.0)).collect();
    let s = eps * eps / (1.0 / eps).ln().sqrt();
    let lo = ((1.0 / eps).ln().sqrt() / s + 1e-9).floor() as i64;
    let hi = (bias_upper / s + 1e-9).floor() as i64;
    let biases = (-lo..=hi).map(|j| j as f64 * s).collect();
    Ok((scales, biases))
}

fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

const RELU_PANELS: usize = 96;
const RELU_PANEL_NODES: usize = 24;
const RELU_UPPER: f64 = 24.0;

/// Coefficient of the normalized Hermite polynomial `H_n` in the expansion
/// of `ρ` under `N(0, 1)`: `∫₀^∞ x H_n(x) φ(x) dx` by composite Gauss–Legendre.
pub fn relu_hermite_1d(n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(RELU_PANEL_NODES);
    let h = RELU_UPPER / RELU_PANELS as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for p in 0..RELU_PANELS {
        let mid = (p as f64 + 0.5) * h;
        for (u, w) in nodes.iter().zip(&weights) {
            let x = mid + 0.5 * h * u;
            total += 0.5 * h * w * x * eval_hermite_1d(n, x) * (-0.5 * x * x).exp() / norm;
        }
    }
    total
}

/// `Σ_{n>k} c_n²`, using `E[ρ(x)²] = 1/2`.
pub fn relu_tail(k: usize) -> f64 {
    0.5 - (0..=k).map(|n| relu_hermite_1d(n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReluLearnerConfig {
    pub eps: f64,
    pub delta: f64,
    pub degree_override: Option<usize>,
    pub eta_override: Option<f64>,
    pub degree_cap: usize,
    /// `η = ε²/eta_constant`.
    pub eta_constant: f64,
    /// Scale grid step is `ε/scale_divisor`.
    pub scale_divisor: f64,
    /// Largest bias in the grid.
    pub bias_upper: f64,
    pub n_regression: Option<usize>,
    pub n_holdout: Option<usize>,
    pub ridge: Option<f64>,
    pub feature_cap: usize,
    pub enumeration_cap: usize,
    pub seed: u64,
}

impl Default for ReluLearnerConfig {
    fn default() -> Self {
        Self {
            eps: 0.25,
            delta: 0.05,
            degree_override: None,
            eta_override: None,
            degree_cap: 4,
            eta_constant: 64.0,
            scale_divisor: 4.0,
            bias_upper: 2.0,
            n_regression: None,
            n_holdout: None,
            ridge: None,
            feature_cap: DEFAULT_FEATURE_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            seed: 0,
        }
    }
}

impl ReluLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::config("eps", format!("must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.eta_constant > 0.0 && self.eta_constant.is_finite()) {
            return Err(Error::config("eta_constant", "must be positive"));
        }
        if let Some(eta) = self.eta_override {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::config("eta", format!("must be positive, got {eta}")));
            }
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::config("ridge", "must be finite and ≥ 0"));
            }
        }
        if self.enumeration_cap == 0 || self.feature_cap == 0 {
            return Err(Error::config("enumeration_cap", "caps must be positive"));
        }
        relu_grids(self.eps, self.scale_divisor, self.bias_upper).map(|_| ())
    }

    /// `(⌈1/ε^{4/3}⌉, degree used)`.
    pub fn degree(&self) -> (f64, usize) {
        let theoretical = self.eps.powf(-4.0 / 3.0).ceil();
        let used = self
            .degree_override
            .unwrap_or_else(|| theoretical.min(self.degree_cap as f64) as usize);
        (theoretical, used)
    }

    pub fn eta(&self) -> (f64, f64) {
        let theoretical = self.eps * self.eps / self.eta_constant;
        (theoretical, self.eta_override.unwrap_or(theoretical))
    }

    fn split(&self, n: usize) -> Result<(usize, usize)> {
        let (r, h) = match (self.n_regression, self.n_holdout) {
            (None, None) => {
                let r = (n as f64 * REGRESSION_SHARE).floor() as usize;
                (r, n - r)
            }
            (Some(r), None) => (r, n.saturating_sub(r)),
            (None, Some(h)) => (n.saturating_sub(h), h),
            (Some(r), Some(h)) => (r, h),
        };
        if r == 0 || h == 0 || r + h > n {
            return Err(Error::Usage(format!(
                "cannot split {n} samples into {r} for regression and {h} for holdout"
            )));
        }
        Ok((r, h))
    }
}

/// Best candidate for one direction: (loss, bias index, scale index).
type DirectionBest = (f64, usize, usize);

/// Holdout losses of `a·ρ(v·x + t)` for every bias and scale, reduced to the
/// minimum. Suffix sums over the sorted projections make each bias O(log n).
fn best_for_direction(v: &[f64], hold: &SampleBatch, biases: &[f64], scales: &[f64]) -> DirectionBest {
    let n = hold.len();
    let mut zy: Vec<(f64, f64)> = hold
        .points
        .rows()
        .zip(&hold.labels)
        .map(|(x, &y)| (dot(v, x), y))
        .collect();
    zy.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    // suffix[i] = sums over zy[i..] of (1, z, z², y, yz)
    let mut suffix = vec![[0.0f64; 5]; n + 1];
    for i in (0..n).rev() {
        let (z, y) = zy[i];
        let s = suffix[i + 1];
        suffix[i] = [s[0] + 1.0, s[1] + z, s[2] + z * z, s[3] + y, s[4] + y * z];
    }
    let y2: f64 = hold.labels.iter().map(|y| y * y).sum();
    let mut best = (f64::INFINITY, 0, 0);
    for (bi, &t) in biases.iter().enumerate() {
        // active: z + t > 0
        let start = zy.partition_point(|&(z, _)| z + t <= 0.0);
        let [c, sz, szz, sy, syz] = suffix[start];
        let cross = syz + t * sy;
        let quad = szz + 2.0 * t * sz + t * t * c;
        for (si, &a) in scales.iter().enumerate() {
            let l = (y2 - 2.0 * a * cross + a * a * quad).max(0.0) / n as f64;
            if l < best.0 {
                best = (l, bi, si);
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct ReluSelection {
    pub hypothesis: ReluHypothesis,
    pub loss: f64,
    pub index: usize,
    pub grid_size: usize,
}

/// Exhaustive holdout selection over `directions × biases × scales`;
/// ties go to the earliest candidate in that order.
pub fn select_relu(
    directions: &[Vec<f64>],
    biases: &[f64],
    scales: &[f64],
    hold: &SampleBatch,
) -> Result<ReluSelection> {
    if directions.is_empty() || biases.is_empty() || scales.is_empty() {
        return Err(Error::Usage("empty ReLU grid".into()));
    }
    if hold.is_empty() {
        return Err(Error::Usage("empty holdout".into()));
    }
    if directions.iter().any(|v| v.len() != hold.dim()) {
        return Err(Error::Usage("grid and holdout differ in dimension".into()));
    }
    let per_dir: Vec<DirectionBest> = directions
        .par_iter()
        .map(|v| best_for_direction(v, hold, biases, scales))
        .collect();
    let (di, &(loss, bi, si)) = per_dir
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &DirectionBest)>, (i, b)| match acc {
            Some((_, a)) if a.0 <= b.0 => acc,
            _ => Some((i, b)),
        })
        .expect("non-empty");
    let nb = biases.len();
    let ns = scales.len();
    Ok(ReluSelection {
        hypothesis: ReluHypothesis::new(directions[di].clone(), scales[si], biases[bi])?,
        loss,
        index: (di * nb + bi) * ns + si,
        grid_size: directions.len() * nb * ns,
    })
}

#[derive(Debug, Clone)]
pub struct ReluOutcome {
    pub hypothesis: ReluHypothesis,
    pub report: RunReport,
    pub subspace: Subspace,
}

/// Learns a ReLU from `data`; the first split fits the polynomial, the rest
/// is the selection holdout. Report errors are mean squared errors.
pub fn learn_relu(config: &ReluLearnerConfig, data: &SampleBatch) -> Result<ReluOutcome> {
    config.validate()?;
    if data.mode != LabelMode::Relu {
        return Err(Error::Usage("ReLU regression needs real-valued labels".into()));
    }
    let mut sw = Stopwatch::start();
    let mut report = RunReport::new("learn-relu", serde_json::to_value(config)?);
    if data.labels.iter().any(|y| y.abs() > 1.0) {
        report.flag("labels_out_of_range");
    }
    let (n_reg, n_hold) = config.split(data.len())?;
    let reg = data.slice(0, n_reg);
    let hold = data.slice(n_reg, n_reg + n_hold);
    let (k_theory, degree) = config.degree();
    let (eta_theory, eta) = config.eta();
    if degree < k_theory as usize {
        report.flag("degree_truncated");
    }
    let params = PipelineParams {
        eps: config.eps,
        delta: config.delta,
        degree,
        eta,
        repeats: 1,
        validation_fraction: 0.0,
        ridge: config.ridge,
        feature_cap: config.feature_cap,
        enumeration_cap: config.enumeration_cap,
        brute_force: false,
    };
    let (mut subspace, poly) = fit_subspace(&reg, &params, &mut report, &mut sw)?;
    if subspace.dim() == 0 {
        // nothing clears η; search along the top eigenvector instead
        let eig = influence_matrix(&poly)?.eigen()?;
        subspace.basis = vec![eig.vectors[0].clone()];
        subspace.eigenvalues = vec![eig.values[0]];
    }
    let (scales, biases) = relu_grids(config.eps, config.scale_divisor, config.bias_upper)?;
    let cover = unit_ball_cover(subspace.dim(), config.eps, config.enumeration_cap)?;
    let total = cover.len() as f64 * biases.len() as f64 * scales.len() as f64;
    if total > config.enumeration_cap as f64 {
        return Err(Error::resource("ReLU grid", total, config.enumeration_cap as f64));
    }
    let directions = cover
        .iter()
        .map(|c| {
            let w = subspace.lift(c)?;
            let l = norm(&w);
            Ok(w.into_iter().map(|a| a / l).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let sel = select_relu(&directions, &biases, &scales, &hold)?;
    sw.lap(&mut report, "selection");
    let recommended = recommended_holdout(sel.grid_size, config.eps, config.delta);
    if hold.len() < recommended {
        report.flag("holdout_below_recommended");
    }
    report.grid = Some(GridStats {
        eps: config.eps,
        subspace_dim: subspace.dim(),
        directions: directions.len(),
        thresholds: biases.len(),
        size: sel.grid_size,
        holdout: hold.len(),
        recommended_holdout: recommended,
        selected_index: sel.index,
    });
    report.parameters = vec![
        ParameterRecord::plain("degree", k_theory, degree as f64),
        ParameterRecord::plain("eta", eta_theory, eta),
        ParameterRecord::plain("scales", scales.len() as f64, scales.len() as f64),
        ParameterRecord::plain("grid_size", sel.grid_size as f64, sel.grid_size as f64),
    ];
    report.errors.train = Some(sel.hypothesis.mse(&reg)?);
    report.errors.holdout = Some(sel.loss);
    report.hypothesis = Some(serde_json::to_value(&sel.hypothesis)?);
    Ok(ReluOutcome { hypothesis: sel.hypothesis, report, subspace })
}
