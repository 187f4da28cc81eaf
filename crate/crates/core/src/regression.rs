//! L2 regression of labels onto the degree-k Hermite feature space.
//!
//! Small problems are solved by Householder QR on the feature matrix. Once
//! the matrix would exceed [`DEFAULT_GRAM_THRESHOLD`] entries, features are
//! generated block by block and only the Gram matrix and right-hand side are
//! kept; the solve is then a Cholesky factorization of `ΦᵀΦ + λI`. The Gram
//! path squares the condition number of the feature matrix, which is harmless
//! for Hermite features of Gaussian inputs at moderate degree but worth
//! knowing before pushing `k` high.

use std::sync::Arc;

use serde::Serialize;

use crate::hermite::{HermitePoly, IndexSet};
use crate::linalg::{cholesky_solve, dot, least_squares_qr};
use crate::parallel::{map_blocks, ROW_BLOCK};
use crate::sample::{Points, SampleBatch};
use crate::{Error, Result};

/// Feature-matrix entries above which the Gram accumulation path is used.
pub const DEFAULT_GRAM_THRESHOLD: usize = 8_000_000;

/// Numerical-stabilizer ridge `1e-8 · n`.
pub fn default_ridge(n: usize) -> f64 {
    1e-8 * n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// QR below the Gram threshold, Gram accumulation above it.
    Auto,
    Qr,
    Gram,
}

#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub poly: HermitePoly,
    /// Empirical `E[(y − P(x))²]` on the training samples (ridge excluded).
    pub train_loss: f64,
    pub n_used: usize,
    /// Solver actually used.
    pub solver: Solver,
}

/// Fits `P` of degree ≤ `k` minimizing `Σ (yₘ − P(xₘ))² + ridge·‖c‖²`.
pub fn fit_l2(samples: &SampleBatch, k: usize, ridge: f64) -> Result<RegressionResult> {
    let basis = IndexSet::new(samples.dim(), k)?;
    fit_l2_with(samples, &basis, ridge, Solver::Auto)
}

pub fn fit_l2_with(
    samples: &SampleBatch,
    basis: &Arc<IndexSet>,
    ridge: f64,
    solver: Solver,
) -> Result<RegressionResult> {
    let n = samples.len();
    let p = basis.len();
    if samples.dim() != basis.dim() {
        return Err(Error::Usage(format!(
            "samples have dimension {} but the basis has {}",
            samples.dim(),
            basis.dim()
        )));
    }
    if n == 0 {
        return Err(Error::Usage("regression needs at least one sample".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::config("ridge", format!("must be finite and ≥ 0, got {ridge}")));
    }
    if let Some(i) = samples.labels.iter().position(|y| !y.is_finite()) {
        return Err(Error::Data(format!("label {i} is not finite")));
    }
    if n < p && ridge == 0.0 {
        return Err(Error::Usage(format!(
            "underdetermined regression: {n} samples for {p} features without ridge"
        )));
    }
    let resolved = match solver {
        Solver::Auto if n.saturating_mul(p) > DEFAULT_GRAM_THRESHOLD => Solver::Gram,
        Solver::Auto => Solver::Qr,
        s => s,
    };
    let coeffs = match resolved {
        Solver::Qr => solve_qr(samples, basis, ridge)?,
        _ => solve_gram(samples, basis, ridge)?,
    };
    let poly = HermitePoly::from_coeffs(basis.clone(), coeffs)?;
    let train_loss = loss(&poly, samples)?;
    Ok(RegressionResult {
        poly,
        train_loss,
        n_used: n,
        solver: resolved,
    })
}

/// Row-major `n × p` feature matrix `Φ[m][j] = H_{αⱼ}(xₘ)`.
pub fn design_matrix(basis: &IndexSet, points: &Points) -> Vec<f64> {
    let p = basis.len();
    map_blocks(points.len(), ROW_BLOCK, |r| {
        let mut table = vec![0.0; basis.table_len()];
        let mut out = vec![0.0; r.len() * p];
        for (row, i) in out.chunks_exact_mut(p).zip(r) {
            basis.features_into(points.row(i), &mut table, row);
        }
        out
    })
    .concat()
}

fn solve_qr(samples: &SampleBatch, basis: &IndexSet, ridge: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    let p = basis.len();
    let extra = if ridge > 0.0 { p } else { 0 };
    let rows = design_matrix(basis, &samples.points);
    let mut columns = vec![vec![0.0; n + extra]; p];
    for (m, row) in rows.chunks_exact(p).enumerate() {
        for (j, &v) in row.iter().enumerate() {
            columns[j][m] = v;
        }
    }
    drop(rows);
    let mut rhs = samples.labels.clone();
    if extra > 0 {
        let s = ridge.sqrt();
        for (j, col) in columns.iter_mut().enumerate() {
            col[n + j] = s;
        }
        rhs.extend(std::iter::repeat_n(0.0, p));
    }
    least_squares_qr(columns, rhs)
}

struct GramBlock {
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

fn solve_gram(samples: &SampleBatch, basis: &IndexSet, ridge: f64) -> Result<Vec<f64>> {
    let p = basis.len();
    let blocks = map_blocks(samples.len(), ROW_BLOCK, |r| {
        let len = r.len();
        // Column-major block so Gram entries are contiguous dot products.
        let mut cols = vec![0.0; p * len];
        let mut table = vec![0.0; basis.table_len()];
        let mut feats = vec![0.0; p];
        for (local, i) in r.clone().enumerate() {
            basis.features_into(samples.points.row(i), &mut table, &mut feats);
            for (j, &v) in feats.iter().enumerate() {
                cols[j * len + local] = v;
            }
        }
        let y = &samples.labels[r];
        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        for a in 0..p {
            let ca = &cols[a * len..(a + 1) * len];
            rhs[a] = dot(ca, y);
            for b in a..p {
                gram[a * p + b] = dot(ca, &cols[b * len..(b + 1) * len]);
            }
        }
        GramBlock { gram, rhs }
    });
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for block in &blocks {
        for (g, b) in gram.iter_mut().zip(&block.gram) {
            *g += b;
        }
        for (g, b) in rhs.iter_mut().zip(&block.rhs) {
            *g += b;
        }
    }
    for a in 0..p {
        gram[a * p + a] += ridge;
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
    }
    cholesky_solve(&gram, p, &rhs)
}

/// Result of [`boosted_fit`].
#[derive(Debug, Clone)]
pub struct BoostedFit {
    pub best: RegressionResult,
    /// Loss of the chosen fit on the shared validation fold.
    pub validation_loss: f64,
    pub fold_validation_losses: Vec<f64>,
    pub chosen_fold: usize,
}

/// Fits `repeats` independent regressions on disjoint training folds and
/// keeps the one with the smallest loss on a shared validation fold.
///
/// The last `⌊n · validation_fraction⌋` samples form the validation fold; the
/// rest are cut into `repeats` contiguous folds. With `repeats = 1` the
/// result is exactly `fit_l2` on the single training fold.
pub fn boosted_fit(
    samples: &SampleBatch,
    k: usize,
    repeats: usize,
    validation_fraction: f64,
    ridge: f64,
) -> Result<BoostedFit> {
    if repeats == 0 {
        return Err(Error::config("repeats", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::config(
            "validation_fraction",
            format!("must lie in [0, 1), got {validation_fraction}"),
        ));
    }
    let basis = IndexSet::new(samples.dim(), k)?;
    let n = samples.len();
    let n_val = (n as f64 * validation_fraction).floor() as usize;
    if repeats > 1 && n_val == 0 {
        return Err(Error::Usage(
            "boosting with several folds needs a non-empty validation fold".into(),
        ));
    }
    let n_train = n - n_val;
    let fold = n_train / repeats;
    let min_fold = if ridge == 0.0 { basis.len() } else { 1 };
    if fold < min_fold {
        return Err(Error::Usage(format!(
            "insufficient samples: {repeats} folds of {fold} samples, each needs at least {min_fold}"
        )));
    }
    let validation = samples.slice(n_train, n);
    let mut fits = Vec::with_capacity(repeats);
    let mut val_losses = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let part = samples.slice(r * fold, (r + 1) * fold);
        let fit = fit_l2_with(&part, &basis, ridge, Solver::Auto)?;
        let vl = if validation.is_empty() {
            fit.train_loss
        } else {
            loss(&fit.poly, &validation)?
        };
        val_losses.push(vl);
        fits.push(fit);
    }
    let chosen = val_losses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one fold");
    Ok(BoostedFit {
        validation_loss: val_losses[chosen],
        best: fits.swap_remove(chosen),
        fold_validation_losses: val_losses,
        chosen_fold: chosen,
    })
}

/// `P(xₘ)` for every sample.
pub fn predict(poly: &HermitePoly, batch: &SampleBatch) -> Result<Vec<f64>> {
    poly.eval_batch(&batch.points)
}

/// Mean squared residual `E[(y − P(x))²]` over the batch.
pub fn loss(poly: &HermitePoly, batch: &SampleBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Usage("loss over an empty batch".into()));
    }
    let pred = predict(poly, batch)?;
    let sum: f64 = pred
        .iter()
        .zip(&batch.labels)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok(sum / batch.len() as f64)
}
