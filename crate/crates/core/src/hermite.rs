//! Multivariate normalized Hermite polynomials.
//!
//! `H_n = He_n / √(n!)` is orthonormal under `N(0, 1)` and
//! `H_α(x) = ∏ᵢ H_{αᵢ}(xᵢ)` is orthonormal under `N(0, I_d)`. A polynomial of
//! degree at most `k` is stored as a dense coefficient vector indexed by the
//! graded order of [`IndexSet`].

use std::collections::HashMap;
use std::sync::Arc;

use crate::sample::Points;
use crate::{Error, Result};

/// Default cap on `binomial(d + k, k)`.
pub const DEFAULT_FEATURE_CAP: usize = 200_000;

/// Multi-index `α ∈ ℕᵈ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(alpha: Vec<u32>) -> Self {
        assert!(!alpha.is_empty(), "multi-index needs at least one coordinate");
        Self(alpha)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = Σ αᵢ`.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(v: &[u32]) -> Self {
        MultiIndex::new(v.to_vec())
    }
}

/// `binomial(d + k, k)` in floating point (saturates instead of overflowing).
pub fn feature_count(d: usize, k: usize) -> f64 {
    let mut c = 1.0f64;
    for i in 1..=k {
        c = c * (d + i) as f64 / i as f64;
    }
    c.round()
}

/// All `α` with `|α| ≤ k` in graded order: by total degree, then
/// lexicographically descending within a degree.
pub fn enumerate_indices(d: usize, k: usize) -> Result<Vec<MultiIndex>> {
    enumerate_indices_capped(d, k, DEFAULT_FEATURE_CAP)
}

pub fn enumerate_indices_capped(d: usize, k: usize, cap: usize) -> Result<Vec<MultiIndex>> {
    if d == 0 {
        return Err(Error::config("d", "dimension must be at least 1"));
    }
    let count = feature_count(d, k);
    if count > cap as f64 {
        return Err(Error::resource(
            format!("Hermite basis of degree {k} in dimension {d}"),
            count,
            cap as f64,
        ));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0u32; d];
    for degree in 0..=k as u32 {
        push_compositions(&mut out, &mut current, 0, degree);
    }
    Ok(out)
}

fn push_compositions(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos == cur.len() - 1 {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        push_compositions(out, cur, pos + 1, remaining - v);
    }
    cur[pos] = 0;
}

/// Enumerated basis of degree-≤k Hermite polynomials on `ℝᵈ`, with a rank
/// lookup and per-index sparse factor lists for fast evaluation.
#[derive(Debug)]
pub struct IndexSet {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
    rank: HashMap<MultiIndex, usize>,
    factors: Vec<Vec<(u32, u32)>>,
}

impl IndexSet {
    pub fn new(d: usize, k: usize) -> Result<Arc<Self>> {
        Self::with_cap(d, k, DEFAULT_FEATURE_CAP)
    }

    pub fn with_cap(d: usize, k: usize, cap: usize) -> Result<Arc<Self>> {
        let indices = enumerate_indices_capped(d, k, cap)?;
        let rank = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let factors = indices
            .iter()
            .map(|a| {
                a.as_slice()
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(i, &p)| (i as u32, p))
                    .collect()
            })
            .collect();
        Ok(Arc::new(Self {
            dim: d,
            degree: k,
            indices,
            rank,
            factors,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn rank(&self, alpha: &MultiIndex) -> Option<usize> {
        self.rank.get(alpha).copied()
    }

    /// Writes every basis function evaluated at `x` into `out`.
    ///
    /// `table` is scratch space of length `d·(k+1)`.
    pub fn features_into(&self, x: &[f64], table: &mut [f64], out: &mut [f64]) {
        let stride = self.degree + 1;
        for (i, &xi) in x.iter().enumerate() {
            hermite_table(xi, &mut table[i * stride..(i + 1) * stride]);
        }
        for (o, f) in out.iter_mut().zip(&self.factors) {
            let mut v = 1.0;
            for &(c, p) in f {
                v *= table[c as usize * stride + p as usize];
            }
            *o = v;
        }
    }

    pub fn table_len(&self) -> usize {
        self.dim * (self.degree + 1)
    }
}

/// Normalized Hermite polynomial `H_n(x)` via
/// `√(n+1)·H_{n+1} = x·H_n − √n·H_{n−1}`.
pub fn eval_hermite_1d(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for m in 0..n {
        let next = (x * cur - (m as f64).sqrt() * prev) / ((m + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// `out[n] = H_n(x)` for `n < out.len()`.
pub fn hermite_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for m in 1..out.len().saturating_sub(1) {
        out[m + 1] = (x * out[m] - (m as f64).sqrt() * out[m - 1]) / ((m + 1) as f64).sqrt();
    }
}

/// `P(x) = Σ_α c_α H_α(x)` over a fixed [`IndexSet`].
#[derive(Debug, Clone)]
pub struct HermitePoly {
    basis: Arc<IndexSet>,
    coeffs: Vec<f64>,
}

impl PartialEq for HermitePoly {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.degree() == other.degree() && self.coeffs == other.coeffs
    }
}

impl HermitePoly {
    pub fn zero(basis: Arc<IndexSet>) -> Self {
        let n = basis.len();
        Self {
            basis,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(basis: Arc<IndexSet>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Usage(format!(
                "{} coefficients for a basis of {} functions",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    /// Builds a polynomial from `(α, c_α)` pairs on a fresh degree-`k` basis.
    pub fn from_terms(d: usize, k: usize, terms: &[(&[u32], f64)]) -> Result<Self> {
        let mut p = Self::zero(IndexSet::new(d, k)?);
        for (alpha, c) in terms {
            p.set(&MultiIndex::from(*alpha), *c)?;
        }
        Ok(p)
    }

    pub fn basis(&self) -> &Arc<IndexSet> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.basis.rank(alpha).map_or(0.0, |r| self.coeffs[r])
    }

    pub fn set(&mut self, alpha: &MultiIndex, value: f64) -> Result<()> {
        let r = self.basis.rank(alpha).ok_or_else(|| {
            Error::Usage(format!("index {:?} is outside the basis", alpha.as_slice()))
        })?;
        self.coeffs[r] = value;
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Usage(format!(
                "point has dimension {} but polynomial has {}",
                x.len(),
                self.dim()
            )));
        }
        let mut table = vec![0.0; self.basis.table_len()];
        let mut feats = vec![0.0; self.basis.len()];
        self.basis.features_into(x, &mut table, &mut feats);
        Ok(crate::linalg::dot(&feats, &self.coeffs))
    }

    /// Evaluates at every row of `points`, block-parallel.
    pub fn eval_batch(&self, points: &Points) -> Result<Vec<f64>> {
        if points.dim() != self.dim() {
            return Err(Error::Usage(format!(
                "points have dimension {} but polynomial has {}",
                points.dim(),
                self.dim()
            )));
        }
        let out = crate::parallel::map_blocks(points.len(), crate::parallel::ROW_BLOCK, |r| {
            let mut table = vec![0.0; self.basis.table_len()];
            let mut feats = vec![0.0; self.basis.len()];
            r.map(|i| {
                self.basis.features_into(points.row(i), &mut table, &mut feats);
                crate::linalg::dot(&feats, &self.coeffs)
            })
            .collect::<Vec<_>>()
        });
        Ok(out.concat())
    }

    /// Coefficients of `∂P/∂x_i` (0-based `i`) on the degree-`k−1` basis:
    /// `(∂ᵢP)_β = √(βᵢ+1) · c_{β+eᵢ}`.
    pub fn gradient(&self, i: usize) -> Result<HermitePoly> {
        gradient_coeffs(self, i)
    }

    pub fn parseval_norm_sq(&self) -> f64 {
        parseval_norm_sq(self)
    }
}

/// Coefficients of the partial derivative along coordinate `i` (0-based).
pub fn gradient_coeffs(p: &HermitePoly, i: usize) -> Result<HermitePoly> {
    if i >= p.dim() {
        return Err(Error::Usage(format!(
            "coordinate {i} out of range for dimension {}",
            p.dim()
        )));
    }
    let k = p.degree();
    let lower = IndexSet::with_cap(p.dim(), k.saturating_sub(1), usize::MAX)?;
    if k == 0 {
        return Ok(HermitePoly::zero(lower));
    }
    let mut coeffs = vec![0.0; lower.len()];
    let mut shifted = vec![0u32; p.dim()];
    for (slot, beta) in coeffs.iter_mut().zip(lower.indices()) {
        shifted.copy_from_slice(beta.as_slice());
        shifted[i] += 1;
        let r = p
            .basis
            .rank(&MultiIndex(shifted.clone()))
            .expect("β + eᵢ has degree ≤ k");
        *slot = f64::from(beta.get(i) + 1).sqrt() * p.coeffs[r];
    }
    HermitePoly::from_coeffs(lower, coeffs)
}

/// `Σ_α c_α²`, equal to `E[P(x)²]` under `N(0, I)`.
pub fn parseval_norm_sq(p: &HermitePoly) -> f64 {
    p.coeffs.iter().map(|c| c * c).sum()
}
