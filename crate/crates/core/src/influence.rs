//! Influence matrix `M = E[∇P ∇Pᵀ]` of a Hermite polynomial and the
//! high-influence subspace spanned by its large eigenvectors.

use rayon::prelude::*;
use serde::Serialize;

use crate::hermite::{HermitePoly, IndexSet, MultiIndex};
use crate::linalg::{dot, eig_sym, SymmetricEigen};
use crate::{Error, Result};

/// Symmetric PSD `d × d` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl InfluenceMatrix {
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Usage(format!(
                "{} entries do not form a {dim}×{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn eigen(&self) -> Result<SymmetricEigen> {
        eig_sym(&self.entries, self.dim)
    }
}

/// `M_ij = Σ_β √((βᵢ+1)(βⱼ+1)) c_{β+eᵢ} c_{β+eⱼ}`, computed from the
/// coefficients of the partial derivatives.
pub fn influence_matrix(p: &HermitePoly) -> Result<InfluenceMatrix> {
    let d = p.dim();
    let k = p.degree();
    if k == 0 {
        return InfluenceMatrix::from_entries(d, vec![0.0; d * d]);
    }
    let lower = IndexSet::with_cap(d, k - 1, usize::MAX)?;
    let grads: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![0.0; lower.len()];
            let mut beta = vec![0u32; d];
            for (alpha, &c) in p.basis().indices().iter().zip(p.coeffs()) {
                let ai = alpha.get(i);
                if ai == 0 || c == 0.0 {
                    continue;
                }
                beta.copy_from_slice(alpha.as_slice());
                beta[i] -= 1;
                let r = lower
                    .rank(&MultiIndex::new(beta.clone()))
                    .expect("α − eᵢ has degree ≤ k − 1");
                g[r] = f64::from(ai).sqrt() * c;
            }
            g
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| (0..d).map(|j| dot(&grads[i], &grads[j])).collect())
        .collect();
    let mut entries = rows.concat();
    for i in 0..d {
        for j in 0..i {
            entries[i * d + j] = entries[j * d + i];
        }
    }
    InfluenceMatrix::from_entries(d, entries)
}

/// Span of the eigenvectors of `M` with eigenvalue at least `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subspace {
    pub ambient_dim: usize,
    /// Orthonormal rows spanning the subspace.
    pub basis: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
    /// Full spectrum of `M`, descending.
    pub spectrum: Vec<f64>,
}

impl Subspace {
    /// All of `ℝᵈ` with the coordinate basis.
    pub fn full(d: usize) -> Self {
        let basis = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Subspace {
            ambient_dim: d,
            basis,
            eigenvalues: vec![],
            threshold: 0.0,
            spectrum: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of `v` in the subspace basis.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_ambient(v.len())?;
        Ok(self.basis.iter().map(|b| dot(b, v)).collect())
    }

    /// Vector of `ℝᵈ` with the given subspace coordinates.
    pub fn lift(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.dim() {
            return Err(Error::Usage(format!(
                "{} coordinates for a {}-dimensional subspace",
                coords.len(),
                self.dim()
            )));
        }
        let mut out = vec![0.0; self.ambient_dim];
        for (b, &c) in self.basis.iter().zip(coords) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        Ok(out)
    }

    fn check_ambient(&self, len: usize) -> Result<()> {
        if len != self.ambient_dim {
            return Err(Error::Usage(format!(
                "vector of length {len} in ambient dimension {}",
                self.ambient_dim
            )));
        }
        Ok(())
    }
}

/// Keeps the eigenvectors of `M` with eigenvalue `≥ eta`.
pub fn select_subspace(m: &InfluenceMatrix, eta: f64) -> Result<Subspace> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::config("eta", format!("must be positive and finite, got {eta}")));
    }
    let eig = m.eigen()?;
    let keep = eig.values.iter().take_while(|&&l| l >= eta).count();
    let trace = m.trace();
    assert!(
        keep as f64 * eta <= trace + 1e-9 * trace.abs().max(1.0),
        "subspace dimension {keep} exceeds trace(M)/eta = {trace}/{eta}"
    );
    Ok(Subspace {
        ambient_dim: m.dim(),
        basis: eig.vectors[..keep].to_vec(),
        eigenvalues: eig.values[..keep].to_vec(),
        threshold: eta,
        spectrum: eig.values,
    })
}
