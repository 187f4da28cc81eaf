//! Finite hypothesis grids over a subspace and empirical 0-1 selection.
//!
//! Directions come from a lattice cover of the unit sphere of the subspace,
//! thresholds from an evenly spaced grid; the two constant classifiers are
//! always appended. Selection sorts the holdout projections once per
//! direction so every threshold is scored with a binary search.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::influence::Subspace;
use crate::linalg::{dot, norm};
use crate::sample::{LabelMode, SampleBatch};
use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

/// Constant `A` in the size bound `|cover| ≤ (A/ε)^m` of [`unit_ball_cover`].
pub fn cover_constant(m: usize) -> f64 {
    3.0 * (m as f64).sqrt() + 1.0
}

/// `sign(w·x + t)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceHypothesis {
    pub w: Vec<f64>,
    pub t: f64,
}

impl HalfspaceHypothesis {
    pub fn new(w: Vec<f64>, t: f64) -> Result<Self> {
        let n = norm(&w);
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 || !t.is_finite() {
            return Err(Error::Usage(format!(
                "halfspace needs a unit normal and finite threshold (‖w‖ = {n}, t = {t})"
            )));
        }
        Ok(Self { w, t })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if dot(&self.w, x) + self.t >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Classifier {
    Halfspace(HalfspaceHypothesis),
    /// Always predicts `value` (±1).
    Constant { value: f64 },
}

impl Classifier {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Halfspace(h) => h.predict(x),
            Classifier::Constant { value } => *value,
        }
    }

    /// Fraction of `batch` misclassified.
    pub fn error_rate(&self, batch: &SampleBatch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Usage("error rate over an empty batch".into()));
        }
        if let Classifier::Halfspace(h) = self {
            if h.w.len() != batch.dim() {
                return Err(Error::Usage(format!(
                    "hypothesis of dimension {} on samples of dimension {}",
                    h.w.len(),
                    batch.dim()
                )));
            }
        }
        let wrong = batch
            .points
            .rows()
            .zip(&batch.labels)
            .filter(|(x, &y)| self.predict(x) != y)
            .count();
        Ok(wrong as f64 / batch.len() as f64)
    }

    /// `|t|` for halfspaces, infinite for constants.
    pub fn threshold_magnitude(&self) -> f64 {
        match self {
            Classifier::Halfspace(h) => h.t.abs(),
            Classifier::Constant { .. } => f64::INFINITY,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::config("eps", format!("must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Thresholds `j·ε` for every integer `j` with `|j·ε| ≤ √ln(1/ε)`, ascending.
pub fn threshold_grid(eps: f64) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let bound = (1.0 / eps).ln().sqrt();
    let jmax = (bound / eps + 1e-9).floor() as i64;
    Ok((-jmax..=jmax).map(|j| j as f64 * eps).collect())
}

/// Unit vectors of `ℝᵐ` such that every unit vector is within `eps` of one.
///
/// Lattice points of spacing `eps/√m` in the shell `1 − eps/2 ≤ ‖p‖ ≤ 1 + eps/2`
/// are normalized and deduplicated. Any unit `u` has a lattice point within
/// `eps/2`, which lies in the shell and normalizes to within `eps` of `u`.
pub fn unit_ball_cover(m: usize, eps: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::Usage("cover of a zero-dimensional space".into()));
    }
    check_eps(eps)?;
    let nominal = (1.0 / eps).powi(m as i32);
    if nominal > cap as f64 {
        return Err(Error::resource("unit-ball cover", nominal, cap as f64));
    }
    let h = eps / (m as f64).sqrt();
    let outer = 1.0 + eps / 2.0;
    let inner = 1.0 - eps / 2.0;
    let jmax = (outer / h).floor() as i64;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut cur = vec![0i64; m];
    enumerate_shell(
        &mut cur,
        0,
        0.0,
        &ShellParams { h, jmax, inner_sq: inner * inner, outer_sq: outer * outer, cap },
        &mut |p: &[i64]| {
            let v: Vec<f64> = p.iter().map(|&j| j as f64 * h).collect();
            let n = norm(&v);
            let u: Vec<f64> = v.into_iter().map(|a| a / n).collect();
            let key: Vec<i64> = u.iter().map(|a| (a * 1e12).round() as i64).collect();
            if seen.insert(key) {
                out.push(u);
            }
            out.len()
        },
    )?;
    Ok(out)
}

struct ShellParams {
    h: f64,
    jmax: i64,
    inner_sq: f64,
    outer_sq: f64,
    cap: usize,
}

fn enumerate_shell(
    cur: &mut [i64],
    pos: usize,
    sq: f64,
    params: &ShellParams,
    emit: &mut impl FnMut(&[i64]) -> usize,
) -> Result<()> {
    if pos == cur.len() {
        if sq >= params.inner_sq && sq <= params.outer_sq {
            let count = emit(cur);
            if count > params.cap {
                return Err(Error::resource("unit-ball cover", count as f64, params.cap as f64));
            }
        }
        return Ok(());
    }
    for j in -params.jmax..=params.jmax {
        let s = sq + (j as f64 * params.h).powi(2);
        if s > params.outer_sq {
            continue;
        }
        cur[pos] = j;
        enumerate_shell(cur, pos + 1, s, params, emit)?;
    }
    Ok(())
}

/// Candidates `directions × thresholds` followed by the constants +1 and −1.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisGrid {
    pub dim: usize,
    /// Unit normals in `ℝᵈ`, lifted from the subspace cover.
    pub directions: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub eps: f64,
    pub subspace_dim: usize,
}

impl HypothesisGrid {
    pub fn len(&self) -> usize {
        self.directions.len() * self.thresholds.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Candidate at grid position `i`: direction-major, then threshold, then
    /// the constants.
    pub fn candidate(&self, i: usize) -> Option<Classifier> {
        let nt = self.thresholds.len();
        let halfspaces = self.directions.len() * nt;
        if i < halfspaces {
            Some(Classifier::Halfspace(HalfspaceHypothesis {
                w: self.directions[i / nt].clone(),
                t: self.thresholds[i % nt],
            }))
        } else if i == halfspaces {
            Some(Classifier::Constant { value: 1.0 })
        } else if i == halfspaces + 1 {
            Some(Classifier::Constant { value: -1.0 })
        } else {
            None
        }
    }
}

/// Grid over the subspace `v` at resolution `eps`.
pub fn build_grid(v: &Subspace, eps: f64, cap: usize) -> Result<HypothesisGrid> {
    let thresholds = threshold_grid(eps)?;
    let m = v.dim();
    let directions = if m == 0 {
        vec![]
    } else {
        let cover = unit_ball_cover(m, eps, cap)?;
        let total = cover.len() as f64 * thresholds.len() as f64 + 2.0;
        if total > cap as f64 {
            return Err(Error::resource("hypothesis grid", total, cap as f64));
        }
        cover
            .iter()
            .map(|c| {
                let w = v.lift(c)?;
                let n = norm(&w);
                Ok(w.into_iter().map(|a| a / n).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?
    };
    Ok(HypothesisGrid {
        dim: v.ambient_dim,
        directions,
        thresholds,
        eps,
        subspace_dim: m,
    })
}

/// Holdout size `⌈ln(|ℋ|/δ) / (2ε²)⌉` for uniform convergence over the grid.
pub fn recommended_holdout(grid_size: usize, eps: f64, delta: f64) -> usize {
    ((grid_size as f64 / delta).ln() / (2.0 * eps * eps)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub classifier: Classifier,
    pub index: usize,
    pub errors: usize,
    pub error_rate: f64,
}

/// Misclassification count of every candidate, in grid order.
pub fn candidate_errors(grid: &HypothesisGrid, holdout: &SampleBatch) -> Result<Vec<usize>> {
    if holdout.is_empty() {
        return Err(Error::Usage("selection needs a non-empty holdout".into()));
    }
    if holdout.mode != LabelMode::Halfspace {
        return Err(Error::Usage("selection needs ±1 labels".into()));
    }
    if holdout.dim() != grid.dim {
        return Err(Error::Usage(format!(
            "holdout of dimension {} for a grid in dimension {}",
            holdout.dim(),
            grid.dim
        )));
    }
    let n = holdout.len();
    let n_pos = holdout.labels.iter().filter(|&&y| y > 0.0).count();
    let per_direction: Vec<Vec<usize>> = grid
        .directions
        .par_iter()
        .map(|w| {
            let mut proj: Vec<(f64, bool)> = holdout
                .points
                .rows()
                .zip(&holdout.labels)
                .map(|(x, &y)| (dot(w, x), y > 0.0))
                .collect();
            proj.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut pos_below = Vec::with_capacity(n + 1);
            pos_below.push(0usize);
            for &(_, pos) in &proj {
                pos_below.push(pos_below.last().unwrap() + usize::from(pos));
            }
            grid.thresholds
                .iter()
                .map(|&t| {
                    // Predicted −1 exactly for the first `below` sorted points.
                    let below = proj.partition_point(|&(z, _)| z + t < 0.0);
                    let pos_wrong = pos_below[below];
                    let neg_wrong = (n - below) - (pos_below[n] - pos_below[below]);
                    pos_wrong + neg_wrong
                })
                .collect()
        })
        .collect();
    let mut out: Vec<usize> = per_direction.concat();
    out.push(n - n_pos);
    out.push(n_pos);
    Ok(out)
}

/// Empirical 0-1 minimizer; ties go to the smaller `|t|`, then grid order.
pub fn select_best(grid: &HypothesisGrid, holdout: &SampleBatch) -> Result<Selection> {
    let errors = candidate_errors(grid, holdout)?;
    let nt = grid.thresholds.len();
    let magnitude = |i: usize| {
        if i < grid.directions.len() * nt {
            grid.thresholds[i % nt].abs()
        } else {
            f64::INFINITY
        }
    };
    let index = (0..errors.len())
        .min_by(|&a, &b| {
            errors[a]
                .cmp(&errors[b])
                .then(magnitude(a).total_cmp(&magnitude(b)))
                .then(a.cmp(&b))
        })
        .ok_or_else(|| Error::Internal("empty hypothesis grid".into()))?;
    Ok(Selection {
        classifier: grid.candidate(index).expect("index in range"),
        index,
        errors: errors[index],
        error_rate: errors[index] as f64 / holdout.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{sample_gaussian, RngStream};
    use crate::sample::Points;
    use proptest::prelude::*;

    fn random_units(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        RngStream::new(seed, 0)
            .normals(m * n)
            .chunks_exact(m)
            .map(|c| {
                let l = norm(c);
                c.iter().map(|a| a / l).collect()
            })
            .collect()
    }

    fn cover_gap(cover: &[Vec<f64>], probes: &[Vec<f64>]) -> f64 {
        probes
            .par_iter()
            .map(|u| {
                cover
                    .iter()
                    .map(|c| c.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }

    fn batch(points: Points, f: impl FnMut(&[f64]) -> f64) -> SampleBatch {
        let labels = points.rows().map(f).collect();
        SampleBatch::new(points, labels, LabelMode::Halfspace).unwrap()
    }

    #[test]
    fn threshold_grid_examples() {
        let g = threshold_grid(0.5).unwrap();
        assert_eq!(g, vec![-0.5, 0.0, 0.5]);
        let g = threshold_grid(0.1).unwrap();
        assert!((g.last().unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(g.len(), 31);
        for w in g.windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-12);
        }
        assert!(g.contains(&0.0));
        assert!(threshold_grid(1.0).is_err());
        assert!(threshold_grid(0.0).is_err());
    }

    #[test]
    fn one_dimensional_cover_is_two_points() {
        let c = unit_ball_cover(1, 0.5, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(c, vec![vec![-1.0], vec![1.0]]);
        let probes = random_units(1, 10_000, 1);
        assert!(cover_gap(&c, &probes) <= 0.5);
    }

    #[test]
    fn covers_pass_randomized_audit() {
        for (m, eps) in [(2usize, 0.3), (2, 0.05), (3, 0.2), (4, 0.4)] {
            let c = unit_ball_cover(m, eps, DEFAULT_ENUMERATION_CAP).unwrap();
            let gap = cover_gap(&c, &random_units(m, 100_000, m as u64));
            assert!(gap <= eps, "m={m} eps={eps}: gap {gap}");
            let bound = (cover_constant(m) / eps).powi(m as i32);
            assert!((c.len() as f64) <= bound, "m={m}: {} > {bound}", c.len());
            assert!(c.iter().all(|u| (norm(u) - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn cap_is_enforced() {
        match unit_ball_cover(8, 0.1, 1000) {
            Err(Error::Resource { required, cap, .. }) => {
                assert!(required >= 1e8 - 1.0);
                assert_eq!(cap, 1000.0);
            }
            other => panic!("{other:?}"),
        }
        // Nominal count fits but the lattice does not.
        let full = unit_ball_cover(2, 0.1, DEFAULT_ENUMERATION_CAP).unwrap().len();
        assert!(full > 101);
        assert!(matches!(unit_ball_cover(2, 0.1, full - 1), Err(Error::Resource { .. })));
        assert_eq!(unit_ball_cover(2, 0.1, full).unwrap().len(), full);
    }

    #[test]
    fn grid_shapes() {
        let empty = Subspace::full(0);
        let g = build_grid(&Subspace { ambient_dim: 3, ..empty }, 0.3, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.candidate(0), Some(Classifier::Constant { value: 1.0 }));

        let line = Subspace {
            ambient_dim: 3,
            basis: vec![vec![0.0, 0.6, 0.8]],
            eigenvalues: vec![1.0],
            threshold: 0.1,
            spectrum: vec![1.0, 0.0, 0.0],
        };
        let g = build_grid(&line, 0.5, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(g.len(), 8);
        for i in 0..6 {
            let Some(Classifier::Halfspace(h)) = g.candidate(i) else { panic!() };
            assert!((norm(&h.w) - 1.0).abs() <= 1e-10);
            assert!(h.w[0].abs() <= 1e-15);
        }
        assert_eq!(g.candidate(8), None);
    }

    #[test]
    fn selection_examples() {
        let pts = sample_gaussian(2, 5000, &RngStream::new(2, 0));
        let all_pos = batch(pts.clone(), |_| 1.0);
        let g = build_grid(&Subspace::full(2), 0.2, DEFAULT_ENUMERATION_CAP).unwrap();
        let s = select_best(&g, &all_pos).unwrap();
        assert_eq!(s.errors, 0);
        assert_eq!(s.classifier, Classifier::Constant { value: 1.0 });

        // Labeled by a grid member.
        let Some(Classifier::Halfspace(h)) = g.candidate(7 * g.thresholds.len() + 3) else { panic!() };
        let exact = batch(pts, |x| h.predict(x));
        assert_eq!(select_best(&g, &exact).unwrap().errors, 0);

        let pts = sample_gaussian(2, 50_000, &RngStream::new(3, 0));
        let planted = batch(pts, |x| if x[0] >= 0.0 { 1.0 } else { -1.0 });
        let s = select_best(&g, &planted).unwrap();
        assert!(s.error_rate <= 0.1);
    }

    #[test]
    fn selection_rejects_bad_holdouts() {
        let g = build_grid(&Subspace::full(2), 0.5, DEFAULT_ENUMERATION_CAP).unwrap();
        let pts = sample_gaussian(3, 10, &RngStream::new(1, 0));
        assert!(select_best(&g, &batch(pts.clone(), |_| 1.0)).is_err());
        let relu = SampleBatch::new(pts.slice(0, 0), vec![], LabelMode::Relu).unwrap();
        assert!(select_best(&g, &relu).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sweep_matches_direct_counting(seed in 0u64..1000, d in 1usize..4, eps in 0.25f64..0.7) {
            let g = build_grid(&Subspace::full(d), eps, DEFAULT_ENUMERATION_CAP).unwrap();
            let pts = sample_gaussian(d, 400, &RngStream::new(seed, 0));
            let flips = RngStream::new(seed, 1).uniforms(400);
            let mut i = 0;
            let hold = batch(pts, |x| {
                i += 1;
                let s = if x[0] - 0.3 * x[d - 1] + 0.2 >= 0.0 { 1.0 } else { -1.0 };
                if flips[i - 1] < 0.2 { -s } else { s }
            });
            let errs = candidate_errors(&g, &hold).unwrap();
            prop_assert_eq!(errs.len(), g.len());
            for (j, &e) in errs.iter().enumerate() {
                let c = g.candidate(j).unwrap();
                let direct = hold.points.rows().zip(&hold.labels).filter(|(x, &y)| c.predict(x) != y).count();
                prop_assert_eq!(e, direct);
            }
            let s = select_best(&g, &hold).unwrap();
            let min = *errs.iter().min().unwrap();
            prop_assert_eq!(s.errors, min);
            for (j, &e) in errs.iter().enumerate() {
                if e == min {
                    let c = g.candidate(j).unwrap();
                    prop_assert!(s.classifier.threshold_magnitude() <= c.threshold_magnitude());
                    if c.threshold_magnitude() == s.classifier.threshold_magnitude() {
                        prop_assert!(s.index <= j);
                    }
                }
            }
            let const_best = errs[errs.len() - 2].min(errs[errs.len() - 1]);
            prop_assert!(s.errors <= const_best);
        }
    }
}
