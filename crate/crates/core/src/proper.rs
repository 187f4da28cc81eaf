//! Proper agnostic halfspace learner: polynomial regression, influence
//! subspace, hypothesis grid over the subspace, holdout selection.

use serde::{Deserialize, Serialize};

use crate::cover::{build_grid, recommended_holdout, select_best, Classifier, Selection, DEFAULT_ENUMERATION_CAP};
use crate::hermite::{feature_count, HermitePoly, IndexSet, DEFAULT_FEATURE_CAP};
use crate::influence::{influence_matrix, select_subspace, Subspace};
use crate::regression::{boosted_fit, default_ridge};
use crate::report::{GridStats, InfluenceStats, ParameterRecord, RegressionStats, RunReport, Stopwatch};
use crate::sample::{LabelMode, SampleBatch};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Grid over the high-influence subspace.
    Subspace,
    /// Grid over all of `ℝᵈ`.
    BruteForce,
    /// Brute force when `1/ε⁶ > d`, subspace otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProperLearnerConfig {
    pub eps: f64,
    pub delta: f64,
    pub degree_override: Option<usize>,
    pub eta_override: Option<f64>,
    /// `C` in `k = ⌈C/ε⁴⌉`.
    pub degree_constant: f64,
    pub degree_cap: usize,
    /// `C` in `η = ε²/C`.
    pub eta_constant: f64,
    pub n_regression: Option<usize>,
    pub n_holdout: Option<usize>,
    pub repeats: usize,
    /// Validation share of the regression split, used when `repeats > 1`.
    pub validation_fraction: f64,
    /// Defaults to `1e-8 · n_regression`.
    pub ridge: Option<f64>,
    pub feature_cap: usize,
    pub enumeration_cap: usize,
    pub search: SearchMode,
    pub seed: u64,
}

impl Default for ProperLearnerConfig {
    fn default() -> Self {
        Self {
            eps: 0.2,
            delta: 0.05,
            degree_override: None,
            eta_override: None,
            degree_constant: 1.0,
            degree_cap: 4,
            eta_constant: 64.0,
            n_regression: None,
            n_holdout: None,
            repeats: 1,
            validation_fraction: 0.2,
            ridge: None,
            feature_cap: DEFAULT_FEATURE_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            search: SearchMode::Subspace,
            seed: 0,
        }
    }
}

/// Default share of the sample budget given to regression.
pub const REGRESSION_SHARE: f64 = 0.6;

impl ProperLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.eps) {
            return Err(Error::config("eps", format!("must lie in (0, 1), got {}", self.eps)));
        }
        if !open_unit(self.delta) {
            return Err(Error::config("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.degree_constant > 0.0 && self.degree_constant.is_finite()) {
            return Err(Error::config("degree_constant", "must be positive"));
        }
        if !(self.eta_constant > 0.0 && self.eta_constant.is_finite()) {
            return Err(Error::config("eta_constant", "must be positive"));
        }
        if let Some(eta) = self.eta_override {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::config("eta", format!("must be positive, got {eta}")));
            }
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation_fraction", "must lie in [0, 1)"));
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::config("ridge", "must be finite and ≥ 0"));
            }
        }
        if self.enumeration_cap == 0 || self.feature_cap == 0 {
            return Err(Error::config("enumeration_cap", "caps must be positive"));
        }
        Ok(())
    }

    /// `(⌈C/ε⁴⌉, degree used)`.
    pub fn degree(&self) -> (f64, usize) {
        let theoretical = (self.degree_constant / self.eps.powi(4)).ceil();
        let used = self
            .degree_override
            .unwrap_or_else(|| (theoretical.min(self.degree_cap as f64)) as usize);
        (theoretical, used)
    }

    /// `(ε²/C, η used)`.
    pub fn eta(&self) -> (f64, f64) {
        let theoretical = self.eps * self.eps / self.eta_constant;
        (theoretical, self.eta_override.unwrap_or(theoretical))
    }

    /// Sizes of the regression and holdout splits of an `n`-sample budget.
    pub fn split(&self, n: usize) -> Result<(usize, usize)> {
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

    pub fn brute_force(&self, d: usize) -> bool {
        match self.search {
            SearchMode::Subspace => false,
            SearchMode::BruteForce => true,
            SearchMode::Auto => self.eps.powi(-6) > d as f64,
        }
    }
}

/// Stage parameters after defaults and overrides are resolved.
#[derive(Debug, Clone)]
pub(crate) struct PipelineParams {
    pub eps: f64,
    pub delta: f64,
    pub degree: usize,
    pub eta: f64,
    pub repeats: usize,
    pub validation_fraction: f64,
    pub ridge: Option<f64>,
    pub feature_cap: usize,
    pub enumeration_cap: usize,
    pub brute_force: bool,
}

pub(crate) struct PipelineResult {
    pub selection: Selection,
    pub selection_grid_size: usize,
    pub subspace: Subspace,
    pub poly: Option<HermitePoly>,
}

/// Regression followed by influence-subspace selection; fills the regression
/// and influence report sections.
pub(crate) fn fit_subspace(
    reg: &SampleBatch,
    p: &PipelineParams,
    report: &mut RunReport,
    sw: &mut Stopwatch,
) -> Result<(Subspace, HermitePoly)> {
    let d = reg.dim();
    let basis = IndexSet::with_cap(d, p.degree, p.feature_cap)?;
    let ridge = p.ridge.unwrap_or_else(|| default_ridge(reg.len()));
    let vf = if p.repeats > 1 { p.validation_fraction } else { 0.0 };
    let fit = boosted_fit(reg, p.degree, p.repeats, vf, ridge)?;
    sw.lap(report, "regression");
    report.regression = Some(RegressionStats {
        degree: p.degree,
        features: basis.len(),
        samples: reg.len(),
        ridge,
        solver: serde_json::to_value(fit.best.solver)?
            .as_str()
            .unwrap_or_default()
            .to_string(),
        train_loss: fit.best.train_loss,
        validation_loss: (p.repeats > 1).then_some(fit.validation_loss),
        repeats: p.repeats,
        parseval_norm_sq: fit.best.poly.parseval_norm_sq(),
    });
    let m = influence_matrix(&fit.best.poly)?;
    let v = select_subspace(&m, p.eta)?;
    sw.lap(report, "influence");
    report.influence = Some(InfluenceStats {
        eta: p.eta,
        trace: m.trace(),
        spectrum: v.spectrum.clone(),
        subspace_dim: v.dim(),
        dimension_bound: m.trace() / p.eta,
        top_eigenvector: v.basis.first().cloned(),
    });
    if v.dim() == 0 {
        report.flag("empty_subspace");
    }
    Ok((v, fit.best.poly))
}

/// Regression, subspace selection, grid construction and holdout selection.
pub(crate) fn run_pipeline(
    reg: &SampleBatch,
    hold: &SampleBatch,
    p: &PipelineParams,
    report: &mut RunReport,
    sw: &mut Stopwatch,
) -> Result<PipelineResult> {
    let d = reg.dim();
    let (subspace, poly) = if p.brute_force {
        report.flag("brute_force");
        (Subspace::full(d), None)
    } else {
        let (v, poly) = fit_subspace(reg, p, report, sw)?;
        (v, Some(poly))
    };
    let grid = build_grid(&subspace, p.eps, p.enumeration_cap)?;
    let selection = select_best(&grid, hold)?;
    sw.lap(report, "selection");
    let recommended = recommended_holdout(grid.len(), p.eps, p.delta);
    if hold.len() < recommended {
        report.flag("holdout_below_recommended");
    }
    report.grid = Some(GridStats {
        eps: p.eps,
        subspace_dim: subspace.dim(),
        directions: grid.directions.len(),
        thresholds: grid.thresholds.len(),
        size: grid.len(),
        holdout: hold.len(),
        recommended_holdout: recommended,
        selected_index: selection.index,
    });
    report.errors.holdout = Some(selection.error_rate);
    Ok(PipelineResult { selection, selection_grid_size: grid.len(), subspace, poly })
}

#[derive(Debug, Clone)]
pub struct ProperOutcome {
    pub classifier: Classifier,
    pub report: RunReport,
    pub subspace: Subspace,
    pub poly: Option<HermitePoly>,
}

/// Learns a halfspace from `data`, split into regression and holdout parts.
pub fn learn_proper_halfspace(config: &ProperLearnerConfig, data: &SampleBatch) -> Result<ProperOutcome> {
    config.validate()?;
    if data.mode != LabelMode::Halfspace {
        return Err(Error::Usage("the halfspace learner needs ±1 labels".into()));
    }
    let mut sw = Stopwatch::start();
    let mut report = RunReport::new("learn-halfspace", serde_json::to_value(config)?);
    let d = data.dim();
    let (nr, nh) = config.split(data.len())?;
    let reg = data.slice(0, nr);
    let hold = data.slice(nr, nr + nh);

    let (k_theory, k) = config.degree();
    let (eta_theory, eta) = config.eta();
    if (k as f64) < k_theory {
        report.flag("degree_truncated");
    }
    let inv_eps = 1.0 / config.eps;
    report.parameters = vec![
        ParameterRecord::plain("degree", k_theory, k as f64),
        ParameterRecord::plain("eta", eta_theory, eta),
        ParameterRecord::new("features", log10_binomial(d as f64 + k_theory, k_theory), feature_count(d, k)),
        ParameterRecord::new("samples", k_theory * (d.max(2) as f64).log10(), data.len() as f64),
    ];
    let params = PipelineParams {
        eps: config.eps,
        delta: config.delta,
        degree: k,
        eta,
        repeats: config.repeats,
        validation_fraction: config.validation_fraction,
        ridge: config.ridge,
        feature_cap: config.feature_cap,
        enumeration_cap: config.enumeration_cap,
        brute_force: config.brute_force(d),
    };
    let out = run_pipeline(&reg, &hold, &params, &mut report, &mut sw)?;
    let grid_log10 = inv_eps.powi(6) * inv_eps.log10();
    let size = out.selection_grid_size as f64;
    report.parameters.push(ParameterRecord::new("grid_size", grid_log10, size));
    if size.log10() < grid_log10 {
        report.flag("grid_truncated");
    }
    let classifier = out.selection.classifier.clone();
    report.errors.train = Some(classifier.error_rate(&reg)?);
    report.hypothesis = Some(serde_json::to_value(&classifier)?);
    sw.lap(&mut report, "finalize");
    Ok(ProperOutcome {
        classifier,
        report,
        subspace: out.subspace,
        poly: out.poly,
    })
}

fn log10_binomial(n: f64, k: f64) -> f64 {
    (libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)) / std::f64::consts::LN_10
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, NoiseSpec, PlantedModel};
    use crate::gaussian::RngStream;

    fn data(d: usize, noise: NoiseSpec, n: usize, seed: u64) -> SampleBatch {
        generate(&PlantedModel::halfspace(d, noise), n, &RngStream::new(seed, 0)).unwrap().batch
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = ProperLearnerConfig::default();
        c.validate().unwrap();
        assert_eq!(c.degree(), (625.0, 4));
        assert!((c.eta().1 - 0.04 / 64.0).abs() < 1e-18);
        assert_eq!(c.split(1000).unwrap(), (600, 400));
        let bad = ProperLearnerConfig { eps: 1.0, ..c.clone() };
        assert!(matches!(bad.validate(), Err(Error::Config { ref field, .. }) if field == "eps"));
        let bad = ProperLearnerConfig { eta_override: Some(0.0), ..c.clone() };
        assert!(bad.validate().is_err());
        let over = ProperLearnerConfig { n_regression: Some(800), n_holdout: Some(300), ..c.clone() };
        assert!(matches!(over.split(1000), Err(Error::Usage(_))));
        assert!(ProperLearnerConfig { search: SearchMode::Auto, ..c.clone() }.brute_force(8));
        assert!(!c.brute_force(8));
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = ProperLearnerConfig {
            degree_override: Some(3),
            eta_override: Some(0.05),
            search: SearchMode::BruteForce,
            seed: 17,
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ProperLearnerConfig>(&text).unwrap(), c);
        assert!(serde_json::from_str::<ProperLearnerConfig>("{\"epsilon\": 0.1}").is_err());
    }

    #[test]
    fn one_dimensional_brute_force_is_exact() {
        let batch = data(1, NoiseSpec::Rcn { rate: 0.2 }, 4000, 3);
        let cfg = ProperLearnerConfig { eps: 0.1, search: SearchMode::BruteForce, ..Default::default() };
        let out = learn_proper_halfspace(&cfg, &batch).unwrap();
        let hold = batch.slice(2400, 4000);
        // Direct scan over {±1} × thresholds and the constants.
        let mut best = f64::INFINITY;
        for s in [1.0, -1.0] {
            for j in -15..=15 {
                let t = j as f64 * 0.1;
                let errs = hold.points.coords().iter().zip(&hold.labels)
                    .filter(|(&x, &y)| (if s * x + t >= 0.0 { 1.0 } else { -1.0 }) != y)
                    .count();
                best = best.min(errs as f64 / hold.len() as f64);
            }
        }
        let pos = hold.labels.iter().filter(|&&y| y > 0.0).count() as f64 / hold.len() as f64;
        best = best.min(pos).min(1.0 - pos);
        assert_eq!(out.report.errors.holdout, Some(best));
        assert!(out.report.has_flag("brute_force"));
    }

    #[test]
    fn same_input_same_report() {
        let batch = data(4, NoiseSpec::Rcn { rate: 0.1 }, 20_000, 4);
        let cfg = ProperLearnerConfig { degree_override: Some(2), eta_override: Some(0.05), eps: 0.25, ..Default::default() };
        let a = learn_proper_halfspace(&cfg, &batch).unwrap();
        let b = learn_proper_halfspace(&cfg, &batch).unwrap();
        assert_eq!(a.classifier, b.classifier);
        assert_eq!(a.report.deterministic_json(), b.report.deterministic_json());
    }

    #[test]
    fn selected_error_never_exceeds_constants() {
        let batch = data(3, NoiseSpec::Rcn { rate: 0.3 }, 10_000, 5);
        let cfg = ProperLearnerConfig { degree_override: Some(3), eta_override: Some(0.05), ..Default::default() };
        let out = learn_proper_halfspace(&cfg, &batch).unwrap();
        let hold = batch.slice(6000, 10_000);
        let pos = hold.labels.iter().filter(|&&y| y > 0.0).count() as f64 / hold.len() as f64;
        assert!(out.report.errors.holdout.unwrap() <= pos.min(1.0 - pos));
        let v = out.report.to_value();
        assert!(v["influence"]["spectrum"].as_array().unwrap().len() == 3);
        assert!(out.report.has_flag("degree_truncated"));
        assert!(out.report.has_flag("grid_truncated"));
    }

    #[test]
    fn rejects_real_valued_labels() {
        let b = generate(&PlantedModel::relu(2, NoiseSpec::Clean), 100, &RngStream::new(1, 0)).unwrap().batch;
        assert!(matches!(learn_proper_halfspace(&ProperLearnerConfig::default(), &b), Err(Error::Usage(_))));
    }
}
