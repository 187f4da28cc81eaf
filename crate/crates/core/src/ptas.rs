//! Localized PTAS for homogeneous halfspaces.
//!
//! A Chow-vector initializer gives `w0`. Examples are then kept with
//! probability `exp(−(w0·x)²(σ⁻² − 1)/2)`, which leaves the accepted
//! x-marginal `N(0, Σ)` with `Σ = I − (1 − σ²) w0 w0ᵀ`. The accepted batch is
//! whitened, the proper learner runs at accuracy `αγ`, and its output is
//! mapped back and checked for small bias and angle to `w0`.

use serde::{Deserialize, Serialize};

use crate::cover::{Classifier, HalfspaceHypothesis, DEFAULT_ENUMERATION_CAP};
use crate::gaussian::{sample_gaussian, std_normal_cdf, RngStream};
use crate::hermite::DEFAULT_FEATURE_CAP;
use crate::linalg::{dot, eig_sym, norm, normalized};
use crate::parallel::{map_blocks, ROW_BLOCK};
use crate::proper::{run_pipeline, PipelineParams, REGRESSION_SHARE};
use crate::report::{LocalizationStats, ParameterRecord, RunReport, Stopwatch, ValidationStats};
use crate::sample::{LabelMode, Points, SampleBatch};
use crate::{Error, Result};

const LOCALIZATION_STREAM: u64 = 0x10c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PtasConfig {
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    /// Early exit when `eps > early_exit_constant · OPT̂`.
    pub early_exit_constant: f64,
    /// `σ = sigma_constant · OPT̂ / γ` before clamping.
    pub sigma_constant: f64,
    /// `α = alpha_fraction · γ`.
    pub alpha_fraction: f64,
    /// Validation passes when `|t|` and the angle to `w0` are at most `κσα`.
    pub kappa: f64,
    pub init_fraction: f64,
    pub check_fraction: f64,
    /// Accuracy of the inner learner; defaults to `αγ`.
    pub inner_eps: Option<f64>,
    pub inner_degree: Option<usize>,
    pub inner_eta: Option<f64>,
    pub inner_degree_cap: usize,
    pub ridge: Option<f64>,
    pub feature_cap: usize,
    pub enumeration_cap: usize,
}

impl Default for PtasConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            eps: 0.05,
            delta: 0.05,
            seed: 0,
            early_exit_constant: 2.0,
            sigma_constant: 4.0,
            alpha_fraction: 0.125,
            kappa: 4.0,
            init_fraction: 0.2,
            check_fraction: 0.2,
            inner_eps: None,
            inner_degree: None,
            inner_eta: None,
            inner_degree_cap: 4,
            ridge: None,
            feature_cap: DEFAULT_FEATURE_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl PtasConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        for (name, v) in [("gamma", self.gamma), ("eps", self.eps), ("delta", self.delta)] {
            if !open_unit(v) {
                return Err(Error::config(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("early_exit_constant", self.early_exit_constant),
            ("sigma_constant", self.sigma_constant),
            ("kappa", self.kappa),
        ] {
            if !positive(v) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        if !(positive(self.alpha_fraction) && self.alpha_fraction * self.gamma < 0.5) {
            return Err(Error::config("alpha_fraction", "need 0 < α = alpha_fraction·γ < 1/2"));
        }
        if !(open_unit(self.init_fraction)
            && open_unit(self.check_fraction)
            && self.init_fraction + self.check_fraction < 1.0)
        {
            return Err(Error::config("init_fraction", "init and check fractions must leave a localization pool"));
        }
        if let Some(e) = self.inner_eps {
            if !open_unit(e) {
                return Err(Error::config("inner_eps", format!("must lie in (0, 1), got {e}")));
            }
        }
        if let Some(e) = self.inner_eta {
            if !positive(e) {
                return Err(Error::config("inner_eta", format!("must be positive, got {e}")));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_fraction * self.gamma
    }
}

/// Initial direction and its empirical error on the batch it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct InitResult {
    pub w0: Vec<f64>,
    pub error: f64,
    /// The Chow vector was indistinguishable from zero and the top
    /// eigenvector of `E[y x xᵀ]` was used instead.
    pub fallback: bool,
}

/// Normalized Chow vector `E[y x]`, sign chosen by empirical error.
pub fn init_constant_factor(batch: &SampleBatch) -> Result<InitResult> {
    if batch.is_empty() || batch.mode != LabelMode::Halfspace {
        return Err(Error::Usage("initialization needs a non-empty ±1 batch".into()));
    }
    let d = batch.dim();
    let n = batch.len() as f64;
    let mut chow = vec![0.0; d];
    for (x, &y) in batch.points.rows().zip(&batch.labels) {
        for (c, xi) in chow.iter_mut().zip(x) {
            *c += y * xi;
        }
    }
    chow.iter_mut().for_each(|c| *c /= n);
    let rms_y = batch.mean_sq_label().sqrt();
    let noise_floor = 4.0 * (d as f64 / n).sqrt() * rms_y;
    let (dir, fallback) = match normalized(&chow) {
        Some(u) if norm(&chow) > noise_floor => (u, false),
        _ => {
            let mut second = vec![0.0; d * d];
            for (x, &y) in batch.points.rows().zip(&batch.labels) {
                for i in 0..d {
                    for j in 0..d {
                        second[i * d + j] += y * x[i] * x[j] / n;
                    }
                }
            }
            let eig = eig_sym(&second, d)?;
            (eig.vectors[0].clone(), true)
        }
    };
    let err = |w: &[f64]| {
        batch
            .points
            .rows()
            .zip(&batch.labels)
            .filter(|(x, &y)| (if dot(w, x) >= 0.0 { 1.0 } else { -1.0 }) != y)
            .count() as f64
            / n
    };
    let flipped: Vec<f64> = dir.iter().map(|v| -v).collect();
    let (e_pos, e_neg) = (err(&dir), err(&flipped));
    Ok(if e_neg < e_pos {
        InitResult { w0: flipped, error: e_neg, fallback }
    } else {
        InitResult { w0: dir, error: e_pos, fallback }
    })
}

/// `w0`, squash factor `σ`, and `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationParams {
    pub w0: Vec<f64>,
    pub sigma: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl LocalizationParams {
    pub fn new(w0: Vec<f64>, sigma: f64, gamma: f64, alpha: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::Usage(format!("σ must lie in (0, 1), got {sigma}")));
        }
        if !(alpha > 0.0 && alpha < 0.5) || sigma >= (std::f64::consts::PI * alpha).cos() {
            return Err(Error::Usage(format!("need σ < cos(πα), got σ = {sigma}, α = {alpha}")));
        }
        if (norm(&w0) - 1.0).abs() > 1e-10 {
            return Err(Error::Usage("w0 must be a unit vector".into()));
        }
        Ok(Self { w0, sigma, gamma, alpha })
    }

    /// Probability of keeping `x`.
    pub fn accept_probability(&self, x: &[f64]) -> f64 {
        let z = dot(&self.w0, x);
        (-z * z * (self.sigma.powi(-2) - 1.0) / 2.0).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub offered: usize,
    pub accepted: usize,
    pub rate: f64,
}

/// Keeps example `i` when the `i`-th uniform of `rng` falls below its
/// acceptance probability.
pub fn rejection_sample(
    batch: &SampleBatch,
    params: &LocalizationParams,
    rng: &RngStream,
) -> Result<(SampleBatch, AcceptanceReport)> {
    if batch.dim() != params.w0.len() {
        return Err(Error::Usage("w0 and samples differ in dimension".into()));
    }
    let n = batch.len();
    let keep: Vec<bool> = map_blocks(n, ROW_BLOCK, |r| {
        let mut u = vec![0.0; r.len()];
        rng.fill_uniform(r.start as u64, &mut u);
        r.zip(u).map(|(i, ui)| ui < params.accept_probability(batch.points.row(i))).collect::<Vec<_>>()
    })
    .concat();
    let d = batch.dim();
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
        coords.extend_from_slice(batch.points.row(i));
        labels.push(batch.labels[i]);
    }
    let accepted = labels.len();
    let out = SampleBatch::new(Points::new(d, coords)?, labels, batch.mode)?;
    let rate = if n == 0 { 0.0 } else { accepted as f64 / n as f64 };
    Ok((out, AcceptanceReport { offered: n, accepted, rate }))
}

/// `x ↦ Σ^{-1/2} x = x + (1/σ − 1)(w0·x) w0`.
pub fn whiten(batch: &SampleBatch, w0: &[f64], sigma: f64) -> Result<SampleBatch> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Usage(format!("σ must be positive, got {sigma}")));
    }
    if batch.dim() != w0.len() {
        return Err(Error::Usage("w0 and samples differ in dimension".into()));
    }
    let s = 1.0 / sigma - 1.0;
    let mut coords = batch.points.coords().to_vec();
    for x in coords.chunks_exact_mut(w0.len()) {
        let z = dot(w0, x);
        x.iter_mut().zip(w0).for_each(|(a, b)| *a += s * z * b);
    }
    SampleBatch::new(Points::new(w0.len(), coords)?, batch.labels.clone(), batch.mode)
}

/// Maps `sign(w'·x̃ + t')` on whitened inputs back to original coordinates.
pub fn unwhiten_hypothesis(h: &HalfspaceHypothesis, w0: &[f64], sigma: f64) -> Result<HalfspaceHypothesis> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Usage(format!("σ must be positive, got {sigma}")));
    }
    let s = 1.0 / sigma - 1.0;
    let z = dot(w0, &h.w);
    let v: Vec<f64> = h.w.iter().zip(w0).map(|(a, b)| a + s * z * b).collect();
    let l = norm(&v);
    HalfspaceHypothesis::new(v.iter().map(|a| a / l).collect(), h.t / l)
}

/// Angle between two vectors in `[0, π]`.
pub fn angle(u: &[f64], v: &[f64]) -> f64 {
    (dot(u, v) / (norm(u) * norm(v))).clamp(-1.0, 1.0).acos()
}

/// `(1 + σ² tan²(πα))^{-1/2}`.
pub fn correlation_bound(sigma: f64, alpha: f64) -> f64 {
    let t = (std::f64::consts::PI * alpha).tan();
    1.0 / (1.0 + sigma * sigma * t * t).sqrt()
}

/// Checks `|t| ≤ κσα` and `θ(w, w0) ≤ κσα`.
pub fn validate_bias_angle(h: &HalfspaceHypothesis, params: &LocalizationParams, kappa: f64) -> ValidationStats {
    let bound = kappa * params.sigma * params.alpha;
    let bias = h.t.abs();
    let theta = angle(&h.w, &params.w0);
    ValidationStats {
        bias,
        angle: theta,
        bound,
        kappa,
        passed: bias <= bound && theta <= bound,
        correlation: dot(&h.w, &params.w0),
        correlation_bound: correlation_bound(params.sigma, params.alpha),
    }
}

/// Monte Carlo probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p: f64,
    pub std_err: f64,
    pub n: usize,
}

impl McEstimate {
    fn from_count(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self { p, std_err: (p * (1.0 - p) / n as f64).sqrt(), n }
    }
}

/// `P[h1(x) ≠ h2(x)]` under `N(0, I)`, or under `N(0, Σ)` with
/// `Σ = I − (1 − σ²) w0 w0ᵀ` when `localized = Some((w0, σ))`.
pub fn disagreement_mc(
    h1: &Classifier,
    h2: &Classifier,
    dim: usize,
    n: usize,
    rng: &RngStream,
    localized: Option<(&[f64], f64)>,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::Usage("Monte Carlo needs n ≥ 1".into()));
    }
    let pts = sample_gaussian(dim, n, rng);
    let hits: usize = map_blocks(n, ROW_BLOCK, |r| {
        let mut y = vec![0.0; dim];
        r.filter(|&i| {
            y.copy_from_slice(pts.row(i));
            if let Some((w0, sigma)) = localized {
                // Σ^{1/2} = I − (1 − σ) w0 w0ᵀ
                let z = dot(w0, &y);
                y.iter_mut().zip(w0).for_each(|(a, b)| *a -= (1.0 - sigma) * z * b);
            }
            h1.predict(&y) != h2.predict(&y)
        })
        .count()
    })
    .iter()
    .sum();
    Ok(McEstimate::from_count(hits, n))
}

/// `P[min(r1, r2) ≤ r ≤ max(r1, r2)]` for `r ~ N(0, 1)`.
pub fn gaussian_band_mass(r1: f64, r2: f64) -> f64 {
    std_normal_cdf(r1.max(r2)) - std_normal_cdf(r1.min(r2))
}

/// `E[1(h0 ≠ h) · (1 − accept(x))]` under `N(0, I)`: disagreement mass the
/// localization discards.
pub fn rejected_disagreement_mc(
    h0: &Classifier,
    h: &Classifier,
    params: &LocalizationParams,
    n: usize,
    rng: &RngStream,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("Monte Carlo needs n ≥ 1".into()));
    }
    let d = params.w0.len();
    let pts = sample_gaussian(d, n, rng);
    let total: f64 = map_blocks(n, ROW_BLOCK, |r| {
        r.map(|i| {
            let x = pts.row(i);
            if h0.predict(x) != h.predict(x) {
                1.0 - params.accept_probability(x)
            } else {
                0.0
            }
        })
        .sum::<f64>()
    })
    .iter()
    .sum();
    Ok(total / n as f64)
}

#[derive(Debug, Clone)]
pub struct PtasOutcome {
    pub hypothesis: HalfspaceHypothesis,
    pub report: RunReport,
}

/// Runs the localized learner on `data`: the first `init_fraction` of the
/// examples seed `w0`, the next `check_fraction` estimate errors, the rest
/// feed the localization.
pub fn learn_ptas(config: &PtasConfig, data: &SampleBatch) -> Result<PtasOutcome> {
    config.validate()?;
    if data.mode != LabelMode::Halfspace {
        return Err(Error::Usage("the PTAS needs ±1 labels".into()));
    }
    let mut sw = Stopwatch::start();
    let mut report = RunReport::new("ptas", serde_json::to_value(config)?);
    let n = data.len();
    let n_init = (n as f64 * config.init_fraction).floor() as usize;
    let n_check = (n as f64 * config.check_fraction).floor() as usize;
    if n_init == 0 || n_check == 0 || n_init + n_check >= n {
        return Err(Error::Usage(format!("{n} samples are too few to split")));
    }
    let init_batch = data.slice(0, n_init);
    let check = data.slice(n_init, n_init + n_check);
    let pool = data.slice(n_init + n_check, n);

    let init = init_constant_factor(&init_batch)?;
    if init.fallback {
        report.flag("init_fallback");
    }
    let h0 = HalfspaceHypothesis::new(init.w0.clone(), 0.0)?;
    let c0 = Classifier::Halfspace(h0.clone());
    let check_h0 = c0.error_rate(&check)?;
    let opt_hat = check_h0.max(config.eps / 10.0);
    sw.lap(&mut report, "init");

    let alpha = config.alpha();
    let mut loc = LocalizationStats {
        init_direction: init.w0.clone(),
        init_error: init.error,
        init_fallback: init.fallback,
        opt_estimate: opt_hat,
        early_exit: false,
        gamma: config.gamma,
        alpha,
        sigma: None,
        sigma_clamped: false,
        offered: None,
        accepted: None,
        acceptance_rate: None,
        inner_eps: None,
        validation: None,
        check_errors: None,
    };

    let finish = |mut report: RunReport, loc: LocalizationStats, h: HalfspaceHypothesis, check_err: f64| {
        let c = Classifier::Halfspace(h.clone());
        report.errors.train = Some(c.error_rate(&init_batch)?);
        report.errors.holdout = Some(check_err);
        report.hypothesis = Some(serde_json::to_value(&c)?);
        report.localization = Some(loc);
        Ok(PtasOutcome { hypothesis: h, report })
    };

    if config.eps > config.early_exit_constant * opt_hat {
        loc.early_exit = true;
        report.flag("early_exit");
        return finish(report, loc, h0, check_h0);
    }

    let ceiling = 0.99 * (std::f64::consts::PI * alpha).cos();
    let raw_sigma = config.sigma_constant * opt_hat / config.gamma;
    let sigma = raw_sigma.clamp(1e-3, ceiling);
    loc.sigma = Some(sigma);
    if sigma != raw_sigma {
        loc.sigma_clamped = true;
        report.flag("sigma_clamped");
    }
    let params = LocalizationParams::new(init.w0.clone(), sigma, config.gamma, alpha)?;
    let rng = RngStream::new(config.seed, 0).substream(LOCALIZATION_STREAM);
    let (accepted, acc) = rejection_sample(&pool, &params, &rng)?;
    loc.offered = Some(acc.offered);
    loc.accepted = Some(acc.accepted);
    loc.acceptance_rate = Some(acc.rate);
    let whitened = whiten(&accepted, &params.w0, sigma)?;
    sw.lap(&mut report, "localization");

    let inner_eps = config.inner_eps.unwrap_or(alpha * config.gamma);
    loc.inner_eps = Some(inner_eps);
    let k_theory = (1.0 / inner_eps.powi(4)).ceil();
    let degree = config
        .inner_degree
        .unwrap_or_else(|| k_theory.min(config.inner_degree_cap as f64) as usize);
    let eta = config.inner_eta.unwrap_or(inner_eps * inner_eps / 64.0);
    report.parameters = vec![
        ParameterRecord::plain("inner_eps", alpha * config.gamma, inner_eps),
        ParameterRecord::plain("inner_degree", k_theory, degree as f64),
        ParameterRecord::plain("inner_eta", inner_eps * inner_eps / 64.0, eta),
        ParameterRecord::plain("sigma", config.sigma_constant * opt_hat / config.gamma, sigma),
    ];
    let n_reg = (whitened.len() as f64 * REGRESSION_SHARE).floor() as usize;
    if n_reg == 0 || n_reg == whitened.len() {
        return Err(Error::Usage(format!(
            "only {} examples accepted; too few for the localized learner",
            whitened.len()
        )));
    }
    let pipeline = PipelineParams {
        eps: inner_eps,
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
    let inner = run_pipeline(
        &whitened.slice(0, n_reg),
        &whitened.slice(n_reg, whitened.len()),
        &pipeline,
        &mut report,
        &mut sw,
    )?;

    let candidate = match &inner.selection.classifier {
        Classifier::Halfspace(h) => Some(unwhiten_hypothesis(h, &params.w0, sigma)?),
        Classifier::Constant { .. } => {
            report.flag("inner_constant");
            None
        }
    };
    let (chosen, check_err) = match candidate {
        Some(h) => {
            let v = validate_bias_angle(&h, &params, config.kappa);
            let check_h = Classifier::Halfspace(h.clone()).error_rate(&check)?;
            loc.check_errors = Some([check_h0, check_h]);
            let passed = v.passed;
            loc.validation = Some(v);
            if passed {
                (h, check_h)
            } else {
                report.flag("validation_failed");
                if check_h < check_h0 { (h, check_h) } else { (h0, check_h0) }
            }
        }
        None => {
            report.flag("validation_failed");
            (h0, check_h0)
        }
    };
    sw.lap(&mut report, "finalize");
    finish(report, loc, chosen, check_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, NoiseSpec, PlantedModel};

    fn rng(seed: u64) -> RngStream {
        RngStream::new(seed, 0)
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        normalized(v).unwrap()
    }

    #[test]
    fn chow_direction_on_clean_and_noisy_data() {
        for (noise, tol, seed) in [(NoiseSpec::Clean, 0.05, 1u64), (NoiseSpec::Rcn { rate: 0.1 }, 0.1, 2)] {
            let g = generate(&PlantedModel::halfspace(5, noise), 100_000, &rng(seed)).unwrap();
            let init = init_constant_factor(&g.batch).unwrap();
            assert!(!init.fallback);
            assert!(angle(&init.w0, &g.w_star) <= tol, "{noise}: {}", angle(&init.w0, &g.w_star));
        }
    }

    #[test]
    fn constant_labels_trigger_fallback() {
        let pts = sample_gaussian(3, 100_000, &rng(3));
        let b = SampleBatch::new(pts, vec![1.0; 100_000], LabelMode::Halfspace).unwrap();
        let init = init_constant_factor(&b).unwrap();
        assert!(init.fallback);
        assert!((norm(&init.w0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_disambiguation() {
        let g = generate(
            &PlantedModel::halfspace(2, NoiseSpec::Clean).with_target(vec![-1.0, 0.0], 0.0),
            5000,
            &rng(4),
        )
        .unwrap();
        let init = init_constant_factor(&g.batch).unwrap();
        assert!(init.w0[0] < -0.9);
        assert!(init.error < 0.05);
    }

    #[test]
    fn acceptance_rate_and_covariance() {
        let d = 3;
        let n = 1_000_000;
        let pts = sample_gaussian(d, n, &rng(5));
        let b = SampleBatch::new(pts, vec![1.0; n], LabelMode::Halfspace).unwrap();
        let w0 = unit(&[1.0, -1.0, 0.5]);
        for (sigma, seed) in [(0.5, 1u64), (0.3, 2)] {
            let p = LocalizationParams::new(w0.clone(), sigma, 0.5, 0.0625).unwrap();
            let (acc, rep) = rejection_sample(&b, &p, &rng(seed).substream(9)).unwrap();
            assert!((rep.rate - sigma).abs() <= 3.0 * (sigma * (1.0 - sigma) / n as f64).sqrt());
            if sigma == 0.3 {
                let m = acc.len() as f64;
                let along: f64 = acc.points.rows().map(|x| dot(&w0, x).powi(2)).sum::<f64>() / m;
                assert!((along - 0.09).abs() <= 0.003, "{along}");
                let e3 = [0.0, 0.0, 1.0];
                let perp = unit(&{
                    let c = dot(&e3, &w0);
                    [e3[0] - c * w0[0], e3[1] - c * w0[1], e3[2] - c * w0[2]]
                });
                let var: f64 = acc.points.rows().map(|x| dot(&perp, x).powi(2)).sum::<f64>() / m;
                assert!((var - 1.0).abs() <= 0.01, "{var}");
            }
        }
    }

    #[test]
    fn sigma_near_one_accepts_everything() {
        let p = LocalizationParams { w0: vec![1.0, 0.0], sigma: 1.0, gamma: 0.5, alpha: 0.01 };
        assert_eq!(p.accept_probability(&[5.0, 1.0]), 1.0);
        let pts = sample_gaussian(2, 1000, &rng(6));
        let b = SampleBatch::new(pts, vec![1.0; 1000], LabelMode::Halfspace).unwrap();
        assert_eq!(rejection_sample(&b, &p, &rng(7)).unwrap().1.accepted, 1000);
    }

    #[test]
    fn params_respect_precondition() {
        let w0 = vec![1.0, 0.0];
        assert!(LocalizationParams::new(w0.clone(), 0.5, 0.5, 0.0625).is_ok());
        assert!(LocalizationParams::new(w0.clone(), 0.99, 0.5, 0.25).is_err());
        assert!(LocalizationParams::new(w0.clone(), 0.0, 0.5, 0.0625).is_err());
        assert!(LocalizationParams::new(vec![2.0, 0.0], 0.5, 0.5, 0.0625).is_err());
    }

    #[test]
    fn whitening_restores_isotropy() {
        let d = 3;
        let n = 200_000;
        let pts = sample_gaussian(d, n, &rng(8));
        let b = SampleBatch::new(pts, vec![1.0; n], LabelMode::Halfspace).unwrap();
        let w0 = unit(&[0.2, 1.0, -0.4]);
        let p = LocalizationParams::new(w0.clone(), 0.4, 0.5, 0.0625).unwrap();
        let (acc, _) = rejection_sample(&b, &p, &rng(9)).unwrap();
        let wh = whiten(&acc, &w0, 0.4).unwrap();
        let m = wh.len() as f64;
        for i in 0..d {
            for j in 0..d {
                let c: f64 = wh.points.rows().map(|x| x[i] * x[j]).sum::<f64>() / m;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c - want).abs() <= 0.02, "({i},{j}) = {c}");
            }
        }
        assert!(whiten(&acc, &w0, 0.0).is_err());
    }

    #[test]
    fn unwhitening_examples() {
        let w0 = unit(&[1.0, 1.0, 0.0]);
        let h = HalfspaceHypothesis::new(w0.clone(), 0.0).unwrap();
        let u = unwhiten_hypothesis(&h, &w0, 0.3).unwrap();
        assert!(angle(&u.w, &w0) < 1e-7 && u.t == 0.0);
        let perp = HalfspaceHypothesis::new(unit(&[1.0, -1.0, 0.0]), 0.4).unwrap();
        let u = unwhiten_hypothesis(&perp, &w0, 0.3).unwrap();
        assert!(u.w.iter().zip(&perp.w).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((u.t - 0.4).abs() < 1e-12);
    }

    #[test]
    fn unwhitened_hypothesis_agrees_pointwise() {
        let w0 = unit(&[0.3, -0.2, 0.9]);
        let h = HalfspaceHypothesis::new(unit(&[0.5, 0.5, 0.7]), -0.3).unwrap();
        let sigma = 0.35;
        let u = unwhiten_hypothesis(&h, &w0, sigma).unwrap();
        let pts = sample_gaussian(3, 2000, &rng(10));
        let b = SampleBatch::new(pts.clone(), vec![1.0; 2000], LabelMode::Halfspace).unwrap();
        let wh = whiten(&b, &w0, sigma).unwrap();
        for (x, xt) in pts.rows().zip(wh.points.rows()) {
            let margin = dot(&u.w, x) + u.t;
            if margin.abs() > 1e-9 {
                assert_eq!(u.predict(x), h.predict(xt));
            }
        }
    }

    #[test]
    fn validation_examples() {
        let p = LocalizationParams::new(vec![1.0, 0.0], 0.2, 0.4, 0.05).unwrap();
        let ok = validate_bias_angle(&HalfspaceHypothesis::new(vec![1.0, 0.0], 0.0).unwrap(), &p, 4.0);
        assert!(ok.passed && ok.angle == 0.0 && ok.bias == 0.0);
        let bad = validate_bias_angle(&HalfspaceHypothesis::new(vec![0.0, 1.0], 0.0).unwrap(), &p, 4.0);
        assert!(!bad.passed);
        assert!((bad.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn disagreement_examples() {
        let e1 = Classifier::Halfspace(HalfspaceHypothesis::new(vec![1.0, 0.0], 0.0).unwrap());
        let e2 = Classifier::Halfspace(HalfspaceHypothesis::new(vec![0.0, 1.0], 0.0).unwrap());
        let same = disagreement_mc(&e1, &e1, 2, 10_000, &rng(11), None).unwrap();
        assert_eq!(same.p, 0.0);
        let q = disagreement_mc(&e1, &e2, 2, 100_000, &rng(12), None).unwrap();
        assert!((q.p - 0.5).abs() <= 0.005, "{}", q.p);
        let diag = Classifier::Halfspace(HalfspaceHypothesis::new(unit(&[1.0, 1.0]), 0.0).unwrap());
        let q = disagreement_mc(&e1, &diag, 2, 100_000, &rng(12), None).unwrap();
        assert!((q.p - 0.25).abs() <= 0.005, "{}", q.p);
        assert!((gaussian_band_mass(0.0, 1.0) - 0.341_344_746_068_542_9).abs() < 1e-14);
        assert_eq!(gaussian_band_mass(1.0, 0.0), gaussian_band_mass(0.0, 1.0));
    }

    #[test]
    fn clean_data_takes_early_exit() {
        let g = generate(&PlantedModel::halfspace(4, NoiseSpec::Clean), 50_000, &rng(13)).unwrap();
        let cfg = PtasConfig { eps: 0.1, ..Default::default() };
        let out = learn_ptas(&cfg, &g.batch).unwrap();
        assert!(out.report.has_flag("early_exit"));
        let test = generate(&PlantedModel::halfspace(4, NoiseSpec::Clean).with_target(g.w_star.clone(), 0.0), 50_000, &rng(14)).unwrap();
        let err = Classifier::Halfspace(out.hypothesis).error_rate(&test.batch).unwrap();
        assert!(err <= 0.05, "{err}");
    }

    #[test]
    fn config_validation() {
        PtasConfig::default().validate().unwrap();
        assert!(PtasConfig { gamma: 0.0, ..Default::default() }.validate().is_err());
        assert!(PtasConfig { init_fraction: 0.6, check_fraction: 0.5, ..Default::default() }.validate().is_err());
        let c = PtasConfig { inner_degree: Some(3), inner_eta: Some(0.05), ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<PtasConfig>(&text).unwrap(), c);
    }
}
