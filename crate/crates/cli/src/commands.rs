use std::fs;
use std::path::Path;

use halfspace_core::cover::Classifier;
use halfspace_core::datasets::{generate as draw, load_csv, opt_oracle_grid, population_opt, save_csv, PlantedModel, PopulationOpt};
use halfspace_core::gaussian::RngStream;
use halfspace_core::proper::{learn_proper_halfspace, ProperLearnerConfig};
use halfspace_core::ptas::{learn_ptas, PtasConfig};
use halfspace_core::relu::{learn_relu as fit_relu, ReluLearnerConfig};
use halfspace_core::report::RunReport;
use halfspace_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{DataArgs, GenerateArgs, LearnHalfspaceArgs, LearnReluArgs, PtasArgs, Status};

/// Sidecar written by `generate --meta`.
#[derive(Debug, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub model: PlantedModel,
    pub n: usize,
    pub seed: u64,
    pub corrupted: usize,
    pub population_opt: PopulationOpt,
}

pub fn generate(a: &GenerateArgs) -> Result<Status> {
    let mut model = PlantedModel { kind: a.kind, dim: a.d, w_star: a.w_star.clone(), t_star: a.t_star, noise: a.model };
    model.validate()?;
    let g = draw(&model, a.n, &RngStream::new(a.seed, 0))?;
    let path = a.output.path("data.csv");
    save_csv(&g.batch, &path)?;
    if let Some(meta) = &a.meta {
        model.w_star = Some(g.w_star.clone());
        let m = GenerationMeta { population_opt: population_opt(&model), model, n: a.n, seed: a.seed, corrupted: g.corrupted };
        fs::write(meta, serde_json::to_string_pretty(&m)?)?;
    }
    println!(
        "generate: {} {} samples, d = {}, noise {}, {} corrupted -> {}",
        a.n,
        a.kind.as_str(),
        a.d,
        a.model,
        g.corrupted,
        path.display()
    );
    Ok(Status::Ok)
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::Usage(format!("config {}: {e}", p.display()))),
    }
}

fn set<T>(field: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *field = v;
    }
}

fn print_config<T: Serialize>(config: &T) -> Result<Status> {
    println!("{}", serde_json::to_string_pretty(config)?);
    Ok(Status::Ok)
}

fn attach_truth(report: &mut RunReport, data: &DataArgs) -> Result<()> {
    if let Some(p) = &data.truth {
        let meta: GenerationMeta = serde_json::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::Usage(format!("metadata {}: {e}", p.display())))?;
        report.errors.population_opt = Some(meta.population_opt);
    }
    Ok(())
}

fn write_report(report: &RunReport, data: &DataArgs, name: &str) -> Result<String> {
    let path = data.output.path(name);
    fs::write(&path, report.to_json())?;
    Ok(path.display().to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

pub fn learn_halfspace(a: &LearnHalfspaceArgs) -> Result<Status> {
    let mut cfg: ProperLearnerConfig = load_config(a.data.config.as_deref())?;
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.delta, a.delta);
    set(&mut cfg.repeats, a.repeats);
    set(&mut cfg.seed, a.seed);
    set(&mut cfg.search, a.search.map(Into::into));
    if a.degree.is_some() {
        cfg.degree_override = a.degree;
    }
    if a.eta.is_some() {
        cfg.eta_override = a.eta;
    }
    if a.n_regression.is_some() {
        cfg.n_regression = a.n_regression;
    }
    if a.n_holdout.is_some() {
        cfg.n_holdout = a.n_holdout;
    }
    if a.data.print_config {
        cfg.validate()?;
        return print_config(&cfg);
    }
    let data = load_csv(&a.data.data)?;
    let mut out = learn_proper_halfspace(&cfg, &data)?;
    let test = a.data.test.as_deref().map(load_csv).transpose()?;
    if let Some(t) = &test {
        out.report.errors.test = Some(out.classifier.error_rate(t)?);
    }
    if let Some(res) = a.oracle_resolution {
        let batch = test.as_ref().unwrap_or(&data);
        out.report.errors.oracle_opt = Some(opt_oracle_grid(batch, res)?.error_rate);
    }
    attach_truth(&mut out.report, &a.data)?;
    let path = write_report(&out.report, &a.data, "learn-halfspace.json")?;
    println!(
        "learn-halfspace: holdout {}, test {}, subspace dim {}, grid {} -> {path}",
        fmt_opt(out.report.errors.holdout),
        fmt_opt(out.report.errors.test),
        out.subspace.dim(),
        out.report.grid.as_ref().map_or(0, |g| g.size),
    );
    Ok(Status::Ok)
}

pub fn ptas(a: &PtasArgs) -> Result<Status> {
    let mut cfg: PtasConfig = load_config(a.data.config.as_deref())?;
    set(&mut cfg.gamma, a.gamma);
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.delta, a.delta);
    set(&mut cfg.seed, a.seed);
    set(&mut cfg.kappa, a.kappa);
    if a.inner_eps.is_some() {
        cfg.inner_eps = a.inner_eps;
    }
    if a.inner_degree.is_some() {
        cfg.inner_degree = a.inner_degree;
    }
    if a.inner_eta.is_some() {
        cfg.inner_eta = a.inner_eta;
    }
    if a.data.print_config {
        cfg.validate()?;
        return print_config(&cfg);
    }
    let data = load_csv(&a.data.data)?;
    let mut out = learn_ptas(&cfg, &data)?;
    if let Some(t) = a.data.test.as_deref().map(load_csv).transpose()? {
        out.report.errors.test = Some(Classifier::Halfspace(out.hypothesis.clone()).error_rate(&t)?);
    }
    attach_truth(&mut out.report, &a.data)?;
    let path = write_report(&out.report, &a.data, "ptas.json")?;
    let loc = out.report.localization.as_ref();
    let validation = match loc.and_then(|l| l.validation.as_ref()) {
        Some(v) if v.passed => "passed",
        Some(_) => "FAILED",
        None if loc.is_some_and(|l| l.early_exit) => "skipped (early exit)",
        None => "FAILED",
    };
    println!(
        "ptas: check error {}, test {}, σ {}, validation {validation} -> {path}",
        fmt_opt(out.report.errors.holdout),
        fmt_opt(out.report.errors.test),
        fmt_opt(loc.and_then(|l| l.sigma)),
    );
    Ok(if out.report.has_flag("validation_failed") { Status::Flagged } else { Status::Ok })
}

pub fn learn_relu(a: &LearnReluArgs) -> Result<Status> {
    let mut cfg: ReluLearnerConfig = load_config(a.data.config.as_deref())?;
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.delta, a.delta);
    set(&mut cfg.seed, a.seed);
    if a.degree.is_some() {
        cfg.degree_override = a.degree;
    }
    if a.eta.is_some() {
        cfg.eta_override = a.eta;
    }
    if a.data.print_config {
        cfg.validate()?;
        return print_config(&cfg);
    }
    let data = load_csv(&a.data.data)?;
    let mut out = fit_relu(&cfg, &data)?;
    if let Some(t) = a.data.test.as_deref().map(load_csv).transpose()? {
        out.report.errors.test = Some(out.hypothesis.mse(&t)?);
    }
    attach_truth(&mut out.report, &a.data)?;
    let path = write_report(&out.report, &a.data, "learn-relu.json")?;
    println!(
        "learn-relu: holdout mse {}, test mse {}, subspace dim {} -> {path}",
        fmt_opt(out.report.errors.holdout),
        fmt_opt(out.report.errors.test),
        out.subspace.dim(),
    );
    Ok(Status::Ok)
}
