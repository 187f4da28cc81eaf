use halfspace_core::datasets::{generate, population_opt, NoiseSpec, PlantedModel};
use halfspace_core::gaussian::RngStream;
use halfspace_core::proper::{learn_proper_halfspace, ProperLearnerConfig};
use halfspace_core::{Error, Result};
use rayon::prelude::*;

use crate::{Status, SweepArgs};

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    /// Regression degree k.
    Degree,
    /// Random classification noise rate.
    Noise,
    /// Grid resolution ε.
    Eps,
}

impl Param {
    fn name(self) -> &'static str {
        match self {
            Param::Degree => "degree",
            Param::Noise => "noise",
            Param::Eps => "eps",
        }
    }
}

pub const HEADER: [&str; 11] = [
    "param",
    "value",
    "seed",
    "degree",
    "eps",
    "noise",
    "train_error",
    "holdout_error",
    "test_error",
    "population_opt",
    "subspace_dim",
];

struct Run {
    value: f64,
    seed: u64,
}

fn one_run(a: &SweepArgs, run: &Run) -> Result<Vec<String>> {
    let mut cfg = ProperLearnerConfig { eps: a.eps, seed: run.seed, degree_override: Some(a.degree), ..Default::default() };
    let mut noise = a.model;
    match a.param {
        Param::Degree => cfg.degree_override = Some(run.value as usize),
        Param::Eps => cfg.eps = run.value,
        Param::Noise => noise = NoiseSpec::Rcn { rate: run.value },
    }
    let model = PlantedModel::halfspace(a.d, noise);
    let train = generate(&model, a.n, &RngStream::new(run.seed, 0))?;
    let test_model = model.clone().with_target(train.w_star.clone(), 0.0);
    let test = generate(&test_model, a.n_test, &RngStream::new(run.seed, 1))?;
    let out = learn_proper_halfspace(&cfg, &train.batch)?;
    let test_err = out.classifier.error_rate(&test.batch)?;
    let opt = population_opt(&test_model).value();
    let f = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    Ok(vec![
        a.param.name().to_string(),
        run.value.to_string(),
        run.seed.to_string(),
        cfg.degree_override.unwrap_or(0).to_string(),
        cfg.eps.to_string(),
        noise.to_string(),
        f(out.report.errors.train),
        f(out.report.errors.holdout),
        test_err.to_string(),
        f(opt),
        out.subspace.dim().to_string(),
    ])
}

pub fn run(a: &SweepArgs) -> Result<Status> {
    let values = a
        .values
        .iter()
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::config("values", format!("cannot parse `{v}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if a.param == Param::Degree && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(Error::config("values", "degrees must be non-negative integers"));
    }
    let total = values.len() as f64 * a.seeds as f64;
    if total > a.cap as f64 {
        return Err(Error::resource("sweep", total, a.cap as f64));
    }
    let runs: Vec<Run> = values
        .iter()
        .flat_map(|&value| (0..a.seeds).map(move |s| Run { value, seed: a.seed + s }))
        .collect();
    let rows = runs.par_iter().map(|r| one_run(a, r)).collect::<Result<Vec<_>>>()?;
    let path = a.output.path("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(HEADER)?;
    for row in &rows {
        w.write_record(row)?;
    }
    w.flush()?;
    println!("sweep: {} runs over {} -> {}", rows.len(), a.param.name(), path.display());
    Ok(Status::Ok)
}
