//! Planted benchmark models, label corruption, small-dimension OPT oracles
//! and the dataset CSV format.
//!
//! CSV layout: a header record `d,<d>,n,<n>,mode,<halfspace|relu>` followed
//! by `n` records `x_1,…,x_d,y`, every value written in shortest round-trip
//! decimal form.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{Classifier, HalfspaceHypothesis};
use crate::gaussian::{sample_gaussian, std_normal_cdf, std_normal_quantile, RngStream};
use crate::linalg::{dot, normalized};
use crate::sample::{LabelMode, Points, SampleBatch};
use crate::{Error, Result};

/// Label corruption applied after the planted labels are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseSpec {
    Clean,
    /// Each label flipped independently with probability `rate`.
    Rcn { rate: f64 },
    /// Labels with planted margin `|w*·x + t*| ≤ width` flipped.
    BandFlip { width: f64 },
    /// The first `⌊budget·n⌋` examples with margin at least `radius` flipped.
    FarFlip { budget: f64, radius: f64 },
    /// ReLU labels plus `U[−amplitude, amplitude]`, clipped to `[−1, 1]`.
    AdditiveUniform { amplitude: f64 },
}

impl NoiseSpec {
    pub fn validate(&self, kind: LabelMode) -> Result<()> {
        let bad = |msg: String| Err(Error::config("noise", msg));
        let unit_half = |v: f64| (0.0..=0.5).contains(&v);
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        match *self {
            NoiseSpec::Clean => Ok(()),
            NoiseSpec::Rcn { rate } if !unit_half(rate) => bad(format!("rcn rate {rate} not in [0, 1/2]")),
            NoiseSpec::BandFlip { width } if !nonneg(width) => bad(format!("band width {width} must be ≥ 0")),
            NoiseSpec::FarFlip { budget, radius } if !unit_half(budget) || !nonneg(radius) => {
                bad(format!("far-flip budget {budget} / radius {radius} out of range"))
            }
            NoiseSpec::AdditiveUniform { amplitude } if !nonneg(amplitude) => {
                bad(format!("additive amplitude {amplitude} must be ≥ 0"))
            }
            NoiseSpec::AdditiveUniform { .. } if kind != LabelMode::Relu => {
                bad("additive noise applies to relu labels only".into())
            }
            NoiseSpec::Rcn { .. } | NoiseSpec::BandFlip { .. } | NoiseSpec::FarFlip { .. }
                if kind != LabelMode::Halfspace =>
            {
                bad(format!("`{self}` applies to halfspace labels only"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Clean => write!(f, "clean"),
            NoiseSpec::Rcn { rate } => write!(f, "rcn:{rate}"),
            NoiseSpec::BandFlip { width } => write!(f, "band:{width}"),
            NoiseSpec::FarFlip { budget, radius } => write!(f, "far:{budget}:{radius}"),
            NoiseSpec::AdditiveUniform { amplitude } => write!(f, "additive:{amplitude}"),
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    /// Parses `clean`, `rcn:<rate>`, `band:<width>`, `far:<budget>:<radius>`
    /// or `additive:<amplitude>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::config("noise", format!("cannot parse `{s}`")))
        };
        let spec = match (parts[0], parts.len()) {
            ("clean", 1) => NoiseSpec::Clean,
            ("rcn", 2) => NoiseSpec::Rcn { rate: num(1)? },
            ("band", 2) => NoiseSpec::BandFlip { width: num(1)? },
            ("far", 3) => NoiseSpec::FarFlip { budget: num(1)?, radius: num(2)? },
            ("additive", 2) => NoiseSpec::AdditiveUniform { amplitude: num(1)? },
            _ => return Err(Error::config("noise", format!("unknown noise model `{s}`"))),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for NoiseSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseSpec> for String {
    fn from(n: NoiseSpec) -> String {
        n.to_string()
    }
}

/// A target `sign(w*·x + t*)` or `ρ(w*·x + t*)` plus label noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub kind: LabelMode,
    pub dim: usize,
    /// Unit normal; drawn from the seed when absent.
    #[serde(default)]
    pub w_star: Option<Vec<f64>>,
    #[serde(default)]
    pub t_star: f64,
    pub noise: NoiseSpec,
}

impl PlantedModel {
    pub fn halfspace(dim: usize, noise: NoiseSpec) -> Self {
        Self { kind: LabelMode::Halfspace, dim, w_star: None, t_star: 0.0, noise }
    }

    pub fn relu(dim: usize, noise: NoiseSpec) -> Self {
        Self { kind: LabelMode::Relu, dim, w_star: None, t_star: 0.0, noise }
    }

    pub fn with_target(mut self, w_star: Vec<f64>, t_star: f64) -> Self {
        self.w_star = Some(w_star);
        self.t_star = t_star;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if let Some(w) = &self.w_star {
            if w.len() != self.dim {
                return Err(Error::config("w_star", format!("length {} ≠ d = {}", w.len(), self.dim)));
            }
            if normalized(w).is_none() {
                return Err(Error::config("w_star", "must be non-zero and finite"));
            }
        }
        if !self.t_star.is_finite() {
            return Err(Error::config("t_star", "must be finite"));
        }
        self.noise.validate(self.kind)
    }
}

/// Uniformly random unit vector.
pub fn random_unit(d: usize, rng: &RngStream) -> Vec<f64> {
    let mut i = 0;
    loop {
        if let Some(u) = normalized(&rng.substream(i).normals(d)) {
            return u;
        }
        i += 1;
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedBatch {
    pub batch: SampleBatch,
    pub w_star: Vec<f64>,
    pub t_star: f64,
    /// Number of labels flipped or perturbed by the noise model.
    pub corrupted: usize,
}

/// Draws `n` labeled examples. Points, noise and the planted normal use
/// separate substreams of `rng`.
pub fn generate(model: &PlantedModel, n: usize, rng: &RngStream) -> Result<GeneratedBatch> {
    model.validate()?;
    let d = model.dim;
    let w = match &model.w_star {
        Some(w) => normalized(w).expect("validated"),
        None => random_unit(d, &rng.substream(2)),
    };
    let t = model.t_star;
    let points = sample_gaussian(d, n, &rng.substream(0));
    let margins: Vec<f64> = points.rows().map(|x| dot(&w, x) + t).collect();
    let mut labels: Vec<f64> = match model.kind {
        LabelMode::Halfspace => margins.iter().map(|&m| if m >= 0.0 { 1.0 } else { -1.0 }).collect(),
        LabelMode::Relu => margins.iter().map(|&m| m.max(0.0)).collect(),
    };
    let noise_rng = rng.substream(1);
    let corrupted = match model.noise {
        NoiseSpec::Clean => 0,
        NoiseSpec::Rcn { rate } => {
            let u = noise_rng.uniforms(n);
            let mut c = 0;
            for (y, &ui) in labels.iter_mut().zip(&u) {
                if ui < rate {
                    *y = -*y;
                    c += 1;
                }
            }
            c
        }
        NoiseSpec::BandFlip { width } => {
            let mut c = 0;
            for (y, &m) in labels.iter_mut().zip(&margins) {
                if m.abs() <= width {
                    *y = -*y;
                    c += 1;
                }
            }
            c
        }
        NoiseSpec::FarFlip { budget, radius } => {
            let limit = (budget * n as f64).floor() as usize;
            let mut c = 0;
            for (y, &m) in labels.iter_mut().zip(&margins) {
                if c == limit {
                    break;
                }
                if m.abs() >= radius {
                    *y = -*y;
                    c += 1;
                }
            }
            c
        }
        NoiseSpec::AdditiveUniform { amplitude } => {
            let u = noise_rng.uniforms(n);
            for (y, &ui) in labels.iter_mut().zip(&u) {
                *y = (*y + amplitude * (2.0 * ui - 1.0)).clamp(-1.0, 1.0);
            }
            if amplitude > 0.0 { n } else { 0 }
        }
    };
    let batch = SampleBatch::new(points, labels, model.kind)?;
    Ok(GeneratedBatch { batch, w_star: w, t_star: t, corrupted })
}

/// Population OPT where a closed form exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PopulationOpt {
    Exact(f64),
    /// Error of the planted target; OPT is at most this.
    UpperBound(f64),
    Unknown,
}

impl PopulationOpt {
    pub fn value(&self) -> Option<f64> {
        match *self {
            PopulationOpt::Exact(v) | PopulationOpt::UpperBound(v) => Some(v),
            PopulationOpt::Unknown => None,
        }
    }
}

pub fn population_opt(model: &PlantedModel) -> PopulationOpt {
    match (model.kind, model.noise) {
        (_, NoiseSpec::Clean) => PopulationOpt::Exact(0.0),
        (LabelMode::Halfspace, NoiseSpec::Rcn { rate }) => PopulationOpt::Exact(rate),
        (LabelMode::Halfspace, NoiseSpec::BandFlip { width }) => {
            PopulationOpt::UpperBound(band_error(model.t_star, width))
        }
        _ => PopulationOpt::Unknown,
    }
}

/// Gaussian mass of `|z + t| ≤ width`.
fn band_error(t: f64, width: f64) -> f64 {
    std_normal_cdf(width - t) - std_normal_cdf(-width - t)
}

/// Band width `b` with `2Φ(b) − 1 = err`, for a homogeneous target.
pub fn band_width_for_error(err: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&err) {
        return Err(Error::config("band_error", format!("must lie in [0, 1), got {err}")));
    }
    Ok(std_normal_quantile(0.5 + err / 2.0))
}

pub const ORACLE_DIRECTION_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best: Classifier,
    pub errors: usize,
    pub error_rate: f64,
    pub directions: usize,
    /// Largest angle (radians) between any unit vector and the scanned set.
    pub angular_gap: f64,
}

/// Unit directions spaced about `resolution` radians apart, with the
/// largest angle from any unit vector to the set.
fn oracle_directions(d: usize, resolution: f64) -> (Vec<Vec<f64>>, f64) {
    use std::f64::consts::PI;
    match d {
        1 => (vec![vec![1.0], vec![-1.0]], 0.0),
        2 => {
            let k = (2.0 * PI / resolution).ceil() as usize;
            let dirs = (0..k)
                .map(|j| {
                    let a = 2.0 * PI * j as f64 / k as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect();
            (dirs, PI / k as f64)
        }
        _ => {
            let rings = (PI / resolution).ceil() as usize;
            let dpol = PI / rings as f64;
            let mut dirs = vec![];
            for r in 0..=rings {
                let theta = r as f64 * dpol;
                let ring_radius = theta.sin();
                if ring_radius < 1e-12 {
                    dirs.push(vec![0.0, 0.0, theta.cos().signum()]);
                    continue;
                }
                let k = (2.0 * PI * ring_radius / resolution).ceil() as usize;
                for j in 0..k {
                    let phi = 2.0 * PI * j as f64 / k as f64;
                    dirs.push(vec![ring_radius * phi.cos(), ring_radius * phi.sin(), theta.cos()]);
                }
            }
            // Half a ring along the meridian plus half an azimuth step along the ring.
            (dirs, dpol / 2.0 + resolution / 2.0)
        }
    }
}

/// Exhaustive empirical 0-1 minimizer over halfspaces in `d ≤ 3`.
///
/// Directions come from an angular grid of the given resolution; for each
/// direction every threshold is scanned exactly by sorting projections, so
/// the result is at least as good as any grid halfspace whose direction is in
/// the scanned set.
pub fn opt_oracle_grid(batch: &SampleBatch, angular_resolution: f64) -> Result<OracleResult> {
    let d = batch.dim();
    if d > 3 {
        return Err(Error::Usage(format!("grid oracle supports d ≤ 3, got {d}")));
    }
    if batch.mode != LabelMode::Halfspace || batch.is_empty() {
        return Err(Error::Usage("grid oracle needs a non-empty ±1 batch".into()));
    }
    if !(angular_resolution > 0.0 && angular_resolution.is_finite()) {
        return Err(Error::config("angular_resolution", "must be positive"));
    }
    let estimate = (2.0 * std::f64::consts::PI / angular_resolution).powi(d as i32 - 1);
    if estimate > ORACLE_DIRECTION_CAP as f64 {
        return Err(Error::resource("oracle directions", estimate, ORACLE_DIRECTION_CAP as f64));
    }
    let (dirs, gap) = oracle_directions(d, angular_resolution);
    let n = batch.len();
    let scans: Vec<(usize, usize, f64)> = dirs
        .par_iter()
        .map(|w| {
            let mut proj: Vec<(f64, bool)> = batch
                .points
                .rows()
                .zip(&batch.labels)
                .map(|(x, &y)| (dot(w, x), y > 0.0))
                .collect();
            proj.sort_by(|a, b| a.0.total_cmp(&b.0));
            let negatives = proj.iter().filter(|p| !p.1).count();
            // Cut c: the first c sorted points are predicted −1.
            let mut errs = negatives;
            let mut best = (errs, 0usize);
            for c in 1..=n {
                if proj[c - 1].1 {
                    errs += 1;
                } else {
                    errs -= 1;
                }
                if (c == n || proj[c].0 > proj[c - 1].0) && errs < best.0 {
                    best = (errs, c);
                }
            }
            let t = match best.1 {
                0 => f64::INFINITY,
                c if c == n => f64::NEG_INFINITY,
                c => -0.5 * (proj[c - 1].0 + proj[c].0),
            };
            (best.0, best.1, t)
        })
        .collect();
    let (di, &(errors, _, t)) = scans
        .iter()
        .enumerate()
        .min_by_key(|(_, s)| s.0)
        .expect("at least two directions");
    let best = if t == f64::INFINITY {
        Classifier::Constant { value: 1.0 }
    } else if t == f64::NEG_INFINITY {
        Classifier::Constant { value: -1.0 }
    } else {
        Classifier::Halfspace(HalfspaceHypothesis { w: dirs[di].clone(), t })
    };
    Ok(OracleResult {
        best,
        errors,
        error_rate: errors as f64 / n as f64,
        directions: dirs.len(),
        angular_gap: gap,
    })
}

pub fn write_csv<W: Write>(batch: &SampleBatch, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let d = batch.dim().to_string();
    let n = batch.len().to_string();
    w.write_record(["d", d.as_str(), "n", n.as_str(), "mode", batch.mode.as_str()])?;
    let mut record: Vec<String> = Vec::with_capacity(batch.dim() + 1);
    for (x, y) in batch.points.rows().zip(&batch.labels) {
        record.clear();
        record.extend(x.iter().map(|v| v.to_string()));
        record.push(y.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<SampleBatch> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Data("empty dataset file".into()))??;
    let field = |i: usize| header.get(i).map(str::trim);
    if header.len() != 6 || field(0) != Some("d") || field(2) != Some("n") || field(4) != Some("mode") {
        return Err(Error::Data(
            "header must read `d,<d>,n,<n>,mode,<halfspace|relu>`".into(),
        ));
    }
    let parse_count = |i: usize, name: &str| {
        field(i)
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| Error::Data(format!("header field `{name}` is not a count")))
    };
    let d = parse_count(1, "d")?;
    let n = parse_count(3, "n")?;
    let mode: LabelMode = field(5)
        .unwrap_or_default()
        .parse()
        .map_err(|_| Error::Data(format!("unknown mode `{}`", field(5).unwrap_or_default())))?;
    let mut coords = Vec::with_capacity(n.saturating_mul(d));
    let mut labels = Vec::with_capacity(n);
    for (line, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != d + 1 {
            return Err(Error::Data(format!(
                "row {} has {} fields, expected {}",
                line + 1,
                rec.len(),
                d + 1
            )));
        }
        for (j, v) in rec.iter().enumerate() {
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("row {}: `{v}` is not a number", line + 1)))?;
            if j < d {
                coords.push(v);
            } else {
                labels.push(v);
            }
        }
    }
    if labels.len() != n {
        return Err(Error::Data(format!("header declares {n} rows, found {}", labels.len())));
    }
    SampleBatch::new(Points::new(d, coords)?, labels, mode)
}

pub fn save_csv(batch: &SampleBatch, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(batch, f)
}

pub fn load_csv(path: &Path) -> Result<SampleBatch> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}
