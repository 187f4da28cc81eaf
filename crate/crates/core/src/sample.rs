//! Point clouds and labeled batches.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major `n × d` block of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Usage("points must have dimension at least 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Usage(format!(
                "{} coordinates do not split into rows of length {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Rows `start..end` as a new block.
    pub fn slice(&self, start: usize, end: usize) -> Points {
        Points {
            dim: self.dim,
            coords: self.coords[start * self.dim..end * self.dim].to_vec(),
        }
    }
}

/// Label convention of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// Labels in {−1, +1}.
    Halfspace,
    /// Real labels, nominally in [−1, 1].
    Relu,
}

impl LabelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelMode::Halfspace => "halfspace",
            LabelMode::Relu => "relu",
        }
    }
}

impl std::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halfspace" => Ok(LabelMode::Halfspace),
            "relu" => Ok(LabelMode::Relu),
            other => Err(Error::config("mode", format!("unknown label mode `{other}`"))),
        }
    }
}

/// Points with one label each.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: Points,
    pub labels: Vec<f64>,
    pub mode: LabelMode,
}

impl SampleBatch {
    /// Builds a batch, checking shapes and that labels are finite and, in
    /// halfspace mode, exactly ±1.
    pub fn new(points: Points, labels: Vec<f64>, mode: LabelMode) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::Usage(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|y| !y.is_finite()) {
            return Err(Error::Data(format!("label {i} is not finite")));
        }
        if mode == LabelMode::Halfspace {
            if let Some(i) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
                return Err(Error::Data(format!(
                    "label {i} = {} is not ±1 in halfspace mode",
                    labels[i]
                )));
            }
        }
        if let Some(i) = points.coords().iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "coordinate {} of point {} is not finite",
                i % points.dim(),
                i / points.dim()
            )));
        }
        Ok(Self {
            points,
            labels,
            mode,
        })
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Examples `start..end` as a new batch.
    pub fn slice(&self, start: usize, end: usize) -> SampleBatch {
        SampleBatch {
            points: self.points.slice(start, end),
            labels: self.labels[start..end].to_vec(),
            mode: self.mode,
        }
    }

    /// Splits off the first `n` examples.
    pub fn split_at(&self, n: usize) -> (SampleBatch, SampleBatch) {
        (self.slice(0, n), self.slice(n, self.len()))
    }

    pub fn mean_sq_label(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().map(|y| y * y).sum::<f64>() / self.len() as f64
    }
}
