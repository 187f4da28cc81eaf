//! Run reports: every learner fills one, serialized as key-ordered JSON.
//!
//! Optional sections serialize as `null` rather than being omitted, so every
//! report carries the same key set for a given schema version.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datasets::PopulationOpt;

pub const SCHEMA_VERSION: u32 = 1;

/// Key removed by [`RunReport::deterministic_json`].
pub const TIMINGS_KEY: &str = "timings";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStats {
    pub degree: usize,
    pub features: usize,
    pub samples: usize,
    pub ridge: f64,
    pub solver: String,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub repeats: usize,
    pub parseval_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceStats {
    pub eta: f64,
    pub trace: f64,
    /// All eigenvalues of the influence matrix, descending.
    pub spectrum: Vec<f64>,
    pub subspace_dim: usize,
    /// `trace / eta`, the a-priori bound on the subspace dimension.
    pub dimension_bound: f64,
    pub top_eigenvector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub eps: f64,
    pub subspace_dim: usize,
    pub directions: usize,
    pub thresholds: usize,
    pub size: usize,
    pub holdout: usize,
    pub recommended_holdout: usize,
    pub selected_index: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub train: Option<f64>,
    pub holdout: Option<f64>,
    pub test: Option<f64>,
    pub oracle_opt: Option<f64>,
    pub population_opt: Option<PopulationOpt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationStats {
    pub bias: f64,
    pub angle: f64,
    pub bound: f64,
    pub kappa: f64,
    pub passed: bool,
    /// `w·w0` and its lower bound `(1 + σ²tan²(πα))^{-1/2}`.
    pub correlation: f64,
    pub correlation_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    pub init_direction: Vec<f64>,
    pub init_error: f64,
    pub init_fallback: bool,
    pub opt_estimate: f64,
    pub early_exit: bool,
    pub gamma: f64,
    pub alpha: f64,
    pub sigma: Option<f64>,
    pub sigma_clamped: bool,
    pub offered: Option<usize>,
    pub accepted: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub inner_eps: Option<f64>,
    pub validation: Option<ValidationStats>,
    /// Check-split errors of the initializer and the localized candidate.
    pub check_errors: Option<[f64; 2]>,
}

/// A schedule parameter: the value the theory asks for and the one used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecord {
    pub name: String,
    /// `None` when the theoretical value overflows a double.
    pub theoretical: Option<f64>,
    pub theoretical_log10: f64,
    pub used: f64,
}

impl ParameterRecord {
    pub fn new(name: &str, theoretical_log10: f64, used: f64) -> Self {
        let t = 10f64.powf(theoretical_log10);
        Self {
            name: name.to_string(),
            theoretical: t.is_finite().then_some(t),
            theoretical_log10,
            used,
        }
    }

    pub fn plain(name: &str, theoretical: f64, used: f64) -> Self {
        Self {
            name: name.to_string(),
            theoretical: Some(theoretical),
            theoretical_log10: theoretical.log10(),
            used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub algorithm: String,
    pub config: Value,
    pub regression: Option<RegressionStats>,
    pub influence: Option<InfluenceStats>,
    pub grid: Option<GridStats>,
    pub hypothesis: Option<Value>,
    pub errors: ErrorStats,
    pub localization: Option<LocalizationStats>,
    pub parameters: Vec<ParameterRecord>,
    pub flags: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(algorithm: &str, config: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            config,
            regression: None,
            influence: None,
            grid: None,
            hypothesis: None,
            errors: ErrorStats::default(),
            localization: None,
            parameters: vec![],
            flags: vec![],
            timings: BTreeMap::new(),
        }
    }

    pub fn flag(&mut self, name: &str) {
        if !self.flags.iter().any(|f| f == name) {
            self.flags.push(name.to_string());
        }
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.iter().any(|f| f == name)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report fields are serializable")
    }

    /// Pretty JSON with keys in sorted order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }

    /// The report without timings; equal configurations give equal output.
    pub fn deterministic_json(&self) -> String {
        let mut v = self.to_value();
        if let Value::Object(map) = &mut v {
            map.remove(TIMINGS_KEY);
        }
        serde_json::to_string_pretty(&v).expect("serializable")
    }
}

/// Records stage wall-clock times into a report.
pub struct Stopwatch {
    last: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self { last: Instant::now() }
    }

    /// Seconds since the previous lap, stored under `stage`.
    pub fn lap(&mut self, report: &mut RunReport, stage: &str) {
        let now = Instant::now();
        report
            .timings
            .insert(stage.to_string(), now.duration_since(self.last).as_secs_f64());
        self.last = now;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_sections_are_always_present() {
        let r = RunReport::new("proper", serde_json::json!({"eps": 0.2}));
        let v = r.to_value();
        for key in [
            "schema_version",
            "algorithm",
            "config",
            "regression",
            "influence",
            "grid",
            "hypothesis",
            "errors",
            "localization",
            "parameters",
            "flags",
            "timings",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for key in ["train", "holdout", "test", "oracle_opt", "population_opt"] {
            assert!(v["errors"].get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn json_is_key_ordered_and_round_trips() {
        let mut r = RunReport::new("ptas", serde_json::json!({"z": 1, "a": 2}));
        r.flag("validation_failed");
        r.flag("validation_failed");
        r.errors.population_opt = Some(PopulationOpt::UpperBound(0.05));
        r.parameters.push(ParameterRecord::new("grid_size", 400.0, 1e4));
        r.timings.insert("total".into(), 1.5);
        let text = r.to_json();
        assert!(text.find("\"algorithm\"").unwrap() < text.find("\"config\"").unwrap());
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.flags.len(), 1);
        assert!(r.parameters[0].theoretical.is_none());
        assert!(!r.deterministic_json().contains("timings"));
    }
}
