//! Averaged curves and their CSV / JSON serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::entropy::EntropyEstimate;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "label",
    "snr_db",
    "mean_bits",
    "std_error_bits",
    "realizations",
    "mc_samples",
    "power_ratio",
];

/// Configuration entries chosen for this artifact rather than fixed by the model.
pub const ARTIFACT_CHOICES: [&str; 3] = ["snr_grid_db", "realizations", "power_split.ratios"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    /// `α₁²/α₂²`, `None` when undefined.
    pub power_ratio: Option<f64>,
    pub mean_bits: f64,
    pub std_error_bits: f64,
    pub realizations: usize,
    /// Samples per entropy estimate, 0 for quadrature.
    pub mc_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl MiCurve {
    pub fn value_at_snr(&self, snr_db: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }
}

/// Mean over realizations and its standard error `sd/√R`.
///
/// With a single realization the estimator's own error is reported instead.
pub fn average(values: &[EntropyEstimate]) -> Result<(f64, f64)> {
    match values {
        [] => Err(Error::Aggregation("no realizations to average".into())),
        [single] => Ok((single.value, single.std_error)),
        _ => {
            let n = values.len() as f64;
            let mean = values.iter().map(|v| v.value).sum::<f64>() / n;
            let var = values.iter().map(|v| (v.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok((mean, (var / n).sqrt()))
        }
    }
}

/// Curves plus the configuration that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub curves: Vec<MiCurve>,
    /// Human-readable notes on representation choices made in the output.
    pub notes: Vec<String>,
}

impl ExperimentOutput {
    pub fn curve(&self, label: &str) -> Option<&MiCurve> {
        self.curves.iter().find(|c| c.label == label)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER)?;
        for curve in &self.curves {
            for p in &curve.points {
                writer.write_record([
                    curve.label.clone(),
                    p.snr_db.to_string(),
                    p.mean_bits.to_string(),
                    p.std_error_bits.to_string(),
                    p.realizations.to_string(),
                    p.mc_samples.to_string(),
                    p.power_ratio.map(|r| r.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Aggregation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn sidecar_json(&self) -> Result<String> {
        let sidecar = Sidecar {
            figure: self.config.figure.name(),
            seed: self.config.seed,
            method: &self.config.method,
            mc_samples: self.config.effective_mc_samples(),
            labels: self.curves.iter().map(|c| c.label.as_str()).collect(),
            artifact_choices: ARTIFACT_CHOICES,
            notes: &self.notes,
            config: &self.config,
        };
        Ok(serde_json::to_string_pretty(&sidecar)?)
    }

    /// Writes the CSV to `path` and the sidecar next to it with a `.json` extension.
    /// Returns the sidecar path.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|source| io_error(dir, source))?;
        }
        fs::write(path, self.to_csv_string()?).map_err(|source| io_error(path, source))?;
        let sidecar = path.with_extension("json");
        fs::write(&sidecar, self.sidecar_json()?).map_err(|source| io_error(&sidecar, source))?;
        Ok(sidecar)
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    figure: &'a str,
    seed: u64,
    method: &'a str,
    mc_samples: usize,
    labels: Vec<&'a str>,
    artifact_choices: [&'a str; 3],
    notes: &'a [String],
    config: &'a ExperimentConfig,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}
