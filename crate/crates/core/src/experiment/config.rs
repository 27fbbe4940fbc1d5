//! Experiment configuration: per-figure defaults, TOML overrides, validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineKind;
use crate::entropy::{EntropyEstimator, EstimatorParams, EstimatorRegistry};
use crate::error::{Error, Result};
use crate::system::SystemConfig;

pub const DEFAULT_SEED: u64 = 2017;
pub const DEFAULT_REALIZATIONS: usize = 200;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-10;

/// The experiments the runner knows how to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Per-user MI, lower bounds and baselines at a fixed power split.
    Fig1,
    /// Sum MI of every scheme over SNR.
    Fig2a,
    /// Per-user MI over the power ratio at fixed SNR.
    Fig2b,
    /// Randomized invariant checks.
    Props,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Props => "props",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PowerSplit {
    /// `α_k²` per user.
    Fixed { power_levels: Vec<f64> },
    /// Two users sharing `total`, swept over `α₁²/α₂²`.
    TotalPowerSweep { total: f64, ratios: Vec<f64> },
}

impl PowerSplit {
    /// `(α₁²/α₂²  or NaN when undefined, power levels)` for every point of the split.
    pub fn points(&self) -> Vec<(f64, Vec<f64>)> {
        match self {
            PowerSplit::Fixed { power_levels } => {
                let ratio = match power_levels.as_slice() {
                    [a, b] if *b > 0.0 => a / b,
                    _ => f64::NAN,
                };
                vec![(ratio, power_levels.clone())]
            }
            PowerSplit::TotalPowerSweep { total, ratios } => ratios
                .iter()
                .map(|&q| (q, vec![total * q / (1.0 + q), total / (1.0 + q)]))
                .collect(),
        }
    }

    fn validate(&self, num_users: usize) -> Result<()> {
        match self {
            PowerSplit::Fixed { power_levels } => {
                if power_levels.len() != num_users {
                    return Err(Error::Config(format!(
                        "power_split.power_levels has {} entries for {num_users} users",
                        power_levels.len()
                    )));
                }
            }
            PowerSplit::TotalPowerSweep { total, ratios } => {
                if num_users != 2 {
                    return Err(Error::Config(format!(
                        "total_power_sweep needs 2 users, got {num_users}"
                    )));
                }
                if !(total.is_finite() && *total > 0.0) {
                    return Err(Error::Config(format!(
                        "power_split.total must be positive, got {total}"
                    )));
                }
                check_increasing("power_split.ratios", ratios)?;
                if ratios.iter().any(|q| *q < 0.0) {
                    return Err(Error::Config("power_split.ratios must be >= 0".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!(
            "{name} contains non-finite value {v}"
        )));
    }
    if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "{name} must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `start, start + step, …` up to and including `stop` (within half a step).
pub fn snr_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub figure: Figure,
    /// Base system; `power_levels` and `signal_power` are overridden per sweep point.
    pub system: SystemConfig,
    pub snr_grid_db: Vec<f64>,
    pub power_split: PowerSplit,
    pub realizations: usize,
    /// Entropy estimator name, see [`EstimatorRegistry`].
    pub method: String,
    pub mc_samples: usize,
    pub quadrature_tolerance: f64,
    pub seed: u64,
    pub baselines: Vec<BaselineKind>,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `figure`: `M = 4`, `K = 2`, conventional SM, `σ_v² = 1`,
    /// 200 realizations, SNR grid -40..=40 dB in 2 dB steps (fig2b: 30 dB and a
    /// power-ratio sweep with `α₁² + α₂² = 5`).
    pub fn defaults(figure: Figure) -> Self {
        let system = SystemConfig::conventional_sm(4, vec![4.0, 1.0], 1.0, 1.0)
            .expect("default system is valid");
        let (snr_grid_db, power_split, baselines) = match figure {
            Figure::Fig2b => (
                vec![30.0],
                PowerSplit::TotalPowerSweep {
                    total: 5.0,
                    ratios: snr_range(0.0, 10.0, 0.5),
                },
                vec![],
            ),
            _ => (
                snr_range(-40.0, 40.0, 2.0),
                PowerSplit::Fixed {
                    power_levels: vec![4.0, 1.0],
                },
                vec![
                    BaselineKind::miso_noma_default(),
                    BaselineKind::sm_tdma_equal(2),
                ],
            ),
        };
        Self {
            figure,
            system,
            snr_grid_db,
            power_split,
            realizations: DEFAULT_REALIZATIONS,
            method: "quadrature".into(),
            mc_samples: DEFAULT_MC_SAMPLES,
            quadrature_tolerance: DEFAULT_QUADRATURE_TOLERANCE,
            seed: DEFAULT_SEED,
            baselines,
            output_path: PathBuf::from(format!("{}.csv", figure.name())),
        }
    }

    /// Defaults for `figure` overridden by a TOML document.
    pub fn from_toml_str(figure: Figure, text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = Self::defaults(figure);
        file.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(figure: Figure, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(figure, &text)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        check_increasing("snr_grid_db", &self.snr_grid_db)?;
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be >= 1".into()));
        }
        self.power_split.validate(self.system.num_users)?;
        for (_, levels) in self.power_split.points() {
            self.system.with_power_levels(levels)?;
        }
        for b in &self.baselines {
            b.validate(&self.system)?;
        }
        self.estimator()?;
        if self
            .system
            .codebook_sizes
            .iter()
            .any(|&n| n != self.system.num_tx_antennas)
        {
            return Err(Error::Config(format!(
                "conventional SM needs every codebook size equal to M = {}",
                self.system.num_tx_antennas
            )));
        }
        match self.figure {
            Figure::Fig1 | Figure::Fig2a | Figure::Props => {
                if self.system.num_users != 2 {
                    return Err(Error::Config(format!(
                        "{} needs num_users = 2",
                        self.figure.name()
                    )));
                }
                if !matches!(self.power_split, PowerSplit::Fixed { .. }) {
                    return Err(Error::Config(format!(
                        "{} needs power_split.mode = \"fixed\"",
                        self.figure.name()
                    )));
                }
            }
            Figure::Fig2b => {
                if !matches!(self.power_split, PowerSplit::TotalPowerSweep { .. }) {
                    return Err(Error::Config(
                        "fig2b needs power_split.mode = \"total_power_sweep\"".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn estimator_params(&self) -> EstimatorParams {
        EstimatorParams {
            tolerance: self.quadrature_tolerance,
            samples: self.mc_samples,
        }
    }

    pub fn estimator(&self) -> Result<Box<dyn EntropyEstimator>> {
        EstimatorRegistry::builtin()
            .create(&self.method, &self.estimator_params())
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Monte Carlo samples per entropy, zero for quadrature.
    pub fn effective_mc_samples(&self) -> usize {
        self.estimator().map(|e| e.sample_count()).unwrap_or(0)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SnrGrid {
    List(Vec<f64>),
    Range(SnrRange),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnrRange {
    start: f64,
    stop: f64,
    step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    num_tx_antennas: Option<usize>,
    num_users: Option<usize>,
    codebook_sizes: Option<Vec<usize>>,
    noise_power: Option<f64>,
}

/// On-disk form; every key optional, unknown keys rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: Option<SystemSection>,
    snr_grid_db: Option<SnrGrid>,
    power_split: Option<PowerSplit>,
    realizations: Option<usize>,
    method: Option<String>,
    mc_samples: Option<usize>,
    quadrature_tolerance: Option<f64>,
    seed: Option<u64>,
    baselines: Option<Vec<BaselineKind>>,
    output_path: Option<PathBuf>,
}

impl ConfigFile {
    fn apply(self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(split) = self.power_split {
            cfg.power_split = split;
        }
        if let Some(sys) = self.system {
            let m = sys.num_tx_antennas.unwrap_or(cfg.system.num_tx_antennas);
            let users = sys.num_users.unwrap_or(cfg.system.num_users);
            let sizes = sys.codebook_sizes.unwrap_or_else(|| vec![m; users]);
            if sizes.len() != users {
                return Err(Error::Config(format!(
                    "system.codebook_sizes has {} entries for {users} users",
                    sizes.len()
                )));
            }
            cfg.system.num_tx_antennas = m;
            cfg.system.num_users = users;
            cfg.system.codebook_sizes = sizes;
            if let Some(noise) = sys.noise_power {
                cfg.system.noise_power = noise;
                cfg.system.signal_power = noise;
            }
        }
        // Base power levels follow the first point of the split.
        if let Some((_, levels)) = cfg.power_split.points().into_iter().next() {
            cfg.system.power_levels = levels;
        }
        if let Some(grid) = self.snr_grid_db {
            cfg.snr_grid_db = match grid {
                SnrGrid::List(v) => v,
                SnrGrid::Range(r) => {
                    if !(r.step > 0.0 && r.stop >= r.start) {
                        return Err(Error::Config(format!(
                            "snr_grid_db range needs step > 0 and stop >= start, got {r:?}"
                        )));
                    }
                    snr_range(r.start, r.stop, r.step)
                }
            };
        }
        if let Some(v) = self.realizations {
            cfg.realizations = v;
        }
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = self.mc_samples {
            cfg.mc_samples = v;
        }
        if let Some(v) = self.quadrature_tolerance {
            cfg.quadrature_tolerance = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.baselines {
            cfg.baselines = v;
        }
        if let Some(v) = self.output_path {
            cfg.output_path = v;
        }
        Ok(())
    }
}
