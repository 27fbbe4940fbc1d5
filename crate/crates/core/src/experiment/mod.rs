//! Seeded experiment sweeps, curve output and the property suite.

mod config;
mod curves;
mod props;
mod runner;

pub use config::{
    snr_range, ExperimentConfig, Figure, PowerSplit, DEFAULT_MC_SAMPLES,
    DEFAULT_QUADRATURE_TOLERANCE, DEFAULT_REALIZATIONS, DEFAULT_SEED,
};
pub use curves::{average, CurvePoint, ExperimentOutput, MiCurve, ARTIFACT_CHOICES, CSV_HEADER};
pub use props::{run_property_suite, PropertyOutcome, PropertyReport};
pub use runner::{
    evaluate_sweep, run, run_figure1, run_figure2a, run_figure2b, sweep_points, with_workers,
    SweepOutcomes, SweepPoint,
};
