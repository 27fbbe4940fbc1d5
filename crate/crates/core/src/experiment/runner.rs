//! Realization sweeps for the figures.
//!
//! Every realization draws its channel from its own substream of the seed and
//! reuses it across all SNR points, power splits and schemes. Entropy estimates
//! use a separate substream per (realization, point, scheme), so results do not
//! depend on the number of worker threads.

use rayon::prelude::*;

use super::config::{ExperimentConfig, Figure};
use super::curves::{average, CurvePoint, ExperimentOutput, MiCurve};
use crate::baselines::{SchemeOutcome, SchemeRegistry};
use crate::entropy::EntropyEstimate;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::system::{draw_channel, make_conventional_sm_codebooks, SystemConfig};

const CHANNEL_STREAM: u64 = 0;
const ESTIMATE_STREAM: u64 = 1;

/// One (power split, SNR) combination of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub power_ratio: Option<f64>,
    pub system: SystemConfig,
}

pub fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for (ratio, levels) in cfg.power_split.points() {
        let base = cfg.system.with_power_levels(levels)?;
        for &snr_db in &cfg.snr_grid_db {
            points.push(SweepPoint {
                snr_db,
                power_ratio: ratio.is_finite().then_some(ratio),
                system: base.at_snr_db(snr_db)?,
            });
        }
    }
    Ok(points)
}

/// Scheme outcomes indexed `[realization][point][scheme]`.
pub type SweepOutcomes = Vec<Vec<Vec<SchemeOutcome>>>;

pub fn evaluate_sweep(
    cfg: &ExperimentConfig,
    registry: &SchemeRegistry,
    points: &[SweepPoint],
) -> Result<SweepOutcomes> {
    let estimator = cfg.estimator()?;
    let codebooks = make_conventional_sm_codebooks(&cfg.system)?;
    let schemes: Vec<_> = registry.iter().collect();
    (0..cfg.realizations)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let mut channel_rng = substream(cfg.seed, &[CHANNEL_STREAM, i]);
            let realization = draw_channel(&cfg.system, &codebooks, &mut channel_rng)?;
            points
                .iter()
                .enumerate()
                .map(|(j, point)| {
                    schemes
                        .iter()
                        .enumerate()
                        .map(|(s, scheme)| {
                            let mut rng =
                                substream(cfg.seed, &[ESTIMATE_STREAM, i, j as u64, s as u64]);
                            scheme.evaluate(
                                &realization,
                                &point.system,
                                estimator.as_ref(),
                                &mut rng,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads, or the global pool for `None`.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(e.to_string())),
    }
}

struct Assembler<'a> {
    cfg: &'a ExperimentConfig,
    points: &'a [SweepPoint],
    outcomes: &'a SweepOutcomes,
    mc_samples: usize,
}

impl Assembler<'_> {
    fn curve<F>(&self, label: String, extract: F) -> Result<MiCurve>
    where
        F: Fn(&[SchemeOutcome]) -> EntropyEstimate,
    {
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(j, point)| {
                let values: Vec<_> = self.outcomes.iter().map(|r| extract(&r[j])).collect();
                let (mean_bits, std_error_bits) = average(&values)?;
                Ok(CurvePoint {
                    snr_db: point.snr_db,
                    power_ratio: point.power_ratio,
                    mean_bits,
                    std_error_bits,
                    realizations: self.cfg.realizations,
                    mc_samples: self.mc_samples,
                })
            })
            .collect::<Result<_>>()?;
        Ok(MiCurve { label, points })
    }
}

fn clamp_curve(curve: &MiCurve, label: String) -> MiCurve {
    MiCurve {
        label,
        points: curve
            .points
            .iter()
            .map(|p| CurvePoint {
                mean_bits: p.mean_bits.max(0.0),
                ..p.clone()
            })
            .collect(),
    }
}

fn require_figure(cfg: &ExperimentConfig, expected: &[Figure]) -> Result<()> {
    if expected.contains(&cfg.figure) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "configuration is for {}, not {}",
            cfg.figure.name(),
            expected
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
                .join("/")
        )))
    }
}

fn per_user_curves(cfg: &ExperimentConfig, with_bounds: bool) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let registry = SchemeRegistry::for_experiment(&cfg.system, &cfg.baselines)?;
    let points = sweep_points(cfg)?;
    let outcomes = evaluate_sweep(cfg, &registry, &points)?;
    let asm = Assembler {
        cfg,
        points: &points,
        outcomes: &outcomes,
        mc_samples: cfg.effective_mc_samples(),
    };
    let users = cfg.system.num_users;
    let mut curves = Vec::new();
    let mut notes = Vec::new();
    for (s, scheme) in registry.iter().enumerate() {
        for k in 0..users {
            curves.push(
                asm.curve(format!("{} I({},{})", scheme.name(), k + 1, k + 1), |o| {
                    o[s].user_rates[k]
                })?,
            );
        }
        if with_bounds && outcomes[0][0][s].lower_bounds.is_some() {
            for k in 0..users {
                let bound = asm.curve(
                    format!("{} I_LB({},{})", scheme.name(), k + 1, k + 1),
                    |o| {
                        let lb = o[s].lower_bounds.as_ref().expect("scheme reports bounds")[k];
                        EntropyEstimate::exact(lb)
                    },
                )?;
                let clamped = clamp_curve(
                    &bound,
                    format!("{} max(I_LB,0)({},{})", scheme.name(), k + 1, k + 1),
                );
                curves.push(bound);
                curves.push(clamped);
            }
            notes.push(
                "I_LB curves are the raw averaged lower bound and may be negative; \
                 max(I_LB,0) curves clamp the averaged bound at zero"
                    .into(),
            );
        }
    }
    notes.push(
        "std_error_bits is sd/sqrt(R) across realizations (estimator error when R = 1)".into(),
    );
    Ok(ExperimentOutput {
        config: cfg.clone(),
        curves,
        notes,
    })
}

/// Per-user MI `I(k,k)`, the lower bounds and every baseline over SNR.
pub fn run_figure1(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    require_figure(cfg, &[Figure::Fig1])?;
    per_user_curves(cfg, true)
}

/// Sum MI of SM-NOMA and every baseline over SNR.
pub fn run_figure2a(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    require_figure(cfg, &[Figure::Fig2a])?;
    cfg.validate()?;
    let registry = SchemeRegistry::for_experiment(&cfg.system, &cfg.baselines)?;
    let points = sweep_points(cfg)?;
    let outcomes = evaluate_sweep(cfg, &registry, &points)?;
    let asm = Assembler {
        cfg,
        points: &points,
        outcomes: &outcomes,
        mc_samples: cfg.effective_mc_samples(),
    };
    let curves = registry
        .iter()
        .enumerate()
        .map(|(s, scheme)| asm.curve(format!("{} sum", scheme.name()), |o| o[s].sum_rate()))
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput {
        config: cfg.clone(),
        curves,
        notes: vec![
            "std_error_bits is sd/sqrt(R) across realizations of the per-realization sum".into(),
        ],
    })
}

/// Per-user MI over the power ratio `α₁²/α₂²` at fixed total power.
pub fn run_figure2b(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    require_figure(cfg, &[Figure::Fig2b])?;
    let mut out = per_user_curves(cfg, false)?;
    out.notes
        .push("power_ratio is alpha_1^2 / alpha_2^2".into());
    Ok(out)
}

/// Dispatches on `cfg.figure`; the property suite has its own entry point.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.figure {
        Figure::Fig1 => run_figure1(cfg),
        Figure::Fig2a => run_figure2a(cfg),
        Figure::Fig2b => run_figure2b(cfg),
        Figure::Props => Err(Error::Config(
            "use run_property_suite for the property suite".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(figure: Figure) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(figure);
        cfg.realizations = 3;
        if figure != Figure::Fig2b {
            cfg.snr_grid_db = vec![-10.0, 10.0];
        }
        cfg.quadrature_tolerance = 1e-8;
        cfg
    }

    #[test]
    fn figure1_labels_and_shape() {
        let out = run_figure1(&small(Figure::Fig1)).unwrap();
        let labels: Vec<_> = out.curves.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "SM-NOMA I(1,1)",
                "SM-NOMA I(2,2)",
                "SM-NOMA I_LB(1,1)",
                "SM-NOMA max(I_LB,0)(1,1)",
                "SM-NOMA I_LB(2,2)",
                "SM-NOMA max(I_LB,0)(2,2)",
                "MISO-NOMA I(1,1)",
                "MISO-NOMA I(2,2)",
                "SM-TDMA I(1,1)",
                "SM-TDMA I(2,2)",
            ]
        );
        for c in &out.curves {
            assert_eq!(c.points.len(), 2);
            assert!(c
                .points
                .iter()
                .all(|p| p.realizations == 3 && p.mc_samples == 0));
            assert!(c.points.iter().all(|p| p.power_ratio == Some(4.0)));
        }
        let lb = out.curve("SM-NOMA I_LB(1,1)").unwrap();
        let clamped = out.curve("SM-NOMA max(I_LB,0)(1,1)").unwrap();
        for (a, b) in lb.points.iter().zip(&clamped.points) {
            assert_eq!(b.mean_bits, a.mean_bits.max(0.0));
        }
    }

    #[test]
    fn figure2a_sum_equals_per_user_sum() {
        let one = run_figure1(&small(Figure::Fig1)).unwrap();
        let two = run_figure2a(&small(Figure::Fig2a)).unwrap();
        for scheme in ["SM-NOMA", "MISO-NOMA", "SM-TDMA"] {
            let sum = two.curve(&format!("{scheme} sum")).unwrap();
            let u1 = one.curve(&format!("{scheme} I(1,1)")).unwrap();
            let u2 = one.curve(&format!("{scheme} I(2,2)")).unwrap();
            for ((s, a), b) in sum.points.iter().zip(&u1.points).zip(&u2.points) {
                assert!((s.mean_bits - a.mean_bits - b.mean_bits).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn figure2b_sweeps_ratio() {
        let mut cfg = small(Figure::Fig2b);
        cfg.power_split = super::super::config::PowerSplit::TotalPowerSweep {
            total: 5.0,
            ratios: vec![0.5, 4.0],
        };
        let out = run_figure2b(&cfg).unwrap();
        assert_eq!(out.curves.len(), 2);
        let c = out.curve("SM-NOMA I(1,1)").unwrap();
        assert_eq!(
            c.points.iter().map(|p| p.power_ratio).collect::<Vec<_>>(),
            [Some(0.5), Some(4.0)]
        );
        assert!(c.points[1].mean_bits > c.points[0].mean_bits);
    }

    #[test]
    fn independent_of_worker_count() {
        let mut cfg = small(Figure::Fig1);
        cfg.method = "montecarlo".into();
        cfg.mc_samples = 2000;
        let a = with_workers(Some(1), || run_figure1(&cfg))
            .unwrap()
            .unwrap();
        let b = with_workers(Some(4), || run_figure1(&cfg))
            .unwrap()
            .unwrap();
        assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    }

    #[test]
    fn rejects_wrong_figure() {
        assert!(run_figure2a(&small(Figure::Fig1)).is_err());
        assert!(run(&small(Figure::Props)).is_err());
    }
}
