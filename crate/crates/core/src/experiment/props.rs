//! Randomized invariant checks across all modules, run as one batch.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Figure, PowerSplit};
use super::runner::{evaluate_sweep, run_figure1, with_workers, SweepPoint};
use crate::baselines::{sm_tdma_mi, BaselineKind, SchemeRegistry};
use crate::entropy::{EntropyEstimator, MonteCarlo, RadialQuadrature};
use crate::error::{Error, Result};
use crate::gmd::{
    entropy_bounds_equal_weight_zero_mean, entropy_lower_bound, entropy_upper_bound,
    GaussianComponent, GaussianMixture,
};
use crate::mi::{asymptotes, mi_exact, mi_lower_bound_k2};
use crate::rng::{substream, Stream};
use crate::system::{
    complex_gaussian, draw_channel, make_conventional_sm_codebooks, mixture_of_interference,
    mixture_of_received, simulate_received_symbol, ChannelRealization, SystemConfig,
};

const PROPS_STREAM: u64 = 7;
const RANDOM_CASES: usize = 100;
const SANDWICH_TOLERANCE: f64 = 1e-8;
const PATH_TOLERANCE: f64 = 1e-10;
const LOW_SNR_DB: f64 = -40.0;
const HIGH_SNR_DB: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Distance to the failure threshold; negative when the property fails.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub outcomes: Vec<PropertyOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "property suite, seed {}", self.seed)?;
        for o in &self.outcomes {
            writeln!(
                f,
                "{} {}::{} margin={:.3e} ({})",
                if o.passed { "PASS" } else { "FAIL" },
                o.module,
                o.name,
                o.margin,
                o.detail
            )?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} passed, {} failed",
            self.outcomes.len() - failed,
            failed
        )
    }
}

/// Passes when `margin >= 0`.
fn outcome(
    module: &'static str,
    name: &'static str,
    margin: f64,
    detail: String,
) -> PropertyOutcome {
    PropertyOutcome {
        module,
        name,
        passed: margin >= 0.0,
        margin,
        detail,
    }
}

fn random_mixture(rng: &mut Stream, equal_weights: bool) -> GaussianMixture {
    let len = rng.random_range(1..=8);
    let variances: Vec<f64> = (0..len)
        .map(|_| 10f64.powf(rng.random_range(-2.0..=2.0)))
        .collect();
    if equal_weights {
        return GaussianMixture::equal_weight_zero_mean(&variances).expect("valid variances");
    }
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let components = raw
        .iter()
        .zip(&variances)
        .map(|(w, v)| GaussianComponent::zero_mean(w / total, *v).expect("valid component"))
        .collect();
    GaussianMixture::new(components).expect("weights sum to one")
}

fn case_rng(seed: u64, property: u64, case: usize) -> Stream {
    substream(seed, &[PROPS_STREAM, property, case as u64])
}

fn gmd_properties(cfg: &ExperimentConfig, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    let quadrature = RadialQuadrature::new(cfg.quadrature_tolerance)?;

    let mut worst = f64::INFINITY;
    for case in 0..RANDOM_CASES {
        let mut rng = case_rng(cfg.seed, 1, case);
        let mixture = random_mixture(&mut rng, false);
        let h = quadrature.estimate(&mixture, &mut rng)?.value;
        let slack = (h - entropy_lower_bound(&mixture)).min(entropy_upper_bound(&mixture) - h);
        worst = worst.min(slack + SANDWICH_TOLERANCE);
    }
    out.push(outcome(
        "gmd",
        "bound_sandwich",
        worst,
        format!("{RANDOM_CASES} mixtures, slack >= -{SANDWICH_TOLERANCE:e}"),
    ));

    let mut worst_lb = 0.0f64;
    let mut worst_ub = 0.0f64;
    for case in 0..RANDOM_CASES {
        let mut rng = case_rng(cfg.seed, 2, case);
        let mixture = random_mixture(&mut rng, false);
        let index = rng.random_range(0..mixture.len());
        let weight = mixture.components()[index].weight;
        let split = mixture.split_component(index)?;
        worst_lb =
            worst_lb.max((entropy_lower_bound(&split) - entropy_lower_bound(&mixture)).abs());
        let growth = entropy_upper_bound(&split) - entropy_upper_bound(&mixture);
        worst_ub = worst_ub.max((growth - weight).abs());
    }
    out.push(outcome(
        "gmd",
        "duplicate_invariance",
        PATH_TOLERANCE - worst_lb.max(worst_ub),
        format!("max |dLB| = {worst_lb:.2e}, max |dUB - beta| = {worst_ub:.2e}"),
    ));

    let mut worst = 0.0f64;
    for case in 0..RANDOM_CASES {
        let mut rng = case_rng(cfg.seed, 3, case);
        let mixture = random_mixture(&mut rng, true);
        let variances: Vec<f64> = mixture.variances().collect();
        let (lb, ub) = entropy_bounds_equal_weight_zero_mean(&variances)?;
        worst = worst
            .max((lb - entropy_lower_bound(&mixture)).abs())
            .max((ub - entropy_upper_bound(&mixture)).abs());
    }
    out.push(outcome(
        "gmd",
        "specialization",
        1e-12 - worst,
        format!("max |delta| = {worst:.2e} bits"),
    ));

    let mut worst_bounds = 0.0f64;
    let mut worst_entropy = 0.0f64;
    for case in 0..RANDOM_CASES {
        let mut rng = case_rng(cfg.seed, 4, case);
        let mixture = random_mixture(&mut rng, false);
        let c = 10f64.powf(rng.random_range(-2.0..=2.0));
        let scaled = mixture.scaled_variances(c)?;
        let shift = c.log2();
        worst_bounds = worst_bounds
            .max((entropy_lower_bound(&scaled) - entropy_lower_bound(&mixture) - shift).abs())
            .max((entropy_upper_bound(&scaled) - entropy_upper_bound(&mixture) - shift).abs());
        let h0 = quadrature.estimate(&mixture, &mut rng)?.value;
        let h1 = quadrature.estimate(&scaled, &mut rng)?.value;
        worst_entropy = worst_entropy.max((h1 - h0 - shift).abs());
    }
    out.push(outcome(
        "gmd",
        "scaling_law",
        (PATH_TOLERANCE - worst_bounds).min(SANDWICH_TOLERANCE - worst_entropy),
        format!("bounds max err {worst_bounds:.2e}, entropy max err {worst_entropy:.2e}"),
    ));

    let mut worst = f64::INFINITY;
    for (case, variances) in [vec![1.0, 4.0], vec![0.5, 1.0, 2.0], vec![0.1, 10.0]]
        .iter()
        .enumerate()
    {
        let mixture = GaussianMixture::equal_weight_zero_mean(variances)?;
        let mut rng = case_rng(cfg.seed, 5, case);
        let small = MonteCarlo::new(20_000)?.estimate(&mixture, &mut rng)?;
        let large = MonteCarlo::new(80_000)?.estimate(&mixture, &mut rng)?;
        let ratio = large.std_error / small.std_error;
        worst = worst.min(0.2 - (ratio / 0.5 - 1.0).abs());
    }
    out.push(outcome(
        "gmd",
        "monte_carlo_consistency",
        worst,
        "std_error ratio for 4x samples within 20% of 1/2".into(),
    ));
    Ok(())
}

fn random_link(
    cfg: &ExperimentConfig,
    property: u64,
    case: usize,
) -> Result<(ChannelRealization, SystemConfig, Stream)> {
    let codebooks = make_conventional_sm_codebooks(&cfg.system)?;
    let mut rng = case_rng(cfg.seed, property, case);
    let realization = draw_channel(&cfg.system, &codebooks, &mut rng)?;
    let snr_db = rng.random_range(LOW_SNR_DB..=HIGH_SNR_DB);
    let system = cfg.system.at_snr_db(snr_db)?;
    Ok((realization, system, rng))
}

fn links(num_users: usize) -> Vec<(usize, usize)> {
    (1..=num_users)
        .flat_map(|r| (1..=r).map(move |k| (r, k)))
        .collect()
}

fn system_properties(cfg: &ExperimentConfig, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    const DRAWS: usize = 200_000;
    let (realization, system, mut rng) = random_link(cfg, 10, 0)?;
    let system = system.at_snr_db(10.0)?;
    let mut worst = 0.0f64;
    for (r, k) in links(system.num_users) {
        let mixture = mixture_of_received(&realization, &system, r, k)?;
        let mut power = 0.0;
        for _ in 0..DRAWS {
            let symbols: Vec<Complex64> = (0..system.num_users)
                .map(|_| complex_gaussian(&mut rng, system.signal_power))
                .collect();
            let indices: Vec<usize> = system
                .codebook_sizes
                .iter()
                .map(|&n| rng.random_range(0..n))
                .collect();
            let noise = complex_gaussian(&mut rng, system.noise_power);
            let y =
                simulate_received_symbol(&realization, &system, r, k, &symbols, &indices, noise)?;
            power += y.norm_sqr();
        }
        let relative = (power / DRAWS as f64 / mixture.second_moment() - 1.0).abs();
        worst = worst.max(relative);
    }
    out.push(outcome(
        "system",
        "second_moment",
        0.01 - worst,
        format!("{DRAWS} draws per link, max relative error {worst:.2e}"),
    ));

    let mut worst = f64::INFINITY;
    for case in 0..RANDOM_CASES {
        let (realization, system, _) = random_link(cfg, 11, case)?;
        for (r, k) in links(system.num_users) {
            let received: Vec<f64> = mixture_of_received(&realization, &system, r, k)?
                .variances()
                .collect();
            let interference: Vec<f64> = mixture_of_interference(&realization, &system, r, k)?
                .variances()
                .collect();
            for (i, v) in received.iter().enumerate() {
                worst = worst.min(v - interference[i % interference.len()]);
            }
        }
    }
    out.push(outcome(
        "system",
        "variance_dominance",
        worst,
        "received variance minus matched interference variance".into(),
    ));
    Ok(())
}

fn mi_pointwise_properties(
    cfg: &ExperimentConfig,
    estimator: &dyn EntropyEstimator,
    out: &mut Vec<PropertyOutcome>,
) -> Result<()> {
    let mut worst = 0.0f64;
    for case in 0..RANDOM_CASES {
        let (realization, system, _) = random_link(cfg, 20, case)?;
        for (r, k) in links(system.num_users) {
            let assembled = entropy_lower_bound(&mixture_of_received(&realization, &system, r, k)?)
                - entropy_upper_bound(&mixture_of_interference(&realization, &system, r, k)?);
            let closed = mi_lower_bound_k2(&realization, &system, r, k)?;
            worst = worst.max((closed - assembled).abs());
        }
    }
    out.push(outcome(
        "mi",
        "path_equivalence",
        PATH_TOLERANCE - worst,
        format!("max |delta| = {worst:.2e} bits"),
    ));

    let mut worst = f64::INFINITY;
    for case in 0..RANDOM_CASES {
        let (realization, system, mut rng) = random_link(cfg, 21, case)?;
        for (r, k) in links(system.num_users) {
            let exact = mi_exact(&realization, &system, r, k, estimator, &mut rng)?;
            let lb = mi_lower_bound_k2(&realization, &system, r, k)?;
            worst = worst.min(exact.mi_exact.value + 3.0 * exact.mi_exact.std_error - lb);
        }
    }
    out.push(outcome(
        "mi",
        "lower_bound_validity",
        worst,
        "exact + 3 std_error - lower bound".into(),
    ));
    Ok(())
}

/// `((r, k), mean exact MI, mean lower bound)`.
type LinkAverage = ((usize, usize), f64, f64);

/// Mean exact MI and lower bound of every link at one SNR, over the configured realizations.
fn averaged_links(
    cfg: &ExperimentConfig,
    estimator: &dyn EntropyEstimator,
    snr_db: f64,
) -> Result<Vec<LinkAverage>> {
    let codebooks = make_conventional_sm_codebooks(&cfg.system)?;
    let system = cfg.system.at_snr_db(snr_db)?;
    let per_realization: Vec<Vec<(f64, f64)>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, &[0, i as u64]);
            let realization = draw_channel(&cfg.system, &codebooks, &mut rng)?;
            links(system.num_users)
                .into_iter()
                .enumerate()
                .map(|(l, (r, k))| {
                    let mut rng = substream(cfg.seed, &[PROPS_STREAM, 30, i as u64, l as u64]);
                    let res = mi_exact(&realization, &system, r, k, estimator, &mut rng)?;
                    Ok((
                        res.mi_exact.value,
                        mi_lower_bound_k2(&realization, &system, r, k)?,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = cfg.realizations as f64;
    Ok(links(system.num_users)
        .into_iter()
        .enumerate()
        .map(|(l, link)| {
            let mi = per_realization.iter().map(|v| v[l].0).sum::<f64>() / n;
            let lb = per_realization.iter().map(|v| v[l].1).sum::<f64>() / n;
            (link, mi, lb)
        })
        .collect())
}

fn mi_averaged_properties(
    cfg: &ExperimentConfig,
    estimator: &dyn EntropyEstimator,
    out: &mut Vec<PropertyOutcome>,
) -> Result<()> {
    let low = averaged_links(cfg, estimator, LOW_SNR_DB)?;
    let mut worst_mi = 0.0f64;
    let mut worst_lb = 0.0f64;
    for &((r, k), mi, lb) in &low {
        let limit = asymptotes(&cfg.system, r, k, 0.0)?.low_snr_lb_limit;
        worst_mi = worst_mi.max(mi.abs());
        worst_lb = worst_lb.max((lb - limit).abs());
    }
    out.push(outcome(
        "mi",
        "low_snr_limits",
        (0.02 - worst_mi).min(0.02 - worst_lb),
        format!("at {LOW_SNR_DB} dB: max |I| = {worst_mi:.4}, max |I_LB - C| = {worst_lb:.4}"),
    ));

    let high = averaged_links(cfg, estimator, HIGH_SNR_DB)?;
    let mut worst_ceiling = 0.0f64;
    let mut worst_shift = 0.0f64;
    for &((r, k), mi, lb) in &high {
        let report = asymptotes(&cfg.system, r, k, 0.0)?;
        if let Some(ceiling) = report.high_snr_mi_limit {
            worst_ceiling = worst_ceiling.max((mi - ceiling).abs());
        }
        if (r, k) == (1, 1) {
            worst_shift = ((mi - lb) + report.constant_shift).abs();
        }
    }
    out.push(outcome(
        "mi",
        "high_snr_saturation",
        0.1 - worst_ceiling,
        format!("at {HIGH_SNR_DB} dB: max |I(i,1) - ceiling| = {worst_ceiling:.4}"),
    ));
    out.push(outcome(
        "mi",
        "constant_shift",
        0.1 - worst_shift,
        format!("at {HIGH_SNR_DB} dB: |I(1,1) - I_LB(1,1) + C(1,1)| = {worst_shift:.4}"),
    ));
    Ok(())
}

fn ensure_baselines(cfg: &ExperimentConfig) -> Vec<BaselineKind> {
    let mut baselines = cfg.baselines.clone();
    if !baselines
        .iter()
        .any(|b| matches!(b, BaselineKind::MisoNoma { .. }))
    {
        baselines.push(BaselineKind::miso_noma_default());
    }
    if !baselines
        .iter()
        .any(|b| matches!(b, BaselineKind::SmTdma { .. }))
    {
        baselines.push(BaselineKind::sm_tdma_equal(cfg.system.num_users));
    }
    baselines
}

fn sweep_properties(cfg: &ExperimentConfig, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    let registry = SchemeRegistry::for_experiment(&cfg.system, &ensure_baselines(cfg))?;
    let names = registry.names();
    let index = |name: &str| names.iter().position(|n| *n == name).expect("registered");
    let (noma, miso, tdma) = (index("SM-NOMA"), index("MISO-NOMA"), index("SM-TDMA"));

    let mut grid = cfg.snr_grid_db.clone();
    for extra in [10.0, 20.0, 30.0] {
        if !grid.contains(&extra) {
            grid.push(extra);
        }
    }
    grid.sort_by(f64::total_cmp);
    let points = grid
        .iter()
        .map(|&snr_db| {
            Ok(SweepPoint {
                snr_db,
                power_ratio: None,
                system: cfg.system.at_snr_db(snr_db)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes = evaluate_sweep(cfg, &registry, &points)?;
    let n = cfg.realizations as f64;
    let mean = |j: usize, f: &dyn Fn(&[crate::baselines::SchemeOutcome]) -> f64| {
        outcomes.iter().map(|r| f(&r[j])).sum::<f64>() / n
    };

    let mut sic = f64::INFINITY;
    let mut sum_order = f64::INFINITY;
    let mut user1_order = f64::INFINITY;
    for (j, &snr_db) in grid.iter().enumerate() {
        let i11 = mean(j, &|o| o[noma].user_rates[0].value);
        if (10.0..=30.0).contains(&snr_db) {
            sic = sic.min(mean(j, &|o| o[noma].user_rates[1].value) - i11);
        }
        if cfg.snr_grid_db.contains(&snr_db) {
            sum_order = sum_order.min(mean(j, &|o| {
                o[noma].sum_rate().value - o[tdma].sum_rate().value
            }));
            user1_order = user1_order.min(i11 - mean(j, &|o| o[miso].user_rates[0].value));
        }
    }
    out.push(outcome(
        "mi",
        "sic_ordering",
        sic,
        "min over 10..30 dB of mean I(2,2) - mean I(1,1)".into(),
    ));
    out.push(outcome(
        "baselines",
        "sm_noma_sum_above_sm_tdma",
        sum_order,
        "min over grid of SM-NOMA sum - SM-TDMA sum".into(),
    ));
    out.push(outcome(
        "baselines",
        "sm_noma_user1_above_miso_noma",
        user1_order,
        "min over grid of SM-NOMA I(1,1) - MISO-NOMA I(1,1)".into(),
    ));
    Ok(())
}

fn tdma_linearity(
    cfg: &ExperimentConfig,
    estimator: &dyn EntropyEstimator,
    out: &mut Vec<PropertyOutcome>,
) -> Result<()> {
    let mut worst = 0.0f64;
    for case in 0..20 {
        let (realization, system, mut rng) = random_link(cfg, 40, case)?;
        let tau = rng.random_range(0.05..=1.0);
        let power = system.total_power();
        let full = sm_tdma_mi(
            &realization,
            &system,
            1,
            1.0,
            power,
            estimator,
            &mut rng.clone(),
        )?;
        let part = sm_tdma_mi(&realization, &system, 1, tau, power, estimator, &mut rng)?;
        worst = worst.max((part.value - tau * full.value).abs());
    }
    out.push(outcome(
        "baselines",
        "sm_tdma_linear_in_time_share",
        PATH_TOLERANCE - worst,
        format!("max |I(tau) - tau I(1)| = {worst:.2e}"),
    ));
    Ok(())
}

fn determinism(cfg: &ExperimentConfig, out: &mut Vec<PropertyOutcome>) -> Result<()> {
    let mut small = ExperimentConfig::defaults(Figure::Fig1);
    small.system = cfg.system.clone();
    small.seed = cfg.seed;
    small.realizations = 4;
    small.snr_grid_db = vec![0.0, 20.0];
    small.method = "montecarlo".into();
    small.mc_samples = 2_000;
    let one = with_workers(Some(1), || run_figure1(&small))??.to_csv_string()?;
    let many = with_workers(Some(4), || run_figure1(&small))??.to_csv_string()?;
    out.push(outcome(
        "experiment",
        "worker_count_invariance",
        if one == many { 0.0 } else { -1.0 },
        "fig1 CSV with 1 and 4 workers byte-identical".into(),
    ));
    Ok(())
}

/// Runs every property with the configured seed, realizations and estimator.
pub fn run_property_suite(cfg: &ExperimentConfig) -> Result<PropertyReport> {
    cfg.validate()?;
    if !matches!(cfg.power_split, PowerSplit::Fixed { .. }) || cfg.system.num_users != 2 {
        return Err(Error::Config(
            "property suite needs two users and a fixed power split".into(),
        ));
    }
    let estimator = cfg.estimator()?;
    let mut outcomes = Vec::new();
    gmd_properties(cfg, &mut outcomes)?;
    system_properties(cfg, &mut outcomes)?;
    mi_pointwise_properties(cfg, estimator.as_ref(), &mut outcomes)?;
    mi_averaged_properties(cfg, estimator.as_ref(), &mut outcomes)?;
    sweep_properties(cfg, &mut outcomes)?;
    tdma_linearity(cfg, estimator.as_ref(), &mut outcomes)?;
    determinism(cfg, &mut outcomes)?;
    Ok(PropertyReport {
        seed: cfg.seed,
        outcomes,
    })
}
