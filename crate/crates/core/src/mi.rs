//! Mutual information `I_{r,k} = h(Y_{r,k}) - h(Ω_{r,k})` per decoder/message
//! pair, its closed-form lower bound for two users, and the low/high-SNR limits.

use std::f64::consts::{E, LOG2_E};

use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyEstimate, EntropyEstimator};
use crate::error::{Error, Result};
use crate::gmd::{
    entropy_bounds_equal_weight_zero_mean, entropy_lower_bound, entropy_upper_bound,
    gaussian_entropy,
};
use crate::rng::Stream;
use crate::system::{
    mixture_of_interference, mixture_of_received, ChannelRealization, SystemConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiResult {
    pub decoder_user: usize,
    pub message_index: usize,
    pub mi_exact: EntropyEstimate,
    /// `h_LB(Y) - h_UB(Ω)`; may be negative at low SNR.
    pub mi_lower_bound: f64,
    pub snr_db: f64,
}

/// Exact MI for one channel realization, together with the assembled lower bound.
///
/// When `Ω` is a single Gaussian (message `K`), its entropy is taken in closed
/// form instead of being estimated.
pub fn mi_exact(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
    estimator: &dyn EntropyEstimator,
    rng: &mut Stream,
) -> Result<MiResult> {
    let received = mixture_of_received(realization, config, decoder, message)?;
    let interference = mixture_of_interference(realization, config, decoder, message)?;

    let h_received = estimator.estimate(&received, rng)?;
    let h_interference = match interference.components() {
        [single] => EntropyEstimate::exact(gaussian_entropy(single.variance)),
        _ => estimator.estimate(&interference, rng)?,
    };

    Ok(MiResult {
        decoder_user: decoder,
        message_index: message,
        mi_exact: h_received.minus(&h_interference),
        mi_lower_bound: entropy_lower_bound(&received) - entropy_upper_bound(&interference),
        snr_db: config.snr_db(),
    })
}

/// `h_LB(Y_{r,k}) - h_UB(Ω_{r,k})` from the equal-weight zero-mean bound forms.
/// Valid for any number of users.
pub fn mi_lower_bound_assembled(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
) -> Result<f64> {
    let received = mixture_of_received(realization, config, decoder, message)?;
    let interference = mixture_of_interference(realization, config, decoder, message)?;
    let received_vars: Vec<f64> = received.variances().collect();
    let interference_vars: Vec<f64> = interference.variances().collect();
    let (lower, _) = entropy_bounds_equal_weight_zero_mean(&received_vars)?;
    let (_, upper) = entropy_bounds_equal_weight_zero_mean(&interference_vars)?;
    Ok(lower - upper)
}

fn require_two_users(config: &SystemConfig) -> Result<()> {
    if config.num_users == 2 {
        Ok(())
    } else {
        Err(Error::RequiresTwoUsers(config.num_users))
    }
}

/// Closed-form MI lower bound for a two-user pair, written directly in terms of
/// the SNR `ρ` and the gain powers `|b|²`.
///
/// Pairwise sums `|b^(n)|² + |b^(m)|²` run over all `(n, m)` including `n = m`.
pub fn mi_lower_bound_k2(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
) -> Result<f64> {
    require_two_users(config)?;
    config.check_link(decoder, message)?;
    let rho = config.snr();
    let (a1, a2) = (config.power_levels[0], config.power_levels[1]);
    let second = realization.gain_powers(decoder, 2);
    let n2 = second.len() as f64;

    if message == 2 {
        let avg_log = second
            .iter()
            .map(|&pn| {
                second
                    .iter()
                    .map(|&pm| (2.0 + rho * a2 * (pn + pm)).recip())
                    .sum::<f64>()
                    .log2()
            })
            .sum::<f64>()
            / n2;
        return Ok((n2 / E).log2() - avg_log);
    }

    let first = realization.gain_powers(decoder, 1);
    let n1 = first.len() as f64;
    let mut total = 0.0;
    for &p1n in &first {
        for &p2n in &second {
            let numerator = 1.0 + rho * a2 * p2n;
            let inner: f64 = first
                .iter()
                .flat_map(|&p1m| {
                    second.iter().map(move |&p2m| {
                        numerator / (2.0 + rho * (a1 * (p1n + p1m) + a2 * (p2n + p2m)))
                    })
                })
                .sum();
            total += inner.log2();
        }
    }
    Ok((n1 / E).log2() - total / (n1 * n2))
}

/// Limits of the exact MI and its lower bound for a two-user pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub decoder_user: usize,
    pub message_index: usize,
    /// Lower bound as `ρ → 0`; the exact MI itself tends to 0.
    pub low_snr_lb_limit: f64,
    /// `None` for message 2, whose MI grows without bound.
    pub high_snr_mi_limit: Option<f64>,
    pub high_snr_lb_limit: Option<f64>,
    /// Asymptotic offset of the lower bound below the exact MI.
    pub constant_shift: f64,
    /// Averaged gain `b²` used by the merged-Gaussian argument; diagnostic only.
    pub avg_gain_sq: f64,
}

pub fn asymptotes(
    config: &SystemConfig,
    decoder: usize,
    message: usize,
    avg_gain_sq: f64,
) -> Result<AsymptoteReport> {
    require_two_users(config)?;
    config.check_link(decoder, message)?;
    let report = if message == 1 {
        let n2 = config.codebook_sizes[1] as f64;
        let shift = 1.0 - (E * n2).log2();
        let ceiling = (1.0 + config.power_levels[0] / config.power_levels[1]).log2();
        AsymptoteReport {
            decoder_user: decoder,
            message_index: message,
            low_snr_lb_limit: shift,
            high_snr_mi_limit: Some(ceiling),
            high_snr_lb_limit: Some(ceiling + shift),
            constant_shift: shift,
            avg_gain_sq,
        }
    } else {
        let shift = 1.0 - LOG2_E;
        AsymptoteReport {
            decoder_user: decoder,
            message_index: message,
            low_snr_lb_limit: shift,
            high_snr_mi_limit: None,
            high_snr_lb_limit: None,
            constant_shift: shift,
            avg_gain_sq,
        }
    };
    Ok(report)
}

/// MI of message 1 when both mixtures are replaced by single Gaussians with the
/// averaged gain `b²`: `log₂((σ_v² + σ_s² b² (α₁² + α₂²)) / (σ_v² + σ_s² b² α₂²))`.
///
/// Tends to `log₂(1 + α₁²/α₂²)` as the SNR grows.
pub fn merged_gaussian_mi(config: &SystemConfig, avg_gain_sq: f64) -> Result<f64> {
    require_two_users(config)?;
    let signal = config.signal_power * avg_gain_sq;
    let (a1, a2) = (config.power_levels[0], config.power_levels[1]);
    Ok(((config.noise_power + signal * (a1 + a2)) / (config.noise_power + signal * a2)).log2())
}

/// `Σ_k I_{k,k}`, errors combined root-sum-square.
///
/// Needs exactly one result per user `k = 1..=K` with `r = k`, all at one SNR.
pub fn sum_mi(results: &[MiResult]) -> Result<EntropyEstimate> {
    let first = results
        .first()
        .ok_or_else(|| Error::Aggregation("no results to sum".into()))?;
    let mut seen = vec![false; results.len()];
    for res in results {
        if res.decoder_user != res.message_index {
            return Err(Error::Aggregation(format!(
                "I({},{}) is not a user's own message",
                res.decoder_user, res.message_index
            )));
        }
        match seen.get_mut(res.message_index.wrapping_sub(1)) {
            Some(slot) if !*slot => *slot = true,
            _ => {
                return Err(Error::Aggregation(format!(
                    "user {} missing, duplicated or out of range",
                    res.message_index
                )))
            }
        }
        if res.snr_db != first.snr_db {
            return Err(Error::Aggregation(format!(
                "mismatched SNRs {} dB and {} dB",
                first.snr_db, res.snr_db
            )));
        }
    }
    Ok(results
        .iter()
        .skip(1)
        .fold(first.mi_exact, |acc, r| acc.minus(&r.mi_exact.scaled(-1.0))))
}
