//! Multiple-access schemes compared on the same channel draws.
//!
//! Each scheme implements [`AccessScheme`] and reports one achievable rate per
//! user. [`SchemeRegistry`] holds the schemes an experiment runs, keyed by name.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyEstimate, EntropyEstimator};
use crate::error::{Error, Result};
use crate::gmd::{gaussian_entropy, GaussianMixture};
use crate::mi::{mi_exact, mi_lower_bound_assembled, mi_lower_bound_k2};
use crate::rng::Stream;
use crate::system::{ChannelRealization, SystemConfig};

/// Comparison systems and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineKind {
    /// Multi-antenna NOMA without precoding or spatial modulation.
    MisoNoma { num_tx_antennas: usize },
    /// Users take turns; each slot is single-user SM at the full power budget.
    SmTdma { time_shares: Vec<f64> },
}

impl BaselineKind {
    pub fn miso_noma_default() -> Self {
        BaselineKind::MisoNoma { num_tx_antennas: 2 }
    }

    /// Equal slots for `users` users.
    pub fn sm_tdma_equal(users: usize) -> Self {
        BaselineKind::SmTdma {
            time_shares: vec![1.0 / users as f64; users],
        }
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        match self {
            BaselineKind::MisoNoma { num_tx_antennas } => {
                if *num_tx_antennas == 0 || *num_tx_antennas > config.num_tx_antennas {
                    return Err(Error::InvalidBaseline(format!(
                        "MISO-NOMA needs 1 <= M' <= M = {}, got {num_tx_antennas}",
                        config.num_tx_antennas
                    )));
                }
            }
            BaselineKind::SmTdma { time_shares } => {
                if time_shares.len() != config.num_users {
                    return Err(Error::InvalidBaseline(format!(
                        "{} time shares for {} users",
                        time_shares.len(),
                        config.num_users
                    )));
                }
                if let Some(t) = time_shares.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
                    return Err(Error::InvalidBaseline(format!(
                        "time share {t} outside (0, 1]"
                    )));
                }
                let total: f64 = time_shares.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidBaseline(format!(
                        "time shares sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, config: &SystemConfig) -> Result<Box<dyn AccessScheme>> {
        self.validate(config)?;
        Ok(match self {
            BaselineKind::MisoNoma { num_tx_antennas } => Box::new(MisoNoma {
                num_tx_antennas: *num_tx_antennas,
            }),
            BaselineKind::SmTdma { time_shares } => Box::new(SmTdma {
                time_shares: time_shares.clone(),
            }),
        })
    }
}

/// What a scheme achieves on one channel realization at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    /// Rate of user `k` at index `k - 1`.
    pub user_rates: Vec<EntropyEstimate>,
    /// Closed-form lower bounds on the user rates, when the scheme has them.
    pub lower_bounds: Option<Vec<f64>>,
}

impl SchemeOutcome {
    pub fn sum_rate(&self) -> EntropyEstimate {
        self.user_rates
            .iter()
            .skip(1)
            .fold(self.user_rates[0], |acc, r| acc.minus(&r.scaled(-1.0)))
    }
}

pub trait AccessScheme: Send + Sync + fmt::Debug {
    /// Label used in curve names, e.g. `SM-NOMA`.
    fn name(&self) -> &'static str;

    fn evaluate(
        &self,
        realization: &ChannelRealization,
        config: &SystemConfig,
        estimator: &dyn EntropyEstimator,
        rng: &mut Stream,
    ) -> Result<SchemeOutcome>;
}

/// The proposed scheme: user `k` decodes its own message after SIC, rate `I_{k,k}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SmNoma;

impl AccessScheme for SmNoma {
    fn name(&self) -> &'static str {
        "SM-NOMA"
    }

    fn evaluate(
        &self,
        realization: &ChannelRealization,
        config: &SystemConfig,
        estimator: &dyn EntropyEstimator,
        rng: &mut Stream,
    ) -> Result<SchemeOutcome> {
        let mut user_rates = Vec::with_capacity(config.num_users);
        let mut lower_bounds = Vec::with_capacity(config.num_users);
        for k in 1..=config.num_users {
            user_rates.push(mi_exact(realization, config, k, k, estimator, rng)?.mi_exact);
            lower_bounds.push(if config.num_users == 2 {
                mi_lower_bound_k2(realization, config, k, k)?
            } else {
                mi_lower_bound_assembled(realization, config, k, k)?
            });
        }
        Ok(SchemeOutcome {
            user_rates,
            lower_bounds: Some(lower_bounds),
        })
    }
}

/// Per-user scalar channel of the MISO-NOMA baseline: every symbol goes out on
/// the first `M'` antennas with the fixed weight vector `(1/√M')·1`, so
/// `g_r = Σ_{m<M'} h_{r,m} / √M'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MisoChannel {
    gains: Vec<Complex64>,
}

impl MisoChannel {
    pub fn from_realization(
        realization: &ChannelRealization,
        num_tx_antennas: usize,
    ) -> Result<Self> {
        let available = realization.channel_vectors()[0].len();
        if num_tx_antennas == 0 || num_tx_antennas > available {
            return Err(Error::InvalidBaseline(format!(
                "MISO-NOMA needs 1 <= M' <= {available}, got {num_tx_antennas}"
            )));
        }
        let norm = (num_tx_antennas as f64).sqrt().recip();
        let gains = realization
            .channel_vectors()
            .iter()
            .map(|h| h[..num_tx_antennas].iter().sum::<Complex64>() * norm)
            .collect();
        Ok(Self { gains })
    }

    pub fn from_gains(gains: Vec<Complex64>) -> Self {
        Self { gains }
    }

    /// `g_r` for user `r` (1-based).
    pub fn gain(&self, user: usize) -> Complex64 {
        self.gains[user - 1]
    }
}

/// `I_{r,k} = log₂(1 + α_k² σ_s² |g_r|² / (σ_v² + Σ_{t>k} α_t² σ_s² |g_r|²))`.
pub fn miso_noma_mi(
    channel: &MisoChannel,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
) -> Result<f64> {
    if config.num_users != 2 {
        return Err(Error::RequiresTwoUsers(config.num_users));
    }
    config.check_link(decoder, message)?;
    let received = config.signal_power * channel.gain(decoder).norm_sqr();
    let interference: f64 = config.power_levels[message..].iter().sum::<f64>() * received;
    let signal = config.power_levels[message - 1] * received;
    Ok((1.0 + signal / (config.noise_power + interference)).log2())
}

#[derive(Debug, Clone)]
pub struct MisoNoma {
    pub num_tx_antennas: usize,
}

impl AccessScheme for MisoNoma {
    fn name(&self) -> &'static str {
        "MISO-NOMA"
    }

    fn evaluate(
        &self,
        realization: &ChannelRealization,
        config: &SystemConfig,
        _estimator: &dyn EntropyEstimator,
        _rng: &mut Stream,
    ) -> Result<SchemeOutcome> {
        let channel = MisoChannel::from_realization(realization, self.num_tx_antennas)?;
        let user_rates = (1..=config.num_users)
            .map(|k| miso_noma_mi(&channel, config, k, k).map(EntropyEstimate::exact))
            .collect::<Result<_>>()?;
        Ok(SchemeOutcome {
            user_rates,
            lower_bounds: None,
        })
    }
}

/// Time-shared single-user SM: `τ_k · (h(Y_k) - log₂(π e σ_v²))`, where `Y_k` is
/// user `k`'s interference-free SM mixture at power `slot_power`.
#[allow(clippy::too_many_arguments)]
pub fn sm_tdma_mi(
    realization: &ChannelRealization,
    config: &SystemConfig,
    user: usize,
    time_share: f64,
    slot_power: f64,
    estimator: &dyn EntropyEstimator,
    rng: &mut Stream,
) -> Result<EntropyEstimate> {
    if !(time_share > 0.0 && time_share <= 1.0) {
        return Err(Error::InvalidBaseline(format!(
            "time share {time_share} outside (0, 1]"
        )));
    }
    if !(slot_power.is_finite() && slot_power >= 0.0) {
        return Err(Error::InvalidBaseline(format!(
            "slot power {slot_power} must be finite and nonnegative"
        )));
    }
    if user == 0 || user > config.num_users {
        return Err(Error::InvalidBaseline(format!("no user {user}")));
    }
    let scale = config.signal_power * slot_power;
    let variances: Vec<f64> = realization
        .gain_powers(user, user)
        .iter()
        .map(|p| config.noise_power + scale * p)
        .collect();
    let mixture = GaussianMixture::equal_weight_zero_mean(&variances)?;
    let h = estimator.estimate(&mixture, rng)?;
    let single_user = h.minus(&EntropyEstimate::exact(gaussian_entropy(
        config.noise_power,
    )));
    Ok(single_user.scaled(time_share))
}

#[derive(Debug, Clone)]
pub struct SmTdma {
    pub time_shares: Vec<f64>,
}

impl AccessScheme for SmTdma {
    fn name(&self) -> &'static str {
        "SM-TDMA"
    }

    fn evaluate(
        &self,
        realization: &ChannelRealization,
        config: &SystemConfig,
        estimator: &dyn EntropyEstimator,
        rng: &mut Stream,
    ) -> Result<SchemeOutcome> {
        let slot_power = config.total_power();
        let user_rates = self
            .time_shares
            .iter()
            .enumerate()
            .map(|(i, &tau)| {
                sm_tdma_mi(realization, config, i + 1, tau, slot_power, estimator, rng)
            })
            .collect::<Result<_>>()?;
        Ok(SchemeOutcome {
            user_rates,
            lower_bounds: None,
        })
    }
}

/// Schemes an experiment evaluates, in registration order.
#[derive(Debug, Default)]
pub struct SchemeRegistry {
    schemes: Vec<Box<dyn AccessScheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// SM-NOMA followed by the configured baselines.
    pub fn for_experiment(config: &SystemConfig, baselines: &[BaselineKind]) -> Result<Self> {
        let mut registry = Self::new();
        registry.register(Box::new(SmNoma))?;
        for b in baselines {
            registry.register(b.build(config)?)?;
        }
        Ok(registry)
    }

    /// Fails if a scheme with the same name is already registered.
    pub fn register(&mut self, scheme: Box<dyn AccessScheme>) -> Result<()> {
        if self.get(scheme.name()).is_some() {
            return Err(Error::InvalidBaseline(format!(
                "scheme '{}' registered twice",
                scheme.name()
            )));
        }
        self.schemes.push(scheme);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&dyn AccessScheme> {
        self.schemes
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.iter().map(|s| s.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn AccessScheme> {
        self.schemes.iter().map(|s| s.as_ref())
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::RadialQuadrature;
    use crate::rng::stream;
    use crate::system::{draw_channel, make_conventional_sm_codebooks};
    use approx::assert_abs_diff_eq;

    fn setup(snr_db: f64, seed: u64) -> (SystemConfig, ChannelRealization) {
        let cfg = SystemConfig::conventional_sm(4, vec![4.0, 1.0], 1.0, 1.0)
            .unwrap()
            .at_snr_db(snr_db)
            .unwrap();
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let real = draw_channel(&cfg, &books, &mut stream(seed)).unwrap();
        (cfg, real)
    }

    #[test]
    fn miso_channel_is_equal_weight_combination() {
        let (_, real) = setup(0.0, 1);
        let ch = MisoChannel::from_realization(&real, 2).unwrap();
        for r in 1..=2 {
            let h = real.channel(r);
            assert_abs_diff_eq!(
                (ch.gain(r) - (h[0] + h[1]) / 2f64.sqrt()).norm(),
                0.0,
                epsilon = 1e-15
            );
        }
        assert!(MisoChannel::from_realization(&real, 5).is_err());
        assert!(MisoChannel::from_realization(&real, 0).is_err());
    }

    #[test]
    fn miso_last_message_is_awgn_capacity() {
        let (cfg, _) = setup(13.0, 0);
        let ch = MisoChannel::from_gains(vec![Complex64::new(0.4, 0.2), Complex64::new(-1.2, 0.5)]);
        let x = cfg.snr() * cfg.power_levels[1] * ch.gain(2).norm_sqr();
        assert_abs_diff_eq!(
            miso_noma_mi(&ch, &cfg, 2, 2).unwrap(),
            (1.0 + x).log2(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn miso_first_message_saturates_at_power_ratio() {
        let ch = MisoChannel::from_gains(vec![Complex64::new(0.4, 0.2), Complex64::new(-1.2, 0.5)]);
        let (hi, _) = setup(150.0, 0);
        assert_abs_diff_eq!(
            miso_noma_mi(&ch, &hi, 1, 1).unwrap(),
            5f64.log2(),
            epsilon = 1e-9
        );
        let (lo, _) = setup(-150.0, 0);
        assert!(miso_noma_mi(&ch, &lo, 1, 1).unwrap() < 1e-12);
    }

    #[test]
    fn miso_rejects_wrong_user_count() {
        let cfg = SystemConfig::conventional_sm(4, vec![1.0], 1.0, 1.0).unwrap();
        let ch = MisoChannel::from_gains(vec![Complex64::new(1.0, 0.0)]);
        assert!(matches!(
            miso_noma_mi(&ch, &cfg, 1, 1),
            Err(Error::RequiresTwoUsers(1))
        ));
    }

    #[test]
    fn tdma_is_linear_in_time_share() {
        let (cfg, real) = setup(10.0, 2);
        let q = RadialQuadrature::new(1e-11).unwrap();
        let full = sm_tdma_mi(&real, &cfg, 1, 1.0, 5.0, &q, &mut stream(0)).unwrap();
        for tau in [0.1, 0.5, 0.9] {
            let part = sm_tdma_mi(&real, &cfg, 1, tau, 5.0, &q, &mut stream(0)).unwrap();
            assert_abs_diff_eq!(part.value, tau * full.value, epsilon = 1e-13);
        }
        assert!(sm_tdma_mi(&real, &cfg, 1, 0.0, 5.0, &q, &mut stream(0)).is_err());
        assert!(sm_tdma_mi(&real, &cfg, 1, 1.5, 5.0, &q, &mut stream(0)).is_err());
        assert!(sm_tdma_mi(&real, &cfg, 3, 0.5, 5.0, &q, &mut stream(0)).is_err());
    }

    #[test]
    fn tdma_full_share_equals_single_user_mi() {
        // Single-user SM at power P is the K = 1 received mixture.
        let (cfg, real) = setup(5.0, 3);
        let q = RadialQuadrature::new(1e-11).unwrap();
        let single = SystemConfig::conventional_sm(4, vec![5.0], cfg.signal_power, 1.0).unwrap();
        let books = make_conventional_sm_codebooks(&single).unwrap();
        let real1 =
            ChannelRealization::from_channels(&single, &books, vec![real.channel(2).to_vec()])
                .unwrap();
        let expected = mi_exact(&real1, &single, 1, 1, &q, &mut stream(0)).unwrap();
        let got = sm_tdma_mi(&real, &cfg, 2, 1.0, 5.0, &q, &mut stream(0)).unwrap();
        assert_abs_diff_eq!(got.value, expected.mi_exact.value, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_users_split_single_user_rate() {
        let (cfg, real) = setup(5.0, 4);
        let cfg = cfg.with_power_levels(vec![2.5, 2.5]).unwrap();
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let h = real.channel(1).to_vec();
        let sym = ChannelRealization::from_channels(&cfg, &books, vec![h.clone(), h]).unwrap();
        let q = RadialQuadrature::new(1e-11).unwrap();
        let tdma = SmTdma {
            time_shares: vec![0.5, 0.5],
        };
        let out = tdma.evaluate(&sym, &cfg, &q, &mut stream(0)).unwrap();
        let full = sm_tdma_mi(&sym, &cfg, 1, 1.0, 5.0, &q, &mut stream(0)).unwrap();
        for rate in &out.user_rates {
            assert_abs_diff_eq!(rate.value, 0.5 * full.value, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(out.sum_rate().value, full.value, epsilon = 1e-12);
    }

    #[test]
    fn baseline_validation() {
        let (cfg, _) = setup(0.0, 0);
        assert!(BaselineKind::miso_noma_default().validate(&cfg).is_ok());
        assert!(BaselineKind::sm_tdma_equal(2).validate(&cfg).is_ok());
        assert!(BaselineKind::MisoNoma { num_tx_antennas: 8 }
            .validate(&cfg)
            .is_err());
        assert!(BaselineKind::SmTdma {
            time_shares: vec![0.7, 0.7]
        }
        .validate(&cfg)
        .is_err());
        assert!(BaselineKind::SmTdma {
            time_shares: vec![1.0, 0.0]
        }
        .validate(&cfg)
        .is_err());
        assert!(BaselineKind::SmTdma {
            time_shares: vec![1.0]
        }
        .validate(&cfg)
        .is_err());
    }

    #[test]
    fn registry_orders_and_rejects_duplicates() {
        let (cfg, _) = setup(0.0, 0);
        let baselines = [
            BaselineKind::miso_noma_default(),
            BaselineKind::sm_tdma_equal(2),
        ];
        let mut reg = SchemeRegistry::for_experiment(&cfg, &baselines).unwrap();
        assert_eq!(reg.names(), ["SM-NOMA", "MISO-NOMA", "SM-TDMA"]);
        assert!(reg.get("MISO-NOMA").is_some());
        assert!(reg.get("OFDMA").is_none());
        assert!(reg.register(Box::new(SmNoma)).is_err());
    }

    #[test]
    fn sm_noma_reports_own_message_rates_and_bounds() {
        let (cfg, real) = setup(20.0, 5);
        let q = RadialQuadrature::new(1e-11).unwrap();
        let out = SmNoma.evaluate(&real, &cfg, &q, &mut stream(0)).unwrap();
        let lbs = out.lower_bounds.clone().unwrap();
        for k in 1..=2 {
            let direct = mi_exact(&real, &cfg, k, k, &q, &mut stream(0)).unwrap();
            assert_eq!(out.user_rates[k - 1], direct.mi_exact);
            assert_abs_diff_eq!(lbs[k - 1], direct.mi_lower_bound, epsilon = 1e-10);
        }
    }
}
