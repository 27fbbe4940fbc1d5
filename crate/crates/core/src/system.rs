//! Downlink SM-NOMA system model.
//!
//! The base station superposes one spatial-modulation signal per user,
//! `x = Σ_k α_k s_k w_k^(n_k)`. User `r` runs SIC in the fixed order `1..=K`, so
//! when it decodes message `k` the messages `1..k` are already removed and
//! `k+1..=K` remain as interference.
//!
//! Users and messages are numbered from 1; codebook entries and antennas are
//! indexed from 0.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmd::GaussianMixture;

const UNIT_NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `M`
    pub num_tx_antennas: usize,
    /// `K`
    pub num_users: usize,
    /// `N_k` per user.
    pub codebook_sizes: Vec<usize>,
    /// `α_k²`, linear.
    pub power_levels: Vec<f64>,
    /// `σ_s²`
    pub signal_power: f64,
    /// `σ_v²`
    pub noise_power: f64,
}

impl SystemConfig {
    pub fn new(
        num_tx_antennas: usize,
        codebook_sizes: Vec<usize>,
        power_levels: Vec<f64>,
        signal_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let cfg = Self {
            num_tx_antennas,
            num_users: codebook_sizes.len(),
            codebook_sizes,
            power_levels,
            signal_power,
            noise_power,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Conventional SM: every user's codebook is the `M` antenna-selection vectors.
    pub fn conventional_sm(
        num_tx_antennas: usize,
        power_levels: Vec<f64>,
        signal_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let sizes = vec![num_tx_antennas; power_levels.len()];
        Self::new(
            num_tx_antennas,
            sizes,
            power_levels,
            signal_power,
            noise_power,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSystem(msg));
        if self.num_tx_antennas == 0 {
            return bad("need at least one transmit antenna".into());
        }
        if self.num_users == 0 {
            return bad("need at least one user".into());
        }
        if self.codebook_sizes.len() != self.num_users || self.power_levels.len() != self.num_users
        {
            return bad(format!(
                "{} users but {} codebook sizes and {} power levels",
                self.num_users,
                self.codebook_sizes.len(),
                self.power_levels.len()
            ));
        }
        if let Some(k) = self.codebook_sizes.iter().position(|&n| n == 0) {
            return bad(format!("user {} has an empty codebook", k + 1));
        }
        if let Some(p) = self
            .power_levels
            .iter()
            .find(|p| !(p.is_finite() && **p >= 0.0))
        {
            return bad(format!("power level {p} must be finite and nonnegative"));
        }
        if !(self.signal_power.is_finite() && self.signal_power > 0.0) {
            return bad(format!(
                "signal power {} must be positive",
                self.signal_power
            ));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return bad(format!("noise power {} must be positive", self.noise_power));
        }
        Ok(())
    }

    /// `ρ = σ_s² / σ_v²`.
    pub fn snr(&self) -> f64 {
        self.signal_power / self.noise_power
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    /// Same system with `σ_s² = σ_v² · 10^(snr_db/10)`.
    pub fn at_snr_db(&self, snr_db: f64) -> Result<Self> {
        let cfg = Self {
            signal_power: self.noise_power * 10f64.powf(snr_db / 10.0),
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_power_levels(&self, power_levels: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            power_levels,
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `α_k` for user `k` (1-based).
    pub fn amplitude(&self, user: usize) -> f64 {
        self.power_levels[user - 1].sqrt()
    }

    pub fn total_power(&self) -> f64 {
        self.power_levels.iter().sum()
    }

    pub(crate) fn check_link(&self, decoder: usize, message: usize) -> Result<()> {
        if message >= 1 && message <= decoder && decoder <= self.num_users {
            Ok(())
        } else {
            Err(Error::DecodingOrder {
                decoder,
                message,
                users: self.num_users,
            })
        }
    }
}

/// Space-domain alphabet `Γ_k` of one user: unit-norm vectors of length `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    vectors: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn new(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidCodebook("codebook is empty".into()))?;
        if dim == 0 {
            return Err(Error::InvalidCodebook("zero-length vectors".into()));
        }
        for (n, w) in vectors.iter().enumerate() {
            if w.len() != dim {
                return Err(Error::InvalidCodebook(format!(
                    "vector {n} has length {}, expected {dim}",
                    w.len()
                )));
            }
            let energy: f64 = w.iter().map(Complex64::norm_sqr).sum();
            if (energy - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::InvalidCodebook(format!(
                    "vector {n} has energy {energy}, expected 1"
                )));
            }
        }
        Ok(Self { vectors })
    }

    /// The standard basis `e_1, …, e_M`: one active antenna per symbol.
    pub fn conventional_sm(num_tx_antennas: usize) -> Result<Self> {
        let vectors = (0..num_tx_antennas)
            .map(|n| {
                let mut e = vec![Complex64::new(0.0, 0.0); num_tx_antennas];
                e[n] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        Self::new(vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn vector(&self, index: usize) -> Option<&[Complex64]> {
        self.vectors.get(index).map(Vec::as_slice)
    }
}

/// One conventional-SM codebook per user. Requires `N_k = M` for every user.
pub fn make_conventional_sm_codebooks(config: &SystemConfig) -> Result<Vec<Codebook>> {
    config.validate()?;
    let m = config.num_tx_antennas;
    if let Some(k) = config.codebook_sizes.iter().position(|&n| n != m) {
        return Err(Error::InvalidCodebook(format!(
            "conventional SM needs N_k = M = {m}, user {} has {}",
            k + 1,
            config.codebook_sizes[k]
        )));
    }
    (0..config.num_users)
        .map(|_| Codebook::conventional_sm(m))
        .collect()
}

fn check_codebooks(config: &SystemConfig, codebooks: &[Codebook]) -> Result<()> {
    if codebooks.len() != config.num_users {
        return Err(Error::InvalidCodebook(format!(
            "{} codebooks for {} users",
            codebooks.len(),
            config.num_users
        )));
    }
    for (k, cb) in codebooks.iter().enumerate() {
        if cb.dimension() != config.num_tx_antennas || cb.len() != config.codebook_sizes[k] {
            return Err(Error::InvalidCodebook(format!(
                "user {} codebook is {}x{}, config expects {}x{}",
                k + 1,
                cb.len(),
                cb.dimension(),
                config.codebook_sizes[k],
                config.num_tx_antennas
            )));
        }
    }
    Ok(())
}

/// Channel vectors `h_r` and the effective gains `b_{r,k}^(n) = h_rᵀ w_k^(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    channel_vectors: Vec<Vec<Complex64>>,
    // [r][k][n], all 0-based
    effective_gains: Vec<Vec<Vec<Complex64>>>,
}

impl ChannelRealization {
    /// Builds a realization from explicit channel vectors (one per user).
    pub fn from_channels(
        config: &SystemConfig,
        codebooks: &[Codebook],
        channel_vectors: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        check_codebooks(config, codebooks)?;
        if channel_vectors.len() != config.num_users
            || channel_vectors
                .iter()
                .any(|h| h.len() != config.num_tx_antennas)
        {
            return Err(Error::InvalidSystem(format!(
                "expected {} channel vectors of length {}",
                config.num_users, config.num_tx_antennas
            )));
        }
        let effective_gains = channel_vectors
            .iter()
            .map(|h| {
                codebooks
                    .iter()
                    .map(|cb| {
                        cb.vectors()
                            .iter()
                            .map(|w| h.iter().zip(w).map(|(a, b)| a * b).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            channel_vectors,
            effective_gains,
        })
    }

    pub fn channel_vectors(&self) -> &[Vec<Complex64>] {
        &self.channel_vectors
    }

    /// `h_r` for user `r` (1-based).
    pub fn channel(&self, user: usize) -> &[Complex64] {
        &self.channel_vectors[user - 1]
    }

    /// `b_{r,k}^(n)` with `r`, `k` 1-based and `n` 0-based.
    pub fn gain(&self, decoder: usize, message: usize, index: usize) -> Complex64 {
        self.effective_gains[decoder - 1][message - 1][index]
    }

    /// All `b_{r,k}^(n)` over `n`.
    pub fn gains(&self, decoder: usize, message: usize) -> &[Complex64] {
        &self.effective_gains[decoder - 1][message - 1]
    }

    /// `|b_{r,k}^(n)|²` over `n`.
    pub fn gain_powers(&self, decoder: usize, message: usize) -> Vec<f64> {
        self.gains(decoder, message)
            .iter()
            .map(Complex64::norm_sqr)
            .collect()
    }

    /// `(1/N_k) Σ_n |b_{r,k}^(n)|²`.
    pub fn average_gain_power(&self, decoder: usize, message: usize) -> f64 {
        let powers = self.gain_powers(decoder, message);
        powers.iter().sum::<f64>() / powers.len() as f64
    }
}

/// Circularly-symmetric `CN(0, variance)` draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Rayleigh channel: every entry of every `h_k` is i.i.d. `CN(0, 1)`.
pub fn draw_channel<R: Rng + ?Sized>(
    config: &SystemConfig,
    codebooks: &[Codebook],
    rng: &mut R,
) -> Result<ChannelRealization> {
    let channels = (0..config.num_users)
        .map(|_| {
            (0..config.num_tx_antennas)
                .map(|_| complex_gaussian(rng, 1.0))
                .collect()
        })
        .collect();
    ChannelRealization::from_channels(config, codebooks, channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSignal {
    pub samples: Vec<Complex64>,
    /// `N_RF = ‖x‖₀`.
    pub rf_chains: usize,
}

fn check_indices(config: &SystemConfig, active_indices: &[usize]) -> Result<()> {
    for (k, (&n, &size)) in active_indices
        .iter()
        .zip(&config.codebook_sizes)
        .enumerate()
    {
        if n >= size {
            return Err(Error::IndexOutOfRange {
                user: k + 1,
                index: n,
                size,
            });
        }
    }
    Ok(())
}

fn check_per_user_lengths(config: &SystemConfig, symbols: usize, indices: usize) -> Result<()> {
    if symbols != config.num_users || indices != config.num_users {
        return Err(Error::InvalidSystem(format!(
            "expected {} symbols and indices, got {symbols} and {indices}",
            config.num_users
        )));
    }
    Ok(())
}

/// Superposition `x = Σ_k α_k s_k w_k^(n_k)`.
pub fn synthesize_transmit_signal(
    config: &SystemConfig,
    codebooks: &[Codebook],
    symbols: &[Complex64],
    active_indices: &[usize],
) -> Result<TransmitSignal> {
    check_codebooks(config, codebooks)?;
    check_per_user_lengths(config, symbols.len(), active_indices.len())?;
    check_indices(config, active_indices)?;
    let mut samples = vec![Complex64::new(0.0, 0.0); config.num_tx_antennas];
    for (k, ((cb, &s), &n)) in codebooks
        .iter()
        .zip(symbols)
        .zip(active_indices)
        .enumerate()
    {
        let scale = config.amplitude(k + 1) * s;
        for (x, w) in samples.iter_mut().zip(&cb.vectors()[n]) {
            *x += scale * w;
        }
    }
    let rf_chains = samples.iter().filter(|x| x.norm_sqr() != 0.0).count();
    Ok(TransmitSignal { samples, rf_chains })
}

/// `y_{r,k} = b_{r,k}^(n_k) α_k s_k + Σ_{t>k} b_{r,t}^(n_t) α_t s_t + v_r`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_received_symbol(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
    symbols: &[Complex64],
    active_indices: &[usize],
    noise: Complex64,
) -> Result<Complex64> {
    config.check_link(decoder, message)?;
    check_per_user_lengths(config, symbols.len(), active_indices.len())?;
    check_indices(config, active_indices)?;
    let y = (message..=config.num_users)
        .map(|t| {
            realization.gain(decoder, t, active_indices[t - 1])
                * config.amplitude(t)
                * symbols[t - 1]
        })
        .sum::<Complex64>();
    Ok(y + noise)
}

/// Component variances `σ_v² + σ_s² Σ_{t=first}^K |b_{r,t}^(n_t)|² α_t²` over all
/// index tuples `(n_first, …, n_K)`, last index varying fastest.
fn tuple_variances(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    first: usize,
) -> Vec<f64> {
    let mut variances = vec![config.noise_power];
    for t in first..=config.num_users {
        let scale = config.signal_power * config.power_levels[t - 1];
        let powers = realization.gain_powers(decoder, t);
        variances = variances
            .iter()
            .flat_map(|&v| powers.iter().map(move |p| v + scale * p))
            .collect();
    }
    variances
}

/// Distribution of the residual interference plus noise `Ω_{r,k}`.
///
/// Equal-weight zero-mean mixture over `(n_{k+1}, …, n_K)`; `CN(0, σ_v²)` when
/// `k = K`. The APM symbols are taken as `CN(0, σ_s²)`.
pub fn mixture_of_interference(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
) -> Result<GaussianMixture> {
    config.check_link(decoder, message)?;
    GaussianMixture::equal_weight_zero_mean(&tuple_variances(
        realization,
        config,
        decoder,
        message + 1,
    ))
}

/// Distribution of the received signal `Y_{r,k}`, over `(n_k, …, n_K)`.
pub fn mixture_of_received(
    realization: &ChannelRealization,
    config: &SystemConfig,
    decoder: usize,
    message: usize,
) -> Result<GaussianMixture> {
    config.check_link(decoder, message)?;
    GaussianMixture::equal_weight_zero_mean(&tuple_variances(realization, config, decoder, message))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_user_config(snr: f64) -> SystemConfig {
        SystemConfig::conventional_sm(4, vec![4.0, 1.0], snr, 1.0).unwrap()
    }

    #[test]
    fn conventional_codebooks_are_standard_basis() {
        let cfg = two_user_config(1.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        assert_eq!(books.len(), 2);
        for cb in &books {
            assert_eq!(cb.len(), 4);
            for (n, w) in cb.vectors().iter().enumerate() {
                assert_eq!(w.iter().map(|x| x.norm_sqr()).sum::<f64>(), 1.0);
                for (m, x) in w.iter().enumerate() {
                    assert_eq!(*x, c(if m == n { 1.0 } else { 0.0 }, 0.0));
                }
            }
        }
        let single = SystemConfig::conventional_sm(1, vec![1.0], 1.0, 1.0).unwrap();
        let books = make_conventional_sm_codebooks(&single).unwrap();
        assert_eq!(books[0].vectors(), &[vec![c(1.0, 0.0)]]);
    }

    #[test]
    fn conventional_codebooks_reject_size_mismatch() {
        let cfg = SystemConfig::new(4, vec![4, 2], vec![1.0, 1.0], 1.0, 1.0).unwrap();
        assert!(matches!(
            make_conventional_sm_codebooks(&cfg),
            Err(Error::InvalidCodebook(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(0, vec![1], vec![1.0], 1.0, 1.0).is_err());
        assert!(SystemConfig::new(2, vec![], vec![], 1.0, 1.0).is_err());
        assert!(SystemConfig::new(2, vec![0], vec![1.0], 1.0, 1.0).is_err());
        assert!(SystemConfig::new(2, vec![2], vec![-1.0], 1.0, 1.0).is_err());
        assert!(SystemConfig::new(2, vec![2], vec![1.0], 0.0, 1.0).is_err());
        let mut cfg = two_user_config(1.0);
        cfg.power_levels.pop();
        assert!(cfg.validate().is_err());
        let cfg = two_user_config(1.0).at_snr_db(20.0).unwrap();
        assert_abs_diff_eq!(cfg.snr(), 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cfg.snr_db(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn codebook_rejects_non_unit_vectors() {
        assert!(Codebook::new(vec![vec![c(1.0, 0.0), c(1.0, 0.0)]]).is_err());
        assert!(Codebook::new(vec![]).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cb = Codebook::new(vec![vec![c(s, 0.0), c(0.0, s)]]).unwrap();
        assert_eq!(cb.dimension(), 2);
    }

    #[test]
    fn channel_entries_have_unit_variance() {
        let cfg = two_user_config(1.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let mut rng = stream(99);
        let draws = 100_000;
        let mut power = vec![0.0; 8];
        for _ in 0..draws {
            let real = draw_channel(&cfg, &books, &mut rng).unwrap();
            for (i, h) in real.channel_vectors().iter().flatten().enumerate() {
                power[i] += h.norm_sqr();
            }
        }
        for p in power {
            let v = p / draws as f64;
            assert!((0.99..=1.01).contains(&v), "variance {v}");
        }
    }

    #[test]
    fn conventional_sm_gain_selects_channel_entry() {
        let cfg = two_user_config(1.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let real = draw_channel(&cfg, &books, &mut stream(5)).unwrap();
        for r in 1..=2 {
            for k in 1..=2 {
                for n in 0..4 {
                    assert_eq!(real.gain(r, k, n), real.channel(r)[n]);
                }
            }
        }
        assert_eq!(real, draw_channel(&cfg, &books, &mut stream(5)).unwrap());
    }

    #[test]
    fn transmit_superposition_and_rf_chains() {
        let cfg = two_user_config(1.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let one = [c(1.0, 0.0), c(1.0, 0.0)];
        let x = synthesize_transmit_signal(&cfg, &books, &one, &[0, 1]).unwrap();
        assert_eq!(
            x.samples,
            vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        );
        assert_eq!(x.rf_chains, 2);

        let x = synthesize_transmit_signal(&cfg, &books, &one, &[2, 2]).unwrap();
        assert_eq!(x.rf_chains, 1);
        assert_eq!(x.samples[2], c(3.0, 0.0));

        let zero = [c(0.0, 0.0); 2];
        let x = synthesize_transmit_signal(&cfg, &books, &zero, &[0, 1]).unwrap();
        assert_eq!(x.rf_chains, 0);
        assert!(x.samples.iter().all(|s| *s == c(0.0, 0.0)));

        assert!(matches!(
            synthesize_transmit_signal(&cfg, &books, &one, &[0, 4]),
            Err(Error::IndexOutOfRange {
                user: 2,
                index: 4,
                size: 4
            })
        ));
    }

    #[test]
    fn received_symbol_follows_sic_order() {
        let cfg = two_user_config(1.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let real = draw_channel(&cfg, &books, &mut stream(8)).unwrap();
        let s = [c(0.3, -1.0), c(-0.7, 0.2)];
        let idx = [1, 3];
        let noise = c(0.01, 0.02);

        let y22 = simulate_received_symbol(&real, &cfg, 2, 2, &s, &idx, noise).unwrap();
        assert_abs_diff_eq!(
            (y22 - (real.gain(2, 2, 3) * s[1] + noise)).norm(),
            0.0,
            epsilon = 1e-14
        );

        let y11 = simulate_received_symbol(&real, &cfg, 1, 1, &s, &idx, c(0.0, 0.0)).unwrap();
        let expected = real.gain(1, 1, 1) * 2.0 * s[0] + real.gain(1, 2, 3) * s[1];
        assert_abs_diff_eq!((y11 - expected).norm(), 0.0, epsilon = 1e-14);

        assert!(matches!(
            simulate_received_symbol(&real, &cfg, 1, 2, &s, &idx, noise),
            Err(Error::DecodingOrder {
                decoder: 1,
                message: 2,
                ..
            })
        ));
    }

    #[test]
    fn mixture_component_counts_and_variances() {
        let cfg = two_user_config(10.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let real = draw_channel(&cfg, &books, &mut stream(1)).unwrap();

        let omega22 = mixture_of_interference(&real, &cfg, 2, 2).unwrap();
        assert_eq!(omega22.len(), 1);
        assert_eq!(omega22.components()[0].variance, 1.0);

        let omega11 = mixture_of_interference(&real, &cfg, 1, 1).unwrap();
        assert_eq!(omega11.len(), 4);
        assert!(omega11.components().iter().all(|c| c.weight == 0.25));
        for (n, comp) in omega11.components().iter().enumerate() {
            let expected = 1.0 + 10.0 * real.gain(1, 2, n).norm_sqr();
            assert_abs_diff_eq!(comp.variance, expected, epsilon = 1e-12);
        }

        let y11 = mixture_of_received(&real, &cfg, 1, 1).unwrap();
        assert_eq!(y11.len(), 16);
        assert!(y11.is_zero_mean());
        assert!(y11.variances().all(|v| v >= cfg.noise_power));
        // Last index fastest: component (n1, n2) sits at 4 n1 + n2 and
        // dominates the interference component n2.
        for n1 in 0..4 {
            for n2 in 0..4 {
                let v = y11.components()[4 * n1 + n2].variance;
                let expected = 1.0
                    + 10.0
                        * (4.0 * real.gain(1, 1, n1).norm_sqr() + real.gain(1, 2, n2).norm_sqr());
                assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
                assert!(v >= omega11.components()[n2].variance);
            }
        }

        assert!(mixture_of_received(&real, &cfg, 1, 2).is_err());
    }

    #[test]
    fn zero_power_collapses_to_noise() {
        let cfg = SystemConfig::conventional_sm(4, vec![0.0, 0.0], 10.0, 2.0).unwrap();
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let real = draw_channel(&cfg, &books, &mut stream(1)).unwrap();
        let y = mixture_of_received(&real, &cfg, 2, 1).unwrap();
        assert!(y.variances().all(|v| v == 2.0));
    }

    #[test]
    fn received_power_matches_mixture_second_moment() {
        let cfg = two_user_config(3.0);
        let books = make_conventional_sm_codebooks(&cfg).unwrap();
        let real = draw_channel(&cfg, &books, &mut stream(21)).unwrap();
        let mut rng = stream(22);
        let draws = 400_000;
        for (r, k) in [(1, 1), (2, 1), (2, 2)] {
            let mut power = 0.0;
            for _ in 0..draws {
                let s = [
                    complex_gaussian(&mut rng, cfg.signal_power),
                    complex_gaussian(&mut rng, cfg.signal_power),
                ];
                let idx = [rng.random_range(0..4), rng.random_range(0..4)];
                let v = complex_gaussian(&mut rng, cfg.noise_power);
                power += simulate_received_symbol(&real, &cfg, r, k, &s, &idx, v)
                    .unwrap()
                    .norm_sqr();
            }
            let empirical = power / draws as f64;
            let analytic = mixture_of_received(&real, &cfg, r, k)
                .unwrap()
                .second_moment();
            assert!(
                (empirical / analytic - 1.0).abs() < 0.01,
                "({r},{k}): {empirical} vs {analytic}"
            );
        }
    }
}
