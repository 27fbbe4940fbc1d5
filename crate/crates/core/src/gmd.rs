//! Scalar circularly-symmetric complex Gaussian mixtures.
//!
//! A mixture has density `f(a) = Σ β_l / (π σ_l²) · exp(-|a - μ_l|² / σ_l²)`.
//! Entropies are reported in bits.

use std::f64::consts::{E, LN_2, PI};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible component variance.
pub const VARIANCE_FLOOR: f64 = 1e-300;

/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Complex64,
    pub variance: f64,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: Complex64, variance: f64) -> Result<Self> {
        let c = Self {
            weight,
            mean,
            variance,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn zero_mean(weight: f64, variance: f64) -> Result<Self> {
        Self::new(weight, Complex64::new(0.0, 0.0), variance)
    }

    fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::InvalidMixture(format!(
                "weight {} outside (0, 1]",
                self.weight
            )));
        }
        if !self.variance.is_finite() || self.variance < VARIANCE_FLOOR {
            return Err(Error::InvalidMixture(format!(
                "variance {} is degenerate or non-finite",
                self.variance
            )));
        }
        if !(self.mean.re.is_finite() && self.mean.im.is_finite()) {
            return Err(Error::InvalidMixture(format!(
                "mean {} is not finite",
                self.mean
            )));
        }
        Ok(())
    }

    /// Density of this component alone (weight not applied).
    pub fn density(&self, point: Complex64) -> f64 {
        (-(point - self.mean).norm_sqr() / self.variance).exp() / (PI * self.variance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GaussianComponent>", into = "Vec<GaussianComponent>")]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
}

impl TryFrom<Vec<GaussianComponent>> for GaussianMixture {
    type Error = Error;

    fn try_from(components: Vec<GaussianComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<GaussianMixture> for Vec<GaussianComponent> {
    fn from(m: GaussianMixture) -> Self {
        m.components
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMixture("mixture has no components".into()));
        }
        for c in &components {
            c.validate()?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidMixture(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    /// Equal weights `1/L`, all means zero.
    pub fn equal_weight_zero_mean(variances: &[f64]) -> Result<Self> {
        let weight = 1.0 / variances.len() as f64;
        let components = variances
            .iter()
            .map(|&v| GaussianComponent::zero_mean(weight, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    /// Single component `CN(0, variance)`.
    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::equal_weight_zero_mean(&[variance])
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn variances(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().map(|c| c.variance)
    }

    pub fn is_zero_mean(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.mean.re == 0.0 && c.mean.im == 0.0)
    }

    /// `E|A|²`, the second moment of the mixture.
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (c.variance + c.mean.norm_sqr()))
            .sum()
    }

    /// Copy with every variance multiplied by `factor`.
    pub fn scaled_variances(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.components
                .iter()
                .map(|c| GaussianComponent {
                    variance: c.variance * factor,
                    ..*c
                })
                .collect(),
        )
    }

    /// Copy with component `index` replaced by two identical halves.
    pub fn split_component(&self, index: usize) -> Result<Self> {
        let mut components = self.components.clone();
        let c = components
            .get_mut(index)
            .ok_or_else(|| Error::InvalidMixture(format!("no component {index} to split")))?;
        c.weight *= 0.5;
        let half = *c;
        components.insert(index + 1, half);
        Self::new(components)
    }

    pub fn log_density(&self) -> LogDensity {
        LogDensity::new(self)
    }

    /// Mixture density at `point`.
    pub fn pdf(&self, point: Complex64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.density(point))
            .sum()
    }

    pub fn sampler(&self) -> Sampler<'_> {
        Sampler::new(self)
    }

    /// `count` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Complex64> {
        let sampler = self.sampler();
        (0..count).map(|_| sampler.draw(rng)).collect()
    }
}

/// Natural-log density evaluated by log-sum-exp over components.
#[derive(Debug, Clone)]
pub struct LogDensity {
    // (ln β - ln πσ², 1/σ², μ) per component
    terms: Vec<(f64, f64, Complex64)>,
}

impl LogDensity {
    fn new(mixture: &GaussianMixture) -> Self {
        let terms = mixture
            .components
            .iter()
            .map(|c| {
                (
                    c.weight.ln() - (PI * c.variance).ln(),
                    c.variance.recip(),
                    c.mean,
                )
            })
            .collect();
        Self { terms }
    }

    pub fn at(&self, point: Complex64) -> f64 {
        let exponent = |&(offset, precision, mean): &(f64, f64, Complex64)| {
            offset - (point - mean).norm_sqr() * precision
        };
        let peak = self
            .terms
            .iter()
            .map(exponent)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self.terms.iter().map(|t| (exponent(t) - peak).exp()).sum();
        peak + sum.ln()
    }

    /// Log density at a point of squared modulus `radius_sq`; valid only for
    /// zero-mean mixtures.
    pub fn at_radius_sq(&self, radius_sq: f64) -> f64 {
        let exponent =
            |&(offset, precision, _): &(f64, f64, Complex64)| offset - radius_sq * precision;
        let peak = self
            .terms
            .iter()
            .map(exponent)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self.terms.iter().map(|t| (exponent(t) - peak).exp()).sum();
        peak + sum.ln()
    }
}

pub struct Sampler<'a> {
    mixture: &'a GaussianMixture,
    index: Option<WeightedIndex<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(mixture: &'a GaussianMixture) -> Self {
        let index = (mixture.len() > 1).then(|| {
            WeightedIndex::new(mixture.components.iter().map(|c| c.weight))
                .expect("validated weights are positive")
        });
        Self { mixture, index }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let l = self.index.as_ref().map_or(0, |idx| idx.sample(rng));
        let c = &self.mixture.components[l];
        let scale = (0.5 * c.variance).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c.mean + Complex64::new(scale * re, scale * im)
    }

    /// Draw together with the selected component index.
    pub fn draw_labelled<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Complex64) {
        let l = self.index.as_ref().map_or(0, |idx| idx.sample(rng));
        let c = &self.mixture.components[l];
        let scale = (0.5 * c.variance).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        (l, c.mean + Complex64::new(scale * re, scale * im))
    }
}

/// `∫ f₁(a) f₂(a) da` over the complex plane.
pub fn overlap_integral(c1: &GaussianComponent, c2: &GaussianComponent) -> f64 {
    let total = c1.variance + c2.variance;
    (-(c1.mean - c2.mean).norm_sqr() / total).exp() / (PI * total)
}

/// Jensen lower bound `-Σ_l β_l log₂(Σ_t β_t z_lt)`.
pub fn entropy_lower_bound(mixture: &GaussianMixture) -> f64 {
    let comps = mixture.components();
    -comps
        .iter()
        .map(|cl| {
            let inner: f64 = comps
                .iter()
                .map(|ct| ct.weight * overlap_integral(cl, ct))
                .sum();
            cl.weight * inner.log2()
        })
        .sum::<f64>()
}

/// Upper bound `Σ_l β_l log₂(π e σ_l² / β_l)`.
pub fn entropy_upper_bound(mixture: &GaussianMixture) -> f64 {
    mixture
        .components()
        .iter()
        .map(|c| c.weight * (PI * E * c.variance / c.weight).log2())
        .sum()
}

/// Both bounds for an equal-weight zero-mean mixture with the given variances,
/// in the reduced closed form. Returns `(lower, upper)`.
pub fn entropy_bounds_equal_weight_zero_mean(variances: &[f64]) -> Result<(f64, f64)> {
    if variances.is_empty() {
        return Err(Error::InvalidMixture("mixture has no components".into()));
    }
    if let Some(v) = variances
        .iter()
        .find(|v| !v.is_finite() || **v < VARIANCE_FLOOR)
    {
        return Err(Error::InvalidMixture(format!(
            "variance {v} is degenerate or non-finite"
        )));
    }
    let len = variances.len() as f64;
    let mean_log_inner = variances
        .iter()
        .map(|&vl| {
            variances
                .iter()
                .map(|&vt| (vl + vt).recip())
                .sum::<f64>()
                .log2()
        })
        .sum::<f64>()
        / len;
    let mean_log_var = variances.iter().map(|v| v.log2()).sum::<f64>() / len;
    let lower = (PI * len).log2() - mean_log_inner;
    let upper = (PI * E * len).log2() + mean_log_var;
    Ok((lower, upper))
}

/// Exact entropy of `CN(μ, variance)` in bits.
pub fn gaussian_entropy(variance: f64) -> f64 {
    (PI * E * variance).log2()
}

pub(crate) fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}
