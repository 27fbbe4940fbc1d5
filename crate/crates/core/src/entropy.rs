//! Differential entropy of Gaussian mixtures.
//!
//! Estimators implement [`EntropyEstimator`] and are looked up by name through
//! [`EstimatorRegistry`], which is how the experiment runner selects between the
//! quadrature and Monte Carlo paths.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmd::{nats_to_bits, GaussianMixture};
use crate::quadrature;
use crate::rng::Stream;

/// Tail mass of the mixture beyond the radial truncation point.
pub const TAIL_MASS: f64 = 1e-14;

const MAX_SEGMENTS: usize = 20_000;

/// An entropy value in bits with its uncertainty.
///
/// For Monte Carlo estimates `std_error` is the standard error of the sample
/// mean; for quadrature (`sample_count == 0`) it is the integration error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sample_count: usize,
}

impl EntropyEstimate {
    /// A closed-form value with no estimation error.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            sample_count: 0,
        }
    }

    /// `self - other`, errors combined root-sum-square.
    pub fn minus(&self, other: &Self) -> Self {
        Self {
            value: self.value - other.value,
            std_error: self.std_error.hypot(other.std_error),
            sample_count: self.sample_count.max(other.sample_count),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            sample_count: self.sample_count,
        }
    }
}

impl fmt::Display for EntropyEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.2e} bits", self.value, self.std_error)
    }
}

pub trait EntropyEstimator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Monte Carlo draws per entropy evaluation, zero for deterministic methods.
    fn sample_count(&self) -> usize {
        0
    }

    /// `rng` is ignored by deterministic estimators.
    fn estimate(&self, mixture: &GaussianMixture, rng: &mut Stream) -> Result<EntropyEstimate>;
}

/// `h(A)` of a mixture by the chosen estimator.
pub fn entropy_exact(
    mixture: &GaussianMixture,
    estimator: &dyn EntropyEstimator,
    rng: &mut Stream,
) -> Result<EntropyEstimate> {
    estimator.estimate(mixture, rng)
}

/// Adaptive one-dimensional integration over the radius of a zero-mean mixture.
///
/// With `u = |a|²` the entropy becomes `-π ∫₀^∞ f(u) ln f(u) du`, integrated up
/// to the radius where the tail mass drops below [`TAIL_MASS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuadrature {
    /// Absolute tolerance in bits.
    pub tolerance: f64,
}

impl RadialQuadrature {
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidEstimator(format!(
                "quadrature tolerance must be positive, got {tolerance}"
            )));
        }
        Ok(Self { tolerance })
    }
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self { tolerance: 1e-10 }
    }
}

impl EntropyEstimator for RadialQuadrature {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn estimate(&self, mixture: &GaussianMixture, _rng: &mut Stream) -> Result<EntropyEstimate> {
        if !mixture.is_zero_mean() {
            return Err(Error::UnsupportedGeometry(
                "radial quadrature needs a zero-mean mixture".into(),
            ));
        }
        let log_f = mixture.log_density();
        let max_var = mixture.variances().fold(0.0, f64::max);
        let cutoff = max_var * (1.0 / TAIL_MASS).ln();

        let mut breakpoints: Vec<f64> = mixture
            .variances()
            .flat_map(|v| [0.5 * v, 2.0 * v, 8.0 * v])
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        let integral = quadrature::integrate(
            |u| {
                let lf = log_f.at_radius_sq(u);
                -PI * lf.exp() * lf
            },
            0.0,
            cutoff,
            &breakpoints,
            self.tolerance * LN_2,
            MAX_SEGMENTS,
        );
        let tail = tail_bound_nats(mixture, cutoff);
        Ok(EntropyEstimate {
            value: nats_to_bits(integral.value),
            std_error: nats_to_bits(integral.abs_error + tail),
            sample_count: 0,
        })
    }
}

/// Bound on `|∫_U^∞ -π f ln f du|` using `-ln f ≤ -ln(β_j f_j)` for the widest
/// component `j`.
fn tail_bound_nats(mixture: &GaussianMixture, cutoff: f64) -> f64 {
    let widest = mixture
        .components()
        .iter()
        .max_by(|a, b| a.variance.total_cmp(&b.variance))
        .expect("nonempty mixture");
    let offset = (PI * widest.variance / widest.weight).ln().abs();
    mixture
        .components()
        .iter()
        .map(|c| {
            let mass = c.weight * (-cutoff / c.variance).exp();
            mass * (offset + (cutoff + c.variance) / widest.variance)
        })
        .sum()
}

/// Sample mean of `-log₂ f(a)` over draws from the mixture itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub samples: usize,
}

impl MonteCarlo {
    pub fn new(samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidEstimator(
                "Monte Carlo needs at least one sample".into(),
            ));
        }
        Ok(Self { samples })
    }
}

impl EntropyEstimator for MonteCarlo {
    fn name(&self) -> &'static str {
        "montecarlo"
    }

    fn sample_count(&self) -> usize {
        self.samples
    }

    fn estimate(&self, mixture: &GaussianMixture, rng: &mut Stream) -> Result<EntropyEstimate> {
        let log_f = mixture.log_density();
        let sampler = mixture.sampler();
        // Welford accumulation of -ln f.
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..self.samples {
            let x = -log_f.at(sampler.draw(rng));
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let n = self.samples as f64;
        let std_error = if self.samples > 1 {
            (m2 / (n - 1.0) / n).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(EntropyEstimate {
            value: nats_to_bits(mean),
            std_error: nats_to_bits(std_error),
            sample_count: self.samples,
        })
    }
}

/// Parameters every registered estimator factory may draw from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    pub tolerance: f64,
    pub samples: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            samples: 1_000_000,
        }
    }
}

pub type EstimatorFactory = fn(&EstimatorParams) -> Result<Box<dyn EntropyEstimator>>;

/// Name-indexed entropy estimators.
pub struct EstimatorRegistry {
    factories: BTreeMap<&'static str, EstimatorFactory>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `quadrature` and `montecarlo`.
    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register("quadrature", |p| {
            Ok(Box::new(RadialQuadrature::new(p.tolerance)?))
        });
        registry.register("montecarlo", |p| Ok(Box::new(MonteCarlo::new(p.samples)?)));
        registry
    }

    pub fn register(&mut self, name: &'static str, factory: EstimatorFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(
        &self,
        name: &str,
        params: &EstimatorParams,
    ) -> Result<Box<dyn EntropyEstimator>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "entropy estimator",
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })?;
        factory(params)
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmd::{
        entropy_lower_bound, entropy_upper_bound, gaussian_entropy, GaussianComponent,
    };
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn quad(m: &GaussianMixture) -> EntropyEstimate {
        RadialQuadrature::new(1e-11)
            .unwrap()
            .estimate(m, &mut stream(0))
            .unwrap()
    }

    #[test]
    fn quadrature_recovers_gaussian_entropy() {
        for var in [1e-6, 0.3, 1.0, 17.0, 4e5] {
            let m = GaussianMixture::gaussian(var).unwrap();
            let h = quad(&m);
            assert_abs_diff_eq!(h.value, gaussian_entropy(var), epsilon = 1e-9);
            assert!(h.std_error < 1e-9);
        }
    }

    /// Plain composite Simpson on `r ∈ [0, R]` in the original radial form
    /// `-∫ 2πr f ln f dr`, sharing nothing with the production path.
    fn simpson_radial_oracle(vars: &[f64]) -> f64 {
        let l = vars.len() as f64;
        let f = |r: f64| {
            vars.iter()
                .map(|v| (-(r * r) / v).exp() / (PI * v))
                .sum::<f64>()
                / l
        };
        let g = |r: f64| {
            let fr = f(r);
            if fr > 0.0 {
                -2.0 * PI * r * fr * fr.ln()
            } else {
                0.0
            }
        };
        let r_max = (vars.iter().cloned().fold(0.0, f64::max) * 40.0).sqrt();
        let n = 400_000;
        let h = r_max / n as f64;
        let mut acc = g(0.0) + g(r_max);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
        }
        acc * h / 3.0 / LN_2
    }

    #[test]
    fn quadrature_matches_simpson_oracle() {
        for vars in [vec![1.0, 4.0], vec![0.5, 1.0, 2.0], vec![1.0, 10.0]] {
            let m = GaussianMixture::equal_weight_zero_mean(&vars).unwrap();
            assert_abs_diff_eq!(quad(&m).value, simpson_radial_oracle(&vars), epsilon = 1e-9);
        }
    }

    #[test]
    fn three_component_sandwich_golden() {
        let m = GaussianMixture::equal_weight_zero_mean(&[0.5, 1.0, 2.0]).unwrap();
        let h = quad(&m).value;
        let lb = entropy_lower_bound(&m);
        assert!(lb <= h);
        assert_abs_diff_eq!(h, 3.276_924_114_545_158, epsilon = 1e-9);
        assert_abs_diff_eq!(lb, 2.700_451_740_442_53, epsilon = 1e-12);
    }

    #[test]
    fn upper_bound_dominates_wide_pair() {
        let m = GaussianMixture::equal_weight_zero_mean(&[1.0, 10.0]).unwrap();
        let h = quad(&m).value;
        assert!(entropy_upper_bound(&m) >= h);
        assert_abs_diff_eq!(h, 5.252_259_700_560_867, epsilon = 1e-9);
    }

    #[test]
    fn quadrature_rejects_nonzero_mean() {
        let m = GaussianMixture::new(vec![GaussianComponent::new(
            1.0,
            Complex64::new(1.0, 0.0),
            1.0,
        )
        .unwrap()])
        .unwrap();
        let err = quad_err(&m);
        assert!(matches!(err, Error::UnsupportedGeometry(_)));
    }

    fn quad_err(m: &GaussianMixture) -> Error {
        RadialQuadrature::default()
            .estimate(m, &mut stream(0))
            .unwrap_err()
    }

    #[test]
    fn monte_carlo_single_gaussian() {
        let m = GaussianMixture::gaussian(1.0).unwrap();
        let h = MonteCarlo::new(200_000)
            .unwrap()
            .estimate(&m, &mut stream(1))
            .unwrap();
        assert_eq!(h.sample_count, 200_000);
        assert!((h.value - gaussian_entropy(1.0)).abs() < 3.0 * h.std_error);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let m = GaussianMixture::equal_weight_zero_mean(&[1.0, 4.0]).unwrap();
        let mc = MonteCarlo::new(1_000_000)
            .unwrap()
            .estimate(&m, &mut stream(2))
            .unwrap();
        let q = quad(&m);
        assert!(
            (mc.value - q.value).abs() <= 3.0 * mc.std_error,
            "mc {mc} quad {q}"
        );
    }

    #[test]
    fn monte_carlo_single_sample_has_unbounded_error() {
        let m = GaussianMixture::gaussian(1.0).unwrap();
        let h = MonteCarlo::new(1)
            .unwrap()
            .estimate(&m, &mut stream(0))
            .unwrap();
        assert!(h.std_error.is_infinite());
        assert!(MonteCarlo::new(0).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic_per_stream() {
        let m = GaussianMixture::equal_weight_zero_mean(&[1.0, 2.0, 9.0]).unwrap();
        let mc = MonteCarlo::new(1000).unwrap();
        assert_eq!(
            mc.estimate(&m, &mut stream(4)).unwrap(),
            mc.estimate(&m, &mut stream(4)).unwrap()
        );
    }

    #[test]
    fn registry_builds_by_name() {
        let reg = EstimatorRegistry::builtin();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            ["montecarlo", "quadrature"]
        );
        let params = EstimatorParams {
            tolerance: 1e-9,
            samples: 10,
        };
        assert_eq!(
            reg.create("quadrature", &params).unwrap().name(),
            "quadrature"
        );
        assert_eq!(
            reg.create("montecarlo", &params).unwrap().sample_count(),
            10
        );
        assert!(matches!(
            reg.create("simpson", &params),
            Err(Error::UnknownStrategy { .. })
        ));
        let bad = EstimatorParams {
            tolerance: -1.0,
            samples: 0,
        };
        assert!(reg.create("quadrature", &bad).is_err());
        assert!(reg.create("montecarlo", &bad).is_err());
    }
}
