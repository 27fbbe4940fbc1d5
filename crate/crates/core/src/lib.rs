pub mod baselines;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod gmd;
pub mod mi;
pub mod quadrature;
pub mod rng;
pub mod system;
