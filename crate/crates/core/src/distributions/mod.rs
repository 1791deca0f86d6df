//! Probability laws used by the tests: tempered Snedecor–Fisher, Snedecor–Fisher,
//! beta, gamma, negative binomial and Fréchet, plus seeded samplers.
//!
//! All continuous laws expose `cdf`, `quantile` and `pdf` on their parameter
//! type. The free functions named after each operation are thin wrappers.

mod beta;
mod frechet;
mod gamma;
mod negbin;
mod sampling;
mod snedecor;
mod tempered;

pub use beta::{beta_cdf, beta_quantile, BetaParams};
pub use frechet::{frechet_cdf, FrechetParams};
pub use gamma::{gamma_cdf, gamma_quantile, GammaParams};
pub use negbin::{negbin_pmf, NegBinParams};
pub use sampling::{
    draw_gamma, draw_negbin, draw_tempered_sf, rng_from_seed, sample_gamma, sample_negbin, sample_tempered_sf,
    substream, SimRng,
};
pub use snedecor::{sf_cdf, sf_quantile, SFParams};
pub use tempered::{tempered_sf_cdf, tempered_sf_quantile, TemperedSFParams};

pub use crate::special::regularized_incomplete_beta;

use crate::error::{domain, Result};
use crate::Scalar;

pub(crate) fn check_positive<T: Scalar>(name: &str, v: T) -> Result<T> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{name} must be a positive finite number, got {v}")))
    }
}

pub(crate) fn check_probability<T: Scalar>(p: T) -> Result<T> {
    if p > T::zero() && p < T::one() {
        Ok(p)
    } else {
        Err(domain(format!("probability must lie in (0, 1), got {p}")))
    }
}
