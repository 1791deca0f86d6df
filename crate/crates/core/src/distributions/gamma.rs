use serde::{Deserialize, Serialize};

use super::{check_positive, check_probability};
use crate::error::Result;
use crate::special::{invert_cdf, ln_gamma, regularized_lower_gamma};
use crate::Scalar;

/// Gamma law with density `rate^shape / Γ(shape) x^(shape-1) e^(-rate x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGamma<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GammaParams<T> {
    shape: T,
    rate: T,
}

#[derive(Deserialize)]
struct RawGamma<T> {
    shape: T,
    rate: T,
}

impl<T: Scalar> TryFrom<RawGamma<T>> for GammaParams<T> {
    type Error = crate::Error;
    fn try_from(raw: RawGamma<T>) -> Result<Self> {
        Self::new(raw.shape, raw.rate)
    }
}

impl<T: Scalar> GammaParams<T> {
    pub fn new(shape: T, rate: T) -> Result<Self> {
        Ok(Self {
            shape: check_positive("gamma shape", shape)?,
            rate: check_positive("gamma rate", rate)?,
        })
    }

    pub fn shape(&self) -> T {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn mean(&self) -> T {
        self.shape / self.rate
    }

    pub fn variance(&self) -> T {
        self.shape / (self.rate * self.rate)
    }

    pub fn pdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        let one = T::one();
        let ln = self.shape * self.rate.ln() + (self.shape - one) * x.ln() - self.rate * x - ln_gamma(self.shape);
        ln.exp()
    }

    pub fn cdf(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Ok(T::zero());
        }
        regularized_lower_gamma(self.shape, self.rate * x)
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        let p = check_probability(p)?;
        invert_cdf(|x| self.cdf(x), p, T::zero(), self.mean(), false)
    }
}

pub fn gamma_cdf<T: Scalar>(params: &GammaParams<T>, x: T) -> Result<T> {
    params.cdf(x)
}

pub fn gamma_quantile<T: Scalar>(params: &GammaParams<T>, p: T) -> Result<T> {
    params.quantile(p)
}
