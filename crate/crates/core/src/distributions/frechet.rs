use serde::{Deserialize, Serialize};

use super::{check_positive, check_probability};
use crate::error::Result;
use crate::Scalar;

/// Fréchet law `exp(-μ x^(-γ))`, `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrechet<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct FrechetParams<T> {
    mu: T,
    gamma: T,
}

#[derive(Deserialize)]
struct RawFrechet<T> {
    mu: T,
    gamma: T,
}

impl<T: Scalar> TryFrom<RawFrechet<T>> for FrechetParams<T> {
    type Error = crate::Error;
    fn try_from(raw: RawFrechet<T>) -> Result<Self> {
        Self::new(raw.mu, raw.gamma)
    }
}

impl<T: Scalar> FrechetParams<T> {
    pub fn new(mu: T, gamma: T) -> Result<Self> {
        Ok(Self {
            mu: check_positive("Frechet mu", mu)?,
            gamma: check_positive("Frechet gamma", gamma)?,
        })
    }

    /// Limit of `F(x; m r1, c m, γ)` as `m → ∞`.
    ///
    /// `m r1 ln(1 + 1/(c m x^γ)) → (r1 / c) x^(-γ)`, so `μ = r1 / c`.
    pub fn limit_of(r1: T, c: T, gamma: T) -> Result<Self> {
        let r1 = check_positive("r1", r1)?;
        let c = check_positive("c", c)?;
        Self::new(r1 / c, gamma)
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn cdf(&self, x: T) -> T {
        if !(x > T::zero()) {
            return T::zero();
        }
        (-self.mu * x.powf(-self.gamma)).exp()
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        let p = check_probability(p)?;
        Ok((self.mu / -p.ln()).powf(self.gamma.recip()))
    }
}

pub fn frechet_cdf<T: Scalar>(params: &FrechetParams<T>, x: T) -> T {
    params.cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_scale_point() {
        let f = FrechetParams::new(3.0, 2.0_f64).unwrap();
        let x = 3.0_f64.powf(0.5);
        assert!((f.cdf(x) - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((f.quantile((-1.0_f64).exp()).unwrap() - x).abs() < 1e-14);
    }

    #[test]
    fn limit_scale() {
        let f = FrechetParams::limit_of(0.85, 0.05, 2.0_f64).unwrap();
        assert!((f.mu() - 17.0).abs() < 1e-12);
    }
}
