use serde::{Deserialize, Serialize};

use super::{check_positive, check_probability};
use crate::error::Result;
use crate::special::{invert_cdf, ln_beta, regularized_incomplete_beta};
use crate::Scalar;

/// Beta law of the share statistic, stored in the `(k, r)` order of the
/// density `p(x; k, r) ∝ (1 - x)^(k-1) x^(r-1)` on `[0, 1]`.
///
/// In the conventional `Beta(α, β)` notation this is `Beta(α = r, β = k)`.
/// For the share of one gamma volume in a window of `m` volumes with common
/// shape `r`, `k = (m - 1) r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeta<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct BetaParams<T> {
    k: T,
    r: T,
}

#[derive(Deserialize)]
struct RawBeta<T> {
    k: T,
    r: T,
}

impl<T: Scalar> TryFrom<RawBeta<T>> for BetaParams<T> {
    type Error = crate::Error;
    fn try_from(raw: RawBeta<T>) -> Result<Self> {
        Self::new(raw.k, raw.r)
    }
}

impl<T: Scalar> BetaParams<T> {
    pub fn new(k: T, r: T) -> Result<Self> {
        Ok(Self {
            k: check_positive("beta k", k)?,
            r: check_positive("beta r", r)?,
        })
    }

    /// Null law of `V_target / ΣV` for `m` homogeneous gamma volumes of shape `r`.
    pub fn share_of_one(m: usize, r: T) -> Result<Self> {
        Self::new(T::from_count(m.saturating_sub(1)) * r, r)
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn r(&self) -> T {
        self.r
    }

    /// Conventional first shape parameter (exponent of `x`), equal to `r`.
    pub fn alpha(&self) -> T {
        self.r
    }

    /// Conventional second shape parameter (exponent of `1 - x`), equal to `k`.
    pub fn beta(&self) -> T {
        self.k
    }

    pub fn mean(&self) -> T {
        self.r / (self.k + self.r)
    }

    pub fn pdf(&self, x: T) -> T {
        if x < T::zero() || x > T::one() {
            return T::zero();
        }
        let one = T::one();
        let ln = (self.k - one) * (-x).ln_1p() + (self.r - one) * x.ln() - ln_beta(self.r, self.k);
        ln.exp()
    }

    pub fn cdf(&self, x: T) -> Result<T> {
        if x <= T::zero() {
            return Ok(T::zero());
        }
        if x >= T::one() {
            return Ok(T::one());
        }
        regularized_incomplete_beta(self.r, self.k, x)
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        let p = check_probability(p)?;
        invert_cdf(|x| self.cdf(x), p, T::zero(), T::one(), true)
    }
}

pub fn beta_cdf<T: Scalar>(params: &BetaParams<T>, x: T) -> Result<T> {
    params.cdf(x)
}

pub fn beta_quantile<T: Scalar>(params: &BetaParams<T>, p: T) -> Result<T> {
    params.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_median() {
        let u = BetaParams::new(1.0, 1.0).unwrap();
        assert!((u.quantile(0.5_f64).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_exponents_are_symmetric() {
        for &k in &[0.3, 1.0, 4.2_f64] {
            let b = BetaParams::new(k, k).unwrap();
            assert!((b.cdf(0.5).unwrap() - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn argument_order_follows_density() {
        // density ∝ (1-x)^(k-1) x^(r-1) with k=3, r=1 is 3(1-x)^2: cdf = 1 - (1-x)^3
        let b = BetaParams::new(3.0, 1.0).unwrap();
        let x = 0.2_f64;
        assert!((b.cdf(x).unwrap() - (1.0 - (1.0 - x).powi(3))).abs() < 1e-14);
        assert!((b.pdf(x) - 3.0 * (1.0 - x).powi(2)).abs() < 1e-13);
        assert!((b.mean() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn quantile_round_trip() {
        let b = BetaParams::share_of_one(15, 0.85_f64).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let x = b.quantile(p).unwrap();
            assert!((b.cdf(x).unwrap() - p).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BetaParams::new(0.0, 1.0_f64).is_err());
        assert!(BetaParams::new(1.0, f64::INFINITY).is_err());
        let b = BetaParams::new(1.0, 1.0_f64).unwrap();
        assert!(b.quantile(0.0).is_err());
        assert!(b.quantile(1.0).is_err());
    }
}
