use serde::{Deserialize, Serialize};

use super::{check_positive, check_probability};
use crate::error::Result;
use crate::special::{invert_cdf, ln_beta, regularized_incomplete_beta};
use crate::Scalar;

/// Snedecor–Fisher law `Q_{k,r}` with density
/// `f(x) = Γ(k+r)/(Γ(k)Γ(r)) (k/r)^k x^(k-1) / (1 + k x / r)^(k+r)`, `x ≥ 0`.
///
/// `Q_{k,r}` has the law of `r G_k / (k G_r)` for independent unit-rate gamma
/// variables, i.e. the classical `F(2k, 2r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSf<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SFParams<T> {
    k: T,
    r: T,
}

#[derive(Deserialize)]
struct RawSf<T> {
    k: T,
    r: T,
}

impl<T: Scalar> TryFrom<RawSf<T>> for SFParams<T> {
    type Error = crate::Error;
    fn try_from(raw: RawSf<T>) -> Result<Self> {
        Self::new(raw.k, raw.r)
    }
}

impl<T: Scalar> SFParams<T> {
    /// `k` is the numerator parameter, `r` the denominator parameter.
    pub fn new(k: T, r: T) -> Result<Self> {
        Ok(Self {
            k: check_positive("Snedecor-Fisher k", k)?,
            r: check_positive("Snedecor-Fisher r", r)?,
        })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn pdf(&self, x: T) -> T {
        if x < T::zero() {
            return T::zero();
        }
        let (k, r) = (self.k, self.r);
        let one = T::one();
        let c = k / r;
        let ln = k * c.ln() + (k - one) * x.ln() - (k + r) * (c * x).ln_1p() - ln_beta(k, r);
        ln.exp()
    }

    pub fn cdf(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Ok(T::zero());
        }
        if x.is_infinite() {
            return Ok(T::one());
        }
        let kx = self.k * x;
        let denom = kx + self.r;
        let y = kx / denom;
        if y <= T::lit(0.5) {
            regularized_incomplete_beta(self.k, self.r, y)
        } else {
            let w = self.r / denom;
            Ok(T::one() - regularized_incomplete_beta(self.r, self.k, w)?)
        }
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        let p = check_probability(p)?;
        invert_cdf(|x| self.cdf(x), p, T::zero(), T::one(), false)
    }
}

pub fn sf_cdf<T: Scalar>(params: &SFParams<T>, x: T) -> Result<T> {
    params.cdf(x)
}

pub fn sf_quantile<T: Scalar>(params: &SFParams<T>, p: T) -> Result<T> {
    params.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_one_for_equal_parameters() {
        for &k in &[0.4, 1.0, 7.5_f64] {
            let q = SFParams::new(k, k).unwrap();
            assert!((q.cdf(1.0).unwrap() - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn support_starts_at_zero() {
        let q = SFParams::new(2.0, 3.0_f64).unwrap();
        assert_eq!(q.cdf(0.0).unwrap(), 0.0);
        assert_eq!(q.cdf(-1.0).unwrap(), 0.0);
        assert_eq!(q.pdf(-1.0), 0.0);
    }

    #[test]
    fn reciprocal_identity() {
        // Q_{k,r} has the law of 1/Q_{r,k}
        let a = SFParams::new(2.0, 5.0_f64).unwrap();
        let b = SFParams::new(5.0, 2.0_f64).unwrap();
        for &x in &[0.1, 0.7, 1.3, 9.0_f64] {
            let lhs = a.cdf(x).unwrap();
            let rhs = 1.0 - b.cdf(1.0 / x).unwrap();
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn exponential_ratio_closed_form() {
        // k = r = 1: Q = G1/G1', P(Q <= x) = x / (1 + x)
        let q = SFParams::new(1.0, 1.0_f64).unwrap();
        for &x in &[0.01, 0.5, 3.0, 1e4_f64] {
            assert!((q.cdf(x).unwrap() - x / (1.0 + x)).abs() < 1e-14);
            assert!((q.pdf(x) - 1.0 / (1.0 + x).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn quantile_round_trip() {
        let q = SFParams::new(0.85, 12.75_f64).unwrap();
        for &p in &[0.01, 0.5, 0.95, 0.99, 0.999_f64] {
            let x = q.quantile(p).unwrap();
            assert!((q.cdf(x).unwrap() - p).abs() < 1e-12);
        }
    }
}
