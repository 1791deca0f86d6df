use serde::{Deserialize, Serialize};

use super::check_positive;
use crate::error::{domain, Result};
use crate::special::ln_gamma;
use crate::Scalar;

/// Negative binomial law on `{0, 1, 2, …}` with
/// `P(N = n) = Γ(n + r) / (n! Γ(r)) p^r (1 - p)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNegBin<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct NegBinParams<T> {
    r: T,
    p: T,
}

#[derive(Deserialize)]
struct RawNegBin<T> {
    r: T,
    p: T,
}

impl<T: Scalar> TryFrom<RawNegBin<T>> for NegBinParams<T> {
    type Error = crate::Error;
    fn try_from(raw: RawNegBin<T>) -> Result<Self> {
        Self::new(raw.r, raw.p)
    }
}

impl<T: Scalar> NegBinParams<T> {
    pub fn new(r: T, p: T) -> Result<Self> {
        let r = check_positive("negative binomial r", r)?;
        if !(p > T::zero() && p < T::one()) {
            return Err(domain(format!("negative binomial p must lie in (0, 1), got {p}")));
        }
        Ok(Self { r, p })
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn mean(&self) -> T {
        self.r * (T::one() - self.p) / self.p
    }

    pub fn variance(&self) -> T {
        self.mean() / self.p
    }

    pub fn ln_pmf(&self, n: u64) -> T {
        let nf = <T as num_traits::FromPrimitive>::from_u64(n).expect("count fits in scalar");
        let r = self.r;
        ln_gamma(nf + r) - ln_gamma(nf + T::one()) - ln_gamma(r) + r * self.p.ln() + nf * (-self.p).ln_1p()
    }

    pub fn pmf(&self, n: u64) -> T {
        if n == 0 {
            return self.p.powf(self.r);
        }
        self.ln_pmf(n).exp()
    }

    /// `P(N ≤ n)` by summing the mass recursively.
    pub fn cdf(&self, n: u64) -> T {
        let q = T::one() - self.p;
        let mut term = self.p.powf(self.r);
        let mut acc = term;
        for j in 1..=n {
            let jf = <T as num_traits::FromPrimitive>::from_u64(j).expect("count fits in scalar");
            term = term * (jf - T::one() + self.r) / jf * q;
            acc = acc + term;
        }
        acc.min(T::one())
    }
}

pub fn negbin_pmf<T: Scalar>(params: &NegBinParams<T>, n: u64) -> T {
    params.pmf(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_at_zero() {
        for &(r, p) in &[(0.85, 0.3), (2.0, 0.9), (0.1, 0.05_f64)] {
            let nb = NegBinParams::new(r, p).unwrap();
            assert!((nb.pmf(0) - p.powf(r)).abs() < 1e-15);
        }
    }

    #[test]
    fn geometric_special_case() {
        let p = 0.35_f64;
        let nb = NegBinParams::new(1.0, p).unwrap();
        for n in 0..40 {
            let g = p * (1.0 - p).powi(n as i32);
            assert!((nb.pmf(n) - g).abs() < 1e-13 * g.max(1e-300) + 1e-16);
        }
    }

    #[test]
    fn sums_to_one() {
        let nb = NegBinParams::new(0.85, 0.3_f64).unwrap();
        let total: f64 = (0..400).map(|n| nb.pmf(n)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((nb.cdf(399) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_boundary_p() {
        assert!(NegBinParams::new(1.0, 1.0_f64).is_err());
        assert!(NegBinParams::new(1.0, 0.0_f64).is_err());
    }
}
