//! Statistical tests for extreme precipitation over wet periods.
//!
//! The crate turns a daily precipitation record into wet periods (maximal runs
//! of wet days), fits the duration, daily-maximum and total-volume models, and
//! runs two families of anomaly tests:
//!
//! - a daily-maximum test against the tempered Snedecor–Fisher law
//!   `F(x; r, λ, γ) = (λx^γ / (1 + λx^γ))^r`;
//! - gamma homogeneity tests on wet-period totals (share `SR` with a beta null
//!   law, ratio `SR0` and group ratio `SR0'` with Snedecor–Fisher null laws),
//!   optionally run over a moving window that grades each period as regular,
//!   relatively, intermediately or absolutely anomalous.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
mod error;
pub mod fitting;
pub mod hypothesis;
mod scalar;
pub mod segmentation;
pub mod simulate;
pub mod special;
pub mod windowing;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TemperedSF = distributions::TemperedSFParams<f64>;
pub type Gamma = distributions::GammaParams<f64>;
pub type NegBin = distributions::NegBinParams<f64>;
pub type SnedecorFisher = distributions::SFParams<f64>;
pub type Beta = distributions::BetaParams<f64>;
pub type Frechet = distributions::FrechetParams<f64>;
pub type FitReport = fitting::FitReport<f64>;
pub type TestVerdict = hypothesis::TestVerdict<f64>;

pub type TemperedSF32 = distributions::TemperedSFParams<f32>;
pub type Gamma32 = distributions::GammaParams<f32>;
pub type SnedecorFisher32 = distributions::SFParams<f32>;
pub type Beta32 = distributions::BetaParams<f32>;
