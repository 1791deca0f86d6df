//! Seeded samplers. Every sampler either takes caller-owned RNG state or an
//! explicit 64-bit seed; nothing touches a global generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, Poisson};

use super::{GammaParams, NegBinParams, TemperedSFParams};

/// Generator used for all simulation.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `index` derived from `seed`. Used for per-chunk
/// substreams so parallel results do not depend on scheduling.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn draw_gamma<R: Rng + ?Sized>(params: &GammaParams<f64>, rng: &mut R) -> f64 {
    Gamma::new(params.shape(), params.rate().recip())
        .expect("validated gamma parameters")
        .sample(rng)
}

/// Gamma–Poisson mixture: `N | Λ ~ Poisson(Λ)`, `Λ ~ Gamma(r, (1-p)/p)`.
pub fn draw_negbin<R: Rng + ?Sized>(params: &NegBinParams<f64>, rng: &mut R) -> u64 {
    let scale = (1.0 - params.p()) / params.p();
    let lambda = Gamma::new(params.r(), scale)
        .expect("validated negative binomial parameters")
        .sample(rng);
    poisson(lambda, rng)
}

pub(crate) fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Inverse transform through the closed-form quantile.
pub fn draw_tempered_sf<R: Rng + ?Sized>(params: &TemperedSFParams<f64>, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    params.quantile(u).expect("open-interval uniform")
}

pub fn sample_gamma(params: &GammaParams<f64>, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| draw_gamma(params, &mut rng)).collect()
}

pub fn sample_negbin(params: &NegBinParams<f64>, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| draw_negbin(params, &mut rng)).collect()
}

pub fn sample_tempered_sf(params: &TemperedSFParams<f64>, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| draw_tempered_sf(params, &mut rng)).collect()
}
