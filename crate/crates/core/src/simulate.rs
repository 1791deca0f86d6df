//! Synthetic data and Monte Carlo checks of the model's limit laws.
//!
//! Trial `i` of every experiment draws from `substream(seed, i)`, so results
//! do not depend on how trials are spread over threads. Experiments that vary
//! a parameter over a grid reuse the same substreams at every grid point.

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Normal, Open01, Pareto};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    draw_gamma, draw_negbin, draw_tempered_sf, rng_from_seed, substream, FrechetParams, GammaParams, NegBinParams,
    TemperedSFParams,
};
use crate::error::{Error, Result};
use crate::fitting::sup_discrepancy;
use crate::hypothesis::{sr0_group_statistic, sr0_null, sr0_statistic, sr_null, sr_statistic, StatisticName};
use crate::segmentation::DailySeries;

/// Law of the daily volumes `X_j` summed over a wet period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DailyLaw {
    /// `X_j ≡ value`.
    Degenerate {
        value: f64,
    },
    Exponential {
        mean: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// `P(X > x) = (scale / x)^alpha` for `x ≥ scale`; needs `alpha > 1`.
    Pareto {
        alpha: f64,
        scale: f64,
    },
    /// `X_j = mean · exp(Z_j - sigma²/2)` with a stationary Gaussian AR(1)
    /// `Z_j = rho Z_{j-1} + sqrt(1 - rho²) sigma e_j`.
    LognormalAr1 {
        mean: f64,
        sigma: f64,
        rho: f64,
    },
}

impl DailyLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Degenerate { value } => value > 0.0 && value.is_finite(),
            Self::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            Self::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Self::Pareto { alpha, scale } => {
                if !(alpha > 1.0) {
                    return Err(Error::Config(format!(
                        "Pareto tail index must exceed 1 for a finite mean, got {alpha}"
                    )));
                }
                scale > 0.0 && scale.is_finite() && alpha.is_finite()
            }
            Self::LognormalAr1 { mean, sigma, rho } => {
                mean > 0.0 && mean.is_finite() && sigma >= 0.0 && sigma.is_finite() && rho.abs() < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid daily law {self:?}")))
        }
    }

    /// The finite mean `a` of the daily volumes.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Degenerate { value } => value,
            Self::Exponential { mean } => mean,
            Self::Gamma { shape, rate } => shape / rate,
            Self::Pareto { alpha, scale } => alpha * scale / (alpha - 1.0),
            Self::LognormalAr1 { mean, .. } => mean,
        }
    }

    /// `n` consecutive daily volumes.
    pub fn draw_days<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Self::Degenerate { value } => vec![value; n],
            Self::Exponential { mean } => {
                let g = GammaParams::new(1.0, mean.recip()).expect("validated");
                (0..n).map(|_| draw_gamma(&g, rng)).collect()
            }
            Self::Gamma { shape, rate } => {
                let g = GammaParams::new(shape, rate).expect("validated");
                (0..n).map(|_| draw_gamma(&g, rng)).collect()
            }
            Self::Pareto { alpha, scale } => {
                let d = Pareto::new(scale, alpha).expect("validated");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::LognormalAr1 { mean, sigma, rho } => {
                let e = Normal::new(0.0, 1.0).expect("unit normal");
                let innovation = (1.0 - rho * rho).sqrt() * sigma;
                let mut z = sigma * e.sample(rng);
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    if i > 0 {
                        z = rho * z + innovation * e.sample(rng);
                    }
                    out.push(mean * (z - 0.5 * sigma * sigma).exp());
                }
                out
            }
        }
    }

    /// `X_1 + ... + X_n`; gamma-family and degenerate laws use the exact law
    /// of the sum instead of drawing every day.
    pub fn draw_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match *self {
            Self::Degenerate { value } => value * n as f64,
            Self::Exponential { mean } => GammaDist::new(n as f64, mean).expect("validated").sample(rng),
            Self::Gamma { shape, rate } => GammaDist::new(n as f64 * shape, rate.recip())
                .expect("validated")
                .sample(rng),
            _ => self.draw_days(n as usize, rng).iter().sum(),
        }
    }
}

/// Negative binomial random sums `n^{-1} S_N`, `N ~ negbin(r, p_n)`,
/// `p_n = min(q, mu / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlnConfig {
    pub r: f64,
    pub mu: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    pub daily: DailyLaw,
}

fn default_q() -> f64 {
    0.5
}

impl LlnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.mu > 0.0 && self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Config(format!(
                "need r > 0, mu > 0 and 0 < q < 1, got r={}, mu={}, q={}",
                self.r, self.mu, self.q
            )));
        }
        self.daily.validate()
    }

    pub fn p_n(&self, n: u64) -> f64 {
        self.q.min(self.mu / n as f64)
    }

    /// Limit law `(a / mu) G_{r,1}`: shape `r`, rate `mu / a`.
    pub fn limit(&self) -> Result<GammaParams<f64>> {
        GammaParams::new(self.r, self.mu / self.daily.mean())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlnPoint {
    pub n: u64,
    pub ks: f64,
}

/// `trials` draws of `n^{-1} S_N` for one `n`.
pub fn sample_scaled_negbin_sums(cfg: &LlnConfig, n: u64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let nb = NegBinParams::new(cfg.r, cfg.p_n(n))?;
    let daily = cfg.daily;
    Ok((0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let count = draw_negbin(&nb, &mut rng);
            daily.draw_sum(count, &mut rng) / n as f64
        })
        .collect())
}

/// KS distance of `n^{-1} S_N` to its gamma limit at every `n` of the grid.
pub fn verify_lln_negbin_sums(cfg: &LlnConfig, n_grid: &[u64], trials: usize, seed: u64) -> Result<Vec<LlnPoint>> {
    check_grid(n_grid)?;
    check_trials(trials)?;
    let limit = cfg.limit()?;
    n_grid
        .iter()
        .map(|&n| {
            let xs = sample_scaled_negbin_sums(cfg, n, trials, seed)?;
            let ks = sup_discrepancy(&xs, |x| limit.cdf(x).unwrap_or(f64::NAN));
            Ok(LlnPoint { n, ks })
        })
        .collect()
}

fn check_grid<T: PartialOrd + Copy>(grid: &[T]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("grid must be nonempty and strictly increasing".into()));
    }
    Ok(())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    Ok(())
}

/// `trials` draws of the tempered law, trial `i` from substream `i`.
pub fn sample_tempered_sf_par(params: &TemperedSFParams<f64>, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|i| draw_tempered_sf(params, &mut substream(seed, i as u64)))
        .collect()
}

/// KS distance between sampled maxima and their own CDF.
pub fn verify_max_daily_law(params: &TemperedSFParams<f64>, trials: usize, seed: u64) -> Result<f64> {
    check_trials(trials)?;
    let xs = sample_tempered_sf_par(params, trials, seed);
    Ok(sup_discrepancy(&xs, |x| params.cdf(x)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetConfig {
    pub r1: f64,
    pub c: f64,
    pub gamma: f64,
    pub m_grid: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetPoint {
    pub m: u64,
    pub distance: f64,
}

/// Points where the tempered and limiting CDFs are compared: quantiles of the
/// limit on a fine probability grid plus a log-spaced sweep well into both tails.
fn frechet_grid(limit: &FrechetParams<f64>) -> Vec<f64> {
    let mut xs = Vec::new();
    let k = 20_000;
    for i in 1..k {
        xs.push(limit.quantile(i as f64 / k as f64).expect("open interval"));
    }
    let center = limit.quantile(0.5).expect("median");
    for i in -600..=600 {
        xs.push(center * 10f64.powf(i as f64 / 100.0));
    }
    xs
}

/// Sup-norm distance between `F(x; m r1, c m, γ)` and its Fréchet limit
/// `exp(-(r1/c) x^{-γ})` for each `m`.
pub fn verify_frechet_limit(r1: f64, c: f64, gamma: f64, m_grid: &[u64]) -> Result<Vec<FrechetPoint>> {
    check_grid(m_grid)?;
    let limit = FrechetParams::limit_of(r1, c, gamma)?;
    let xs = frechet_grid(&limit);
    m_grid
        .iter()
        .map(|&m| {
            let mf = m as f64;
            let f = TemperedSFParams::new(mf * r1, c * mf, gamma)?;
            let distance = xs.iter().map(|&x| (f.cdf(x) - limit.cdf(x)).abs()).fold(0.0, f64::max);
            Ok(FrechetPoint { m, distance })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub test: StatisticName,
    pub m: usize,
    #[serde(default = "default_l")]
    pub l: usize,
    pub r: f64,
    pub epsilon: f64,
}

fn default_l() -> usize {
    1
}

/// `m` i.i.d. gamma volumes of shape `r` (the rate does not matter to the
/// share statistics) for trial `i`.
fn null_window(m: usize, shape: &GammaParams<f64>, seed: u64, i: usize) -> Vec<f64> {
    let mut rng = substream(seed, i as u64);
    (0..m).map(|_| draw_gamma(shape, &mut rng)).collect()
}

/// Values of a share statistic for the first coordinate (first `l` for the
/// group statistic) over `trials` homogeneous gamma windows.
pub fn simulate_null_statistic(
    test: StatisticName,
    m: usize,
    l: usize,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_trials(trials)?;
    if m < 2 {
        return Err(Error::Config(format!("window width must be at least 2, got {m}")));
    }
    let shape = GammaParams::new(r, 1.0)?;
    let subset: Vec<usize> = (0..l).collect();
    if test == StatisticName::Sr0Group {
        sr0_null(m, l, r)?;
    }
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let w = null_window(m, &shape, seed, i);
            match test {
                StatisticName::Sr => sr_statistic(&w, 0),
                StatisticName::Sr0 => sr0_statistic(&w, 0),
                StatisticName::Sr0Group => sr0_group_statistic(&w, &subset),
                StatisticName::DailyMax => Err(Error::Config("daily_max is not a share statistic".into())),
            }
        })
        .collect()
}

/// Empirical rejection rate of a share test under the null hypothesis.
pub fn calibrate_test(
    test: StatisticName,
    m: usize,
    l: usize,
    r: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let level = 1.0 - epsilon;
    let threshold = match test {
        StatisticName::Sr => sr_null(m, r)?.quantile(level)?,
        StatisticName::Sr0 => sr0_null(m, 1, r)?.quantile(level)?,
        StatisticName::Sr0Group => sr0_null(m, l, r)?.quantile(level)?,
        StatisticName::DailyMax => return Err(Error::Config("daily_max is not a share statistic".into())),
    };
    let values = simulate_null_statistic(test, m, l, r, trials, seed)?;
    let rejected = values.iter().filter(|v| **v > threshold).count();
    Ok(rejected as f64 / trials as f64)
}

/// Three binomial standard errors around `epsilon` for `trials` draws.
pub fn binomial_band(epsilon: f64, trials: usize) -> (f64, f64) {
    let half = 3.0 * (epsilon * (1.0 - epsilon) / trials as f64).sqrt();
    (epsilon - half, epsilon + half)
}

/// Asymptotic 99% Kolmogorov critical value `1.628 / sqrt(n)`.
pub fn ks_critical_99_asymptotic(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// 99% critical value of the one-sample KS statistic: exact for `n ≤ 100`,
/// asymptotic above.
pub fn ks_critical_99(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if n > 100 {
        return ks_critical_99_asymptotic(n);
    }
    let (mut lo, mut hi) = (0.5 / n as f64, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ks_cdf_exact(n, mid) < 0.99 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `P(D_n < d)` for the one-sample KS statistic, by the Marsaglia–Tsang–Wang
/// matrix-power method.
pub fn ks_cdf_exact(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    if d <= 0.5 / nf {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let k = (nf * d) as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nf * d;
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                a[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        a[i * m] -= h.powi(i as i32 + 1);
        a[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        a[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    a[i * m + j] /= g as f64;
                }
            }
        }
    }
    let (q, mut exp10) = matrix_power(&a, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s = s * i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            exp10 -= 140;
        }
    }
    (s * 10f64.powi(exp10)).clamp(0.0, 1.0)
}

fn matrix_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let x = a[i * m + l];
            if x != 0.0 {
                for j in 0..m {
                    c[i * m + j] += x * b[l * m + j];
                }
            }
        }
    }
    c
}

/// `a^n` with a decimal exponent carried separately to avoid overflow.
fn matrix_power(a: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e) = matrix_power(a, m, n / 2);
    let mut sq = matrix_mul(&half, &half, m);
    let mut exp10 = 2 * e;
    if n % 2 == 1 {
        sq = matrix_mul(a, &sq, m);
    }
    if sq[(m / 2) * m + m / 2] > 1e140 {
        for x in &mut sq {
            *x *= 1e-140;
        }
        exp10 += 140;
    }
    (sq, exp10)
}

/// Synthetic daily series: alternating wet periods of `1 + negbin` days with
/// dailies from `daily`, and dry spells of `1 + geometric(dry_p)` days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub durations: NegBinParams<f64>,
    pub daily: DailyLaw,
    pub dry_p: f64,
    pub periods: usize,
    pub start: NaiveDate,
}

pub fn synthetic_series(cfg: &SeriesConfig, seed: u64) -> Result<DailySeries> {
    cfg.daily.validate()?;
    if !(cfg.dry_p > 0.0 && cfg.dry_p <= 1.0) {
        return Err(Error::Config(format!("dry_p must lie in (0, 1], got {}", cfg.dry_p)));
    }
    let mut rng = rng_from_seed(seed);
    let mut values: Vec<Option<f64>> = Vec::new();
    for _ in 0..cfg.periods {
        let days = 1 + draw_negbin(&cfg.durations, &mut rng) as usize;
        // dailies must be strictly wet
        values.extend(
            cfg.daily
                .draw_days(days, &mut rng)
                .into_iter()
                .map(|x| Some(x.max(f64::MIN_POSITIVE))),
        );
        let mut dry = 1;
        while Distribution::<f64>::sample(&Open01, &mut rng) > cfg.dry_p {
            dry += 1;
        }
        values.extend(std::iter::repeat_n(Some(0.0), dry));
    }
    DailySeries::from_values(cfg.start, &values)
}

/// Monte Carlo experiments read from a JSON or TOML file. Each optional
/// section runs one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub n_grid: Vec<u64>,
    #[serde(default)]
    pub lln: Option<LlnConfig>,
    #[serde(default)]
    pub max_daily: Option<TemperedSFParams<f64>>,
    #[serde(default)]
    pub frechet: Option<FrechetConfig>,
    #[serde(default)]
    pub calibration: Vec<CalibrationConfig>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_trials(self.trials)?;
        if let Some(lln) = &self.lln {
            lln.validate()?;
            check_grid(&self.n_grid)?;
        }
        if let Some(f) = &self.frechet {
            check_grid(&f.m_grid)?;
        }
        Ok(())
    }
}
