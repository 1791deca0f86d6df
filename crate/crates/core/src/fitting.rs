//! Parameter estimation: negative binomial wet-period durations, tempered
//! Snedecor–Fisher per-period maxima (quantile method and least squares),
//! gamma per-period totals, plus the censoring protocol and the sup-norm
//! discrepancy used to judge each fit.

use serde::{Deserialize, Serialize};

use crate::distributions::{GammaParams, NegBinParams, TemperedSFParams};
use crate::error::{domain, Error, Result};
use crate::segmentation::WetPeriod;
use crate::special::{digamma, trigamma};
use crate::Scalar;

/// Durations are shifted by this many days before the negative binomial fit:
/// a wet period lasts at least one day, the negative binomial starts at zero.
pub const DURATION_SHIFT: u32 = 1;

/// Default quantile orders `(p1, p2, p3)` of the quantile-method estimator.
pub const DEFAULT_QUANTILE_ORDERS: [f64; 3] = [0.25, 0.5, 0.75];

/// Censoring thresholds swept by [`fit_table`].
pub const TABLE_MIN_DURATIONS: [u32; 8] = [1, 2, 3, 4, 6, 8, 10, 15];

/// Maxima `X*_k` of the periods lasting at least `min_duration` days, in order.
///
/// An empty result is not an error; callers decide what to do with it.
pub fn censor_and_collect_maxima(periods: &[WetPeriod], min_duration: u32) -> Result<Vec<f64>> {
    if min_duration == 0 {
        return Err(domain("minimum duration must be at least 1"));
    }
    Ok(periods
        .iter()
        .filter(|p| p.duration >= min_duration)
        .map(|p| p.max_daily)
        .collect())
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `cdf`.
///
/// Both one-sided gaps are taken at every sample point, so ties are handled by
/// their step height. Returns zero for an empty sample.
pub fn sup_discrepancy<T: Scalar>(sample: &[T], cdf: impl Fn(T) -> T) -> T {
    if sample.is_empty() {
        return T::zero();
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("sample must not contain NaN"));
    let n = T::from_count(xs.len());
    let mut d = T::zero();
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        let below = T::from_count(i) / n;
        let at = T::from_count(j + 1) / n;
        d = d.max((at - f).abs()).max((f - below).abs());
        i = j + 1;
    }
    d.min(T::one())
}

/// Options shared by the iterative maximum-likelihood fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub min_samples: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            min_samples: 30,
            max_iter: 200,
            rel_tol: 1e-12,
        }
    }
}

/// Result of [`fit_negbin`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct NegBinFit<T> {
    pub params: NegBinParams<T>,
    /// True when the method-of-moments estimate replaced the MLE.
    pub fallback: bool,
    pub iterations: usize,
}

/// Maximum-likelihood negative binomial fit of wet-period durations.
///
/// The counts fitted are `duration - 1`. For a given `r` the MLE of `p` is
/// `r / (r + mean)`; `r` solves the profile score
/// `Σ_j c_j / (r + j) = N ln(1 + mean / r)`, with `c_j` the number of counts
/// exceeding `j`. A finite root exists iff the counts are overdispersed.
pub fn fit_negbin<T: Scalar>(durations: &[u32], opts: &MleOptions) -> Result<NegBinFit<T>> {
    if durations.len() < opts.min_samples.max(2) {
        return Err(Error::SampleTooSmall {
            need: opts.min_samples.max(2),
            got: durations.len(),
        });
    }
    if durations.iter().any(|&d| d < DURATION_SHIFT) {
        return Err(domain("wet-period durations must be at least one day"));
    }
    let counts: Vec<usize> = durations.iter().map(|&d| (d - DURATION_SHIFT) as usize).collect();
    let n = T::from_count(counts.len());
    let max_count = *counts.iter().max().expect("nonempty");
    let mean = T::from_count(counts.iter().sum()) / n;
    let var = counts
        .iter()
        .map(|&c| {
            let d = T::from_count(c) - mean;
            d * d
        })
        .sum::<T>()
        / n;

    if counts.iter().all(|&c| c == counts[0]) {
        return Err(Error::DegenerateSample(format!(
            "all {} durations equal {}; no overdispersion to fit",
            counts.len(),
            counts[0] as u32 + DURATION_SHIFT
        )));
    }
    let moments = || -> Result<NegBinFit<T>> {
        if var > mean && mean > T::zero() {
            let r = mean * mean / (var - mean);
            Ok(NegBinFit {
                params: NegBinParams::new(r, r / (r + mean))?,
                fallback: true,
                iterations: 0,
            })
        } else {
            Err(Error::DegenerateSample(format!(
                "counts are not overdispersed (mean {mean}, variance {var})"
            )))
        }
    };
    if !(var > mean) {
        return moments();
    }

    // exceed[j] = #{counts > j}
    let mut exceed = vec![0usize; max_count + 1];
    for &c in &counts {
        for e in exceed.iter_mut().take(c) {
            *e += 1;
        }
    }
    let score = |r: T| -> (T, T) {
        let mut s = T::zero();
        let mut ds = T::zero();
        for (j, &c) in exceed.iter().enumerate() {
            if c == 0 {
                break;
            }
            let inv = (r + T::from_count(j)).recip();
            s = s + T::from_count(c) * inv;
            ds = ds - T::from_count(c) * inv * inv;
        }
        let g = s - n * (mean / r).ln_1p();
        let dg = ds + n * mean / (r * (r + mean));
        (g, dg)
    };

    // bracket the root: g > 0 below, g < 0 above
    let start = mean * mean / (var - mean);
    let mut lo = start;
    let mut hi = start;
    let two = T::lit(2.0);
    let mut guard = 0;
    while score(lo).0 <= T::zero() {
        lo = lo / two;
        guard += 1;
        if guard > 2000 {
            return moments();
        }
    }
    guard = 0;
    while score(hi).0 >= T::zero() {
        hi = hi * two;
        guard += 1;
        if guard > 2000 {
            return moments();
        }
    }

    let tol = T::lit(opts.rel_tol).max(T::epsilon() * T::lit(8.0));
    let mut r = start.max(lo).min(hi);
    let mut log = Vec::new();
    for it in 1..=opts.max_iter {
        let (g, dg) = score(r);
        log.push(format!("it {it}: r={r} g={g}"));
        if g > T::zero() {
            lo = r;
        } else {
            hi = r;
        }
        let mut next = r - g / dg;
        if !(next > lo && next < hi) {
            next = (lo + hi) / two;
        }
        if (next - r).abs() <= tol * r || (hi - lo) <= tol * hi {
            let r = next;
            return Ok(NegBinFit {
                params: NegBinParams::new(r, r / (r + mean))?,
                fallback: false,
                iterations: it,
            });
        }
        r = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        log: log.join("; "),
    })
}

fn check_maxima<T: Scalar>(maxima: &[T]) -> Result<()> {
    if let Some(bad) = maxima.iter().find(|x| !(**x > T::zero() && x.is_finite())) {
        return Err(domain(format!("maxima must be positive and finite, got {bad}")));
    }
    Ok(())
}

fn sorted<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v
}

/// Order statistic `X*_([m p])`, 1-based, integer part clamped to `[1, m]`.
fn order_stat<T: Scalar>(sorted: &[T], p: T) -> T {
    let m = sorted.len();
    let idx = (T::from_count(m) * p).floor().to_usize().unwrap_or(0).clamp(1, m);
    sorted[idx - 1]
}

/// Quantile-method estimate of `(γ, λ)` with `r` known.
///
/// Matches the tempered law's quantiles at orders `p1 < p2 < p3` to the order
/// statistics `X*_([m p_k])`:
///
/// `γ = [(ln p1 - ln p3)/r + ln(1 - p3^(1/r)) - ln(1 - p1^(1/r))] / [ln X*_([m p1]) - ln X*_([m p3])]`,
/// `λ = p2^(1/r) / ((1 - p2^(1/r)) X*_([m p2])^γ)`.
pub fn fit_tempered_sf_quantile<T: Scalar>(maxima: &[T], r: T, orders: [T; 3]) -> Result<TemperedSFParams<T>> {
    let [p1, p2, p3] = orders;
    if !(T::zero() < p1 && p1 < p2 && p2 < p3 && p3 < T::one()) {
        return Err(domain(format!(
            "quantile orders must satisfy 0 < p1 < p2 < p3 < 1, got {p1}, {p2}, {p3}"
        )));
    }
    if !(r > T::zero()) {
        return Err(domain(format!("r must be positive, got {r}")));
    }
    check_maxima(maxima)?;
    let m = maxima.len();
    if m == 0 || (T::from_count(m) * p1).floor() < T::one() {
        return Err(Error::SampleTooSmall {
            need: (T::one() / p1).ceil().to_usize().unwrap_or(usize::MAX),
            got: m,
        });
    }
    let xs = sorted(maxima);
    let (x1, x2, x3) = (order_stat(&xs, p1), order_stat(&xs, p2), order_stat(&xs, p3));
    if x1 == x3 {
        return Err(Error::DegenerateSample(format!(
            "order statistics at p1 and p3 coincide ({x1})"
        )));
    }
    // ln(1 - p^(1/r)) = ln(-expm1(ln p / r))
    let ln_one_minus = |p: T| (-(p.ln() / r).exp_m1()).ln();
    let num = (p1.ln() - p3.ln()) / r + ln_one_minus(p3) - ln_one_minus(p1);
    let den = x1.ln() - x3.ln();
    let gamma = num / den;
    if !(gamma > T::zero() && gamma.is_finite()) {
        return Err(Error::EstimatorFailure(format!(
            "quantile-method gamma estimate is {gamma}"
        )));
    }
    let u2 = (p2.ln() / r).exp();
    let lambda = u2 / ((-(p2.ln() / r).exp_m1()) * x2.powf(gamma));
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(Error::EstimatorFailure(format!(
            "quantile-method lambda estimate is {lambda}"
        )));
    }
    TemperedSFParams::new(r, lambda, gamma)
}

/// Least-squares estimate of `(γ, λ)` with `r` known.
///
/// Regresses `z_i = ln(i^(1/r) / (m^(1/r) - i^(1/r)))` on `ln X*_(i)` over
/// `i = 1..m-1` (`z_m` diverges): `γ` is the slope and
/// `λ = exp((Σz_i - γ Σ ln X*_(i)) / (m - 1))`.
pub fn fit_tempered_sf_ls<T: Scalar>(maxima: &[T], r: T) -> Result<TemperedSFParams<T>> {
    if !(r > T::zero()) {
        return Err(domain(format!("r must be positive, got {r}")));
    }
    check_maxima(maxima)?;
    let m = maxima.len();
    if m < 3 {
        return Err(Error::SampleTooSmall { need: 3, got: m });
    }
    let xs = sorted(maxima);
    if xs[0] == xs[m - 2] {
        return Err(Error::DegenerateSample(
            "all maxima used by the regression are equal".into(),
        ));
    }
    let mf = T::from_count(m);
    let k = T::from_count(m - 1);
    let mut sum_y = T::zero();
    let mut sum_z = T::zero();
    let ys: Vec<T> = xs[..m - 1].iter().map(|x| x.ln()).collect();
    let zs: Vec<T> = (1..m)
        .map(|i| {
            let ln_frac = (T::from_count(i) / mf).ln() / r;
            ln_frac - (-ln_frac.exp_m1()).ln()
        })
        .collect();
    for (y, z) in ys.iter().zip(&zs) {
        sum_y = sum_y + *y;
        sum_z = sum_z + *z;
    }
    let y_bar = sum_y / k;
    let z_bar = sum_z / k;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (y, z) in ys.iter().zip(&zs) {
        let dy = *y - y_bar;
        sxy = sxy + dy * (*z - z_bar);
        sxx = sxx + dy * dy;
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateSample(
            "all maxima used by the regression are equal".into(),
        ));
    }
    let gamma = sxy / sxx;
    if !(gamma > T::zero() && gamma.is_finite()) {
        return Err(Error::EstimatorFailure(format!(
            "least-squares gamma estimate is {gamma}"
        )));
    }
    let lambda = (z_bar - gamma * y_bar).exp();
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(Error::EstimatorFailure(format!(
            "least-squares lambda estimate is {lambda}"
        )));
    }
    TemperedSFParams::new(r, lambda, gamma)
}

/// Result of [`fit_gamma_totals`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GammaFit<T> {
    pub params: GammaParams<T>,
    pub fallback: bool,
    pub iterations: usize,
}

/// Maximum-likelihood gamma fit of wet-period totals.
///
/// Newton iteration on `ln k - ψ(k) = ln(mean) - mean(ln x)` started from the
/// moment estimate; `rate = k / mean`.
pub fn fit_gamma_totals<T: Scalar>(totals: &[T], opts: &MleOptions) -> Result<GammaFit<T>> {
    if totals.len() < opts.min_samples.max(2) {
        return Err(Error::SampleTooSmall {
            need: opts.min_samples.max(2),
            got: totals.len(),
        });
    }
    if let Some(bad) = totals.iter().find(|x| !(**x > T::zero() && x.is_finite())) {
        return Err(domain(format!("totals must be positive and finite, got {bad}")));
    }
    let n = T::from_count(totals.len());
    let mean = totals.iter().copied().sum::<T>() / n;
    let mean_ln = totals.iter().map(|x| x.ln()).sum::<T>() / n;
    let var = totals.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / n;
    let s = mean.ln() - mean_ln;
    if !(var > T::zero()) || !(s > T::zero()) {
        return Err(Error::DegenerateSample("all totals are equal".into()));
    }
    let moments = GammaParams::new(mean * mean / var, mean / var)?;

    let tol = T::lit(opts.rel_tol).max(T::epsilon() * T::lit(8.0));
    let mut k = moments.shape();
    for it in 1..=opts.max_iter {
        let f = k.ln() - digamma(k) - s;
        let df = k.recip() - trigamma(k);
        // Newton step on ln k keeps the iterate positive
        let step = f / (k * df);
        let next = k * (-step).exp();
        if !next.is_finite() || !(next > T::zero()) {
            break;
        }
        if (next - k).abs() <= tol * next {
            return Ok(GammaFit {
                params: GammaParams::new(next, next / mean)?,
                fallback: false,
                iterations: it,
            });
        }
        k = next;
    }
    Ok(GammaFit {
        params: moments,
        fallback: true,
        iterations: opts.max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Negbin,
    TemperedSfQuantile,
    TemperedSfLs,
    GammaTotals,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negbin" => Ok(Self::Negbin),
            "tsf-quantile" | "tempered_sf_quantile" => Ok(Self::TemperedSfQuantile),
            "tsf-ls" | "tempered_sf_ls" => Ok(Self::TemperedSfLs),
            "gamma-totals" | "gamma_totals" => Ok(Self::GammaTotals),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum FittedParams<T> {
    TemperedSf(TemperedSFParams<T>),
    NegBin(NegBinParams<T>),
    Gamma(GammaParams<T>),
}

/// One fitted model with the censoring it used and its fit quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct FitReport<T> {
    pub model: ModelKind,
    pub params: FittedParams<T>,
    pub censor_min_duration: u32,
    pub sample_size: usize,
    /// Sup-norm distance between the empirical and fitted CDFs.
    pub discrepancy: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile_orders: Option<[T; 3]>,
    /// Negative binomial counts are `duration - duration_shift`.
    pub duration_shift: u32,
    #[serde(default)]
    pub fallback: bool,
}

/// Fits `model` to the periods lasting at least `min_duration` days.
///
/// `r` is the station-level negative binomial shape required by the tempered
/// models; it is ignored by the other two.
pub fn fit_report(
    model: ModelKind,
    periods: &[WetPeriod],
    min_duration: u32,
    r: Option<f64>,
    orders: [f64; 3],
    opts: &MleOptions,
) -> Result<FitReport<f64>> {
    let kept: Vec<&WetPeriod> = periods.iter().filter(|p| p.duration >= min_duration.max(1)).collect();
    let base = |params, discrepancy, sample_size, fallback, quantile_orders| FitReport {
        model,
        params,
        censor_min_duration: min_duration.max(1),
        sample_size,
        discrepancy,
        quantile_orders,
        duration_shift: DURATION_SHIFT,
        fallback,
    };
    match model {
        ModelKind::Negbin => {
            let durations: Vec<u32> = kept.iter().map(|p| p.duration).collect();
            let fit = fit_negbin::<f64>(&durations, opts)?;
            let nb = fit.params;
            // empirical vs fitted CDF of the shifted counts at every support point
            let mut counts: Vec<u64> = durations.iter().map(|&d| (d - DURATION_SHIFT) as u64).collect();
            counts.sort_unstable();
            let n = counts.len() as f64;
            let max = *counts.last().expect("nonempty");
            let mut disc = 0.0_f64;
            let mut idx = 0;
            for v in 0..=max {
                while idx < counts.len() && counts[idx] <= v {
                    idx += 1;
                }
                disc = disc.max((idx as f64 / n - nb.cdf(v)).abs());
            }
            Ok(base(
                FittedParams::NegBin(nb),
                disc,
                durations.len(),
                fit.fallback,
                None,
            ))
        }
        ModelKind::TemperedSfQuantile | ModelKind::TemperedSfLs => {
            let r = r.ok_or_else(|| Error::Config("tempered models need the negative binomial shape r".into()))?;
            let maxima = censor_and_collect_maxima(periods, min_duration.max(1))?;
            let params = if model == ModelKind::TemperedSfQuantile {
                fit_tempered_sf_quantile(&maxima, r, orders)?
            } else {
                fit_tempered_sf_ls(&maxima, r)?
            };
            let disc = sup_discrepancy(&maxima, |x| params.cdf(x));
            let orders = (model == ModelKind::TemperedSfQuantile).then_some(orders);
            Ok(base(
                FittedParams::TemperedSf(params),
                disc,
                maxima.len(),
                false,
                orders,
            ))
        }
        ModelKind::GammaTotals => {
            let totals: Vec<f64> = kept.iter().map(|p| p.total).collect();
            let fit = fit_gamma_totals(&totals, opts)?;
            let g = fit.params;
            let disc = sup_discrepancy(&totals, |x| g.cdf(x).unwrap_or(f64::NAN));
            Ok(base(FittedParams::Gamma(g), disc, totals.len(), fit.fallback, None))
        }
    }
}

/// One row of the censoring sweep: both tempered estimators at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub min_duration: u32,
    pub sample_size: usize,
    pub discrepancy_quantile: Option<f64>,
    pub discrepancy_ls: Option<f64>,
    pub lambda_quantile: Option<f64>,
    pub lambda_ls: Option<f64>,
    pub gamma_quantile: Option<f64>,
    pub gamma_ls: Option<f64>,
}

/// Sweeps the censoring thresholds, fitting both tempered estimators at each.
/// A failed fit leaves its cells empty.
pub fn fit_table(periods: &[WetPeriod], r: f64, orders: [f64; 3], thresholds: &[u32]) -> Result<Vec<TableRow>> {
    thresholds
        .iter()
        .map(|&min_duration| {
            let maxima = censor_and_collect_maxima(periods, min_duration)?;
            let q = fit_tempered_sf_quantile(&maxima, r, orders).ok();
            let ls = fit_tempered_sf_ls(&maxima, r).ok();
            let disc = |p: &TemperedSFParams<f64>| sup_discrepancy(&maxima, |x| p.cdf(x));
            Ok(TableRow {
                min_duration,
                sample_size: maxima.len(),
                discrepancy_quantile: q.as_ref().map(disc),
                discrepancy_ls: ls.as_ref().map(disc),
                lambda_quantile: q.map(|p| p.lambda()),
                lambda_ls: ls.map(|p| p.lambda()),
                gamma_quantile: q.map(|p| p.gamma()),
                gamma_ls: ls.map(|p| p.gamma()),
            })
        })
        .collect()
}
