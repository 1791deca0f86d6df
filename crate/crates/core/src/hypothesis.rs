//! Anomaly tests: the daily-maximum quantile test and the total-volume share
//! tests SR, SR0 and the group variant SR0'.
//!
//! Under the null hypothesis the `m` volumes of a window are independent gamma
//! variables with a common shape `r` (the station-level negative binomial
//! shape) and a common, unknown rate. The share statistics do not depend on
//! the rate, so their null laws are exact.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::distributions::{BetaParams, SFParams, TemperedSFParams};
use crate::error::{domain, Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticName {
    #[serde(rename = "daily_max")]
    DailyMax,
    #[serde(rename = "SR")]
    Sr,
    #[serde(rename = "SR0")]
    Sr0,
    #[serde(rename = "SR0_group")]
    Sr0Group,
}

impl std::fmt::Display for StatisticName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DailyMax => "daily_max",
            Self::Sr => "SR",
            Self::Sr0 => "SR0",
            Self::Sr0Group => "SR0_group",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict<T> {
    pub statistic_name: StatisticName,
    pub statistic_value: T,
    pub threshold: T,
    pub epsilon: T,
    /// `statistic_value > threshold`; a value equal to the threshold is kept.
    pub reject: bool,
}

impl<T: Scalar> TestVerdict<T> {
    pub fn new(statistic_name: StatisticName, statistic_value: T, threshold: T, epsilon: T) -> Self {
        Self {
            statistic_name,
            statistic_value,
            threshold,
            epsilon,
            reject: statistic_value > threshold,
        }
    }
}

fn check_epsilon<T: Scalar>(epsilon: T) -> Result<T> {
    if epsilon > T::zero() && epsilon < T::one() {
        Ok(epsilon)
    } else {
        Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

fn check_volumes<T: Scalar>(volumes: &[T]) -> Result<()> {
    if volumes.len() < 2 {
        return Err(Error::SampleTooSmall {
            need: 2,
            got: volumes.len(),
        });
    }
    if let Some(bad) = volumes.iter().find(|v| !(**v > T::zero() && v.is_finite())) {
        return Err(domain(format!("volumes must be positive and finite, got {bad}")));
    }
    Ok(())
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, len })
    }
}

/// Sum of all volumes except `target`, accumulated directly so that a
/// dominant target does not cancel the rest away.
fn sum_others<T: Scalar>(volumes: &[T], target: usize) -> T {
    volumes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, v)| *v)
        .sum()
}

/// Index of the largest volume; the first one wins ties.
pub fn argmax<T: Scalar>(volumes: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in volumes.iter().enumerate() {
        match best {
            Some(b) if volumes[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Flags `x_max` when it exceeds the `(1 - ε)`-quantile of the fitted
/// tempered Snedecor–Fisher law of per-period maxima.
pub fn daily_max_test<T: Scalar>(x_max: T, params: &TemperedSFParams<T>, epsilon: T) -> Result<TestVerdict<T>> {
    let epsilon = check_epsilon(epsilon)?;
    if !(x_max >= T::zero()) {
        return Err(domain(format!("daily maximum must be nonnegative, got {x_max}")));
    }
    let threshold = params.quantile(T::one() - epsilon)?;
    Ok(TestVerdict::new(StatisticName::DailyMax, x_max, threshold, epsilon))
}

/// `SR = V_target / ΣV`.
pub fn sr_statistic<T: Scalar>(volumes: &[T], target: usize) -> Result<T> {
    check_volumes(volumes)?;
    check_index(target, volumes.len())?;
    let v = volumes[target];
    Ok(v / (v + sum_others(volumes, target)))
}

/// `SR0 = (m - 1) V_target / (ΣV - V_target)`; infinite when the other volumes sum to zero.
pub fn sr0_statistic<T: Scalar>(volumes: &[T], target: usize) -> Result<T> {
    check_volumes(volumes)?;
    check_index(target, volumes.len())?;
    let rest = sum_others(volumes, target);
    if rest == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::from_count(volumes.len() - 1) * volumes[target] / rest)
}

fn check_subset(subset: &[usize], m: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidSubset("subset is empty".into()));
    }
    if subset.len() >= m {
        return Err(Error::InvalidSubset(format!(
            "subset of size {} leaves no complement in a window of {m}",
            subset.len()
        )));
    }
    let mut seen = vec![false; m];
    for &i in subset {
        check_index(i, m)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidSubset(format!("index {i} repeated")));
        }
    }
    Ok(())
}

/// `SR0' = (m - l) T_l / (l (T - T_l))` for the `l` volumes in `subset`.
pub fn sr0_group_statistic<T: Scalar>(volumes: &[T], subset: &[usize]) -> Result<T> {
    check_volumes(volumes)?;
    check_subset(subset, volumes.len())?;
    let m = volumes.len();
    let l = subset.len();
    let mut inside = vec![false; m];
    for &i in subset {
        inside[i] = true;
    }
    let (mut t_l, mut rest) = (T::zero(), T::zero());
    for (v, &is_in) in volumes.iter().zip(&inside) {
        if is_in {
            t_l = t_l + *v;
        } else {
            rest = rest + *v;
        }
    }
    if rest == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::from_count(m - l) * t_l / (T::from_count(l) * rest))
}

/// Null law of `SR` for a window of `m`: `p(x; (m - 1) r, r)`.
pub fn sr_null<T: Scalar>(m: usize, r: T) -> Result<BetaParams<T>> {
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    BetaParams::share_of_one(m, r)
}

/// Null law of `SR0'` for `l` of `m` volumes: `Q_{l r, (m - l) r}`; `l = 1` gives `SR0`.
pub fn sr0_null<T: Scalar>(m: usize, l: usize, r: T) -> Result<SFParams<T>> {
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    if l == 0 || l >= m {
        return Err(Error::InvalidSubset(format!("group size {l} must lie in [1, {m})")));
    }
    SFParams::new(T::from_count(l) * r, T::from_count(m - l) * r)
}

pub fn sr_test<T: Scalar>(volumes: &[T], target: usize, r: T, epsilon: T) -> Result<TestVerdict<T>> {
    let epsilon = check_epsilon(epsilon)?;
    let value = sr_statistic(volumes, target)?;
    let threshold = sr_null(volumes.len(), r)?.quantile(T::one() - epsilon)?;
    Ok(TestVerdict::new(StatisticName::Sr, value, threshold, epsilon))
}

pub fn sr0_test<T: Scalar>(volumes: &[T], target: usize, r: T, epsilon: T) -> Result<TestVerdict<T>> {
    let epsilon = check_epsilon(epsilon)?;
    let value = sr0_statistic(volumes, target)?;
    let threshold = sr0_null(volumes.len(), 1, r)?.quantile(T::one() - epsilon)?;
    Ok(TestVerdict::new(StatisticName::Sr0, value, threshold, epsilon))
}

pub fn sr0_group_test<T: Scalar>(volumes: &[T], subset: &[usize], r: T, epsilon: T) -> Result<TestVerdict<T>> {
    let epsilon = check_epsilon(epsilon)?;
    let value = sr0_group_statistic(volumes, subset)?;
    let threshold = sr0_null(volumes.len(), subset.len(), r)?.quantile(T::one() - epsilon)?;
    Ok(TestVerdict::new(StatisticName::Sr0Group, value, threshold, epsilon))
}

/// [`sr_test`] applied to the largest volume of the window. The null law is
/// that of a fixed coordinate, so the actual type-I error exceeds `ε`.
pub fn sr_test_max<T: Scalar>(volumes: &[T], r: T, epsilon: T) -> Result<(usize, TestVerdict<T>)> {
    let target = argmax(volumes).ok_or(Error::EmptySeries)?;
    Ok((target, sr_test(volumes, target, r, epsilon)?))
}

/// [`sr0_test`] applied to the largest volume of the window.
pub fn sr0_test_max<T: Scalar>(volumes: &[T], r: T, epsilon: T) -> Result<(usize, TestVerdict<T>)> {
    let target = argmax(volumes).ok_or(Error::EmptySeries)?;
    Ok((target, sr0_test(volumes, target, r, epsilon)?))
}

/// SR and SR0 thresholds for one `(m, r, ε)`, computed once and reused across
/// windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareTester<T> {
    m: usize,
    epsilon: T,
    sr_threshold: T,
    sr0_threshold: T,
}

impl<T: Scalar> ShareTester<T> {
    pub fn new(m: usize, r: T, epsilon: T) -> Result<Self> {
        let epsilon = check_epsilon(epsilon)?;
        let level = T::one() - epsilon;
        Ok(Self {
            m,
            epsilon,
            sr_threshold: sr_null(m, r)?.quantile(level)?,
            sr0_threshold: sr0_null(m, 1, r)?.quantile(level)?,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sr_threshold(&self) -> T {
        self.sr_threshold
    }

    pub fn sr0_threshold(&self) -> T {
        self.sr0_threshold
    }

    fn check_width(&self, volumes: &[T]) -> Result<()> {
        if volumes.len() == self.m {
            Ok(())
        } else {
            Err(domain(format!(
                "expected a window of {} volumes, got {}",
                self.m,
                volumes.len()
            )))
        }
    }

    pub fn sr(&self, volumes: &[T], target: usize) -> Result<TestVerdict<T>> {
        self.check_width(volumes)?;
        let value = sr_statistic(volumes, target)?;
        Ok(TestVerdict::new(
            StatisticName::Sr,
            value,
            self.sr_threshold,
            self.epsilon,
        ))
    }

    pub fn sr0(&self, volumes: &[T], target: usize) -> Result<TestVerdict<T>> {
        self.check_width(volumes)?;
        let value = sr0_statistic(volumes, target)?;
        Ok(TestVerdict::new(
            StatisticName::Sr0,
            value,
            self.sr0_threshold,
            self.epsilon,
        ))
    }
}

/// One line of the verdict JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub period_start: NaiveDate,
    pub statistic: StatisticName,
    pub value: f64,
    pub threshold: f64,
    pub epsilon: f64,
    pub reject: bool,
}

impl VerdictRecord {
    pub fn new(period_start: NaiveDate, verdict: &TestVerdict<f64>) -> Self {
        Self {
            period_start,
            statistic: verdict.statistic_name,
            value: verdict.statistic_value,
            threshold: verdict.threshold,
            epsilon: verdict.epsilon,
            reject: verdict.reject,
        }
    }
}

pub fn write_jsonl<W: Write, R: Serialize>(mut out: W, records: &[R]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn daily_max_closed_form() {
        let p = TemperedSFParams::new(1.0, 1.0, 1.0).unwrap();
        let v = daily_max_test(2.0_f64, &p, 0.5).unwrap();
        assert!((v.threshold - 1.0).abs() < 1e-15);
        assert!(v.reject);
        let at = daily_max_test(v.threshold, &p, 0.5).unwrap();
        assert!(!at.reject);
        assert!(daily_max_test(2.0, &p, 1.0).is_err());
    }

    #[test]
    fn share_statistics_by_hand() {
        assert_eq!(sr_statistic(&[3.0, 1.0], 0).unwrap(), 0.75);
        assert!((sr_statistic(&[2.0_f64; 7], 3).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(sr0_statistic(&[2.0; 7], 3).unwrap(), 1.0);
        assert_eq!(sr0_group_statistic(&[1.0, 2.0, 3.0, 2.0], &[1, 3]).unwrap(), 1.0);
        assert_eq!(
            sr0_group_statistic(&[5.0, 1.0, 2.5, 4.0], &[2]).unwrap(),
            sr0_statistic(&[5.0, 1.0, 2.5, 4.0], 2).unwrap()
        );
    }

    #[test]
    fn equal_volumes_hit_the_null_mean() {
        let m = 9;
        let null = sr_null(m, 0.85_f64).unwrap();
        assert!((null.mean() - 1.0 / m as f64).abs() < 1e-15);
    }

    #[test]
    fn sr_and_sr0_agree() {
        let vols = [4.0_f64, 0.5, 1.2, 0.9, 2.2];
        for eps in [0.01, 0.05, 0.3] {
            for t in 0..vols.len() {
                let a = sr_test(&vols, t, 0.85, eps).unwrap();
                let b = sr0_test(&vols, t, 0.85, eps).unwrap();
                assert_eq!(a.reject, b.reject);
                let r0 = b.statistic_value;
                assert!((a.statistic_value - r0 / (4.0 + r0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn input_errors() {
        assert!(sr_statistic(&[1.0_f64], 0).is_err());
        assert!(sr_statistic(&[1.0, 0.0_f64], 0).is_err());
        assert!(sr_statistic(&[1.0, 2.0_f64], 2).is_err());
        assert!(matches!(
            sr0_group_statistic(&[1.0, 2.0_f64], &[0, 1]),
            Err(Error::InvalidSubset(_))
        ));
        assert!(matches!(
            sr0_group_statistic(&[1.0, 2.0, 3.0_f64], &[0, 0]),
            Err(Error::InvalidSubset(_))
        ));
        assert!(sr0_group_statistic(&[1.0, 2.0, 3.0_f64], &[5]).is_err());
    }

    #[test]
    fn dominant_target_is_finite() {
        // ΣV - V_target would round to zero here
        let v: f64 = sr0_statistic(&[1e17, 1.0, 1.0], 0).unwrap();
        assert_eq!(v, 1e17);
    }

    #[test]
    fn cached_tester_matches() {
        let vols = [1.0, 2.0, 30.0, 1.5, 0.7];
        let t = ShareTester::new(5, 0.85, 0.05).unwrap();
        assert_eq!(t.sr0(&vols, 2).unwrap(), sr0_test(&vols, 2, 0.85, 0.05).unwrap());
        assert_eq!(t.sr(&vols, 2).unwrap(), sr_test(&vols, 2, 0.85, 0.05).unwrap());
        assert!(t.sr(&vols[..4], 0).is_err());
    }

    #[test]
    fn argmax_wrapper() {
        let (i, v) = sr0_test_max(&[1.0, 100.0, 1.0], 0.85, 0.01).unwrap();
        assert_eq!(i, 1);
        assert!(v.reject);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), Some(0));
    }

    #[test]
    fn jsonl_shape() {
        let v = sr0_test(&[1.0, 100.0, 1.0], 1, 0.85, 0.01).unwrap();
        let rec = VerdictRecord::new(NaiveDate::from_ymd_opt(1999, 5, 1).unwrap(), &v);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[rec]).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.starts_with("{\"period_start\":\"1999-05-01\",\"statistic\":\"SR0\",\"value\":100.0,"));
        assert!(line.ends_with("\"reject\":true}\n"));
    }
}
