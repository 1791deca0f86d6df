//! Moving-window classification of wet periods by their total volumes.
//!
//! Every window of `m` consecutive periods is tested with SR0. A period lies
//! in up to `m` windows; how many of them flag it decides its class.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{argmax, sr0_statistic, ShareTester};
use crate::segmentation::WetPeriod;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyClass {
    Regular,
    Relative,
    Intermediate,
    Absolute,
}

impl AnomalyClass {
    /// Strongest class for `flagged` of `containing` windows: all of them is
    /// absolute, at least half (rounded up) intermediate, at least one relative.
    pub fn classify(containing: usize, flagged: usize) -> Self {
        if flagged == 0 {
            Self::Regular
        } else if flagged >= containing {
            Self::Absolute
        } else if flagged >= containing.div_ceil(2) {
            Self::Intermediate
        } else {
            Self::Relative
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Regular => "regular",
            Self::Relative => "relative",
            Self::Intermediate => "intermediate",
            Self::Absolute => "absolute",
        }
    }
}

/// Which member of a window the test is applied to.
///
/// When the SR0 threshold is at least `m - 1` only the window maximum can
/// exceed it, and the two modes agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Every member is tested against the fixed-coordinate null law.
    FixedCoordinate,
    /// Only the window's largest volume is tested.
    #[default]
    WindowMax,
}

impl std::str::FromStr for TargetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "window_max" => Ok(Self::WindowMax),
            "fixed" | "fixed_coordinate" => Ok(Self::FixedCoordinate),
            other => Err(Error::Config(format!("unknown target mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowVerdict {
    pub period_index: usize,
    pub windows_containing: usize,
    pub windows_flagged: usize,
    pub class: AnomalyClass,
}

/// Window width matching a time horizon: `round(days / mean_gap)`, at least 2.
pub fn horizon_to_m(days: u32, mean_gap: f64) -> usize {
    let m = (f64::from(days) / mean_gap).round();
    if m.is_finite() && m > 2.0 {
        m as usize
    } else {
        2
    }
}

/// Scans all `N - m + 1` windows on the current rayon pool.
pub fn moving_scan<T: Scalar>(
    volumes: &[T],
    m: usize,
    r: T,
    epsilon: T,
    target_mode: TargetMode,
) -> Result<Vec<WindowVerdict>> {
    let n = volumes.len();
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    if n < m {
        return Err(Error::WindowTooWide { m, n });
    }
    let tester = ShareTester::new(m, r, epsilon)?;
    let threshold = tester.sr0_threshold();

    let flagged_per_window: Vec<Vec<usize>> = (0..=n - m)
        .into_par_iter()
        .map(|w| -> Result<Vec<usize>> {
            let window = &volumes[w..w + m];
            match target_mode {
                TargetMode::WindowMax => {
                    let t = argmax(window).expect("window is nonempty");
                    Ok(if sr0_statistic(window, t)? > threshold {
                        vec![w + t]
                    } else {
                        vec![]
                    })
                }
                TargetMode::FixedCoordinate => {
                    let mut hits = Vec::new();
                    for t in 0..m {
                        if sr0_statistic(window, t)? > threshold {
                            hits.push(w + t);
                        }
                    }
                    Ok(hits)
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut flagged = vec![0usize; n];
    for hits in &flagged_per_window {
        for &j in hits {
            flagged[j] += 1;
        }
    }
    Ok((0..n)
        .map(|j| {
            let first = j.saturating_sub(m - 1);
            let last = j.min(n - m);
            let containing = last - first + 1;
            WindowVerdict {
                period_index: j,
                windows_containing: containing,
                windows_flagged: flagged[j],
                class: AnomalyClass::classify(containing, flagged[j]),
            }
        })
        .collect())
}

/// [`moving_scan`] on a dedicated pool of `threads` workers (0 = rayon default).
pub fn moving_scan_with_threads<T: Scalar>(
    volumes: &[T],
    m: usize,
    r: T,
    epsilon: T,
    target_mode: TargetMode,
    threads: usize,
) -> Result<Vec<WindowVerdict>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| moving_scan(volumes, m, r, epsilon, target_mode))
}

/// Counts of each class, in the order regular, relative, intermediate, absolute.
/// A stronger class also counts toward every weaker non-regular class.
pub fn nested_counts(verdicts: &[WindowVerdict]) -> [usize; 4] {
    let mut c = [0usize; 4];
    for v in verdicts {
        match v.class {
            AnomalyClass::Regular => c[0] += 1,
            AnomalyClass::Relative => c[1] += 1,
            AnomalyClass::Intermediate => {
                c[1] += 1;
                c[2] += 1;
            }
            AnomalyClass::Absolute => {
                c[1] += 1;
                c[2] += 1;
                c[3] += 1;
            }
        }
    }
    c
}

/// One output row of a scan, ready for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub period_index: usize,
    pub start_date: NaiveDate,
    pub volume: f64,
    pub windows_containing: usize,
    pub windows_flagged: usize,
    pub class: AnomalyClass,
}

pub fn scan_records(periods: &[WetPeriod], verdicts: &[WindowVerdict]) -> Vec<ScanRecord> {
    periods
        .iter()
        .zip(verdicts)
        .map(|(p, v)| ScanRecord {
            period_index: v.period_index,
            start_date: p.start_date,
            volume: p.total,
            windows_containing: v.windows_containing,
            windows_flagged: v.windows_flagged,
            class: v.class,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SFParams;

    #[test]
    fn horizons() {
        assert_eq!(horizon_to_m(30, 5.804), 5);
        assert_eq!(horizon_to_m(360, 6.0), 60);
        assert_eq!(horizon_to_m(6, 6.0), 2);
    }

    #[test]
    fn three_period_spike() {
        // SR0 of the middle period is 100 in both of its windows; Q_{0.85,0.85}
        // has its 95% quantile near 27.6 and its 99% quantile near 188.8
        let null = SFParams::new(0.85, 0.85).unwrap();
        assert!(null.quantile(0.95).unwrap() < 100.0);
        assert!(null.quantile(0.99).unwrap() > 100.0);
        for mode in [TargetMode::WindowMax, TargetMode::FixedCoordinate] {
            let v = moving_scan(&[1.0, 100.0, 1.0], 2, 0.85, 0.05, mode).unwrap();
            let classes: Vec<_> = v.iter().map(|x| x.class).collect();
            assert_eq!(
                classes,
                [AnomalyClass::Regular, AnomalyClass::Absolute, AnomalyClass::Regular]
            );
            assert_eq!(v[1].windows_containing, 2);
            assert_eq!(v[0].windows_containing, 1);

            let v = moving_scan(&[1.0, 100.0, 1.0], 2, 0.85, 0.01, mode).unwrap();
            assert!(v.iter().all(|x| x.class == AnomalyClass::Regular));
        }
    }

    #[test]
    fn constant_volumes_are_regular() {
        let v = moving_scan(&[3.0; 40], 5, 0.85, 0.05, TargetMode::FixedCoordinate).unwrap();
        assert!(v.iter().all(|x| x.class == AnomalyClass::Regular));
        assert_eq!(v.iter().map(|x| x.windows_containing).max(), Some(5));
    }

    #[test]
    fn classification_rules() {
        assert_eq!(AnomalyClass::classify(5, 0), AnomalyClass::Regular);
        assert_eq!(AnomalyClass::classify(5, 2), AnomalyClass::Relative);
        assert_eq!(AnomalyClass::classify(5, 3), AnomalyClass::Intermediate);
        assert_eq!(AnomalyClass::classify(5, 5), AnomalyClass::Absolute);
        assert_eq!(AnomalyClass::classify(4, 2), AnomalyClass::Intermediate);
        assert_eq!(AnomalyClass::classify(1, 1), AnomalyClass::Absolute);
    }

    #[test]
    fn window_too_wide() {
        assert!(matches!(
            moving_scan(&[1.0, 2.0], 3, 0.85, 0.05, TargetMode::WindowMax),
            Err(Error::WindowTooWide { m: 3, n: 2 })
        ));
    }
}
