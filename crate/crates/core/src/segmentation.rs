//! Daily records in, wet periods out.
//!
//! A wet day has precipitation strictly above the wet threshold (default
//! 0 mm). A wet period is a maximal run of wet days. Missing days either end
//! a run ([`MissingPolicy::Break`]) or are dropped from the calendar so the run
//! continues ([`MissingPolicy::Skip`]); in both cases a period that touches a
//! missing day is flagged. A jump in the date column counts as missing days.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One calendar day; `precip` is `None` when the value is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub precip: Option<f64>,
}

/// Chronologically ordered daily records of one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    station: Option<String>,
    records: Vec<DailyRecord>,
}

impl DailySeries {
    /// Validates strictly increasing dates and nonnegative finite values.
    pub fn new(station: Option<String>, records: Vec<DailyRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptySeries);
        }
        for pair in records.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::UnorderedDates {
                    prev: pair[0].date.to_string(),
                    next: pair[1].date.to_string(),
                });
            }
        }
        if let Some(bad) = records
            .iter()
            .filter_map(|r| r.precip)
            .find(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::MalformedValue(bad.to_string()));
        }
        Ok(Self { station, records })
    }

    /// Consecutive days starting at `start`, `None` entries being missing.
    pub fn from_values(start: NaiveDate, values: &[Option<f64>]) -> Result<Self> {
        let records = values
            .iter()
            .zip(start.iter_days())
            .map(|(&precip, date)| DailyRecord { date, precip })
            .collect();
        Self::new(None, records)
    }

    pub fn station(&self) -> Option<&str> {
        self.station.as_deref()
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Volumes of wet days in chronological order.
    pub fn wet_volumes(&self, wet_threshold: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.precip)
            .filter(|&v| v > wet_threshold)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    /// A missing day terminates the current run.
    #[default]
    Break,
    /// A missing day is removed from the calendar; the run continues.
    Skip,
}

impl std::str::FromStr for MissingPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "break" => Ok(Self::Break),
            "skip" => Ok(Self::Skip),
            other => Err(Error::Config(format!("unknown missing policy {other:?}"))),
        }
    }
}

/// A maximal run of wet days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WetPeriod {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub station: Option<String>,
    pub start_date: NaiveDate,
    pub duration: u32,
    pub dailies: Vec<f64>,
    pub total: f64,
    pub max_daily: f64,
    /// The run touches or spans a missing day.
    #[serde(default)]
    pub flagged: bool,
}

impl WetPeriod {
    fn from_dailies(station: Option<String>, start_date: NaiveDate, dailies: Vec<f64>, flagged: bool) -> Self {
        let total = dailies.iter().sum();
        let max_daily = dailies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            station,
            start_date,
            duration: dailies.len() as u32,
            dailies,
            total,
            max_daily,
            flagged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Day {
    Wet(f64),
    Dry,
    Missing,
}

/// Expands the record list to a gap-free calendar, classifying each day.
fn calendar(series: &DailySeries, wet_threshold: f64) -> Vec<(NaiveDate, Day)> {
    let mut days = Vec::with_capacity(series.len());
    let mut prev: Option<NaiveDate> = None;
    for rec in series.records() {
        if let Some(p) = prev {
            let mut d = p.succ_opt().expect("date in range");
            while d < rec.date {
                days.push((d, Day::Missing));
                d = d.succ_opt().expect("date in range");
            }
        }
        let day = match rec.precip {
            None => Day::Missing,
            Some(v) if v > wet_threshold => Day::Wet(v),
            Some(_) => Day::Dry,
        };
        days.push((rec.date, day));
        prev = Some(rec.date);
    }
    days
}

/// Extracts wet periods in chronological order.
pub fn extract_wet_periods(
    series: &DailySeries,
    wet_threshold: f64,
    missing_policy: MissingPolicy,
) -> Result<Vec<WetPeriod>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(wet_threshold >= 0.0 && wet_threshold.is_finite()) {
        return Err(Error::Config(format!(
            "wet threshold must be a nonnegative number, got {wet_threshold}"
        )));
    }
    let station = series.station.clone();
    let days = calendar(series, wet_threshold);
    let mut periods = Vec::new();

    struct Run {
        start: NaiveDate,
        dailies: Vec<f64>,
        flagged: bool,
    }
    let mut current: Option<Run> = None;
    let mut prev_missing = false;

    for &(date, day) in &days {
        match day {
            Day::Wet(v) => {
                let run = current.get_or_insert_with(|| Run {
                    start: date,
                    dailies: Vec::new(),
                    flagged: prev_missing,
                });
                run.dailies.push(v);
                prev_missing = false;
            }
            Day::Dry => {
                if let Some(run) = current.take() {
                    periods.push(WetPeriod::from_dailies(
                        station.clone(),
                        run.start,
                        run.dailies,
                        run.flagged,
                    ));
                }
                prev_missing = false;
            }
            Day::Missing => {
                match missing_policy {
                    MissingPolicy::Break => {
                        if let Some(mut run) = current.take() {
                            run.flagged = true;
                            periods.push(WetPeriod::from_dailies(station.clone(), run.start, run.dailies, true));
                        }
                    }
                    MissingPolicy::Skip => {
                        if let Some(run) = current.as_mut() {
                            run.flagged = true;
                        }
                    }
                }
                prev_missing = true;
            }
        }
    }
    if let Some(run) = current.take() {
        periods.push(WetPeriod::from_dailies(station, run.start, run.dailies, run.flagged));
    }
    Ok(periods)
}

/// Running means of the first `n` wet-day volumes, `n = 1, 2, …`.
pub fn cumulative_means(series: &DailySeries, wet_threshold: f64) -> Result<Vec<(usize, f64)>> {
    let wet = series.wet_volumes(wet_threshold);
    if wet.is_empty() {
        return Err(Error::NoWetDays);
    }
    let mut sum = 0.0;
    Ok(wet
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            (i + 1, sum / (i + 1) as f64)
        })
        .collect())
}

/// Mean distance in days between the first days of successive wet periods.
pub fn mean_inter_onset_gap(periods: &[WetPeriod]) -> Result<f64> {
    if periods.len() < 2 {
        return Err(Error::TooFewPeriods(periods.len()));
    }
    let first = periods[0].start_date;
    let last = periods[periods.len() - 1].start_date;
    Ok((last - first).num_days() as f64 / (periods.len() - 1) as f64)
}

fn parse_date(field: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(field.trim(), "%Y-%m-%d").map_err(|_| Error::MalformedDate(field.to_string()))
}

fn parse_precip(field: &str) -> Result<Option<f64>> {
    let f = field.trim();
    if f.is_empty() || f.eq_ignore_ascii_case("NA") {
        return Ok(None);
    }
    f.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v >= 0.0)
        .map(Some)
        .ok_or_else(|| Error::MalformedValue(field.to_string()))
}

/// Reads `date,precip_mm` rows (optionally `station,date,precip_mm`).
///
/// A header row is recognised when its date column does not parse and
/// contains `date`. Rows of several stations are split into one series per
/// station, in order of first appearance.
pub fn read_daily_csv<R: Read>(reader: R) -> Result<Vec<DailySeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut blocks: Vec<(Option<String>, Vec<DailyRecord>)> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Io(e.to_string()))?;
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let (station, date_f, precip_f) = match row.len() {
            2 => (None, &row[0], &row[1]),
            3 => (Some(row[0].to_string()), &row[1], &row[2]),
            n => return Err(Error::MalformedValue(format!("row {} has {n} columns", i + 1))),
        };
        if i == 0 && parse_date(date_f).is_err() && date_f.to_ascii_lowercase().contains("date") {
            continue;
        }
        let rec = DailyRecord {
            date: parse_date(date_f)?,
            precip: parse_precip(precip_f)?,
        };
        match blocks.iter_mut().find(|(s, _)| *s == station) {
            Some((_, recs)) => recs.push(rec),
            None => blocks.push((station, vec![rec])),
        }
    }
    if blocks.is_empty() {
        return Err(Error::EmptySeries);
    }
    blocks
        .into_iter()
        .map(|(station, recs)| DailySeries::new(station, recs))
        .collect()
}
