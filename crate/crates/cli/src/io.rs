//! File formats, chosen by extension.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use wetspell::segmentation::WetPeriod;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Jsonl,
    Csv,
    Toml,
}

pub fn format_of(path: &Path) -> CliResult<Format> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "json" => Ok(Format::Json),
        "jsonl" => Ok(Format::Jsonl),
        "csv" => Ok(Format::Csv),
        "toml" => Ok(Format::Toml),
        _ => Err(CliError::Config(format!(
            "{}: unsupported file extension",
            path.display()
        ))),
    }
}

pub fn expect_format(path: &Path, allowed: &[Format]) -> CliResult<Format> {
    let f = format_of(path)?;
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Config(format!(
            "{}: expected one of {:?}",
            path.display(),
            allowed
                .iter()
                .map(|f| format!("{f:?}").to_lowercase())
                .collect::<Vec<_>>()
        )))
    }
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: impl Write) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads a config from `.json` or `.toml`.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    match expect_format(path, &[Format::Json, Format::Toml])? {
        Format::Json => serde_json::from_reader(open(path)?).map_err(|e| bad(&e)),
        _ => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            toml::from_str(&text).map_err(|e| bad(&e))
        }
    }
}

/// Writes records as JSON lines or CSV rows, depending on the extension.
pub fn write_records<R: Serialize>(path: &Path, records: &[R]) -> CliResult<()> {
    match expect_format(path, &[Format::Jsonl, Format::Csv])? {
        Format::Jsonl => {
            let mut w = create(path)?;
            wetspell::hypothesis::write_jsonl(&mut w, records)?;
            finish(path, w)
        }
        _ => write_csv(path, records),
    }
}

pub fn write_csv<R: Serialize>(path: &Path, records: &[R]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Flat CSV form of a wet period; dailies are joined with `;`.
#[derive(Debug, Serialize, Deserialize)]
struct PeriodRow {
    station: Option<String>,
    start_date: NaiveDate,
    duration: u32,
    total: f64,
    max_daily: f64,
    flagged: bool,
    dailies: String,
}

pub fn write_periods(path: &Path, periods: &[WetPeriod]) -> CliResult<()> {
    match expect_format(path, &[Format::Json, Format::Csv])? {
        Format::Json => write_json(path, &periods),
        _ => {
            let rows: Vec<PeriodRow> = periods
                .iter()
                .map(|p| PeriodRow {
                    station: p.station.clone(),
                    start_date: p.start_date,
                    duration: p.duration,
                    total: p.total,
                    max_daily: p.max_daily,
                    flagged: p.flagged,
                    dailies: p.dailies.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                })
                .collect();
            write_csv(path, &rows)
        }
    }
}

pub fn read_periods(path: &Path) -> CliResult<Vec<WetPeriod>> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let periods: Vec<WetPeriod> = match expect_format(path, &[Format::Json, Format::Csv])? {
        Format::Json => read_json(path)?,
        _ => {
            let mut rdr = csv::Reader::from_reader(open(path)?);
            let mut out = Vec::new();
            for row in rdr.deserialize::<PeriodRow>() {
                let row = row.map_err(|e| bad(e.to_string()))?;
                let dailies = row
                    .dailies
                    .split(';')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| bad(format!("dailies of {}: {e}", row.start_date)))?;
                out.push(WetPeriod {
                    station: row.station.filter(|s| !s.is_empty()),
                    start_date: row.start_date,
                    duration: row.duration,
                    dailies,
                    total: row.total,
                    max_daily: row.max_daily,
                    flagged: row.flagged,
                });
            }
            out
        }
    };
    for p in &periods {
        if p.duration == 0 || p.dailies.len() != p.duration as usize {
            return Err(bad(format!(
                "period starting {} has inconsistent duration",
                p.start_date
            )));
        }
    }
    Ok(periods)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periods_round_trip_through_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let odd = 0.1 + 0.2;
        let periods = vec![
            WetPeriod {
                station: Some("potsdam".into()),
                start_date: NaiveDate::from_ymd_opt(1950, 3, 1).unwrap(),
                duration: 3,
                dailies: vec![0.1, odd, 1e-3],
                total: 0.1 + odd + 1e-3,
                max_daily: odd,
                flagged: true,
            },
            WetPeriod {
                station: None,
                start_date: NaiveDate::from_ymd_opt(1950, 3, 9).unwrap(),
                duration: 1,
                dailies: vec![0.7],
                total: 0.7,
                max_daily: 0.7,
                flagged: false,
            },
        ];
        for name in ["p.csv", "p.json"] {
            let path = dir.path().join(name);
            write_periods(&path, &periods).unwrap();
            assert_eq!(read_periods(&path).unwrap(), periods, "{name}");
        }
    }

    #[test]
    fn inconsistent_duration_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(
            &path,
            "station,start_date,duration,total,max_daily,flagged,dailies\n,2000-01-01,2,1,1,false,1\n",
        )
        .unwrap();
        assert!(matches!(read_periods(&path), Err(CliError::Input(_))));
    }

    #[test]
    fn formats_follow_the_extension() {
        assert_eq!(format_of(Path::new("a/b.JSONL")).unwrap(), Format::Jsonl);
        assert!(matches!(format_of(Path::new("a/b.txt")), Err(CliError::Config(_))));
        assert!(expect_format(Path::new("x.json"), &[Format::Csv]).is_err());
    }
}
