use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DailyRecord, HolidayCalendar, HourlyRecord};
use crate::error::{Error, Result};

const HOURLY_HEADER: [&str; 5] = ["date", "hour", "demand_mwh", "dry_bulb_f", "wet_bulb_f"];
const DAILY_HEADER: [&str; 4] = ["date", "consumption_gwh", "dry_bulb_f", "wet_bulb_f"];

#[derive(Debug, Deserialize)]
struct HourlyRow {
    date: NaiveDate,
    hour: u8,
    demand_mwh: f64,
    dry_bulb_f: f64,
    wet_bulb_f: f64,
}

/// Row of the daily CSV format.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub consumption_gwh: f64,
    pub dry_bulb_f: f64,
    pub wet_bulb_f: f64,
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, message: message.into() }
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str], path: &str) -> Result<()> {
    let header = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(path, 1, format!("expected header `{}`, found `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

fn rows<R: Read, T: for<'de> Deserialize<'de>>(input: R, expected: &[&str], path: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(&mut reader, expected, path)?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        // header is line 1
        let row: T = row.map_err(|e| parse_err(path, i + 2, e.to_string()))?;
        out.push(row);
    }
    Ok(out)
}

/// Parses `date,hour,demand_mwh,dry_bulb_f,wet_bulb_f`.
pub fn read_hourly_csv<R: Read>(input: R, path: &str) -> Result<Vec<HourlyRecord>> {
    let parsed: Vec<HourlyRow> = rows(input, &HOURLY_HEADER, path)?;
    parsed
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            HourlyRecord::new(r.date, r.hour, r.demand_mwh, r.dry_bulb_f, r.wet_bulb_f)
                .map_err(|e| parse_err(path, i + 2, e.to_string()))
        })
        .collect()
}

/// Parses `date,consumption_gwh,dry_bulb_f,wet_bulb_f`.
pub fn read_daily_csv<R: Read>(input: R, path: &str, holidays: &HolidayCalendar) -> Result<Vec<DailyRecord>> {
    let parsed: Vec<DailyRow> = rows(input, &DAILY_HEADER, path)?;
    let mut out = Vec::with_capacity(parsed.len());
    for (i, r) in parsed.into_iter().enumerate() {
        if let Some(prev) = out.last().map(|d: &DailyRecord| d.date) {
            if r.date <= prev {
                return Err(parse_err(path, i + 2, format!("date {} does not follow {}", r.date, prev)));
            }
        }
        out.push(DailyRecord::new(r.date, r.consumption_gwh, r.dry_bulb_f, r.wet_bulb_f, holidays));
    }
    Ok(out)
}

pub fn write_daily_csv<W: Write>(out: W, days: &[DailyRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for d in days {
        writer
            .serialize(DailyRow {
                date: d.date,
                consumption_gwh: d.consumption,
                dry_bulb_f: d.dry_bulb,
                wet_bulb_f: d.wet_bulb,
            })
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer.flush()?;
    Ok(())
}

/// One ISO-8601 date per line; blank lines and `#` comments are skipped.
pub fn read_holidays(path: &Path) -> Result<HolidayCalendar> {
    let file = std::fs::File::open(path)?;
    let display = path.display().to_string();
    let mut dates = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let date = trimmed
            .parse::<NaiveDate>()
            .map_err(|e| parse_err(&display, i + 1, format!("bad date `{trimmed}`: {e}")))?;
        dates.push(date);
    }
    Ok(HolidayCalendar::new(dates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hourly_csv_parses() {
        let text = "date,hour,demand_mwh,dry_bulb_f,wet_bulb_f\n2010-01-01,0,1000,30,25\n2010-01-01,1,1100,31,26\n";
        let rows = read_hourly_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].demand, 1100.0);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "date,hour,demand_mwh,dry_bulb_f,wet_bulb_f\n2010-01-01,0,1000,30,25\n2010-01-01,x,1100,31,26\n";
        match read_hourly_csv(text.as_bytes(), "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "date,hour,demand_mwh,dry_bulb_f,wet_bulb_f\n2010-01-01,0,-5,30,25\n";
        assert!(matches!(read_hourly_csv(text.as_bytes(), "mem"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "date,load\n2010-01-01,3\n";
        assert!(matches!(read_daily_csv(text.as_bytes(), "mem", &HolidayCalendar::default()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn daily_roundtrip() {
        let cal = HolidayCalendar::default();
        let text = "date,consumption_gwh,dry_bulb_f,wet_bulb_f\n2010-01-01,300.5,30,25\n2010-01-02,310.25,28.5,24\n";
        let days = read_daily_csv(text.as_bytes(), "mem", &cal).unwrap();
        let mut buf = Vec::new();
        write_daily_csv(&mut buf, &days).unwrap();
        let again = read_daily_csv(buf.as_slice(), "mem", &cal).unwrap();
        assert_eq!(days, again);
    }

    #[test]
    fn holiday_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.txt");
        std::fs::write(&path, "# comment\n2012-12-25\n\n2012-07-04\n").unwrap();
        let cal = read_holidays(&path).unwrap();
        assert_eq!(cal.len(), 2);
        std::fs::write(&path, "2012-13-01\n").unwrap();
        assert!(matches!(read_holidays(&path), Err(Error::Parse { line: 1, .. })));
    }
}
