//! Trip-transaction CSV parsing.
//!
//! The public Citi Bike dumps changed their header spelling over the years.
//! Headers are matched case-insensitively after stripping spaces and
//! underscores, against this alias table:
//!
//! | field          | accepted spellings (normalized)                          |
//! |----------------|----------------------------------------------------------|
//! | duration       | `tripduration`                                           |
//! | start_time     | `starttime`, `startedat`                                 |
//! | end_time       | `stoptime`, `endedat`, `endtime`                         |
//! | start_station  | `startstationid`                                         |
//! | end_station    | `endstationid`                                           |
//! | start_lat      | `startstationlatitude`, `startlat`                       |
//! | start_lon      | `startstationlongitude`, `startlng`, `startlon`          |
//! | end_lat        | `endstationlatitude`, `endlat`                           |
//! | end_lon        | `endstationlongitude`, `endlng`, `endlon`                |
//! | user_type      | `usertype`, `membercasual`                               |
//!
//! covering both the classic `"starttime"` era and the `"Start Time"` /
//! `"started_at"` variants. Start/end time and station ids are required;
//! the rest are optional (duration falls back to `end - start`).

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserType {
    Customer,
    Subscriber,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub duration_secs: i64,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub start_station: String,
    pub end_station: String,
    pub start_lat: Option<f64>,
    pub start_lon: Option<f64>,
    pub end_lat: Option<f64>,
    pub end_lon: Option<f64>,
    pub user_type: UserType,
}

/// Why a row was rejected. `code()` is the machine-readable form used in
/// rejection logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    MissingValue(&'static str),
    BadTimestamp(&'static str),
    BadNumber(&'static str),
    BadCoordinate(&'static str),
    NegativeDuration,
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::MissingValue(_) => "missing_value",
            RejectReason::BadTimestamp(_) => "bad_timestamp",
            RejectReason::BadNumber(_) => "bad_number",
            RejectReason::BadCoordinate(_) => "bad_coordinate",
            RejectReason::NegativeDuration => "negative_duration",
        }
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::MissingValue(field) => write!(f, "missing value for {field}"),
            RejectReason::BadTimestamp(field) => write!(f, "unparseable timestamp in {field}"),
            RejectReason::BadNumber(field) => write!(f, "unparseable number in {field}"),
            RejectReason::BadCoordinate(field) => write!(f, "coordinate out of range in {field}"),
            RejectReason::NegativeDuration => write!(f, "negative duration"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub trips: Vec<TripRecord>,
    pub rejected: Vec<RejectedRow>,
}

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
];

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw.trim(), fmt).ok())
}

fn normalize_header(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

struct Columns {
    duration: Option<usize>,
    start_time: usize,
    end_time: usize,
    start_station: usize,
    end_station: usize,
    start_lat: Option<usize>,
    start_lon: Option<usize>,
    end_lat: Option<usize>,
    end_lon: Option<usize>,
    user_type: Option<usize>,
}

fn find(headers: &[String], aliases: &[&str]) -> Option<usize> {
    headers.iter().position(|h| aliases.contains(&h.as_str()))
}

fn resolve_columns(headers: &csv::StringRecord) -> Result<Columns> {
    let normalized: Vec<String> = headers.iter().map(normalize_header).collect();
    let start_time = find(&normalized, &["starttime", "startedat"]);
    let end_time = find(&normalized, &["stoptime", "endedat", "endtime"]);
    let start_station = find(&normalized, &["startstationid"]);
    let end_station = find(&normalized, &["endstationid"]);

    let mut missing = Vec::new();
    if start_time.is_none() {
        missing.push("start_time".to_string());
    }
    if end_time.is_none() {
        missing.push("end_time".to_string());
    }
    if start_station.is_none() {
        missing.push("start_station_id".to_string());
    }
    if end_station.is_none() {
        missing.push("end_station_id".to_string());
    }
    if !missing.is_empty() {
        return Err(Error::MissingColumns { missing });
    }

    Ok(Columns {
        duration: find(&normalized, &["tripduration"]),
        start_time: start_time.unwrap(),
        end_time: end_time.unwrap(),
        start_station: start_station.unwrap(),
        end_station: end_station.unwrap(),
        start_lat: find(&normalized, &["startstationlatitude", "startlat"]),
        start_lon: find(
            &normalized,
            &["startstationlongitude", "startlng", "startlon"],
        ),
        end_lat: find(&normalized, &["endstationlatitude", "endlat"]),
        end_lon: find(&normalized, &["endstationlongitude", "endlng", "endlon"]),
        user_type: find(&normalized, &["usertype", "membercasual"]),
    })
}

fn get_trimmed<'r>(record: &'r csv::StringRecord, idx: usize) -> Option<&'r str> {
    record.get(idx).map(str::trim).filter(|s| !s.is_empty())
}

fn parse_coord(
    record: &csv::StringRecord,
    idx: Option<usize>,
    bound: f64,
    field: &'static str,
) -> std::result::Result<Option<f64>, RejectReason> {
    let Some(idx) = idx else { return Ok(None) };
    let Some(raw) = get_trimmed(record, idx) else {
        return Ok(None);
    };
    let value: f64 = raw.parse().map_err(|_| RejectReason::BadNumber(field))?;
    if !value.is_finite() || value.abs() > bound {
        return Err(RejectReason::BadCoordinate(field));
    }
    Ok(Some(value))
}

fn parse_row(
    record: &csv::StringRecord,
    cols: &Columns,
) -> std::result::Result<TripRecord, RejectReason> {
    let start_raw =
        get_trimmed(record, cols.start_time).ok_or(RejectReason::MissingValue("start_time"))?;
    let end_raw =
        get_trimmed(record, cols.end_time).ok_or(RejectReason::MissingValue("end_time"))?;
    let start_station = get_trimmed(record, cols.start_station)
        .ok_or(RejectReason::MissingValue("start_station_id"))?
        .to_string();
    let end_station = get_trimmed(record, cols.end_station)
        .ok_or(RejectReason::MissingValue("end_station_id"))?
        .to_string();

    let start_time = parse_timestamp(start_raw).ok_or(RejectReason::BadTimestamp("start_time"))?;
    let end_time = parse_timestamp(end_raw).ok_or(RejectReason::BadTimestamp("end_time"))?;
    if end_time < start_time {
        return Err(RejectReason::NegativeDuration);
    }

    let duration_secs = match cols.duration.and_then(|idx| get_trimmed(record, idx)) {
        Some(raw) => {
            let parsed: f64 = raw
                .parse()
                .map_err(|_| RejectReason::BadNumber("duration"))?;
            if parsed < 0.0 {
                return Err(RejectReason::NegativeDuration);
            }
            parsed.round() as i64
        }
        None => (end_time - start_time).num_seconds(),
    };

    let start_lat = parse_coord(record, cols.start_lat, 90.0, "start_lat")?;
    let start_lon = parse_coord(record, cols.start_lon, 180.0, "start_lon")?;
    let end_lat = parse_coord(record, cols.end_lat, 90.0, "end_lat")?;
    let end_lon = parse_coord(record, cols.end_lon, 180.0, "end_lon")?;

    let user_type = match cols.user_type.and_then(|idx| get_trimmed(record, idx)) {
        Some(raw) => match raw.to_ascii_lowercase().as_str() {
            "subscriber" | "member" => UserType::Subscriber,
            "customer" | "casual" => UserType::Customer,
            _ => UserType::Unknown,
        },
        None => UserType::Unknown,
    };

    Ok(TripRecord {
        duration_secs,
        start_time,
        end_time,
        start_station,
        end_station,
        start_lat,
        start_lon,
        end_lat,
        end_lon,
        user_type,
    })
}

/// Parse a trip CSV. Well-formed rows become [`TripRecord`]s; malformed rows
/// are collected in the rejection log, one entry per row, and counted in a
/// warning — never dropped silently.
pub fn parse_trips<R: Read>(reader: R) -> Result<ParseOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let cols = resolve_columns(csv_reader.headers()?)?;

    let mut outcome = ParseOutcome::default();
    for (i, row) in csv_reader.records().enumerate() {
        // Parser position when available, else header + 1-based fallback
        // (they differ only for rows with embedded newlines).
        let fallback = (i + 2) as u64;
        let record = match row {
            Ok(record) => record,
            Err(err) => {
                let line = err.position().map(|p| p.line()).unwrap_or(fallback);
                outcome.rejected.push(RejectedRow {
                    line,
                    reason: RejectReason::MissingValue("row"),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(fallback);
        match parse_row(&record, &cols) {
            Ok(trip) => outcome.trips.push(trip),
            Err(reason) => outcome.rejected.push(RejectedRow { line, reason }),
        }
    }

    if !outcome.rejected.is_empty() {
        log::warn!(
            "rejected {} of {} trip rows",
            outcome.rejected.len(),
            outcome.rejected.len() + outcome.trips.len()
        );
    }
    Ok(outcome)
}

/// Open a trip file, transparently decompressing gzip (by magic bytes, so
/// both `.csv` and `.csv.gz` work regardless of extension).
pub fn open_trip_file(path: &Path) -> Result<Box<dyn Read>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    use std::io::Seek;
    file.seek(std::io::SeekFrom::Start(0))?;
    let buffered = BufReader::new(file);
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(flate2::read::MultiGzDecoder::new(buffered)))
    } else {
        Ok(Box::new(buffered))
    }
}
