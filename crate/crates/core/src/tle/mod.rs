//! Two-line element set ingestion.
//!
//! Parsing follows the fixed-column NORAD format. Mean elements are taken
//! directly as osculating two-body elements; no SGP4 interpretation is done.

mod split;
mod synth;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::{
    eccentric_to_true, solve_kepler, wrap_two_pi, AstroError, GravParams, KeplerianElements,
};

pub use split::{split_dataset, DatasetSplit};
pub use synth::{synthetic_cloud, CloudSpec};

pub const TLE_LINE_LEN: usize = 69;
pub const EARTH_RADIUS_KM: f64 = 6378.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TleError {
    #[error("line {line}: expected {TLE_LINE_LEN} characters, found {len}")]
    Length { line: u8, len: usize },
    #[error("line {line}: must start with '{line} ', found {found:?}")]
    LineNumber { line: u8, found: String },
    #[error("line {line}: checksum mismatch (column 69 says {stated}, computed {computed})")]
    Checksum { line: u8, stated: u32, computed: u32 },
    #[error("line {line}, column {column}: cannot parse {field} from {text:?}")]
    Field {
        line: u8,
        column: usize,
        field: &'static str,
        text: String,
    },
    #[error("catalog numbers differ between lines ({line1} vs {line2})")]
    CatalogMismatch { line1: u32, line2: u32 },
    #[error("invalid element: {0}")]
    Element(String),
    #[error("incomplete record at line {0} of input")]
    Truncated(usize),
    #[error("at least {needed} records are required, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error(transparent)]
    Astro(#[from] AstroError),
}

#[derive(Debug, Error)]
pub enum TleIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: record {index}: {source}")]
    Parse {
        path: String,
        index: usize,
        source: TleError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One parsed element set. Angles are stored in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TleRecord {
    pub name: String,
    pub norad_id: u32,
    pub epoch_year: i32,
    pub epoch_day: f64,
    pub inclination: f64,
    pub raan: f64,
    pub eccentricity: f64,
    pub argp: f64,
    pub mean_anomaly: f64,
    /// rev/day
    pub mean_motion: f64,
}

impl TleRecord {
    /// Absolute epoch as seconds since 1970-01-01T00:00:00 UTC.
    pub fn epoch_unix_seconds(&self) -> f64 {
        let jan1 = NaiveDate::from_yo_opt(self.epoch_year, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("TLE years are always representable");
        jan1.and_utc().timestamp() as f64 + (self.epoch_day - 1.0) * 86_400.0
    }

    pub fn period_seconds(&self) -> f64 {
        86_400.0 / self.mean_motion
    }

    pub fn semi_major_axis(&self, mu: GravParams) -> f64 {
        let n = TAU * self.mean_motion / 86_400.0;
        (mu.mu / (n * n)).cbrt()
    }
}

/// Modulo-10 checksum over the first 68 columns: digits count their value, '-' counts 1.
pub fn checksum(line: &str) -> u32 {
    line.chars()
        .take(TLE_LINE_LEN - 1)
        .map(|c| match c {
            '0'..='9' => c as u32 - '0' as u32,
            '-' => 1,
            _ => 0,
        })
        .sum::<u32>()
        % 10
}

fn check_line(text: &str, line: u8) -> Result<(), TleError> {
    let len = text.chars().count();
    if len != TLE_LINE_LEN || !text.is_ascii() {
        return Err(TleError::Length { line, len });
    }
    let prefix = format!("{line} ");
    if !text.starts_with(&prefix) {
        return Err(TleError::LineNumber {
            line,
            found: text[..2].to_string(),
        });
    }
    let stated = text.as_bytes()[68];
    if !stated.is_ascii_digit() {
        return Err(TleError::Field {
            line,
            column: 69,
            field: "checksum",
            text: (stated as char).to_string(),
        });
    }
    let stated = (stated - b'0') as u32;
    let computed = checksum(text);
    if stated != computed {
        return Err(TleError::Checksum {
            line,
            stated,
            computed,
        });
    }
    Ok(())
}

/// Extracts 1-based inclusive columns `[from, to]` and parses them.
fn field<T: std::str::FromStr>(
    text: &str,
    line: u8,
    from: usize,
    to: usize,
    name: &'static str,
) -> Result<T, TleError> {
    let raw = &text[from - 1..to];
    raw.trim().parse().map_err(|_| TleError::Field {
        line,
        column: from,
        field: name,
        text: raw.to_string(),
    })
}

/// Parses one name line plus the two element lines.
pub fn parse_tle(name_line: &str, line1: &str, line2: &str) -> Result<TleRecord, TleError> {
    let line1 = line1.trim_end_matches(['\r', '\n']);
    let line2 = line2.trim_end_matches(['\r', '\n']);
    check_line(line1, 1)?;
    check_line(line2, 2)?;

    let id1: u32 = field(line1, 1, 3, 7, "catalog number")?;
    let id2: u32 = field(line2, 2, 3, 7, "catalog number")?;
    if id1 != id2 {
        return Err(TleError::CatalogMismatch {
            line1: id1,
            line2: id2,
        });
    }
    let yy: i32 = field(line1, 1, 19, 20, "epoch year")?;
    let epoch_year = if yy < 57 { 2000 + yy } else { 1900 + yy };
    let epoch_day: f64 = field(line1, 1, 21, 32, "epoch day")?;
    if !(1.0..367.0).contains(&epoch_day) {
        return Err(TleError::Field {
            line: 1,
            column: 21,
            field: "epoch day",
            text: line1[20..32].to_string(),
        });
    }

    let inclination: f64 = field(line2, 2, 9, 16, "inclination")?;
    let raan: f64 = field(line2, 2, 18, 25, "right ascension")?;
    let ecc_digits = &line2[26..33];
    if !ecc_digits.trim().chars().all(|c| c.is_ascii_digit()) || ecc_digits.trim().is_empty() {
        return Err(TleError::Field {
            line: 2,
            column: 27,
            field: "eccentricity",
            text: ecc_digits.to_string(),
        });
    }
    let eccentricity: f64 = format!("0.{}", ecc_digits.trim())
        .parse()
        .map_err(|_| TleError::Field {
            line: 2,
            column: 27,
            field: "eccentricity",
            text: ecc_digits.to_string(),
        })?;
    let argp: f64 = field(line2, 2, 35, 42, "argument of perigee")?;
    let mean_anomaly: f64 = field(line2, 2, 44, 51, "mean anomaly")?;
    let mean_motion: f64 = field(line2, 2, 53, 63, "mean motion")?;
    if !(mean_motion > 0.0) {
        return Err(TleError::Element(format!(
            "mean motion must be positive, got {mean_motion}"
        )));
    }
    if !(0.0..=180.0).contains(&inclination) {
        return Err(TleError::Element(format!(
            "inclination {inclination} deg outside [0, 180]"
        )));
    }

    Ok(TleRecord {
        name: name_line.trim().trim_start_matches("0 ").to_string(),
        norad_id: id1,
        epoch_year,
        epoch_day,
        inclination: inclination.to_radians(),
        raan: raan.to_radians(),
        eccentricity,
        argp: argp.to_radians(),
        mean_anomaly: mean_anomaly.to_radians(),
        mean_motion,
    })
}

fn with_checksum(mut body: String) -> String {
    debug_assert_eq!(body.len(), TLE_LINE_LEN - 1);
    let sum = checksum(&body);
    write!(body, "{sum}").unwrap();
    body
}

/// Degrees in [0, 360) after rounding to the 4 printed decimals.
fn angle_field(rad: f64) -> f64 {
    let deg = (wrap_two_pi(rad).to_degrees() * 1e4).round() / 1e4;
    if deg >= 360.0 {
        deg - 360.0
    } else {
        deg
    }
}

/// Renders a record back into TLE text. Drag terms and the international
/// designator are written as zeros/blank since they are not retained.
pub fn format_tle(rec: &TleRecord) -> [String; 3] {
    let yy = rec.epoch_year.rem_euclid(100);
    let line1 = format!(
        "1 {:05}U {:<8} {:02}{:012.8}  .00000000  00000-0  00000-0 0  999",
        rec.norad_id, "", yy, rec.epoch_day
    );
    let ecc = (rec.eccentricity * 1e7).round() as u64;
    let line2 = format!(
        "2 {:05} {:8.4} {:8.4} {:07} {:8.4} {:8.4} {:11.8}    0",
        rec.norad_id,
        rec.inclination.to_degrees(),
        angle_field(rec.raan),
        ecc.min(9_999_999),
        angle_field(rec.argp),
        angle_field(rec.mean_anomaly),
        rec.mean_motion
    );
    [
        rec.name.clone(),
        with_checksum(line1),
        with_checksum(line2),
    ]
}

/// Parses a 3-line TLE text (name line + two element lines per object).
/// Blank lines are ignored; a file without name lines is also accepted.
pub fn parse_tle_text(text: &str) -> Result<Vec<TleRecord>, (usize, TleError)> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut out = Vec::new();
    let mut idx = 0;
    while idx < lines.len() {
        let (name, l1, l2, used) = if lines[idx].starts_with("1 ") {
            let l2 = *lines.get(idx + 1).ok_or((out.len(), TleError::Truncated(idx + 1)))?;
            ("", lines[idx], l2, 2)
        } else {
            let l1 = *lines.get(idx + 1).ok_or((out.len(), TleError::Truncated(idx + 1)))?;
            let l2 = *lines.get(idx + 2).ok_or((out.len(), TleError::Truncated(idx + 2)))?;
            (lines[idx], l1, l2, 3)
        };
        let mut rec = parse_tle(name, l1, l2).map_err(|e| (out.len(), e))?;
        if rec.name.is_empty() {
            rec.name = format!("NORAD {}", rec.norad_id);
        }
        out.push(rec);
        idx += used;
    }
    Ok(out)
}

pub fn read_tle_file(path: &Path) -> Result<Vec<TleRecord>, TleIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| TleIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tle_text(&text).map_err(|(index, source)| TleIoError::Parse {
        path: path.display().to_string(),
        index,
        source,
    })
}

pub fn write_tle_file(path: &Path, records: &[TleRecord]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for rec in records {
        for line in format_tle(rec) {
            writeln!(f, "{line}")?;
        }
    }
    f.flush()
}

/// Earliest epoch in the set, used as the mission clock origin.
pub fn reference_epoch(records: &[TleRecord]) -> Option<f64> {
    records
        .iter()
        .map(TleRecord::epoch_unix_seconds)
        .min_by(|a, b| a.total_cmp(b))
}

/// Flag attached to element sets whose perigee lies below the Earth's surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspectOrbit {
    pub perigee_radius: f64,
}

/// Converts a record to Keplerian elements on the mission clock.
///
/// `reference_unix` is the scenario reference instant; the returned epoch is
/// the record epoch expressed in seconds after it.
pub fn tle_to_elements(
    rec: &TleRecord,
    mu: GravParams,
    reference_unix: f64,
) -> Result<(KeplerianElements, Option<SuspectOrbit>), TleError> {
    let a = rec.semi_major_axis(mu);
    let ecc = solve_kepler(rec.mean_anomaly, rec.eccentricity)?;
    let nu = eccentric_to_true(ecc, rec.eccentricity);
    let elems = KeplerianElements::new(
        a,
        rec.eccentricity,
        rec.inclination,
        rec.raan,
        rec.argp,
        nu,
        rec.epoch_unix_seconds() - reference_unix,
    )?;
    let suspect = (elems.perigee_radius() < EARTH_RADIUS_KM).then(|| {
        log::warn!(
            "{} (NORAD {}): perigee radius {:.1} km is below the Earth's surface",
            rec.name,
            rec.norad_id,
            elems.perigee_radius()
        );
        SuspectOrbit {
            perigee_radius: elems.perigee_radius(),
        }
    });
    Ok((elems, suspect))
}

/// Row of the normalized element dump. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRow {
    pub name: String,
    pub norad_id: u32,
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub nu: f64,
    pub epoch_s: f64,
}

impl ElementRow {
    pub fn new(rec: &TleRecord, elems: &KeplerianElements) -> Self {
        Self {
            name: rec.name.clone(),
            norad_id: rec.norad_id,
            a: elems.a,
            e: elems.e,
            i: elems.i.to_degrees(),
            raan: elems.raan.to_degrees(),
            argp: elems.argp.to_degrees(),
            nu: elems.nu.to_degrees(),
            epoch_s: elems.epoch,
        }
    }
}

pub fn write_elements_csv<W: std::io::Write>(writer: W, rows: &[ElementRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
