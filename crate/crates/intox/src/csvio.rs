//! Sensor and TAC CSV streams.
//!
//! Sensor files carry `t,ax,ay,az,gx,gy,gz,hr` with an optional empty `hr`
//! cell; TAC files carry `t,tac`. Columns are located by header name.

use std::io::{Read, Write};

use intox_core::{SensorSample, TacReading};
use thiserror::Error;

pub const SENSOR_COLUMNS: [&str; 8] = ["t", "ax", "ay", "az", "gx", "gy", "gz", "hr"];
pub const TAC_COLUMNS: [&str; 2] = ["t", "tac"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("missing required column `{0}`")]
    Schema(String),
    #[error("line {line}: column `{column}`: cannot parse {value:?} as a number")]
    Parse { line: u64, column: String, value: String },
    #[error("line {line}: {reason}")]
    Invalid { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn column_indices(headers: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>, CsvError> {
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| CsvError::Schema((*name).to_string()))
        })
        .collect()
}

fn number(record: &csv::StringRecord, idx: usize, column: &str, line: u64) -> Result<Option<f64>, CsvError> {
    let raw = record.get(idx).unwrap_or("").trim();
    if raw.is_empty() {
        return Ok(None);
    }
    // Typeset minus signs show up in hand-edited files.
    let cleaned = raw.replace('\u{2212}', "-");
    cleaned.parse::<f64>().map(Some).map_err(|_| CsvError::Parse {
        line,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

fn required(record: &csv::StringRecord, idx: usize, column: &str, line: u64) -> Result<f64, CsvError> {
    number(record, idx, column, line)?.ok_or_else(|| CsvError::Invalid {
        line,
        reason: format!("column `{column}` is empty"),
    })
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(source)
}

/// Samples in file order. Each sample is validated.
pub fn parse_sensor_csv<R: Read>(source: R) -> Result<Vec<SensorSample>, CsvError> {
    let mut rdr = reader(source);
    let idx = column_indices(rdr.headers()?, &SENSOR_COLUMNS)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut v = [0.0; 7];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = required(&record, idx[k], SENSOR_COLUMNS[k], line)?;
        }
        let sample = SensorSample {
            t: v[0],
            accel: [v[1], v[2], v[3]],
            gyro: [v[4], v[5], v[6]],
            hr: number(&record, idx[7], "hr", line)?,
        };
        sample.validate().map_err(|e| CsvError::Invalid { line, reason: e.to_string() })?;
        out.push(sample);
    }
    Ok(out)
}

/// Readings in file order; ordering and value checks are left to
/// [`intox_core::ingest::validate_tac`].
pub fn parse_tac_csv<R: Read>(source: R) -> Result<Vec<TacReading>, CsvError> {
    let mut rdr = reader(source);
    let idx = column_indices(rdr.headers()?, &TAC_COLUMNS)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        out.push(TacReading {
            t: required(&record, idx[0], "t", line)?,
            tac: required(&record, idx[1], "tac", line)?,
        });
    }
    Ok(out)
}

/// Shortest representation that parses back to the same value.
fn cell(v: f64) -> String {
    format!("{v}")
}

pub fn write_sensor_csv<W: Write>(sink: W, samples: &[SensorSample]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SENSOR_COLUMNS)?;
    for s in samples {
        let mut row: Vec<String> = Vec::with_capacity(8);
        row.push(cell(s.t));
        row.extend(s.accel.iter().chain(&s.gyro).map(|&v| cell(v)));
        row.push(s.hr.map(cell).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_tac_csv<W: Write>(sink: W, readings: &[TacReading]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TAC_COLUMNS)?;
    for r in readings {
        w.write_record([cell(r.t), cell(r.tac)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
