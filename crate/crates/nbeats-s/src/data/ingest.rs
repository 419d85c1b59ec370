//! Reading and writing series collections.
//!
//! Two input shapes are supported:
//!
//! * **horizontal** — one series per row, id in the first column, values in
//!   the remaining columns, trailing empty cells trimmed (the layout M4-style
//!   exports use);
//! * **long** — the canonical interchange format, one observation per row
//!   with header `series_id,t_index,value` and a 1-based contiguous
//!   `t_index` per series.
//!
//! Exports always use the long format.

use crate::data::series::TimeSeries;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// On-disk layout of a series file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Horizontal,
    Long,
}

/// Read series from `path` in the given format.
pub fn ingest_path(path: &Path, format: DataFormat) -> Result<Vec<TimeSeries>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Ingest(format!("cannot open {}: {e}", path.display())))?;
    ingest(file, format)
}

pub fn ingest<R: Read>(reader: R, format: DataFormat) -> Result<Vec<TimeSeries>> {
    match format {
        DataFormat::Horizontal => ingest_horizontal(reader),
        DataFormat::Long => ingest_long(reader),
    }
}

fn check_new_id(seen: &[TimeSeries], id: &str) -> Result<()> {
    if seen.iter().any(|s| s.id() == id) {
        return Err(Error::Ingest(format!("duplicate series id {id:?}")));
    }
    Ok(())
}

fn ingest_horizontal<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out: Vec<TimeSeries> = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        if record.is_empty() {
            continue;
        }
        let id = record.get(0).unwrap_or_default().trim_matches('"').to_string();
        if id.is_empty() {
            return Err(Error::Ingest(format!("row {}: empty series id", row_idx + 1)));
        }
        // The first row is a header when none of its value cells is a
        // number ("id,V1,V2,…"). A row where numeric and non-numeric value
        // cells mix is malformed data, never a header.
        let cells: Vec<&str> = record
            .iter()
            .skip(1)
            .map(|c| c.trim_matches('"'))
            .collect();
        let any_numeric = cells
            .iter()
            .filter(|c| !c.is_empty())
            .any(|c| c.parse::<f64>().is_ok());
        if row_idx == 0 && !any_numeric && cells.iter().any(|c| !c.is_empty()) {
            continue;
        }
        let mut values = Vec::new();
        let mut trailing_gap = false;
        for (col, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                trailing_gap = true;
                continue;
            }
            if trailing_gap {
                return Err(Error::Ingest(format!(
                    "series {id:?}: value after an empty cell at column {}",
                    col + 2
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Ingest(format!(
                    "series {id:?} position {}: non-numeric value {cell:?}",
                    col + 1
                ))
            })?;
            values.push(v);
        }
        check_new_id(&out, &id)?;
        out.push(TimeSeries::new(id, values)?);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct LongRow {
    series_id: String,
    t_index: usize,
    value: f64,
}

fn ingest_long<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out: Vec<TimeSeries> = Vec::new();
    let mut current: Option<(String, Vec<f64>)> = None;

    let flush = |cur: &mut Option<(String, Vec<f64>)>, out: &mut Vec<TimeSeries>| -> Result<()> {
        if let Some((id, values)) = cur.take() {
            check_new_id(out, &id)?;
            out.push(TimeSeries::new(id, values)?);
        }
        Ok(())
    };

    for row in rdr.deserialize::<LongRow>() {
        let row = row?;
        let start_new = match &current {
            Some((id, _)) => *id != row.series_id,
            None => true,
        };
        if start_new {
            flush(&mut current, &mut out)?;
            // a reappearing id means the file interleaves series
            check_new_id(&out, &row.series_id)?;
            current = Some((row.series_id.clone(), Vec::new()));
        }
        let (id, values) = current.as_mut().expect("just set");
        if row.t_index != values.len() + 1 {
            return Err(Error::Ingest(format!(
                "series {id:?}: t_index {} where {} was expected (must be 1-based and contiguous)",
                row.t_index,
                values.len() + 1
            )));
        }
        values.push(row.value);
    }
    flush(&mut current, &mut out)?;
    Ok(out)
}

/// Write series in the canonical long format.
pub fn write_long<W: Write>(series: &[TimeSeries], mut out: W) -> Result<()> {
    writeln!(out, "series_id,t_index,value")?;
    for s in series {
        for (i, v) in s.values().iter().enumerate() {
            writeln!(out, "{},{},{}", s.id(), i + 1, v)?;
        }
    }
    Ok(())
}

pub fn write_long_path(series: &[TimeSeries], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_long(series, std::io::BufWriter::new(file))
}
