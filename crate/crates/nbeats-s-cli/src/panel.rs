//! The portable forecast-panel CSV: `method,series_id,origin,step,forecast`.
//!
//! This is the exchange format for rolled forecasts — both what `forecast`
//! exports and what `score --import` accepts from other tools. `origin` and
//! `step` are 1-based; a panel must be rectangular (every origin carries
//! every step) so the stability metric always has its full overlap.

use crate::{CliError, CliResult};
use nbeats_s::data::{Dataset, DatasetEntry};
use nbeats_s::eval::{EvalWindow, ForecastPanel, SeriesPanel};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::Range;

pub const PANEL_HEADER: &str = "method,series_id,origin,step,forecast";

/// Write one method's panel. Rows are ordered series → origin → step, so the
/// file is deterministic for a deterministic panel.
pub fn write_panel_csv<W: Write>(panel: &ForecastPanel, mut out: W) -> CliResult<()> {
    let mut do_write = || -> std::io::Result<()> {
        writeln!(out, "{PANEL_HEADER}")?;
        for series in &panel.series {
            for (o, row) in series.forecasts.iter().enumerate() {
                for (s, value) in row.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        panel.method,
                        series.series_id,
                        o + 1,
                        s + 1,
                        value
                    )?;
                }
            }
        }
        Ok(())
    };
    do_write().map_err(CliError::runtime)
}

/// One method's forecasts as read back from a panel CSV, before actual
/// values are attached: `series` holds (id, origins × horizon) in
/// first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedMethod {
    pub method: String,
    pub horizon: usize,
    pub series: Vec<(String, Vec<Vec<f64>>)>,
}

/// Parse a panel CSV, which may interleave several methods. Each
/// (method, series) must form a full `origins × horizon` grid.
pub fn read_panels_csv<R: Read>(reader: R) -> CliResult<Vec<ImportedMethod>> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(CliError::config)?
        .iter()
        .collect::<Vec<_>>();
    let expected = ["method", "series_id", "origin", "step", "forecast"];
    if headers != expected {
        return Err(CliError::Config(format!(
            "panel CSV header {headers:?} does not match {expected:?}"
        )));
    }

    // (method, series) → (origin, step) → forecast, in appearance order.
    let mut order: Vec<(String, Vec<String>)> = Vec::new();
    let mut cells: BTreeMap<(String, String), BTreeMap<(usize, usize), f64>> = BTreeMap::new();
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(CliError::config)?;
        let line = i + 2;
        if record.len() != 5 {
            return Err(CliError::Config(format!(
                "panel CSV line {line}: expected 5 fields, got {}",
                record.len()
            )));
        }
        let method = record[0].to_string();
        let series_id = record[1].to_string();
        let origin: usize = record[2]
            .parse()
            .map_err(|_| bad_field(line, "origin", &record[2]))?;
        let step: usize = record[3]
            .parse()
            .map_err(|_| bad_field(line, "step", &record[3]))?;
        let forecast: f64 = record[4]
            .parse()
            .map_err(|_| bad_field(line, "forecast", &record[4]))?;
        if origin == 0 || step == 0 {
            return Err(CliError::Config(format!(
                "panel CSV line {line}: origin and step are 1-based"
            )));
        }
        if !forecast.is_finite() {
            return Err(CliError::Config(format!(
                "panel CSV line {line}: non-finite forecast {forecast}"
            )));
        }

        match order.iter_mut().find(|(m, _)| *m == method) {
            Some((_, ids)) if ids.contains(&series_id) => {}
            Some((_, ids)) => ids.push(series_id.clone()),
            None => order.push((method.clone(), vec![series_id.clone()])),
        }
        let slot = cells
            .entry((method.clone(), series_id.clone()))
            .or_default()
            .insert((origin, step), forecast);
        if slot.is_some() {
            return Err(CliError::Config(format!(
                "panel CSV line {line}: duplicate cell \
                 (method {method:?}, series {series_id:?}, origin {origin}, step {step})"
            )));
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for (method, ids) in order {
        let mut horizon = 0;
        let mut series = Vec::with_capacity(ids.len());
        for id in ids {
            let grid = &cells[&(method.clone(), id.clone())];
            let rows = assemble_grid(&method, &id, grid)?;
            let h = rows[0].len();
            if horizon == 0 {
                horizon = h;
            } else if h != horizon {
                return Err(CliError::Config(format!(
                    "panel method {method:?}: series {id:?} has horizon {h}, \
                     others have {horizon}"
                )));
            }
            series.push((id, rows));
        }
        out.push(ImportedMethod {
            method,
            horizon,
            series,
        });
    }
    Ok(out)
}

fn bad_field(line: usize, what: &str, raw: &str) -> CliError {
    CliError::Config(format!("panel CSV line {line}: bad {what} value {raw:?}"))
}

/// Turn one series' sparse cells into a dense origins × horizon matrix,
/// rejecting holes.
fn assemble_grid(
    method: &str,
    series_id: &str,
    grid: &BTreeMap<(usize, usize), f64>,
) -> CliResult<Vec<Vec<f64>>> {
    let num_origins = grid.keys().map(|&(o, _)| o).max().unwrap_or(0);
    let horizon = grid.keys().map(|&(_, s)| s).max().unwrap_or(0);
    if grid.len() != num_origins * horizon {
        return Err(CliError::Config(format!(
            "panel method {method:?}, series {series_id:?}: expected a full \
             {num_origins}×{horizon} grid, found {} cells",
            grid.len()
        )));
    }
    let mut rows = Vec::with_capacity(num_origins);
    for o in 1..=num_origins {
        let mut row = Vec::with_capacity(horizon);
        for s in 1..=horizon {
            match grid.get(&(o, s)) {
                Some(&v) => row.push(v),
                None => {
                    return Err(CliError::Config(format!(
                        "panel method {method:?}, series {series_id:?}: \
                         missing origin {o}, step {s}"
                    )))
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The window an evaluation sweep targets within one series.
pub fn window_range(entry: &DatasetEntry, window: EvalWindow) -> Range<usize> {
    match window {
        EvalWindow::Validation => entry.split.validation.clone(),
        EvalWindow::Test => entry.split.test.clone(),
    }
}

/// Pair an imported method's forecasts with the actual observations of the
/// chosen window so it can be scored exactly like a native run. Every
/// imported series must exist in the dataset and cover the window's full
/// origin sweep.
pub fn attach_actuals(
    imported: &ImportedMethod,
    dataset: &Dataset,
    window: EvalWindow,
) -> CliResult<ForecastPanel> {
    let h = imported.horizon;
    let by_id: BTreeMap<&str, &DatasetEntry> = dataset
        .entries()
        .iter()
        .map(|e| (e.series.id(), e))
        .collect();
    let mut series = Vec::with_capacity(imported.series.len());
    for (id, forecasts) in &imported.series {
        let entry = by_id.get(id.as_str()).ok_or_else(|| {
            CliError::Config(format!(
                "imported method {:?}: series {id:?} is not in the dataset",
                imported.method
            ))
        })?;
        let range = window_range(entry, window);
        if range.is_empty() {
            return Err(CliError::Config(format!(
                "imported method {:?}: the requested window is empty for this run",
                imported.method
            )));
        }
        let expected_origins = range.len() + 1 - h;
        if h > range.len() || forecasts.len() != expected_origins {
            return Err(CliError::Config(format!(
                "imported method {:?}, series {id:?}: {} origins of horizon {h} \
                 cannot tile a {}-point window (expected {expected_origins})",
                imported.method,
                forecasts.len(),
                range.len()
            )));
        }
        let values = entry.series.values();
        let actuals: Vec<Vec<f64>> = (0..expected_origins)
            .map(|o| values[range.start + o..range.start + o + h].to_vec())
            .collect();
        series.push(SeriesPanel {
            series_id: id.clone(),
            forecasts: forecasts.clone(),
            actuals,
        });
    }
    Ok(ForecastPanel {
        method: imported.method.clone(),
        horizon: h,
        series,
        excluded: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nbeats_s::data::{SplitMode, SplitSpec, TimeSeries};

    fn tiny_panel() -> ForecastPanel {
        ForecastPanel {
            method: "demo".into(),
            horizon: 2,
            series: vec![SeriesPanel {
                series_id: "A".into(),
                forecasts: vec![vec![1.5, 2.5], vec![3.5, 4.5]],
                actuals: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            }],
            excluded: Vec::new(),
        }
    }

    #[test]
    fn write_then_read_round_trips_forecasts() {
        let mut buf = Vec::new();
        write_panel_csv(&tiny_panel(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(PANEL_HEADER));
        assert_eq!(text.lines().count(), 5);

        let methods = read_panels_csv(buf.as_slice()).unwrap();
        assert_eq!(methods.len(), 1);
        assert_eq!(methods[0].method, "demo");
        assert_eq!(methods[0].horizon, 2);
        assert_eq!(
            methods[0].series,
            vec![("A".to_string(), vec![vec![1.5, 2.5], vec![3.5, 4.5]])]
        );
    }

    #[test]
    fn holes_duplicates_and_bad_values_are_rejected() {
        let hole = format!("{PANEL_HEADER}\nm,A,1,1,1.0\nm,A,1,2,2.0\nm,A,2,1,3.0\n");
        assert!(read_panels_csv(hole.as_bytes()).is_err());

        let dup = format!("{PANEL_HEADER}\nm,A,1,1,1.0\nm,A,1,1,2.0\n");
        let err = read_panels_csv(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let zero_based = format!("{PANEL_HEADER}\nm,A,0,1,1.0\n");
        assert!(read_panels_csv(zero_based.as_bytes()).is_err());

        let nan = format!("{PANEL_HEADER}\nm,A,1,1,NaN\n");
        assert!(read_panels_csv(nan.as_bytes()).is_err());

        let bad_header = "method,series,origin,step,forecast\nm,A,1,1,1.0\n";
        assert!(read_panels_csv(bad_header.as_bytes()).is_err());
    }

    #[test]
    fn attach_actuals_pairs_the_window_slices() {
        // one series of length 60: validation 24..42, test 42..60
        let values: Vec<f64> = (1..=60).map(|v| v as f64).collect();
        let dataset = Dataset::new(
            vec![TimeSeries::new("A", values).unwrap()],
            SplitSpec::default(),
            SplitMode::Tuning,
        );
        let imported = ImportedMethod {
            method: "ext".into(),
            horizon: 6,
            series: vec![("A".into(), vec![vec![0.0; 6]; 13])],
        };
        let panel = attach_actuals(&imported, &dataset, EvalWindow::Test).unwrap();
        assert_eq!(panel.series[0].actuals.len(), 13);
        // origin 1 targets positions 42..48 (1-based values 43..=48)
        assert_eq!(panel.series[0].actuals[0], vec![43.0, 44.0, 45.0, 46.0, 47.0, 48.0]);
        assert_eq!(panel.series[0].actuals[12][5], 60.0);

        let validation = attach_actuals(&imported, &dataset, EvalWindow::Validation).unwrap();
        assert_eq!(validation.series[0].actuals[0][0], 25.0);
    }

    #[test]
    fn attach_actuals_rejects_unknown_series_and_wrong_origin_counts() {
        let values: Vec<f64> = (1..=60).map(|v| v as f64).collect();
        let dataset = Dataset::new(
            vec![TimeSeries::new("A", values).unwrap()],
            SplitSpec::default(),
            SplitMode::Tuning,
        );
        let unknown = ImportedMethod {
            method: "ext".into(),
            horizon: 6,
            series: vec![("B".into(), vec![vec![0.0; 6]; 13])],
        };
        assert!(attach_actuals(&unknown, &dataset, EvalWindow::Test).is_err());

        let short = ImportedMethod {
            method: "ext".into(),
            horizon: 6,
            series: vec![("A".into(), vec![vec![0.0; 6]; 12])],
        };
        let err = attach_actuals(&short, &dataset, EvalWindow::Test).unwrap_err();
        assert!(err.to_string().contains("expected 13"), "{err}");
    }
}
