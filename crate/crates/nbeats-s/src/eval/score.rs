//! Accuracy and stability scoring of rolling-forecast panels.
//!
//! Per series, accuracy is the mean over all origins of the h-step sMAPE,
//! and stability the mean over all adjacent origin pairs of sMAPC on their
//! h−1 shared target periods. Dataset-level numbers are plain means of the
//! per-series means, so every series carries equal weight regardless of its
//! scale or length.

use crate::error::{Error, Result};
use crate::eval::rolling::ForecastPanel;
use crate::losses::{smapc, smape};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Which score column an analysis runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Smape,
    Smapc,
}

impl Metric {
    pub fn pick(self, row: &ScoreRow) -> f64 {
        match self {
            Metric::Smape => row.smape,
            Metric::Smapc => row.smapc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Smape => "smape",
            Metric::Smapc => "smapc",
        }
    }
}

/// One series' scores under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub method: String,
    pub series_id: String,
    pub smape: f64,
    pub smapc: f64,
}

/// Per-series scores, possibly spanning several methods.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

/// Dataset-level mean scores for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub smape: f64,
    pub smapc: f64,
    pub num_series: usize,
}

/// Score one panel: per-series origin-mean sMAPE and pair-mean sMAPC.
pub fn score(panel: &ForecastPanel) -> Result<ScoreTable> {
    let mut rows = Vec::with_capacity(panel.series.len());
    for sp in &panel.series {
        if sp.forecasts.len() < 2 {
            return Err(Error::Contract(format!(
                "series {} has {} origins; stability needs at least 2",
                sp.series_id,
                sp.forecasts.len()
            )));
        }
        let mut acc = 0.0;
        for (forecast, actual) in sp.forecasts.iter().zip(&sp.actuals) {
            acc += smape(forecast, actual)?;
        }
        let mean_smape = acc / sp.forecasts.len() as f64;

        let mut chg = 0.0;
        for pair in sp.forecasts.windows(2) {
            // the later origin is the new forecast, the earlier the old one
            chg += smapc(&pair[1], &pair[0])?;
        }
        let mean_smapc = chg / (sp.forecasts.len() - 1) as f64;

        rows.push(ScoreRow {
            method: panel.method.clone(),
            series_id: sp.series_id.clone(),
            smape: mean_smape,
            smapc: mean_smapc,
        });
    }
    Ok(ScoreTable { rows })
}

impl ScoreTable {
    /// Concatenate tables from several methods into one.
    pub fn merged(tables: impl IntoIterator<Item = ScoreTable>) -> ScoreTable {
        ScoreTable {
            rows: tables.into_iter().flat_map(|t| t.rows).collect(),
        }
    }

    /// Method names in first-appearance order.
    pub fn methods(&self) -> Vec<String> {
        let mut methods: Vec<String> = Vec::new();
        for row in &self.rows {
            if !methods.contains(&row.method) {
                methods.push(row.method.clone());
            }
        }
        methods
    }

    /// Dataset-level means (mean of the per-series means), one per method.
    pub fn summaries(&self) -> Vec<MethodSummary> {
        self.methods()
            .into_iter()
            .map(|method| {
                let rows: Vec<&ScoreRow> =
                    self.rows.iter().filter(|r| r.method == method).collect();
                let n = rows.len() as f64;
                MethodSummary {
                    smape: rows.iter().map(|r| r.smape).sum::<f64>() / n,
                    smapc: rows.iter().map(|r| r.smapc).sum::<f64>() / n,
                    num_series: rows.len(),
                    method,
                }
            })
            .collect()
    }

    /// Per-series CSV: `method,series_id,smape,smapc`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,series_id,smape,smapc")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.method, r.series_id, r.smape, r.smapc)?;
        }
        Ok(())
    }

    /// Dataset-level CSV: `method,smape,smapc,num_series`.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,smape,smapc,num_series")?;
        for s in self.summaries() {
            writeln!(out, "{},{},{},{}", s.method, s.smape, s.smapc, s.num_series)?;
        }
        Ok(())
    }

    /// Parse a table previously written by [`ScoreTable::write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<ScoreTable> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers()?.clone();
        let expected = ["method", "series_id", "smape", "smapc"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Ingest(format!(
                "score CSV header {:?} does not match {expected:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record?;
            let parse = |i: usize, what: &str| -> Result<f64> {
                record[i].parse::<f64>().map_err(|_| {
                    Error::Ingest(format!("bad {what} value {:?}", &record[i]))
                })
            };
            rows.push(ScoreRow {
                method: record[0].to_string(),
                series_id: record[1].to_string(),
                smape: parse(2, "smape")?,
                smapc: parse(3, "smapc")?,
            });
        }
        Ok(ScoreTable { rows })
    }
}
