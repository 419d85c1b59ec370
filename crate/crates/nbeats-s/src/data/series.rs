//! Core series and dataset types: positive monthly series, the fixed
//! test/validation split, and the dataset container that applies the split
//! while logging exclusions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// One univariate monthly series. Values are strictly positive and finite —
/// the constructor enforces it so the rest of the pipeline never re-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::Ingest(format!("series {id:?} has no observations")));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::Ingest(format!(
                    "series {id:?} position {} has non-positive or non-numeric value {v}",
                    i + 1
                )));
            }
        }
        Ok(TimeSeries { id, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How the tail of each series is reserved: the last `test_length`
/// observations are the test window and the `validation_length` before them
/// the validation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub test_length: usize,
    pub validation_length: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_length: 18,
            validation_length: 18,
        }
    }
}

/// Whether the validation window is held out (hyperparameter tuning) or
/// merged back into the training segment (the final fit before test-set
/// forecasting).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Tuning,
    FinalFit,
}

/// Index boundaries of one series' segments. `train` and `validation` are
/// contiguous and disjoint; in final-fit mode the validation range is empty
/// because those observations belong to the training segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesSplit {
    /// Training observations occupy `0..train_end`.
    pub train_end: usize,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

/// Apply the split rule to a series of length `n`. Returns an error when the
/// reserved windows leave no training data.
pub fn split(n: usize, spec: &SplitSpec, mode: SplitMode) -> Result<SeriesSplit> {
    let reserved = match mode {
        SplitMode::Tuning => spec.test_length + spec.validation_length,
        SplitMode::FinalFit => spec.test_length,
    };
    if n <= reserved {
        return Err(Error::Contract(format!(
            "series of length {n} cannot reserve {reserved} tail observations"
        )));
    }
    let test = n - spec.test_length..n;
    let (train_end, validation) = match mode {
        SplitMode::Tuning => {
            let v = n - spec.test_length - spec.validation_length..n - spec.test_length;
            (v.start, v)
        }
        SplitMode::FinalFit => (test.start, test.start..test.start),
    };
    Ok(SeriesSplit {
        train_end,
        validation,
        test,
    })
}

/// A series that was dropped during dataset assembly, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub series_id: String,
    pub reason: String,
}

/// One usable series with its split boundaries.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub series: TimeSeries,
    pub split: SeriesSplit,
}

/// Immutable collection of split series. Series too short for the requested
/// split are dropped and recorded, not errors — real datasets mix lengths.
#[derive(Debug, Clone)]
pub struct Dataset {
    mode: SplitMode,
    spec: SplitSpec,
    entries: Vec<DatasetEntry>,
    exclusions: Vec<Exclusion>,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>, spec: SplitSpec, mode: SplitMode) -> Self {
        let mut entries = Vec::with_capacity(series.len());
        let mut exclusions = Vec::new();
        for s in series {
            match split(s.len(), &spec, mode) {
                Ok(sp) => entries.push(DatasetEntry {
                    series: s,
                    split: sp,
                }),
                Err(e) => {
                    log::info!("excluding series {}: {e}", s.id());
                    exclusions.push(Exclusion {
                        series_id: s.id().to_string(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        Dataset {
            mode,
            spec,
            entries,
            exclusions,
        }
    }

    pub fn mode(&self) -> SplitMode {
        self.mode
    }

    pub fn spec(&self) -> &SplitSpec {
        &self.spec
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn exclusions(&self) -> &[Exclusion] {
        &self.exclusions
    }

    /// Plain-text exclusion log, one line per dropped series.
    pub fn exclusion_log(&self) -> String {
        let mut out = String::new();
        for e in &self.exclusions {
            out.push_str(&format!("{}: {}\n", e.series_id, e.reason));
        }
        out
    }
}
