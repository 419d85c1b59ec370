//! Rolling-origin forecast generation.
//!
//! The held-out window (18 points by default) is swept by consecutive
//! forecasting origins: origin 1 predicts positions 1..h of the window,
//! origin 2 positions 2..h+1, and so on — 13 origins for an 18-point window
//! at h = 6, exactly tiling it. Inputs always consist of actual
//! observations; as the origin advances, earlier held-out actuals roll into
//! the lookback window, just as they would in live deployment.

use crate::autodiff::Tensor;
use crate::data::{Dataset, SplitMode};
use crate::error::{Error, Result};

/// Which held-out window to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalWindow {
    Validation,
    Test,
}

/// All rolling forecasts for one series, one row per origin, each row
/// paired with the actual values it targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    pub series_id: String,
    /// `forecasts[o]` is the h-step forecast issued from origin o+1.
    pub forecasts: Vec<Vec<f64>>,
    /// `actuals[o]` is the slice of the held-out window that row targets.
    pub actuals: Vec<Vec<f64>>,
}

/// Rolling forecasts for a whole dataset under one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPanel {
    pub method: String,
    pub horizon: usize,
    pub series: Vec<SeriesPanel>,
    /// Series skipped because their history cannot fill the first origin's
    /// lookback window.
    pub excluded: Vec<String>,
}

/// Predicts a batch of lookback windows (rows×T) as a batch of forecasts
/// (rows×h). One call covers all origins of one series.
pub type Predictor<'a> = dyn FnMut(&Tensor) -> Result<Tensor> + 'a;

/// Sweep every series' held-out window with consecutive forecasting
/// origins. `lookback` is the model input length T; each origin's input is
/// the T most recent actual observations before its first target period.
pub fn roll_forecasts(
    dataset: &Dataset,
    lookback: usize,
    horizon: usize,
    window: EvalWindow,
    method: impl Into<String>,
    predictor: &mut Predictor,
) -> Result<ForecastPanel> {
    if horizon < 2 {
        return Err(Error::Contract("horizon must be at least 2".into()));
    }
    if window == EvalWindow::Validation && dataset.mode() == SplitMode::FinalFit {
        return Err(Error::Contract(
            "final-fit datasets have no validation window".into(),
        ));
    }
    let method = method.into();
    let mut series = Vec::with_capacity(dataset.len());
    let mut excluded = Vec::new();

    for entry in dataset.entries() {
        let range = match window {
            EvalWindow::Validation => entry.split.validation.clone(),
            EvalWindow::Test => entry.split.test.clone(),
        };
        let win_len = range.end - range.start;
        if win_len < horizon {
            return Err(Error::Contract(format!(
                "held-out window of {win_len} points cannot fit horizon {horizon}"
            )));
        }
        let num_origins = win_len - horizon + 1;
        if range.start < lookback {
            log::info!(
                "series {} excluded from evaluation: first origin needs {lookback} \
                 observations, only {} precede the window",
                entry.series.id(),
                range.start
            );
            excluded.push(entry.series.id().to_string());
            continue;
        }

        let values = entry.series.values();
        let mut inputs = Vec::with_capacity(num_origins * lookback);
        let mut actuals = Vec::with_capacity(num_origins);
        for o in 0..num_origins {
            let first_target = range.start + o;
            inputs.extend_from_slice(&values[first_target - lookback..first_target]);
            actuals.push(values[first_target..first_target + horizon].to_vec());
        }
        let batch = Tensor::new(vec![num_origins, lookback], inputs)?;
        let out = predictor(&batch)?;
        if out.shape() != [num_origins, horizon] {
            return Err(Error::Dimension(format!(
                "predictor returned shape {:?}, expected [{num_origins}, {horizon}]",
                out.shape()
            )));
        }
        let forecasts = out
            .values()
            .chunks(horizon)
            .map(|row| row.to_vec())
            .collect();
        series.push(SeriesPanel {
            series_id: entry.series.id().to_string(),
            forecasts,
            actuals,
        });
    }

    Ok(ForecastPanel {
        method,
        horizon,
        series,
        excluded,
    })
}

/// Forecast = the observation one seasonal period earlier. Requires the
/// lookback window to be at least one period long, so every forecast index
/// can be read from the input itself.
pub fn seasonal_naive(batch: &Tensor, horizon: usize, period: usize) -> Result<Tensor> {
    let (rows, t_len) = batch.dims2()?;
    if t_len < period {
        return Err(Error::Contract(format!(
            "seasonal naive needs a lookback of at least {period}, got {t_len}"
        )));
    }
    if horizon > period {
        return Err(Error::Contract(format!(
            "seasonal naive repeats one period; horizon {horizon} exceeds period {period}"
        )));
    }
    let mut out = Vec::with_capacity(rows * horizon);
    for r in 0..rows {
        let row = &batch.values()[r * t_len..(r + 1) * t_len];
        for i in 0..horizon {
            out.push(row[t_len - period + i]);
        }
    }
    Tensor::new(vec![rows, horizon], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SplitSpec, TimeSeries};

    /// 60-point ramp series 0,1,2,…,59 with a tuning split (test = last 18,
    /// validation = previous 18).
    fn ramp_dataset() -> Dataset {
        let values: Vec<f64> = (1..=60).map(|i| i as f64).collect();
        let series = vec![TimeSeries::new("R1", values).unwrap()];
        Dataset::new(series, SplitSpec::default(), SplitMode::Tuning)
    }

    fn constant_predictor(level: f64, horizon: usize) -> impl FnMut(&Tensor) -> Result<Tensor> {
        move |batch: &Tensor| {
            let (rows, _) = batch.dims2()?;
            Tensor::new(vec![rows, horizon], vec![level; rows * horizon])
        }
    }

    /// The ramp advances by one per step, so a perfect forecaster continues
    /// each input row: input ends at value v → targets v+1..v+h.
    fn ramp_oracle(horizon: usize) -> impl FnMut(&Tensor) -> Result<Tensor> {
        move |batch: &Tensor| {
            let (rows, t_len) = batch.dims2()?;
            let mut out = Vec::with_capacity(rows * horizon);
            for r in 0..rows {
                let last = batch.values()[r * t_len + t_len - 1];
                out.extend((1..=horizon).map(|i| last + i as f64));
            }
            Tensor::new(vec![rows, horizon], out)
        }
    }

    #[test]
    fn eighteen_point_window_yields_thirteen_origins() {
        let dataset = ramp_dataset();
        let mut stub = constant_predictor(1.0, 6);
        let panel =
            roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "stub", &mut stub).unwrap();
        assert_eq!(panel.series.len(), 1);
        let sp = &panel.series[0];
        assert_eq!(sp.forecasts.len(), 13);
        assert_eq!(sp.actuals.len(), 13);
        assert!(sp.forecasts.iter().all(|row| row.len() == 6));
    }

    #[test]
    fn origins_tile_the_test_window() {
        // test region of the 60-point ramp holds values 43..=60
        let dataset = ramp_dataset();
        let mut stub = constant_predictor(0.5, 6);
        let panel =
            roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "stub", &mut stub).unwrap();
        let sp = &panel.series[0];

        // origin 1 targets the first 6 test points, origin 13 the last 6
        assert_eq!(sp.actuals[0], vec![43.0, 44.0, 45.0, 46.0, 47.0, 48.0]);
        assert_eq!(sp.actuals[12], vec![55.0, 56.0, 57.0, 58.0, 59.0, 60.0]);

        // union of target positions covers the 18 test values exactly
        let mut covered: Vec<f64> = sp.actuals.iter().flatten().copied().collect();
        covered.sort_by(|a, b| a.partial_cmp(b).unwrap());
        covered.dedup();
        assert_eq!(covered, (43..=60).map(|v| v as f64).collect::<Vec<_>>());

        // adjacent origins share exactly h−1 = 5 target periods
        for o in 0..12 {
            let shared = sp.actuals[o]
                .iter()
                .filter(|v| sp.actuals[o + 1].contains(v))
                .count();
            assert_eq!(shared, 5);
        }
    }

    #[test]
    fn first_origin_input_ends_at_last_pre_window_observation() {
        let dataset = ramp_dataset();
        let mut seen_first_row_end = 0.0;
        let mut probe = |batch: &Tensor| {
            let (rows, t_len) = batch.dims2()?;
            seen_first_row_end = batch.values()[t_len - 1];
            Tensor::new(vec![rows, 6], vec![1.0; rows * 6])
        };
        roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "probe", &mut probe).unwrap();
        // the last observation before the test region of 1..=60 is 42
        assert_eq!(seen_first_row_end, 42.0);
    }

    #[test]
    fn validation_window_precedes_the_test_window() {
        let dataset = ramp_dataset();
        let mut stub = constant_predictor(1.0, 6);
        let panel =
            roll_forecasts(&dataset, 6, 6, EvalWindow::Validation, "stub", &mut stub).unwrap();
        let sp = &panel.series[0];
        assert_eq!(sp.actuals[0][0], 25.0); // validation holds values 25..=42
        assert_eq!(sp.actuals[12][5], 42.0);
    }

    #[test]
    fn constant_stub_produces_identical_rows() {
        let dataset = ramp_dataset();
        let mut stub = constant_predictor(7.5, 6);
        let panel =
            roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "stub", &mut stub).unwrap();
        let sp = &panel.series[0];
        for row in &sp.forecasts {
            assert_eq!(row, &vec![7.5; 6]);
        }
    }

    #[test]
    fn perfect_forecaster_rows_equal_the_actual_rows() {
        let dataset = ramp_dataset();
        let mut oracle = ramp_oracle(6);
        let panel =
            roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "oracle", &mut oracle).unwrap();
        let sp = &panel.series[0];
        assert_eq!(sp.forecasts, sp.actuals);
    }

    #[test]
    fn short_history_series_is_excluded_with_log_entry() {
        // 40 points: validation starts at index 4, so a lookback of 12
        // cannot fill the first validation origin
        let short: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let long: Vec<f64> = (1..=80).map(|i| i as f64).collect();
        let dataset = Dataset::new(
            vec![
                TimeSeries::new("SHORT", short).unwrap(),
                TimeSeries::new("LONG", long).unwrap(),
            ],
            SplitSpec::default(),
            SplitMode::Tuning,
        );
        let mut stub = constant_predictor(1.0, 6);
        let panel =
            roll_forecasts(&dataset, 12, 6, EvalWindow::Validation, "stub", &mut stub).unwrap();
        assert_eq!(panel.excluded, vec!["SHORT".to_string()]);
        assert_eq!(panel.series.len(), 1);
        assert_eq!(panel.series[0].series_id, "LONG");
    }

    #[test]
    fn final_fit_mode_has_no_validation_window() {
        let values: Vec<f64> = (1..=60).map(|i| i as f64).collect();
        let dataset = Dataset::new(
            vec![TimeSeries::new("R1", values).unwrap()],
            SplitSpec::default(),
            SplitMode::FinalFit,
        );
        let mut stub = constant_predictor(1.0, 6);
        assert!(matches!(
            roll_forecasts(&dataset, 12, 6, EvalWindow::Validation, "stub", &mut stub),
            Err(Error::Contract(_))
        ));
        // the test window is still available
        let panel =
            roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "stub", &mut stub).unwrap();
        assert_eq!(panel.series.len(), 1);
    }

    #[test]
    fn seasonal_naive_reads_one_period_back() {
        // two rows of a 12-long lookback; forecasts repeat the window head
        let mut values = Vec::new();
        values.extend((0..12).map(|i| 100.0 + i as f64)); // row one
        values.extend((0..12).map(|i| 200.0 + i as f64)); // row two
        let batch = Tensor::new(vec![2, 12], values).unwrap();
        let out = seasonal_naive(&batch, 6, 12).unwrap();
        assert_eq!(out.shape(), [2, 6]);
        assert_eq!(&out.values()[..6], &[100.0, 101.0, 102.0, 103.0, 104.0, 105.0]);
        assert_eq!(&out.values()[6..], &[200.0, 201.0, 202.0, 203.0, 204.0, 205.0]);
    }

    #[test]
    fn seasonal_naive_rejects_short_lookbacks_and_long_horizons() {
        let batch = Tensor::new(vec![1, 8], vec![1.0; 8]).unwrap();
        assert!(seasonal_naive(&batch, 6, 12).is_err());
        let batch = Tensor::new(vec![1, 12], vec![1.0; 12]).unwrap();
        assert!(seasonal_naive(&batch, 13, 12).is_err());
    }

    #[test]
    fn predictor_shape_mismatch_is_rejected() {
        let dataset = ramp_dataset();
        let mut bad = |batch: &Tensor| {
            let (rows, _) = batch.dims2()?;
            Tensor::new(vec![rows, 5], vec![1.0; rows * 5]) // h=5, not 6
        };
        assert!(matches!(
            roll_forecasts(&dataset, 12, 6, EvalWindow::Test, "bad", &mut bad),
            Err(Error::Dimension(_))
        ));
    }
}
