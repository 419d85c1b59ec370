//! Training losses and evaluation metrics.
//!
//! Training uses scaled squared errors: RMSSE for accuracy against actuals,
//! RMSSC for the disagreement between forecasts made one origin apart. Both
//! divide by the mean squared first difference of the sample's own lookback
//! window, which makes the objective indifferent to the series' level.
//!
//! Evaluation uses the symmetric percentage metrics sMAPE (against actuals)
//! and sMAPC (between forecasts from adjacent origins). Those two are never
//! differentiated — their denominators make gradients ill-behaved — so they
//! exist only as plain functions here.
//!
//! Origin alignment for the change metrics: the "old" forecast made at t−1
//! covers periods t..t+h−1 and the "new" one made at t covers t+1..t+h, so
//! old element i+1 and new element i refer to the same period, for
//! i = 0..h−2.

use crate::autodiff::{Tape, VarId};
use crate::error::{Error, Result};

/// Mean squared first difference of an in-sample window — the shared
/// denominator of RMSSE and RMSSC.
pub fn squared_diff_scale(insample: &[f64]) -> Result<f64> {
    if insample.len() < 2 {
        return Err(Error::Contract(
            "scale needs at least 2 in-sample points".into(),
        ));
    }
    let sum: f64 = insample.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(sum / (insample.len() - 1) as f64)
}

fn check_same_len(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension(format!(
            "{what}: lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Root mean squared scaled error of a forecast against actuals.
pub fn rmsse(forecast: &[f64], actual: &[f64], insample: &[f64]) -> Result<f64> {
    check_same_len(forecast, actual, "rmsse")?;
    let scale = squared_diff_scale(insample)?;
    if scale <= 0.0 {
        return Err(Error::DegenerateScale(
            "constant in-sample window has no scale".into(),
        ));
    }
    let mse = forecast
        .iter()
        .zip(actual)
        .map(|(f, a)| (a - f).powi(2))
        .sum::<f64>()
        / forecast.len() as f64;
    Ok((mse / scale).sqrt())
}

/// Root mean squared scaled change between forecasts from adjacent origins.
/// `forecast_old` was made at t−1, `forecast_new` at t; both have length h
/// and overlap on h−1 periods.
pub fn rmssc(forecast_new: &[f64], forecast_old: &[f64], insample: &[f64]) -> Result<f64> {
    check_same_len(forecast_new, forecast_old, "rmssc")?;
    let h = forecast_new.len();
    if h < 2 {
        return Err(Error::Contract("rmssc needs horizon of at least 2".into()));
    }
    let scale = squared_diff_scale(insample)?;
    if scale <= 0.0 {
        return Err(Error::DegenerateScale(
            "constant in-sample window has no scale".into(),
        ));
    }
    let msc = (0..h - 1)
        .map(|i| (forecast_old[i + 1] - forecast_new[i]).powi(2))
        .sum::<f64>()
        / (h - 1) as f64;
    Ok((msc / scale).sqrt())
}

/// Symmetric mean absolute percentage error, in percent (0..=200).
pub fn smape(forecast: &[f64], actual: &[f64]) -> Result<f64> {
    check_same_len(forecast, actual, "smape")?;
    let mut sum = 0.0;
    for (f, a) in forecast.iter().zip(actual) {
        let denom = a.abs() + f.abs();
        if denom <= 0.0 {
            return Err(Error::Contract(
                "smape undefined when actual and forecast are both zero".into(),
            ));
        }
        sum += (a - f).abs() / denom;
    }
    Ok(200.0 * sum / forecast.len() as f64)
}

/// Symmetric mean absolute percentage change between forecasts from adjacent
/// origins, in percent (0..=200). Alignment as in [`rmssc`].
pub fn smapc(forecast_new: &[f64], forecast_old: &[f64]) -> Result<f64> {
    check_same_len(forecast_new, forecast_old, "smapc")?;
    let h = forecast_new.len();
    if h < 2 {
        return Err(Error::Contract("smapc needs horizon of at least 2".into()));
    }
    let mut sum = 0.0;
    for i in 0..h - 1 {
        let old = forecast_old[i + 1];
        let new = forecast_new[i];
        let denom = old.abs() + new.abs();
        if denom <= 0.0 {
            return Err(Error::Contract(
                "smapc undefined when both forecasts are zero".into(),
            ));
        }
        sum += (old - new).abs() / denom;
    }
    Ok(200.0 * sum / (h - 1) as f64)
}

/// The two aggregate loss terms of one training batch, as plain numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPair {
    pub error: f64,
    pub instability: f64,
}

impl LossPair {
    /// The composite objective (1−λ)·error + λ·instability.
    pub fn composite(&self, lambda: f64) -> f64 {
        (1.0 - lambda) * self.error + lambda * self.instability
    }
}

/// Tape nodes for the two aggregate loss terms, built on top of two forward
/// passes of the same batch (origins t and t−1).
pub struct CompositeNodes {
    /// Mean over the batch of (RMSSE_t + RMSSE_{t−1})/2.
    pub error: VarId,
    /// Mean over the batch of RMSSC.
    pub instability: VarId,
    /// Per-sample RMSSE at origin t (batch×1), for diagnostics.
    pub rmsse_t: VarId,
    /// Per-sample RMSSE at origin t−1 (batch×1).
    pub rmsse_tm1: VarId,
    /// Per-sample RMSSC (batch×1).
    pub rmssc: VarId,
}

/// Per-sample RMSSE column vector on the tape: forecasts and actuals are
/// batch×h, `inv_scale` holds each sample's 1/scale.
fn rmsse_nodes(
    tape: &mut Tape,
    forecast: VarId,
    actual: VarId,
    inv_scale: &[f64],
) -> Result<VarId> {
    let diff = tape.sub(forecast, actual)?;
    let sq = tape.square(diff);
    let mse = tape.row_mean(sq);
    let scaled = tape.mul_const(mse, inv_scale)?;
    tape.sqrt(scaled)
}

/// Build the L_error and L_instability nodes for one dual-origin batch.
///
/// * `forecast_t`, `actual_t` — batch×h at origin t
/// * `forecast_tm1`, `actual_tm1` — batch×h at origin t−1
/// * `inv_scale` — per-sample reciprocal of the squared-difference scale of
///   the lookback window at origin t (one scale per sample, shared by all
///   four loss terms of that sample)
pub fn composite_nodes(
    tape: &mut Tape,
    forecast_t: VarId,
    actual_t: VarId,
    forecast_tm1: VarId,
    actual_tm1: VarId,
    inv_scale: &[f64],
    horizon: usize,
) -> Result<CompositeNodes> {
    if horizon < 2 {
        return Err(Error::Contract("horizon must be at least 2".into()));
    }
    let r_t = rmsse_nodes(tape, forecast_t, actual_t, inv_scale)?;
    let r_tm1 = rmsse_nodes(tape, forecast_tm1, actual_tm1, inv_scale)?;
    let sum = tape.add(r_t, r_tm1)?;
    let mean = tape.mean_all(sum);
    let error = tape.affine_scalar(mean, 0.5, 0.0);

    // overlap: new[0..h−1] vs old[1..h]
    let new_ov = tape.slice_cols(forecast_t, 0, horizon - 1)?;
    let old_ov = tape.slice_cols(forecast_tm1, 1, horizon - 1)?;
    let diff = tape.sub(old_ov, new_ov)?;
    let sq = tape.square(diff);
    let msc = tape.row_mean(sq);
    let scaled = tape.mul_const(msc, inv_scale)?;
    let rmssc_col = tape.sqrt(scaled)?;
    let instability = tape.mean_all(rmssc_col);

    Ok(CompositeNodes {
        error,
        instability,
        rmsse_t: r_t,
        rmsse_tm1: r_tm1,
        rmssc: rmssc_col,
    })
}

/// Plain-number counterpart of [`composite_nodes`] for oracles and logging:
/// the same batch aggregates computed without a tape.
pub fn batch_loss_pair(
    forecasts_t: &[Vec<f64>],
    actuals_t: &[Vec<f64>],
    forecasts_tm1: &[Vec<f64>],
    actuals_tm1: &[Vec<f64>],
    insamples: &[Vec<f64>],
) -> Result<LossPair> {
    let b = forecasts_t.len();
    if b == 0
        || actuals_t.len() != b
        || forecasts_tm1.len() != b
        || actuals_tm1.len() != b
        || insamples.len() != b
    {
        return Err(Error::Dimension("batch lists must share one length".into()));
    }
    let mut err_sum = 0.0;
    let mut inst_sum = 0.0;
    for j in 0..b {
        let r_t = rmsse(&forecasts_t[j], &actuals_t[j], &insamples[j])?;
        let r_tm1 = rmsse(&forecasts_tm1[j], &actuals_tm1[j], &insamples[j])?;
        err_sum += (r_t + r_tm1) / 2.0;
        inst_sum += rmssc(&forecasts_t[j], &forecasts_tm1[j], &insamples[j])?;
    }
    Ok(LossPair {
        error: err_sum / b as f64,
        instability: inst_sum / b as f64,
    })
}
