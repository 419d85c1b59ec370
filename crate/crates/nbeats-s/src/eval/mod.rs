//! Held-out evaluation: rolling-origin forecast panels, sMAPE/sMAPC
//! aggregation, and the multiple-comparisons-with-the-best rank test.

pub mod mcb;
pub mod rolling;
pub mod score;

pub use mcb::{intervals_disjoint, mcb, McbMethod, McbResult, ScoreMatrix, SignificanceLevel};
pub use rolling::{roll_forecasts, seasonal_naive, EvalWindow, ForecastPanel, Predictor, SeriesPanel};
pub use score::{score, MethodSummary, Metric, ScoreRow, ScoreTable};
