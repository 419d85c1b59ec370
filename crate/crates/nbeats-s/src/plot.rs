//! Self-contained SVG chart emission — line/scatter charts for training
//! diagnostics and interval charts for the rank test. Output is a plain
//! string built deterministically from the input, so regenerating a report
//! from the same artifacts is byte-identical.

use crate::error::{Error, Result};
use crate::eval::mcb::McbResult;
use std::fmt::Write;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 58.0;

const PALETTE: [&str; 8] = [
    "#1f6f8b", "#d1495b", "#66a182", "#edae49", "#575a89", "#8d5a97", "#2e4057", "#c97c5d",
];

/// How one data series is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Dots,
}

/// One named data series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

impl PlotSeries {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        PlotSeries {
            label: label.into(),
            points,
            style: SeriesStyle::Line,
        }
    }

    pub fn dots(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        PlotSeries {
            label: label.into(),
            points,
            style: SeriesStyle::Dots,
        }
    }
}

/// A complete chart description.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round a raw interval up to a "nice" tick step (1, 2 or 5 × 10^k).
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Tick positions covering [min, max] with a nice step.
fn ticks(min: f64, max: f64, target: usize) -> (Vec<f64>, f64) {
    let step = nice_step((max - min) / target as f64);
    let first = (min / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= max + step * 1e-9 {
        out.push(t);
        t += step;
    }
    (out, step)
}

/// Format a tick label with just enough decimals for its step size.
fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.decimals$}");
    // avoid the "-0" label
    if s.starts_with('-') && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if min.is_finite() && max.is_finite() {
        Some((min, max))
    } else {
        None
    }
}

/// Pad a data range by 5% on each side; degenerate ranges get a unit pad.
fn padded(min: f64, max: f64) -> (f64, f64) {
    if min == max {
        (min - 0.5, max + 0.5)
    } else {
        let pad = (max - min) * 0.05;
        (min - pad, max + pad)
    }
}

/// Render a line/scatter chart to an SVG document string.
pub fn chart_svg(spec: &ChartSpec) -> Result<String> {
    if spec.series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Contract("chart has no data points".into()));
    }
    if spec
        .series
        .iter()
        .flat_map(|s| &s.points)
        .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::Contract("chart data must be finite".into()));
    }
    let (x0, x1) =
        bounds(spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.0))).unwrap();
    let (y0, y1) =
        bounds(spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.1))).unwrap();
    let (xmin, xmax) = padded(x0, x1);
    let (ymin, ymax) = padded(y0, y1);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h;

    let mut svg = String::new();
    write!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">"##
    )
    .unwrap();
    write!(svg, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"##).unwrap();
    write!(
        svg,
        r##"<text x="{:.2}" y="24" font-size="16" text-anchor="middle" fill="#222">{}</text>"##,
        WIDTH / 2.0,
        escape_xml(&spec.title)
    )
    .unwrap();

    // frame and grid
    write!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999" stroke-width="1"/>"##
    )
    .unwrap();
    let (xticks, xstep) = ticks(xmin, xmax, 7);
    for t in &xticks {
        let x = sx(*t);
        write!(
            svg,
            r##"<line x1="{x:.2}" y1="{MARGIN_TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e4e4e4" stroke-width="1"/>"##,
            MARGIN_TOP + plot_h
        )
        .unwrap();
        write!(
            svg,
            r##"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle" fill="#444">{}</text>"##,
            MARGIN_TOP + plot_h + 16.0,
            fmt_tick(*t, xstep)
        )
        .unwrap();
    }
    let (yticks, ystep) = ticks(ymin, ymax, 6);
    for t in &yticks {
        let y = sy(*t);
        write!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e4e4e4" stroke-width="1"/>"##,
            MARGIN_LEFT + plot_w
        )
        .unwrap();
        write!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" fill="#444">{}</text>"##,
            MARGIN_LEFT - 7.0,
            y + 4.0,
            fmt_tick(*t, ystep)
        )
        .unwrap();
    }

    // axis labels
    write!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" fill="#222">{}</text>"##,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape_xml(&spec.x_label)
    )
    .unwrap();
    write!(
        svg,
        r##"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" fill="#222" transform="rotate(-90 18 {:.2})">{}</text>"##,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape_xml(&spec.y_label)
    )
    .unwrap();

    // data
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match series.style {
            SeriesStyle::Line => {
                if series.points.is_empty() {
                    continue;
                }
                let mut d = String::new();
                for (j, (x, y)) in series.points.iter().enumerate() {
                    let cmd = if j == 0 { 'M' } else { 'L' };
                    write!(d, "{cmd}{:.2} {:.2}", sx(*x), sy(*y)).unwrap();
                }
                write!(
                    svg,
                    r##"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>"##
                )
                .unwrap();
            }
            SeriesStyle::Dots => {
                for (x, y) in &series.points {
                    write!(
                        svg,
                        r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{color}" fill-opacity="0.65"/>"##,
                        sx(*x),
                        sy(*y)
                    )
                    .unwrap();
                }
            }
        }
    }

    // legend, top-right inside the frame
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 + i as f64 * 17.0;
        let x = MARGIN_LEFT + plot_w - 160.0;
        write!(
            svg,
            r##"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{color}"/>"##,
            y - 10.0
        )
        .unwrap();
        write!(
            svg,
            r##"<text x="{:.2}" y="{y:.2}" font-size="12" fill="#222">{}</text>"##,
            x + 17.0,
            escape_xml(&series.label)
        )
        .unwrap();
    }

    svg.push_str("</svg>");
    Ok(svg)
}

/// Render a rank-test result: one row per method with its average-rank dot
/// and interval, the best method's interval shaded as a vertical band.
pub fn mcb_svg(result: &McbResult, metric_label: &str) -> Result<String> {
    let k = result.methods.len();
    if k == 0 {
        return Err(Error::Contract("rank chart needs at least one method".into()));
    }
    let row_h = 34.0;
    let top = 52.0;
    let bottom = 46.0;
    let left = 170.0;
    let right = 30.0;
    let height = top + row_h * k as f64 + bottom;
    let plot_w = WIDTH - left - right;
    let plot_h = row_h * k as f64;

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in &result.methods {
        lo = lo.min(m.lower);
        hi = hi.max(m.upper);
    }
    let (xmin, xmax) = padded(lo, hi);
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * plot_w;

    let mut svg = String::new();
    write!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="Helvetica, Arial, sans-serif">"##
    )
    .unwrap();
    write!(svg, r##"<rect width="{WIDTH}" height="{height}" fill="white"/>"##).unwrap();
    write!(
        svg,
        r##"<text x="{:.2}" y="26" font-size="15" text-anchor="middle" fill="#222">Average {} rank, {:.0}% simultaneous intervals</text>"##,
        WIDTH / 2.0,
        escape_xml(metric_label),
        (1.0 - result.alpha) * 100.0
    )
    .unwrap();

    // best-method band across all rows
    let best = &result.methods[result.best_index()];
    write!(
        svg,
        r##"<rect x="{:.2}" y="{top}" width="{:.2}" height="{plot_h:.2}" fill="#66a182" fill-opacity="0.18"/>"##,
        sx(best.lower),
        sx(best.upper) - sx(best.lower)
    )
    .unwrap();

    write!(
        svg,
        r##"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h:.2}" fill="none" stroke="#999" stroke-width="1"/>"##
    )
    .unwrap();

    let (xticks, xstep) = ticks(xmin, xmax, 8);
    for t in &xticks {
        let x = sx(*t);
        write!(
            svg,
            r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.2}" stroke="#e4e4e4" stroke-width="1"/>"##,
            top + plot_h
        )
        .unwrap();
        write!(
            svg,
            r##"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle" fill="#444">{}</text>"##,
            top + plot_h + 16.0,
            fmt_tick(*t, xstep)
        )
        .unwrap();
    }
    write!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" fill="#222">average rank</text>"##,
        left + plot_w / 2.0,
        height - 10.0
    )
    .unwrap();

    for (i, m) in result.methods.iter().enumerate() {
        let y = top + row_h * (i as f64 + 0.5);
        write!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end" fill="#222">{}</text>"##,
            left - 10.0,
            y + 4.0,
            escape_xml(&m.method)
        )
        .unwrap();
        write!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#2e4057" stroke-width="2"/>"##,
            sx(m.lower),
            sx(m.upper)
        )
        .unwrap();
        for x in [m.lower, m.upper] {
            write!(
                svg,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#2e4057" stroke-width="2"/>"##,
                sx(x),
                y - 5.0,
                sx(x),
                y + 5.0
            )
            .unwrap();
        }
        write!(
            svg,
            r##"<circle cx="{:.2}" cy="{y:.2}" r="4" fill="#d1495b"/>"##,
            sx(m.average_rank)
        )
        .unwrap();
    }

    svg.push_str("</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::mcb::{mcb, ScoreMatrix, SignificanceLevel};

    fn demo_spec() -> ChartSpec {
        ChartSpec {
            title: "lambda trajectory".into(),
            x_label: "iteration".into(),
            y_label: "lambda".into(),
            series: vec![
                PlotSeries::line("static", vec![(1.0, 0.15), (2.0, 0.15), (3.0, 0.15)]),
                PlotSeries::dots("random", vec![(1.0, 0.7), (2.0, 0.2), (3.0, 0.9)]),
            ],
        }
    }

    #[test]
    fn chart_emits_valid_skeleton_with_all_series() {
        let svg = chart_svg(&demo_spec()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        assert!(svg.contains("lambda trajectory"));
        assert!(svg.contains("static"));
        assert!(svg.contains("random"));
        assert!(svg.contains("<path"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn chart_emission_is_deterministic() {
        let a = chart_svg(&demo_spec()).unwrap();
        let b = chart_svg(&demo_spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let spec = ChartSpec {
            title: "flat".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![PlotSeries::line("c", vec![(1.0, 0.15), (2.0, 0.15)])],
        };
        let svg = chart_svg(&spec).unwrap();
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn single_point_series_renders() {
        let spec = ChartSpec {
            title: "dot".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![PlotSeries::dots("d", vec![(0.5, 0.5)])],
        };
        let svg = chart_svg(&spec).unwrap();
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_and_non_finite_charts_are_rejected() {
        let empty = ChartSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![PlotSeries::line("a", vec![])],
        };
        assert!(chart_svg(&empty).is_err());
        let bad = ChartSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![PlotSeries::line("a", vec![(0.0, f64::NAN)])],
        };
        assert!(chart_svg(&bad).is_err());
    }

    #[test]
    fn labels_are_xml_escaped() {
        let spec = ChartSpec {
            title: "a < b & c".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![PlotSeries::line("s", vec![(0.0, 1.0), (1.0, 2.0)])],
        };
        let svg = chart_svg(&spec).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(!svg.contains("a < b"));
    }

    #[test]
    fn mcb_chart_shades_the_best_interval() {
        let matrix = ScoreMatrix::new(
            vec!["alpha".into(), "beta".into(), "gamma".into()],
            (0..10).map(|i| format!("S{i}")).collect(),
            vec![
                (0..10).map(|i| 1.0 + i as f64).collect(),
                (0..10).map(|i| 2.0 + i as f64).collect(),
                (0..10).map(|i| 3.0 + i as f64).collect(),
            ],
        )
        .unwrap();
        let result = mcb(&matrix, SignificanceLevel::Alpha05).unwrap();
        let svg = mcb_svg(&result, "sMAPC").unwrap();
        assert!(svg.contains("alpha"));
        assert!(svg.contains("beta"));
        assert!(svg.contains("gamma"));
        assert_eq!(svg.matches(r##"fill-opacity="0.18""##).count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("95% simultaneous intervals"));
        let again = mcb_svg(&result, "sMAPC").unwrap();
        assert_eq!(svg, again);
    }
}
