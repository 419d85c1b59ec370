//! Multiple-comparisons-with-the-best rank test.
//!
//! Each method is ranked per series (1 = best, ties mid-ranked), and the
//! per-method average rank gets a confidence interval of half-width
//! 0.5·q·√(k(k+1)/(6N)), where q is the Studentized-range-based critical
//! value for k simultaneous comparisons. Two methods differ significantly
//! exactly when their intervals do not overlap, so the full-width 2·hw is
//! the critical distance between average ranks.

use crate::error::{Error, Result};
use crate::eval::score::{Metric, ScoreTable};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Critical values for k = 2..=20 simultaneous rank comparisons,
/// q_α = studentized_range_quantile(1−α, k, ∞) / √2.
const CRITICAL_Q_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030879, 3.101730, 3.163684,
    3.218654, 3.268004, 3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073,
    3.543799,
];
const CRITICAL_Q_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889,
    2.977768, 3.029694, 3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224,
    3.319233,
];

/// Supported simultaneous significance levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignificanceLevel {
    #[serde(rename = "0.05")]
    Alpha05,
    #[serde(rename = "0.10")]
    Alpha10,
}

impl SignificanceLevel {
    pub fn alpha(self) -> f64 {
        match self {
            SignificanceLevel::Alpha05 => 0.05,
            SignificanceLevel::Alpha10 => 0.10,
        }
    }

    fn critical_value(self, k: usize) -> Result<f64> {
        let table = match self {
            SignificanceLevel::Alpha05 => &CRITICAL_Q_05,
            SignificanceLevel::Alpha10 => &CRITICAL_Q_10,
        };
        if !(2..=20).contains(&k) {
            return Err(Error::Config(format!(
                "critical values are tabulated for 2..=20 methods, got {k}"
            )));
        }
        Ok(table[k - 2])
    }
}

/// A method-by-series score matrix, lower scores better.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub methods: Vec<String>,
    pub series_ids: Vec<String>,
    /// `values[m][s]` is method m's score on series s.
    pub values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(methods: Vec<String>, series_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != methods.len()
            || values.iter().any(|row| row.len() != series_ids.len())
        {
            return Err(Error::Contract(
                "score matrix shape does not match its method/series labels".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Contract("score matrix has non-finite cells".into()));
        }
        Ok(ScoreMatrix {
            methods,
            series_ids,
            values,
        })
    }

    /// Pivot one metric out of a per-series score table. Every method must
    /// cover exactly the same series; holes are a contract error.
    pub fn from_table(table: &ScoreTable, metric: Metric) -> Result<Self> {
        let methods = table.methods();
        if methods.is_empty() {
            return Err(Error::Contract("score table is empty".into()));
        }
        let mut series_ids: Vec<String> = Vec::new();
        for row in &table.rows {
            if row.method == methods[0] {
                series_ids.push(row.series_id.clone());
            }
        }
        let mut values = vec![vec![f64::NAN; series_ids.len()]; methods.len()];
        let mut filled = vec![0usize; methods.len()];
        for row in &table.rows {
            let m = methods.iter().position(|x| *x == row.method).unwrap();
            let s = series_ids
                .iter()
                .position(|x| *x == row.series_id)
                .ok_or_else(|| {
                    Error::Contract(format!(
                        "method {:?} scores series {:?} that method {:?} does not",
                        row.method, row.series_id, methods[0]
                    ))
                })?;
            if !values[m][s].is_nan() {
                return Err(Error::Contract(format!(
                    "duplicate score for method {:?}, series {:?}",
                    row.method, row.series_id
                )));
            }
            values[m][s] = metric.pick(row);
            filled[m] += 1;
        }
        for (m, count) in filled.iter().enumerate() {
            if *count != series_ids.len() {
                return Err(Error::Contract(format!(
                    "method {:?} covers {count} of {} series",
                    methods[m],
                    series_ids.len()
                )));
            }
        }
        ScoreMatrix::new(methods, series_ids, values)
    }
}

/// One method's interval in the rank test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McbMethod {
    pub method: String,
    pub average_rank: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Result of the rank test over one score matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McbResult {
    pub alpha: f64,
    pub half_width: f64,
    /// Methods in input order.
    pub methods: Vec<McbMethod>,
    /// `significant[a][b]`: methods a and b differ significantly
    /// (their intervals are disjoint).
    pub significant: Vec<Vec<bool>>,
}

/// Average ranks of one series' scores, 1-based, ties mid-ranked.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the mean of ranks i+1..=j+1
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Two equal-width intervals are disjoint exactly when their centers are
/// more than one full width apart; touching endpoints still overlap.
pub fn intervals_disjoint(center_a: f64, center_b: f64, half_width: f64) -> bool {
    (center_a - center_b).abs() > 2.0 * half_width
}

/// Run the rank test at the given significance level.
pub fn mcb(matrix: &ScoreMatrix, level: SignificanceLevel) -> Result<McbResult> {
    let k = matrix.methods.len();
    let n = matrix.series_ids.len();
    if k < 2 {
        return Err(Error::Contract("rank test needs at least 2 methods".into()));
    }
    if n < 2 {
        return Err(Error::Contract("rank test needs at least 2 series".into()));
    }

    let mut rank_sums = vec![0.0; k];
    let mut column = vec![0.0; k];
    for s in 0..n {
        for m in 0..k {
            column[m] = matrix.values[m][s];
        }
        for (m, r) in average_ranks(&column).into_iter().enumerate() {
            rank_sums[m] += r;
        }
    }
    let q = level.critical_value(k)?;
    let half_width = 0.5 * q * (k as f64 * (k as f64 + 1.0) / (6.0 * n as f64)).sqrt();

    let methods: Vec<McbMethod> = matrix
        .methods
        .iter()
        .zip(&rank_sums)
        .map(|(name, sum)| {
            let average_rank = sum / n as f64;
            McbMethod {
                method: name.clone(),
                average_rank,
                lower: average_rank - half_width,
                upper: average_rank + half_width,
            }
        })
        .collect();

    let significant = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    a != b
                        && intervals_disjoint(
                            methods[a].average_rank,
                            methods[b].average_rank,
                            half_width,
                        )
                })
                .collect()
        })
        .collect();

    Ok(McbResult {
        alpha: level.alpha(),
        half_width,
        methods,
        significant,
    })
}

impl McbResult {
    /// Index of the best (lowest average rank) method.
    pub fn best_index(&self) -> usize {
        self.methods
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.average_rank.partial_cmp(&b.1.average_rank).unwrap())
            .map(|(i, _)| i)
            .expect("at least two methods")
    }

    /// CSV: `method,average_rank,lower,upper,differs_from_best`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,average_rank,lower,upper,differs_from_best")?;
        let best = self.best_index();
        for (i, m) in self.methods.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                m.method,
                m.average_rank,
                m.lower,
                m.upper,
                self.significant[i][best]
            )?;
        }
        Ok(())
    }
}
