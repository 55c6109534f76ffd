//! Expanding-window time-series cross-validation, metric computation and
//! report shaping, the persistence baseline, and the analysis statistics
//! (correlation matrix, box-plot summaries).
//!
//! The splitter divides N samples into a unit u = floor(N / (2k + 2)); the
//! r = N - (2k + 2) u leftover samples are prepended to every training
//! range, so split i trains on [0, 2 i u + r) and validation/test blocks of
//! size u roll forward. For k = 3 the last split trains on roughly 75% of
//! its range. Ranges never overlap and test always starts after train ends.

use serde::{Deserialize, Serialize};

use crate::dataio::FusedSeries;
use crate::error::{Error, Result};
use crate::features::HolidayCalendar;
use crate::network::{batch_mse, ModelKind, ModelParams, SequenceWindow};

/// Index ranges of one rolling-origin split: train = [0, train_end),
/// valid = [train_end, valid_end), test = [valid_end, test_end).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRange {
    pub train_end: usize,
    pub valid_end: usize,
    pub test_end: usize,
}

impl SplitRange {
    pub fn train(&self) -> std::ops::Range<usize> {
        0..self.train_end
    }

    pub fn valid(&self) -> std::ops::Range<usize> {
        self.train_end..self.valid_end
    }

    pub fn test(&self) -> std::ops::Range<usize> {
        self.valid_end..self.test_end
    }
}

/// The k rolling-origin splits over N windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub total: usize,
    pub unit: usize,
    pub remainder: usize,
    pub splits: Vec<SplitRange>,
}

/// Builds the rolling-origin plan for `n` samples and `k` splits.
pub fn split_timeseries(n: usize, k: usize) -> Result<SplitPlan> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one split".into()));
    }
    if n < 2 * k + 2 {
        return Err(Error::Data(format!(
            "{n} samples are too few for {k} splits (need at least {})",
            2 * k + 2
        )));
    }
    let unit = n / (2 * k + 2);
    let remainder = n - (2 * k + 2) * unit;
    let splits = (1..=k)
        .map(|i| {
            let train_end = 2 * i * unit + remainder;
            SplitRange {
                train_end,
                valid_end: train_end + unit,
                test_end: train_end + 2 * unit,
            }
        })
        .collect();
    Ok(SplitPlan {
        total: n,
        unit,
        remainder,
        splits,
    })
}

/// Batch MSE of the model over a window set, scaled by 1000 (the reporting
/// convention; full precision is kept in machine output).
pub fn evaluate(params: &ModelParams, windows: &[SequenceWindow]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("evaluate: empty window set".into()));
    }
    Ok(batch_mse(windows, params)? * 1000.0)
}

/// Naive forecaster: the next interval equals the last observed lag pair.
/// Same metric pipeline, MSE x 1000.
pub fn persistence_baseline(windows: &[SequenceWindow]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument(
            "persistence_baseline: empty window set".into(),
        ));
    }
    let mut acc = 0.0;
    for w in windows {
        let last = w.lags[w.lags.len() - 1];
        let dv = last[0] - w.target[0];
        let ds = last[1] - w.target[1];
        acc += dv * dv + ds * ds;
    }
    Ok(acc / (2.0 * windows.len() as f64) * 1000.0)
}

/// Channel order of the correlation matrix.
pub const CORRELATION_CHANNELS: [&str; 4] = ["volume", "speed", "volume_reverse", "speed_reverse"];

/// Pearson correlation matrix over the complete (non-gap) rows of the
/// series, channels ordered per [`CORRELATION_CHANNELS`]. A zero-variance
/// channel yields NaN off-diagonals (undefined markers); the diagonal is
/// exactly 1.
pub fn correlations(series: &FusedSeries) -> Result<[[f64; 4]; 4]> {
    let mut n = 0usize;
    let mut mean = [0.0f64; 4];
    let mut co = [[0.0f64; 4]; 4];

    // Streaming co-moment update (Welford-style), one pass.
    for (_, d) in series.observed() {
        let x = [d.volume, d.speed, d.volume_reverse, d.speed_reverse];
        n += 1;
        let inv = 1.0 / n as f64;
        let delta: Vec<f64> = (0..4).map(|i| x[i] - mean[i]).collect();
        for i in 0..4 {
            mean[i] += delta[i] * inv;
        }
        for i in 0..4 {
            for j in 0..4 {
                co[i][j] += delta[i] * (x[j] - mean[j]);
            }
        }
    }
    if n < 3 {
        return Err(Error::Data(format!(
            "correlations need at least 3 complete rows, got {n}"
        )));
    }

    // Upper triangle mirrored onto the lower keeps the matrix exactly
    // symmetric despite accumulation rounding.
    let mut out = [[0.0f64; 4]; 4];
    for i in 0..4 {
        out[i][i] = 1.0;
        for j in i + 1..4 {
            let denom = (co[i][i] * co[j][j]).sqrt();
            let r = if denom > 0.0 { co[i][j] / denom } else { f64::NAN };
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

/// Categorical variables available for box-plot summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryVar {
    Month,
    Day,
    Season,
    DayOfWeek,
    Hour,
    Is7_21,
    DayNight,
    Holiday,
    Weather,
}

impl CategoryVar {
    pub const ALL: [CategoryVar; 9] = [
        CategoryVar::Month,
        CategoryVar::Day,
        CategoryVar::Season,
        CategoryVar::DayOfWeek,
        CategoryVar::Hour,
        CategoryVar::Is7_21,
        CategoryVar::DayNight,
        CategoryVar::Holiday,
        CategoryVar::Weather,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CategoryVar::Month => "month",
            CategoryVar::Day => "day",
            CategoryVar::Season => "season",
            CategoryVar::DayOfWeek => "day_of_week",
            CategoryVar::Hour => "hour",
            CategoryVar::Is7_21 => "is_7_21",
            CategoryVar::DayNight => "day_night",
            CategoryVar::Holiday => "holiday",
            CategoryVar::Weather => "weather",
        }
    }
}

/// Five-number summary plus count of target volume for one category level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub level: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

/// Box-plot summaries of one categorical variable, levels in canonical
/// order; absent levels are skipped and listed in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotReport {
    pub variable: String,
    pub levels: Vec<BoxStats>,
    pub skipped: Vec<String>,
}

/// Linear-interpolation quantile (type-7): index k = (n-1) p between order
/// statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let k = (n - 1) as f64 * p;
    let lo = k.floor() as usize;
    let hi = k.ceil() as usize;
    let frac = k - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn five_number(level: String, values: &mut Vec<f64>) -> BoxStats {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    BoxStats {
        level,
        min: values[0],
        q1: quantile(values, 0.25),
        median: quantile(values, 0.5),
        q3: quantile(values, 0.75),
        max: values[values.len() - 1],
        count: values.len(),
    }
}

/// Groups target volume by the levels of `var` and summarizes each level.
pub fn boxplot_stats(
    series: &FusedSeries,
    var: CategoryVar,
    holidays: &HolidayCalendar,
) -> Result<BoxplotReport> {
    use crate::features::CalendarContext;

    let levels: Vec<String> = match var {
        CategoryVar::Month => (1..=12).map(|v| v.to_string()).collect(),
        CategoryVar::Day => (1..=31).map(|v| v.to_string()).collect(),
        CategoryVar::Season => (1..=4).map(|v| v.to_string()).collect(),
        CategoryVar::DayOfWeek => (1..=7).map(|v| v.to_string()).collect(),
        CategoryVar::Hour => (1..=24).map(|v| v.to_string()).collect(),
        CategoryVar::Is7_21 | CategoryVar::DayNight => vec!["0".into(), "1".into()],
        CategoryVar::Holiday => vec!["calendar".into(), "weekend".into(), "none".into()],
        CategoryVar::Weather => vec!["rainy".into(), "sunny".into(), "snowy".into()],
    };
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];

    for (ts, d) in series.observed() {
        let ctx = CalendarContext::from_timestamp(
            *ts,
            holidays.classify(ts.date()),
            d.weather,
            d.one_way,
            d.double_capacity,
        );
        let idx = match var {
            CategoryVar::Month => ctx.month as usize - 1,
            CategoryVar::Day => ctx.day as usize - 1,
            CategoryVar::Season => ctx.season as usize - 1,
            CategoryVar::DayOfWeek => ctx.day_of_week as usize - 1,
            CategoryVar::Hour => ctx.hour as usize - 1,
            CategoryVar::Is7_21 => usize::from(ctx.is_7_21),
            CategoryVar::DayNight => usize::from(ctx.is_day),
            CategoryVar::Holiday => ctx.holiday.index() as usize - 1,
            CategoryVar::Weather => d.weather.index() as usize - 1,
        };
        groups[idx].push(d.volume);
    }

    if groups.iter().all(|g| g.is_empty()) {
        return Err(Error::Data(format!(
            "boxplot_stats: no data for variable {}",
            var.label()
        )));
    }

    let mut report = BoxplotReport {
        variable: var.label().to_string(),
        levels: Vec::new(),
        skipped: Vec::new(),
    };
    for (level, mut values) in levels.into_iter().zip(groups) {
        if values.is_empty() {
            report.skipped.push(level);
        } else {
            report.levels.push(five_number(level, &mut values));
        }
    }
    Ok(report)
}

/// MSE x 1000 of one trained model on its three sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub split: usize,
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

/// All splits of one model kind plus their arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMetrics {
    pub kind: ModelKind,
    pub splits: Vec<SplitMetrics>,
    pub average: SplitMetrics,
}

impl VariantMetrics {
    pub fn new(kind: ModelKind, mut splits: Vec<SplitMetrics>) -> Self {
        splits.sort_by_key(|s| s.split);
        let n = splits.len().max(1) as f64;
        let average = SplitMetrics {
            split: 0,
            train: splits.iter().map(|s| s.train).sum::<f64>() / n,
            valid: splits.iter().map(|s| s.valid).sum::<f64>() / n,
            test: splits.iter().map(|s| s.test).sum::<f64>() / n,
        };
        VariantMetrics {
            kind,
            splits,
            average,
        }
    }
}

/// Per-variant, per-split, per-set MSE x 1000 for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub interval_minutes: u32,
    pub encoding: crate::features::EncodingMode,
    pub variants: Vec<VariantMetrics>,
}

impl MetricsReport {
    /// CSV rows = model x split (plus an average row per model); columns =
    /// horizon and the train/valid/test sets.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        wtr.write_record([
            "model",
            "split",
            "horizon_minutes",
            "train_mse_x1000",
            "valid_mse_x1000",
            "test_mse_x1000",
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
        for v in &self.variants {
            for s in &v.splits {
                wtr.write_record([
                    v.kind.label().to_string(),
                    s.split.to_string(),
                    self.interval_minutes.to_string(),
                    format!("{}", s.train),
                    format!("{}", s.valid),
                    format!("{}", s.test),
                ])
                .map_err(|e| Error::Format(e.to_string()))?;
            }
            wtr.write_record([
                v.kind.label().to_string(),
                "average".to_string(),
                self.interval_minutes.to_string(),
                format!("{}", v.average.train),
                format!("{}", v.average.valid),
                format!("{}", v.average.test),
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
