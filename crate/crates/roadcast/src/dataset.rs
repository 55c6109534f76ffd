//! Prepared datasets: window construction from a fused series, per-split
//! normalizer fitting, and the on-disk dataset format (`windows.csv` plus
//! `manifest.json`).
//!
//! Windows never span a gap marker: a window at slot t exists only when
//! slots t-5..t are all observed. Raw (unnormalized) values are stored on
//! disk; normalization is applied when windows are materialized for a
//! specific split, because every split fits its own normalizer on its own
//! training range.

use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{format_timestamp, parse_timestamp, FusedSeries};
use crate::error::{Error, Result};
use crate::evaluation::{split_timeseries, SplitPlan};
use crate::features::{
    build_exo, CalendarContext, EncodingMode, HolidayCalendar, HolidayClass, Normalizer, Weather,
};
use crate::network::{SequenceWindow, LAG_STEPS};

pub const WINDOWS_FILE: &str = "windows.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// One unnormalized training example.
#[derive(Debug, Clone, PartialEq)]
pub struct RawWindow {
    /// Timestamp of the predicted interval t.
    pub timestamp: NaiveDateTime,
    /// Oldest first; raw vehicles/hour and km/h.
    pub lags: [[f64; 2]; LAG_STEPS],
    /// Reverse-direction (volume, speed) at interval t, raw units.
    pub reverse: (f64, f64),
    /// Raw (V_t, S_t).
    pub target: [f64; 2],
    pub ctx: CalendarContext,
}

/// Windows, split plan, and per-split normalizers for one horizon and
/// encoding.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub interval_minutes: u32,
    pub encoding: EncodingMode,
    pub windows: Vec<RawWindow>,
    pub plan: SplitPlan,
    /// One normalizer per split, fitted on that split's training windows.
    pub normalizers: Vec<Normalizer>,
    pub series_slots: usize,
    pub series_observed: usize,
}

/// Builds every gap-free window of the series.
pub fn build_windows(series: &FusedSeries, holidays: &HolidayCalendar) -> Vec<RawWindow> {
    let slots = &series.slots;
    let mut out = Vec::new();
    for t in LAG_STEPS..slots.len() {
        if slots[t - LAG_STEPS..=t].iter().any(|s| s.data.is_none()) {
            continue;
        }
        let at = |k: usize| slots[t - LAG_STEPS + k].data.as_ref().unwrap();
        let target_slot = at(LAG_STEPS);
        let ts = slots[t].timestamp;
        out.push(RawWindow {
            timestamp: ts,
            lags: std::array::from_fn(|k| {
                let d = at(k);
                [d.volume, d.speed]
            }),
            reverse: (target_slot.volume_reverse, target_slot.speed_reverse),
            target: [target_slot.volume, target_slot.speed],
            ctx: CalendarContext::from_timestamp(
                ts,
                holidays.classify(ts.date()),
                target_slot.weather,
                target_slot.one_way,
                target_slot.double_capacity,
            ),
        });
    }
    out
}

fn fit_split_normalizer(windows: &[RawWindow]) -> Result<Normalizer> {
    let mut volumes = Vec::with_capacity(windows.len() * (LAG_STEPS + 1));
    let mut speeds = Vec::with_capacity(windows.len() * (LAG_STEPS + 1));
    let mut rev_volumes = Vec::with_capacity(windows.len());
    let mut rev_speeds = Vec::with_capacity(windows.len());
    for w in windows {
        for lag in &w.lags {
            volumes.push(lag[0]);
            speeds.push(lag[1]);
        }
        volumes.push(w.target[0]);
        speeds.push(w.target[1]);
        rev_volumes.push(w.reverse.0);
        rev_speeds.push(w.reverse.1);
    }
    Normalizer::fit(&volumes, &speeds, &rev_volumes, &rev_speeds)
}

/// Splits the window list, then fits one normalizer per split on its
/// training range only.
pub fn prepare_dataset(
    series: &FusedSeries,
    holidays: &HolidayCalendar,
    encoding: EncodingMode,
    k: usize,
) -> Result<Dataset> {
    let windows = build_windows(series, holidays);
    let plan = split_timeseries(windows.len(), k)?;
    let normalizers = plan
        .splits
        .iter()
        .map(|s| fit_split_normalizer(&windows[s.train()]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        interval_minutes: series.interval_minutes,
        encoding,
        windows,
        plan,
        normalizers,
        series_slots: series.len(),
        series_observed: series.observed_count(),
    })
}

impl Dataset {
    pub fn normalizer(&self, split: usize) -> Result<&Normalizer> {
        self.normalizers
            .get(split)
            .ok_or_else(|| Error::InvalidArgument(format!("split {split} out of range")))
    }

    /// Materializes normalized model windows for `range` under the given
    /// normalizer (usually the one fitted for the active split).
    pub fn model_windows(
        &self,
        norm: &Normalizer,
        range: std::ops::Range<usize>,
    ) -> Result<Vec<SequenceWindow>> {
        if range.end > self.windows.len() {
            return Err(Error::InvalidArgument(format!(
                "window range {range:?} exceeds {} windows",
                self.windows.len()
            )));
        }
        self.windows[range]
            .iter()
            .map(|w| raw_to_model(w, norm, self.encoding))
            .collect()
    }

    /// All three sets of one split, normalized with that split's normalizer.
    pub fn split_sets(
        &self,
        split: usize,
    ) -> Result<(Vec<SequenceWindow>, Vec<SequenceWindow>, Vec<SequenceWindow>)> {
        let ranges = self
            .plan
            .splits
            .get(split)
            .ok_or_else(|| Error::InvalidArgument(format!("split {split} out of range")))?;
        let norm = self.normalizer(split)?;
        Ok((
            self.model_windows(norm, ranges.train())?,
            self.model_windows(norm, ranges.valid())?,
            self.model_windows(norm, ranges.test())?,
        ))
    }
}

/// Normalizes one raw window and assembles its model input.
pub fn raw_to_model(w: &RawWindow, norm: &Normalizer, encoding: EncodingMode) -> Result<SequenceWindow> {
    let reverse = (
        norm.volume_reverse.apply(w.reverse.0),
        norm.speed_reverse.apply(w.reverse.1),
    );
    Ok(SequenceWindow {
        lags: std::array::from_fn(|k| {
            [norm.volume.apply(w.lags[k][0]), norm.speed.apply(w.lags[k][1])]
        }),
        exo: build_exo(&w.ctx, reverse, encoding)?,
        target: [norm.volume.apply(w.target[0]), norm.speed.apply(w.target[1])],
    })
}

/// Window counts of one split, echoed into the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// The self-describing dataset manifest, stored as JSON next to the
/// windows file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub interval_minutes: u32,
    pub encoding: EncodingMode,
    pub exo_dim: usize,
    /// 10 lag variables plus the exo vector: 34 (cyclic) or 45 (one-hot).
    pub input_dim: usize,
    pub series_slots: usize,
    pub series_observed: usize,
    pub window_count: usize,
    pub split_counts: Vec<SplitCounts>,
    pub plan: SplitPlan,
    pub normalizers: Vec<Normalizer>,
    pub windows_sha256: String,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

fn windows_csv_bytes(windows: &[RawWindow]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["timestamp".into()];
    for k in 1..=LAG_STEPS {
        header.push(format!("lag{k}_volume"));
        header.push(format!("lag{k}_speed"));
    }
    header.extend(
        [
            "reverse_volume",
            "reverse_speed",
            "target_volume",
            "target_speed",
            "month",
            "day",
            "season",
            "day_of_week",
            "hour288",
            "hour",
            "is_7_21",
            "is_day",
            "holiday",
            "weather",
            "one_way",
            "double_capacity",
        ]
        .map(String::from),
    );
    wtr.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;

    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for w in windows {
        let mut row: Vec<String> = vec![format_timestamp(w.timestamp)];
        for lag in &w.lags {
            row.push(format!("{}", lag[0]));
            row.push(format!("{}", lag[1]));
        }
        row.push(format!("{}", w.reverse.0));
        row.push(format!("{}", w.reverse.1));
        row.push(format!("{}", w.target[0]));
        row.push(format!("{}", w.target[1]));
        row.push(w.ctx.month.to_string());
        row.push(w.ctx.day.to_string());
        row.push(w.ctx.season.to_string());
        row.push(w.ctx.day_of_week.to_string());
        row.push(w.ctx.hour288.to_string());
        row.push(w.ctx.hour.to_string());
        row.push(flag(w.ctx.is_7_21));
        row.push(flag(w.ctx.is_day));
        row.push(w.ctx.holiday.label().to_string());
        row.push(w.ctx.weather.label().to_string());
        row.push(flag(w.ctx.one_way));
        row.push(flag(w.ctx.double_capacity));
        wtr.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.into_inner().map_err(|e| Error::Format(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Writes `windows.csv` and `manifest.json` into `dir`; returns the
/// manifest (whose hash identifies the windows file bit-exactly).
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bytes = windows_csv_bytes(&ds.windows)?;
    let windows_sha256 = sha256_hex(&bytes);
    let windows_path = dir.join(WINDOWS_FILE);
    std::fs::write(&windows_path, &bytes).map_err(|e| Error::io(&windows_path, e))?;

    let manifest = Manifest {
        version: MANIFEST_VERSION,
        interval_minutes: ds.interval_minutes,
        encoding: ds.encoding,
        exo_dim: ds.encoding.exo_dim(),
        input_dim: ds.encoding.window_input_dim(),
        series_slots: ds.series_slots,
        series_observed: ds.series_observed,
        window_count: ds.windows.len(),
        split_counts: ds
            .plan
            .splits
            .iter()
            .map(|s| SplitCounts {
                train: s.train().len(),
                valid: s.valid().len(),
                test: s.test().len(),
            })
            .collect(),
        plan: ds.plan.clone(),
        normalizers: ds.normalizers.clone(),
        windows_sha256,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

/// Reads a dataset directory back, verifying the windows hash recorded in
/// the manifest.
pub fn load_dataset(dir: &Path) -> Result<(Dataset, Manifest)> {
    let manifest = Manifest::load(dir)?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Format(format!(
            "manifest version {} unsupported (expected {MANIFEST_VERSION})",
            manifest.version
        )));
    }
    let windows_path = dir.join(WINDOWS_FILE);
    let bytes = std::fs::read(&windows_path).map_err(|e| Error::io(&windows_path, e))?;
    let got = sha256_hex(&bytes);
    if got != manifest.windows_sha256 {
        return Err(Error::Data(format!(
            "windows.csv hash {got} does not match manifest {}",
            manifest.windows_sha256
        )));
    }

    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let mut windows = Vec::with_capacity(manifest.window_count);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("windows.csv row {}: {e}", i + 2)))?;
        windows.push(parse_window_row(&rec).map_err(|e| Error::Format(format!("windows.csv row {}: {e}", i + 2)))?);
    }
    if windows.len() != manifest.window_count {
        return Err(Error::Data(format!(
            "windows.csv has {} rows but manifest says {}",
            windows.len(),
            manifest.window_count
        )));
    }

    let ds = Dataset {
        interval_minutes: manifest.interval_minutes,
        encoding: manifest.encoding,
        windows,
        plan: manifest.plan.clone(),
        normalizers: manifest.normalizers.clone(),
        series_slots: manifest.series_slots,
        series_observed: manifest.series_observed,
    };
    Ok((ds, manifest))
}

fn parse_window_row(rec: &csv::StringRecord) -> std::result::Result<RawWindow, String> {
    let expected = 1 + 2 * LAG_STEPS + 4 + 12;
    if rec.len() != expected {
        return Err(format!("expected {expected} fields, got {}", rec.len()));
    }
    let f = |i: usize| -> std::result::Result<f64, String> {
        rec[i].parse().map_err(|_| format!("bad number '{}'", &rec[i]))
    };
    let u = |i: usize| -> std::result::Result<u32, String> {
        rec[i].parse().map_err(|_| format!("bad integer '{}'", &rec[i]))
    };
    let b = |i: usize| -> std::result::Result<bool, String> {
        match &rec[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(format!("bad flag '{other}'")),
        }
    };

    let timestamp = parse_timestamp(&rec[0]).map_err(|e| e.to_string())?;
    let mut lags = [[0.0; 2]; LAG_STEPS];
    for (k, lag) in lags.iter_mut().enumerate() {
        lag[0] = f(1 + 2 * k)?;
        lag[1] = f(2 + 2 * k)?;
    }
    let base = 1 + 2 * LAG_STEPS;
    let ctx = CalendarContext {
        month: u(base + 4)?,
        day: u(base + 5)?,
        season: u(base + 6)?,
        day_of_week: u(base + 7)?,
        hour288: u(base + 8)?,
        hour: u(base + 9)?,
        is_7_21: b(base + 10)?,
        is_day: b(base + 11)?,
        holiday: HolidayClass::parse(&rec[base + 12]).map_err(|e| e.to_string())?,
        weather: Weather::parse(&rec[base + 13]).map_err(|e| e.to_string())?,
        one_way: b(base + 14)?,
        double_capacity: b(base + 15)?,
    };
    ctx.validate().map_err(|e| e.to_string())?;
    Ok(RawWindow {
        timestamp,
        lags,
        reverse: (f(base)?, f(base + 1)?),
        target: [f(base + 2)?, f(base + 3)?],
        ctx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{default_holidays, generate_synthetic, SynthConfig};

    fn small_series() -> (FusedSeries, HolidayCalendar) {
        let cfg = SynthConfig {
            days: 4,
            noise: 0.05,
            ..SynthConfig::default()
        };
        let cal = default_holidays(cfg.start_date, cfg.days);
        (generate_synthetic(&cfg, &cal, 5).unwrap(), cal)
    }

    #[test]
    fn windows_skip_gaps() {
        let (mut series, cal) = small_series();
        let full = build_windows(&series, &cal).len();
        // Knock out 4 consecutive slots in the middle.
        for i in 100..104 {
            series.slots[i].data = None;
        }
        let reduced = build_windows(&series, &cal).len();
        // Each missing slot removes itself plus the windows whose lag span
        // crosses it: 4 + 5 fewer windows.
        assert_eq!(full - reduced, 9);
    }

    #[test]
    fn dataset_roundtrip_preserves_windows() {
        let (series, cal) = small_series();
        let ds = prepare_dataset(&series, &cal, EncodingMode::Cyclic, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(manifest.input_dim, 34);
        assert_eq!(manifest.window_count, ds.windows.len());

        let (loaded, manifest2) = load_dataset(dir.path()).unwrap();
        assert_eq!(manifest.windows_sha256, manifest2.windows_sha256);
        assert_eq!(ds.windows, loaded.windows);
        assert_eq!(ds.plan, loaded.plan);
        assert_eq!(ds.normalizers, loaded.normalizers);
    }

    #[test]
    fn tampered_windows_file_detected() {
        let (series, cal) = small_series();
        let ds = prepare_dataset(&series, &cal, EncodingMode::OneHot, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let path = dir.path().join(WINDOWS_FILE);
        let mut bytes = std::fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n / 2] = b'9';
        std::fs::write(&path, bytes).unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }

    #[test]
    fn model_windows_are_normalized_for_their_split() {
        let (series, cal) = small_series();
        let ds = prepare_dataset(&series, &cal, EncodingMode::Cyclic, 3).unwrap();
        let (train, valid, test) = ds.split_sets(0).unwrap();
        assert_eq!(train.len(), ds.plan.splits[0].train().len());
        assert_eq!(valid.len(), ds.plan.unit);
        assert_eq!(test.len(), ds.plan.unit);
        // Training values are inside [0, 1] by construction of the fit.
        for w in &train {
            for lag in &w.lags {
                assert!(lag[0] >= 0.0 && lag[0] <= 1.0);
                assert!(lag[1] >= 0.0 && lag[1] <= 1.0);
            }
            assert!(w.target[0] >= 0.0 && w.target[0] <= 1.0);
            assert_eq!(w.exo.dim(), 24);
        }
    }

    #[test]
    fn split_normalizers_differ_with_their_ranges() {
        let (series, cal) = small_series();
        let ds = prepare_dataset(&series, &cal, EncodingMode::Cyclic, 3).unwrap();
        assert_eq!(ds.normalizers.len(), 3);
        // Ranges only grow as the training window expands.
        for i in 1..3 {
            assert!(ds.normalizers[i].volume.max >= ds.normalizers[i - 1].volume.max - 1e-12);
            assert!(ds.normalizers[i].volume.min <= ds.normalizers[i - 1].volume.min + 1e-12);
        }
    }
}
