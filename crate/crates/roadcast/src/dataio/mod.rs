//! Ingestion of raw 5-minute detector CSV, cleaning, interval aggregation,
//! and bidirectional fusion of the target and reverse directions.
//!
//! Input CSV schema (header required):
//! `timestamp,station_id,direction,volume_vph,speed_kmh,weather,one_way,double_capacity`
//! with timestamps in ISO-8601 local time aligned to the 5-minute grid,
//! direction in {target, reverse}, weather in {rainy, sunny, snowy}, and the
//! two flags as 0/1. Malformed rows are collected into a rejects report,
//! never dropped silently.

mod synthetic;

pub use synthetic::{default_holidays, generate_synthetic, SynthConfig, SYNTH_STATION_ID};

use std::path::Path;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Weather;

pub const CSV_HEADER: [&str; 8] = [
    "timestamp",
    "station_id",
    "direction",
    "volume_vph",
    "speed_kmh",
    "weather",
    "one_way",
    "double_capacity",
];

/// Which carriageway a record describes. The target direction carries the
/// prediction variables; the reverse direction feeds the exogenous features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Target,
    Reverse,
}

impl Direction {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "target" => Ok(Direction::Target),
            "reverse" => Ok(Direction::Reverse),
            other => Err(Error::Data(format!("unknown direction '{other}'"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::Target => "target",
            Direction::Reverse => "reverse",
        }
    }
}

/// One detector reading.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficRecord {
    pub timestamp: NaiveDateTime,
    pub station_id: String,
    pub direction: Direction,
    /// Equivalent hourly volume, vehicles/hour, >= 0.
    pub volume_vph: f64,
    /// Average speed, km/h, >= 0.
    pub speed_kmh: f64,
    pub weather: Weather,
    /// This record's direction is closed to traffic.
    pub one_way: bool,
    /// This record's direction may use both lanes.
    pub double_capacity: bool,
}

/// A row that failed ingestion, with its file line number.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

/// Parsed records plus the rows that could not be parsed.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<TrafficRecord>,
    pub rejects: Vec<RejectedRow>,
}

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .map_err(|e| Error::Data(format!("unparseable timestamp '{s}': {e}")))
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Reads and validates the raw CSV. Fatal errors: missing file or a header
/// that does not match the schema. Row-level problems land in the rejects
/// list with their line numbers.
pub fn ingest(path: &Path) -> Result<IngestReport> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Format(e.to_string()),
    })?;

    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != CSV_HEADER {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            details: format!(
                "expected header '{}', got '{}'",
                CSV_HEADER.join(","),
                got.join(",")
            ),
        });
    }

    let mut report = IngestReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let line = (i + 2) as u64;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.rejects.push(RejectedRow {
                    line,
                    reason: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        match parse_record(&rec) {
            Ok(r) => report.records.push(r),
            Err(reason) => report.rejects.push(RejectedRow { line, reason }),
        }
    }
    Ok(report)
}

fn parse_record(rec: &csv::StringRecord) -> std::result::Result<TrafficRecord, String> {
    if rec.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, got {}", CSV_HEADER.len(), rec.len()));
    }
    let timestamp = parse_timestamp(&rec[0]).map_err(|e| e.to_string())?;
    if timestamp.minute() % 5 != 0 || timestamp.second() != 0 {
        return Err(format!(
            "timestamp '{}' not aligned to the 5-minute grid",
            &rec[0]
        ));
    }
    let direction = Direction::parse(&rec[2]).map_err(|e| e.to_string())?;
    let volume_vph: f64 = rec[3]
        .parse()
        .map_err(|_| format!("non-numeric volume '{}'", &rec[3]))?;
    if !volume_vph.is_finite() || volume_vph < 0.0 {
        return Err(format!("negative or non-finite volume '{}'", &rec[3]));
    }
    let speed_kmh: f64 = rec[4]
        .parse()
        .map_err(|_| format!("non-numeric speed '{}'", &rec[4]))?;
    if !speed_kmh.is_finite() || speed_kmh < 0.0 {
        return Err(format!("negative or non-finite speed '{}'", &rec[4]));
    }
    let weather = Weather::parse(&rec[5]).map_err(|e| e.to_string())?;
    let one_way = parse_flag(&rec[6]).ok_or_else(|| format!("bad one_way flag '{}'", &rec[6]))?;
    let double_capacity =
        parse_flag(&rec[7]).ok_or_else(|| format!("bad double_capacity flag '{}'", &rec[7]))?;
    Ok(TrafficRecord {
        timestamp,
        station_id: rec[1].to_string(),
        direction,
        volume_vph,
        speed_kmh,
        weather,
        one_way,
        double_capacity,
    })
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Fused observation of one interval: both directions plus context, seen
/// from the target direction (`one_way` = target closed, `double_capacity` =
/// target has both lanes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedData {
    pub volume: f64,
    pub speed: f64,
    pub volume_reverse: f64,
    pub speed_reverse: f64,
    pub weather: Weather,
    pub one_way: bool,
    pub double_capacity: bool,
}

/// One grid slot: a fixed timestamp and either an observation or an explicit
/// gap marker. Gaps are never silently bridged.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedSlot {
    pub timestamp: NaiveDateTime,
    pub data: Option<FusedData>,
}

/// Ordered sequence at a single fixed interval with explicit gap markers.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedSeries {
    pub interval_minutes: u32,
    pub slots: Vec<FusedSlot>,
}

impl FusedSeries {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn observed(&self) -> impl Iterator<Item = (&NaiveDateTime, &FusedData)> {
        self.slots
            .iter()
            .filter_map(|s| s.data.as_ref().map(|d| (&s.timestamp, d)))
    }

    pub fn observed_count(&self) -> usize {
        self.slots.iter().filter(|s| s.data.is_some()).count()
    }

    pub fn gap_count(&self) -> usize {
        self.len() - self.observed_count()
    }
}

/// Cleaning thresholds. The raw feed occasionally reports physically
/// impossible readings; anything past these limits becomes a missing value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanConfig {
    pub max_speed_kmh: f64,
    pub max_volume_vph: f64,
    /// Longest run of consecutive missing intervals that linear
    /// interpolation may fill, per channel. Longer outages stay gaps.
    pub max_fill_run: usize,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            max_speed_kmh: 200.0,
            max_volume_vph: 10_000.0,
            max_fill_run: 2,
        }
    }
}

/// What cleaning did; always produced, even when nothing was edited.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub rows_in: usize,
    pub duplicate_rows: usize,
    pub implausible_volume: usize,
    pub implausible_speed: usize,
    pub interpolated_volume: usize,
    pub interpolated_speed: usize,
    pub interpolated_volume_reverse: usize,
    pub interpolated_speed_reverse: usize,
    pub slots_total: usize,
    pub slots_observed: usize,
    pub gap_slots: usize,
}

impl CleaningSummary {
    pub fn edits(&self) -> usize {
        self.duplicate_rows
            + self.implausible_volume
            + self.implausible_speed
            + self.interpolated_volume
            + self.interpolated_speed
            + self.interpolated_volume_reverse
            + self.interpolated_speed_reverse
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        wtr.write_record(["key", "value"])
            .map_err(|e| Error::Format(e.to_string()))?;
        let rows = [
            ("rows_in", self.rows_in),
            ("duplicate_rows", self.duplicate_rows),
            ("implausible_volume", self.implausible_volume),
            ("implausible_speed", self.implausible_speed),
            ("interpolated_volume", self.interpolated_volume),
            ("interpolated_speed", self.interpolated_speed),
            ("interpolated_volume_reverse", self.interpolated_volume_reverse),
            ("interpolated_speed_reverse", self.interpolated_speed_reverse),
            ("slots_total", self.slots_total),
            ("slots_observed", self.slots_observed),
            ("gap_slots", self.gap_slots),
        ];
        for (k, v) in rows {
            wtr.write_record([k, &v.to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn write_rejects_csv(rejects: &[RejectedRow], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record(["line", "reason"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for r in rejects {
        wtr.write_record([r.line.to_string(), r.reason.clone()])
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Cleans records from one station (both directions) into a fused 5-minute
/// series: implausible readings removed, short gaps linearly interpolated
/// per channel, longer gaps marked, directions fused by timestamp.
pub fn clean(records: &[TrafficRecord]) -> Result<(FusedSeries, CleaningSummary)> {
    clean_with(records, &CleanConfig::default())
}

pub fn clean_with(records: &[TrafficRecord], cfg: &CleanConfig) -> Result<(FusedSeries, CleaningSummary)> {
    let mut summary = CleaningSummary {
        rows_in: records.len(),
        ..Default::default()
    };
    if records.is_empty() {
        return Ok((
            FusedSeries {
                interval_minutes: 5,
                slots: Vec::new(),
            },
            summary,
        ));
    }

    let station = &records[0].station_id;
    if records.iter().any(|r| &r.station_id != station) {
        return Err(Error::Data(
            "clean expects records from a single station".into(),
        ));
    }

    let min_ts = records.iter().map(|r| r.timestamp).min().unwrap();
    let max_ts = records.iter().map(|r| r.timestamp).max().unwrap();
    let step = chrono::Duration::minutes(5);
    let n = ((max_ts - min_ts).num_minutes() / 5) as usize + 1;

    let mut vol_t: Vec<Option<f64>> = vec![None; n];
    let mut spd_t: Vec<Option<f64>> = vec![None; n];
    let mut vol_r: Vec<Option<f64>> = vec![None; n];
    let mut spd_r: Vec<Option<f64>> = vec![None; n];
    // Context per slot as seen from each direction's record.
    let mut ctx_t: Vec<Option<(Weather, bool, bool)>> = vec![None; n];
    let mut ctx_r: Vec<Option<(Weather, bool, bool)>> = vec![None; n];

    for r in records {
        let idx = ((r.timestamp - min_ts).num_minutes() / 5) as usize;
        let seen = match r.direction {
            Direction::Target => ctx_t[idx].is_some(),
            Direction::Reverse => ctx_r[idx].is_some(),
        };
        if seen {
            summary.duplicate_rows += 1;
            continue;
        }
        let (vol, spd, ctx) = match r.direction {
            Direction::Target => (&mut vol_t, &mut spd_t, &mut ctx_t),
            Direction::Reverse => (&mut vol_r, &mut spd_r, &mut ctx_r),
        };
        ctx[idx] = Some((r.weather, r.one_way, r.double_capacity));
        if r.volume_vph > cfg.max_volume_vph {
            summary.implausible_volume += 1;
        } else {
            vol[idx] = Some(r.volume_vph);
        }
        if r.speed_kmh > cfg.max_speed_kmh {
            summary.implausible_speed += 1;
        } else {
            spd[idx] = Some(r.speed_kmh);
        }
    }

    summary.interpolated_volume = interpolate_runs(&mut vol_t, cfg.max_fill_run);
    summary.interpolated_speed = interpolate_runs(&mut spd_t, cfg.max_fill_run);
    summary.interpolated_volume_reverse = interpolate_runs(&mut vol_r, cfg.max_fill_run);
    summary.interpolated_speed_reverse = interpolate_runs(&mut spd_r, cfg.max_fill_run);

    // Context seen from the target direction: a reverse-direction record
    // implies the mirrored road state (its double_capacity means the target
    // side is closed). Slots with interpolated channels but no record at
    // all borrow the nearest earlier context.
    let mut merged_ctx: Vec<Option<(Weather, bool, bool)>> = (0..n)
        .map(|i| {
            ctx_t[i].or_else(|| ctx_r[i].map(|(w, ow, dc)| (w, dc, ow)))
        })
        .collect();
    let mut last = None;
    for c in merged_ctx.iter_mut() {
        match c {
            Some(v) => last = Some(*v),
            None => *c = last,
        }
    }
    let mut next = None;
    for c in merged_ctx.iter_mut().rev() {
        match c {
            Some(v) => next = Some(*v),
            None => *c = next,
        }
    }

    let mut slots = Vec::with_capacity(n);
    for i in 0..n {
        let timestamp = min_ts + step * i as i32;
        let data = match (vol_t[i], spd_t[i], vol_r[i], spd_r[i], merged_ctx[i]) {
            (Some(v), Some(s), Some(vr), Some(sr), Some((weather, one_way, double_capacity))) => {
                Some(FusedData {
                    volume: v,
                    speed: s,
                    volume_reverse: vr,
                    speed_reverse: sr,
                    weather,
                    one_way,
                    double_capacity,
                })
            }
            _ => None,
        };
        slots.push(FusedSlot { timestamp, data });
    }

    summary.slots_total = n;
    summary.slots_observed = slots.iter().filter(|s| s.data.is_some()).count();
    summary.gap_slots = summary.slots_total - summary.slots_observed;

    Ok((
        FusedSeries {
            interval_minutes: 5,
            slots,
        },
        summary,
    ))
}

/// Linearly fills interior `None` runs of length <= `max_run` that have
/// observed values on both sides. Returns the number of filled values.
fn interpolate_runs(channel: &mut [Option<f64>], max_run: usize) -> usize {
    let mut filled = 0;
    let mut i = 0;
    while i < channel.len() {
        if channel[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < channel.len() && channel[i].is_none() {
            i += 1;
        }
        let run = i - start;
        if start == 0 || i == channel.len() || run > max_run {
            continue;
        }
        let left = channel[start - 1].unwrap();
        let right = channel[i].unwrap();
        for (k, slot) in channel[start..i].iter_mut().enumerate() {
            let frac = (k + 1) as f64 / (run + 1) as f64;
            *slot = Some(left + (right - left) * frac);
            filled += 1;
        }
    }
    filled
}

/// Aggregates a 5-minute series into 15- (factor 3) or 30-minute (factor 6)
/// intervals. Volumes average arithmetically (they are already hourly
/// equivalents); speeds average weighted by their direction's volume, with a
/// simple mean when the block's volume sum is zero. Flags aggregate by
/// any-true; weather by block majority, earliest occurrence winning ties.
/// Blocks containing a gap produce a gap; a trailing partial block is
/// dropped.
pub fn aggregate(series: &FusedSeries, factor: u32) -> Result<FusedSeries> {
    if factor != 3 && factor != 6 {
        return Err(Error::InvalidArgument(format!(
            "aggregation factor must be 3 or 6, got {factor}"
        )));
    }
    if series.interval_minutes != 5 {
        return Err(Error::Data(format!(
            "aggregate expects a 5-minute series, got {} minutes",
            series.interval_minutes
        )));
    }
    let new_interval = 5 * factor;
    if let Some(first) = series.slots.first() {
        let minute = first.timestamp.hour() * 60 + first.timestamp.minute();
        if minute % new_interval != 0 {
            return Err(Error::Data(format!(
                "series starting at {} is misaligned for {new_interval}-minute aggregation",
                format_timestamp(first.timestamp)
            )));
        }
    }

    let f = factor as usize;
    let mut slots = Vec::with_capacity(series.slots.len() / f);
    for block in series.slots.chunks_exact(f) {
        let timestamp = block[0].timestamp;
        let data = if block.iter().all(|s| s.data.is_some()) {
            let pts: Vec<&FusedData> = block.iter().map(|s| s.data.as_ref().unwrap()).collect();
            let volume = pts.iter().map(|p| p.volume).sum::<f64>() / f as f64;
            let volume_reverse = pts.iter().map(|p| p.volume_reverse).sum::<f64>() / f as f64;
            Some(FusedData {
                volume,
                speed: weighted_speed(pts.iter().map(|p| (p.volume, p.speed))),
                volume_reverse,
                speed_reverse: weighted_speed(pts.iter().map(|p| (p.volume_reverse, p.speed_reverse))),
                weather: majority_weather(pts.iter().map(|p| p.weather)),
                one_way: pts.iter().any(|p| p.one_way),
                double_capacity: pts.iter().any(|p| p.double_capacity),
            })
        } else {
            None
        };
        slots.push(FusedSlot { timestamp, data });
    }

    Ok(FusedSeries {
        interval_minutes: new_interval,
        slots,
    })
}

fn weighted_speed(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let total: f64 = pairs.clone().map(|(v, _)| v).sum();
    let count = pairs.clone().count();
    if total > 0.0 {
        pairs.map(|(v, s)| v * s).sum::<f64>() / total
    } else {
        pairs.map(|(_, s)| s).sum::<f64>() / count as f64
    }
}

fn majority_weather(items: impl Iterator<Item = Weather>) -> Weather {
    // (count, first index) per class; max count wins, earliest first
    // occurrence breaks ties.
    let mut stats: [(usize, usize); 3] = [(0, usize::MAX); 3];
    for (i, w) in items.enumerate() {
        let k = (w.index() - 1) as usize;
        stats[k].0 += 1;
        if stats[k].1 == usize::MAX {
            stats[k].1 = i;
        }
    }
    let mut best = 0;
    for k in 1..3 {
        let better = stats[k].0 > stats[best].0
            || (stats[k].0 == stats[best].0 && stats[k].1 < stats[best].1);
        if better {
            best = k;
        }
    }
    [Weather::Rainy, Weather::Sunny, Weather::Snowy][best]
}

/// Expands a fused series back into per-direction records (used to write
/// synthetic data as schema-conformant CSV). Gap slots emit nothing.
pub fn series_to_records(series: &FusedSeries, station_id: &str) -> Vec<TrafficRecord> {
    let mut out = Vec::with_capacity(series.observed_count() * 2);
    for (ts, d) in series.observed() {
        out.push(TrafficRecord {
            timestamp: *ts,
            station_id: station_id.to_string(),
            direction: Direction::Target,
            volume_vph: d.volume,
            speed_kmh: d.speed,
            weather: d.weather,
            one_way: d.one_way,
            double_capacity: d.double_capacity,
        });
        out.push(TrafficRecord {
            timestamp: *ts,
            station_id: station_id.to_string(),
            direction: Direction::Reverse,
            volume_vph: d.volume_reverse,
            speed_kmh: d.speed_reverse,
            weather: d.weather,
            // Road state mirrored for the opposite carriageway.
            one_way: d.double_capacity,
            double_capacity: d.one_way,
        });
    }
    out
}

pub fn write_records_csv(records: &[TrafficRecord], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record(CSV_HEADER)
        .map_err(|e| Error::Format(e.to_string()))?;
    for r in records {
        wtr.write_record([
            format_timestamp(r.timestamp),
            r.station_id.clone(),
            r.direction.label().to_string(),
            format!("{}", r.volume_vph),
            format!("{}", r.speed_kmh),
            r.weather.label().to_string(),
            if r.one_way { "1" } else { "0" }.to_string(),
            if r.double_capacity { "1" } else { "0" }.to_string(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ts(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 3, 12)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
    }

    fn record(h: u32, m: u32, dir: Direction, vol: f64, spd: f64) -> TrafficRecord {
        TrafficRecord {
            timestamp: ts(h, m),
            station_id: "ST001".into(),
            direction: dir,
            volume_vph: vol,
            speed_kmh: spd,
            weather: Weather::Sunny,
            one_way: false,
            double_capacity: false,
        }
    }

    fn both(h: u32, m: u32, vol: f64, spd: f64) -> [TrafficRecord; 2] {
        [
            record(h, m, Direction::Target, vol, spd),
            record(h, m, Direction::Reverse, vol * 0.8, spd + 5.0),
        ]
    }

    #[test]
    fn clean_on_clean_data_is_identity() {
        let mut records = Vec::new();
        for k in 0..6 {
            records.extend(both(8, 5 * k, 600.0 + k as f64, 90.0));
        }
        let (series, summary) = clean(&records).unwrap();
        assert_eq!(series.len(), 6);
        assert_eq!(series.observed_count(), 6);
        assert_eq!(summary.edits(), 0);
        let d = series.slots[2].data.unwrap();
        assert_eq!(d.volume, 602.0);
        assert_eq!(d.volume_reverse, 602.0 * 0.8);

        // Idempotence: re-cleaning the cleaned output changes nothing.
        let again = series_to_records(&series, "ST001");
        let (series2, summary2) = clean(&again).unwrap();
        assert_eq!(series, series2);
        assert_eq!(summary2.edits(), 0);
    }

    #[test]
    fn single_missing_speed_is_interpolated() {
        let mut records = Vec::new();
        records.extend(both(8, 0, 600.0, 80.0));
        // 08:05 target speed missing (record absent entirely for target).
        records.push(record(8, 5, Direction::Reverse, 480.0, 85.0));
        records.push(record(8, 5, Direction::Target, 610.0, 300.0)); // implausible speed
        records.extend(both(8, 10, 620.0, 84.0));
        let (series, summary) = clean(&records).unwrap();
        assert_eq!(summary.implausible_speed, 1);
        assert_eq!(summary.interpolated_speed, 1);
        let d = series.slots[1].data.unwrap();
        assert_eq!(d.speed, 82.0);
        assert_eq!(d.volume, 610.0);
    }

    #[test]
    fn long_gaps_stay_gaps() {
        let mut records = Vec::new();
        records.extend(both(8, 0, 600.0, 80.0));
        // 4 consecutive missing intervals: 08:05..08:20.
        records.extend(both(8, 25, 620.0, 84.0));
        let (series, summary) = clean(&records).unwrap();
        assert_eq!(series.len(), 6);
        assert_eq!(summary.gap_slots, 4);
        for i in 1..5 {
            assert!(series.slots[i].data.is_none());
        }
    }

    #[test]
    fn duplicates_counted_first_kept() {
        let mut records = Vec::new();
        records.extend(both(8, 0, 600.0, 80.0));
        records.push(record(8, 0, Direction::Target, 9_999.0, 10.0));
        let (series, summary) = clean(&records).unwrap();
        assert_eq!(summary.duplicate_rows, 1);
        assert_eq!(series.slots[0].data.unwrap().volume, 600.0);
    }

    #[test]
    fn multiple_stations_rejected() {
        let mut records = Vec::new();
        records.extend(both(8, 0, 600.0, 80.0));
        let mut other = record(8, 5, Direction::Target, 500.0, 70.0);
        other.station_id = "ST002".into();
        records.push(other);
        assert!(clean(&records).is_err());
    }

    #[test]
    fn aggregate_constant_block() {
        let mut records = Vec::new();
        for k in 0..3 {
            records.extend(both(9, 5 * k, 600.0, 90.0));
        }
        let (series, _) = clean(&records).unwrap();
        let agg = aggregate(&series, 3).unwrap();
        assert_eq!(agg.interval_minutes, 15);
        assert_eq!(agg.len(), 1);
        let d = agg.slots[0].data.unwrap();
        assert_eq!(d.volume, 600.0);
        assert_eq!(d.speed, 90.0);
    }

    #[test]
    fn aggregate_weighted_speed() {
        let vols = [300.0, 600.0, 900.0];
        let spds = [90.0, 80.0, 70.0];
        let mut records = Vec::new();
        for k in 0..3 {
            records.extend(both(9, 5 * k as u32, vols[k], spds[k]));
        }
        let (series, _) = clean(&records).unwrap();
        let agg = aggregate(&series, 3).unwrap();
        let d = agg.slots[0].data.unwrap();
        assert_eq!(d.volume, 600.0);
        let expected = (300.0 * 90.0 + 600.0 * 80.0 + 900.0 * 70.0) / 1800.0;
        assert!((d.speed - expected).abs() < 1e-9);
        assert!((d.speed - 76.67).abs() < 0.01);
    }

    #[test]
    fn aggregate_zero_volume_falls_back_to_simple_mean() {
        let spds = [90.0, 80.0, 70.0];
        let mut records = Vec::new();
        for (k, s) in spds.iter().enumerate() {
            records.push(record(9, 5 * k as u32, Direction::Target, 0.0, *s));
            records.push(record(9, 5 * k as u32, Direction::Reverse, 100.0, 60.0));
        }
        let (series, _) = clean(&records).unwrap();
        let agg = aggregate(&series, 3).unwrap();
        let d = agg.slots[0].data.unwrap();
        assert_eq!(d.volume, 0.0);
        assert_eq!(d.speed, 80.0);
    }

    #[test]
    fn aggregate_gap_block_produces_gap() {
        let mut records = Vec::new();
        for k in 0..6 {
            records.extend(both(9, 5 * k, if k < 3 { 600.0 } else { 500.0 }, 90.0));
        }
        let (mut series, _) = clean(&records).unwrap();
        series.slots[1].data = None;
        let agg = aggregate(&series, 3).unwrap();
        assert_eq!(agg.len(), 2);
        assert!(agg.slots[0].data.is_none());
        assert!(agg.slots[1].data.is_some());
    }

    #[test]
    fn aggregate_misaligned_start_rejected() {
        let mut records = Vec::new();
        for k in 0..3 {
            records.extend(both(9, 5 + 5 * k, 600.0, 90.0));
        }
        let (series, _) = clean(&records).unwrap();
        assert!(aggregate(&series, 3).is_err());
    }

    #[test]
    fn aggregation_conserves_vehicle_hours() {
        // One gap-free day at 5 minutes; vehicle-hours must match at 15/30.
        let mut records = Vec::new();
        for k in 0..288u32 {
            let (h, m) = (k / 12, (k % 12) * 5);
            let vol = 400.0 + 300.0 * ((k as f64) * 0.07).sin().abs();
            records.extend(both(h, m, vol, 80.0 + (k % 7) as f64));
        }
        let (s5, _) = clean(&records).unwrap();
        let s15 = aggregate(&s5, 3).unwrap();
        let s30 = aggregate(&s5, 6).unwrap();
        let vehicle_hours = |s: &FusedSeries| {
            let dt = s.interval_minutes as f64 / 60.0;
            s.observed().map(|(_, d)| d.volume * dt).sum::<f64>()
        };
        let base = vehicle_hours(&s5);
        assert!((vehicle_hours(&s15) - base).abs() < 1e-6);
        assert!((vehicle_hours(&s30) - base).abs() < 1e-6);
    }

    #[test]
    fn majority_weather_earliest_wins_ties() {
        let w = majority_weather([Weather::Snowy, Weather::Rainy, Weather::Rainy, Weather::Snowy].into_iter());
        assert_eq!(w, Weather::Snowy);
        let w = majority_weather([Weather::Sunny, Weather::Snowy, Weather::Snowy].into_iter());
        assert_eq!(w, Weather::Snowy);
    }

    #[test]
    fn empty_records_give_empty_series() {
        let (series, summary) = clean(&[]).unwrap();
        assert!(series.is_empty());
        assert_eq!(summary.rows_in, 0);
    }
}
