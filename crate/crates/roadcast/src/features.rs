//! Exogenous feature construction: cyclic and one-hot calendar encodings,
//! binary flags, reverse-direction features, min-max normalization, and the
//! holiday calendar file.
//!
//! Two encodings of the temporal categoricals are supported. With the five
//! lagged (volume, speed) pairs included, the model input dimension is
//! 10 + 24 = 34 (cyclic) or 10 + 35 = 45 (one-hot):
//!
//! * cyclic (24): (sin, cos) of month/12, day/31, season/4, day-of-week/7,
//!   hour288/288, hour/24 (12 values); flags 7-21, day-night, one-way,
//!   double-capacity (4); holiday one-hot (3); weather one-hot (3);
//!   reverse (volume, speed) (2).
//! * one-hot (35): month (12), season (4), day-of-week (7), holiday (3),
//!   weather (3); the same 4 flags; reverse pair (2). Day and hour are not
//!   one-hot encoded: a 31+24-wide block would dwarf the rest of the input,
//!   and day level carries little signal.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Exogenous vector width per encoding.
pub const CYCLIC_EXO_DIM: usize = 24;
pub const ONEHOT_EXO_DIM: usize = 35;

/// How the temporal categorical variables enter the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    Cyclic,
    OneHot,
}

impl EncodingMode {
    pub fn exo_dim(self) -> usize {
        match self {
            EncodingMode::Cyclic => CYCLIC_EXO_DIM,
            EncodingMode::OneHot => ONEHOT_EXO_DIM,
        }
    }

    /// Distinct model input variables: 5 lags x (V, S) plus the exo vector.
    pub fn window_input_dim(self) -> usize {
        10 + self.exo_dim()
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cyclic" => Ok(EncodingMode::Cyclic),
            "onehot" | "one-hot" => Ok(EncodingMode::OneHot),
            other => Err(Error::InvalidArgument(format!(
                "unknown encoding '{other}' (expected cyclic or onehot)"
            ))),
        }
    }
}

impl fmt::Display for EncodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodingMode::Cyclic => write!(f, "cyclic"),
            EncodingMode::OneHot => write!(f, "onehot"),
        }
    }
}

/// Holiday classification of a date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolidayClass {
    Calendar,
    Weekend,
    NotHoliday,
}

impl HolidayClass {
    /// 1-based index into the one-hot block (calendar, weekend, not).
    pub fn index(self) -> u32 {
        match self {
            HolidayClass::Calendar => 1,
            HolidayClass::Weekend => 2,
            HolidayClass::NotHoliday => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HolidayClass::Calendar => "calendar",
            HolidayClass::Weekend => "weekend",
            HolidayClass::NotHoliday => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "calendar" => Ok(HolidayClass::Calendar),
            "weekend" => Ok(HolidayClass::Weekend),
            "none" | "not-holiday" => Ok(HolidayClass::NotHoliday),
            other => Err(Error::Data(format!("unknown holiday class '{other}'"))),
        }
    }
}

/// Weather condition of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    Rainy,
    Sunny,
    Snowy,
}

impl Weather {
    /// 1-based index into the one-hot block (rainy, sunny, snowy).
    pub fn index(self) -> u32 {
        match self {
            Weather::Rainy => 1,
            Weather::Sunny => 2,
            Weather::Snowy => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Weather::Rainy => "rainy",
            Weather::Sunny => "sunny",
            Weather::Snowy => "snowy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rainy" => Ok(Weather::Rainy),
            "sunny" => Ok(Weather::Sunny),
            "snowy" => Ok(Weather::Snowy),
            other => Err(Error::Data(format!("unknown weather '{other}'"))),
        }
    }
}

/// Calendar and road-state context of one interval, the raw material for
/// [`build_exo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarContext {
    /// 1-12.
    pub month: u32,
    /// Day of month, 1-31.
    pub day: u32,
    /// 1 spring, 2 summer, 3 fall, 4 winter.
    pub season: u32,
    /// 1 Monday .. 7 Sunday.
    pub day_of_week: u32,
    /// Which 5-minute interval of the day, 1-288. Cyclic-only feature.
    pub hour288: u32,
    /// 1-24 (clock hour + 1).
    pub hour: u32,
    /// Interval lies in [07:00, 21:00).
    pub is_7_21: bool,
    /// Daytime approximation: interval lies in [06:00, 18:00).
    pub is_day: bool,
    pub holiday: HolidayClass,
    pub weather: Weather,
    /// Target direction closed so the reverse direction can use both lanes.
    pub one_way: bool,
    /// Target direction granted both lanes.
    pub double_capacity: bool,
}

impl CalendarContext {
    /// Derives the calendar fields from a timestamp; road state, weather,
    /// and holiday class are supplied by the caller.
    pub fn from_timestamp(
        ts: NaiveDateTime,
        holiday: HolidayClass,
        weather: Weather,
        one_way: bool,
        double_capacity: bool,
    ) -> Self {
        let clock_hour = ts.hour();
        CalendarContext {
            month: ts.month(),
            day: ts.day(),
            season: season_of_month(ts.month()),
            day_of_week: ts.weekday().number_from_monday(),
            hour288: (clock_hour * 60 + ts.minute()) / 5 + 1,
            hour: clock_hour + 1,
            is_7_21: (7..21).contains(&clock_hour),
            is_day: (6..18).contains(&clock_hour),
            holiday,
            weather,
            one_way,
            double_capacity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("month", self.month, 12),
            ("day", self.day, 31),
            ("season", self.season, 4),
            ("day_of_week", self.day_of_week, 7),
            ("hour288", self.hour288, 288),
            ("hour", self.hour, 24),
        ];
        for (name, v, max) in checks {
            if v < 1 || v > max {
                return Err(Error::Data(format!(
                    "calendar context field {name} = {v} outside 1..={max}"
                )));
            }
        }
        // hour288 and hour must describe the same clock hour.
        if (self.hour288 - 1) / 12 + 1 != self.hour {
            return Err(Error::Data(format!(
                "hour288 = {} inconsistent with hour = {}",
                self.hour288, self.hour
            )));
        }
        Ok(())
    }
}

/// 1 spring (Mar-May), 2 summer (Jun-Aug), 3 fall (Sep-Nov), 4 winter.
pub fn season_of_month(month: u32) -> u32 {
    match month {
        3..=5 => 1,
        6..=8 => 2,
        9..=11 => 3,
        _ => 4,
    }
}

/// (sin, cos) of the phase angle `2*pi*(index-1)/period`, so the first
/// category sits at angle zero and period endpoints are adjacent on the
/// unit circle.
pub fn encode_cyclic(index: u32, period: u32) -> Result<(f64, f64)> {
    if index < 1 || index > period {
        return Err(Error::InvalidArgument(format!(
            "cyclic index {index} outside 1..={period}"
        )));
    }
    let angle = 2.0 * PI * f64::from(index - 1) / f64::from(period);
    Ok((angle.sin(), angle.cos()))
}

/// Indicator vector with a single 1.0 at position `index - 1`.
pub fn encode_onehot(index: u32, cardinality: u32) -> Result<Vec<f64>> {
    if index < 1 || index > cardinality {
        return Err(Error::InvalidArgument(format!(
            "one-hot index {index} outside 1..={cardinality}"
        )));
    }
    let mut v = vec![0.0; cardinality as usize];
    v[(index - 1) as usize] = 1.0;
    Ok(v)
}

/// Builds the exogenous feature vector X_t for one interval.
///
/// `reverse` is the already-normalized (volume, speed) of the opposite
/// direction at the same interval. See module docs for the layout.
pub fn build_exo(ctx: &CalendarContext, reverse: (f64, f64), mode: EncodingMode) -> Result<Vector> {
    ctx.validate()?;
    let mut out = Vec::with_capacity(mode.exo_dim());
    let flag = |b: bool| if b { 1.0 } else { 0.0 };

    match mode {
        EncodingMode::Cyclic => {
            for (idx, period) in [
                (ctx.month, 12),
                (ctx.day, 31),
                (ctx.season, 4),
                (ctx.day_of_week, 7),
                (ctx.hour288, 288),
                (ctx.hour, 24),
            ] {
                let (s, c) = encode_cyclic(idx, period)?;
                out.push(s);
                out.push(c);
            }
        }
        EncodingMode::OneHot => {
            out.extend(encode_onehot(ctx.month, 12)?);
            out.extend(encode_onehot(ctx.season, 4)?);
            out.extend(encode_onehot(ctx.day_of_week, 7)?);
            out.extend(encode_onehot(ctx.holiday.index(), 3)?);
            out.extend(encode_onehot(ctx.weather.index(), 3)?);
        }
    }

    out.push(flag(ctx.is_7_21));
    out.push(flag(ctx.is_day));
    out.push(flag(ctx.one_way));
    out.push(flag(ctx.double_capacity));

    if mode == EncodingMode::Cyclic {
        out.extend(encode_onehot(ctx.holiday.index(), 3)?);
        out.extend(encode_onehot(ctx.weather.index(), 3)?);
    }

    out.push(reverse.0);
    out.push(reverse.1);

    debug_assert_eq!(out.len(), mode.exo_dim());
    Ok(Vector::from_vec(out))
}

/// Min-max statistics of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub min: f64,
    pub max: f64,
}

impl Channel {
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a f64>, name: &str) -> Result<Channel> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::Data(format!("channel {name}: no values to fit")));
        }
        if max <= min {
            return Err(Error::Data(format!(
                "channel {name}: degenerate range (min = max = {min})"
            )));
        }
        Ok(Channel { min, max })
    }

    /// `(x - min) / (max - min)`. Values outside the fitted range map
    /// outside [0, 1] and are deliberately not clamped.
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.min + y * (self.max - self.min)
    }
}

/// Per-channel min-max statistics, fitted exclusively on the training range
/// of the active split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub volume: Channel,
    pub speed: Channel,
    pub volume_reverse: Channel,
    pub speed_reverse: Channel,
}

impl Normalizer {
    pub fn fit(
        volumes: &[f64],
        speeds: &[f64],
        reverse_volumes: &[f64],
        reverse_speeds: &[f64],
    ) -> Result<Normalizer> {
        Ok(Normalizer {
            volume: Channel::fit(volumes, "volume")?,
            speed: Channel::fit(speeds, "speed")?,
            volume_reverse: Channel::fit(reverse_volumes, "volume_reverse")?,
            speed_reverse: Channel::fit(reverse_speeds, "speed_reverse")?,
        })
    }
}

/// Holiday calendar file: CSV with columns `date` (ISO-8601) and
/// `class` in {calendar, weekend}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HolidayCalendar {
    days: BTreeMap<NaiveDate, HolidayClass>,
}

impl HolidayCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, date: NaiveDate, class: HolidayClass) {
        if class != HolidayClass::NotHoliday {
            self.days.insert(date, class);
        }
    }

    pub fn classify(&self, date: NaiveDate) -> HolidayClass {
        self.days.get(&date).copied().unwrap_or(HolidayClass::NotHoliday)
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn load(path: &Path) -> Result<HolidayCalendar> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Format(e.to_string()),
        })?;
        let headers = rdr
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["date", "class"] {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                details: format!("expected header 'date,class', got '{}'", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut cal = HolidayCalendar::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| {
                Error::Data(format!("holiday file row {}: bad date '{}': {e}", i + 2, &rec[0]))
            })?;
            let class = HolidayClass::parse(&rec[1])
                .map_err(|e| Error::Data(format!("holiday file row {}: {e}", i + 2)))?;
            cal.insert(date, class);
        }
        Ok(cal)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        wtr.write_record(["date", "class"])
            .map_err(|e| Error::Format(e.to_string()))?;
        for (date, class) in &self.days {
            wtr.write_record([date.format("%Y-%m-%d").to_string(), class.label().to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
