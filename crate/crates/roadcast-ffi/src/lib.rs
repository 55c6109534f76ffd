//! C ABI over the forecasting core: load a checkpoint file into an opaque
//! predictor handle, feed it raw lag values and the calendar context of the
//! interval to predict, and get denormalized volume/speed back.
//!
//! Conventions:
//! * Functions return an [`RcStatus`]; anything other than `RC_STATUS_OK`
//!   leaves a message retrievable with [`rc_last_error_message`] (valid on
//!   the calling thread until its next `rc_*` call).
//! * Handles come from [`rc_predictor_load`] and must be released with
//!   [`rc_predictor_free`]. All functions tolerate null handles.
//! * The generated header lives at `include/roadcast.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use roadcast::checkpoint::Checkpoint;
use roadcast::error::Error;
use roadcast::features::{CalendarContext, HolidayClass, Weather};
use roadcast::network::{ModelKind, LAG_STEPS};

/// Number of doubles in the lag array: five (volume, speed) pairs, oldest
/// first, raw units (vehicles/hour and km/h).
pub const RC_LAG_VALUES: usize = 10;
const _: () = assert!(RC_LAG_VALUES == 2 * LAG_STEPS);

/// Result of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    IoError = 3,
    FormatError = 4,
    DimensionError = 5,
    InternalError = 6,
}

/// Opaque predictor handle: a loaded checkpoint (weights, layer dims,
/// feature encoding, and the normalization statistics of its training
/// split).
pub struct RcPredictor {
    inner: Checkpoint,
}

/// Calendar and road-state context of the interval to predict.
///
/// `holiday`: 1 calendar holiday, 2 weekend holiday, 3 not a holiday.
/// `weather`: 1 rainy, 2 sunny, 3 snowy. Flags are 0/1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RcCalendar {
    /// 1-12.
    pub month: i32,
    /// 1-31.
    pub day: i32,
    /// 1 spring .. 4 winter.
    pub season: i32,
    /// 1 Monday .. 7 Sunday.
    pub day_of_week: i32,
    /// Which 5-minute interval of the day, 1-288.
    pub hour288: i32,
    /// 1-24.
    pub hour: i32,
    pub is_7_21: i32,
    pub is_day: i32,
    pub holiday: i32,
    pub weather: i32,
    pub one_way: i32,
    pub double_capacity: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> RcStatus {
    match err {
        Error::Io { .. } => RcStatus::IoError,
        Error::Format(_) | Error::Schema { .. } => RcStatus::FormatError,
        Error::Dimension { .. } => RcStatus::DimensionError,
        Error::Data(_) | Error::InvalidArgument(_) => RcStatus::InvalidArgument,
        Error::Internal(_) => RcStatus::InternalError,
    }
}

fn fail(err: &Error) -> RcStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next `rc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Loads a checkpoint file (JSON produced by `roadcast train`) into a new
/// predictor. On success writes the handle to `out`.
///
/// # Safety
/// `path` must point to a NUL-terminated string; `out` must be a valid
/// pointer. The returned handle must be released with [`rc_predictor_free`].
#[no_mangle]
pub unsafe extern "C" fn rc_predictor_load(
    path: *const c_char,
    out: *mut *mut RcPredictor,
) -> RcStatus {
    if path.is_null() || out.is_null() {
        set_error("rc_predictor_load: null argument");
        return RcStatus::NullArgument;
    }
    *out = std::ptr::null_mut();
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("rc_predictor_load: path is not valid UTF-8");
            return RcStatus::InvalidArgument;
        }
    };
    match Checkpoint::load(Path::new(path)) {
        Ok(ckpt) => {
            *out = Box::into_raw(Box::new(RcPredictor { inner: ckpt }));
            RcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Releases a predictor handle. Null is a no-op.
///
/// # Safety
/// `p` must be null or a handle returned by [`rc_predictor_load`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rc_predictor_free(p: *mut RcPredictor) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Total model input width (10 lag variables plus the exogenous vector):
/// 34 with cyclic encoding, 45 with one-hot. Returns 0 on a null handle.
///
/// # Safety
/// `p` must be null or a live handle from [`rc_predictor_load`].
#[no_mangle]
pub unsafe extern "C" fn rc_predictor_input_dim(p: *const RcPredictor) -> usize {
    match p.as_ref() {
        Some(p) => 2 * LAG_STEPS + p.inner.dims.exo_dim,
        None => 0,
    }
}

/// Series interval of the model in minutes (5, 15, or 30); 0 on null.
///
/// # Safety
/// `p` must be null or a live handle from [`rc_predictor_load`].
#[no_mangle]
pub unsafe extern "C" fn rc_predictor_interval_minutes(p: *const RcPredictor) -> u32 {
    match p.as_ref() {
        Some(p) => p.inner.interval_minutes,
        None => 0,
    }
}

/// 1 when the checkpoint is the attention variant, 0 for the plain LSTM,
/// -1 on a null handle.
///
/// # Safety
/// `p` must be null or a live handle from [`rc_predictor_load`].
#[no_mangle]
pub unsafe extern "C" fn rc_predictor_is_attention(p: *const RcPredictor) -> i32 {
    match p.as_ref() {
        Some(p) => i32::from(p.inner.kind == ModelKind::ALstm),
        None => -1,
    }
}

fn calendar_to_context(c: &RcCalendar) -> Result<CalendarContext, Error> {
    let holiday = match c.holiday {
        1 => HolidayClass::Calendar,
        2 => HolidayClass::Weekend,
        3 => HolidayClass::NotHoliday,
        other => {
            return Err(Error::InvalidArgument(format!(
                "holiday code {other} (expected 1, 2, or 3)"
            )))
        }
    };
    let weather = match c.weather {
        1 => Weather::Rainy,
        2 => Weather::Sunny,
        3 => Weather::Snowy,
        other => {
            return Err(Error::InvalidArgument(format!(
                "weather code {other} (expected 1, 2, or 3)"
            )))
        }
    };
    let as_u32 = |name: &str, v: i32| -> Result<u32, Error> {
        u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{name} = {v} is negative")))
    };
    let ctx = CalendarContext {
        month: as_u32("month", c.month)?,
        day: as_u32("day", c.day)?,
        season: as_u32("season", c.season)?,
        day_of_week: as_u32("day_of_week", c.day_of_week)?,
        hour288: as_u32("hour288", c.hour288)?,
        hour: as_u32("hour", c.hour)?,
        is_7_21: c.is_7_21 != 0,
        is_day: c.is_day != 0,
        holiday,
        weather,
        one_way: c.one_way != 0,
        double_capacity: c.double_capacity != 0,
    };
    ctx.validate()?;
    Ok(ctx)
}

/// Predicts the next interval.
///
/// `lags` points to [`RC_LAG_VALUES`] doubles: five (volume, speed) pairs,
/// oldest first, in vehicles/hour and km/h. `reverse_volume` /
/// `reverse_speed` are the opposite direction's values at the predicted
/// interval. Outputs are denormalized vehicles/hour and km/h.
///
/// # Safety
/// `p` must be a live handle; `lags` must point to at least
/// [`RC_LAG_VALUES`] readable doubles; `calendar`, `out_volume_vph`, and
/// `out_speed_kmh` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rc_predictor_predict(
    p: *const RcPredictor,
    lags: *const f64,
    reverse_volume: f64,
    reverse_speed: f64,
    calendar: *const RcCalendar,
    out_volume_vph: *mut f64,
    out_speed_kmh: *mut f64,
) -> RcStatus {
    let Some(p) = p.as_ref() else {
        set_error("rc_predictor_predict: null handle");
        return RcStatus::NullArgument;
    };
    if lags.is_null() || calendar.is_null() || out_volume_vph.is_null() || out_speed_kmh.is_null() {
        set_error("rc_predictor_predict: null argument");
        return RcStatus::NullArgument;
    }
    let flat = std::slice::from_raw_parts(lags, RC_LAG_VALUES);
    if flat.iter().any(|v| !v.is_finite()) {
        set_error("rc_predictor_predict: non-finite lag value");
        return RcStatus::InvalidArgument;
    }
    let lag_pairs: [[f64; 2]; LAG_STEPS] = std::array::from_fn(|k| [flat[2 * k], flat[2 * k + 1]]);
    let ctx = match calendar_to_context(&*calendar) {
        Ok(ctx) => ctx,
        Err(e) => return fail(&e),
    };
    match p.inner.predict_raw(&lag_pairs, (reverse_volume, reverse_speed), &ctx) {
        Ok((v, s)) => {
            *out_volume_vph = v;
            *out_speed_kmh = s;
            RcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
