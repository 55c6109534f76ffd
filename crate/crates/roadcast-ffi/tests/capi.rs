//! Exercises the C surface exactly as a foreign caller would: raw pointers,
//! NUL-terminated paths, and status codes.

use std::ffi::{CStr, CString};
use std::ptr;

use roadcast::checkpoint::Checkpoint;
use roadcast::features::{CalendarContext, Channel, EncodingMode, HolidayClass, Normalizer, Weather};
use roadcast::network::{init_params, ModelKind, ModelVariant};

use roadcast_ffi::{
    rc_last_error_message, rc_predictor_free, rc_predictor_input_dim, rc_predictor_interval_minutes,
    rc_predictor_is_attention, rc_predictor_load, rc_predictor_predict, rc_version, RcCalendar,
    RcPredictor, RcStatus, RC_LAG_VALUES,
};

fn write_checkpoint(dir: &std::path::Path, kind: ModelKind) -> std::path::PathBuf {
    let variant = ModelVariant::new(kind, EncodingMode::Cyclic, 15).unwrap();
    let params = init_params(variant, 11);
    let normalizer = Normalizer {
        volume: Channel { min: 0.0, max: 2500.0 },
        speed: Channel { min: 15.0, max: 100.0 },
        volume_reverse: Channel { min: 0.0, max: 2200.0 },
        speed_reverse: Channel { min: 15.0, max: 100.0 },
    };
    let ckpt = Checkpoint::new(&params, EncodingMode::Cyclic, 15, 11, 1, "ffi-test".into(), normalizer);
    let path = dir.join(format!("checkpoint_{}.json", kind.label()));
    ckpt.save(&path).unwrap();
    path
}

fn calendar() -> RcCalendar {
    RcCalendar {
        month: 5,
        day: 14,
        season: 1,
        day_of_week: 1,
        hour288: 196,
        hour: 17,
        is_7_21: 1,
        is_day: 1,
        holiday: 3,
        weather: 2,
        one_way: 0,
        double_capacity: 0,
    }
}

const LAGS: [f64; RC_LAG_VALUES] = [
    420.0, 82.0, 480.0, 80.5, 510.0, 79.0, 545.0, 78.0, 600.0, 76.0,
];

#[test]
fn load_predict_free_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_checkpoint(dir.path(), ModelKind::ALstm);
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    unsafe {
        let mut handle: *mut RcPredictor = ptr::null_mut();
        assert_eq!(rc_predictor_load(cpath.as_ptr(), &mut handle), RcStatus::Ok);
        assert!(!handle.is_null());
        assert_eq!(rc_predictor_input_dim(handle), 34);
        assert_eq!(rc_predictor_interval_minutes(handle), 15);
        assert_eq!(rc_predictor_is_attention(handle), 1);

        let mut volume = 0.0;
        let mut speed = 0.0;
        let cal = calendar();
        let status = rc_predictor_predict(
            handle,
            LAGS.as_ptr(),
            512.0,
            84.0,
            &cal,
            &mut volume,
            &mut speed,
        );
        assert_eq!(status, RcStatus::Ok);

        // The FFI path must agree exactly with the library path.
        let ckpt = Checkpoint::load(&path).unwrap();
        let lag_pairs = std::array::from_fn(|k| [LAGS[2 * k], LAGS[2 * k + 1]]);
        let ctx = CalendarContext {
            month: 5,
            day: 14,
            season: 1,
            day_of_week: 1,
            hour288: 196,
            hour: 17,
            is_7_21: true,
            is_day: true,
            holiday: HolidayClass::NotHoliday,
            weather: Weather::Sunny,
            one_way: false,
            double_capacity: false,
        };
        let (expect_v, expect_s) = ckpt.predict_raw(&lag_pairs, (512.0, 84.0), &ctx).unwrap();
        assert_eq!(volume, expect_v);
        assert_eq!(speed, expect_s);
        assert!(volume > 0.0 && volume < 2500.0);
        assert!(speed > 15.0 && speed < 100.0);

        rc_predictor_free(handle);
    }
}

#[test]
fn baseline_checkpoint_reports_kind() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_checkpoint(dir.path(), ModelKind::Lstm);
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut handle: *mut RcPredictor = ptr::null_mut();
        assert_eq!(rc_predictor_load(cpath.as_ptr(), &mut handle), RcStatus::Ok);
        assert_eq!(rc_predictor_is_attention(handle), 0);
        rc_predictor_free(handle);
    }
}

#[test]
fn error_paths_set_status_and_message() {
    unsafe {
        // Null arguments.
        assert_eq!(
            rc_predictor_load(ptr::null(), ptr::null_mut()),
            RcStatus::NullArgument
        );

        // Missing file.
        let mut handle: *mut RcPredictor = ptr::null_mut();
        let missing = CString::new("/nonexistent/model.json").unwrap();
        assert_eq!(
            rc_predictor_load(missing.as_ptr(), &mut handle),
            RcStatus::IoError
        );
        assert!(handle.is_null());
        let msg = CStr::from_ptr(rc_last_error_message()).to_str().unwrap();
        assert!(msg.contains("nonexistent"), "message: {msg}");

        // Bad calendar code.
        let dir = tempfile::tempdir().unwrap();
        let path = write_checkpoint(dir.path(), ModelKind::ALstm);
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(rc_predictor_load(cpath.as_ptr(), &mut handle), RcStatus::Ok);
        let mut cal = calendar();
        cal.weather = 9;
        let (mut v, mut s) = (0.0, 0.0);
        assert_eq!(
            rc_predictor_predict(handle, LAGS.as_ptr(), 512.0, 84.0, &cal, &mut v, &mut s),
            RcStatus::InvalidArgument
        );
        let mut cal = calendar();
        cal.month = 13;
        assert_eq!(
            rc_predictor_predict(handle, LAGS.as_ptr(), 512.0, 84.0, &cal, &mut v, &mut s),
            RcStatus::InvalidArgument
        );

        // Null handle and null outputs.
        assert_eq!(
            rc_predictor_predict(ptr::null(), LAGS.as_ptr(), 0.0, 0.0, &calendar(), &mut v, &mut s),
            RcStatus::NullArgument
        );
        assert_eq!(
            rc_predictor_predict(handle, LAGS.as_ptr(), 0.0, 0.0, &calendar(), ptr::null_mut(), &mut s),
            RcStatus::NullArgument
        );
        rc_predictor_free(handle);
        rc_predictor_free(ptr::null_mut());
    }

    // Version string is a readable semver.
    let version = unsafe { CStr::from_ptr(rc_version()) }.to_str().unwrap();
    assert!(version.starts_with("0.1"));
}

#[test]
fn generated_header_is_complete() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/roadcast.h"),
    )
    .unwrap();
    for needle in [
        "#define RC_LAG_VALUES 10",
        "typedef struct RcPredictor RcPredictor;",
        "RC_STATUS_OK",
        "rc_predictor_load",
        "rc_predictor_predict",
        "rc_predictor_free",
        "rc_last_error_message",
    ] {
        assert!(header.contains(needle), "header is missing: {needle}");
    }
}
