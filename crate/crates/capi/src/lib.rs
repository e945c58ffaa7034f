//! C ABI for the ww-spectra toolkit.
//!
//! The surface follows the usual opaque-handle pattern: sources and
//! schedules are created through constructors that return heap pointers,
//! every fallible call returns a `WwStatus`, and the last error message is
//! kept per thread for retrieval with `ww_last_error_message`. Report
//! payloads cross the boundary as JSON strings (the same payloads the CLI
//! emits), which keeps the binding surface small and versioned by the
//! schemas shipped in `schemas/`.
//!
//! The header `include/ww_spectra.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ww_spectra::folner::FolnerSchedule;
use ww_spectra::spectrum::Threshold;
use ww_spectra::wwpoint::{CertVerdict, CertifyParams};
use ww_spectra::{CylinderObservable, PointSource, Window};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ComputeError = 4,
    Panic = 5,
    /// A certification ran to completion and the verdict is `refuted`.
    Refuted = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(sanitized));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// An opaque validated point source.
pub struct WwSource {
    inner: PointSource,
}

/// An opaque averaging schedule.
pub struct WwSchedule {
    inner: FolnerSchedule,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, WwStatus> {
    if ptr.is_null() {
        set_error("null pointer argument".into());
        return Err(WwStatus::NullPointer);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        WwStatus::InvalidUtf8
    })
}

fn guard<F: FnOnce() -> WwStatus>(f: F) -> WwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            WwStatus::Panic
        }
    }
}

fn export_string(out: *mut *mut c_char, value: String) -> WwStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return WwStatus::NullPointer;
    }
    match CString::new(value) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            WwStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL".into());
            WwStatus::ComputeError
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ww_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// The last error message on this thread, or NULL. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn ww_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Free a string returned through a `char**` output parameter.
///
/// # Safety
/// `ptr` must be NULL or a pointer previously returned by this library,
/// and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ww_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(unsafe { CString::from_raw(ptr) });
    }
}

/// Create a point source from a textual descriptor such as `fibonacci`,
/// `periodic:ab`, `rotation:golden`, or `bernoulli:0.5:7`.
///
/// # Safety
/// `descriptor` must be a NUL-terminated string; `out` must be a valid
/// pointer. On success `*out` owns the source and must be released with
/// `ww_source_free`.
#[no_mangle]
pub unsafe extern "C" fn ww_source_new(
    descriptor: *const c_char,
    out: *mut *mut WwSource,
) -> WwStatus {
    guard(|| {
        clear_error();
        let descriptor = match unsafe { read_str(descriptor) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        if out.is_null() {
            set_error("null output pointer".into());
            return WwStatus::NullPointer;
        }
        match PointSource::from_descriptor(descriptor) {
            Ok(source) => {
                unsafe { *out = Box::into_raw(Box::new(WwSource { inner: source })) };
                WwStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                WwStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `source` must be NULL or a pointer from `ww_source_new`, not used after.
#[no_mangle]
pub unsafe extern "C" fn ww_source_free(source: *mut WwSource) {
    if !source.is_null() {
        drop(unsafe { Box::from_raw(source) });
    }
}

/// Materialize orbit symbols over [lo, hi) into `buffer` (one byte per
/// site; the caller provides `hi - lo` bytes).
///
/// # Safety
/// `source` must come from `ww_source_new`; `buffer` must hold at least
/// `hi - lo` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ww_source_symbols(
    source: *const WwSource,
    lo: i64,
    hi: i64,
    buffer: *mut u8,
) -> WwStatus {
    guard(|| {
        clear_error();
        if source.is_null() || buffer.is_null() {
            set_error("null pointer argument".into());
            return WwStatus::NullPointer;
        }
        let window = match Window::new(lo, hi) {
            Ok(w) => w,
            Err(err) => {
                set_error(err.to_string());
                return WwStatus::InvalidArgument;
            }
        };
        match unsafe { &*source }.inner.symbols(window) {
            Ok(symbols) => {
                unsafe {
                    ptr::copy_nonoverlapping(symbols.as_ptr(), buffer, symbols.len());
                }
                WwStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                WwStatus::ComputeError
            }
        }
    })
}

/// Create a one-sided (`symmetric = 0`) or symmetric (`symmetric != 0`)
/// schedule with scales 2^lo_exp, 2^(lo_exp+2), …, 2^hi_exp.
///
/// # Safety
/// `out` must be valid; release the result with `ww_schedule_free`.
#[no_mangle]
pub unsafe extern "C" fn ww_schedule_new(
    lo_exp: u32,
    hi_exp: u32,
    symmetric: i32,
    out: *mut *mut WwSchedule,
) -> WwStatus {
    guard(|| {
        clear_error();
        if out.is_null() {
            set_error("null output pointer".into());
            return WwStatus::NullPointer;
        }
        let kind = if symmetric != 0 {
            ww_spectra::folner::ScheduleKind::Symmetric
        } else {
            ww_spectra::folner::ScheduleKind::OneSided
        };
        match FolnerSchedule::geometric(kind, lo_exp, hi_exp, 2) {
            Ok(schedule) => {
                unsafe { *out = Box::into_raw(Box::new(WwSchedule { inner: schedule })) };
                WwStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                WwStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `schedule` must be NULL or a pointer from `ww_schedule_new`, not used after.
#[no_mangle]
pub unsafe extern "C" fn ww_schedule_free(schedule: *mut WwSchedule) {
    if !schedule.is_null() {
        drop(unsafe { Box::from_raw(schedule) });
    }
}

fn parse_observable(descriptor: &str) -> Result<CylinderObservable, WwStatus> {
    CylinderObservable::from_descriptor(descriptor).map_err(|err| {
        set_error(err.to_string());
        WwStatus::InvalidArgument
    })
}

/// Point-spectrum detection; writes the SpectrumReport JSON to `out_json`.
/// A non-positive `threshold` selects the default 0.05·rms rule.
///
/// # Safety
/// Handles must come from their constructors; `obs` must be a
/// NUL-terminated string; `out_json` receives an owned string to release
/// with `ww_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ww_scan_json(
    source: *const WwSource,
    obs: *const c_char,
    schedule: *const WwSchedule,
    grid: usize,
    threshold: f64,
    out_json: *mut *mut c_char,
) -> WwStatus {
    guard(|| {
        clear_error();
        if source.is_null() || schedule.is_null() {
            set_error("null handle".into());
            return WwStatus::NullPointer;
        }
        let obs = match unsafe { read_str(obs) }.and_then(parse_observable) {
            Ok(o) => o,
            Err(status) => return status,
        };
        let threshold = if threshold > 0.0 {
            Threshold::Absolute(threshold)
        } else {
            Threshold::default()
        };
        let report = ww_spectra::spectrum::detect_point_spectrum(
            &unsafe { &*source }.inner,
            &obs,
            &unsafe { &*schedule }.inner,
            grid,
            threshold,
        );
        match report.and_then(|r| Ok(serde_json::to_string(&r)?)) {
            Ok(json) => export_string(out_json, json),
            Err(err) => {
                set_error(err.to_string());
                WwStatus::ComputeError
            }
        }
    })
}

/// Wiener-Wintner certification with the default core and parameters;
/// writes the CertificationReport JSON. Returns `Refuted` (with the JSON
/// still written) when the verdict is refuted.
///
/// # Safety
/// As for `ww_scan_json`.
#[no_mangle]
pub unsafe extern "C" fn ww_certify_json(
    source: *const WwSource,
    schedule: *const WwSchedule,
    eps: f64,
    out_json: *mut *mut c_char,
) -> WwStatus {
    guard(|| {
        clear_error();
        if source.is_null() || schedule.is_null() {
            set_error("null handle".into());
            return WwStatus::NullPointer;
        }
        let source = &unsafe { &*source }.inner;
        let schedule = &unsafe { &*schedule }.inner;
        let result = (|| -> ww_spectra::Result<(String, CertVerdict)> {
            let core = ww_spectra::wwpoint::default_core(source, 1)?;
            let mut params = CertifyParams::for_schedule(schedule);
            if eps > 0.0 {
                params.eps_ap = eps;
            }
            let report = ww_spectra::wwpoint::ww_certify(source, &core, schedule, &params)?;
            Ok((serde_json::to_string(&report)?, report.verdict))
        })();
        match result {
            Ok((json, verdict)) => {
                let status = export_string(out_json, json);
                if status == WwStatus::Ok && verdict == CertVerdict::Refuted {
                    WwStatus::Refuted
                } else {
                    status
                }
            }
            Err(err) => {
                set_error(err.to_string());
                WwStatus::ComputeError
            }
        }
    })
}

/// Diffraction of the comb obtained by weighting the source's symbols;
/// writes the DiffractionReport JSON.
///
/// # Safety
/// As for `ww_scan_json`; `weights` is a descriptor such as `a=1,b=0`.
#[no_mangle]
pub unsafe extern "C" fn ww_diffract_json(
    source: *const WwSource,
    weights: *const c_char,
    schedule: *const WwSchedule,
    grid: usize,
    threshold: f64,
    max_lag: i64,
    out_json: *mut *mut c_char,
) -> WwStatus {
    guard(|| {
        clear_error();
        if source.is_null() || schedule.is_null() {
            set_error("null handle".into());
            return WwStatus::NullPointer;
        }
        let weights = match unsafe { read_str(weights) } {
            Ok(w) => w,
            Err(status) => return status,
        };
        let threshold = if threshold > 0.0 {
            Threshold::Absolute(threshold)
        } else {
            Threshold::default()
        };
        let result = (|| -> ww_spectra::Result<String> {
            let map = ww_spectra::diffraction::WeightMap::from_descriptor(weights)?;
            let report = ww_spectra::diffraction::diffraction_report(
                &unsafe { &*source }.inner,
                &map,
                &unsafe { &*schedule }.inner,
                grid,
                threshold,
                max_lag,
            )?;
            Ok(serde_json::to_string(&report)?)
        })();
        match result {
            Ok(json) => export_string(out_json, json),
            Err(err) => {
                set_error(err.to_string());
                WwStatus::ComputeError
            }
        }
    })
}

/// Følner audit of a symmetric-interval family 1..=n_max; writes the
/// TemperednessReport JSON.
///
/// # Safety
/// `out_json` receives an owned string to release with `ww_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ww_folner_json(n_max: usize, out_json: *mut *mut c_char) -> WwStatus {
    guard(|| {
        clear_error();
        let result = (|| -> ww_spectra::Result<String> {
            let scales: Vec<i64> = (1..=n_max as i64).collect();
            let schedule = FolnerSchedule::symmetric(&scales)?;
            let report = ww_spectra::folner::shulman_trace(&schedule, n_max)?;
            Ok(serde_json::to_string(&report)?)
        })();
        match result {
            Ok(json) => export_string(out_json, json),
            Err(err) => {
                set_error(err.to_string());
                WwStatus::InvalidArgument
            }
        }
    })
}
