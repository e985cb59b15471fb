//! C ABI over the core crate: load trained model files, run single-window
//! inference on raw feature vectors, and drive the online adapter.
//!
//! Handles are opaque pointers owned by this library; every fallible call
//! returns a status code and leaves a message for
//! [`mtnam_last_error_message`]. The matching declarations live in
//! `include/mtnam.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mtnam::model_io;
use mtnam::mtnam::MtNamModel;
use mtnam::nam::NamModel;
use mtnam::t3a::AdapterState;
use mtnam::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtnamStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    Numeric = 6,
    Internal = 7,
}

/// Opaque handle over a trained additive model.
pub struct MtnamNam(NamModel);
/// Opaque handle over a distilled tree model.
pub struct MtnamMt(MtNamModel);
/// Opaque handle over the online adapter state.
pub struct MtnamAdapter(AdapterState);

/// One adaptation step, mirrored into C.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MtnamAdaptResult {
    pub y_offline: f64,
    pub y_adjusted: f64,
    /// 1 when the window updated a centroid, 0 when gated.
    pub accepted: i32,
    /// 0 or 1 when accepted, -1 when gated.
    pub class_assigned: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> MtnamStatus {
    match err {
        Error::Io { .. } | Error::MissingInput { .. } => MtnamStatus::Io,
        Error::Format(_) | Error::Config(_) => MtnamStatus::Parse,
        Error::Invalid(msg) if msg.contains("features") || msg.contains("entries") => {
            MtnamStatus::DimensionMismatch
        }
        Error::Invalid(_) => MtnamStatus::Parse,
        Error::Numeric(_) => MtnamStatus::Numeric,
    }
}

fn guard<F: FnOnce() -> MtnamStatus>(f: F) -> MtnamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            MtnamStatus::Internal
        }
    }
}

/// # Safety
/// `path` must be a valid NUL-terminated string.
unsafe fn path_from(path: *const c_char) -> Result<&'static Path, MtnamStatus> {
    if path.is_null() {
        set_error("path is NULL");
        return Err(MtnamStatus::NullArgument);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(MtnamStatus::InvalidUtf8)
        }
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mtnam_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the most recent error on this thread. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mtnam_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

macro_rules! load_fn {
    ($(#[$doc:meta])* $fn_name:ident, $loader:path, $handle:ident) => {
        $(#[$doc])*
        /// # Safety
        /// `path` must be NUL-terminated; `out` must be a valid pointer.
        #[no_mangle]
        pub unsafe extern "C" fn $fn_name(
            path: *const c_char,
            out: *mut *mut $handle,
        ) -> MtnamStatus {
            guard(|| {
                if out.is_null() {
                    set_error("out handle is NULL");
                    return MtnamStatus::NullArgument;
                }
                let p = match path_from(path) {
                    Ok(p) => p,
                    Err(s) => return s,
                };
                match $loader(p) {
                    Ok(model) => {
                        *out = Box::into_raw(Box::new($handle(model)));
                        MtnamStatus::Ok
                    }
                    Err(e) => {
                        set_error(&e.to_string());
                        status_of(&e)
                    }
                }
            })
        }
    };
}

load_fn!(
    /// Load an additive model file produced by `mtnam train`.
    mtnam_nam_load,
    model_io::load_nam,
    MtnamNam
);
load_fn!(
    /// Load a distilled tree model file produced by `mtnam distill`.
    mtnam_mt_load,
    model_io::load_mtnam,
    MtnamMt
);

/// # Safety
/// `handle` must come from the matching load function (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn mtnam_nam_free(handle: *mut MtnamNam) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must come from the matching load function (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn mtnam_mt_free(handle: *mut MtnamMt) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of input features (0 for NULL).
///
/// # Safety
/// `handle` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mtnam_nam_num_features(handle: *const MtnamNam) -> usize {
    handle.as_ref().map_or(0, |h| h.0.m())
}

/// # Safety
/// `handle` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mtnam_mt_num_features(handle: *const MtnamMt) -> usize {
    handle.as_ref().map_or(0, |h| h.0.m())
}

/// Tree depth bound of a distilled model (0 for NULL).
///
/// # Safety
/// `handle` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn mtnam_mt_depth(handle: *const MtnamMt) -> usize {
    handle.as_ref().map_or(0, |h| h.0.depth())
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], MtnamStatus> {
    if ptr.is_null() {
        set_error("feature pointer is NULL");
        return Err(MtnamStatus::NullArgument);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

macro_rules! predict_fn {
    ($(#[$doc:meta])* $fn_name:ident, $handle:ident) => {
        $(#[$doc])*
        /// # Safety
        /// `handle` must be valid, `features` must point to `len` doubles,
        /// and `out_y` must be a valid pointer.
        #[no_mangle]
        pub unsafe extern "C" fn $fn_name(
            handle: *const $handle,
            features: *const f64,
            len: usize,
            out_y: *mut f64,
        ) -> MtnamStatus {
            guard(|| {
                let Some(h) = handle.as_ref() else {
                    set_error("model handle is NULL");
                    return MtnamStatus::NullArgument;
                };
                if out_y.is_null() {
                    set_error("out_y is NULL");
                    return MtnamStatus::NullArgument;
                }
                let x = match slice_arg(features, len) {
                    Ok(x) => x,
                    Err(s) => return s,
                };
                match h.0.predict_raw(x) {
                    Ok(y) => {
                        *out_y = y;
                        MtnamStatus::Ok
                    }
                    Err(e) => {
                        set_error(&e.to_string());
                        status_of(&e)
                    }
                }
            })
        }
    };
}

predict_fn!(
    /// Seizure probability for one window of raw (unscaled) features; the
    /// model's embedded scaler is applied first.
    mtnam_nam_predict,
    MtnamNam
);
predict_fn!(
    /// Same as `mtnam_nam_predict` for the distilled model.
    mtnam_mt_predict,
    MtnamMt
);

macro_rules! contrib_fn {
    ($(#[$doc:meta])* $fn_name:ident, $handle:ident) => {
        $(#[$doc])*
        /// # Safety
        /// `handle` must be valid; `features` and `out_contrib` must point
        /// to `len` doubles each.
        #[no_mangle]
        pub unsafe extern "C" fn $fn_name(
            handle: *const $handle,
            features: *const f64,
            len: usize,
            out_contrib: *mut f64,
        ) -> MtnamStatus {
            guard(|| {
                let Some(h) = handle.as_ref() else {
                    set_error("model handle is NULL");
                    return MtnamStatus::NullArgument;
                };
                if out_contrib.is_null() {
                    set_error("out_contrib is NULL");
                    return MtnamStatus::NullArgument;
                }
                let raw = match slice_arg(features, len) {
                    Ok(x) => x,
                    Err(s) => return s,
                };
                if len != h.0.m() {
                    set_error(&format!("input has {len} features, model has {}", h.0.m()));
                    return MtnamStatus::DimensionMismatch;
                }
                let mut scaled = vec![0.0; len];
                let out = std::slice::from_raw_parts_mut(out_contrib, len);
                let scaler = scaler_of(&h.0);
                scaler.transform_into(raw, &mut scaled);
                match h.0.contributions_into(&scaled, out) {
                    Ok(_) => MtnamStatus::Ok,
                    Err(e) => {
                        set_error(&e.to_string());
                        status_of(&e)
                    }
                }
            })
        }
    };
}

trait HasScaler {
    fn scaler(&self) -> &mtnam::features::Scaler;
}
impl HasScaler for NamModel {
    fn scaler(&self) -> &mtnam::features::Scaler {
        &self.scaler
    }
}
impl HasScaler for MtNamModel {
    fn scaler(&self) -> &mtnam::features::Scaler {
        MtNamModel::scaler(self)
    }
}

fn scaler_of<M: HasScaler>(m: &M) -> &mtnam::features::Scaler {
    m.scaler()
}

contrib_fn!(
    /// Per-feature contribution vector (in the model's scaled space) for one
    /// raw feature window; feed this to `mtnam_adapter_step`.
    mtnam_nam_contributions,
    MtnamNam
);
contrib_fn!(
    /// Same as `mtnam_nam_contributions` for the distilled model.
    mtnam_mt_contributions,
    MtnamMt
);

/// Create an adapter for `m` features with entropy gate `h0` (nats).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mtnam_adapter_new(
    m: usize,
    h0: f64,
    out: *mut *mut MtnamAdapter,
) -> MtnamStatus {
    guard(|| {
        if out.is_null() {
            set_error("out handle is NULL");
            return MtnamStatus::NullArgument;
        }
        match mtnam::t3a::init_adapter(m, h0) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(MtnamAdapter(state)));
                MtnamStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `handle` must come from `mtnam_adapter_new` (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn mtnam_adapter_free(handle: *mut MtnamAdapter) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// One online step: gate on prediction entropy, update the matching class
/// centroid, and return offline plus adjusted predictions.
///
/// # Safety
/// `handle` must be valid, `contrib` must point to `len` doubles, and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mtnam_adapter_step(
    handle: *mut MtnamAdapter,
    contrib: *const f64,
    len: usize,
    out: *mut MtnamAdaptResult,
) -> MtnamStatus {
    guard(|| {
        let Some(h) = handle.as_mut() else {
            set_error("adapter handle is NULL");
            return MtnamStatus::NullArgument;
        };
        if out.is_null() {
            set_error("out is NULL");
            return MtnamStatus::NullArgument;
        }
        let c = match slice_arg(contrib, len) {
            Ok(c) => c,
            Err(s) => return s,
        };
        match h.0.step(c) {
            Ok(step) => {
                *out = MtnamAdaptResult {
                    y_offline: step.y_offline,
                    y_adjusted: step.y_adjusted,
                    accepted: i32::from(step.accepted),
                    class_assigned: match step.class_assigned {
                        None => -1,
                        Some(false) => 0,
                        Some(true) => 1,
                    },
                };
                MtnamStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}
