//! C ABI for the signlink engine.
//!
//! An engine owns a trained model and a sentence table and may be shared by
//! any number of sessions. A session consumes inbound wire records one line at
//! a time and hands back the outbound records as newline-terminated JSON.
//!
//! Every fallible call returns an [`SlStatus`]. On failure a description is
//! kept per thread and can be read with [`sl_last_error`]. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`sl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use signlink::lstm::load_model;
use signlink::service::{format_log, replay, Engine, PipelineConfig, Session, Speed};
use signlink::{Error, SentenceTable};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Malformed = 4,
    Model = 5,
    InvalidArgument = 6,
    TimestampRegression = 7,
    Panic = 8,
}

/// Opaque engine handle.
pub struct SlEngine {
    inner: Arc<Engine>,
}

/// Opaque session handle.
pub struct SlSession {
    inner: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SlStatus {
    match err {
        Error::Io { .. } => SlStatus::Io,
        Error::Malformed { .. } | Error::SentenceConflict { .. } => SlStatus::Malformed,
        Error::VersionMismatch { .. }
        | Error::Shape(_)
        | Error::Truncated(_)
        | Error::NonFiniteIntermediate { .. }
        | Error::InvalidVocabulary(_)
        | Error::DimensionMismatch { .. } => SlStatus::Model,
        Error::TimestampRegression { .. } => SlStatus::TimestampRegression,
        _ => SlStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> SlStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SlStatus::Panic
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, SlStatus> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s).to_str().map(Some).map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        SlStatus::InvalidUtf8
    })
}

/// # Safety
/// Same as [`read_str`]; a null pointer is reported as an error.
unsafe fn require_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, SlStatus> {
    read_str(s, what)?.ok_or_else(|| {
        set_error(format!("{what} is null"));
        SlStatus::NullArgument
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> SlStatus {
    match CString::new(text) {
        Ok(c) => {
            // SAFETY: callers check `out` for null first.
            unsafe { *out = c.into_raw() };
            SlStatus::Ok
        }
        Err(_) => {
            set_error("output contains a NUL byte");
            SlStatus::InvalidArgument
        }
    }
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn null_out<T>(out: *mut T, what: &str) -> Result<(), SlStatus> {
    if out.is_null() {
        set_error(format!("{what} is null"));
        return Err(SlStatus::NullArgument);
    }
    Ok(())
}

/// Loads a model and an optional sentence table. `sentences_path` may be null
/// to use the bundled table. `window` and `stride` of 0 select the defaults.
/// The landmark count is taken from the model.
///
/// # Safety
/// Path arguments must be null or NUL-terminated strings. `out` must be a
/// valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn sl_engine_load(
    model_path: *const c_char,
    sentences_path: *const c_char,
    window: u32,
    stride: u32,
    out: *mut *mut SlEngine,
) -> SlStatus {
    guard(|| {
        clear_error();
        try_status!(null_out(out, "out"));
        let model_path = try_status!(require_str(model_path, "model_path"));
        let sentences_path = try_status!(read_str(sentences_path, "sentences_path"));
        let model = match load_model(Path::new(model_path)) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let table = match sentences_path {
            Some(p) => match SentenceTable::load(Path::new(p)) {
                Ok(t) => t,
                Err(e) => return fail(e),
            },
            None => SentenceTable::bundled(),
        };
        let defaults = PipelineConfig::default();
        let config = PipelineConfig {
            landmarks: model.input_dim() / 2,
            window: if window == 0 { defaults.window } else { window as usize },
            stride: if stride == 0 { defaults.stride } else { stride as usize },
            ..defaults
        };
        match Engine::new(model, Box::new(table), config) {
            Ok(engine) => {
                *out = Box::into_raw(Box::new(SlEngine {
                    inner: Arc::new(engine),
                }));
                SlStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases an engine. Sessions created from it stay valid.
///
/// # Safety
/// `engine` must be null or a handle from [`sl_engine_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_engine_free(engine: *mut SlEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Number of coordinates per landmark frame expected by the engine's model.
///
/// # Safety
/// `engine` must be a live handle; returns 0 when null.
#[no_mangle]
pub unsafe extern "C" fn sl_engine_input_dim(engine: *const SlEngine) -> u32 {
    engine.as_ref().map_or(0, |e| e.inner.model().input_dim() as u32)
}

/// Opens a session on `engine`.
///
/// # Safety
/// `engine` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_session_new(engine: *const SlEngine, id: u64, out: *mut *mut SlSession) -> SlStatus {
    guard(|| {
        clear_error();
        try_status!(null_out(out, "out"));
        let Some(engine) = engine.as_ref() else {
            set_error("engine is null");
            return SlStatus::NullArgument;
        };
        *out = Box::into_raw(Box::new(SlSession {
            inner: Session::unlogged(engine.inner.clone(), id),
        }));
        SlStatus::Ok
    })
}

/// # Safety
/// `session` must be null or a handle from [`sl_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_session_free(session: *mut SlSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Feeds one inbound JSON record. The replies are written to `out` as
/// newline-terminated JSON lines, possibly empty. Protocol errors are replies,
/// not failures.
///
/// # Safety
/// `session` must be a live handle, `line` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_session_push(session: *mut SlSession, line: *const c_char, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        clear_error();
        try_status!(null_out(out, "out"));
        let Some(session) = session.as_mut() else {
            set_error("session is null");
            return SlStatus::NullArgument;
        };
        let line = try_status!(require_str(line, "line"));
        let replies = session.inner.handle_line(line);
        give_string(format_log(&replies), out)
    })
}

/// Replays a recorded stream file through a fresh session at full speed and
/// writes the outbound log to `out`.
///
/// # Safety
/// `engine` must be a live handle, `path` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_replay_file(engine: *const SlEngine, path: *const c_char, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        clear_error();
        try_status!(null_out(out, "out"));
        let Some(engine) = engine.as_ref() else {
            set_error("engine is null");
            return SlStatus::NullArgument;
        };
        let path = try_status!(require_str(path, "path"));
        match replay(engine.inner.clone(), Path::new(path), Speed::Max) {
            Ok(log) => give_string(format_log(&log), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Description of the last failure on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Wire protocol version spoken by sessions.
#[no_mangle]
pub extern "C" fn sl_protocol_version() -> u32 {
    signlink::service::PROTOCOL_VERSION
}
