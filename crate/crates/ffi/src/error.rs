use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, UnwindSafe};

use urllc::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrllcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Infeasible = 4,
    Degenerate = 5,
    Numeric = 6,
    Serialization = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) fn set_last_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

pub(crate) fn status_of(e: &Error) -> UrllcStatus {
    match e {
        Error::Domain(_) => UrllcStatus::Domain,
        Error::Shape(_) | Error::Config(_) => UrllcStatus::InvalidArgument,
        Error::Infeasible { .. } => UrllcStatus::Infeasible,
        Error::Degenerate(_) => UrllcStatus::Degenerate,
        Error::Numeric(_) => UrllcStatus::Numeric,
    }
}

/// Failure inside a call: a status plus the message stored for the caller.
pub(crate) struct Fail(pub UrllcStatus, pub String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

pub(crate) fn null(what: &str) -> Fail {
    Fail(UrllcStatus::NullPointer, format!("{what} is null"))
}

pub(crate) fn invalid(msg: impl Into<String>) -> Fail {
    Fail(UrllcStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any failure in the thread's last-error slot and turns
/// panics into [`UrllcStatus::Panic`].
pub(crate) fn guard<F>(f: F) -> UrllcStatus
where
    F: FnOnce() -> Result<(), Fail> + UnwindSafe,
{
    clear_last_error();
    match catch_unwind(f) {
        Ok(Ok(())) => UrllcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            UrllcStatus::Panic
        }
    }
}

/// Message of the last failed call on this thread, or null if it succeeded.
///
/// The string is owned by the caller and must be released with
/// [`urllc_string_free`](crate::urllc_string_free).
#[no_mangle]
pub extern "C" fn urllc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(std::ptr::null_mut(), |s| s.clone().into_raw())
    })
}
