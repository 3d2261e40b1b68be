//! C ABI for the surroc analysis pipeline.
//!
//! Conventions: fallible entry points return a [`SurrocStatus`] and pass
//! results through out-pointers; handles are opaque and must be released with
//! the matching `_free` function; the message for the most recent failure is
//! kept per thread and retrieved with [`surroc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use surroc::dataset::{self, ComparisonRecord};
use surroc::report::{self, AnalysisOptions, AnalysisReport};
use surroc::Error;

/// Status classes; non-zero values mirror the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrocStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// The CSV header is missing a required column.
    Schema = 2,
    /// A row failed to parse or validate, or the outcome label is underivable.
    Validation = 3,
    /// The input is analyzable in principle but degenerate (e.g. single-class
    /// labels, empty dataset).
    Degenerate = 4,
    Internal = 5,
}

/// Opaque handle over a parsed, validated comparison dataset.
pub struct SurrocDataset {
    records: Vec<ComparisonRecord>,
}

/// Opaque handle over a completed analysis.
pub struct SurrocReport {
    report: AnalysisReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SurrocStatus {
    match err.exit_code() {
        2 => SurrocStatus::Schema,
        3 => SurrocStatus::Validation,
        4 => SurrocStatus::Degenerate,
        _ => SurrocStatus::Internal,
    }
}

fn fail(err: Error) -> SurrocStatus {
    let status = status_of(&err);
    set_last_error(err.to_string());
    status
}

/// Run `f` with panics converted to `Internal` so they never unwind into C.
fn guarded(f: impl FnOnce() -> SurrocStatus) -> SurrocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic".to_string());
            SurrocStatus::Internal
        }
    }
}

/// Message for the most recent failure on this thread, or null if the last
/// call succeeded. The pointer stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn surroc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn surroc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse `len` bytes of comparison CSV into a dataset handle.
///
/// On success writes the handle to `out` and returns `Ok`; on failure `out`
/// is untouched and the error is retrievable via `surroc_last_error`.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn surroc_dataset_parse(
    data: *const u8,
    len: usize,
    out: *mut *mut SurrocDataset,
) -> SurrocStatus {
    if data.is_null() || out.is_null() {
        return SurrocStatus::NullArgument;
    }
    let raw = std::slice::from_raw_parts(data, len);
    guarded(|| match dataset::parse_csv(raw) {
        Ok(records) => {
            *out = Box::into_raw(Box::new(SurrocDataset { records }));
            SurrocStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Number of comparison records in the dataset; 0 for a null handle.
#[no_mangle]
pub extern "C" fn surroc_dataset_len(dataset: *const SurrocDataset) -> usize {
    if dataset.is_null() {
        return 0;
    }
    unsafe { (*dataset).records.len() }
}

/// Release a dataset handle. Null is accepted and ignored.
///
/// # Safety
/// `dataset` must have come from `surroc_dataset_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn surroc_dataset_free(dataset: *mut SurrocDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Run the full analysis (cross-table, ROC/Youden per measure, tree, bagged
/// importance, STE summary) with default configuration at the given seed and
/// significance level.
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn surroc_analyze(
    dataset: *const SurrocDataset,
    seed: u64,
    alpha: f64,
    out: *mut *mut SurrocReport,
) -> SurrocStatus {
    if dataset.is_null() || out.is_null() {
        return SurrocStatus::NullArgument;
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        set_last_error(format!("alpha must lie in (0,1), got {alpha}"));
        return SurrocStatus::Validation;
    }
    let records = &(*dataset).records;
    guarded(|| {
        let mut opts = AnalysisOptions::new(seed);
        opts.alpha = alpha;
        match report::run_analysis(records, &opts) {
            Ok(rep) => {
                *out = Box::into_raw(Box::new(SurrocReport { report: rep }));
                SurrocStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Serialize a report as canonical JSON (sorted keys, 6 significant digits).
///
/// On success writes a NUL-terminated string to `out`; release it with
/// `surroc_string_free`.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid pointer to a string slot.
#[no_mangle]
pub unsafe extern "C" fn surroc_report_to_json(
    rep: *const SurrocReport,
    out: *mut *mut c_char,
) -> SurrocStatus {
    if rep.is_null() || out.is_null() {
        return SurrocStatus::NullArgument;
    }
    guarded(|| match report::canonical_json(&(*rep).report) {
        Ok(json) => match CString::new(json) {
            Ok(c) => {
                *out = c.into_raw();
                SurrocStatus::Ok
            }
            Err(_) => {
                set_last_error("serialized report contained a NUL byte".to_string());
                SurrocStatus::Internal
            }
        },
        Err(e) => fail(e),
    })
}

/// Release a report handle. Null is accepted and ignored.
///
/// # Safety
/// `rep` must have come from `surroc_analyze` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn surroc_report_free(rep: *mut SurrocReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Release a string returned by this library. Null is accepted and ignored.
///
/// # Safety
/// `s` must have come from `surroc_report_to_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn surroc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    const FIXTURE: &str = include_str!("../../core/tests/fixtures/reference.csv");

    unsafe fn parse(csv: &str) -> (SurrocStatus, *mut SurrocDataset) {
        let mut handle: *mut SurrocDataset = ptr::null_mut();
        let status = surroc_dataset_parse(csv.as_ptr(), csv.len(), &mut handle);
        (status, handle)
    }

    #[test]
    fn parse_analyze_serialize_round_trip() {
        unsafe {
            let (status, ds) = parse(FIXTURE);
            assert_eq!(status, SurrocStatus::Ok);
            assert_eq!(surroc_dataset_len(ds), 58);

            let mut rep: *mut SurrocReport = ptr::null_mut();
            assert_eq!(surroc_analyze(ds, 42, 0.05, &mut rep), SurrocStatus::Ok);

            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(surroc_report_to_json(rep, &mut json), SurrocStatus::Ok);
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            assert!(text.contains("\"pct_delta_med\""));
            assert!(text.ends_with('\n'));

            surroc_string_free(json);
            surroc_report_free(rep);
            surroc_dataset_free(ds);
        }
    }

    #[test]
    fn schema_error_sets_message() {
        unsafe {
            let (status, _) = parse("study_id,pub_year\nS1,2010\n");
            assert_eq!(status, SurrocStatus::Schema);
            let msg = CStr::from_ptr(surroc_last_error()).to_str().unwrap();
            assert!(msg.contains("phase"), "{msg}");
        }
    }

    #[test]
    fn degenerate_labels_map_to_degenerate_status() {
        unsafe {
            let all_negative = FIXTURE.replace(",0.70,0.01,", ",0.95,0.50,");
            let (status, ds) = parse(&all_negative);
            assert_eq!(status, SurrocStatus::Ok);
            let mut rep: *mut SurrocReport = ptr::null_mut();
            assert_eq!(surroc_analyze(ds, 1, 0.05, &mut rep), SurrocStatus::Degenerate);
            surroc_dataset_free(ds);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut ds: *mut SurrocDataset = ptr::null_mut();
            assert_eq!(
                surroc_dataset_parse(ptr::null(), 0, &mut ds),
                SurrocStatus::NullArgument
            );
            assert_eq!(surroc_dataset_len(ptr::null()), 0);
            let mut rep: *mut SurrocReport = ptr::null_mut();
            assert_eq!(
                surroc_analyze(ptr::null(), 1, 0.05, &mut rep),
                SurrocStatus::NullArgument
            );
            surroc_dataset_free(ptr::null_mut());
            surroc_report_free(ptr::null_mut());
            surroc_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn invalid_alpha_is_a_validation_error() {
        unsafe {
            let (status, ds) = parse(FIXTURE);
            assert_eq!(status, SurrocStatus::Ok);
            let mut rep: *mut SurrocReport = ptr::null_mut();
            assert_eq!(surroc_analyze(ds, 1, 1.5, &mut rep), SurrocStatus::Validation);
            surroc_dataset_free(ds);
        }
    }

    #[test]
    fn version_is_nul_terminated_semver() {
        unsafe {
            let v = CStr::from_ptr(surroc_version()).to_str().unwrap();
            assert_eq!(v, env!("CARGO_PKG_VERSION"));
        }
    }
}
