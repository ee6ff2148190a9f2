//! C interface to the cohomology engine.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns a [`CcStatus`]; on a
//! nonzero status, `cc_last_error_message` describes the failure on the
//! calling thread. No call panics across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use currentcoh::gradedbasis::{BlockKey, ComplexKind};
use currentcoh::koszul::{cohomology_table, Bounds, CohomologyTable};
use currentcoh::liealg::{build_algebra, AlgebraName, LieAlgebraData};
use currentcoh::macdonald::{compare_series, predicted_super_series, predicted_truncated_series};
use currentcoh::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    /// A null pointer, invalid UTF-8, or a zero truncation order.
    InvalidArgument = 1,
    /// The algebra name is not sl(n) or gl(n) with n >= 2.
    UnsupportedAlgebra = 2,
    /// A block outside the bounds of the table, or a buffer too small.
    OutOfRange = 3,
    /// The computation finished but disagrees with the prediction.
    VerificationFailed = 4,
    /// A panic or an unexpected internal error.
    Internal = 5,
}

/// A Lie algebra `sl(n)` or `gl(n)` with its Chevalley data.
pub struct CcAlgebra {
    data: LieAlgebraData,
}

/// A table of cohomology dimensions indexed by `(d, p, w)`.
pub struct CcTable {
    table: CohomologyTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CcStatus {
    match e {
        Error::UnsupportedAlgebra(_) | Error::NotAnExponent { .. } => CcStatus::UnsupportedAlgebra,
        Error::Config(_) => CcStatus::InvalidArgument,
        Error::IndexOutOfRange { .. } | Error::BoundsMismatch { .. } => CcStatus::OutOfRange,
        _ => CcStatus::Internal,
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (CcStatus, String)>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CcStatus::Internal
        }
    }
}

fn lift(e: Error) -> (CcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CcStatus, String) {
    (CcStatus::InvalidArgument, format!("null pointer: {what}"))
}

unsafe fn algebra_ref<'a>(alg: *const CcAlgebra) -> Result<&'a CcAlgebra, (CcStatus, String)> {
    alg.as_ref().ok_or_else(|| null("algebra"))
}

/// Build the algebra named `name` (`"sl2"`, `"sl(3)"`, `"gl2"`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_algebra_new(name: *const c_char, out: *mut *mut CcAlgebra) -> CcStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| (CcStatus::InvalidArgument, "name is not UTF-8".to_string()))?;
        let parsed: AlgebraName = s.parse().map_err(lift)?;
        let data = build_algebra(parsed).map_err(lift)?;
        *out = Box::into_raw(Box::new(CcAlgebra { data }));
        Ok(())
    })
}

/// Release an algebra; null is ignored.
///
/// # Safety
/// `alg` must come from `cc_algebra_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cc_algebra_free(alg: *mut CcAlgebra) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Dimension of the algebra.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_algebra_dim(alg: *const CcAlgebra, out: *mut usize) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = a.data.dim();
        Ok(())
    })
}

/// Rank (number of exponents) of the algebra.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_algebra_rank(alg: *const CcAlgebra, out: *mut usize) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = a.data.exponents.len();
        Ok(())
    })
}

/// Copy the exponents into `buf` (capacity `cap`) and store their count
/// in `len`. With a too-small buffer nothing is copied, `len` is still
/// set, and `OUT_OF_RANGE` is returned.
///
/// # Safety
/// `buf` must have room for `cap` entries; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_algebra_exponents(
    alg: *const CcAlgebra,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        let ex = &a.data.exponents;
        *len = ex.len();
        if cap < ex.len() {
            return Err((CcStatus::OutOfRange, format!("buffer holds {cap}, need {}", ex.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::ptr::copy_nonoverlapping(ex.as_ptr(), buf, ex.len());
        Ok(())
    })
}

fn make_table(table: CohomologyTable, out: *mut *mut CcTable) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(CcTable { table })) };
}

/// Cohomology of `g[z]/z^n` for degrees `<= max_d` and depths `<= max_w`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_truncated_table(
    alg: *const CcAlgebra,
    n: usize,
    max_d: usize,
    max_w: usize,
    out: *mut *mut CcTable,
) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err((CcStatus::InvalidArgument, "truncation n must be at least 1".into()));
        }
        let t = cohomology_table(&a.data, ComplexKind::Truncated(n), Bounds::new(max_d, 0, max_w));
        make_table(t, out);
        Ok(())
    })
}

/// Relative cohomology of `g[z, s]` within the given bounds.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_super_table(
    alg: *const CcAlgebra,
    max_d: usize,
    max_p: usize,
    max_w: usize,
    out: *mut *mut CcTable,
) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = cohomology_table(&a.data, ComplexKind::SuperRelative, Bounds::new(max_d, max_p, max_w));
        make_table(t, out);
        Ok(())
    })
}

/// Dimension of the block `(d, p, w)`; `OUT_OF_RANGE` outside the bounds.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_table_get(table: *const CcTable, d: usize, p: usize, w: usize, out: *mut usize) -> CcStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let key = BlockKey::new(d, p, w);
        if !t.table.bounds.contains(&key) {
            return Err((CcStatus::OutOfRange, format!("block {key} outside the table bounds")));
        }
        *out = t.table.get(&key);
        Ok(())
    })
}

/// Release a table; null is ignored.
///
/// # Safety
/// `table` must come from a `cc_*_table` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cc_table_free(table: *mut CcTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Compare the cohomology of `g[z]/z^n` with the predicted exterior
/// algebra. Stores the number of differing blocks in `diffs` and returns
/// `VERIFICATION_FAILED` when it is nonzero.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_truncated_verify(
    alg: *const CcAlgebra,
    n: usize,
    max_d: usize,
    max_w: usize,
    diffs: *mut usize,
) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        let diffs = diffs.as_mut().ok_or_else(|| null("diffs"))?;
        if n == 0 {
            return Err((CcStatus::InvalidArgument, "truncation n must be at least 1".into()));
        }
        let bounds = Bounds::new(max_d, 0, max_w);
        let t = cohomology_table(&a.data, ComplexKind::Truncated(n), bounds);
        let p = predicted_truncated_series(&a.data, n, bounds).map_err(lift)?;
        let found = compare_series(&t, &p).map_err(lift)?;
        *diffs = found.len();
        if found.is_empty() {
            Ok(())
        } else {
            Err((CcStatus::VerificationFailed, format!("{} blocks differ from the prediction", found.len())))
        }
    })
}

/// Same as `cc_truncated_verify` for the relative super cohomology.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cc_super_verify(
    alg: *const CcAlgebra,
    max_d: usize,
    max_p: usize,
    max_w: usize,
    diffs: *mut usize,
) -> CcStatus {
    guard(|| {
        let a = algebra_ref(alg)?;
        let diffs = diffs.as_mut().ok_or_else(|| null("diffs"))?;
        let bounds = Bounds::new(max_d, max_p, max_w);
        let t = cohomology_table(&a.data, ComplexKind::SuperRelative, bounds);
        let p = predicted_super_series(&a.data, bounds).map_err(lift)?;
        let found = compare_series(&t, &p).map_err(lift)?;
        *diffs = found.len();
        if found.is_empty() {
            Ok(())
        } else {
            Err((CcStatus::VerificationFailed, format!("{} blocks differ from the prediction", found.len())))
        }
    })
}

/// Message of the last failed call on this thread (empty after success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
