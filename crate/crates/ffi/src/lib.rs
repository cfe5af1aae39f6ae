//! C ABI for `poisson-k`.
//!
//! Every function returns a [`PkStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be read back with
//! [`pk_last_error_message`]. Panics are caught at the boundary and reported
//! as [`PkStatus::Panic`]. Tables and jump lists are opaque handles owned by
//! the caller and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poisson_k::{Error, OrderKParams, ScaledPmfTable};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkStatus {
    Ok = 0,
    InvalidParameter = 1,
    Overflow = 2,
    ResourceLimit = 3,
    SolverFailure = 4,
    StructuralAnomaly = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Scaled pmf table `h_k(0..=n_max; λ)`.
pub struct PkTable {
    inner: ScaledPmfTable,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PkJump {
    pub lambda: f64,
    pub mode_before: usize,
    pub mode_after: usize,
}

/// Mode jumps for `λ ∈ (0, 2]`, in increasing `λ`.
pub struct PkJumpList {
    jumps: Vec<PkJump>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> PkStatus {
    match err {
        Error::InvalidParameter(_) | Error::WindowTooSmall { .. } | Error::Malformed(_) => {
            PkStatus::InvalidParameter
        }
        Error::Overflow { .. } => PkStatus::Overflow,
        Error::ResourceLimit(_) => PkStatus::ResourceLimit,
        Error::TailDomination { .. }
        | Error::NoSignChange { .. }
        | Error::BracketViolation(_)
        | Error::NoConvergence { .. } => PkStatus::SolverFailure,
        Error::StructuralAnomaly(_) => PkStatus::StructuralAnomaly,
    }
}

struct Fail(PkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PkStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PkStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {msg}"));
            PkStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn table_ref<'a>(table: *const PkTable) -> Result<&'a PkTable, Fail> {
    unsafe { table.as_ref() }.ok_or_else(|| null("table"))
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes, into `buf`. Returns the untruncated length
/// including the terminator; `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len() + 1
    })
}

/// Builds the table for `n = 0..=n_max`, in log space when `kλ` is large.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pk_table_new(
    k: u32,
    lambda: f64,
    n_max: usize,
    out: *mut *mut PkTable,
) -> PkStatus {
    guard(|| {
        let inner = ScaledPmfTable::new(OrderKParams::new(k, lambda)?, n_max)?;
        let handle = Box::into_raw(Box::new(PkTable { inner }));
        unsafe { write(out, handle, "out") }.inspect_err(|_| drop(unsafe { Box::from_raw(handle) }))
    })
}

/// # Safety
/// `table` must be null or a handle from [`pk_table_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pk_table_free(table: *mut PkTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Number of entries, `n_max + 1`; zero for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pk_table_len(table: *const PkTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.inner.n_max() + 1)
}

unsafe fn table_get(
    table: *const PkTable,
    n: usize,
    out: *mut f64,
    f: impl FnOnce(&ScaledPmfTable, usize) -> f64,
) -> PkStatus {
    guard(|| {
        let t = unsafe { table_ref(table) }?;
        if n > t.inner.n_max() {
            return Err(Fail(
                PkStatus::InvalidParameter,
                format!("n = {n} beyond table end {}", t.inner.n_max()),
            ));
        }
        unsafe { write(out, f(&t.inner, n), "out") }
    })
}

/// Scaled value `h_k(n; λ)`; `+inf` if it exceeds the double range.
///
/// # Safety
/// `table` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_table_value(
    table: *const PkTable,
    n: usize,
    out: *mut f64,
) -> PkStatus {
    unsafe { table_get(table, n, out, |t, n| t.value(n)) }
}

/// `ln h_k(n; λ)`.
///
/// # Safety
/// `table` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_table_log_value(
    table: *const PkTable,
    n: usize,
    out: *mut f64,
) -> PkStatus {
    unsafe { table_get(table, n, out, |t, n| t.ln_value(n)) }
}

/// Probability `f_k(n; λ)`.
///
/// # Safety
/// `table` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_table_pmf(table: *const PkTable, n: usize, out: *mut f64) -> PkStatus {
    unsafe { table_get(table, n, out, |t, n| t.pmf(n)) }
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_pmf(k: u32, lambda: f64, n: usize, out: *mut f64) -> PkStatus {
    guard(|| {
        let p = poisson_k::pmf(&OrderKParams::new(k, lambda)?, n)?;
        unsafe { write(out, p, "out") }
    })
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_median(k: u32, lambda: f64, out: *mut usize) -> PkStatus {
    guard(|| {
        let nu = poisson_k::median(&OrderKParams::new(k, lambda)?)?;
        unsafe { write(out, nu, "out") }
    })
}

/// Writes the sorted mode set into `modes[0..capacity]` and its size into
/// `count`. Returns `BufferTooSmall` (with `count` set) if it does not fit.
///
/// # Safety
/// `modes` must be valid for `capacity` writes (or null when `capacity` is
/// zero) and `count` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_mode_set(
    k: u32,
    lambda: f64,
    tie_tolerance: f64,
    modes: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> PkStatus {
    guard(|| {
        let set = poisson_k::mode_set(&OrderKParams::new(k, lambda)?, tie_tolerance)?.modes;
        unsafe { write(count, set.len(), "count") }?;
        if set.len() > capacity {
            return Err(Fail(
                PkStatus::BufferTooSmall,
                format!("{} modes, capacity {capacity}", set.len()),
            ));
        }
        if modes.is_null() {
            return Err(null("modes"));
        }
        unsafe { ptr::copy_nonoverlapping(set.as_ptr(), modes, set.len()) };
        Ok(())
    })
}

/// Positive root `r_k` of `h_k(k; λ) = 1`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_solve_r_k(k: u32, out: *mut f64) -> PkStatus {
    guard(|| {
        let r = poisson_k::solve_r_k(k)?;
        unsafe { write(out, r.r_k, "out") }
    })
}

/// Smallest `λ` at which the mode set is `{0, m̂}`; requires `k >= 2`.
///
/// # Safety
/// `lambda_hat` and `m_hat` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pk_first_double_mode(
    k: u32,
    lambda_hat: *mut f64,
    m_hat: *mut usize,
) -> PkStatus {
    guard(|| {
        if lambda_hat.is_null() || m_hat.is_null() {
            return Err(null("out"));
        }
        let f = poisson_k::first_double_mode(k)?;
        unsafe {
            write(lambda_hat, f.lambda_hat, "lambda_hat")?;
            write(m_hat, f.m_hat, "m_hat")
        }
    })
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pk_jumps_new(k: u32, out: *mut *mut PkJumpList) -> PkStatus {
    guard(|| {
        let jumps = poisson_k::jump_boundaries(k)?
            .into_iter()
            .map(|e| PkJump {
                lambda: e.lambda_star,
                mode_before: e.m1,
                mode_after: e.m2,
            })
            .collect();
        let handle = Box::into_raw(Box::new(PkJumpList { jumps }));
        unsafe { write(out, handle, "out") }.inspect_err(|_| drop(unsafe { Box::from_raw(handle) }))
    })
}

/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pk_jumps_len(list: *const PkJumpList) -> usize {
    unsafe { list.as_ref() }.map_or(0, |l| l.jumps.len())
}

/// # Safety
/// `list` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pk_jumps_get(
    list: *const PkJumpList,
    index: usize,
    out: *mut PkJump,
) -> PkStatus {
    guard(|| {
        let l = unsafe { list.as_ref() }.ok_or_else(|| null("list"))?;
        let j = *l.jumps.get(index).ok_or_else(|| {
            Fail(
                PkStatus::InvalidParameter,
                format!("index {index} out of range for {} jumps", l.jumps.len()),
            )
        })?;
        unsafe { write(out, j, "out") }
    })
}

/// # Safety
/// `list` must be null or a handle from [`pk_jumps_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pk_jumps_free(list: *mut PkJumpList) {
    if !list.is_null() {
        drop(unsafe { Box::from_raw(list) });
    }
}
