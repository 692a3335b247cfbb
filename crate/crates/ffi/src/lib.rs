//! C ABI for `election_coding`.
//!
//! Matrices are opaque `EcMatrix` handles owned by the caller and released
//! with `ec_matrix_free`. Every fallible call returns an `EcStatus`; on a
//! non-zero status, `ec_last_error()` describes the failure for the calling
//! thread. Strings returned by the library are freed with `ec_string_free`.
//!
//! Signs cross the boundary as `int8_t` values `+1` / `-1`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use election_coding::allocation::{self, AllocationMatrix};
use election_coding::bounds::{self, BoundInputs};
use election_coding::tolerance::{verify_bruteforce, verify_lemma2, ToleranceReport};
use election_coding::voting::{self, Sign, SignVector};
use election_coding::Error;

/// Opaque allocation matrix.
pub struct EcMatrix(AllocationMatrix);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    TooLarge = 4,
    Io = 5,
    Panic = 99,
}

/// Global-error certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EcCertificate {
    pub certified: bool,
    pub vacuous: bool,
    pub rhs: f64,
    pub q_star: f64,
    pub u_min: f64,
    pub bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EcStatus {
    match err {
        Error::Parse { .. } => EcStatus::Parse,
        Error::TooLarge { .. } => EcStatus::TooLarge,
        Error::Io(_) => EcStatus::Io,
        _ => EcStatus::InvalidArgument,
    }
}

/// Run `f`, turning errors and panics into a status plus the thread's
/// last-error message.
fn guard(f: impl FnOnce() -> Result<(), (EcStatus, String)>) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EcStatus::Panic
        }
    }
}

fn lib<T>(r: election_coding::Result<T>) -> Result<T, (EcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (EcStatus, String) {
    (EcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn matrix_ref<'a>(m: *const EcMatrix) -> Result<&'a AllocationMatrix, (EcStatus, String)> {
    // SAFETY: caller passes a handle from this library or null.
    unsafe { m.as_ref() }.map(|m| &m.0).ok_or_else(|| null("matrix"))
}

unsafe fn store_matrix(out: *mut *mut EcMatrix, g: AllocationMatrix) -> Result<(), (EcStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-null and points to writable storage per the contract.
    unsafe { *out = Box::into_raw(Box::new(EcMatrix(g))) };
    Ok(())
}

unsafe fn read_signs(ptr_: *const i8, len: usize) -> Result<SignVector, (EcStatus, String)> {
    if ptr_.is_null() {
        return Err(null("sign buffer"));
    }
    // SAFETY: caller guarantees `len` readable elements.
    let raw = unsafe { std::slice::from_raw_parts(ptr_, len) };
    raw.iter()
        .map(|&v| match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err((EcStatus::InvalidArgument, format!("sign value {other} is not +1 or -1"))),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(SignVector::new)
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Deterministic code for odd `n` tolerating `b` Byzantine workers.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_deterministic(n: usize, b: usize, out: *mut *mut EcMatrix) -> EcStatus {
    guard(|| unsafe { store_matrix(out, lib(allocation::build_deterministic(n, b))?) })
}

/// Bernoulli(`p`) code; empty rows are redrawn.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_bernoulli(n: usize, p: f64, seed: u64, out: *mut *mut EcMatrix) -> EcStatus {
    guard(|| unsafe { store_matrix(out, lib(allocation::sample_bernoulli(n, p, seed))?) })
}

/// Uncoded baseline: worker `i` holds partition `i`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_identity(n: usize, out: *mut *mut EcMatrix) -> EcStatus {
    guard(|| unsafe { store_matrix(out, lib(AllocationMatrix::identity(n))?) })
}

/// Parse the text matrix format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_from_text(text: *const c_char, out: *mut *mut EcMatrix) -> EcStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let s =
            unsafe { CStr::from_ptr(text) }.to_str().map_err(|_| (EcStatus::Parse, "text is not UTF-8".to_owned()))?;
        unsafe { store_matrix(out, lib(AllocationMatrix::from_text(s))?) }
    })
}

/// Serialize to the text format. Free the result with `ec_string_free`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_to_text(m: *const EcMatrix, out: *mut *mut c_char) -> EcStatus {
    guard(|| {
        let g = unsafe { matrix_ref(m) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = CString::new(g.to_text()).expect("matrix text has no NUL");
        // SAFETY: `out` checked non-null.
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_free(m: *mut EcMatrix) {
    if !m.is_null() {
        // SAFETY: handle came from Box::into_raw in this library.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ec_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: string came from CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Number of workers (and partitions); 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_n(m: *const EcMatrix) -> usize {
    unsafe { m.as_ref() }.map_or(0, |m| m.0.n())
}

/// Redundancy `r = nnz(G)/n` as a reduced fraction.
///
/// # Safety
/// `m` must be a live handle; `num` and `den` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_redundancy(m: *const EcMatrix, num: *mut u64, den: *mut u64) -> EcStatus {
    guard(|| {
        let g = unsafe { matrix_ref(m) }?;
        if num.is_null() || den.is_null() {
            return Err(null("num/den"));
        }
        let r = g.redundancy();
        // SAFETY: both checked non-null.
        unsafe {
            *num = *r.numer();
            *den = *r.denom();
        }
        Ok(())
    })
}

/// Entry `G[i][j]`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_matrix_get(m: *const EcMatrix, i: usize, j: usize, out: *mut bool) -> EcStatus {
    guard(|| {
        let g = unsafe { matrix_ref(m) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        if i >= g.n() || j >= g.n() {
            return Err((EcStatus::InvalidArgument, format!("index ({i}, {j}) out of range for n = {}", g.n())));
        }
        // SAFETY: checked non-null.
        unsafe { *out = g.get(i, j) };
        Ok(())
    })
}

/// Theoretical redundancy of the deterministic code as a reduced fraction.
///
/// # Safety
/// `num` and `den` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_theoretical_redundancy(n: usize, b: usize, num: *mut i64, den: *mut i64) -> EcStatus {
    guard(|| {
        if num.is_null() || den.is_null() {
            return Err(null("num/den"));
        }
        let r = lib(allocation::theoretical_redundancy(n, b))?;
        // SAFETY: both checked non-null.
        unsafe {
            *num = *r.numer();
            *den = *r.denom();
        }
        Ok(())
    })
}

unsafe fn write_report(
    report: ToleranceReport,
    tolerant: *mut bool,
    witness: *mut u8,
    witness_len: usize,
) -> Result<(), (EcStatus, String)> {
    if tolerant.is_null() {
        return Err(null("tolerant"));
    }
    // SAFETY: checked non-null.
    unsafe { *tolerant = report.verdict };
    if let (Some(w), false) = (&report.witness, witness.is_null()) {
        if witness_len < w.message.len() {
            return Err((EcStatus::InvalidArgument, format!("witness buffer needs {} bytes", w.message.len())));
        }
        // SAFETY: caller guarantees `witness_len` writable bytes.
        let buf = unsafe { std::slice::from_raw_parts_mut(witness, witness_len) };
        for (slot, s) in buf.iter_mut().zip(w.message.as_slice()) {
            *slot = s.bit() as u8;
        }
    }
    Ok(())
}

/// Tolerance check by the weight condition. On failure, when `witness` is
/// non-null, the failing message is written as `n` bytes of 0/1.
///
/// # Safety
/// `m` must be a live handle; `tolerant` writable; `witness` null or
/// `witness_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ec_verify_lemma2(
    m: *const EcMatrix,
    b: usize,
    tolerant: *mut bool,
    witness: *mut u8,
    witness_len: usize,
) -> EcStatus {
    guard(|| {
        let g = unsafe { matrix_ref(m) }?;
        let report = lib(verify_lemma2(g, b))?;
        unsafe { write_report(report, tolerant, witness, witness_len) }
    })
}

/// Tolerance check by exhaustive attack simulation (`n <= 15`).
///
/// # Safety
/// Same as `ec_verify_lemma2`.
#[no_mangle]
pub unsafe extern "C" fn ec_verify_bruteforce(
    m: *const EcMatrix,
    b: usize,
    tolerant: *mut bool,
    witness: *mut u8,
    witness_len: usize,
) -> EcStatus {
    guard(|| {
        let g = unsafe { matrix_ref(m) }?;
        let report = lib(verify_bruteforce(g, b))?;
        unsafe { write_report(report, tolerant, witness, witness_len) }
    })
}

/// Local encoders: `codeword[i] = maj{message[j] : G[i][j] = 1}`.
///
/// # Safety
/// `m` must be a live handle; `message` and `codeword` must each hold
/// `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ec_encode(m: *const EcMatrix, message: *const i8, codeword: *mut i8, len: usize) -> EcStatus {
    guard(|| {
        let g = unsafe { matrix_ref(m) }?;
        let msg = unsafe { read_signs(message, len) }?;
        if codeword.is_null() {
            return Err(null("codeword"));
        }
        let c = lib(voting::encode(&msg, g))?;
        // SAFETY: caller guarantees `len` writable elements; encode checked len == n.
        let out = unsafe { std::slice::from_raw_parts_mut(codeword, len) };
        for (slot, s) in out.iter_mut().zip(c.as_slice()) {
            *slot = s.as_i8();
        }
        Ok(())
    })
}

/// Global majority decoder; a tie decodes to -1.
///
/// # Safety
/// `received` must hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_decode(received: *const i8, len: usize, out: *mut i8) -> EcStatus {
    guard(|| {
        let y = unsafe { read_signs(received, len) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null.
        unsafe { *out = voting::decode(&y).as_i8() };
        Ok(())
    })
}

/// Connection probability `min(1, 2·sqrt(C ln n / n))`.
#[no_mangle]
pub extern "C" fn ec_p_star(n: f64, c: f64) -> f64 {
    bounds::p_star(n, c)
}

/// Local-error bound `q*(n, C, S)`.
#[no_mangle]
pub extern "C" fn ec_q_star(n: f64, c: f64, s: f64) -> f64 {
    bounds::q_star(n, c, s)
}

/// Global-error certificate for `(n, C, S, α, Δ)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_certify(
    n: f64,
    c: f64,
    s: f64,
    alpha: f64,
    delta: f64,
    out: *mut EcCertificate,
) -> EcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cert = lib(bounds::certify_global_error(&BoundInputs { n, c, s, alpha, delta }))?;
        // SAFETY: checked non-null.
        unsafe {
            *out = EcCertificate {
                certified: cert.certified,
                vacuous: cert.vacuous,
                rhs: cert.rhs,
                q_star: cert.q_star,
                u_min: cert.u_min,
                bound: cert.bound,
            }
        };
        Ok(())
    })
}
