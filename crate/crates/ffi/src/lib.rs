//! C interface to `kloostpath`.
//!
//! Objects are opaque handles created by `kp_*_new` and released by the
//! matching `kp_*_free`. Every function returns a [`KpStatus`]; results are
//! written through out-pointers. After a failure, `kp_last_error` gives a
//! message for the calling thread. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};

use kloostpath::export::{export_path, ExportFormat};
use kloostpath::klooster::{kloosterman_closed, kloosterman_naive};
use kloostpath::modring::{PrimePowerModulus, SqrtBranch};
use kloostpath::paths::{path_eval, path_vertices, rearranged_vertices, renormalized_vertices, KloostermanPath, Variant};
use kloostpath::Error;

/// Return codes. `KP_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModulus = 2,
    NotAUnit = 3,
    NotASquare = 4,
    UnsupportedDepth = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KpVariant {
    Standard = 0,
    Renormalized = 1,
    Rearranged = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KpFormat {
    Csv = 0,
    Json = 1,
    Svg = 2,
}

/// A modulus `p^n` together with the default square-root branch.
pub struct KpModulus {
    branch: SqrtBranch,
}

/// A Kloosterman path (vertex list).
pub struct KpPath {
    path: KloostermanPath,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> KpStatus {
    match e {
        Error::InvalidModulus(_) | Error::ModulusMismatch(..) => KpStatus::InvalidModulus,
        Error::NotAUnit { .. } => KpStatus::NotAUnit,
        Error::NotASquare { .. } => KpStatus::NotASquare,
        Error::UnsupportedDepth(_) => KpStatus::UnsupportedDepth,
        Error::Io(_) => KpStatus::Io,
        _ => KpStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (KpStatus, String)>) -> KpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            KpStatus::Panic
        }
    }
}

fn lib<T>(r: kloostpath::Result<T>) -> Result<T, (KpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (KpStatus, String) {
    (KpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, (KpStatus, String)> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, (KpStatus, String)> {
    ptr.as_mut().ok_or_else(|| null(what))
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn kp_status_message(status: KpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        KpStatus::Ok => c"ok",
        KpStatus::NullPointer => c"null pointer argument",
        KpStatus::InvalidModulus => c"invalid modulus",
        KpStatus::NotAUnit => c"argument is not a unit",
        KpStatus::NotASquare => c"argument is not a square",
        KpStatus::UnsupportedDepth => c"closed form needs n >= 2",
        KpStatus::InvalidArgument => c"invalid argument",
        KpStatus::BufferTooSmall => c"buffer too small",
        KpStatus::Io => c"i/o error",
        KpStatus::Panic => c"internal error",
    };
    s.as_ptr()
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, e.g. `"0.1.0"`.
#[no_mangle]
pub extern "C" fn kp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create the modulus `p^n` (`p` an odd prime, `p^n < 2^63`).
///
/// # Safety
/// `out_modulus` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn kp_modulus_new(p: u64, n: u32, out_modulus: *mut *mut KpModulus) -> KpStatus {
    guard(|| {
        let slot = out(out_modulus, "out_modulus")?;
        *slot = std::ptr::null_mut();
        let m = lib(PrimePowerModulus::new(p, n))?;
        *slot = Box::into_raw(Box::new(KpModulus { branch: SqrtBranch::new(m) }));
        Ok(())
    })
}

/// Release a modulus. Null is ignored.
///
/// # Safety
/// `modulus` must come from `kp_modulus_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kp_modulus_free(modulus: *mut KpModulus) {
    if !modulus.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(modulus))));
    }
}

/// `p^n`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_modulus_value(modulus: *const KpModulus, out_q: *mut u64) -> KpStatus {
    guard(|| {
        let m = deref(modulus, "modulus")?;
        *out(out_q, "out_q")? = m.branch.modulus().q();
        Ok(())
    })
}

/// Normalized sum `Kl_{p^n}(a, b)` by direct summation (real and imaginary part).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_kloosterman_naive(
    modulus: *const KpModulus,
    a: u64,
    b: u64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> KpStatus {
    guard(|| {
        let m = deref(modulus, "modulus")?;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let z = lib(kloosterman_naive(m.branch.modulus(), a, b))?;
        (*re, *im) = (z.re, z.im);
        Ok(())
    })
}

/// Normalized sum `Kl_{p^n}(a, b)` in closed form; requires `n >= 2`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_kloosterman_closed(modulus: *const KpModulus, a: u64, b: u64, out_value: *mut f64) -> KpStatus {
    guard(|| {
        let m = deref(modulus, "modulus")?;
        let slot = out(out_value, "out_value")?;
        *slot = lib(kloosterman_closed(a, b, &m.branch))?;
        Ok(())
    })
}

/// Build a path of the given variant for units `a`, `b`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_path_new(
    modulus: *const KpModulus,
    a: u64,
    b: u64,
    variant: KpVariant,
    out_path: *mut *mut KpPath,
) -> KpStatus {
    guard(|| {
        let m = deref(modulus, "modulus")?;
        let slot = out(out_path, "out_path")?;
        *slot = std::ptr::null_mut();
        let m = m.branch.modulus();
        let path = lib(match variant {
            KpVariant::Standard => path_vertices(m, a, b),
            KpVariant::Renormalized => renormalized_vertices(m, a, b),
            KpVariant::Rearranged => rearranged_vertices(m, a, b),
        })?;
        *slot = Box::into_raw(Box::new(KpPath { path }));
        Ok(())
    })
}

/// Release a path. Null is ignored.
///
/// # Safety
/// `path` must come from `kp_path_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kp_path_free(path: *mut KpPath) {
    if !path.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(path))));
    }
}

/// Number of vertices.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_path_len(path: *const KpPath, out_len: *mut usize) -> KpStatus {
    guard(|| {
        let p = deref(path, "path")?;
        *out(out_len, "out_len")? = p.path.vertices.len();
        Ok(())
    })
}

/// Copy the vertices as interleaved `re, im` pairs into `buf`, which holds
/// `capacity` pairs. `out_written` receives the vertex count; when it exceeds
/// `capacity` nothing is copied and `KP_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `buf` must point to `2 * capacity` writable doubles (may be null when
/// `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn kp_path_vertices(
    path: *const KpPath,
    buf: *mut f64,
    capacity: usize,
    out_written: *mut usize,
) -> KpStatus {
    guard(|| {
        let p = deref(path, "path")?;
        let written = out(out_written, "out_written")?;
        let v = &p.path.vertices;
        *written = v.len();
        if v.len() > capacity {
            return Err((KpStatus::BufferTooSmall, format!("{} vertices, capacity {capacity}", v.len())));
        }
        if v.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, 2 * v.len());
        for (pair, z) in dst.chunks_exact_mut(2).zip(v) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Point of the path at `t ∈ [0, 1]`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_path_eval(path: *const KpPath, t: f64, out_re: *mut f64, out_im: *mut f64) -> KpStatus {
    guard(|| {
        let p = deref(path, "path")?;
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let z = lib(path_eval(&p.path, t))?;
        (*re, *im) = (z.re, z.im);
        Ok(())
    })
}

/// Write the path to a file as CSV, JSON or SVG.
///
/// # Safety
/// `filename` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn kp_path_write(path: *const KpPath, format: KpFormat, filename: *const c_char) -> KpStatus {
    guard(|| {
        let p = deref(path, "path")?;
        if filename.is_null() {
            return Err(null("filename"));
        }
        let name = CStr::from_ptr(filename)
            .to_str()
            .map_err(|_| (KpStatus::InvalidArgument, "filename is not UTF-8".to_string()))?;
        let format = match format {
            KpFormat::Csv => ExportFormat::Csv,
            KpFormat::Json => ExportFormat::Json,
            KpFormat::Svg => ExportFormat::Svg,
        };
        let file = File::create(name).map_err(|e| (KpStatus::Io, format!("{name}: {e}")))?;
        lib(export_path(&p.path, format, BufWriter::new(file)))
    })
}

/// Variant of a path.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn kp_path_variant(path: *const KpPath, out_variant: *mut KpVariant) -> KpStatus {
    guard(|| {
        let p = deref(path, "path")?;
        *out(out_variant, "out_variant")? = match p.path.variant {
            Variant::Standard => KpVariant::Standard,
            Variant::Renormalized => KpVariant::Renormalized,
            Variant::Rearranged => KpVariant::Rearranged,
        };
        Ok(())
    })
}
