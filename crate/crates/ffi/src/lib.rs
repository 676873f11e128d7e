//! C ABI for the space-time solver.
//!
//! Every entry point returns an [`StpgStatus`] and writes results through out
//! pointers. Discretizations are opaque handles owned by the caller and
//! released with [`stpg_discretization_free`]. The message of the most recent
//! failure on the calling thread is available from [`stpg_last_error_message`].
//! Panics never cross the boundary; they surface as [`StpgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stpg::constants::{cfl_constant, cfl_omega, constants_report, NormChoice};
use stpg::fem_space::{assemble, build_mesh};
use stpg::spacetime::{solve_pathwise, Coefficients, Discretization, ProblemData, TimeGrid};
use stpg::stochastic::{predict_max_moment, Exponent};
use stpg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    InvalidCoefficient = 4,
    NotPositiveDefinite = 5,
    ShapeMismatch = 6,
    Inconsistent = 7,
    ResourceCap = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque discretization: spatial pair plus uniform time grid, lowest order in time.
pub struct StpgDiscretization {
    inner: Discretization,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> StpgStatus {
    match e {
        Error::InvalidArgument(_) => StpgStatus::InvalidArgument,
        Error::Unsupported(_) => StpgStatus::Unsupported,
        Error::InvalidCoefficient(_) => StpgStatus::InvalidCoefficient,
        Error::NotPositiveDefinite(_) => StpgStatus::NotPositiveDefinite,
        Error::ShapeMismatch { .. } => StpgStatus::ShapeMismatch,
        Error::Inconsistent(_) => StpgStatus::Inconsistent,
        Error::ResourceCap { .. } => StpgStatus::ResourceCap,
        Error::Io(_) => StpgStatus::Io,
    }
}

fn guard<F: FnOnce() -> Result<(), (StpgStatus, String)>>(f: F) -> StpgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            StpgStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            StpgStatus::Panic
        }
    }
}

fn lift(e: Error) -> (StpgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (StpgStatus, String) {
    (StpgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a>(d: *const StpgDiscretization) -> Result<&'a Discretization, (StpgStatus, String)> {
    unsafe { d.as_ref() }.map(|h| &h.inner).ok_or_else(|| null("discretization"))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), (StpgStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(v) };
    Ok(())
}

/// Builds a discretization on `(0,1)^dim` with `cells` cells per axis,
/// spatial degree 1 or 2, and `steps` uniform steps on `[0, t_final]`.
///
/// # Safety
/// `out` must be valid for a pointer write. On success `*out` owns a handle
/// that must be released with [`stpg_discretization_free`].
#[no_mangle]
pub unsafe extern "C" fn stpg_discretization_new(
    dim: usize,
    cells: usize,
    degree: usize,
    steps: usize,
    t_final: f64,
    out: *mut *mut StpgDiscretization,
) -> StpgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { out.write(ptr::null_mut()) };
        let mesh = build_mesh(dim, cells, degree).map_err(lift)?;
        let pair = assemble(&mesh).map_err(lift)?;
        let grid = TimeGrid::uniform(t_final, steps).map_err(lift)?;
        let boxed = Box::new(StpgDiscretization { inner: Discretization::new(pair, grid, 0) });
        unsafe { out.write(Box::into_raw(boxed)) };
        Ok(())
    })
}

/// Releases a handle. Null is accepted and ignored.
///
/// # Safety
/// `d` must be null or a handle from [`stpg_discretization_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stpg_discretization_free(d: *mut StpgDiscretization) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Spatial and space-time trial dimensions.
///
/// # Safety
/// `d` must be a live handle; the out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn stpg_discretization_dims(
    d: *const StpgDiscretization,
    n_space: *mut usize,
    trial_dofs: *mut usize,
) -> StpgStatus {
    guard(|| {
        let disc = unsafe { handle(d) }?;
        unsafe {
            write(n_space, disc.n_space(), "n_space")?;
            write(trial_dofs, disc.trial_dofs(), "trial_dofs")
        }
    })
}

/// Solves the mode problem `f = c0·sin(πt)·λφ`, `u(0) = 0` with diffusion `a`.
///
/// Coefficients are written interval by interval (`trial_dofs` values, see
/// [`stpg_discretization_dims`]) when `coeffs` is non-null; `y_norm` receives
/// the Y-norm of the solution when non-null.
///
/// # Safety
/// `d` must be a live handle; `coeffs` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn stpg_solve_mode(
    d: *const StpgDiscretization,
    a: f64,
    c0: f64,
    coeffs: *mut f64,
    len: usize,
    y_norm: *mut f64,
) -> StpgStatus {
    guard(|| {
        let disc = unsafe { handle(d) }?;
        if !coeffs.is_null() && len != disc.trial_dofs() {
            return Err(lift(Error::ShapeMismatch { expected: disc.trial_dofs(), got: len }));
        }
        let data = ProblemData::mode(disc);
        let u = solve_pathwise(&data, disc, Coefficients::new(a, c0)).map_err(lift)?;
        if !coeffs.is_null() {
            unsafe { std::slice::from_raw_parts_mut(coeffs, len) }.copy_from_slice(u.coeffs().as_slice());
        }
        if !y_norm.is_null() {
            unsafe { y_norm.write(u.y_norm(disc)) };
        }
        Ok(())
    })
}

/// `c_S = k·√λmax(S, D)` at the largest step; with `a > 0` also the weighted
/// value `a·c_S/√12` into `c_s_omega` (ignored when null).
///
/// # Safety
/// `d` must be a live handle; `c_s` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn stpg_cfl_constants(
    d: *const StpgDiscretization,
    a: f64,
    c_s: *mut f64,
    c_s_omega: *mut f64,
) -> StpgStatus {
    guard(|| {
        let disc = unsafe { handle(d) }?;
        let k = disc.grid().max_step();
        let c = cfl_constant(disc.pair(), k).map_err(lift)?;
        unsafe { write(c_s, c, "c_s") }?;
        if !c_s_omega.is_null() {
            let w = cfl_omega(disc.pair(), k, a).map_err(lift)?;
            unsafe { c_s_omega.write(w) };
        }
        Ok(())
    })
}

/// Discrete inf-sup and continuity constants of the heat operator with
/// diffusion `a`, in the weighted (`weighted != 0`) or plain norm pair.
/// Fails with `ResourceCap` above `max_dofs` trial unknowns.
///
/// # Safety
/// `d` must be a live handle; the out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn stpg_infsup(
    d: *const StpgDiscretization,
    a: f64,
    weighted: i32,
    max_dofs: usize,
    sigma_min: *mut f64,
    sigma_max: *mut f64,
) -> StpgStatus {
    guard(|| {
        let disc = unsafe { handle(d) }?;
        let norms = if weighted != 0 { NormChoice::Weighted } else { NormChoice::Unweighted };
        let r = constants_report(disc, a, norms, f64::INFINITY, max_dofs).map_err(lift)?;
        unsafe {
            write(sigma_min, r.sigma_min, "sigma_min")?;
            write(sigma_max, r.sigma_max, "sigma_max")
        }
    })
}

/// Largest moment order guaranteed by the integrability exponents of `1/amin`,
/// `amax/amin` and the data. Each exponent lies in `[1, ∞]`; pass `INFINITY`
/// for bounded quantities. The result may be `INFINITY`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn stpg_predict_max_moment(alpha: f64, beta: f64, gamma: f64, out: *mut f64) -> StpgStatus {
    guard(|| {
        let e = |x| Exponent::new(x).map_err(lift);
        let p = predict_max_moment(e(alpha)?, e(beta)?, e(gamma)?);
        unsafe { write(out, p.to_f64(), "out") }
    })
}

/// Copies the last error message of this thread, NUL terminated and
/// truncated to `len` bytes, into `buf`. Returns the full message length
/// plus one, so a call with `len = 0` sizes the buffer.
///
/// # Safety
/// `buf` must be null or valid for `len` byte writes.
#[no_mangle]
pub unsafe extern "C" fn stpg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                buf.add(n).write(0);
            }
        }
        bytes.len() + 1
    })
}

/// Static, NUL-terminated name of a status code; unknown codes map to `"unknown"`.
#[no_mangle]
pub extern "C" fn stpg_status_name(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer\0",
        2 => b"invalid argument\0",
        3 => b"unsupported\0",
        4 => b"invalid coefficient\0",
        5 => b"not positive definite\0",
        6 => b"shape mismatch\0",
        7 => b"inconsistent input\0",
        8 => b"resource cap\0",
        9 => b"io error\0",
        10 => b"panic\0",
        _ => b"unknown\0",
    };
    s.as_ptr().cast()
}
