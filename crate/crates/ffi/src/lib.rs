//! C ABI for the steadytube library: opaque handles, integer error codes,
//! and a generated `include/steadytube.h` header (via cbindgen).
//!
//! Conventions:
//! - Every fallible function returns an [`StStatus`] code; `ST_OK` is 0.
//! - Output values are written through pointers that must be non-null and
//!   valid for the advertised length.
//! - Handles are created and destroyed by this library only; passing a
//!   handle after freeing it is undefined behaviour.
//! - On any non-OK status, a thread-local message is available through
//!   [`st_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::sync::Arc;

use steadytube::evans::{self, ProfilePath};
use steadytube::limits::{self, GasBoundaryData, PressureLaw};
use steadytube::ode::OdeOptions;
use steadytube::steady::{self, SteadyProfile};
use steadytube::system::{SystemDef, VecF};
use steadytube::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    /// Success.
    StOk = 0,
    /// A pointer argument was null or a scalar argument was out of range.
    StInvalidArgument = 1,
    /// Malformed configuration (JSON schema, unknown system, bad matrix).
    StConfigError = 2,
    /// Numerical failure (no convergence, blow-up, singular matrix).
    StNumericalError = 3,
    /// A state left the domain of definition of the system.
    StDomainError = 4,
    /// The operation is not supported for this system.
    StUnsupported = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> StStatus {
    match err {
        Error::Config(_) | Error::Json(_) => StStatus::StConfigError,
        Error::InvalidParameter(_) => StStatus::StInvalidArgument,
        Error::DomainViolation(_) => StStatus::StDomainError,
        Error::Unsupported(_) => StStatus::StUnsupported,
        _ => StStatus::StNumericalError,
    }
}

fn fail(err: &Error) -> StStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn fail_arg(msg: &str) -> StStatus {
    set_error(msg);
    StStatus::StInvalidArgument
}

/// Opaque handle to a system definition.
pub struct StSystem {
    sys: Arc<SystemDef>,
}

/// Opaque handle to a solved steady profile (keeps its system alive).
pub struct StProfile {
    sys: Arc<SystemDef>,
    profile: SteadyProfile,
}

/// Copy the most recent error message of this thread into `buf`
/// (NUL-terminated, truncated to `len` bytes). Returns the full message
/// length in bytes, excluding the NUL.
///
/// # Safety
/// `buf` must be valid for writes of `len` bytes, or null (then nothing is
/// written and only the length is returned).
#[no_mangle]
pub unsafe extern "C" fn st_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Build a system from a JSON configuration string such as
/// `{"system":"isentropic_ns","gamma":2.0,"a":1.0,"nu":0.1}` and store a
/// handle in `out`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
/// The returned handle must be released with [`st_system_free`].
#[no_mangle]
pub unsafe extern "C" fn st_system_from_json(
    json: *const c_char,
    out: *mut *mut StSystem,
) -> StStatus {
    if json.is_null() || out.is_null() {
        return fail_arg("null pointer");
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => return fail_arg("config is not valid UTF-8"),
    };
    match steadytube::system::from_config(text) {
        Ok(sys) => {
            *out = Box::into_raw(Box::new(StSystem { sys: Arc::new(sys) }));
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Release a system handle. Passing null is a no-op.
///
/// # Safety
/// `handle` must be a pointer previously returned by [`st_system_from_json`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn st_system_free(handle: *mut StSystem) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Total state dimension n of the system, or 0 for a null handle.
///
/// # Safety
/// `handle` must be a live system handle or null.
#[no_mangle]
pub unsafe extern "C" fn st_system_n(handle: *const StSystem) -> usize {
    if handle.is_null() {
        0
    } else {
        (&*handle).sys.n
    }
}

/// Number of hyperbolic (inviscid) components r, or 0 for a null handle.
///
/// # Safety
/// `handle` must be a live system handle or null.
#[no_mangle]
pub unsafe extern "C" fn st_system_r(handle: *const StSystem) -> usize {
    if handle.is_null() {
        0
    } else {
        (&*handle).sys.r
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Solve the steady boundary-value problem by shooting and store a profile
/// handle in `out`. `u0` has length n, `u1_ii` length n−r; `c2_guess` may be
/// null (zero initial guess) or have length n−r.
///
/// # Safety
/// `sys` must be a live system handle; array pointers must be valid for the
/// stated lengths; `out` must be a valid pointer. The returned handle must
/// be released with [`st_profile_free`].
#[no_mangle]
pub unsafe extern "C" fn st_solve_steady(
    sys: *const StSystem,
    u0: *const f64,
    u1_ii: *const f64,
    c2_guess: *const f64,
    out: *mut *mut StProfile,
) -> StStatus {
    if sys.is_null() || out.is_null() {
        return fail_arg("null pointer");
    }
    let sysref = &(*sys).sys;
    let n = sysref.n;
    let p = n - sysref.r;
    let (u0s, u1s) = match (slice_arg(u0, n), slice_arg(u1_ii, p)) {
        (Some(a), Some(b)) => (a, b),
        _ => return fail_arg("null boundary data"),
    };
    let guess = match slice_arg(c2_guess, p) {
        Some(g) => VecF::from_column_slice(g),
        None => VecF::zeros(p),
    };
    let opts = OdeOptions::default();
    match steady::solve_steady(
        sysref,
        &VecF::from_column_slice(u0s),
        &VecF::from_column_slice(u1s),
        &guess,
        &opts,
    ) {
        Ok(profile) => {
            *out = Box::into_raw(Box::new(StProfile {
                sys: Arc::clone(sysref),
                profile,
            }));
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Release a profile handle. Passing null is a no-op.
///
/// # Safety
/// `handle` must be a pointer previously returned by [`st_solve_steady`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn st_profile_free(handle: *mut StProfile) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Evaluate the profile at `x` ∈ [0,1]; writes n values into `out`.
///
/// # Safety
/// `handle` must be a live profile handle; `out` must be valid for n writes.
#[no_mangle]
pub unsafe extern "C" fn st_profile_eval(
    handle: *const StProfile,
    x: f64,
    out: *mut f64,
) -> StStatus {
    if handle.is_null() || out.is_null() {
        return fail_arg("null pointer");
    }
    let h = &*handle;
    if !(0.0..=1.0).contains(&x) {
        return fail_arg("x outside [0,1]");
    }
    match h.profile.eval(&h.sys, x) {
        Ok(u) => {
            std::ptr::copy_nonoverlapping(u.as_slice().as_ptr(), out, u.len());
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Shooting residual |Φ| of the solved profile (NaN for a null handle).
///
/// # Safety
/// `handle` must be a live profile handle or null.
#[no_mangle]
pub unsafe extern "C" fn st_profile_residual(handle: *const StProfile) -> f64 {
    if handle.is_null() {
        f64::NAN
    } else {
        (*handle).profile.residual
    }
}

/// det dΦ at the solution (NaN for a null handle).
///
/// # Safety
/// `handle` must be a live profile handle or null.
#[no_mangle]
pub unsafe extern "C" fn st_profile_det_dphi(handle: *const StProfile) -> f64 {
    if handle.is_null() {
        f64::NAN
    } else {
        (*handle).profile.det_dphi
    }
}

/// Copy the shooting constants C₂ (length n−r) into `out`.
///
/// # Safety
/// `handle` must be a live profile handle; `out` must be valid for n−r
/// writes.
#[no_mangle]
pub unsafe extern "C" fn st_profile_c2(handle: *const StProfile, out: *mut f64) -> StStatus {
    if handle.is_null() || out.is_null() {
        return fail_arg("null pointer");
    }
    let c2 = &(*handle).profile.constants.c2;
    std::ptr::copy_nonoverlapping(c2.as_slice().as_ptr(), out, c2.len());
    StStatus::StOk
}

/// Evaluate the Evans function D(λ) at λ = `re` + i·`im` along the profile;
/// writes log|D| and the phase of D (radians).
///
/// # Safety
/// `handle` must be a live profile handle; `out_log_mag` and `out_phase`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn st_evans_eval(
    handle: *const StProfile,
    re: f64,
    im: f64,
    out_log_mag: *mut f64,
    out_phase: *mut f64,
) -> StStatus {
    if handle.is_null() || out_log_mag.is_null() || out_phase.is_null() {
        return fail_arg("null pointer");
    }
    let h = &*handle;
    let path = ProfilePath::from_steady(&h.sys, &h.profile);
    match evans::evans_eval(&h.sys, &path, num_complex::Complex64::new(re, im)) {
        Ok(s) => {
            *out_log_mag = s.d.log_mag;
            *out_phase = s.d.phase;
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Stability index μ = sgn D(0)·sgn D(λ_max) of the profile. Pass
/// `lambda_max` ≤ 0 for the automatic high-frequency cutoff. Writes μ
/// (+1, −1, or 0 when indeterminate) and the number of real-axis sign
/// changes found.
///
/// # Safety
/// `handle` must be a live profile handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn st_stability_index(
    handle: *const StProfile,
    lambda_max: f64,
    out_mu: *mut i32,
    out_sign_changes: *mut usize,
) -> StStatus {
    if handle.is_null() || out_mu.is_null() || out_sign_changes.is_null() {
        return fail_arg("null pointer");
    }
    let h = &*handle;
    let path = ProfilePath::from_steady(&h.sys, &h.profile);
    let lmax = if lambda_max > 0.0 {
        Some(lambda_max)
    } else {
        None
    };
    match evans::stability_index(&h.sys, &path, lmax) {
        Ok(v) => {
            *out_mu = v.mu;
            *out_sign_changes = v.real_axis_sign_changes;
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Zero-frequency comparison: writes sgn D(0), sgn det dΦ, and whether they
/// agree (1 agree, 0 disagree, −1 degenerate comparison).
///
/// # Safety
/// `handle` must be a live profile handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn st_evans_zero_check(
    handle: *const StProfile,
    out_sign_d0: *mut f64,
    out_sign_det_dphi: *mut f64,
    out_agree: *mut i32,
) -> StStatus {
    if handle.is_null()
        || out_sign_d0.is_null()
        || out_sign_det_dphi.is_null()
        || out_agree.is_null()
    {
        return fail_arg("null pointer");
    }
    let h = &*handle;
    match evans::evans_at_zero(&h.sys, &h.profile) {
        Ok(rep) => {
            *out_sign_d0 = rep.sign_d0;
            *out_sign_det_dphi = rep.sign_det_dphi;
            *out_agree = match rep.signs_agree {
                Some(true) => 1,
                Some(false) => 0,
                None => -1,
            };
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Classify the zero-viscosity limit of isentropic boundary data
/// (pressure p = a·ρ^γ, inflow density `rho0`, velocities `u0`, `u1`).
/// On success `*out_json` receives a malloc-style JSON document that must be
/// released with [`st_string_free`].
///
/// # Safety
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn st_classify_inviscid(
    rho0: f64,
    u0: f64,
    u1: f64,
    gamma: f64,
    a: f64,
    nu: f64,
    out_json: *mut *mut c_char,
) -> StStatus {
    if out_json.is_null() {
        return fail_arg("null pointer");
    }
    let go = || -> Result<String, Error> {
        let pr = PressureLaw::new(a, gamma)?;
        let data = GasBoundaryData::new(rho0, u0, u1, pr, nu)?;
        let cfg = limits::classify_inviscid(&data)?;
        Ok(serde_json::to_string_pretty(&cfg)?)
    };
    match go() {
        Ok(json) => {
            let c = CString::new(json).unwrap_or_default();
            *out_json = c.into_raw();
            StStatus::StOk
        }
        Err(e) => fail(&e),
    }
}

/// Release a string returned by this library. Passing null is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by a `st_*` function that
/// documents this deallocator, and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn st_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn make_system() -> *mut StSystem {
        let json =
            CString::new(r#"{"system":"isentropic_ns","gamma":2.0,"a":1.0,"nu":0.5}"#).unwrap();
        let mut h: *mut StSystem = ptr::null_mut();
        let code = unsafe { st_system_from_json(json.as_ptr(), &mut h) };
        assert_eq!(code, StStatus::StOk);
        h
    }

    fn make_profile(sys: *mut StSystem) -> *mut StProfile {
        let u0 = [1.2f64, 0.7];
        let u1 = [0.8f64];
        let mut p: *mut StProfile = ptr::null_mut();
        let code = unsafe {
            st_solve_steady(sys, u0.as_ptr(), u1.as_ptr(), ptr::null(), &mut p)
        };
        assert_eq!(code, StStatus::StOk);
        p
    }

    #[test]
    fn solve_eval_roundtrip() {
        let sys = make_system();
        assert_eq!(unsafe { st_system_n(sys) }, 2);
        assert_eq!(unsafe { st_system_r(sys) }, 1);
        let prof = make_profile(sys);
        let res = unsafe { st_profile_residual(prof) };
        assert!(res < 1e-8, "residual {res}");
        let mut u = [0.0f64; 2];
        assert_eq!(
            unsafe { st_profile_eval(prof, 0.0, u.as_mut_ptr()) },
            StStatus::StOk
        );
        assert!((u[0] - 1.2).abs() < 1e-10 && (u[1] - 0.7).abs() < 1e-10);
        assert_eq!(
            unsafe { st_profile_eval(prof, 1.0, u.as_mut_ptr()) },
            StStatus::StOk
        );
        assert!((u[1] - 0.8).abs() < 1e-7, "u(1) = {}", u[1]);
        let mut c2 = [0.0f64];
        assert_eq!(
            unsafe { st_profile_c2(prof, c2.as_mut_ptr()) },
            StStatus::StOk
        );
        assert!(c2[0].is_finite());
        unsafe {
            st_profile_free(prof);
            st_system_free(sys);
        }
    }

    #[test]
    fn evans_and_index_through_the_abi() {
        let sys = make_system();
        let prof = make_profile(sys);
        let (mut lm, mut ph) = (0.0f64, 0.0f64);
        assert_eq!(
            unsafe { st_evans_eval(prof, 1.0, 0.0, &mut lm, &mut ph) },
            StStatus::StOk
        );
        assert!(lm.is_finite());
        let (mut d0, mut dphi, mut agree) = (0.0f64, 0.0f64, -2i32);
        assert_eq!(
            unsafe { st_evans_zero_check(prof, &mut d0, &mut dphi, &mut agree) },
            StStatus::StOk
        );
        assert_eq!(agree, 1);
        let (mut mu, mut changes) = (0i32, 0usize);
        assert_eq!(
            unsafe { st_stability_index(prof, 30.0, &mut mu, &mut changes) },
            StStatus::StOk
        );
        assert_eq!(mu, 1);
        assert_eq!(changes, 0);
        unsafe {
            st_profile_free(prof);
            st_system_free(sys);
        }
    }

    #[test]
    fn classify_returns_json() {
        let conj = 1.1861406616345072f64;
        let mut s: *mut c_char = ptr::null_mut();
        let code = unsafe {
            st_classify_inviscid(0.5, 2.0, 2.0 * 0.5 / conj, 2.0, 1.0, 0.01, &mut s)
        };
        assert_eq!(code, StStatus::StOk);
        let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
        assert!(text.contains("InteriorShock"), "{text}");
        unsafe { st_string_free(s) };
    }

    #[test]
    fn errors_set_code_and_message() {
        let json = CString::new(r#"{"system":"unknown_model"}"#).unwrap();
        let mut h: *mut StSystem = ptr::null_mut();
        let code = unsafe { st_system_from_json(json.as_ptr(), &mut h) };
        assert_eq!(code, StStatus::StConfigError);
        let mut buf = [0i8; 256];
        let len = unsafe { st_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
        assert!(len > 0);

        let code = unsafe { st_system_from_json(ptr::null(), &mut h) };
        assert_eq!(code, StStatus::StInvalidArgument);

        // invalid boundary data dimension errors come back as numerical or
        // argument codes, never panics
        let sys = make_system();
        let mut p: *mut StProfile = ptr::null_mut();
        let code = unsafe {
            st_solve_steady(sys, ptr::null(), ptr::null(), ptr::null(), &mut p)
        };
        assert_eq!(code, StStatus::StInvalidArgument);
        unsafe { st_system_free(sys) };
    }
}
