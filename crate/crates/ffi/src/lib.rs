//! C ABI over `coupled_decay`.
//!
//! Objects cross the boundary as opaque handles created by `cd_*_new` /
//! `cd_certify` / `cd_trajectory_run` and released by the matching `*_free`.
//! Every fallible call returns a [`CdStatus`]; on failure the message is kept
//! per thread and read with [`cd_last_error_message`]. Strings handed out by
//! this library are released with [`cd_string_free`].

#![allow(clippy::missing_safety_doc, clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coupled_decay::catalog::{generate_spectrum, ExampleSpec};
use coupled_decay::energy::k_energy;
use coupled_decay::lyapunov::{certify, default_lambda_grid, CertificateReport};
use coupled_decay::propagator::{run_trajectory, ModalState, Trajectory};
use coupled_decay::scalar::{scalar_decay_check, ScalarParams};
use coupled_decay::spectral::coupling_bound;
use coupled_decay::{Error, Spectrum, SystemParams};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Certificate = 4,
    OutOfRange = 5,
    Internal = 6,
}

/// System coefficients: `u'' + b u' + A u + α A^β v = 0`,
/// `v'' + (A² + ζ A) v + α A^β u = 0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdSystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub damping_b: f64,
    pub zeta_pert: f64,
}

impl From<CdSystemParams> for SystemParams {
    fn from(p: CdSystemParams) -> Self {
        SystemParams { alpha: p.alpha, beta: p.beta, damping_b: p.damping_b, zeta_pert: p.zeta_pert }
    }
}

pub struct CdSpectrum(Spectrum);
pub struct CdCertificate(CertificateReport);
pub struct CdTrajectory {
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CdStatus {
    match err {
        Error::InvalidSpectrum(_) | Error::Dimension { .. } => CdStatus::InvalidArgument,
        Error::Domain(_) | Error::TrajectoryTooShort { .. } => CdStatus::Domain,
        Error::Certificate(_) => CdStatus::Certificate,
        Error::Range(_) => CdStatus::OutOfRange,
        Error::Invariant(_) => CdStatus::Internal,
    }
}

/// Runs `f`, records any error or panic, and returns its status.
fn guard(f: impl FnOnce() -> Result<(), (CdStatus, String)>) -> CdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CdStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (CdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CdStatus, String) {
    (CdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (CdStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (CdStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or NULL. Release with
/// [`cd_string_free`].
#[no_mangle]
pub extern "C" fn cd_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a spectrum from `n` positive nondecreasing eigenvalues.
#[no_mangle]
pub unsafe extern "C" fn cd_spectrum_new(
    eigenvalues: *const f64,
    n: usize,
    out: *mut *mut CdSpectrum,
) -> CdStatus {
    guard(|| {
        let eigs = slice(eigenvalues, n, "eigenvalues")?.to_vec();
        let s = Spectrum::new(eigs, "ffi").map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CdSpectrum(s))), "out")
    })
}

/// Builds a spectrum from a preset such as `dirichlet:N=64`.
#[no_mangle]
pub unsafe extern "C" fn cd_spectrum_from_example(preset: *const c_char, out: *mut *mut CdSpectrum) -> CdStatus {
    guard(|| {
        if preset.is_null() {
            return Err(null("preset"));
        }
        let text = CStr::from_ptr(preset)
            .to_str()
            .map_err(|_| (CdStatus::InvalidArgument, "preset is not UTF-8".to_string()))?;
        let spec: ExampleSpec = text.parse().map_err(lib_err)?;
        let s = generate_spectrum(&spec).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CdSpectrum(s))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_spectrum_n_modes(spectrum: *const CdSpectrum, out: *mut usize) -> CdStatus {
    guard(|| write_out(out, deref(spectrum, "spectrum")?.0.n_modes(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn cd_spectrum_lambda1(spectrum: *const CdSpectrum, out: *mut f64) -> CdStatus {
    guard(|| write_out(out, deref(spectrum, "spectrum")?.0.lambda1(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn cd_spectrum_free(spectrum: *mut CdSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// `λ₁^{(3−2β)/2}`, the strict bound on `|α|`.
#[no_mangle]
pub unsafe extern "C" fn cd_coupling_bound(spectrum: *const CdSpectrum, beta: f64, out: *mut f64) -> CdStatus {
    guard(|| {
        let b = coupling_bound(&deref(spectrum, "spectrum")?.0, beta).map_err(lib_err)?;
        write_out(out, b, "out")
    })
}

/// Certifies the Lyapunov function over the spectrum and a geometric probe
/// grid up to `grid_max_factor·λ₁` with `grid_per_decade` points per decade.
/// A failing certificate is still returned with `CD_STATUS_OK`.
#[no_mangle]
pub unsafe extern "C" fn cd_certify(
    spectrum: *const CdSpectrum,
    params: *const CdSystemParams,
    grid_max_factor: f64,
    grid_per_decade: usize,
    out: *mut *mut CdCertificate,
) -> CdStatus {
    guard(|| {
        let s = &deref(spectrum, "spectrum")?.0;
        let p: SystemParams = (*deref(params, "params")?).into();
        if !(grid_max_factor >= 1.0) {
            return Err((CdStatus::InvalidArgument, format!("grid_max_factor = {grid_max_factor} must be >= 1")));
        }
        let grid = default_lambda_grid(s.lambda1(), grid_max_factor, grid_per_decade);
        let report = certify(&p, s, &grid, None).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CdCertificate(report))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_certificate_passed(cert: *const CdCertificate, out: *mut bool) -> CdStatus {
    guard(|| write_out(out, deref(cert, "certificate")?.0.passed, "out"))
}

/// Uniform `γ*` with `−H_ε' ≥ γ*·K`.
#[no_mangle]
pub unsafe extern "C" fn cd_certificate_gamma(cert: *const CdCertificate, out: *mut f64) -> CdStatus {
    guard(|| write_out(out, deref(cert, "certificate")?.0.uniform_gamma, "out"))
}

/// The failing `λ`, or NaN for a passing certificate.
#[no_mangle]
pub unsafe extern "C" fn cd_certificate_failing_lambda(cert: *const CdCertificate, out: *mut f64) -> CdStatus {
    guard(|| write_out(out, deref(cert, "certificate")?.0.failing_lambda.unwrap_or(f64::NAN), "out"))
}

/// Full report as JSON. Release with [`cd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cd_certificate_to_json(cert: *const CdCertificate, out: *mut *mut c_char) -> CdStatus {
    guard(|| {
        let text = serde_json::to_string(&deref(cert, "certificate")?.0)
            .map_err(|e| (CdStatus::Internal, e.to_string()))?;
        let c = CString::new(text).map_err(|e| (CdStatus::Internal, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_certificate_free(cert: *mut CdCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Propagates `init` (`4·n_modes` values, `(u, v, u', v')` per mode) to
/// `t_end` in `n_steps` exact steps.
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_run(
    spectrum: *const CdSpectrum,
    params: *const CdSystemParams,
    init: *const f64,
    init_len: usize,
    t_end: f64,
    n_steps: usize,
    out: *mut *mut CdTrajectory,
) -> CdStatus {
    guard(|| {
        let s = &deref(spectrum, "spectrum")?.0;
        let p: SystemParams = (*deref(params, "params")?).into();
        let flat = slice(init, init_len, "init")?;
        if init_len != 4 * s.n_modes() {
            return Err((
                CdStatus::InvalidArgument,
                format!("init has {init_len} values, expected 4 x {} modes", s.n_modes()),
            ));
        }
        let coeffs = flat.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
        let state = ModalState::new(0.0, coeffs).map_err(lib_err)?;
        let traj = run_trajectory(&state, &p, s, t_end, n_steps).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CdTrajectory { traj })), "out")
    })
}

/// Number of samples, `n_steps + 1`.
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_len(traj: *const CdTrajectory, out: *mut usize) -> CdStatus {
    guard(|| write_out(out, deref(traj, "trajectory")?.traj.len(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_time(traj: *const CdTrajectory, k: usize, out: *mut f64) -> CdStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.traj;
        let v = *t.times.get(k).ok_or((CdStatus::OutOfRange, format!("sample {k} of {}", t.len())))?;
        write_out(out, v, "out")
    })
}

/// Copies sample `k` into `buf` (`4·n_modes` values).
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_state(
    traj: *const CdTrajectory,
    k: usize,
    buf: *mut f64,
    buf_len: usize,
) -> CdStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.traj;
        let state = t.states.get(k).ok_or((CdStatus::OutOfRange, format!("sample {k} of {}", t.len())))?;
        let need = 4 * state.n_modes();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if buf_len < need {
            return Err((CdStatus::InvalidArgument, format!("buf holds {buf_len} values, need {need}")));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (chunk, x) in dst.chunks_exact_mut(4).zip(&state.coeffs) {
            chunk.copy_from_slice(x);
        }
        Ok(())
    })
}

/// Weak-norm energy `K` at every sample, written into `buf` (`len` values).
#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_k_series(traj: *const CdTrajectory, buf: *mut f64, buf_len: usize) -> CdStatus {
    guard(|| {
        let t = &deref(traj, "trajectory")?.traj;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if buf_len < t.len() {
            return Err((CdStatus::InvalidArgument, format!("buf holds {buf_len} values, need {}", t.len())));
        }
        let dst = std::slice::from_raw_parts_mut(buf, t.len());
        for (d, s) in dst.iter_mut().zip(&t.states) {
            *d = k_energy(s, &t.params, &t.spectrum).map_err(lib_err)?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_trajectory_free(traj: *mut CdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Tail decay rate of `K` for the scalar system and its spectral-abscissa
/// reference, `init` holding `(u, v, u', v')`.
#[no_mangle]
pub unsafe extern "C" fn cd_scalar_decay_check(
    lambda: f64,
    mu: f64,
    c: f64,
    init: *const f64,
    t_end: f64,
    n_steps: usize,
    measured_rate: *mut f64,
    oracle_rate: *mut f64,
) -> CdStatus {
    guard(|| {
        let x = slice(init, 4, "init")?;
        let p = ScalarParams::new(lambda, mu, c).map_err(lib_err)?;
        let check = scalar_decay_check(&p, &[x[0], x[1], x[2], x[3]], t_end, n_steps).map_err(lib_err)?;
        if measured_rate.is_null() || oracle_rate.is_null() {
            return Err(null("rate output"));
        }
        measured_rate.write(check.measured_rate);
        oracle_rate.write(check.oracle_rate);
        Ok(())
    })
}
