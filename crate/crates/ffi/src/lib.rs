//! C interface to `lrinv-core`.
//!
//! Every function returns an [`LrinvStatus`]. On failure the message is kept
//! per thread and can be read with [`lrinv_last_error_message`]. Handles are
//! opaque; each `*_new`/`*_from_*` has a matching `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lrinv_core::config::{preset, ModelConfig};
use lrinv_core::ermakov::ErmakovSolution;
use lrinv_core::operators::{GridSpec, StencilOrder, WavefunctionFrame};
use lrinv_core::params::OscillatorModel;
use lrinv_core::propagator::propagate;
use lrinv_core::wavefunction::{eigenfunction_frame, exact_solution_frame, EVEN, ODD};
use lrinv_core::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrinvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    OutOfWindow = 4,
    Numerical = 5,
    BoundaryLeak = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrinvParity {
    Even = 0,
    Odd = 1,
}

/// Uniform grid. `order` is the finite-difference order: 2, 4, 6 or 8.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LrinvGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    pub order: u32,
}

/// A parsed and validated oscillator model.
pub struct LrinvModel {
    config: ModelConfig,
    model: OscillatorModel,
}

/// An auxiliary-equation solution on a time interval.
pub struct LrinvRho {
    solution: ErmakovSolution,
}

/// A wavefunction sampled on a grid at one time.
pub struct LrinvFrame {
    frame: WavefunctionFrame,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LrinvStatus {
    match e {
        Error::Config(_) | Error::InvalidDescriptor(_) => LrinvStatus::Config,
        Error::InvalidArgument(_) | Error::NonpositiveMass { .. } => LrinvStatus::InvalidArgument,
        Error::OutOfWindow { .. } => LrinvStatus::OutOfWindow,
        Error::BoundaryLeak { .. } => LrinvStatus::BoundaryLeak,
        _ => LrinvStatus::Numerical,
    }
}

fn fail(status: LrinvStatus, msg: impl Into<String>) -> LrinvStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), LrinvStatus>>(f: F) -> LrinvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LrinvStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LrinvStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LrinvStatus>;
}

impl<T> OrStatus<T> for lrinv_core::Result<T> {
    fn or_status(self) -> Result<T, LrinvStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, LrinvStatus> {
    p.as_ref().ok_or_else(|| fail(LrinvStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LrinvStatus> {
    p.as_mut().ok_or_else(|| fail(LrinvStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, LrinvStatus> {
    if p.is_null() {
        return Err(fail(LrinvStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LrinvStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn grid_spec(g: &LrinvGrid) -> Result<GridSpec, LrinvStatus> {
    let order = StencilOrder::from_order(g.order)
        .ok_or_else(|| fail(LrinvStatus::InvalidArgument, format!("unsupported stencil order {}", g.order)))?;
    Ok(GridSpec::new(g.q_min, g.q_max, g.n_points).or_status()?.with_order(order))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes excluding the
/// terminator, or 0 when there is no message.
#[no_mangle]
pub unsafe extern "C" fn lrinv_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
        None => 0,
    })
}

/// Parses a JSON model document.
#[no_mangle]
pub unsafe extern "C" fn lrinv_model_from_json(json: *const c_char, out: *mut *mut LrinvModel) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = c_str(json, "json")?;
        let config = ModelConfig::from_json(text).or_status()?;
        let model = config.build().or_status()?;
        *out = boxed(LrinvModel { config, model });
        Ok(())
    })
}

/// Loads a built-in model by name, e.g. "ck-reference".
#[no_mangle]
pub unsafe extern "C" fn lrinv_model_from_preset(name: *const c_char, out: *mut *mut LrinvModel) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = preset(c_str(name, "name")?).or_status()?;
        let model = p.model.build().or_status()?;
        *out = boxed(LrinvModel { config: p.model, model });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lrinv_model_free(model: *mut LrinvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Modified frequency squared at `t`.
#[no_mangle]
pub unsafe extern "C" fn lrinv_model_omega_sq(model: *const LrinvModel, t: f64, out: *mut f64) -> LrinvStatus {
    guard(|| {
        let m = deref(model, "model")?;
        *out_ptr(out, "out")? = m.model.modified_frequency_sq(t).or_status()?;
        Ok(())
    })
}

/// Solves for rho on [t0, t1] (closed form when available).
#[no_mangle]
pub unsafe extern "C" fn lrinv_rho_new(model: *const LrinvModel, t0: f64, t1: f64, out: *mut *mut LrinvRho) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = deref(model, "model")?;
        if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
            return Err(fail(LrinvStatus::InvalidArgument, format!("invalid interval [{t0}, {t1}]")));
        }
        let solution = m.config.ermakov(&m.model, t0, t1).or_status()?;
        *out = boxed(LrinvRho { solution });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lrinv_rho_eval(rho: *const LrinvRho, t: f64, value: *mut f64, derivative: *mut f64) -> LrinvStatus {
    guard(|| {
        let r = deref(rho, "rho")?;
        let s = r.solution.state(t).or_status()?;
        *out_ptr(value, "value")? = s.rho;
        if !derivative.is_null() {
            *derivative = s.rho_dot;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lrinv_rho_free(rho: *mut LrinvRho) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Normalized Gaussian exp(-(q-q0)^2/(4 sigma^2) + i k0 q).
#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_gaussian(
    grid: LrinvGrid,
    t: f64,
    q0: f64,
    sigma: f64,
    k0: f64,
    out: *mut *mut LrinvFrame,
) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let frame = WavefunctionFrame::gaussian(grid_spec(&grid)?, t, q0, sigma, k0).or_status()?;
        *out = boxed(LrinvFrame { frame });
        Ok(())
    })
}

/// Frame from `grid.n_points` real and imaginary parts.
#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_from_values(
    grid: LrinvGrid,
    t: f64,
    re: *const f64,
    im: *const f64,
    out: *mut *mut LrinvFrame,
) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = grid_spec(&grid)?;
        deref(re, "re")?;
        deref(im, "im")?;
        let re = std::slice::from_raw_parts(re, g.n_points);
        let im = std::slice::from_raw_parts(im, g.n_points);
        let values = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let frame = WavefunctionFrame::new(g, t, values).or_status()?;
        *out = boxed(LrinvFrame { frame });
        Ok(())
    })
}

/// Invariant eigenfunction (`with_phase == 0`) or exact Schrödinger solution
/// (`with_phase != 0`) for eigenvalue `lambda` at time `t`.
#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_eigen(
    model: *const LrinvModel,
    rho: *const LrinvRho,
    lambda: f64,
    parity: LrinvParity,
    grid: LrinvGrid,
    t: f64,
    with_phase: c_int,
    out: *mut *mut LrinvFrame,
) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = deref(model, "model")?;
        let r = deref(rho, "rho")?;
        let g = grid_spec(&grid)?;
        let mix = match parity {
            LrinvParity::Even => EVEN,
            LrinvParity::Odd => ODD,
        };
        let frame = if with_phase != 0 {
            exact_solution_frame(lambda, mix, &m.model, &r.solution, &g, t)
        } else {
            eigenfunction_frame(lambda, mix, &m.model, &r.solution, &g, t)
        }
        .or_status()?;
        *out = boxed(LrinvFrame { frame });
        Ok(())
    })
}

/// Crank–Nicolson propagation of `initial` to `t_final`.
#[no_mangle]
pub unsafe extern "C" fn lrinv_propagate(
    model: *const LrinvModel,
    initial: *const LrinvFrame,
    t_final: f64,
    dt: f64,
    out: *mut *mut LrinvFrame,
) -> LrinvStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = deref(model, "model")?;
        let f = deref(initial, "initial")?;
        let run = propagate(&m.model, &f.frame, t_final, dt).or_status()?;
        let frame = run.final_frame().clone();
        *out = boxed(LrinvFrame { frame });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_len(frame: *const LrinvFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.frame.values().len())
}

#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_time(frame: *const LrinvFrame) -> f64 {
    frame.as_ref().map_or(f64::NAN, |f| f.frame.t())
}

/// Squared norm on the grid.
#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_norm_sq(frame: *const LrinvFrame) -> f64 {
    frame.as_ref().map_or(f64::NAN, |f| f.frame.norm_sq())
}

/// Copies values into caller buffers of length `len`.
#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_values(frame: *const LrinvFrame, re: *mut f64, im: *mut f64, len: usize) -> LrinvStatus {
    guard(|| {
        let f = deref(frame, "frame")?;
        let v = f.frame.values();
        if len < v.len() {
            return Err(fail(LrinvStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", v.len())));
        }
        out_ptr(re, "re")?;
        out_ptr(im, "im")?;
        let re = std::slice::from_raw_parts_mut(re, v.len());
        let im = std::slice::from_raw_parts_mut(im, v.len());
        for (k, z) in v.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lrinv_frame_free(frame: *mut LrinvFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}
