//! C ABI over the `wqed` workbench.
//!
//! Every entry point returns a [`WqedStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`wqed_last_error`]. Handles are opaque and must be released with the
//! matching `_free` function.
//!
//! All pointer arguments must be NULL or valid for the access implied by
//! their type; output arrays must hold the stated length.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wqed::config::{EmitterConfig, GridSpec, PhysicalScale, TimeGrid};
use wqed::dynamics::{build_hamiltonian, dde_evolve, emitter_excited_state, markov_population, Propagator};
use wqed::{metrology, spectral, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WqedStatus {
    Ok = 0,
    NullPointer = 1,
    /// Rejected parameters or configuration (CLI exit code 2).
    InvalidArgument = 2,
    /// Numerical failure (CLI exit code 3).
    Numerical = 3,
    /// Output buffer shorter than the number of samples; the required length
    /// is still written.
    BufferTooSmall = 4,
    Panic = 5,
}

/// Giant-emitter geometry and couplings.
pub struct WqedEmitter {
    config: EmitterConfig,
}

/// Diagonalized emitter-plus-waveguide Hamiltonian started from the excited
/// emitter.
pub struct WqedPropagator {
    inner: Propagator,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WqedDerived {
    /// Per-leg coupling `G / M`.
    pub g: f64,
    pub phi: f64,
    pub tau: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WqedOptimalPoint {
    pub omega_opt: f64,
    pub phi_opt: f64,
    pub slope_max: f64,
    pub rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Buffer { needed: usize, got: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WqedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WqedStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            WqedStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, got })) => {
            set_error(format!("buffer holds {got} samples, {needed} needed"));
            WqedStatus::BufferTooSmall
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                2 => WqedStatus::InvalidArgument,
                _ => WqedStatus::Numerical,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            WqedStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(p: *mut T, what: &'static str, value: T) -> Result<(), Failure> {
    let slot = p.as_mut().ok_or(Failure::Null(what))?;
    *slot = value;
    Ok(())
}

/// Message of the last failed call on this thread, or NULL after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn wqed_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn wqed_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!(),
    };
    VERSION.as_ptr()
}

/// Creates an emitter with `m` legs, total coupling `g_total`, leg spacing
/// `d`, group velocity `v` and bare frequency `omega`.
#[no_mangle]
pub unsafe extern "C" fn wqed_emitter_new(
    m: usize,
    g_total: f64,
    d: f64,
    v: f64,
    omega: f64,
    out: *mut *mut WqedEmitter,
) -> WqedStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let config = EmitterConfig::new(m, g_total, d, v, omega)?;
        *out = Box::into_raw(Box::new(WqedEmitter { config }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wqed_emitter_free(emitter: *mut WqedEmitter) {
    if !emitter.is_null() {
        drop(Box::from_raw(emitter));
    }
}

#[no_mangle]
pub unsafe extern "C" fn wqed_emitter_derived(emitter: *const WqedEmitter, out: *mut WqedDerived) -> WqedStatus {
    guard(|| {
        let q = get(emitter, "emitter")?.config.derive();
        put(out, "out", WqedDerived { g: q.g, phi: q.phi, tau: q.tau })
    })
}

/// Moves the emitter frequency to `omega`.
#[no_mangle]
pub unsafe extern "C" fn wqed_emitter_set_omega(emitter: *mut WqedEmitter, omega: f64) -> WqedStatus {
    guard(|| {
        let e = emitter.as_mut().ok_or(Failure::Null("emitter"))?;
        e.config = e.config.with_omega(omega)?;
        Ok(())
    })
}

/// Markovian decay rate `R(omega)`.
#[no_mangle]
pub unsafe extern "C" fn wqed_decay_rate(emitter: *const WqedEmitter, omega: f64, out: *mut f64) -> WqedStatus {
    guard(|| put(out, "out", spectral::decay_rate(&get(emitter, "emitter")?.config, omega)))
}

/// Collective Lamb shift `L(omega)`.
#[no_mangle]
pub unsafe extern "C" fn wqed_lamb_shift(emitter: *const WqedEmitter, omega: f64, out: *mut f64) -> WqedStatus {
    guard(|| put(out, "out", spectral::lamb_shift(&get(emitter, "emitter")?.config, omega)))
}

/// `dR/dOmega` at `omega`.
#[no_mangle]
pub unsafe extern "C" fn wqed_decay_slope(emitter: *const WqedEmitter, omega: f64, out: *mut f64) -> WqedStatus {
    guard(|| put(out, "out", spectral::decay_slope(&get(emitter, "emitter")?.config, omega)))
}

/// Right-flank maximizer of `|dR/dOmega|`. Needs `m >= 2`.
#[no_mangle]
pub unsafe extern "C" fn wqed_find_optimal(emitter: *const WqedEmitter, out: *mut WqedOptimalPoint) -> WqedStatus {
    guard(|| {
        let o = spectral::find_optimal(&get(emitter, "emitter")?.config)?;
        put(
            out,
            "out",
            WqedOptimalPoint { omega_opt: o.omega_opt, phi_opt: o.phi_opt, slope_max: o.slope_max, rate: o.rate },
        )
    })
}

unsafe fn fill(population: &[f64], out: *mut f64, len: usize, written: *mut usize) -> Result<(), Failure> {
    put(written, "written", population.len())?;
    if len < population.len() {
        return Err(Failure::Buffer { needed: population.len(), got: len });
    }
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    std::slice::from_raw_parts_mut(out, population.len()).copy_from_slice(population);
    Ok(())
}

/// Markovian population on `0, dt, ..., t_max`. `*written` always receives
/// the number of samples.
#[no_mangle]
pub unsafe extern "C" fn wqed_markov_population(
    emitter: *const WqedEmitter,
    t_max: f64,
    dt: f64,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> WqedStatus {
    guard(|| {
        let c = &get(emitter, "emitter")?.config;
        let tg = TimeGrid::new(t_max, dt)?;
        fill(&markov_population(c, &tg).population, out, len, written)
    })
}

/// Delay-equation population. `dt` is first shrunk to divide the delay
/// `d / v`, so the sample count can exceed `t_max / dt + 1`.
#[no_mangle]
pub unsafe extern "C" fn wqed_dde_population(
    emitter: *const WqedEmitter,
    t_max: f64,
    dt: f64,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> WqedStatus {
    guard(|| {
        let c = &get(emitter, "emitter")?.config;
        let tg = TimeGrid::new(t_max, dt)?;
        fill(&dde_evolve(c, &tg)?.population, out, len, written)
    })
}

/// Diagonalizes the emitter coupled to `n_modes` waveguide modes (default
/// window). Cost grows as `n_modes^3`.
#[no_mangle]
pub unsafe extern "C" fn wqed_propagator_new(
    emitter: *const WqedEmitter,
    n_modes: usize,
    out: *mut *mut WqedPropagator,
) -> WqedStatus {
    guard(|| {
        let c = &get(emitter, "emitter")?.config;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let grid = GridSpec { n_modes, ..GridSpec::default() }.build(c)?;
        let h = build_hamiltonian(c, &grid)?;
        let inner = Propagator::new(&h, &emitter_excited_state(&grid))?;
        *out = Box::into_raw(Box::new(WqedPropagator { inner }));
        Ok(())
    })
}

/// Excited-state population at time `t`.
#[no_mangle]
pub unsafe extern "C" fn wqed_propagator_population(
    propagator: *const WqedPropagator,
    t: f64,
    out: *mut f64,
) -> WqedStatus {
    guard(|| {
        let p = &get(propagator, "propagator")?.inner;
        put(out, "out", p.components_at(t, 0..1)[0].norm_sqr())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wqed_propagator_dim(propagator: *const WqedPropagator, out: *mut usize) -> WqedStatus {
    guard(|| put(out, "out", get(propagator, "propagator")?.inner.dim()))
}

#[no_mangle]
pub unsafe extern "C" fn wqed_propagator_free(propagator: *mut WqedPropagator) {
    if !propagator.is_null() {
        drop(Box::from_raw(propagator));
    }
}

/// Markovian `f_H` in Hz/T^2 at frequency `omega` after dimensionless time `t`.
#[no_mangle]
pub unsafe extern "C" fn wqed_cfi_markov(
    emitter: *const WqedEmitter,
    omega: f64,
    t: f64,
    omega_ref: f64,
    gamma: f64,
    out: *mut f64,
) -> WqedStatus {
    guard(|| {
        let c = &get(emitter, "emitter")?.config;
        let scale = PhysicalScale::new(omega_ref, gamma)?;
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidConfig(format!("t must be positive, got {t}")).into());
        }
        put(out, "out", metrology::cfi_per_time_markov(c, omega, t, &scale))
    })
}

/// `S_H = f_H^{-1/2}`.
#[no_mangle]
pub unsafe extern "C" fn wqed_sensitivity(f_h: f64, out: *mut f64) -> WqedStatus {
    guard(|| put(out, "out", metrology::sensitivity(f_h)?))
}

/// `P (1 - P) / (dP/dOmega)^2`; infinite for a zero slope.
#[no_mangle]
pub unsafe extern "C" fn wqed_variance_from_population(pe: f64, dpe_domega: f64, out: *mut f64) -> WqedStatus {
    guard(|| put(out, "out", metrology::variance_from_population(pe, dpe_domega)?))
}
