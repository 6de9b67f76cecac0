//! C interface to the adaptive TDVP engine.
//!
//! Every fallible function returns an [`AtdvpStatus`]. On failure a
//! human-readable message is kept per thread and can be fetched with
//! [`atdvp_last_error_message`]. Simulations are opaque handles created by
//! [`atdvp_simulation_new`] and released with [`atdvp_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use adaptive_tdvp::config::parse_config;
use adaptive_tdvp::sim::{run_simulation, Simulation};
use adaptive_tdvp::Error;

/// Result codes shared by all entry points.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtdvpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Engine = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque simulation handle.
pub struct AtdvpSimulation {
    inner: Simulation,
}

/// Spin observables and junction fluxes at one instant.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AtdvpObservables {
    pub time: f64,
    pub sz: f64,
    pub sx: f64,
    pub sy: f64,
    pub flux_a: f64,
    pub flux_b: f64,
    pub energy: f64,
    pub norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> AtdvpStatus {
    match e {
        Error::Config(_) => AtdvpStatus::Config,
        Error::Io(_) => AtdvpStatus::Io,
        _ => AtdvpStatus::Engine,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guarded(body: impl FnOnce() -> Result<(), (AtdvpStatus, String)>) -> AtdvpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AtdvpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AtdvpStatus::Panic
        }
    }
}

fn engine(e: Error) -> (AtdvpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (AtdvpStatus, String) {
    (AtdvpStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `s` must be null or point to a nul-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (AtdvpStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and nul-terminated per the caller's contract.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|e| (AtdvpStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// # Safety
/// `sim` must be null or a live handle from [`atdvp_simulation_new`].
unsafe fn handle<'a>(sim: *const AtdvpSimulation) -> Result<&'a AtdvpSimulation, (AtdvpStatus, String)> {
    // SAFETY: see the caller's contract.
    unsafe { sim.as_ref() }.ok_or_else(|| null("simulation handle"))
}

/// Message of the last failed call on this thread, or null if it succeeded.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn atdvp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn atdvp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `config_text` (key=value lines) and builds a simulation at `t = 0`.
///
/// # Safety
/// `config_text` must be a nul-terminated string and `out` a valid pointer to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_new(
    config_text: *const c_char,
    out: *mut *mut AtdvpSimulation,
) -> AtdvpStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = ptr::null_mut() };
        let text = unsafe { read_str(config_text, "config_text") }?;
        let cfg = parse_config(text).map_err(engine)?;
        let inner = Simulation::new(&cfg).map_err(engine)?;
        let boxed = Box::new(AtdvpSimulation { inner });
        // SAFETY: as above.
        unsafe { *out = Box::into_raw(boxed) };
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`atdvp_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_free(sim: *mut AtdvpSimulation) {
    if !sim.is_null() {
        // SAFETY: ownership returns to Rust exactly once per the contract.
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Advances by up to `steps` time steps, stopping early at `t_max`.
///
/// `done` (optional) receives the number of steps actually taken.
///
/// # Safety
/// `sim` must be a live handle; `done` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_step(
    sim: *mut AtdvpSimulation,
    steps: usize,
    done: *mut usize,
) -> AtdvpStatus {
    guarded(|| {
        // SAFETY: see the contract.
        let sim = unsafe { sim.as_mut() }.ok_or_else(|| null("simulation handle"))?;
        let mut taken = 0;
        let result = (|| {
            while taken < steps && !sim.inner.is_finished() {
                sim.inner.step()?;
                taken += 1;
            }
            Ok(())
        })();
        if !done.is_null() {
            // SAFETY: non-null and writable per the contract.
            unsafe { *done = taken };
        }
        result.map_err(engine)
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle and `time` writable.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_time(sim: *const AtdvpSimulation, time: *mut f64) -> AtdvpStatus {
    guarded(|| {
        let sim = unsafe { handle(sim) }?;
        if time.is_null() {
            return Err(null("time"));
        }
        // SAFETY: non-null and writable per the contract.
        unsafe { *time = sim.inner.time() };
        Ok(())
    })
}

/// Whether the configured `t_max` has been reached.
///
/// # Safety
/// `sim` must be a live handle and `finished` writable.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_is_finished(
    sim: *const AtdvpSimulation,
    finished: *mut bool,
) -> AtdvpStatus {
    guarded(|| {
        let sim = unsafe { handle(sim) }?;
        if finished.is_null() {
            return Err(null("finished"));
        }
        // SAFETY: non-null and writable per the contract.
        unsafe { *finished = sim.inner.is_finished() };
        Ok(())
    })
}

/// Measures the current state.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_observables(
    sim: *const AtdvpSimulation,
    out: *mut AtdvpObservables,
) -> AtdvpStatus {
    guarded(|| {
        let sim = unsafe { handle(sim) }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = sim.inner.observables().map_err(engine)?;
        let value = AtdvpObservables {
            time: o.time,
            sz: o.sz,
            sx: o.sx,
            sy: o.sy,
            flux_a: o.flux_a,
            flux_b: o.flux_b,
            energy: o.energy,
            norm: o.norm,
        };
        // SAFETY: non-null and writable per the contract.
        unsafe { *out = value };
        Ok(())
    })
}

/// Copies the internal bond dimensions `D_1 … D_{N−1}` into `buf`.
///
/// `len` always receives the number of bonds. Pass a null `buf` to query it;
/// a buffer shorter than that fails with `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `sim` must be a live handle, `len` writable and `buf` null or valid for
/// `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn atdvp_simulation_bond_dims(
    sim: *const AtdvpSimulation,
    buf: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> AtdvpStatus {
    guarded(|| {
        let sim = unsafe { handle(sim) }?;
        if len.is_null() {
            return Err(null("len"));
        }
        let dims = sim.inner.bond_dims();
        // SAFETY: non-null and writable per the contract.
        unsafe { *len = dims.len() };
        if buf.is_null() {
            return Ok(());
        }
        if capacity < dims.len() {
            return Err((
                AtdvpStatus::BufferTooSmall,
                format!("need {} entries, buffer holds {capacity}", dims.len()),
            ));
        }
        // SAFETY: `buf` is valid for `capacity >= dims.len()` writes.
        unsafe { ptr::copy_nonoverlapping(dims.as_ptr(), buf, dims.len()) };
        Ok(())
    })
}

/// Runs a full simulation and writes its output files into `output_dir` of the config.
///
/// # Safety
/// `config_text` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn atdvp_run(config_text: *const c_char) -> AtdvpStatus {
    guarded(|| {
        let text = unsafe { read_str(config_text, "config_text") }?;
        let cfg = parse_config(text).map_err(engine)?;
        run_simulation(&cfg).map_err(engine)?;
        Ok(())
    })
}
