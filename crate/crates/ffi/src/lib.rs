//! C ABI for `membrane-lab`.
//!
//! Every function returns an [`MlStatus`]; results go through out-pointers.
//! Objects are opaque handles freed by their `_free` function. The message
//! of the last failure on the calling thread is available from
//! [`ml_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use membrane_lab::error::Error;
use membrane_lab::experiments::{
    parse_config, run_domination_check, run_gibbs_diagnostics, run_percolation, run_pinned_decay, run_sobolev_decay,
    run_unpinned_decay, write_output, ExperimentOutput,
};
use membrane_lab::geometry::{interior_points, weighted_distance};
use membrane_lab::lattice::{LatticeWindow, Site};
use membrane_lab::percolation::{box_empty_prob_bound, choose_m};
use membrane_lab::pinning::PinConfiguration;
use membrane_lab::solver::{green_column, rw_green_plateau, Backend};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFree = 3,
    SizeLimit = 4,
    Numerical = 5,
    Truncated = 6,
    InsufficientRange = 7,
    Config = 8,
    Io = 9,
    Panic = 10,
}

/// A box `[lo, hi]` of `Z^d`.
pub struct MlWindow(LatticeWindow);

/// A pinned set on a window.
pub struct MlPins(PinConfiguration);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MlStatus {
    match e {
        Error::NotFree(_) | Error::EmptyFreeRegion => MlStatus::NotFree,
        Error::SizeLimit { .. } => MlStatus::SizeLimit,
        Error::NotPositiveDefinite { .. } | Error::NoConvergence { .. } => MlStatus::Numerical,
        Error::Truncated(_) | Error::ZeroDenominator(_) => MlStatus::Truncated,
        Error::InsufficientRange(_) => MlStatus::InsufficientRange,
        Error::Config(_) | Error::Json(_) | Error::Parse(_) => MlStatus::Config,
        Error::Io(_) => MlStatus::Io,
        _ => MlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> MlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside membrane-lab".into());
            MlStatus::Panic
        }
    }
}

fn null(what: &str) -> Error {
    Error::InvalidArgument(format!("{what} is null"))
}

unsafe fn coords<'a>(p: *const i64, n: usize) -> Result<&'a [i64], Error> {
    if p.is_null() {
        return Err(null("coordinate array"));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn out_buf<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Error> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err(Error::InvalidArgument(format!("output buffer holds {len} values, need {need}")));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Error::InvalidArgument(e.to_string()))
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument".into());
            return MlStatus::NullPointer;
        }
    };
}

/// Message of the last failed call on this thread; valid until the next
/// failing call. Never null.
#[no_mangle]
pub extern "C" fn ml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `lo` and `hi` point to `dim` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_window_new(dim: usize, lo: *const i64, hi: *const i64, out: *mut *mut MlWindow) -> MlStatus {
    nonnull!(lo, hi, out);
    guard(|| {
        let w = LatticeWindow::new(coords(lo, dim)?.to_vec(), coords(hi, dim)?.to_vec())?;
        *out = Box::into_raw(Box::new(MlWindow(w)));
        Ok(())
    })
}

/// # Safety
/// `w` is null or a handle from [`ml_window_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_window_free(w: *mut MlWindow) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` is a live window handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_window_len(w: *const MlWindow, out: *mut usize) -> MlStatus {
    nonnull!(w, out);
    *out = (*w).0.len();
    MlStatus::Ok
}

/// Index of the site `c` (`dim` coordinates) in the row-major site order
/// used by every output buffer.
///
/// # Safety
/// `w` is a live window handle, `c` points to `dim` values, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_window_index(w: *const MlWindow, c: *const i64, out: *mut usize) -> MlStatus {
    nonnull!(w, c, out);
    guard(|| {
        let w = &(*w).0;
        *out = w
            .index_of_coords(coords(c, w.dim())?)
            .ok_or_else(|| Error::InvalidArgument("site outside the window".into()))?;
        Ok(())
    })
}

/// An empty pinned set on `w`.
///
/// # Safety
/// `w` is a live window handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_pins_new(w: *const MlWindow, out: *mut *mut MlPins) -> MlStatus {
    nonnull!(w, out);
    *out = Box::into_raw(Box::new(MlPins(PinConfiguration::empty((*w).0.clone()))));
    MlStatus::Ok
}

/// Independent Bernoulli(`p`) pins from a seeded ChaCha8 stream.
///
/// # Safety
/// `w` is a live window handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_pins_bernoulli(w: *const MlWindow, p: f64, seed: u64, out: *mut *mut MlPins) -> MlStatus {
    nonnull!(w, out);
    guard(|| {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p must lie in [0,1], got {p}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        *out = Box::into_raw(Box::new(MlPins(PinConfiguration::bernoulli((*w).0.clone(), p, &mut rng))));
        Ok(())
    })
}

/// # Safety
/// `a` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_pins_free(a: *mut MlPins) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// # Safety
/// `a` is a live pin handle; `c` points to `dim` values.
#[no_mangle]
pub unsafe extern "C" fn ml_pins_set(a: *mut MlPins, c: *const i64, pinned: bool) -> MlStatus {
    nonnull!(a, c);
    guard(|| {
        let a = &mut (*a).0;
        let i = a
            .window()
            .index_of_coords(coords(c, a.window().dim())?)
            .ok_or_else(|| Error::InvalidArgument("site outside the window".into()))?;
        a.set(i, pinned);
        Ok(())
    })
}

/// # Safety
/// `a` is a live pin handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_pins_count(a: *const MlPins, out: *mut usize) -> MlStatus {
    nonnull!(a, out);
    *out = (*a).0.count();
    MlStatus::Ok
}

/// `G^A_W(source, ·)` in window site order, by a banded Cholesky solve.
///
/// # Safety
/// `a` is a live pin handle, `source` points to `dim` values and `out` to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_green_column(a: *const MlPins, source: *const i64, out: *mut f64, len: usize) -> MlStatus {
    nonnull!(a, source, out);
    guard(|| {
        let a = &(*a).0;
        let w = a.window();
        let s = Site::new(coords(source, w.dim())?.to_vec());
        let buf = out_buf(out, len, w.len())?;
        let g = green_column(&a.free_region(), &s, Backend::Banded)?;
        buf.copy_from_slice(g.values());
        Ok(())
    })
}

/// `G(0, z)` on `Z^d`, `d ≥ 5`, from the random-walk series up to `m_max`
/// steps plus its tail.
///
/// # Safety
/// `z` points to `dim` values; `value` is writable, `uncertainty` may be null.
#[no_mangle]
pub unsafe extern "C" fn ml_rw_green(
    dim: usize,
    z: *const i64,
    m_max: usize,
    value: *mut f64,
    uncertainty: *mut f64,
) -> MlStatus {
    nonnull!(z, value);
    guard(|| {
        let p = rw_green_plateau(coords(z, dim)?, m_max)?;
        *value = p.value;
        if !uncertainty.is_null() {
            *uncertainty = p.uncertainty;
        }
        Ok(())
    })
}

/// Node-weighted distance `d̂_A(source, ·)` in window site order.
///
/// # Safety
/// `a` is a live pin handle, `source` points to `dim` values and `out` to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_weighted_distance(
    a: *const MlPins,
    exterior_pinned: bool,
    source: *const i64,
    out: *mut f64,
    len: usize,
) -> MlStatus {
    nonnull!(a, source, out);
    guard(|| {
        let a = &(*a).0;
        let w = a.window();
        let s = Site::new(coords(source, w.dim())?.to_vec());
        let buf = out_buf(out, len, w.len())?;
        let d = weighted_distance(&s, &interior_points(a, exterior_pinned).weights())?;
        buf.copy_from_slice(d.values());
        Ok(())
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_box_empty_bound(m: u64, p: f64, dim: usize, out: *mut f64) -> MlStatus {
    nonnull!(out);
    guard(|| {
        *out = box_empty_prob_bound(m, p, dim)?;
        Ok(())
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_choose_m(p: f64, dim: usize, out: *mut u64) -> MlStatus {
    nonnull!(out);
    guard(|| {
        *out = choose_m(p, dim)?;
        Ok(())
    })
}

fn run_named(name: &str, config: &str) -> Result<ExperimentOutput, Error> {
    let text = if config.trim().is_empty() { "{}" } else { config };
    Ok(match name {
        "green" => run_unpinned_decay(&parse_config(text)?)?,
        "pinned-decay" => run_pinned_decay(&parse_config(text)?)?.0,
        "sobolev-decay" => run_sobolev_decay(&parse_config(text)?)?.0,
        "domination" => run_domination_check(&parse_config(text)?)?,
        "percolation" => run_percolation(&parse_config(text)?)?.0,
        "gibbs-diagnostics" => run_gibbs_diagnostics(&parse_config(text)?)?,
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    })
}

/// Runs an experiment by its command-line name with a JSON config (empty or
/// null for defaults) and writes its tables and summary to `out_dir`.
/// `passed` receives whether every hard check passed.
///
/// # Safety
/// `name` and `out_dir` are NUL-terminated strings, `config` is null or one,
/// and `passed` is writable.
#[no_mangle]
pub unsafe extern "C" fn ml_run_experiment(
    name: *const c_char,
    config: *const c_char,
    out_dir: *const c_char,
    passed: *mut bool,
) -> MlStatus {
    nonnull!(name, out_dir, passed);
    guard(|| {
        let cfg = if config.is_null() { "" } else { str_arg(config)? };
        let out = run_named(str_arg(name)?, cfg)?;
        write_output(Path::new(str_arg(out_dir)?), &out)?;
        *passed = out.pass();
        Ok(())
    })
}
