//! C ABI over the `fbcsf` library.
//!
//! Surfaces and chords are opaque heap handles owned by the caller and
//! released with their `_free` function. Every entry point returns an
//! [`FbcsfStatus`]; on failure a message is kept per thread and can be
//! copied out with [`fbcsf_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fbcsf::config::{ExperimentConfig, Preset, SurfaceConfig};
use fbcsf::curve::Chord;
use fbcsf::flow::{evolve_classify, FlowConfig, FlowOutcome};
use fbcsf::stability::{morse_index, robin_spectrum};
use fbcsf::surface::DiskSurface;
use fbcsf::{Error, Point};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbcsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Geometry = 4,
    Numeric = 5,
    Precondition = 6,
    Config = 7,
    Certificate = 8,
    Io = 9,
    Panic = 10,
    /// A caller buffer is too small; the message states the needed size.
    BufferTooSmall = 11,
}

/// How a flow run ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbcsfOutcome {
    Geodesic = 0,
    HalfPoint = 1,
    Timeout = 2,
}

/// Opaque surface handle.
pub struct FbcsfSurface(DiskSurface);

/// Opaque chord handle.
pub struct FbcsfChord(Chord);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> FbcsfStatus {
    match err {
        Error::Domain(..) => FbcsfStatus::Domain,
        Error::Geometry(_) | Error::Topology(_) | Error::Degenerate(_) => FbcsfStatus::Geometry,
        Error::Integration(_) | Error::Numeric { .. } | Error::Resolution(_) => FbcsfStatus::Numeric,
        Error::Precondition(_) => FbcsfStatus::Precondition,
        Error::Config(_) => FbcsfStatus::Config,
        Error::Certificate(_) => FbcsfStatus::Certificate,
        Error::Io(_) => FbcsfStatus::Io,
    }
}

struct Fail(FbcsfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FbcsfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(FbcsfStatus::InvalidArgument, msg.into())
}

/// Runs `f`, turning errors and panics into a status plus stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FbcsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FbcsfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            FbcsfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn surface_arg<'a>(p: *const FbcsfSurface) -> Result<&'a DiskSurface, Fail> {
    p.as_ref().map(|s| &s.0).ok_or_else(|| null("surface"))
}

unsafe fn chord_arg<'a>(p: *const FbcsfChord) -> Result<&'a Chord, Fail> {
    p.as_ref().map(|c| &c.0).ok_or_else(|| null("chord"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbcsf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a named surface preset. Non-positive `a` or `b` select the
/// preset's default semi-axes.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_surface_preset(name: *const c_char, a: f64, b: f64, out: *mut *mut FbcsfSurface) -> FbcsfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let preset = Preset::parse(str_arg(name, "name")?)?;
        let pick = |v: f64| (v > 0.0).then_some(v);
        let cfg = SurfaceConfig { preset, a: pick(a), b: pick(b), phi: None };
        *out = Box::into_raw(Box::new(FbcsfSurface(cfg.build()?)));
        Ok(())
    })
}

/// # Safety
/// `surface` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_surface_free(surface: *mut FbcsfSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Gaussian curvature at the chart point `(x, y)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_surface_gaussian_curvature(surface: *const FbcsfSurface, x: f64, y: f64, out: *mut f64) -> FbcsfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        *out_arg(out, "out")? = s.gaussian_curvature(Point::new(x, y))?;
        Ok(())
    })
}

/// The chart line `{u · (cos θ, sin θ) = offset}` with `segments + 1` samples.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_chord_line(
    surface: *const FbcsfSurface,
    normal_angle: f64,
    offset: f64,
    segments: usize,
    out: *mut *mut FbcsfChord,
) -> FbcsfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(FbcsfChord(Chord::line(s, normal_angle, offset, segments)?)));
        Ok(())
    })
}

/// A chord through `count` chart points; the first and last must lie on
/// the boundary.
///
/// # Safety
/// `xs` and `ys` must be valid for `count` reads; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_chord_from_points(
    surface: *const FbcsfSurface,
    xs: *const f64,
    ys: *const f64,
    count: usize,
    out: *mut *mut FbcsfChord,
) -> FbcsfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let out = out_arg(out, "out")?;
        if xs.is_null() || ys.is_null() {
            return Err(null("coordinates"));
        }
        let (xs, ys) = (std::slice::from_raw_parts(xs, count), std::slice::from_raw_parts(ys, count));
        let pts = xs.iter().zip(ys).map(|(x, y)| Point::new(*x, *y)).collect();
        *out = Box::into_raw(Box::new(FbcsfChord(Chord::from_points(s, pts)?)));
        Ok(())
    })
}

/// # Safety
/// `chord` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_chord_free(chord: *mut FbcsfChord) {
    if !chord.is_null() {
        drop(Box::from_raw(chord));
    }
}

/// Metric length of the chord.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_chord_length(chord: *const FbcsfChord, out: *mut f64) -> FbcsfStatus {
    guard(|| {
        *out_arg(out, "out")? = chord_arg(chord)?.length();
        Ok(())
    })
}

/// Copies the chart samples into `xs` and `ys`, each of capacity `cap`.
/// `count` receives the number of samples; if it exceeds `cap` nothing is
/// copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `xs` and `ys` must be valid for `cap` writes; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_chord_samples(
    chord: *const FbcsfChord,
    xs: *mut f64,
    ys: *mut f64,
    cap: usize,
    count: *mut usize,
) -> FbcsfStatus {
    guard(|| {
        let c = chord_arg(chord)?;
        let count = out_arg(count, "count")?;
        *count = c.len();
        if c.len() > cap {
            return Err(Fail(FbcsfStatus::BufferTooSmall, format!("{} samples, capacity {cap}", c.len())));
        }
        if xs.is_null() || ys.is_null() {
            return Err(null("output buffers"));
        }
        for (i, p) in c.samples().iter().enumerate() {
            *xs.add(i) = p.x;
            *ys.add(i) = p.y;
        }
        Ok(())
    })
}

/// The `k` lowest Robin eigenvalues of the stability operator of a free
/// boundary geodesic, with its Morse index and nullity.
///
/// # Safety
/// `eigenvalues` must be valid for `k` writes; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_robin_spectrum(
    surface: *const FbcsfSurface,
    geodesic: *const FbcsfChord,
    k: usize,
    eigenvalues: *mut f64,
    index: *mut usize,
    nullity: *mut usize,
) -> FbcsfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let g = chord_arg(geodesic)?;
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        if eigenvalues.is_null() {
            return Err(null("eigenvalues"));
        }
        let index = out_arg(index, "index")?;
        let nullity = out_arg(nullity, "nullity")?;
        let spec = robin_spectrum(s, g, k)?;
        let mi = morse_index(s, g)?;
        std::ptr::copy_nonoverlapping(spec.eigenvalues.as_ptr(), eigenvalues, k);
        *index = mi.index;
        *nullity = mi.nullity;
        Ok(())
    })
}

/// Flows `chord` until it converges to a geodesic, shrinks to a boundary
/// point or reaches `t_max`. `final_length` receives the length of the last
/// snapshot. When `geodesic` is not null and the run converged it receives
/// a new chord handle, otherwise null.
///
/// # Safety
/// `surface`, `chord`, `outcome` and `final_length` must be valid;
/// `geodesic` may be null.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_flow(
    surface: *const FbcsfSurface,
    chord: *const FbcsfChord,
    t_max: f64,
    segments: usize,
    outcome: *mut FbcsfOutcome,
    final_length: *mut f64,
    geodesic: *mut *mut FbcsfChord,
) -> FbcsfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let c = chord_arg(chord)?;
        let outcome = out_arg(outcome, "outcome")?;
        let final_length = out_arg(final_length, "final_length")?;
        if !(t_max > 0.0) || segments < 8 {
            return Err(invalid("t_max must be positive and segments at least 8"));
        }
        let cfg = FlowConfig { t_max, segments, ..FlowConfig::default() };
        let run = evolve_classify(s, c, &cfg)?;
        *final_length = run.snapshots.last().map_or(run.initial_length, |s| s.length);
        if let Some(g) = geodesic.as_mut() {
            *g = std::ptr::null_mut();
        }
        *outcome = match run.outcome {
            FlowOutcome::Geodesic { chord, .. } => {
                if let Some(g) = geodesic.as_mut() {
                    *g = Box::into_raw(Box::new(FbcsfChord(chord)));
                }
                FbcsfOutcome::Geodesic
            }
            FlowOutcome::HalfPoint { .. } => FbcsfOutcome::HalfPoint,
            FlowOutcome::Timeout { .. } => FbcsfOutcome::Timeout,
        };
        Ok(())
    })
}

/// Runs an experiment described by a TOML config, writing artifacts to its
/// output directory. `exit_code` receives the command line exit code (0
/// ok, 3 audit violation); errors are returned as a status.
///
/// # Safety
/// `config` must be a NUL-terminated string and `exit_code` valid.
#[no_mangle]
pub unsafe extern "C" fn fbcsf_run_config(config: *const c_char, exit_code: *mut i32) -> FbcsfStatus {
    guard(|| {
        let exit_code = out_arg(exit_code, "exit_code")?;
        let cfg = ExperimentConfig::from_toml(str_arg(config, "config")?)?;
        *exit_code = fbcsf::cli::run(&cfg)?.exit_code;
        Ok(())
    })
}
