//! C ABI over the `scanlat` library.
//!
//! Every function returns a [`ScanlatStatus`]; on failure the message is kept
//! per thread and can be copied out with [`scanlat_last_error`]. Objects are
//! opaque handles created by `*_new`/`*_from_*` functions and released with
//! the matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use scanlat::config::{Config, Phase, PhaseKeyword};
use scanlat::optics::{self, LatencyField};
use scanlat::pipeline::{self, SimTrace};
use scanlat::psychometrics::{self, Boundary, TrialRecord};
use scanlat::time::Nanos;
use scanlat::{geometry, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanlatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Validation = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Parsed run configuration.
pub struct ScanlatConfig {
    preset: Option<String>,
    text: Option<String>,
    overrides: Vec<String>,
    config: Config,
}

/// Per-pixel latency values on a mapping grid.
pub struct ScanlatField {
    field: LatencyField,
}

/// Result of a pipeline simulation.
pub struct ScanlatTrace {
    trace: SimTrace,
}

/// Forward separation and single-eye sweep range in centimetres for both
/// ray-origin conditions.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScanlatTable19 {
    pub eye_cor_forward_cm: f64,
    pub eye_cor_zero_latency_cm: f64,
    pub eye_cor_latency_cm: f64,
    pub visual_axis_forward_cm: f64,
    pub visual_axis_zero_latency_cm: f64,
    pub visual_axis_latency_cm: f64,
}

/// Logistic fit. `threshold_ms` is NaN when the fit has no threshold.
/// `boundary` is 0 for none, then all-correct, none-correct, alpha limit,
/// beta limit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScanlatFit {
    pub alpha_ms: f64,
    pub beta_per_ms: f64,
    pub threshold_ms: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub boundary: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: ScanlatStatus, msg: impl Into<String>) -> ScanlatStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> ScanlatStatus {
    let status = match e.exit_code() {
        2 => ScanlatStatus::Config,
        4 => ScanlatStatus::Io,
        _ => ScanlatStatus::Validation,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> ScanlatStatus) -> ScanlatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ScanlatStatus::Panic, "internal panic"),
    }
}

/// Borrowed UTF-8 string from a C pointer.
unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, ScanlatStatus> {
    if p.is_null() {
        return Err(fail(ScanlatStatus::NullPointer, "null string"));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(ScanlatStatus::InvalidUtf8, "string is not UTF-8"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! try_lib {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(&Error::from(e)),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(ScanlatStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn scanlat_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: n + 1 <= len bytes are writable.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scanlat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

impl ScanlatConfig {
    fn reload(&self, extra: Option<&str>) -> Result<Config, Error> {
        let mut overrides = self.overrides.clone();
        overrides.extend(extra.map(str::to_string));
        Ok(Config::load(
            self.preset.as_deref(),
            self.text.as_deref().map(|t| ("<config>", t)),
            &overrides,
        )?)
    }
}

fn new_config(preset: Option<String>, text: Option<String>, out: *mut *mut ScanlatConfig) -> ScanlatStatus {
    let mut cfg = ScanlatConfig { preset, text, overrides: Vec::new(), config: Config::default() };
    cfg.config = try_lib!(cfg.reload(None));
    // SAFETY: checked non-null by the callers.
    unsafe { *out = Box::into_raw(Box::new(cfg)) };
    ScanlatStatus::Ok
}

/// Creates a configuration from a built-in preset; a null name gives the
/// built-in defaults.
///
/// # Safety
/// `name` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_config_from_preset(
    name: *const c_char,
    out: *mut *mut ScanlatConfig,
) -> ScanlatStatus {
    guard(|| {
        non_null!(out);
        let preset = if name.is_null() { None } else { Some(try_status!(unsafe { c_str(name) }).to_string()) };
        new_config(preset, None, out)
    })
}

/// Creates a configuration from TOML text merged over a preset (or the
/// defaults when `preset` is null).
///
/// # Safety
/// `preset` must be null or NUL-terminated; `toml` must be NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_config_from_toml(
    preset: *const c_char,
    toml: *const c_char,
    out: *mut *mut ScanlatConfig,
) -> ScanlatStatus {
    guard(|| {
        non_null!(out);
        let preset = if preset.is_null() { None } else { Some(try_status!(unsafe { c_str(preset) }).to_string()) };
        let text = try_status!(unsafe { c_str(toml) }).to_string();
        new_config(preset, Some(text), out)
    })
}

/// Applies a `section.key=value` override. On failure the configuration is
/// left unchanged.
///
/// # Safety
/// `config` must be a live handle; `assignment` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn scanlat_config_set(
    config: *mut ScanlatConfig,
    assignment: *const c_char,
) -> ScanlatStatus {
    guard(|| {
        non_null!(config);
        let a = try_status!(unsafe { c_str(assignment) });
        // SAFETY: live handle per contract.
        let cfg = unsafe { &mut *config };
        cfg.config = try_lib!(cfg.reload(Some(a)));
        cfg.overrides.push(a.to_string());
        ScanlatStatus::Ok
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scanlat_config_free(config: *mut ScanlatConfig) {
    if !config.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Display rows that fit in a compositing budget of `budget_ns`.
///
/// # Safety
/// `config` must be a live handle; `rows` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_rows_in_budget(
    config: *const ScanlatConfig,
    budget_ns: i64,
    rows: *mut u64,
) -> ScanlatStatus {
    guard(|| {
        non_null!(config, rows);
        let cfg = unsafe { &(*config).config };
        let display = try_lib!(cfg.display_spec());
        unsafe { *rows = display.rows_in_budget(Nanos(budget_ns)) };
        ScanlatStatus::Ok
    })
}

fn field_out(field: LatencyField, out: *mut *mut ScanlatField) -> ScanlatStatus {
    // SAFETY: checked non-null by the callers.
    unsafe { *out = Box::into_raw(Box::new(ScanlatField { field })) };
    ScanlatStatus::Ok
}

/// Static buffer-latency field; an `auto` camera phase is replaced by the
/// offset that makes its minimum zero.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_latency_field(
    config: *const ScanlatConfig,
    out: *mut *mut ScanlatField,
) -> ScanlatStatus {
    guard(|| {
        non_null!(config, out);
        let cfg = unsafe { &(*config).config };
        let mapping = try_lib!(cfg.mapping());
        let camera = try_lib!(cfg.camera_spec());
        let display = try_lib!(cfg.display_spec());
        let raw = try_lib!(optics::buffer_latency_field(&mapping, &camera, &display));
        let field = if cfg.camera.phase_ms == Phase::Keyword(PhaseKeyword::Auto) {
            raw.shifted(optics::select_phase_offset(&raw))
        } else {
            raw
        };
        field_out(field, out)
    })
}

/// # Safety
/// `field` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_field_dims(
    field: *const ScanlatField,
    columns: *mut u32,
    rows: *mut u32,
) -> ScanlatStatus {
    guard(|| {
        non_null!(field, columns, rows);
        let (c, r) = unsafe { &(*field).field }.dims();
        unsafe {
            *columns = c;
            *rows = r;
        }
        ScanlatStatus::Ok
    })
}

/// Minimum, maximum and mean over valid pixels, in nanoseconds.
///
/// # Safety
/// `field` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_field_stats(
    field: *const ScanlatField,
    min_ns: *mut i64,
    max_ns: *mut i64,
    mean_ns: *mut i64,
) -> ScanlatStatus {
    guard(|| {
        non_null!(field, min_ns, max_ns, mean_ns);
        let f = unsafe { &(*field).field };
        unsafe {
            *min_ns = f.stat_min().get();
            *max_ns = f.stat_max().get();
            *mean_ns = f.stat_mean().get();
        }
        ScanlatStatus::Ok
    })
}

/// Copies row-major values (nanoseconds) and validity flags. Either output
/// may be null. `len` must be at least columns * rows.
///
/// # Safety
/// Non-null outputs must point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn scanlat_field_values(
    field: *const ScanlatField,
    values_ns: *mut i64,
    valid: *mut bool,
    len: usize,
) -> ScanlatStatus {
    guard(|| {
        non_null!(field);
        let f = unsafe { &(*field).field };
        let n = f.values().len();
        if len < n {
            return fail(ScanlatStatus::BufferTooSmall, format!("need {n} elements, got {len}"));
        }
        if !values_ns.is_null() {
            let dst = unsafe { std::slice::from_raw_parts_mut(values_ns, n) };
            for (d, v) in dst.iter_mut().zip(f.values()) {
                *d = v.get();
            }
        }
        if !valid.is_null() {
            unsafe { std::slice::from_raw_parts_mut(valid, n) }.copy_from_slice(f.valid_mask());
        }
        ScanlatStatus::Ok
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scanlat_field_free(field: *mut ScanlatField) {
    if !field.is_null() {
        drop(unsafe { Box::from_raw(field) });
    }
}

/// Runs the compositor simulation for `frames` frames with jitter seed
/// `seed`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_simulate(
    config: *const ScanlatConfig,
    frames: u32,
    seed: u64,
    out: *mut *mut ScanlatTrace,
) -> ScanlatStatus {
    guard(|| {
        non_null!(config, out);
        let cfg = unsafe { &(*config).config };
        let mapping = Arc::new(try_lib!(cfg.mapping()));
        let pc = try_lib!(cfg.pipeline(mapping));
        let trace = try_lib!(pipeline::simulate(&pc, frames, seed));
        unsafe { *out = Box::into_raw(Box::new(ScanlatTrace { trace })) };
        ScanlatStatus::Ok
    })
}

/// # Safety
/// `trace` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_trace_summary(
    trace: *const ScanlatTrace,
    tear_count: *mut u64,
    event_count: *mut u64,
) -> ScanlatStatus {
    guard(|| {
        non_null!(trace, tear_count, event_count);
        let t = unsafe { &(*trace).trace };
        unsafe {
            *tear_count = t.tear_count;
            *event_count = t.events.len() as u64;
        }
        ScanlatStatus::Ok
    })
}

/// Mean per-pixel latency of the simulation as a new field handle.
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_trace_latency(
    trace: *const ScanlatTrace,
    out: *mut *mut ScanlatField,
) -> ScanlatStatus {
    guard(|| {
        non_null!(trace, out);
        field_out(unsafe { &(*trace).trace }.per_pixel_latency.clone(), out)
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn scanlat_trace_free(trace: *mut ScanlatTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Head-forward separation and sweep ranges at `latency_ms`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_table19(
    config: *const ScanlatConfig,
    latency_ms: f64,
    out: *mut ScanlatTable19,
) -> ScanlatStatus {
    guard(|| {
        non_null!(config, out);
        let cfg = unsafe { &(*config).config };
        let r = try_lib!(geometry::table19_report(&cfg.rig(), &cfg.trajectory(), latency_ms / 1e3));
        unsafe {
            *out = ScanlatTable19 {
                eye_cor_forward_cm: r.eye_cor.head_forward_cm,
                eye_cor_zero_latency_cm: r.eye_cor.range_zero_latency_cm,
                eye_cor_latency_cm: r.eye_cor.range_latency_cm,
                visual_axis_forward_cm: r.visual_axis.head_forward_cm,
                visual_axis_zero_latency_cm: r.visual_axis.range_zero_latency_cm,
                visual_axis_latency_cm: r.visual_axis.range_latency_cm,
            }
        };
        ScanlatStatus::Ok
    })
}

/// Peak and peak-to-peak binocular disparity error (arcseconds) for the
/// configured sinusoidal head motion at `latency_ms`.
///
/// # Safety
/// `config` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_disparity_error(
    config: *const ScanlatConfig,
    latency_ms: f64,
    peak_arcsec: *mut f64,
    peak_to_peak_arcsec: *mut f64,
) -> ScanlatStatus {
    guard(|| {
        non_null!(config, peak_arcsec, peak_to_peak_arcsec);
        let cfg = unsafe { &(*config).config };
        let (rig, traj, _) = cfg.disparity_setup();
        let t = try_lib!(geometry::disparity_error_trace(&rig, &traj, latency_ms / 1e3));
        unsafe {
            *peak_arcsec = t.peak_arcsec;
            *peak_to_peak_arcsec = t.peak_to_peak_arcsec;
        }
        ScanlatStatus::Ok
    })
}

/// Fits a logistic psychometric function to `n` trials.
///
/// # Safety
/// `latency_ms` and `correct` must point to `n` readable elements; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn scanlat_fit_logistic(
    latency_ms: *const f64,
    correct: *const bool,
    n: usize,
    guess_rate: f64,
    lapse_rate: f64,
    criterion: f64,
    out: *mut ScanlatFit,
) -> ScanlatStatus {
    guard(|| {
        non_null!(latency_ms, correct, out);
        let xs = unsafe { std::slice::from_raw_parts(latency_ms, n) };
        let cs = unsafe { std::slice::from_raw_parts(correct, n) };
        let trials: Vec<TrialRecord> =
            xs.iter().zip(cs).map(|(&x, &c)| TrialRecord { latency_ms: x, correct: c }).collect();
        let opts = psychometrics::FitOptions { guess_rate, lapse_rate };
        let fit = try_lib!(psychometrics::fit_logistic_with(&trials, &opts));
        let boundary = match fit.boundary {
            None => 0,
            Some(Boundary::AllCorrect) => 1,
            Some(Boundary::NoneCorrect) => 2,
            Some(Boundary::AlphaLimit) => 3,
            Some(Boundary::BetaLimit) => 4,
        };
        unsafe {
            *out = ScanlatFit {
                alpha_ms: fit.alpha,
                beta_per_ms: fit.beta,
                threshold_ms: psychometrics::threshold_at(&fit, criterion).unwrap_or(f64::NAN),
                log_likelihood: fit.log_likelihood,
                converged: fit.converged,
                boundary,
            }
        };
        ScanlatStatus::Ok
    })
}

/// Writes `n` Sobol-spaced latencies on `[lo_ms, hi_ms]` into `out`.
///
/// # Safety
/// `out` must point to `n` writable elements.
#[no_mangle]
pub unsafe extern "C" fn scanlat_sobol(n: usize, lo_ms: f64, hi_ms: f64, out: *mut f64) -> ScanlatStatus {
    guard(|| {
        non_null!(out);
        let v = try_lib!(psychometrics::sobol_latencies(n, lo_ms, hi_ms));
        unsafe { std::slice::from_raw_parts_mut(out, n) }.copy_from_slice(&v);
        ScanlatStatus::Ok
    })
}
