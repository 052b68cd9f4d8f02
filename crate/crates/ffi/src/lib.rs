//! C ABI over the `freqcache` decision pipeline.
//!
//! Every fallible call returns an [`FqcStatus`]. On failure a message is
//! kept per thread and can be read with [`fqc_last_error_message`] until the
//! next failing call on that thread. Panics never cross the boundary; they
//! surface as `FqcStatus::Internal`.
//!
//! Frames are passed as row-major `double` buffers of `height * width`
//! samples.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use freqcache::budget::spectral_entropy_with;
use freqcache::harness::export::DecisionRecord;
use freqcache::{
    dft2, phase_correlation, sim_freq, BudgetConfig, CacheConfig, CacheDecision, CacheSession,
    Frame, FreqCacheError, HistogramTokenizer,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    DegenerateSpectrum = 4,
    NoTexture = 5,
    InvariantViolation = 6,
    Internal = 7,
}

/// Pipeline parameters. Start from `fqc_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FqcConfig {
    pub tau_mig: f64,
    pub lambda: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub patch_size: usize,
    pub include_dc: bool,
}

/// Scalar fields of one decision. The index sets are fetched separately.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FqcDecisionSummary {
    pub step: usize,
    pub flushed: bool,
    pub sim_freq: f64,
    pub di: i64,
    pub dj: i64,
    pub di_patches: i64,
    pub dj_patches: i64,
    pub entropy_raw: f64,
    pub entropy_normalized: f64,
    pub alpha: f64,
    pub k_reuse: usize,
    pub k_candidate: usize,
    pub k_final: usize,
    pub n_tokens: usize,
}

/// Opaque streaming session.
pub struct FqcSession {
    inner: CacheSession,
    last: Option<CacheDecision>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &FreqCacheError) -> FqcStatus {
    match err {
        FreqCacheError::DimensionMismatch { .. } | FreqCacheError::PatchDivisibility { .. } => {
            FqcStatus::DimensionMismatch
        }
        FreqCacheError::DegenerateSpectrum => FqcStatus::DegenerateSpectrum,
        FreqCacheError::NoTexture => FqcStatus::NoTexture,
        FreqCacheError::InvariantViolation { .. } => FqcStatus::InvariantViolation,
        FreqCacheError::SequenceStep { source, .. } => status_of(source),
        _ => FqcStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (FqcStatus, String)>) -> FqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FqcStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {message}"));
            FqcStatus::Internal
        }
    }
}

fn fail(err: FreqCacheError) -> (FqcStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (FqcStatus, String) {
    (FqcStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn frame_from(
    pixels: *const f64,
    height: usize,
    width: usize,
    name: &str,
) -> Result<Frame, (FqcStatus, String)> {
    if pixels.is_null() {
        return Err(null(name));
    }
    let len = height.checked_mul(width).ok_or_else(|| {
        (
            FqcStatus::InvalidArgument,
            format!("{height}x{width} overflows"),
        )
    })?;
    let data = std::slice::from_raw_parts(pixels, len).to_vec();
    Frame::new(height, width, data).map_err(fail)
}

impl From<FqcConfig> for CacheConfig {
    fn from(c: FqcConfig) -> Self {
        CacheConfig {
            tau_mig: c.tau_mig,
            lambda: c.lambda,
            budget: BudgetConfig {
                alpha_min: c.alpha_min,
                alpha_max: c.alpha_max,
                include_dc: c.include_dc,
            },
            patch_size: c.patch_size,
        }
    }
}

fn summary(d: &CacheDecision) -> FqcDecisionSummary {
    FqcDecisionSummary {
        step: d.step,
        flushed: d.flushed,
        sim_freq: d.sim_freq,
        di: d.displacement.di,
        dj: d.displacement.dj,
        di_patches: d.displacement.di_patches,
        dj_patches: d.displacement.dj_patches,
        entropy_raw: d.entropy.raw_entropy,
        entropy_normalized: d.entropy.normalized,
        alpha: d.alpha,
        k_reuse: d.k_reuse,
        k_candidate: d.k_candidate,
        k_final: d.k_final,
        n_tokens: d.n_tokens(),
    }
}

#[no_mangle]
pub extern "C" fn fqc_config_default() -> FqcConfig {
    let c = CacheConfig::default();
    FqcConfig {
        tau_mig: c.tau_mig,
        lambda: c.lambda,
        alpha_min: c.budget.alpha_min,
        alpha_max: c.budget.alpha_max,
        patch_size: c.patch_size,
        include_dc: c.budget.include_dc,
    }
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn fqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a session. `config` may be NULL for defaults.
#[no_mangle]
pub unsafe extern "C" fn fqc_session_new(
    config: *const FqcConfig,
    out: *mut *mut FqcSession,
) -> FqcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = if config.is_null() {
            CacheConfig::default()
        } else {
            CacheConfig::from(*config)
        };
        let inner =
            CacheSession::new(cfg, Box::new(HistogramTokenizer::default())).map_err(fail)?;
        *out = Box::into_raw(Box::new(FqcSession { inner, last: None }));
        Ok(())
    })
}

/// Frees a session; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fqc_session_free(session: *mut FqcSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Feeds the next frame. `*has_decision` is false for the first frame,
/// which only fills the cache; `summary_out` is then left untouched.
#[no_mangle]
pub unsafe extern "C" fn fqc_session_push(
    session: *mut FqcSession,
    pixels: *const f64,
    height: usize,
    width: usize,
    summary_out: *mut FqcDecisionSummary,
    has_decision: *mut bool,
) -> FqcStatus {
    guard(|| {
        let s = session.as_mut().ok_or_else(|| null("session"))?;
        if has_decision.is_null() {
            return Err(null("has_decision"));
        }
        let frame = frame_from(pixels, height, width, "pixels")?;
        let step = s.inner.push(frame).map_err(fail)?;
        *has_decision = step.decision.is_some();
        if let Some(d) = &step.decision {
            if !summary_out.is_null() {
                *summary_out = summary(d);
            }
        }
        s.last = step.decision;
        Ok(())
    })
}

/// Copies the reuse set of the last decision (ascending energy order) into
/// `out`. `*len` receives the full set size even when it exceeds
/// `capacity`, in which case nothing is copied and `InvalidArgument` is
/// returned.
#[no_mangle]
pub unsafe extern "C" fn fqc_session_reuse_set(
    session: *const FqcSession,
    out: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> FqcStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let set = s.last.as_ref().map_or(&[][..], |d| d.reuse_set.as_slice());
        *len = set.len();
        if set.is_empty() {
            return Ok(());
        }
        if capacity < set.len() {
            return Err((
                FqcStatus::InvalidArgument,
                format!("capacity {capacity} below reuse set size {}", set.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(set.as_ptr(), out, set.len());
        Ok(())
    })
}

/// The last decision as a JSON object, or NULL before the first decision or
/// on error. Release with `fqc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn fqc_session_decision_json(session: *const FqcSession) -> *mut c_char {
    let mut out = ptr::null_mut();
    let status = guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        if let Some(d) = &s.last {
            let text = DecisionRecord::new(d, None).to_json().map_err(fail)?;
            out = CString::new(text)
                .expect("JSON has no nul bytes")
                .into_raw();
        }
        Ok(())
    });
    if status == FqcStatus::Ok {
        out
    } else {
        ptr::null_mut()
    }
}

/// Frees a string returned by this library; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fqc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Shift `(di, dj)` such that `curr(r, c) ~ prev(r - di, c - dj)`.
#[no_mangle]
pub unsafe extern "C" fn fqc_phase_correlation(
    prev: *const f64,
    curr: *const f64,
    height: usize,
    width: usize,
    di: *mut i64,
    dj: *mut i64,
) -> FqcStatus {
    guard(|| {
        if di.is_null() || dj.is_null() {
            return Err(null("di/dj"));
        }
        let a = frame_from(prev, height, width, "prev")?;
        let b = frame_from(curr, height, width, "curr")?;
        let (r, c) = phase_correlation(&a, &b).map_err(fail)?;
        *di = r;
        *dj = c;
        Ok(())
    })
}

/// Cosine similarity of the two frames' amplitude spectra.
#[no_mangle]
pub unsafe extern "C" fn fqc_sim_freq(
    prev: *const f64,
    curr: *const f64,
    height: usize,
    width: usize,
    out: *mut f64,
) -> FqcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = frame_from(prev, height, width, "prev")?;
        let b = frame_from(curr, height, width, "curr")?;
        *out = sim_freq(&dft2(&a).amplitude(), &dft2(&b).amplitude()).map_err(fail)?;
        Ok(())
    })
}

/// Spectral entropy of a frame in nats and normalized to `[0, 1]`.
#[no_mangle]
pub unsafe extern "C" fn fqc_spectral_entropy(
    pixels: *const f64,
    height: usize,
    width: usize,
    include_dc: bool,
    raw: *mut f64,
    normalized: *mut f64,
) -> FqcStatus {
    guard(|| {
        if raw.is_null() || normalized.is_null() {
            return Err(null("raw/normalized"));
        }
        let f = frame_from(pixels, height, width, "pixels")?;
        let e = spectral_entropy_with(&dft2(&f).amplitude(), include_dc).map_err(fail)?;
        *raw = e.raw_entropy;
        *normalized = e.normalized;
        Ok(())
    })
}
