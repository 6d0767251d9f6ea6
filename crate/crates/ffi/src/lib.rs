//! C ABI over the ghz-repeater library.
//!
//! Every function returns a [`GrStatus`]; results go through out-pointers.
//! On failure [`gr_last_error_message`] describes the error for the calling
//! thread. Handles are opaque and must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ghz_repeater::analyzer::{classify_clicks, GhzOutcome};
use ghz_repeater::channel::{self, ChannelParams};
use ghz_repeater::cli::write_sweep_csv;
use ghz_repeater::multiplexing::{self, MultiplexConfig};
use ghz_repeater::optics::{ClickPattern, DetectorId, DetectorModel};
use ghz_repeater::yields::{self, Cutoff, YieldMode, YieldPoint};
use ghz_repeater::Error;

/// Status code returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    InsufficientStatistics = 3,
    NoPositiveYield = 4,
    Unsupported = 5,
    Io = 6,
    Parse = 7,
    Panic = 8,
}

/// Channel and detector parameters.
pub struct GrChannel(ChannelParams);

/// Result of a yield sweep.
pub struct GrSweep(Vec<YieldPoint>);

/// One point of a yield curve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GrYieldPoint {
    pub l_km: f64,
    pub n_users: usize,
    pub q: f64,
    pub e_b_max: f64,
    pub e_p: f64,
    pub yield_: f64,
}

impl From<&YieldPoint> for GrYieldPoint {
    fn from(p: &YieldPoint) -> Self {
        GrYieldPoint {
            l_km: p.l_km,
            n_users: p.n_users,
            q: p.q,
            e_b_max: p.e_b_max(),
            e_p: p.e_p,
            yield_: p.d,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> GrStatus {
    match err {
        Error::InvalidArgument(_) => GrStatus::InvalidArgument,
        Error::InsufficientStatistics { .. } => GrStatus::InsufficientStatistics,
        Error::NoPositiveYield => GrStatus::NoPositiveYield,
        Error::Unsupported(_) => GrStatus::Unsupported,
        Error::Io { .. } => GrStatus::Io,
        Error::Parse(_) => GrStatus::Parse,
    }
}

struct Fail(GrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GrStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> GrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GrStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GrStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn borrow<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Fail(GrStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a channel from a built-in preset ("paper-2022" or "ideal").
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_channel_new_preset(name: *const c_char, out: *mut *mut GrChannel) -> GrStatus {
    guard(|| {
        let name = utf8(name, "name")?;
        let params = ChannelParams::preset(name)
            .ok_or_else(|| Fail(GrStatus::InvalidArgument, format!("unknown preset {name:?}")))?;
        write(out, Box::into_raw(Box::new(GrChannel(params))), "out")
    })
}

/// Releases a channel. Null is ignored.
///
/// # Safety
/// `channel` must come from [`gr_channel_new_preset`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gr_channel_free(channel: *mut GrChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Sets the user-to-analyzer distance in km.
///
/// # Safety
/// `channel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_channel_set_distance(channel: *mut GrChannel, distance_km: f64) -> GrStatus {
    guard(|| {
        let ch = channel.as_mut().ok_or_else(|| null("channel"))?;
        let next = ch.0.at_distance(distance_km);
        next.validate()?;
        ch.0 = next;
        Ok(())
    })
}

/// Replaces the detector efficiency and dark-count probability.
///
/// # Safety
/// `channel` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_channel_set_detector(
    channel: *mut GrChannel,
    efficiency: f64,
    dark_count_prob: f64,
) -> GrStatus {
    guard(|| {
        let ch = channel.as_mut().ok_or_else(|| null("channel"))?;
        ch.0.detector = DetectorModel::new(efficiency, dark_count_prob)?;
        Ok(())
    })
}

/// Fiber transmittance exp(-l / l_att).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_fiber_transmittance(l_km: f64, l_att_km: f64, out: *mut f64) -> GrStatus {
    guard(|| write(out, channel::fiber_transmittance(l_km, l_att_km)?, "out"))
}

/// Overall gain of the channel for a given GHZ-projection success.
///
/// # Safety
/// `channel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_total_gain(channel: *const GrChannel, q_ghz: f64, out: *mut f64) -> GrStatus {
    guard(|| {
        let ch = borrow(channel, "channel")?;
        write(out, channel::total_gain(&ch.0, q_ghz)?, "out")
    })
}

/// Expected number of complete groups for n users, m slots each, survival eta.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_expected_groups_exact(n_users: usize, m: u64, eta: f64, out: *mut f64) -> GrStatus {
    guard(|| {
        let cfg = MultiplexConfig::new(n_users, m, eta)?;
        write(out, multiplexing::expected_groups_exact(&cfg)?, "out")
    })
}

/// Classifies a click pattern of an n-port analyzer. Each entry of
/// `detectors` is `2 * port + pol` with pol 0 for H and 1 for V. Writes +1
/// for Phi+, -1 for Phi-, 0 for a failed projection.
///
/// # Safety
/// `detectors` must point to `len` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_classify_clicks(
    n: usize,
    detectors: *const u32,
    len: usize,
    out: *mut i32,
) -> GrStatus {
    guard(|| {
        let mut pattern = ClickPattern::new();
        for &d in slice(detectors, len, "detectors")? {
            let port = (d / 2) as usize;
            pattern.insert(if d % 2 == 0 { DetectorId::h(port) } else { DetectorId::v(port) });
        }
        let sign = match classify_clicks(&pattern, n) {
            GhzOutcome::PhiPlus => 1,
            GhzOutcome::PhiMinus => -1,
            GhzOutcome::Failure => 0,
        };
        write(out, sign, "out")
    })
}

/// Analytic yield at the channel's current distance.
///
/// # Safety
/// `channel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_yield_analytic(
    channel: *const GrChannel,
    n_users: usize,
    out: *mut GrYieldPoint,
) -> GrStatus {
    guard(|| {
        let ch = borrow(channel, "channel")?;
        let p = yields::yield_at(&ch.0, n_users, YieldMode::Analytic)?;
        write(out, GrYieldPoint::from(&p), "out")
    })
}

/// Distance where the analytic yield drops to zero, to within `tol_km`.
/// Writes +infinity when the yield never vanishes.
///
/// # Safety
/// `channel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_cutoff_distance(
    channel: *const GrChannel,
    n_users: usize,
    tol_km: f64,
    out: *mut f64,
) -> GrStatus {
    guard(|| {
        let ch = borrow(channel, "channel")?;
        let l = match yields::cutoff_distance(&ch.0, n_users, tol_km)? {
            Cutoff::Distance(l) => l,
            Cutoff::Unbounded => f64::INFINITY,
        };
        write(out, l, "out")
    })
}

/// Analytic sweep over user counts and an ascending distance grid, ordered
/// by user count, then distance.
///
/// # Safety
/// The arrays must hold the stated number of elements, `channel` must be a
/// live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_sweep_analytic(
    channel: *const GrChannel,
    n_users: *const usize,
    n_users_len: usize,
    distances_km: *const f64,
    distances_len: usize,
    out: *mut *mut GrSweep,
) -> GrStatus {
    guard(|| {
        let ch = borrow(channel, "channel")?;
        let ns = slice(n_users, n_users_len, "n_users")?;
        let ls = slice(distances_km, distances_len, "distances_km")?;
        let points = yields::sweep(&ch.0, ns, ls, YieldMode::Analytic)?;
        write(out, Box::into_raw(Box::new(GrSweep(points))), "out")
    })
}

/// Number of points in a sweep.
///
/// # Safety
/// `sweep` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_sweep_len(sweep: *const GrSweep, out: *mut usize) -> GrStatus {
    guard(|| write(out, borrow(sweep, "sweep")?.0.len(), "out"))
}

/// Copies point `index` of a sweep.
///
/// # Safety
/// `sweep` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_sweep_get(sweep: *const GrSweep, index: usize, out: *mut GrYieldPoint) -> GrStatus {
    guard(|| {
        let points = &borrow(sweep, "sweep")?.0;
        let p = points.get(index).ok_or_else(|| {
            Fail(GrStatus::InvalidArgument, format!("index {index} out of range for {} points", points.len()))
        })?;
        write(out, GrYieldPoint::from(p), "out")
    })
}

/// Writes a sweep as CSV (same layout as the command-line tool).
///
/// # Safety
/// `sweep` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gr_sweep_write_csv(sweep: *const GrSweep, path: *const c_char) -> GrStatus {
    guard(|| {
        let points = &borrow(sweep, "sweep")?.0;
        let path = utf8(path, "path")?;
        let io = |e: std::io::Error| Fail(GrStatus::Io, format!("{path}: {e}"));
        let file = std::fs::File::create(Path::new(path)).map_err(io)?;
        write_sweep_csv(points, file).map_err(|e| Fail(GrStatus::Io, format!("{path}: {e}")))
    })
}

/// Releases a sweep. Null is ignored.
///
/// # Safety
/// `sweep` must come from [`gr_sweep_analytic`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gr_sweep_free(sweep: *mut GrSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}
