//! C ABI over the `infoeff` library.
//!
//! Every function returns an [`IeStatus`]. On failure a human-readable
//! message is stored per thread and can be fetched with
//! [`ie_last_error_message`]. Analysis results live behind the opaque
//! [`IeTrack`] handle, which must be released with [`ie_track_free`].
//!
//! Array arguments are `(pointer, length)` pairs. A null pointer is accepted
//! only when the length is zero or the parameter is documented as optional.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use infoeff::cluster::{average_linkage, optimal_cut};
use infoeff::efficiency::{analyze_returns, efficiency_series, overall_efficiency, ComplexityTrack};
use infoeff::ingest::ReturnSeries;
use infoeff::ordinal::{max_divergence, ordinal_distribution, permutation_entropy, statistical_complexity};
use infoeff::similarity::{dtw_distance_with, DistanceMatrix};
use infoeff::{AnalysisConfig, BandMode, DtwCost, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    Internal = 4,
    Panic = 5,
    BufferTooSmall = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IeBandMode {
    Gaussian = 0,
    Quantile = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IeDtwCost {
    Squared = 0,
    Abs = 1,
}

/// Parameters of the sliding-window analysis. Obtain defaults from
/// [`ie_config_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IeConfig {
    pub embedding_dim: usize,
    pub window: usize,
    pub surrogates: usize,
    pub confidence: f64,
    pub efficiency_window: usize,
    pub master_seed: u64,
    pub band_mode: IeBandMode,
}

impl From<&IeConfig> for AnalysisConfig {
    fn from(c: &IeConfig) -> Self {
        AnalysisConfig {
            embedding_dim: c.embedding_dim,
            window: c.window,
            surrogates: c.surrogates,
            confidence: c.confidence,
            efficiency_window: c.efficiency_window,
            master_seed: c.master_seed,
            band_mode: match c.band_mode {
                IeBandMode::Gaussian => BandMode::Gaussian,
                IeBandMode::Quantile => BandMode::Quantile,
            },
            ..AnalysisConfig::default()
        }
    }
}

/// Opaque analysis result for one return series.
pub struct IeTrack {
    track: ComplexityTrack,
    efficiency_window: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

fn status_of(err: &Error) -> IeStatus {
    match err.exit_code() {
        2 => IeStatus::InvalidArgument,
        3 => IeStatus::InsufficientData,
        _ => IeStatus::Internal,
    }
}

enum Fail {
    Status(IeStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null(name: &str) -> Fail {
    Fail::Status(IeStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> IeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            IeStatus::Ok
        }
        Ok(Err(Fail::Status(status, msg))) => {
            set_error(msg);
            status
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IeStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

unsafe fn write<T>(ptr: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if ptr.is_null() {
        return Err(null(name));
    }
    unsafe { ptr.write(value) };
    Ok(())
}

unsafe fn track_ref<'a>(track: *const IeTrack) -> Result<&'a IeTrack, Fail> {
    if track.is_null() {
        return Err(null("track"));
    }
    Ok(unsafe { &*track })
}

/// Default analysis parameters.
#[no_mangle]
pub extern "C" fn ie_config_default() -> IeConfig {
    let c = AnalysisConfig::default();
    IeConfig {
        embedding_dim: c.embedding_dim,
        window: c.window,
        surrogates: c.surrogates,
        confidence: c.confidence,
        efficiency_window: c.efficiency_window,
        master_seed: c.master_seed,
        band_mode: IeBandMode::Gaussian,
    }
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length in bytes
/// excluding the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ie_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Normalized permutation entropy and statistical complexity of one window.
///
/// # Safety
/// `values` must point to `n` doubles; `entropy` and `complexity` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ie_ordinal_measures(
    values: *const f64,
    n: usize,
    embedding_dim: usize,
    entropy: *mut f64,
    complexity: *mut f64,
) -> IeStatus {
    guard(|| {
        let values = unsafe { slice(values, n, "values")? };
        let dist = ordinal_distribution(values, embedding_dim)?;
        unsafe {
            write(entropy, permutation_entropy(&dist), "entropy")?;
            write(complexity, statistical_complexity(&dist), "complexity")
        }
    })
}

/// Largest Jensen–Shannon divergence from the uniform distribution over
/// `embedding_dim!` patterns.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ie_max_divergence(embedding_dim: usize, out: *mut f64) -> IeStatus {
    guard(|| {
        let v = max_divergence(embedding_dim)?;
        unsafe { write(out, v, "out") }
    })
}

/// Dynamic time warping distance between two series.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ie_dtw_distance(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    cost: IeDtwCost,
    out: *mut f64,
) -> IeStatus {
    guard(|| {
        let (a, b) = unsafe { (slice(a, na, "a")?, slice(b, nb, "b")?) };
        let cost = match cost {
            IeDtwCost::Squared => DtwCost::Squared,
            IeDtwCost::Abs => DtwCost::Abs,
        };
        let d = dtw_distance_with(a, b, cost)?;
        unsafe { write(out, d, "out") }
    })
}

/// Runs the sliding-window analysis with surrogate bands on a series of log
/// returns. On success `*out` receives a new handle.
///
/// # Safety
/// `config` must be valid, `returns` must point to `n` doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn ie_track_analyze(
    config: *const IeConfig,
    returns: *const f64,
    n: usize,
    out: *mut *mut IeTrack,
) -> IeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if config.is_null() {
            return Err(null("config"));
        }
        let config = unsafe { &*config };
        let returns = unsafe { slice(returns, n, "returns")? };
        let series = ReturnSeries::undated("ffi", returns.to_vec());
        let cfg = AnalysisConfig::from(config);
        let track = analyze_returns(&series, &cfg)?;
        let handle = Box::new(IeTrack {
            track,
            efficiency_window: cfg.efficiency_window,
        });
        unsafe { out.write(Box::into_raw(handle)) };
        Ok(())
    })
}

/// Releases a handle from [`ie_track_analyze`]. Null is ignored.
///
/// # Safety
/// `track` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ie_track_free(track: *mut IeTrack) {
    if !track.is_null() {
        drop(unsafe { Box::from_raw(track) });
    }
}

/// Number of windows in the track.
///
/// # Safety
/// `track` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ie_track_len(track: *const IeTrack, out: *mut usize) -> IeStatus {
    guard(|| {
        let t = unsafe { track_ref(track)? };
        unsafe { write(out, t.track.len(), "out") }
    })
}

/// Copies per-window values. Each output pointer is optional (null skips it)
/// and otherwise must hold `len` elements, where `len` equals the track
/// length. `inside` receives 1 for windows inside their band, else 0.
///
/// # Safety
/// Non-null outputs must point to `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn ie_track_copy(
    track: *const IeTrack,
    entropy: *mut f64,
    complexity: *mut f64,
    inside: *mut u8,
    len: usize,
) -> IeStatus {
    guard(|| {
        let t = &unsafe { track_ref(track)? }.track;
        if len != t.len() {
            return Err(Fail::Status(
                IeStatus::InvalidArgument,
                format!("buffer length {len} does not match track length {}", t.len()),
            ));
        }
        unsafe {
            if !entropy.is_null() {
                std::ptr::copy_nonoverlapping(t.entropy.as_ptr(), entropy, len);
            }
            if !complexity.is_null() {
                std::ptr::copy_nonoverlapping(t.complexity.as_ptr(), complexity, len);
            }
            if !inside.is_null() {
                for (i, &b) in t.inside.iter().enumerate() {
                    *inside.add(i) = u8::from(b);
                }
            }
        }
        Ok(())
    })
}

/// Fraction of windows inside their surrogate band.
///
/// # Safety
/// `track` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ie_track_efficiency(track: *const IeTrack, out: *mut f64) -> IeStatus {
    guard(|| {
        let t = unsafe { track_ref(track)? };
        let e = overall_efficiency(&t.track)?;
        unsafe { write(out, e, "out") }
    })
}

/// Time-resolved efficiency with the configured averaging window. The number
/// of points is always stored in `*out_len`. Values are copied when `values`
/// is non-null and `capacity` is large enough; otherwise the call returns
/// `BufferTooSmall` (or `Ok` for a null `values` length query).
///
/// # Safety
/// `track` must be a live handle, `out_len` writable and `values` null or
/// pointing to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ie_track_efficiency_series(
    track: *const IeTrack,
    values: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> IeStatus {
    guard(|| {
        let t = unsafe { track_ref(track)? };
        let series = efficiency_series(&t.track, t.efficiency_window)?;
        let n = series.values.len();
        unsafe { write(out_len, n, "out_len")? };
        if values.is_null() {
            return Ok(());
        }
        if capacity < n {
            return Err(Fail::Status(
                IeStatus::BufferTooSmall,
                format!("need {n} values, buffer holds {capacity}"),
            ));
        }
        unsafe { std::ptr::copy_nonoverlapping(series.values.as_ptr(), values, n) };
        Ok(())
    })
}

/// Average-linkage clustering of a row-major `k × k` distance matrix, cut at
/// the threshold with the highest mean silhouette. `labels` receives `k`
/// cluster ids numbered by first appearance in dendrogram leaf order.
///
/// # Safety
/// `distances` must point to `k * k` doubles, `labels` to `k` writable
/// elements; the scalar outputs are optional.
#[no_mangle]
pub unsafe extern "C" fn ie_cluster_optimal_cut(
    distances: *const f64,
    k: usize,
    labels: *mut usize,
    threshold: *mut f64,
    mean_silhouette: *mut f64,
    n_clusters: *mut usize,
) -> IeStatus {
    guard(|| {
        let values = unsafe { slice(distances, k.saturating_mul(k), "distances")? };
        if labels.is_null() {
            return Err(null("labels"));
        }
        let matrix = DistanceMatrix::new((0..k).map(|i| i.to_string()).collect(), values.to_vec())?;
        let dendrogram = average_linkage(&matrix)?;
        let cut = optimal_cut(&dendrogram, &matrix)?;
        unsafe {
            std::ptr::copy_nonoverlapping(cut.labels.as_ptr(), labels, k);
            if !threshold.is_null() {
                *threshold = cut.threshold;
            }
            if !mean_silhouette.is_null() {
                *mean_silhouette = cut.silhouette.mean;
            }
            if !n_clusters.is_null() {
                *n_clusters = cut.n_clusters;
            }
        }
        Ok(())
    })
}
