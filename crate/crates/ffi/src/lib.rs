//! C interface to the wavrom reduced-order models.
//!
//! Every function returns a [`WavromStatus`]. On failure a description of
//! the error is kept per thread and can be read with
//! [`wavrom_last_error_message`]. Complex vectors cross the boundary as
//! interleaved `re, im` pairs of doubles.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wavrom::harness::{run_pipeline, ExperimentConfig, Pipeline};
use wavrom::pod::ReducedBasis;
use wavrom::rom::galerkin_pod_solve;
use wavrom::surrogate::PodNn;
use wavrom::transform::ParamPoint;
use wavrom::{Error, ErrorKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavromStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    IoError = 4,
    ArchiveError = 5,
    NumericalError = 6,
    Panic = 7,
}

impl From<&Error> for WavromStatus {
    fn from(e: &Error) -> Self {
        match e.kind() {
            ErrorKind::Argument => WavromStatus::InvalidArgument,
            ErrorKind::Config => WavromStatus::ConfigError,
            ErrorKind::Io => WavromStatus::IoError,
            ErrorKind::Archive => WavromStatus::ArchiveError,
            ErrorKind::Numerical => WavromStatus::NumericalError,
        }
    }
}

/// A trained surrogate: full-order model, POD basis and the network for the
/// largest configured basis size.
pub struct WavromSurrogate {
    pipeline: Pipeline,
    basis: ReducedBasis,
    network: Option<PodNn>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn fail(status: WavromStatus, message: impl Into<String>) -> WavromStatus {
    set_error(message.into());
    status
}

fn describe(e: &Error) -> String {
    let mut text = e.to_string();
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        text.push_str(": ");
        text.push_str(&s.to_string());
        source = s.source();
    }
    text
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), WavromStatus>) -> WavromStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WavromStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(WavromStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check(e: Error) -> WavromStatus {
    fail(WavromStatus::from(&e), describe(&e))
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, WavromStatus> {
    if path.is_null() {
        return Err(fail(WavromStatus::NullPointer, "config path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(WavromStatus::InvalidArgument, "config path is not valid UTF-8"))
}

unsafe fn handle_ref<'a>(handle: *const WavromSurrogate) -> Result<&'a WavromSurrogate, WavromStatus> {
    handle
        .as_ref()
        .ok_or_else(|| fail(WavromStatus::NullPointer, "surrogate handle is null"))
}

unsafe fn write_count(out: *mut usize, value: usize) -> Result<(), WavromStatus> {
    if out.is_null() {
        return Err(fail(WavromStatus::NullPointer, "output pointer is null"));
    }
    *out = value;
    Ok(())
}

/// Reads `y` and checks the caller's output buffer holds `2 * num_dofs` doubles.
unsafe fn query_args<'a>(
    s: &WavromSurrogate,
    y: *const f64,
    y_len: usize,
    out: *mut f64,
    out_len: usize,
) -> Result<(ParamPoint, &'a mut [f64]), WavromStatus> {
    if y.is_null() || out.is_null() {
        return Err(fail(WavromStatus::NullPointer, "parameter or output buffer is null"));
    }
    let dim = s.pipeline.model().param_dim();
    if y_len != dim {
        return Err(fail(
            WavromStatus::InvalidArgument,
            format!("expected {dim} parameters, got {y_len}"),
        ));
    }
    let need = 2 * s.pipeline.model().num_dofs();
    if out_len < need {
        return Err(fail(
            WavromStatus::InvalidArgument,
            format!("output buffer holds {out_len} doubles, {need} required"),
        ));
    }
    let point = ParamPoint::new(std::slice::from_raw_parts(y, y_len).to_vec()).map_err(check)?;
    Ok((point, std::slice::from_raw_parts_mut(out, need)))
}

fn interleave(values: &[num_complex::Complex64], out: &mut [f64]) {
    for (pair, z) in out.chunks_exact_mut(2).zip(values) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
}

/// Message for the most recent failure on this thread, or null. The string
/// stays valid until the next wavrom call on the same thread.
#[no_mangle]
pub extern "C" fn wavrom_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Runs the offline pipeline for the JSON config at `config_path`, reusing
/// any current artifacts in its output directory.
///
/// # Safety
/// `config_path` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wavrom_run_pipeline(config_path: *const c_char) -> WavromStatus {
    guard(|| {
        let path = path_arg(config_path)?;
        let config = ExperimentConfig::load(&path).map_err(check)?;
        run_pipeline(&config).map_err(check)?;
        Ok(())
    })
}

/// Opens a surrogate for the config at `config_path`. Missing or stale
/// artifacts are computed first, which may take as long as a pipeline run.
///
/// # Safety
/// `config_path` must be null or a NUL-terminated string and `out` must be
/// null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_open(
    config_path: *const c_char,
    out: *mut *mut WavromSurrogate,
) -> WavromStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(WavromStatus::NullPointer, "output handle pointer is null"));
        }
        *out = ptr::null_mut();
        let path = path_arg(config_path)?;
        let config = ExperimentConfig::load(&path).map_err(check)?;
        let l = config.max_modes();
        let mut pipeline = Pipeline::new(config).map_err(check)?;
        let basis = pipeline.basis().and_then(|b| b.truncated(l)).map_err(check)?;
        let network = pipeline.surrogates().map_err(check)?.get(l).cloned();
        *out = Box::into_raw(Box::new(WavromSurrogate {
            pipeline,
            basis,
            network,
        }));
        Ok(())
    })
}

/// Releases a handle from [`wavrom_surrogate_open`]. Null is ignored.
///
/// # Safety
/// `handle` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_free(handle: *mut WavromSurrogate) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of complex degrees of freedom of the full-order model.
///
/// # Safety
/// `handle` must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_num_dofs(
    handle: *const WavromSurrogate,
    out: *mut usize,
) -> WavromStatus {
    guard(|| write_count(out, handle_ref(handle)?.pipeline.model().num_dofs()))
}

/// Number of parameters a query takes.
///
/// # Safety
/// `handle` must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_param_dim(
    handle: *const WavromSurrogate,
    out: *mut usize,
) -> WavromStatus {
    guard(|| write_count(out, handle_ref(handle)?.pipeline.model().param_dim()))
}

/// Size of the reduced basis used by the reduced solvers.
///
/// # Safety
/// `handle` must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_num_modes(
    handle: *const WavromSurrogate,
    out: *mut usize,
) -> WavromStatus {
    guard(|| write_count(out, handle_ref(handle)?.basis.num_modes()))
}

/// Network prediction at `y`, lifted to the full space.
///
/// # Safety
/// `handle` must be null or live, `y` must hold `y_len` doubles and `out`
/// must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_predict(
    handle: *const WavromSurrogate,
    y: *const f64,
    y_len: usize,
    out: *mut f64,
    out_len: usize,
) -> WavromStatus {
    guard(|| {
        let s = handle_ref(handle)?;
        let (point, buf) = query_args(s, y, y_len, out, out_len)?;
        let u = match &s.network {
            Some(net) => net.predict_solution(&point, &s.basis),
            None => s.basis.reconstruct(&nalgebra::DVector::zeros(s.basis.num_modes())),
        }
        .map_err(check)?;
        interleave(&u.values, buf);
        Ok(())
    })
}

/// Galerkin reduced solution at `y`, lifted to the full space.
///
/// # Safety
/// As for [`wavrom_surrogate_predict`].
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_gpod(
    handle: *const WavromSurrogate,
    y: *const f64,
    y_len: usize,
    out: *mut f64,
    out_len: usize,
) -> WavromStatus {
    guard(|| {
        let s = handle_ref(handle)?;
        let (point, buf) = query_args(s, y, y_len, out, out_len)?;
        let g = galerkin_pod_solve(s.pipeline.model(), &point, &s.basis).map_err(check)?;
        interleave(&g.lifted.values, buf);
        Ok(())
    })
}

/// Full-order solution at `y`.
///
/// # Safety
/// As for [`wavrom_surrogate_predict`].
#[no_mangle]
pub unsafe extern "C" fn wavrom_surrogate_solve_hf(
    handle: *const WavromSurrogate,
    y: *const f64,
    y_len: usize,
    out: *mut f64,
    out_len: usize,
) -> WavromStatus {
    guard(|| {
        let s = handle_ref(handle)?;
        let (point, buf) = query_args(s, y, y_len, out, out_len)?;
        let u = s.pipeline.model().solve_hf(&point).map_err(check)?;
        interleave(&u.values, buf);
        Ok(())
    })
}
