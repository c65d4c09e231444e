//! C ABI over the `nmk` core.
//!
//! Every function returns an `NmkStatus`; results travel through out
//! pointers. On failure a message is stored per thread and can be read with
//! `nmk_last_error`. Handles are opaque and must be released with their
//! matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nmk::counterexample::{dk_closed_form, RateFunction, TwoRateModel};
use nmk::measure::{erlang_sweep, mixture_sweep, n_c_twosite};
use nmk::semimarkov::{q_time_domain, QFunction};
use nmk::stochastic::{kolmogorov_distance, ProbabilityVector};
use nmk::waiting_time::{ensure_valid, mean, parse_wtd, WaitingTimeSpec};
use nmk::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidArgument = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Parsed and validated waiting-time distribution.
pub struct NmkSpec {
    inner: WaitingTimeSpec,
}

/// Closed-form `q(t)` of a two-site process.
pub struct NmkQFunction {
    inner: QFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: NmkStatus, msg: impl Into<String>) -> NmkStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> NmkStatus {
    let status = match &e {
        Error::Syntax { .. } => NmkStatus::Syntax,
        e if e.is_validation() => NmkStatus::InvalidArgument,
        _ => NmkStatus::Numerical,
    };
    fail(status, e.to_string())
}

/// Run `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), NmkStatus>>(f: F) -> NmkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmkStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(NmkStatus::Panic, format!("panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, NmkStatus>;
}

impl<T> OrStatus<T> for nmk::Result<T> {
    fn or_status(self) -> Result<T, NmkStatus> {
        self.map_err(from_error)
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, NmkStatus> {
    if p.is_null() {
        return Err(fail(NmkStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(NmkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, NmkStatus> {
    p.as_mut()
        .ok_or_else(|| fail(NmkStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, NmkStatus> {
    p.as_ref()
        .ok_or_else(|| fail(NmkStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], NmkStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(NmkStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], NmkStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(NmkStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nmk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse and validate a waiting-time expression such as `"erlang(2,1)"`.
///
/// `dsl` must be a NUL-terminated string; `out_spec` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_spec_parse(dsl: *const c_char, out_spec: *mut *mut NmkSpec) -> NmkStatus {
    guard(|| {
        let slot = out(out_spec, "out_spec")?;
        *slot = ptr::null_mut();
        let spec = parse_wtd(text(dsl, "dsl")?).or_status()?;
        ensure_valid(&spec).or_status()?;
        *slot = Box::into_raw(Box::new(NmkSpec { inner: spec }));
        Ok(())
    })
}

/// `spec` must come from `nmk_spec_parse` and not be freed twice. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn nmk_spec_free(spec: *mut NmkSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Mean waiting time.
///
/// `spec` must be a live handle; `out_mean` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_spec_mean(spec: *const NmkSpec, out_mean: *mut f64) -> NmkStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        *out(out_mean, "out_mean")? = mean(&spec.inner).or_status()?;
        Ok(())
    })
}

/// Canonical text of the spec. Writes at most `len` bytes including the NUL
/// and stores the required size (including the NUL) in `needed`. Returns
/// `NMK_STATUS_BUFFER_TOO_SMALL` when `len` is insufficient; `buf` may then be NULL.
///
/// `buf` must hold `len` bytes; `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_spec_to_string(
    spec: *const NmkSpec,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> NmkStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let s = spec.inner.to_string();
        let need = s.len() + 1;
        *out(needed, "needed")? = need;
        if len < need {
            return Err(fail(NmkStatus::BufferTooSmall, format!("need {need} bytes, got {len}")));
        }
        let dst = slice_mut(buf.cast::<u8>(), len, "buf")?;
        dst[..s.len()].copy_from_slice(s.as_bytes());
        dst[s.len()] = 0;
        Ok(())
    })
}

/// Build `q(t)` for the two-site process driven by `spec`.
///
/// `spec` must be a live handle; `out_q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_qfunction_new(spec: *const NmkSpec, out_q: *mut *mut NmkQFunction) -> NmkStatus {
    guard(|| {
        let slot = out(out_q, "out_q")?;
        *slot = ptr::null_mut();
        let spec = handle(spec, "spec")?;
        let q = q_time_domain(&spec.inner).or_status()?;
        *slot = Box::into_raw(Box::new(NmkQFunction { inner: q }));
        Ok(())
    })
}

/// `q` must come from `nmk_qfunction_new` and not be freed twice. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn nmk_qfunction_free(q: *mut NmkQFunction) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

fn time(t: f64) -> Result<f64, NmkStatus> {
    if t >= 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(fail(
            NmkStatus::InvalidArgument,
            format!("time must be finite and nonnegative, got {t}"),
        ))
    }
}

/// `q(t)`.
///
/// `q` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_q_eval(q: *const NmkQFunction, t: f64, out_value: *mut f64) -> NmkStatus {
    guard(|| {
        let q = handle(q, "q")?;
        *out(out_value, "out_value")? = q.inner.q(time(t)?);
        Ok(())
    })
}

/// Rate `γ(t) = −q'(t)/(2q(t))`. At a zero of `q` the rate is singular:
/// `*is_pole` is set to 1 and `*out_value` to NaN.
///
/// `q` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_gamma_eval(
    q: *const NmkQFunction,
    t: f64,
    out_value: *mut f64,
    is_pole: *mut c_int,
) -> NmkStatus {
    guard(|| {
        let q = handle(q, "q")?;
        let rate = q.inner.gamma(time(t)?);
        let value = out(out_value, "out_value")?;
        let pole = out(is_pole, "is_pole")?;
        *value = rate.value().unwrap_or(f64::NAN);
        *pole = c_int::from(rate.is_pole());
        Ok(())
    })
}

/// Memory measure `N_C` of the two-site process, with the bound on growth
/// beyond the analysed horizon. `tail_bound` may be NULL.
///
/// `spec` must be a live handle; `n_c` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_n_c(
    spec: *const NmkSpec,
    tail_tol: f64,
    n_c: *mut f64,
    tail_bound: *mut f64,
) -> NmkStatus {
    guard(|| {
        let spec = handle(spec, "spec")?;
        let slot = out(n_c, "n_c")?;
        let report = n_c_twosite(&spec.inner, tail_tol).or_status()?;
        *slot = report.n_c;
        if let Some(tb) = tail_bound.as_mut() {
            *tb = report.tail_bound.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Half the L1 distance between two probability vectors of length `n`.
///
/// `p1` and `p2` must each hold `n` doubles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmk_kolmogorov_distance(
    p1: *const f64,
    p2: *const f64,
    n: usize,
    out_value: *mut f64,
) -> NmkStatus {
    guard(|| {
        let a = ProbabilityVector::new(slice(p1, n, "p1")?.to_vec()).or_status()?;
        let b = ProbabilityVector::new(slice(p2, n, "p2")?.to_vec()).or_status()?;
        *out(out_value, "out_value")? = kolmogorov_distance(&a, &b).or_status()?;
        Ok(())
    })
}

fn fill(dst: &mut [f64], values: impl ExactSizeIterator<Item = f64>) -> Result<(), NmkStatus> {
    if dst.len() < values.len() {
        return Err(fail(
            NmkStatus::BufferTooSmall,
            format!("need {} values, buffer holds {}", values.len(), dst.len()),
        ));
    }
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    Ok(())
}

/// `N_C` of the special Erlang distributions of order `1..=n_max` at `rate`,
/// written to `n_c_out[0..n_max]`.
///
/// `n_c_out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nmk_erlang_sweep(
    n_max: u32,
    rate: f64,
    tail_tol: f64,
    n_c_out: *mut f64,
    len: usize,
) -> NmkStatus {
    guard(|| {
        if (len as u64) < u64::from(n_max) {
            return Err(fail(
                NmkStatus::BufferTooSmall,
                format!("need {n_max} values, buffer holds {len}"),
            ));
        }
        let dst = slice_mut(n_c_out, len, "n_c_out")?;
        let rows = erlang_sweep(n_max, rate, tail_tol).or_status()?;
        fill(dst, rows.iter().map(|r| r.n_c))
    })
}

/// `N_C` of `h∗h` with `h` the two-exponential mixture of weight `mus[i]` at
/// rate `rate1` and `1 − mus[i]` at `rate1·ratio`, written to `n_c_out[i]`.
///
/// `mus` and `n_c_out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nmk_mixture_sweep(
    mus: *const f64,
    n: usize,
    rate1: f64,
    ratio: f64,
    tail_tol: f64,
    n_c_out: *mut f64,
) -> NmkStatus {
    guard(|| {
        let mus = slice(mus, n, "mus")?;
        let dst = slice_mut(n_c_out, n, "n_c_out")?;
        let rows = mixture_sweep(mus, rate1, ratio, tail_tol).or_status()?;
        fill(dst, rows.iter().map(|r| r.n_c))
    })
}

/// Kolmogorov distance at time `t` between two-site distributions started at
/// `p1` and `p2` (two doubles each) under the rate equations with `gamma1`,
/// `gamma2` given in rate syntax (`const:A`, `sin:AMP,OFFSET[,OMEGA]`,
/// `table:T=V,...`).
///
/// Strings must be NUL-terminated; `p1`, `p2` must hold two doubles.
#[no_mangle]
pub unsafe extern "C" fn nmk_dk_closed_form(
    gamma1: *const c_char,
    gamma2: *const c_char,
    p1: *const f64,
    p2: *const f64,
    t: f64,
    out_value: *mut f64,
) -> NmkStatus {
    guard(|| {
        let g1: RateFunction = text(gamma1, "gamma1")?.parse().or_status()?;
        let g2: RateFunction = text(gamma2, "gamma2")?.parse().or_status()?;
        let a = ProbabilityVector::new(slice(p1, 2, "p1")?.to_vec()).or_status()?;
        let b = ProbabilityVector::new(slice(p2, 2, "p2")?.to_vec()).or_status()?;
        let model = TwoRateModel::new(g1, g2);
        *out(out_value, "out_value")? = dk_closed_form(&model, (&a, &b), t).or_status()?;
        Ok(())
    })
}
