//! C ABI over the relaxo library.
//!
//! Every function returns a `RelaxoStatus`; results go through out-pointers.
//! On failure the message is kept per thread and can be copied out with
//! `relaxo_last_error_message`. Panics never cross the boundary.
//! Handles are created by `*_new`/`*_from_*` and released by `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use relaxo::acquisition::{dynamic_wait_time, reconstruct_r1, time_gain};
use relaxo::fitting::{fit_relaxation_profile, fit_stretched_exponential, DecayCurve, RelaxometryProfile};
use relaxo::lattice::{
    carbon_second_moment_stats, electron_linewidth_hz, poisson_interspin_distance, LatticeConfig,
};
use relaxo::relaxmodel::{knee_fields, tsallian_eval, ProfileModel, QMode, RateChannel, RateModel, RateProfile, TsallianParams};
use relaxo::workbench::{execute, Pipeline, RunConfig};
use relaxo::{Error, ErrorClass, PhysicalConstants};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxoStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
    InvalidUtf8 = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> RelaxoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RelaxoStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RelaxoStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("invalid UTF-8 in {what}"));
            RelaxoStatus::InvalidUtf8
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.class() {
                ErrorClass::Validation => RelaxoStatus::Validation,
                ErrorClass::Numerical => RelaxoStatus::Numerical,
                ErrorClass::Io => RelaxoStatus::Io,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RelaxoStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

/// Static, nul-terminated library version.
#[no_mangle]
pub extern "C" fn relaxo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the last error message on this thread, without the
/// terminating nul; 0 when the last call succeeded.
#[no_mangle]
pub extern "C" fn relaxo_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message into `buf` (at most `len` bytes including
/// the nul, truncated if needed). Returns the full message length.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn relaxo_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let b = e.borrow();
        let Some(c) = b.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = c.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Opaque relaxation-rate model.
pub struct RelaxoModel {
    inner: ProfileModel,
}

/// Parses a model from TOML text.
///
/// # Safety
/// `toml` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_model_from_toml(toml: *const c_char, out: *mut *mut RelaxoModel) -> RelaxoStatus {
    guard(|| {
        let o = unsafe { out_ptr(out)? };
        let s = unsafe { text(toml, "toml")? };
        let m = ProfileModel::from_toml_str(s)?;
        *o = Box::into_raw(Box::new(RelaxoModel { inner: m }));
        Ok(())
    })
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, Failure> {
    let o = out(p, "out")?;
    *o = ptr::null_mut();
    Ok(o)
}

/// Single P1-bath channel with A2 in kHz^2 and width d_ee in Hz.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_model_p1_bath(a2_khz2: f64, d_ee_hz: f64, out: *mut *mut RelaxoModel) -> RelaxoStatus {
    guard(|| {
        let o = unsafe { out_ptr(out)? };
        let m = RateModel::new(vec![RateChannel::P1Bath { a2_khz2, d_ee_hz }]);
        m.validate()?;
        *o = Box::into_raw(Box::new(RelaxoModel {
            inner: ProfileModel::Physical(m),
        }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relaxo_model_free(model: *mut RelaxoModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// R1 (1/s) or its field derivative of order 1 or 2 at `b` tesla.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_model_rate(model: *const RelaxoModel, b: f64, order: u8, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        let m = unsafe { model.as_ref() }.ok_or(Failure::Null("model"))?;
        let o = unsafe { self::out(out, "out")? };
        if order > 2 {
            return Err(Error::domain(format!("derivative order {order} not supported")).into());
        }
        *o = if order == 0 { m.inner.rate(b) } else { m.inner.rate_derivative(b, order) };
        Ok(())
    })
}

/// Knee fields in tesla; NaN where a definition has no solution.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RelaxoKnees {
    pub saturation_rate: f64,
    pub twice_saturation: f64,
    pub lowest_inflection: f64,
    pub analytic_bk1: f64,
    pub n_inflections: usize,
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_model_knees(model: *const RelaxoModel, out: *mut RelaxoKnees) -> RelaxoStatus {
    guard(|| {
        let m = unsafe { model.as_ref() }.ok_or(Failure::Null("model"))?;
        let o = unsafe { self::out(out, "out")? };
        let k = knee_fields(&m.inner)?;
        *o = RelaxoKnees {
            saturation_rate: k.saturation_rate,
            twice_saturation: k.twice_saturation.unwrap_or(f64::NAN),
            lowest_inflection: k.bk2().unwrap_or(f64::NAN),
            analytic_bk1: k.analytic_bk1.unwrap_or(f64::NAN),
            n_inflections: k.inflections.len(),
        };
        Ok(())
    })
}

/// Tsallian C1 [1 + (2^(q-1) - 1)(B/C2)^2]^(-1/(q-1)) + C3 or its
/// B-derivative; q = 1 evaluates the Gaussian limit.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_tsallian(c1: f64, c2: f64, c3: f64, q: f64, b: f64, order: u8, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        let o = unsafe { self::out(out, "out")? };
        *o = tsallian_eval(&TsallianParams { c1, c2, c3, q }, b, order, QMode::AllowGaussianLimit)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_poisson_distance_nm(ppm: f64, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        *unsafe { self::out(out, "out")? } = poisson_interspin_distance(ppm, &PhysicalConstants::default())?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_electron_linewidth_hz(ppm: f64, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        *unsafe { self::out(out, "out")? } = electron_linewidth_hz(ppm, &PhysicalConstants::default())?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RelaxoEstimate {
    pub value: f64,
    pub sd: f64,
    pub n_realizations: usize,
}

/// Mean RMS carbon-carbon coupling <d_CC> (Hz) over `realizations` lattices.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_carbon_second_moment(
    eta: f64,
    lattice_size_nm: f64,
    realizations: usize,
    seed: u64,
    out: *mut RelaxoEstimate,
) -> RelaxoStatus {
    guard(|| {
        let o = unsafe { self::out(out, "out")? };
        let consts = PhysicalConstants::default();
        let cfg = LatticeConfig::new(eta, lattice_size_nm)
            .with_seed(seed)
            .with_realizations(realizations);
        cfg.validate(&consts)?;
        let e = carbon_second_moment_stats(&cfg, &consts)?;
        *o = RelaxoEstimate {
            value: e.value,
            sd: e.sd,
            n_realizations: e.n_realizations,
        };
        Ok(())
    })
}

/// t_2D / t_1D for N fields, n samples of step dt, wait t_w and N_d
/// calibration curves.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_time_gain(n_fields: u64, n_samples: u64, dt: f64, t_w: f64, n_cal: u64, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        *unsafe { self::out(out, "out")? } = time_gain(n_fields, n_samples, dt, t_w, n_cal)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_reconstruct_r1(eps_tw: f64, eps0: f64, p: f64, t_w: f64, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        *unsafe { self::out(out, "out")? } = reconstruct_r1(eps_tw, eps0, p, t_w)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_dynamic_wait_time(t1: f64, p: f64, out: *mut f64) -> RelaxoStatus {
    guard(|| {
        *unsafe { self::out(out, "out")? } = dynamic_wait_time(t1, p)?;
        Ok(())
    })
}

/// Stretched-exponential fit; errors are NaN when the covariance is
/// unavailable.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RelaxoDecayFit {
    pub t1: f64,
    pub t1_err: f64,
    pub p: f64,
    pub p_err: f64,
    pub eps0: f64,
    pub eps0_err: f64,
    pub converged: bool,
}

/// # Safety
/// `times` and `signals` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaxo_fit_decay(times: *const f64, signals: *const f64, n: usize, out: *mut RelaxoDecayFit) -> RelaxoStatus {
    guard(|| {
        let o = unsafe { self::out(out, "out")? };
        let t = unsafe { slice(times, n, "times")? };
        let y = unsafe { slice(signals, n, "signals")? };
        let f = fit_stretched_exponential(&DecayCurve::new(f64::NAN, t.to_vec(), y.to_vec()), None)?;
        let get = |k: &str| {
            let p = f.param(k).expect("parameter");
            (p.value, p.stderr.unwrap_or(f64::NAN))
        };
        let ((t1, t1_err), (p, p_err), (eps0, eps0_err)) = (get("T1"), get("p"), get("eps0"));
        *o = RelaxoDecayFit {
            t1,
            t1_err,
            p,
            p_err,
            eps0,
            eps0_err,
            converged: f.converged,
        };
        Ok(())
    })
}

/// Number of values written by `relaxo_fit_profile`: narrow C1, C2, q,
/// broad C1, C2, q, offset.
pub const RELAXO_PROFILE_PARAMS: usize = 7;

/// Two-Tsallian fit of a relaxation profile. `errors` may be null for an
/// unweighted fit. `params` and `stderrs` receive 7 values each.
///
/// # Safety
/// Input arrays must hold `n` values; outputs must hold 7.
#[no_mangle]
pub unsafe extern "C" fn relaxo_fit_profile(
    fields: *const f64,
    rates: *const f64,
    errors: *const f64,
    n: usize,
    params: *mut f64,
    stderrs: *mut f64,
    converged: *mut bool,
) -> RelaxoStatus {
    guard(|| {
        let b = unsafe { slice(fields, n, "fields")? };
        let r = unsafe { slice(rates, n, "rates")? };
        let e = if errors.is_null() { vec![0.0; n] } else { unsafe { slice(errors, n, "errors")? }.to_vec() };
        if params.is_null() || stderrs.is_null() {
            return Err(Failure::Null("params/stderrs"));
        }
        let c = unsafe { self::out(converged, "converged")? };
        let f = fit_relaxation_profile(&RelaxometryProfile::new(b.to_vec(), r.to_vec(), e))?;
        let ps = unsafe { std::slice::from_raw_parts_mut(params, RELAXO_PROFILE_PARAMS) };
        let ss = unsafe { std::slice::from_raw_parts_mut(stderrs, RELAXO_PROFILE_PARAMS) };
        for (i, p) in f.fit.parameters.iter().take(RELAXO_PROFILE_PARAMS).enumerate() {
            ps[i] = p.value;
            ss[i] = p.stderr.unwrap_or(f64::NAN);
        }
        *c = f.fit.converged;
        Ok(())
    })
}

/// Runs a named pipeline ("lattice-stats", "model-eval", "profile-fit",
/// "decay-fit", "acq-sim", "epr", "paper-repro") with an optional TOML
/// configuration, writing into `out_dir`.
///
/// # Safety
/// Strings must be nul-terminated; `config_toml` may be null.
#[no_mangle]
pub unsafe extern "C" fn relaxo_run_pipeline(name: *const c_char, config_toml: *const c_char, out_dir: *const c_char) -> RelaxoStatus {
    guard(|| {
        let n = unsafe { text(name, "name")? };
        let dir = unsafe { text(out_dir, "out_dir")? };
        let cfg = if config_toml.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_toml_str(unsafe { text(config_toml, "config_toml")? })?
        };
        let p = Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == n)
            .ok_or_else(|| Error::validation(format!("unknown pipeline '{n}'")))?;
        execute(p, &cfg, Path::new(dir))?;
        Ok(())
    })
}
