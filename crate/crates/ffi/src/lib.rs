//! C ABI for `lacuna`.
//!
//! Every fallible function returns a [`LacunaStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be read with [`lacuna_last_error`]. Objects created here are opaque and
//! must be released with the matching `*_free` function; strings returned
//! by the library are released with [`lacuna_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lacuna::cli::{run, Overrides, RunConfig, WitnessSpec};
use lacuna::polyseries::cauchy_constant;
use lacuna::poly::zonal_sum_bound;
use lacuna::sphere::{maximal_separated_set, SeparatedSet, UnitVector};
use lacuna::weights::NormalWeight;
use lacuna::witness::{
    build_witness_family, certified_lower_bound, select_a, BallPoint, BuildOptions, Constants, FamilyKind, Mode,
    WitnessFamily,
};
use lacuna::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LacunaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    LevelUnavailable = 4,
    ScanCap = 5,
    Io = 6,
    Parse = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Constant set of the witness construction.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LacunaMode {
    Strict = 0,
    Desk = 1,
    Micro = 2,
}

/// The two interleaved series families of a witness.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LacunaFamilyKind {
    G = 0,
    H = 1,
}

/// A validated normal weight.
pub struct LacunaWeight(NormalWeight);

/// A separated point set on the unit sphere.
pub struct LacunaSeparatedSet(SeparatedSet);

/// A built witness family.
pub struct LacunaWitness(WitnessFamily);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LacunaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) => LacunaStatus::Domain,
            Error::Argument(_) | Error::DimensionMismatch { .. } | Error::Config(_) => LacunaStatus::InvalidArgument,
            Error::LevelUnavailable(_) => LacunaStatus::LevelUnavailable,
            Error::ScanCap { .. } => LacunaStatus::ScanCap,
            Error::Io(_) => LacunaStatus::Io,
            Error::Json(_) | Error::Csv(_) => LacunaStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LacunaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LacunaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside lacuna".into());
            LacunaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LacunaStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|e| Failure(LacunaStatus::InvalidArgument, format!("{what} is not UTF-8: {e}")))
}

fn parse<T: serde::de::DeserializeOwned>(json: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(json).map_err(|e| Failure(LacunaStatus::Parse, format!("{what}: {e}")))
}

fn mode(m: LacunaMode) -> Mode {
    match m {
        LacunaMode::Strict => Mode::Strict,
        LacunaMode::Desk => Mode::Desk,
        LacunaMode::Micro => Mode::Micro,
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lacuna_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lacuna_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lacuna_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Power weight `(1 - r^2)^gamma` with normality exponents `alpha < beta`
/// valid from `delta0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_weight_power(
    gamma: f64,
    alpha: f64,
    beta: f64,
    delta0: f64,
    out: *mut *mut LacunaWeight,
) -> LacunaStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out") }?;
        let w = NormalWeight::power(gamma, alpha, beta, delta0)?;
        *slot = Box::into_raw(Box::new(LacunaWeight(w)));
        Ok(())
    })
}

/// Weight from a JSON block such as
/// `{"kind":"power","gamma":0.5,"alpha":0.4,"beta":0.6,"delta0":0.7}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_weight_from_json(json: *const c_char, out: *mut *mut LacunaWeight) -> LacunaStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out") }?;
        let w: NormalWeight = parse(unsafe { text(json, "json") }?, "weight")?;
        *slot = Box::into_raw(Box::new(LacunaWeight(w)));
        Ok(())
    })
}

/// `mu(r)` for `r` in `[0, 1)`.
///
/// # Safety
/// `w` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lacuna_weight_eval(w: *const LacunaWeight, r: f64, out: *mut f64) -> LacunaStatus {
    guard(|| {
        let w = unsafe { borrow(w, "weight") }?;
        *unsafe { self::out(out, "out") }? = w.0.eval(r)?;
        Ok(())
    })
}

/// Runs the normality check on `grid` points; writes whether it passed.
///
/// # Safety
/// `w` and `pass` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lacuna_weight_verify_normality(
    w: *const LacunaWeight,
    grid: usize,
    pass: *mut bool,
) -> LacunaStatus {
    guard(|| {
        let w = unsafe { borrow(w, "weight") }?;
        *unsafe { out(pass, "pass") }? = w.0.verify_normality(grid)?.pass;
        Ok(())
    })
}

/// # Safety
/// `w` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lacuna_weight_free(w: *mut LacunaWeight) {
    if !w.is_null() {
        drop(unsafe { Box::from_raw(w) });
    }
}

/// Greedy maximal `sep`-separated set on the sphere of `C^n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_separated_set_build(
    n: usize,
    sep: f64,
    seed: u64,
    rejection_budget: u64,
    out: *mut *mut LacunaSeparatedSet,
) -> LacunaStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out") }?;
        let set = maximal_separated_set(n, sep, seed, rejection_budget)?;
        *slot = Box::into_raw(Box::new(LacunaSeparatedSet(set)));
        Ok(())
    })
}

/// Number of points, or 0 for null.
///
/// # Safety
/// `set` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_separated_set_len(set: *const LacunaSeparatedSet) -> usize {
    unsafe { set.as_ref() }.map_or(0, |s| s.0.len())
}

/// Copies point `i` as `2n` reals `(re_1, im_1, ..., re_n, im_n)` into `buf`.
///
/// # Safety
/// `set` must be valid and `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn lacuna_separated_set_point(
    set: *const LacunaSeparatedSet,
    i: usize,
    buf: *mut f64,
    cap: usize,
) -> LacunaStatus {
    guard(|| {
        let set = unsafe { borrow(set, "set") }?;
        let p = set
            .0
            .points()
            .get(i)
            .ok_or_else(|| Failure(LacunaStatus::InvalidArgument, format!("index {i} out of range")))?;
        let reals = p.to_reals();
        if cap < reals.len() {
            return Err(Failure(
                LacunaStatus::BufferTooSmall,
                format!("need {} doubles, got {cap}", reals.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        unsafe { ptr::copy_nonoverlapping(reals.as_ptr(), buf, reals.len()) };
        Ok(())
    })
}

/// # Safety
/// `set` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lacuna_separated_set_free(set: *mut LacunaSeparatedSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Upper bound on `|sum <z, zeta>^k|` over a `delta`-separated center set.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_zonal_sum_bound(n: usize, delta: f64, k: u64, out: *mut f64) -> LacunaStatus {
    guard(|| {
        *unsafe { self::out(out, "out") }? = zonal_sum_bound(n, delta, k)?;
        Ok(())
    })
}

/// `(1 - 1/k)^{-k}` for `k >= 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_cauchy_constant(k: u32, out: *mut f64) -> LacunaStatus {
    guard(|| {
        *unsafe { self::out(out, "out") }? = cauchy_constant(k)?;
        Ok(())
    })
}

/// Largest grid value of the spacing constant `A` admissible in `mode`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_select_a(n: usize, grid: f64, m: LacunaMode, out: *mut f64) -> LacunaStatus {
    guard(|| {
        let bound = Constants::for_mode(mode(m)).zonal_excess;
        *unsafe { self::out(out, "out") }? = select_a(n, grid, bound)?;
        Ok(())
    })
}

/// Builds a witness family from a parameter block such as
/// `{"n":2,"a":1,"p":2,"m":2,"depth":1,"mode":"micro","weight":{...}}`
/// with default build options.
///
/// # Safety
/// `params_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_witness_build(
    params_json: *const c_char,
    seed: u64,
    out: *mut *mut LacunaWitness,
) -> LacunaStatus {
    guard(|| {
        let slot = unsafe { self::out(out, "out") }?;
        let mut spec: WitnessSpec = parse(unsafe { text(params_json, "params_json") }?, "witness params")?;
        let fam = build_witness_family(spec.resolve()?, BuildOptions::default(), seed)?;
        *slot = Box::into_raw(Box::new(LacunaWitness(fam)));
        Ok(())
    })
}

/// Number of levels of the family, or 0 for null.
///
/// # Safety
/// `w` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lacuna_witness_level_count(w: *const LacunaWitness) -> usize {
    unsafe { w.as_ref() }.map_or(0, |w| w.0.levels().len())
}

/// Certified lower bound on `max_i |f_{i,j}(z)|` for `z = modulus * eta`
/// inside shell `(j, v)`; `eta` holds `2n` reals of a unit vector.
///
/// # Safety
/// `w` and `out` must be valid; `eta` must hold `eta_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lacuna_witness_certified_lower_bound(
    w: *const LacunaWitness,
    kind: LacunaFamilyKind,
    eta: *const f64,
    eta_len: usize,
    modulus: f64,
    j: u32,
    v: u32,
    out: *mut f64,
) -> LacunaStatus {
    guard(|| {
        let fam = &unsafe { borrow(w, "witness") }?.0;
        if eta.is_null() {
            return Err(null("eta"));
        }
        let reals = unsafe { std::slice::from_raw_parts(eta, eta_len) };
        let dir = UnitVector::from_reals(reals)?;
        let kind = match kind {
            LacunaFamilyKind::G => FamilyKind::G,
            LacunaFamilyKind::H => FamilyKind::H,
        };
        let pt = BallPoint::new(&dir, modulus)?;
        *unsafe { self::out(out, "out") }? = certified_lower_bound(fam, kind, &pt, j, v)?.bound;
        Ok(())
    })
}

/// # Safety
/// `w` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lacuna_witness_free(w: *mut LacunaWitness) {
    if !w.is_null() {
        drop(unsafe { Box::from_raw(w) });
    }
}

/// Runs a pipeline from a JSON run config (the command-line format) and
/// writes the JSON report to `report`, to be released with
/// [`lacuna_string_free`], and the verdict exit code (0 or 1) to
/// `exit_code`. Nothing is written to disk; relative paths resolve against
/// the working directory.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `report` and `exit_code`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lacuna_run_json(
    config_json: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut i32,
) -> LacunaStatus {
    guard(|| {
        let report = unsafe { out(report, "report") }?;
        let exit_code = unsafe { out(exit_code, "exit_code") }?;
        let cfg = RunConfig::from_json(unsafe { text(config_json, "config_json") }?, "config")?;
        let r = run(&cfg, &Overrides::default())?;
        let json = serde_json::to_string_pretty(&r).map_err(Error::from)?;
        *report = CString::new(json)
            .map_err(|e| Failure(LacunaStatus::Parse, e.to_string()))?
            .into_raw();
        *exit_code = r.exit_code;
        Ok(())
    })
}
