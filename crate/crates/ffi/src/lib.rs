//! C ABI for `pcfpair`.
//!
//! Conventions:
//! - every fallible function returns a [`PcfStatus`] and writes results
//!   through out-pointers, which are left untouched on failure;
//! - models and scans are opaque handles created by `pcf_model_*` and
//!   `pcf_simulate_scan` and released with the matching `*_free`;
//! - the message of the last failure on the calling thread is available
//!   from [`pcf_last_error_message`];
//! - panics never cross the boundary; they surface as `PCF_STATUS_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pcfpair::dispersion::{default_model, DispersionModel, GvdTable};
use pcfpair::interferometer::{coincidence_full, coincidence_postselected, fit_visibility, fit_visibility_free_period, FringeFit};
use pcfpair::mcsim::{scan_fringe, CoincidenceScan, GateConfig, ScanSpec, SourceParams};
use pcfpair::phasematch::{self, FwmConfig};
use pcfpair::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    ErrNull = 1,
    /// Parameter outside its allowed domain.
    ErrInvalid = 2,
    /// Malformed input file or table.
    ErrParse = 3,
    /// Frequency outside the dispersion model's range.
    ErrRange = 4,
    /// Numerical method failed (no root, fit or quadrature not converged).
    ErrNumerical = 5,
    /// File could not be read.
    ErrIo = 6,
    /// Output buffer too small; the required length was written.
    ErrBufferTooSmall = 7,
    /// Internal panic caught at the boundary.
    ErrPanic = 8,
}

/// Opaque dispersion model.
pub struct PcfDispersionModel(DispersionModel);

/// Opaque Monte Carlo coincidence scan.
pub struct PcfCoincidenceScan(CoincidenceScan);

/// Fiber and pump parameters (SI units except wavelengths in nm).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcfFwmConfig {
    /// Nonlinear coefficient, 1/(W·m).
    pub gamma: f64,
    /// Pump power, W.
    pub power: f64,
    /// Fiber length, m.
    pub length: f64,
    pub lambda_p_nm: f64,
    pub loss_db_per_km: f64,
}

impl From<PcfFwmConfig> for FwmConfig {
    fn from(c: PcfFwmConfig) -> Self {
        FwmConfig {
            gamma: c.gamma,
            power: c.power,
            length: c.length,
            lambda_p_nm: c.lambda_p_nm,
            loss_db_per_km: c.loss_db_per_km,
        }
    }
}

/// Fringe fit result; `period_stderr` is zero for fixed-period fits.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PcfFringeFit {
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub phase_rad: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub period: f64,
    pub period_stderr: f64,
    pub reduced_chi2: f64,
}

impl From<FringeFit> for PcfFringeFit {
    fn from(f: FringeFit) -> Self {
        Self {
            visibility: f.visibility,
            visibility_stderr: f.visibility_stderr,
            phase_rad: f.phase_rad,
            offset: f.offset,
            amplitude: f.amplitude,
            period: f.period,
            period_stderr: f.period_stderr,
            reduced_chi2: f.reduced_chi2,
        }
    }
}

/// Photon source and detector model of the Monte Carlo (rates in 1/s,
/// times in s).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcfSourceParams {
    pub pair_rate: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub dark_s: f64,
    pub dark_i: f64,
    pub background_s: f64,
    pub background_i: f64,
    pub mu: f64,
    pub tau: f64,
    pub jitter_sigma: f64,
}

impl From<PcfSourceParams> for SourceParams {
    fn from(p: PcfSourceParams) -> Self {
        SourceParams {
            pair_rate: p.pair_rate,
            eta_s: p.eta_s,
            eta_i: p.eta_i,
            dark_s: p.dark_s,
            dark_i: p.dark_i,
            background_s: p.background_s,
            background_i: p.background_i,
            mu: p.mu,
            tau: p.tau,
            jitter_sigma: p.jitter_sigma,
        }
    }
}

/// Coincidence gate and TAC settings, s.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcfGateConfig {
    pub t_gate: f64,
    pub tac_bin: f64,
    pub tac_range: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PcfStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) | Error::TooFewRows { .. } | Error::NonMonotone { .. } | Error::NonFinite { .. } => {
            PcfStatus::ErrParse
        }
        Error::OutOfRange { .. } => PcfStatus::ErrRange,
        Error::File { .. } | Error::Io(_) => PcfStatus::ErrIo,
        e if e.is_numerical() => PcfStatus::ErrNumerical,
        _ => PcfStatus::ErrInvalid,
    }
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), PcfStatus>>(f: F) -> PcfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            PcfStatus::ErrPanic
        }
    }
}

fn lib<T>(r: pcfpair::Result<T>) -> Result<T, PcfStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null_error(what: &str) -> PcfStatus {
    set_error(format!("null pointer: {what}"));
    PcfStatus::ErrNull
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], PcfStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null_error(what));
    }
    // SAFETY: caller guarantees `p` points to `n` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

unsafe fn model_ref<'a>(m: *const PcfDispersionModel) -> Result<&'a DispersionModel, PcfStatus> {
    // SAFETY: non-null handles come from this library's constructors.
    unsafe { m.as_ref() }.map(|m| &m.0).ok_or_else(|| null_error("model"))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), PcfStatus> {
    if out.is_null() {
        return Err(null_error(what));
    }
    // SAFETY: caller guarantees `out` is valid for writes.
    unsafe { out.write(v) };
    Ok(())
}

/// Copies the last error message of this thread, NUL-terminated, into
/// `buf`. Returns the message length excluding the terminator; nothing is
/// written if `buf` is null or `len` is too small.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn pcf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > msg.len() {
            // SAFETY: `buf` holds at least `msg.len() + 1` bytes.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, msg.len());
                *buf.add(msg.len()) = 0;
            }
        }
        msg.len()
    })
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The experiment's fiber and pump (100 mW at 760.4 nm).
#[no_mangle]
pub extern "C" fn pcf_fwm_config_default() -> PcfFwmConfig {
    let c = FwmConfig::default();
    PcfFwmConfig {
        gamma: c.gamma,
        power: c.power,
        length: c.length,
        lambda_p_nm: c.lambda_p_nm,
        loss_db_per_km: c.loss_db_per_km,
    }
}

/// Built-in calibrated fiber model.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_model_default(out: *mut *mut PcfDispersionModel) -> PcfStatus {
    guard(|| unsafe { write(out, Box::into_raw(Box::new(PcfDispersionModel(default_model()))), "out") })
}

/// Model from a dispersion table of `n` rows: wavelengths (nm, strictly
/// increasing) and D (ps/(nm·km)).
///
/// # Safety
/// `wavelength_nm` and `d_ps_nm_km` must hold `n` values; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_model_from_table(
    wavelength_nm: *const f64,
    d_ps_nm_km: *const f64,
    n: usize,
    out: *mut *mut PcfDispersionModel,
) -> PcfStatus {
    guard(|| unsafe {
        let l = slice(wavelength_nm, n, "wavelength_nm")?;
        let d = slice(d_ps_nm_km, n, "d_ps_nm_km")?;
        let table = lib(GvdTable::new(l.iter().copied().zip(d.iter().copied()).collect(), "ffi table"))?;
        let model = lib(DispersionModel::build_from_gvd(&table))?;
        write(out, Box::into_raw(Box::new(PcfDispersionModel(model))), "out")
    })
}

/// Model from a CSV file `wavelength_nm,D_ps_nm_km`.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_model_from_csv(path: *const c_char, out: *mut *mut PcfDispersionModel) -> PcfStatus {
    guard(|| unsafe {
        if path.is_null() {
            return Err(null_error("path"));
        }
        let p = CStr::from_ptr(path).to_str().map_err(|_| {
            set_error("path is not UTF-8".into());
            PcfStatus::ErrInvalid
        })?;
        let table = lib(GvdTable::from_csv_path(Path::new(p)))?;
        let model = lib(DispersionModel::build_from_gvd(&table))?;
        write(out, Box::into_raw(Box::new(PcfDispersionModel(model))), "out")
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from a `pcf_model_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pcf_model_free(model: *mut PcfDispersionModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Shortest zero-dispersion wavelength, nm.
///
/// # Safety
/// `model` must be a live handle; `out_nm` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_model_zdw(model: *const PcfDispersionModel, out_nm: *mut f64) -> PcfStatus {
    guard(|| unsafe {
        let m = model_ref(model)?;
        write(out_nm, lib(m.zero_dispersion_wavelength())?, "out_nm")
    })
}

/// β₂ at angular frequency `omega` (rad/s), s²/m.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_model_beta2(model: *const PcfDispersionModel, omega: f64, out: *mut f64) -> PcfStatus {
    guard(|| unsafe { write(out, lib(model_ref(model)?.beta2_at(omega))?, "out") })
}

/// Linear phase mismatch `k(ωp+Δω) + k(ωp−Δω) − 2k(ωp)`, rad/m.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_delta_k(
    model: *const PcfDispersionModel,
    lambda_p_nm: f64,
    delta_omega: f64,
    out: *mut f64,
) -> PcfStatus {
    guard(|| unsafe {
        let m = model_ref(model)?;
        write(out, lib(phasematch::delta_k(m, lambda_p_nm, delta_omega))?, "out")
    })
}

/// Idler wavelength conjugate to `lambda_s_nm` under pump `lambda_p_nm`.
///
/// # Safety
/// `out_nm` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_conjugate_wavelength(lambda_p_nm: f64, lambda_s_nm: f64, out_nm: *mut f64) -> PcfStatus {
    guard(|| unsafe { write(out_nm, lib(phasematch::conjugate_wavelength(lambda_p_nm, lambda_s_nm))?, "out_nm") })
}

/// Pair density per unit bandwidth and time at detuning `delta_omega`.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_pair_density(
    model: *const PcfDispersionModel,
    config: PcfFwmConfig,
    delta_omega: f64,
    out: *mut f64,
) -> PcfStatus {
    guard(|| unsafe {
        let m = model_ref(model)?;
        write(out, lib(phasematch::pair_density(m, &config.into(), delta_omega))?, "out")
    })
}

unsafe fn write_solutions(
    sols: &[phasematch::PairPoint],
    out_lambda_s: *mut f64,
    out_lambda_i: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> Result<(), PcfStatus> {
    unsafe { write(out_count, sols.len(), "out_count")? };
    if sols.len() > capacity {
        set_error(format!("{} solutions, capacity {capacity}", sols.len()));
        return Err(PcfStatus::ErrBufferTooSmall);
    }
    if sols.is_empty() {
        return Ok(());
    }
    if out_lambda_s.is_null() || out_lambda_i.is_null() {
        return Err(null_error("solution buffers"));
    }
    for (i, s) in sols.iter().enumerate() {
        // SAFETY: buffers hold `capacity >= sols.len()` elements.
        unsafe {
            *out_lambda_s.add(i) = s.lambda_s;
            *out_lambda_i.add(i) = s.lambda_i;
        }
    }
    Ok(())
}

/// Branch (Δk = 0) solutions: signal and idler wavelengths in nm. Writes the
/// solution count to `out_count`; returns `PCF_STATUS_ERR_BUFFER_TOO_SMALL` if it
/// exceeds `capacity`.
///
/// # Safety
/// Buffers must hold `capacity` values; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcf_branch_solutions(
    model: *const PcfDispersionModel,
    config: PcfFwmConfig,
    out_lambda_s: *mut f64,
    out_lambda_i: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> PcfStatus {
    guard(|| unsafe {
        let sols = lib(phasematch::branch_solutions(model_ref(model)?, &config.into()))?;
        write_solutions(&sols, out_lambda_s, out_lambda_i, capacity, out_count)
    })
}

/// Trunk (Δk = −4γP) solutions; conventions as [`pcf_branch_solutions`].
///
/// # Safety
/// As [`pcf_branch_solutions`].
#[no_mangle]
pub unsafe extern "C" fn pcf_trunk_solutions(
    model: *const PcfDispersionModel,
    config: PcfFwmConfig,
    out_lambda_s: *mut f64,
    out_lambda_i: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> PcfStatus {
    guard(|| unsafe {
        let sols = lib(phasematch::trunk_solutions(model_ref(model)?, &config.into()))?;
        write_solutions(&sols, out_lambda_s, out_lambda_i, capacity, out_count)
    })
}

/// Fiber attenuation e-folding length, m.
///
/// # Safety
/// `out_m` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_attenuation_length(loss_db_per_km: f64, out_m: *mut f64) -> PcfStatus {
    guard(|| unsafe { write(out_m, lib(phasematch::attenuation_efolding_length(loss_db_per_km))?, "out_m") })
}

/// `1 + (μ/2)cos(2kpΔL)`; `k_p` in rad/m, `delta_l` in m.
#[no_mangle]
pub extern "C" fn pcf_coincidence_full(k_p: f64, delta_l: f64, mu: f64) -> f64 {
    coincidence_full(k_p, delta_l, mu)
}

/// `1 + μcos(2kpΔL)`.
#[no_mangle]
pub extern "C" fn pcf_coincidence_postselected(k_p: f64, delta_l: f64, mu: f64) -> f64 {
    coincidence_postselected(k_p, delta_l, mu)
}

/// Fits `A(1 + V cos(2πx/period + φ))` to `n` points. With `free_period`
/// non-zero the period is refined starting from `period`.
///
/// # Safety
/// `x` and `y` must hold `n` values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_fit_visibility(
    x: *const f64,
    y: *const f64,
    n: usize,
    period: f64,
    free_period: i32,
    out: *mut PcfFringeFit,
) -> PcfStatus {
    guard(|| unsafe {
        let xs = slice(x, n, "x")?;
        let ys = slice(y, n, "y")?;
        let scan: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        let fit = if free_period != 0 {
            fit_visibility_free_period(&scan, period)
        } else {
            fit_visibility(&scan, period)
        };
        write(out, lib(fit)?.into(), "out")
    })
}

/// Monte Carlo fringe scan over `n` offsets `delta_x_nm`, each simulated for
/// `duration_s`. The result is reproducible from `seed`.
///
/// # Safety
/// `params` and `gate` must be valid; `delta_x_nm` must hold `n` values;
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pcf_simulate_scan(
    params: *const PcfSourceParams,
    gate: *const PcfGateConfig,
    pump_nm: f64,
    delta_l_m: f64,
    delta_x_nm: *const f64,
    n: usize,
    duration_s: f64,
    seed: u64,
    out: *mut *mut PcfCoincidenceScan,
) -> PcfStatus {
    guard(|| unsafe {
        let p = *params.as_ref().ok_or_else(|| null_error("params"))?;
        let g = *gate.as_ref().ok_or_else(|| null_error("gate"))?;
        let spec = ScanSpec {
            pump_nm,
            delta_l_m,
            delta_x_nm: slice(delta_x_nm, n, "delta_x_nm")?.to_vec(),
            duration_per_point: duration_s,
        };
        let gate = GateConfig {
            t_gate: g.t_gate,
            tac_bin: g.tac_bin,
            tac_range: g.tac_range,
        };
        let scan = lib(scan_fringe(&p.into(), &gate, &spec, seed, false))?;
        write(out, Box::into_raw(Box::new(PcfCoincidenceScan(scan))), "out")
    })
}

/// Number of scan points.
///
/// # Safety
/// `scan` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pcf_scan_len(scan: *const PcfCoincidenceScan) -> usize {
    // SAFETY: non-null handles come from pcf_simulate_scan.
    unsafe { scan.as_ref() }.map_or(0, |s| s.0.delta_x_nm.len())
}

/// Coincidence counts per point for gate width `t_gate` (s), re-gated from
/// the same event streams.
///
/// # Safety
/// `scan` must be a live handle; `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn pcf_scan_counts(
    scan: *const PcfCoincidenceScan,
    t_gate: f64,
    out: *mut u64,
    capacity: usize,
) -> PcfStatus {
    guard(|| unsafe {
        let s = &scan.as_ref().ok_or_else(|| null_error("scan"))?.0;
        let counts = s.counts_for_gate(t_gate);
        if counts.len() > capacity {
            set_error(format!("{} points, capacity {capacity}", counts.len()));
            return Err(PcfStatus::ErrBufferTooSmall);
        }
        if out.is_null() {
            return Err(null_error("out"));
        }
        ptr::copy_nonoverlapping(counts.as_ptr(), out, counts.len());
        Ok(())
    })
}

/// Releases a scan. Null is ignored.
///
/// # Safety
/// `scan` must come from [`pcf_simulate_scan`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pcf_scan_free(scan: *mut PcfCoincidenceScan) {
    if !scan.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(scan) });
    }
}
