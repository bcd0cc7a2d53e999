//! C interface to the `doa_omp` core.
//!
//! Every fallible function returns a [`DoaStatus`]. On failure a description
//! is kept per thread and can be read with [`doa_last_error_message`].
//! Arrays cross the boundary as separate real and imaginary `double` buffers;
//! outputs are copied into caller-owned buffers whose capacity is passed in.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use doa_omp::array::{self, AngleGrid, ArrayGeometry, Dictionary};
use doa_omp::omp::{self, OmpResult};
use doa_omp::sensing::{EffectiveDictionary, MeasuredVector, MeasurementKind};
use doa_omp::DoaError;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoaStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Dimension = 3,
    Identifiability = 4,
    Infeasible = 5,
    Numerical = 6,
    Invariant = 7,
    BufferTooSmall = 8,
    Panic = 9,
    Other = 10,
}

/// Angle grid and its steering dictionary (identity measurement).
pub struct DoaDictionary {
    dictionary: Dictionary,
    effective: EffectiveDictionary,
}

/// Output of one OMP recovery.
pub struct DoaOmpResult {
    result: OmpResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: DoaStatus, msg: impl AsRef<str>) -> DoaStatus {
    set_error(msg.as_ref());
    status
}

fn from_error(e: DoaError) -> DoaStatus {
    let status = match e {
        DoaError::Domain(_) => DoaStatus::Domain,
        DoaError::Dimension(_) => DoaStatus::Dimension,
        DoaError::Identifiability(_) => DoaStatus::Identifiability,
        DoaError::Infeasible(_) => DoaStatus::Infeasible,
        DoaError::Numerical(_) => DoaStatus::Numerical,
        DoaError::Invariant(_) => DoaStatus::Invariant,
        _ => DoaStatus::Other,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> DoaStatus) -> DoaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(DoaStatus::Ok) => {
            set_error("");
            DoaStatus::Ok
        }
        Ok(s) => s,
        Err(_) => fail(DoaStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(DoaStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

/// Copy `src` into a caller buffer of `cap` elements.
unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, cap: usize) -> DoaStatus {
    if src.len() > cap {
        return fail(
            DoaStatus::BufferTooSmall,
            format!("buffer holds {cap} elements, {} needed", src.len()),
        );
    }
    if !src.is_empty() {
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    DoaStatus::Ok
}

unsafe fn copy_complex_out(src: &[Complex64], re: *mut f64, im: *mut f64, cap: usize) -> DoaStatus {
    let r: Vec<f64> = src.iter().map(|z| z.re).collect();
    let i: Vec<f64> = src.iter().map(|z| z.im).collect();
    match copy_out(&r, re, cap) {
        DoaStatus::Ok => copy_out(&i, im, cap),
        s => s,
    }
}

/// Message for the last failed call on this thread, or "" after a success.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn doa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn doa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a dictionary over the uniform grid `start_deg..=stop_deg`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn doa_dictionary_new(
    n_sensors: usize,
    spacing: f64,
    start_deg: f64,
    stop_deg: f64,
    step_deg: f64,
    out: *mut *mut DoaDictionary,
) -> DoaStatus {
    guard(|| {
        non_null!(out);
        let geometry = tri!(ArrayGeometry::new(n_sensors, spacing));
        let grid = tri!(AngleGrid::uniform(start_deg, stop_deg, step_deg));
        let dictionary = array::build_dictionary(&geometry, &grid);
        let effective = tri!(EffectiveDictionary::from_matrix(
            dictionary.matrix().clone()
        ));
        *out = Box::into_raw(Box::new(DoaDictionary {
            dictionary,
            effective,
        }));
        DoaStatus::Ok
    })
}

/// Release a dictionary. Null is ignored.
///
/// # Safety
/// `dict` must come from [`doa_dictionary_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn doa_dictionary_free(dict: *mut DoaDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Number of sensors (rows); 0 for a null handle.
///
/// # Safety
/// `dict` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn doa_dictionary_sensors(dict: *const DoaDictionary) -> usize {
    dict.as_ref()
        .map_or(0, |d| d.dictionary.geometry().n_sensors())
}

/// Number of grid angles (atoms); 0 for a null handle.
///
/// # Safety
/// `dict` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn doa_dictionary_atoms(dict: *const DoaDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.dictionary.n_atoms())
}

/// Copy the grid angles in degrees.
///
/// # Safety
/// `dict` must be a live handle and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn doa_dictionary_angles(
    dict: *const DoaDictionary,
    out: *mut f64,
    cap: usize,
) -> DoaStatus {
    guard(|| {
        non_null!(dict, out);
        copy_out((*dict).dictionary.grid().points(), out, cap)
    })
}

/// Steering vector of an `n_sensors` array at `theta_deg`.
///
/// # Safety
/// `out_re` and `out_im` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn doa_steering_vector(
    n_sensors: usize,
    spacing: f64,
    theta_deg: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    cap: usize,
) -> DoaStatus {
    guard(|| {
        non_null!(out_re, out_im);
        let geometry = tri!(ArrayGeometry::new(n_sensors, spacing));
        let v = tri!(array::steering_vector(&geometry, theta_deg));
        copy_complex_out(v.as_slice(), out_re, out_im, cap)
    })
}

/// Largest source count uniquely identifiable from data of rank `rank_x`.
///
/// # Safety
/// `out` must point to writable storage for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn doa_max_identifiable_sources(
    n_sensors: usize,
    rank_x: usize,
    out: *mut usize,
) -> DoaStatus {
    guard(|| {
        non_null!(out);
        let geometry = tri!(ArrayGeometry::half_wavelength(n_sensors));
        *out = tri!(array::max_identifiable_sources(&geometry, rank_x));
        DoaStatus::Ok
    })
}

/// Run OMP on one snapshot `y` of length `len` (must equal the sensor count).
///
/// # Safety
/// `dict` must be a live handle, `y_re`/`y_im` must hold `len` doubles and
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_recover(
    dict: *const DoaDictionary,
    y_re: *const f64,
    y_im: *const f64,
    len: usize,
    sparsity: usize,
    tolerance: f64,
    out: *mut *mut DoaOmpResult,
) -> DoaStatus {
    guard(|| {
        non_null!(dict, y_re, y_im, out);
        let dict = &*dict;
        let re = std::slice::from_raw_parts(y_re, len);
        let im = std::slice::from_raw_parts(y_im, len);
        let data = doa_omp::linalg::CVector::from_iterator(
            len,
            re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)),
        );
        let y = MeasuredVector::new(data, MeasurementKind::Identity, 0);
        let result = tri!(omp::omp_recover(&dict.effective, &y, sparsity, tolerance));
        *out = Box::into_raw(Box::new(DoaOmpResult { result }));
        DoaStatus::Ok
    })
}

/// Release a recovery result. Null is ignored.
///
/// # Safety
/// `res` must come from [`doa_omp_recover`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_free(res: *mut DoaOmpResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of selected atoms; 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_support_len(res: *const DoaOmpResult) -> usize {
    res.as_ref().map_or(0, |r| r.result.support.len())
}

/// Iterations performed; 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_iterations(res: *const DoaOmpResult) -> usize {
    res.as_ref().map_or(0, |r| r.result.iterations_run)
}

/// Copy the support (grid indices, selection order).
///
/// # Safety
/// `res` must be a live handle and `out` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_support(
    res: *const DoaOmpResult,
    out: *mut usize,
    cap: usize,
) -> DoaStatus {
    guard(|| {
        non_null!(res, out);
        copy_out(&(*res).result.support, out, cap)
    })
}

/// Copy the coefficients aligned with the support.
///
/// # Safety
/// `res` must be a live handle; `out_re`/`out_im` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_coefficients(
    res: *const DoaOmpResult,
    out_re: *mut f64,
    out_im: *mut f64,
    cap: usize,
) -> DoaStatus {
    guard(|| {
        non_null!(res, out_re, out_im);
        copy_complex_out(&(*res).result.coefficients, out_re, out_im, cap)
    })
}

/// Copy the residual norms, starting with the norm of the measurement.
/// The count is `iterations + 1`.
///
/// # Safety
/// `res` must be a live handle and `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_residual_norms(
    res: *const DoaOmpResult,
    out: *mut f64,
    cap: usize,
) -> DoaStatus {
    guard(|| {
        non_null!(res, out);
        copy_out(&(*res).result.residual_norms, out, cap)
    })
}

/// The `m_sources` strongest angles of the recovery, ascending, in degrees.
///
/// Writes the number found to `out_count` (fewer than `m_sources` when the
/// support is smaller; `out_shortfall` is then set to 1).
///
/// # Safety
/// Handles must be live, `out_angles` must hold `cap` doubles and the two
/// scalar outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn doa_omp_result_estimate_doas(
    res: *const DoaOmpResult,
    dict: *const DoaDictionary,
    m_sources: usize,
    out_angles: *mut f64,
    cap: usize,
    out_count: *mut usize,
    out_shortfall: *mut i32,
) -> DoaStatus {
    guard(|| {
        non_null!(res, dict, out_angles, out_count, out_shortfall);
        let spectrum = tri!(omp::angle_spectrum(
            &(*res).result,
            (*dict).dictionary.grid()
        ));
        let est = omp::estimate_doas(&spectrum, m_sources);
        match copy_out(&est.angles_deg, out_angles, cap) {
            DoaStatus::Ok => {}
            s => return s,
        }
        *out_count = est.angles_deg.len();
        *out_shortfall = i32::from(est.shortfall);
        DoaStatus::Ok
    })
}
