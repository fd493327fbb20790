//! C ABI over `qcorner-lab`.
//!
//! Objects are opaque heap handles created by `qcl_*_new`/constructor calls and
//! released by the matching `qcl_*_free`. Every fallible call returns a
//! [`QclStatus`]; on failure [`qcl_last_error_message`] describes the error.
//! Complex arrays are interleaved `re, im` doubles in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qcorner_lab::bweight::{weight_moments, PowersWeight, WeightError};
use qcorner_lab::document::parse_document;
use qcorner_lab::gauge::describe_gauge_group;
use qcorner_lab::qpos::{build_lambda_schur, certify_q_positive};
use qcorner_lab::{c64, CMatrix, MapError, MatrixMap, NumError, QposError, State, TGrid, Tolerance};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QclStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Numerical failure: no convergence, singular system, divergent quadrature.
    Numerical = 3,
    Panic = 4,
}

/// Tolerances; pass NULL wherever accepted for the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QclTolerance {
    pub eps_psd: f64,
    pub eps_eq: f64,
    pub eps_cluster: f64,
}

/// Summary of the gauge group of a rank-one double.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QclGaugeDescriptor {
    /// Number of distinct positive eigenvalues.
    pub block_count: usize,
    pub kernel_multiplicity: usize,
    pub dim_u_rho: usize,
    pub dim_gauge: usize,
    /// Commutant dimension computed independently of the multiplicities.
    pub oracle_dim_u_rho: usize,
}

pub struct QclMatrix(CMatrix);
pub struct QclMap(MatrixMap);
pub struct QclState(State);
pub struct QclWeight(PowersWeight);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QclStatus, String);

impl Failure {
    fn arg(msg: impl Into<String>) -> Self {
        Failure(QclStatus::InvalidArgument, msg.into())
    }
}

fn num_status(e: &NumError) -> QclStatus {
    match e {
        NumError::NoConvergence { .. } | NumError::Singular { .. } => QclStatus::Numerical,
        _ => QclStatus::InvalidArgument,
    }
}

impl From<NumError> for Failure {
    fn from(e: NumError) -> Self {
        Failure(num_status(&e), e.to_string())
    }
}

impl From<MapError> for Failure {
    fn from(e: MapError) -> Self {
        let s = match &e {
            MapError::Num(n) => num_status(n),
            _ => QclStatus::InvalidArgument,
        };
        Failure(s, e.to_string())
    }
}

impl From<QposError> for Failure {
    fn from(e: QposError) -> Self {
        let s = match &e {
            QposError::SingularResolvent { .. } => QclStatus::Numerical,
            QposError::Num(n) => num_status(n),
            _ => QclStatus::InvalidArgument,
        };
        Failure(s, e.to_string())
    }
}

impl From<WeightError> for Failure {
    fn from(e: WeightError) -> Self {
        let s = match &e {
            WeightError::QuadratureDivergent { .. } | WeightError::QuadratureFailed { .. } | WeightError::Inconclusive => {
                QclStatus::Numerical
            }
            _ => QclStatus::InvalidArgument,
        };
        Failure(s, e.to_string())
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QclStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QclStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            QclStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a handle obtained from this library or NULL.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(QclStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(QclStatus::NullPointer, format!("{name} is NULL")));
    }
    // SAFETY: non-null, and the caller guarantees it points to writable storage.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn write_opt<T>(out: *mut T, value: T) {
    if !out.is_null() {
        // SAFETY: as in `write_out`.
        unsafe { out.write(value) };
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn tolerance(tol: *const QclTolerance) -> Result<Tolerance, Failure> {
    // SAFETY: NULL or a valid pointer, per the contract of every caller.
    match unsafe { tol.as_ref() } {
        None => Ok(Tolerance::default()),
        Some(t) => Ok(Tolerance::new(t.eps_psd, t.eps_eq, t.eps_cluster)?),
    }
}

/// Message for the most recent failure on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qcl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default tolerances.
#[no_mangle]
pub extern "C" fn qcl_tolerance_default() -> QclTolerance {
    let t = Tolerance::default();
    QclTolerance { eps_psd: t.eps_psd, eps_eq: t.eps_eq, eps_cluster: t.eps_cluster }
}

/// # Safety
/// `data` holds `2 * rows * cols` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut QclMatrix) -> QclStatus {
    guard(|| {
        if data.is_null() && rows * cols > 0 {
            return Err(Failure(QclStatus::NullPointer, "data is NULL".into()));
        }
        let len = rows.checked_mul(cols).ok_or_else(|| Failure::arg("size overflow"))?;
        let vals = if len == 0 {
            Vec::new()
        } else {
            // SAFETY: the caller provides 2 * len readable doubles.
            let raw = unsafe { std::slice::from_raw_parts(data, 2 * len) };
            raw.chunks_exact(2).map(|p| c64(p[0], p[1])).collect()
        };
        let m = CMatrix::new(rows, cols, vals)?;
        unsafe { write_out(out, boxed(QclMatrix(m)), "out") }
    })
}

/// # Safety
/// `m` is a live matrix handle; `out` holds room for `2 * rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn qcl_matrix_data(m: *const QclMatrix, out: *mut f64) -> QclStatus {
    guard(|| {
        let m = unsafe { deref(m, "matrix") }?;
        if out.is_null() {
            return Err(Failure(QclStatus::NullPointer, "out is NULL".into()));
        }
        for (k, z) in m.0.as_slice().iter().enumerate() {
            // SAFETY: the caller sized `out` for every entry.
            unsafe {
                out.add(2 * k).write(z.re);
                out.add(2 * k + 1).write(z.im);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `m` is a live matrix handle; `rows` and `cols` are writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn qcl_matrix_shape(m: *const QclMatrix, rows: *mut usize, cols: *mut usize) -> QclStatus {
    guard(|| {
        let m = unsafe { deref(m, "matrix") }?;
        unsafe {
            write_opt(rows, m.0.rows());
            write_opt(cols, m.0.cols());
        }
        Ok(())
    })
}

/// # Safety
/// `m` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcl_matrix_free(m: *mut QclMatrix) {
    if !m.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Map from its Choi matrix (`n_in*n_out` square).
///
/// # Safety
/// `choi` is a live matrix handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_from_choi(n_in: usize, n_out: usize, choi: *const QclMatrix, out: *mut *mut QclMap) -> QclStatus {
    guard(|| {
        let c = unsafe { deref(choi, "choi") }?;
        let phi = MatrixMap::from_choi(n_in, n_out, c.0.clone())?;
        unsafe { write_out(out, boxed(QclMap(phi)), "out") }
    })
}

/// Schur multiplier `A ↦ q ∘ A`.
///
/// # Safety
/// `q` is a live square matrix handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_schur(q: *const QclMatrix, out: *mut *mut QclMap) -> QclStatus {
    guard(|| {
        let q = unsafe { deref(q, "q") }?;
        if !q.0.is_square() {
            return Err(Failure::arg("Schur coefficients must be square"));
        }
        unsafe { write_out(out, boxed(QclMap(MatrixMap::schur(&q.0))), "out") }
    })
}

/// Canonical λ-Schur map for a zero-sum λ of length `n`.
///
/// # Safety
/// `lambda` holds `n` doubles; `tol` is NULL or valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_lambda_schur(
    lambda: *const f64,
    n: usize,
    tol: *const QclTolerance,
    out: *mut *mut QclMap,
) -> QclStatus {
    guard(|| {
        if lambda.is_null() {
            return Err(Failure(QclStatus::NullPointer, "lambda is NULL".into()));
        }
        // SAFETY: the caller provides `n` readable doubles.
        let l = unsafe { std::slice::from_raw_parts(lambda, n) };
        let phi = build_lambda_schur(l, &unsafe { tolerance(tol) }?)?;
        unsafe { write_out(out, boxed(QclMap(phi)), "out") }
    })
}

/// `A ↦ tr(AΩ) I`.
///
/// # Safety
/// `state` is a live state handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_rank_one_state(state: *const QclState, out: *mut *mut QclMap) -> QclStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        unsafe { write_out(out, boxed(QclMap(s.0.rank_one_map())), "out") }
    })
}

/// Map from a JSON document of kind `map` (or `state`, for its rank-one map).
///
/// # Safety
/// `json` is a NUL-terminated UTF-8 string; `tol` is NULL or valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_from_json(json: *const c_char, tol: *const QclTolerance, out: *mut *mut QclMap) -> QclStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure(QclStatus::NullPointer, "json is NULL".into()));
        }
        // SAFETY: NUL-terminated per the contract.
        let text = unsafe { CStr::from_ptr(json) }.to_str().map_err(|e| Failure::arg(e.to_string()))?;
        let tol = unsafe { tolerance(tol) }?;
        let doc = parse_document(text).map_err(|e| Failure::arg(e.to_string()))?;
        let phi = if doc.kind() == "state" {
            doc.to_state(&tol).map(|s| s.rank_one_map())
        } else {
            doc.to_map(&tol)
        }
        .map_err(|e| Failure::arg(e.to_string()))?;
        unsafe { write_out(out, boxed(QclMap(phi)), "out") }
    })
}

/// Copy of the Choi matrix.
///
/// # Safety
/// `map` is a live map handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_choi(map: *const QclMap, out: *mut *mut QclMatrix) -> QclStatus {
    guard(|| {
        let m = unsafe { deref(map, "map") }?;
        unsafe { write_out(out, boxed(QclMatrix(m.0.choi().clone())), "out") }
    })
}

/// # Safety
/// `map` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_free(map: *mut QclMap) {
    if !map.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(map) });
    }
}

/// Complete positivity via the Choi matrix.
///
/// # Safety
/// `map` is a live handle; `tol` is NULL or valid; `verdict` is writable;
/// `min_eig` is writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_is_cp(map: *const QclMap, tol: *const QclTolerance, verdict: *mut bool, min_eig: *mut f64) -> QclStatus {
    guard(|| {
        let m = unsafe { deref(map, "map") }?;
        let v = m.0.is_completely_positive(&unsafe { tolerance(tol) }?)?;
        unsafe {
            write_opt(min_eig, v.min_eig);
            write_out(verdict, v.verdict, "verdict")
        }
    })
}

/// q-positivity certificate over `grid` (`grid_len` points starting at 0),
/// or over the default grid when `grid` is NULL.
///
/// # Safety
/// `map` is a live handle; `grid` is NULL or holds `grid_len` doubles; `tol` is
/// NULL or valid; `verdict` is writable; `worst_min_eig` is writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn qcl_map_certify_q_positive(
    map: *const QclMap,
    grid: *const f64,
    grid_len: usize,
    tol: *const QclTolerance,
    verdict: *mut bool,
    worst_min_eig: *mut f64,
) -> QclStatus {
    guard(|| {
        let m = unsafe { deref(map, "map") }?;
        let grid = if grid.is_null() {
            TGrid::default()
        } else {
            // SAFETY: the caller provides `grid_len` readable doubles.
            TGrid::new(unsafe { std::slice::from_raw_parts(grid, grid_len) }.to_vec())?
        };
        let c = certify_q_positive(&m.0, &grid, &unsafe { tolerance(tol) }?)?;
        unsafe {
            write_opt(worst_min_eig, c.worst());
            write_out(verdict, c.verdict, "verdict")
        }
    })
}

/// State with density `omega` (positive semidefinite, unit trace).
///
/// # Safety
/// `omega` is a live matrix handle; `tol` is NULL or valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_state_new(omega: *const QclMatrix, tol: *const QclTolerance, out: *mut *mut QclState) -> QclStatus {
    guard(|| {
        let m = unsafe { deref(omega, "omega") }?;
        let s = State::new(m.0.clone(), &unsafe { tolerance(tol) }?).map_err(|e| Failure::arg(e.to_string()))?;
        unsafe { write_out(out, boxed(QclState(s)), "out") }
    })
}

/// # Safety
/// `state` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcl_state_free(state: *mut QclState) {
    if !state.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Gauge-group dimensions. Block multiplicities (largest eigenvalue first)
/// are copied into `multiplicities` up to `capacity` entries.
///
/// # Safety
/// `state` is a live handle; `tol` is NULL or valid; `out` is writable;
/// `multiplicities` is NULL or holds `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn qcl_gauge_describe(
    state: *const QclState,
    tol: *const QclTolerance,
    out: *mut QclGaugeDescriptor,
    multiplicities: *mut usize,
    capacity: usize,
) -> QclStatus {
    guard(|| {
        let s = unsafe { deref(state, "state") }?;
        let d = describe_gauge_group(&s.0, &unsafe { tolerance(tol) }?);
        if !multiplicities.is_null() {
            for (k, &m) in d.multiplicities.iter().take(capacity).enumerate() {
                // SAFETY: k < capacity.
                unsafe { multiplicities.add(k).write(m) };
            }
        }
        let desc = QclGaugeDescriptor {
            block_count: d.multiplicities.len(),
            kernel_multiplicity: d.kernel_multiplicity,
            dim_u_rho: d.dim_u_rho,
            dim_gauge: d.dim_gauge,
            oracle_dim_u_rho: d.oracle_dim_u_rho,
        };
        unsafe { write_out(out, desc, "out") }
    })
}

/// Normalized indicator weight of `(a, b)`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_weight_indicator(a: f64, b: f64, out: *mut *mut QclWeight) -> QclStatus {
    guard(|| {
        let w = PowersWeight::indicator(a, b)?;
        unsafe { write_out(out, boxed(QclWeight(w)), "out") }
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_weight_exponential(out: *mut *mut QclWeight) -> QclStatus {
    guard(|| unsafe { write_out(out, boxed(QclWeight(PowersWeight::Exponential)), "out") })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qcl_weight_inv_sqrt(out: *mut *mut QclWeight) -> QclStatus {
    guard(|| unsafe { write_out(out, boxed(QclWeight(PowersWeight::InvSqrt)), "out") })
}

/// Truncated moments `ν_t(I)` and `ν_t(Λ)`.
///
/// # Safety
/// `weight` is a live handle; `nu_i` and `nu_lambda` are writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn qcl_weight_moments(weight: *const QclWeight, t: f64, nu_i: *mut f64, nu_lambda: *mut f64) -> QclStatus {
    guard(|| {
        let w = unsafe { deref(weight, "weight") }?;
        let m = weight_moments(&w.0, t)?;
        unsafe {
            write_opt(nu_i, m.nu_i);
            write_opt(nu_lambda, m.nu_lambda);
        }
        Ok(())
    })
}

/// # Safety
/// `weight` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcl_weight_free(weight: *mut QclWeight) {
    if !weight.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(weight) });
    }
}
