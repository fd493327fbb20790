//! q-positivity: the resolvent family `φ(I + tφ)⁻¹`, its certification on a
//! `t`-grid, the exact path for Schur maps, q-domination, and recognition of
//! the two classified q-pure families (rank-one and invertible λ-Schur).

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cpmaps::{MapError, MatrixMap};
use crate::gauge::State;
use crate::numcore::{c64, is_psd, solve, CMatrix, NumError, Tolerance, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QposError {
    #[error("I + tφ is singular at t = {t}")]
    SingularResolvent { t: f64 },
    #[error("λ entries sum to {sum:.3e}, expected 0")]
    LambdaSumNonzero { sum: f64 },
    #[error("map is not a canonical λ-Schur map: {0}")]
    NotCanonical(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("map must act on a single space (got {0})")]
    NotEndomorphism(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Discretization of `t ≥ 0`: strictly increasing, starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TGrid(Vec<f64>);

impl Default for TGrid {
    fn default() -> Self {
        TGrid::log(1e-3, 1e3, 121).expect("default grid is valid")
    }
}

impl TGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, QposError> {
        if points.first() != Some(&0.0) {
            return Err(QposError::InvalidGrid("first point must be 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QposError::InvalidGrid("points must be finite and strictly increasing".into()));
        }
        Ok(TGrid(points))
    }

    /// `{0}` followed by `count` log-spaced points in `[t0, t1]`.
    pub fn log(t0: f64, t1: f64, count: usize) -> Result<Self, QposError> {
        if !(t0 > 0.0 && t1 > t0) || count < 2 {
            return Err(QposError::InvalidGrid(format!("log grid needs 0 < t0 < t1 and count >= 2, got {t0}:{t1}:{count}")));
        }
        let (l0, l1) = (t0.ln(), t1.ln());
        let mut pts = vec![0.0];
        pts.extend((0..count).map(|k| (l0 + (l1 - l0) * k as f64 / (count - 1) as f64).exp()));
        Self::new(pts)
    }

    /// `{0}` followed by `count` evenly spaced points in `[t0, t1]` (0 not repeated).
    pub fn linear(t0: f64, t1: f64, count: usize) -> Result<Self, QposError> {
        if !(t0 >= 0.0 && t1 > t0) || count < 2 {
            return Err(QposError::InvalidGrid(format!("linear grid needs 0 <= t0 < t1, got {t0}:{t1}:{count}")));
        }
        let mut pts = vec![0.0];
        pts.extend((0..count).map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64).filter(|&t| t > 0.0));
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Grid points with `t > 0`.
    pub fn positive(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied().filter(|&t| t > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    ExactSchur,
    NumericGrid,
}

/// Per-grid-point evidence behind a positivity verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdCertificate {
    pub mode: CertMode,
    pub grid: Vec<f64>,
    /// Minimum eigenvalue at each evaluated grid point (NaN where skipped).
    pub min_eigs: Vec<f64>,
    /// Pass/fail at each grid point.
    pub passed: Vec<bool>,
    /// Grid points where the resolvent was singular.
    pub skipped: Vec<f64>,
    pub verdict: bool,
    /// Free-form diagnostics (failed preconditions, flags).
    pub notes: Vec<String>,
}

impl PsdCertificate {
    pub(crate) fn from_points(mode: CertMode, points: Vec<(f64, Option<(f64, bool)>)>, notes: Vec<String>) -> Self {
        let mut grid = Vec::with_capacity(points.len());
        let mut min_eigs = Vec::with_capacity(points.len());
        let mut passed = Vec::with_capacity(points.len());
        let mut skipped = Vec::new();
        for (t, r) in points {
            grid.push(t);
            match r {
                Some((m, ok)) => {
                    min_eigs.push(m);
                    passed.push(ok);
                }
                None => {
                    min_eigs.push(f64::NAN);
                    passed.push(false);
                    skipped.push(t);
                }
            }
        }
        let verdict = passed.iter().all(|&b| b) && skipped.is_empty();
        PsdCertificate { mode, grid, min_eigs, passed, skipped, verdict, notes }
    }

    /// Smallest min-eigenvalue over evaluated points.
    pub fn worst(&self) -> f64 {
        self.min_eigs.iter().copied().filter(|x| !x.is_nan()).fold(f64::INFINITY, f64::min)
    }

    /// First grid point that failed, if any.
    pub fn first_failure(&self) -> Option<f64> {
        self.grid.iter().zip(&self.passed).find(|(_, &ok)| !ok).map(|(&t, _)| t)
    }
}

/// Eigenvalues of `φ` acting on the matrix space, with a flag for the
/// forbidden open negative half-line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub touches_negative_axis: bool,
}

fn require_endomorphism(phi: &MatrixMap) -> Result<(), QposError> {
    if !phi.is_endomorphism() {
        return Err(QposError::NotEndomorphism(format!("{:?} -> {:?}", phi.in_shape(), phi.out_shape())));
    }
    Ok(())
}

pub fn map_spectrum(phi: &MatrixMap, tol: &Tolerance) -> Result<SpectrumReport, QposError> {
    require_endomorphism(phi)?;
    let l = phi.superoperator();
    let n = l.rows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let z = l[(i, j)];
        nalgebra::Complex::new(z.re, z.im)
    });
    let schur = nalgebra::Schur::new(m);
    let (_, t) = schur.unpack();
    let mut eigenvalues: Vec<C64> = (0..n).map(|i| c64(t[(i, i)].re, t[(i, i)].im)).collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = 1.0 + eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eps = tol.eps_eq * scale;
    let touches_negative_axis = eigenvalues.iter().any(|z| z.re < -eps && z.im.abs() <= eps);
    Ok(SpectrumReport { eigenvalues, touches_negative_axis })
}

/// `φ(I + tφ)⁻¹`, from the linear system `(I + tL) X = L` on the superoperator.
pub fn q_resolvent(phi: &MatrixMap, t: f64) -> Result<MatrixMap, QposError> {
    require_endomorphism(phi)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(QposError::InvalidGrid(format!("resolvent parameter must be finite and >= 0, got {t}")));
    }
    let l = phi.superoperator();
    let n = l.rows();
    let mut sys = l.scale_real(t);
    for i in 0..n {
        sys[(i, i)] += c64(1.0, 0.0);
    }
    let x = match solve(&sys, &l) {
        Ok(x) => x,
        Err(NumError::Singular { .. }) => return Err(QposError::SingularResolvent { t }),
        Err(e) => return Err(e.into()),
    };
    Ok(MatrixMap::from_superoperator(phi.in_shape(), phi.out_shape(), &x)?)
}

/// Resolvent of a Schur coefficient matrix: `q ↦ q / (1 + t q)` entrywise.
pub fn schur_resolvent_coefficients(q: &CMatrix, t: f64) -> Result<CMatrix, QposError> {
    let mut out = CMatrix::zeros(q.rows(), q.cols());
    for i in 0..q.rows() {
        for j in 0..q.cols() {
            let z = q[(i, j)];
            let d = c64(1.0, 0.0) + z * t;
            if d.norm() <= 1e-14 {
                return Err(QposError::SingularResolvent { t });
            }
            out[(i, j)] = z / d;
        }
    }
    Ok(out)
}

fn numeric_point(phi: &MatrixMap, t: f64, tol: &Tolerance) -> Result<Option<(f64, bool)>, QposError> {
    match q_resolvent(phi, t) {
        Ok(r) => {
            let v = r.is_completely_positive(tol)?;
            Ok(Some((v.min_eig, v.verdict)))
        }
        Err(QposError::SingularResolvent { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn exact_point(q: &CMatrix, t: f64, tol: &Tolerance) -> Result<Option<(f64, bool)>, QposError> {
    match schur_resolvent_coefficients(q, t) {
        Ok(qt) => {
            let v = is_psd(&qt, tol)?;
            Ok(Some((v.min_eig, v.verdict)))
        }
        Err(QposError::SingularResolvent { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sweep(
    grid: &TGrid,
    point: impl Fn(f64) -> Result<Option<(f64, bool)>, QposError> + Sync,
) -> Result<Vec<(f64, Option<(f64, bool)>)>, QposError> {
    grid.points().par_iter().map(|&t| point(t).map(|r| (t, r))).collect()
}

/// Numeric-grid certificate: CP of `φ(I + tφ)⁻¹` at every grid point.
pub fn certify_numeric(phi: &MatrixMap, grid: &TGrid, tol: &Tolerance) -> Result<PsdCertificate, QposError> {
    let mut notes = Vec::new();
    let spec = map_spectrum(phi, tol)?;
    if spec.touches_negative_axis {
        notes.push("spectrum meets the open negative real axis".into());
    }
    let pts = sweep(grid, |t| numeric_point(phi, t, tol))?;
    let mut cert = PsdCertificate::from_points(CertMode::NumericGrid, pts, notes);
    if spec.touches_negative_axis {
        cert.verdict = false;
    }
    Ok(cert)
}

/// Exact path for Schur maps: PSD of the `k x k` resolvent coefficient matrix
/// at each grid point, which is the complete condition at that `t`.
pub fn certify_exact_schur(q: &CMatrix, grid: &TGrid, tol: &Tolerance) -> Result<PsdCertificate, QposError> {
    let mut notes = Vec::new();
    if recover_lambda_from_coefficients(q, tol).is_ok() {
        notes.push("coefficients are Gram integrals ∫ e^{-(1+t)s} e^{-isλ_j} e^{isλ_k} ds".into());
    }
    let pts = sweep(grid, |t| exact_point(q, t, tol))?;
    let mut cert = PsdCertificate::from_points(CertMode::ExactSchur, pts, notes);
    // Schur maps act diagonally on matrix units, so the spectrum is the entry set of q.
    if q.as_slice().iter().any(|z| z.re < -tol.eps_eq && z.im.abs() <= tol.eps_eq) {
        cert.notes.push("spectrum meets the open negative real axis".into());
        cert.verdict = false;
    }
    Ok(cert)
}

/// Certifies `φ ≥_q 0`; Schur maps take the exact path.
pub fn certify_q_positive(phi: &MatrixMap, grid: &TGrid, tol: &Tolerance) -> Result<PsdCertificate, QposError> {
    require_endomorphism(phi)?;
    if phi.is_square_algebra() {
        if let Ok(q) = phi.schur_coefficients(tol) {
            return certify_exact_schur(&q, grid, tol);
        }
    }
    certify_numeric(phi, grid, tol)
}

/// Certifies `φ ≥_q ψ`: CP of `φ(I+tφ)⁻¹ - ψ(I+tψ)⁻¹` at every grid point.
pub fn q_dominates(phi: &MatrixMap, psi: &MatrixMap, grid: &TGrid, tol: &Tolerance) -> Result<PsdCertificate, QposError> {
    require_endomorphism(phi)?;
    if phi.in_shape() != psi.in_shape() || phi.out_shape() != psi.out_shape() {
        return Err(MapError::DimensionMismatch("q-domination needs maps of equal shape".into()).into());
    }
    let pts = sweep(grid, |t| {
        let (a, b) = match (q_resolvent(phi, t), q_resolvent(psi, t)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(QposError::SingularResolvent { .. }), _) | (_, Err(QposError::SingularResolvent { .. })) => {
                return Ok(None)
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let v = a.sub(&b)?.is_completely_positive(tol)?;
        Ok(Some((v.min_eig, v.verdict)))
    })?;
    Ok(PsdCertificate::from_points(CertMode::NumericGrid, pts, Vec::new()))
}

/// A rank-one unital q-positive map `ρ(·)I` is q-pure iff `ρ` is faithful.
pub fn is_q_pure_rank_one(state: &State) -> bool {
    state.is_faithful()
}

/// Canonical invertible unital q-pure Schur map with
/// `q_jk = 1/(1 + i(λ_j - λ_k))`; requires `Σ λ = 0`.
pub fn build_lambda_schur(lambda: &[f64], tol: &Tolerance) -> Result<MatrixMap, QposError> {
    let sum: f64 = lambda.iter().sum();
    let scale = 1.0 + lambda.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if sum.abs() > tol.eps_eq * scale {
        return Err(QposError::LambdaSumNonzero { sum });
    }
    Ok(MatrixMap::schur(&lambda_schur_coefficients(lambda)))
}

pub fn lambda_schur_coefficients(lambda: &[f64]) -> CMatrix {
    let n = lambda.len();
    CMatrix::from_fn(n, n, |j, k| c64(1.0, 0.0) / c64(1.0, lambda[j] - lambda[k]))
}

/// Inverts a canonical λ-Schur map: `λ_j - λ_k = -i(1/q_jk - 1)`, gauge fixed by `Σ λ = 0`.
/// The result is in input-basis order.
pub fn recover_lambda(phi: &MatrixMap, tol: &Tolerance) -> Result<Vec<f64>, QposError> {
    if !phi.is_endomorphism() || !phi.is_square_algebra() {
        return Err(QposError::NotCanonical("map does not act on M_n".into()));
    }
    let q = phi.schur_coefficients(tol).map_err(|_| QposError::NotCanonical("map is not Schur".into()))?;
    recover_lambda_from_coefficients(&q, tol)
}

pub fn recover_lambda_from_coefficients(q: &CMatrix, tol: &Tolerance) -> Result<Vec<f64>, QposError> {
    let n = q.rows();
    if !q.is_square() {
        return Err(QposError::NotCanonical("coefficient matrix is not square".into()));
    }
    let one = c64(1.0, 0.0);
    for j in 0..n {
        if (q[(j, j)] - one).norm() > tol.eps_eq {
            return Err(QposError::NotCanonical(format!("diagonal coefficient {j} is not 1 (map not unital)")));
        }
    }
    let mut diff = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let z = q[(j, k)];
            if z.norm() <= tol.eps_eq {
                return Err(QposError::NotCanonical(format!("coefficient ({j},{k}) vanishes")));
            }
            let d = (one / z - one) * c64(0.0, -1.0);
            let scale = 1.0 + d.norm();
            if d.im.abs() > tol.eps_eq * scale * scale {
                return Err(QposError::NotCanonical(format!("coefficient ({j},{k}) has Re(1/q) != 1")));
            }
            diff[j][k] = d.re;
        }
    }
    let lambda: Vec<f64> = (0..n).map(|j| diff[j].iter().sum::<f64>() / n as f64).collect();
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let scale = 1.0 + diff[j][k].abs();
            if (lambda[j] - lambda[k] - diff[j][k]).abs() > tol.eps_eq * scale * scale {
                return Err(QposError::NotCanonical(format!("differences inconsistent at ({j},{k})")));
            }
        }
    }
    Ok(lambda)
}
