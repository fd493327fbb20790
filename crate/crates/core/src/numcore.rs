//! Dense complex matrices and the small amount of linear algebra the rest of
//! the crate needs: a cyclic Jacobi Hermitian eigensolver, relative PSD
//! verdicts, unitarity checks, Kronecker products, LU solves and a
//! rank-revealing elimination.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Shorthand for building a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |m - m*| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix has {got} entries, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("linear system is singular (pivot {pivot:.3e})")]
    Singular { pivot: f64 },
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

/// Numerical tolerance policy shared by every certification routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative eigenvalue floor for PSD verdicts.
    pub eps_psd: f64,
    /// Entrywise equality tolerance.
    pub eps_eq: f64,
    /// Absolute gap used when clustering sorted eigenvalues.
    pub eps_cluster: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps_psd: 1e-9, eps_eq: 1e-9, eps_cluster: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(eps_psd: f64, eps_eq: f64, eps_cluster: f64) -> Result<Self, NumError> {
        for (name, v) in [("eps_psd", eps_psd), ("eps_eq", eps_eq), ("eps_cluster", eps_cluster)] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(NumError::InvalidTolerance(format!("{name} = {v} outside (0, 1e-2)")));
            }
        }
        Ok(Tolerance { eps_psd, eps_eq, eps_cluster })
    }

    /// Relative floor `-eps_psd * (1 + scale)` below which an eigenvalue counts as negative.
    pub fn psd_floor(&self, scale: f64) -> f64 {
        -self.eps_psd * (1.0 + scale)
    }
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::BadLength { expected: rows * cols, got: data.len() });
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumError::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &z) in d.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let v: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&v)
    }

    /// Real row-major literal; handy in tests.
    pub fn from_real(rows: usize, cols: usize, vals: &[f64]) -> Self {
        assert_eq!(vals.len(), rows * cols, "from_real: wrong number of entries");
        CMatrix { rows, cols, data: vals.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, NumError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(NumError::BadLength { expected: c, got: bad.len() });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Matrix unit `e_{ij}` of the given shape.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = C64::new(1.0, 0.0);
        m
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(1.0, 0.0); rows * cols] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |self - other|` entrywise; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff: shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &CMatrix, eps: f64) -> bool {
        self.shape() == other.shape() && self.max_abs_diff(other) <= eps
    }

    /// Hermiticity deviation `max |m - m*|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix, NumError> {
        if self.cols != other.rows {
            return Err(NumError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix, NumError> {
        if self.shape() != other.shape() {
            return Err(NumError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &CMatrix) -> Result<CMatrix, NumError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &CMatrix) -> Result<CMatrix, NumError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Copies out the `rows x cols` block whose top-left corner is `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "submatrix out of range");
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "set_block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// `a b - b a`; both must be square of equal size.
    pub fn commutator(&self, other: &CMatrix) -> Result<CMatrix, NumError> {
        self.matmul(other)?.try_sub(&other.matmul(self)?)
    }

    /// Spectral norm, computed as the square root of the largest eigenvalue of `m* m`.
    pub fn operator_norm(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let vals = jacobi(&gram, false).map(|(v, _)| v).unwrap_or_default();
        vals.iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product: dimension mismatch")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(rhs).expect("matrix sum: dimension mismatch")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.try_sub(rhs).expect("matrix difference: dimension mismatch")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Kronecker product; entry `(i1*b.rows + i2, j1*b.cols + j2)` is `a[i1,j1] * b[i2,j2]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i1 in 0..ar {
        for j1 in 0..ac {
            let s = a[(i1, j1)];
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            for i2 in 0..br {
                for j2 in 0..bc {
                    out[(i1 * br + i2, j1 * bc + j2)] = s * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

fn check_hermitian(m: &CMatrix, tol: &Tolerance) -> Result<(), NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let deviation = m.hermitian_deviation();
    if deviation > tol.eps_eq * (1.0 + m.max_abs()) {
        return Err(NumError::NotHermitian { deviation });
    }
    Ok(())
}

/// Cyclic Jacobi on the Hermitian part of `m`; returns unsorted eigenvalues
/// and, when requested, the accumulated rotation.
fn jacobi(m: &CMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>), NumError> {
    let n = m.rows;
    let mut a = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = want_vectors.then(|| CMatrix::identity(n));
    let norm = a.frobenius();
    if n <= 1 || norm == 0.0 {
        return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
    }
    let target = (f64::EPSILON * norm).powi(2);

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if 2.0 * off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                let r = b.norm();
                if r <= f64::MIN_POSITIVE || r <= 1e-18 * norm {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = diag(1, e^{-i arg b}) * [[c, s], [-s, c]]
                let ph = (b / r).conj();
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = ph * (-s);
                let u_qq = ph * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(app - t * r, 0.0);
                a[(q, q)] = C64::new(aqq + t * r, 0.0);

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * u_pp + vkq * u_qp;
                        v[(k, q)] = vkp * u_pq + vkq * u_qq;
                    }
                }
            }
        }
    }
    if !converged {
        return Err(NumError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }
    Ok(((0..n).map(|i| a[(i, i)].re).collect(), v))
}

/// Hermitian eigendecomposition `m = V diag(λ) V*` with ascending eigenvalues.
pub fn hermitian_eig(m: &CMatrix, tol: &Tolerance) -> Result<HermitianEigen, NumError> {
    check_hermitian(m, tol)?;
    let (vals, vecs) = jacobi(m, true)?;
    let vecs = vecs.expect("vectors requested");
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let n = vals.len();
    let vectors = CMatrix::from_fn(n, n, |i, k| vecs[(i, order[k])]);
    Ok(HermitianEigen { values: order.iter().map(|&k| vals[k]).collect(), vectors })
}

/// Ascending eigenvalues only; skips the eigenvector accumulation.
pub fn hermitian_eigenvalues(m: &CMatrix, tol: &Tolerance) -> Result<Vec<f64>, NumError> {
    check_hermitian(m, tol)?;
    let (mut vals, _) = jacobi(m, false)?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Outcome of a PSD test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdVerdict {
    pub verdict: bool,
    pub min_eig: f64,
    /// Spectral radius, used to scale the floor.
    pub spectral_radius: f64,
}

/// PSD verdict relative to the spectral radius:
/// `min_eig >= -eps_psd * (1 + max |λ|)`.
pub fn is_psd(m: &CMatrix, tol: &Tolerance) -> Result<PsdVerdict, NumError> {
    let vals = hermitian_eigenvalues(m, tol)?;
    Ok(psd_from_spectrum(&vals, tol))
}

pub(crate) fn psd_from_spectrum(vals: &[f64], tol: &Tolerance) -> PsdVerdict {
    let min_eig = vals.first().copied().unwrap_or(0.0);
    let spectral_radius = vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
    PsdVerdict { verdict: min_eig >= tol.psd_floor(spectral_radius), min_eig, spectral_radius }
}

pub fn is_unitary(m: &CMatrix, tol: &Tolerance) -> bool {
    if !m.is_square() {
        return false;
    }
    let g = &m.adjoint() * m;
    g.max_abs_diff(&CMatrix::identity(m.rows)) <= tol.eps_eq
}

/// Groups ascending eigenvalues into clusters separated by gaps larger than `eps`.
/// Returns `(mean, multiplicity)` pairs in ascending order.
pub fn cluster_eigenvalues(sorted: &[f64], eps: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &x in sorted {
        match out.last_mut() {
            Some((sum, mult)) if x - last <= eps => {
                *sum += x;
                *mult += 1;
            }
            _ => out.push((x, 1)),
        }
        last = x;
    }
    out.into_iter().map(|(sum, m)| (sum / m as f64, m)).collect()
}

/// Solves `a x = b` by LU with partial pivoting.
///
/// A pivot below `1e-12 * max(1, |a|_max)` is reported as [`NumError::Singular`].
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, NumError> {
    if !a.is_square() {
        return Err(NumError::NotSquare { rows: a.rows, cols: a.cols });
    }
    if a.rows != b.rows {
        return Err(NumError::DimensionMismatch(format!("system {}x{} with rhs {} rows", a.rows, a.cols, b.rows)));
    }
    let n = a.rows;
    let m = b.cols;
    let mut lu = a.clone();
    let mut x = b.clone();
    let floor = 1e-12 * a.max_abs().max(1.0);
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if pmax <= floor {
            return Err(NumError::Singular { pivot: pmax });
        }
        if piv != k {
            for j in 0..n {
                lu.data.swap(k * n + j, piv * n + j);
            }
            for j in 0..m {
                x.data.swap(k * m + j, piv * m + j);
            }
        }
        let d = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / d;
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= f * u;
            }
            for j in 0..m {
                let u = x[(k, j)];
                x[(i, j)] -= f * u;
            }
        }
    }
    for k in (0..n).rev() {
        let d = lu[(k, k)];
        for j in 0..m {
            let mut s = x[(k, j)];
            for i in (k + 1)..n {
                s -= lu[(k, i)] * x[(i, j)];
            }
            x[(k, j)] = s / d;
        }
    }
    Ok(x)
}

/// Numerical rank by Gaussian elimination with complete pivoting: pivots
/// whose modulus is at most `threshold` terminate the elimination.
pub fn rank(m: &CMatrix, threshold: f64) -> usize {
    let mut a = m.clone();
    let (r, c) = a.shape();
    let mut rank = 0;
    for k in 0..r.min(c) {
        let mut best = (k, k, -1.0);
        for i in k..r {
            for j in k..c {
                let v = a[(i, j)].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        let (pi, pj, _) = best;
        for j in 0..c {
            a.data.swap(k * c + j, pi * c + j);
        }
        for i in 0..r {
            a.data.swap(i * c + k, i * c + pj);
        }
        let d = a[(k, k)];
        for i in (k + 1)..r {
            let f = a[(i, k)] / d;
            for j in k..c {
                let u = a[(k, j)];
                a[(i, j)] -= f * u;
            }
        }
        rank += 1;
    }
    rank
}
