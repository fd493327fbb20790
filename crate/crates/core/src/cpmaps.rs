//! Linear maps between matrix spaces, held in Choi form.
//!
//! Convention: for a map `φ` on `p x q` matrices the Choi matrix is
//! `C(φ) = Σ_{ij} e_ij ⊗ φ(e_ij)`, so block `(i, j)` of `C` is `φ(e_ij)` and
//! the first tensor factor carries the input index. With this layout a map
//! between square algebras is completely positive exactly when `C ⪰ 0`.
//!
//! Rectangular shapes are supported so that corner maps
//! `B(K_2, K_1) -> B(K_2, K_1)` and the block maps of a generalized Schur
//! map live in the same type.

use thiserror::Error;

use crate::numcore::{is_psd, is_unitary, CMatrix, NumError, PsdVerdict, Tolerance, C64};

pub type Shape = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("not a Schur map: image of e_({i},{j}) has support off position ({i},{j})")]
    NotSchur { i: usize, j: usize },
    #[error("bad decomposition: {0}")]
    BadDecomposition(String),
    #[error("not generalized Schur: input block ({r},{s}) leaks outside output block ({r},{s})")]
    NotGeneralizedSchur { r: usize, s: usize },
    #[error("hypothesis f_i φ(e_j) f_i = 0 fails at ({i},{j}) with norm {value:.3e}")]
    HypothesisFails { i: usize, j: usize, value: f64 },
    #[error("map is not contractive: |φ(I)| = {norm}")]
    NotContractive { norm: f64 },
    #[error("map is not completely positive (min Choi eigenvalue {min_eig:.3e})")]
    NotCompletelyPositive { min_eig: f64 },
    #[error("bad projection family: {0}")]
    BadProjections(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Block sizes of a direct-sum decomposition `C^n = ⊕ C^{n_i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition(Vec<usize>);

impl Decomposition {
    pub fn new(sizes: Vec<usize>) -> Result<Self, MapError> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(MapError::BadDecomposition(format!("block sizes must be >= 1, got {sizes:?}")));
        }
        Ok(Decomposition(sizes))
    }

    /// `n` blocks of size one.
    pub fn singletons(n: usize) -> Self {
        Decomposition(vec![1; n])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.0
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect()
    }

    /// Block index owning coordinate `k`.
    pub fn block_of(&self, k: usize) -> usize {
        let mut acc = 0;
        for (b, &s) in self.0.iter().enumerate() {
            acc += s;
            if k < acc {
                return b;
            }
        }
        panic!("coordinate {k} outside decomposition of total {}", self.total());
    }
}

/// A linear map from `in_shape` matrices to `out_shape` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMap {
    in_shape: Shape,
    out_shape: Shape,
    choi: CMatrix,
}

impl MatrixMap {
    /// Map `M_{n_in} -> M_{n_out}` from its Choi matrix.
    pub fn from_choi(n_in: usize, n_out: usize, choi: CMatrix) -> Result<Self, MapError> {
        Self::from_rect_choi((n_in, n_in), (n_out, n_out), choi)
    }

    pub fn from_rect_choi(in_shape: Shape, out_shape: Shape, choi: CMatrix) -> Result<Self, MapError> {
        let want = (in_shape.0 * out_shape.0, in_shape.1 * out_shape.1);
        if choi.shape() != want {
            return Err(MapError::DimensionMismatch(format!(
                "Choi matrix is {:?}, expected {:?}",
                choi.shape(),
                want
            )));
        }
        Ok(MatrixMap { in_shape, out_shape, choi })
    }

    /// Assembles the Choi matrix by evaluating `f` on every matrix unit.
    pub fn from_fn(in_shape: Shape, out_shape: Shape, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut choi = CMatrix::zeros(in_shape.0 * out_shape.0, in_shape.1 * out_shape.1);
        for i in 0..in_shape.0 {
            for j in 0..in_shape.1 {
                let img = f(&CMatrix::unit(in_shape.0, in_shape.1, i, j));
                assert_eq!(img.shape(), out_shape, "from_fn: closure returned the wrong shape");
                choi.set_block(i * out_shape.0, j * out_shape.1, &img);
            }
        }
        MatrixMap { in_shape, out_shape, choi }
    }

    pub fn zero(in_shape: Shape, out_shape: Shape) -> Self {
        let choi = CMatrix::zeros(in_shape.0 * out_shape.0, in_shape.1 * out_shape.1);
        MatrixMap { in_shape, out_shape, choi }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn((n, n), (n, n), Clone::clone)
    }

    pub fn rect_identity(shape: Shape) -> Self {
        Self::from_fn(shape, shape, Clone::clone)
    }

    pub fn transpose_map(n: usize) -> Self {
        Self::from_fn((n, n), (n, n), CMatrix::transpose)
    }

    /// `A ↦ tr(A Ω) I`.
    pub fn rank_one_state(omega: &CMatrix) -> Result<Self, MapError> {
        if !omega.is_square() {
            return Err(MapError::DimensionMismatch("density must be square".into()));
        }
        let n = omega.rows();
        let id = CMatrix::identity(n);
        Ok(Self::from_fn((n, n), (n, n), |a| id.scale((a * omega).trace())))
    }

    /// `A ↦ Σ K A K*`.
    pub fn kraus(ops: &[CMatrix]) -> Result<Self, MapError> {
        let first = ops.first().ok_or_else(|| MapError::DimensionMismatch("no Kraus operators".into()))?;
        let (r, c) = first.shape();
        if ops.iter().any(|k| k.shape() != (r, c)) {
            return Err(MapError::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        Ok(Self::from_fn((c, c), (r, r), |a| {
            ops.iter().fold(CMatrix::zeros(r, r), |acc, k| &acc + &(&(k * a) * &k.adjoint()))
        }))
    }

    /// Schur multiplier `(x_ij) ↦ (q_ij x_ij)`; rectangular `q` allowed.
    pub fn schur(q: &CMatrix) -> Self {
        let shape = q.shape();
        Self::from_fn(shape, shape, |a| CMatrix::from_fn(shape.0, shape.1, |i, j| q[(i, j)] * a[(i, j)]))
    }

    /// Rebuilds a map from its matrix on vectorized (row-major) matrices.
    pub fn from_superoperator(in_shape: Shape, out_shape: Shape, l: &CMatrix) -> Result<Self, MapError> {
        let (din, dout) = (in_shape.0 * in_shape.1, out_shape.0 * out_shape.1);
        if l.shape() != (dout, din) {
            return Err(MapError::DimensionMismatch(format!(
                "superoperator is {:?}, expected {:?}",
                l.shape(),
                (dout, din)
            )));
        }
        let mut choi = CMatrix::zeros(in_shape.0 * out_shape.0, in_shape.1 * out_shape.1);
        for i in 0..in_shape.0 {
            for j in 0..in_shape.1 {
                let col = i * in_shape.1 + j;
                for k in 0..out_shape.0 {
                    for m in 0..out_shape.1 {
                        choi[(i * out_shape.0 + k, j * out_shape.1 + m)] = l[(k * out_shape.1 + m, col)];
                    }
                }
            }
        }
        Ok(MatrixMap { in_shape, out_shape, choi })
    }

    pub fn in_shape(&self) -> Shape {
        self.in_shape
    }

    pub fn out_shape(&self) -> Shape {
        self.out_shape
    }

    /// Input dimension for maps between square algebras.
    pub fn n_in(&self) -> usize {
        self.in_shape.0
    }

    pub fn n_out(&self) -> usize {
        self.out_shape.0
    }

    pub fn is_square_algebra(&self) -> bool {
        self.in_shape.0 == self.in_shape.1 && self.out_shape.0 == self.out_shape.1
    }

    /// True when input and output spaces coincide, so the map is an endomorphism.
    pub fn is_endomorphism(&self) -> bool {
        self.in_shape == self.out_shape
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// `φ(e_ij)`.
    pub fn image_of_unit(&self, i: usize, j: usize) -> CMatrix {
        self.choi.submatrix(i * self.out_shape.0, j * self.out_shape.1, self.out_shape.0, self.out_shape.1)
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix, MapError> {
        if a.shape() != self.in_shape {
            return Err(MapError::DimensionMismatch(format!(
                "map expects {:?} input, got {:?}",
                self.in_shape,
                a.shape()
            )));
        }
        let (or, oc) = self.out_shape;
        let mut out = CMatrix::zeros(or, oc);
        for i in 0..self.in_shape.0 {
            for j in 0..self.in_shape.1 {
                let s = a[(i, j)];
                if s.re == 0.0 && s.im == 0.0 {
                    continue;
                }
                for k in 0..or {
                    for l in 0..oc {
                        out[(k, l)] += s * self.choi[(i * or + k, j * oc + l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix of the map acting on row-major vectorizations.
    pub fn superoperator(&self) -> CMatrix {
        let (ir, ic) = self.in_shape;
        let (or, oc) = self.out_shape;
        let mut l = CMatrix::zeros(or * oc, ir * ic);
        for i in 0..ir {
            for j in 0..ic {
                let col = i * ic + j;
                for k in 0..or {
                    for m in 0..oc {
                        l[(k * oc + m, col)] = self.choi[(i * or + k, j * oc + m)];
                    }
                }
            }
        }
        l
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MatrixMap) -> Result<MatrixMap, MapError> {
        if inner.out_shape != self.in_shape {
            return Err(MapError::DimensionMismatch(format!(
                "cannot compose: inner output {:?} vs outer input {:?}",
                inner.out_shape, self.in_shape
            )));
        }
        let l = self.superoperator().matmul(&inner.superoperator())?;
        MatrixMap::from_superoperator(inner.in_shape, self.out_shape, &l)
    }

    pub fn add(&self, other: &MatrixMap) -> Result<MatrixMap, MapError> {
        self.same_shape(other)?;
        Ok(MatrixMap { choi: &self.choi + &other.choi, ..self.clone() })
    }

    pub fn sub(&self, other: &MatrixMap) -> Result<MatrixMap, MapError> {
        self.same_shape(other)?;
        Ok(MatrixMap { choi: &self.choi - &other.choi, ..self.clone() })
    }

    pub fn scale(&self, s: C64) -> MatrixMap {
        MatrixMap { choi: self.choi.scale(s), ..self.clone() }
    }

    fn same_shape(&self, other: &MatrixMap) -> Result<(), MapError> {
        if self.in_shape != other.in_shape || self.out_shape != other.out_shape {
            return Err(MapError::DimensionMismatch(format!(
                "{:?}->{:?} vs {:?}->{:?}",
                self.in_shape, self.out_shape, other.in_shape, other.out_shape
            )));
        }
        Ok(())
    }

    /// `γ*(C) = [γ(C*)]*`, mapping transposed shapes.
    pub fn adjoint(&self) -> MatrixMap {
        let in_shape = (self.in_shape.1, self.in_shape.0);
        let out_shape = (self.out_shape.1, self.out_shape.0);
        let mut choi = CMatrix::zeros(in_shape.0 * out_shape.0, in_shape.1 * out_shape.1);
        for i in 0..in_shape.0 {
            for j in 0..in_shape.1 {
                choi.set_block(i * out_shape.0, j * out_shape.1, &self.image_of_unit(j, i).adjoint());
            }
        }
        MatrixMap { in_shape, out_shape, choi }
    }

    /// `φ_U(A) = U* φ(U A U*) U`.
    pub fn conjugate_by_unitary(&self, u: &CMatrix, tol: &Tolerance) -> Result<MatrixMap, MapError> {
        if !self.is_endomorphism() || !self.is_square_algebra() {
            return Err(MapError::DimensionMismatch("conjugation needs a map on M_n".into()));
        }
        if u.shape() != self.in_shape {
            return Err(MapError::DimensionMismatch(format!("unitary is {:?}, map acts on {:?}", u.shape(), self.in_shape)));
        }
        if !is_unitary(u, tol) {
            return Err(MapError::NotUnitary);
        }
        let ua = u.adjoint();
        Ok(MatrixMap::from_fn(self.in_shape, self.out_shape, |a| {
            let inner = &(u * a) * &ua;
            let img = self.apply(&inner).expect("shape checked");
            &(&ua * &img) * u
        }))
    }

    pub fn is_completely_positive(&self, tol: &Tolerance) -> Result<PsdVerdict, MapError> {
        if !self.is_square_algebra() {
            return Err(MapError::DimensionMismatch("complete positivity needs square input and output".into()));
        }
        Ok(is_psd(&self.choi, tol)?)
    }

    pub fn approx_eq(&self, other: &MatrixMap, eps: f64) -> bool {
        self.in_shape == other.in_shape && self.out_shape == other.out_shape && self.choi.approx_eq(&other.choi, eps)
    }

    pub fn is_unital(&self, tol: &Tolerance) -> bool {
        if !self.is_square_algebra() {
            return false;
        }
        match self.apply(&CMatrix::identity(self.in_shape.0)) {
            Ok(img) => img.approx_eq(&CMatrix::identity(self.out_shape.0), tol.eps_eq),
            Err(_) => false,
        }
    }

    fn support_floor(&self, tol: &Tolerance) -> f64 {
        tol.eps_eq * (1.0 + self.choi.max_abs())
    }

    /// Coefficient matrix `q` when `φ(e_ij) = q_ij e_ij` on an endomorphism.
    pub fn schur_coefficients(&self, tol: &Tolerance) -> Result<CMatrix, MapError> {
        if !self.is_endomorphism() {
            return Err(MapError::DimensionMismatch("Schur maps preserve shape".into()));
        }
        let floor = self.support_floor(tol);
        let (r, c) = self.in_shape;
        let mut q = CMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                let img = self.image_of_unit(i, j);
                for k in 0..r {
                    for l in 0..c {
                        if (k, l) != (i, j) && img[(k, l)].norm() > floor {
                            return Err(MapError::NotSchur { i, j });
                        }
                    }
                }
                q[(i, j)] = img[(i, j)];
            }
        }
        Ok(q)
    }

    fn check_decompositions(&self, d_in: &Decomposition, d_out: &Decomposition) -> Result<(), MapError> {
        if !self.is_square_algebra() {
            return Err(MapError::BadDecomposition("generalized Schur structure needs square algebras".into()));
        }
        if d_in.len() != d_out.len() {
            return Err(MapError::BadDecomposition(format!(
                "input has {} blocks, output has {}",
                d_in.len(),
                d_out.len()
            )));
        }
        if d_in.total() != self.in_shape.0 || d_out.total() != self.out_shape.0 {
            return Err(MapError::BadDecomposition(format!(
                "decompositions sum to {} and {}, map is M_{} -> M_{}",
                d_in.total(),
                d_out.total(),
                self.in_shape.0,
                self.out_shape.0
            )));
        }
        Ok(())
    }

    fn first_leak(&self, d_in: &Decomposition, d_out: &Decomposition, tol: &Tolerance) -> Option<(usize, usize)> {
        let floor = self.support_floor(tol);
        for k in 0..self.in_shape.0 {
            for l in 0..self.in_shape.1 {
                let (r, s) = (d_in.block_of(k), d_in.block_of(l));
                let img = self.image_of_unit(k, l);
                for a in 0..self.out_shape.0 {
                    for b in 0..self.out_shape.1 {
                        if (d_out.block_of(a), d_out.block_of(b)) != (r, s) && img[(a, b)].norm() > floor {
                            return Some((r, s));
                        }
                    }
                }
            }
        }
        None
    }

    /// True when each input block `(r, s)` is sent into output block `(r, s)` only.
    pub fn is_generalized_schur(&self, d_in: &Decomposition, d_out: &Decomposition, tol: &Tolerance) -> Result<bool, MapError> {
        self.check_decompositions(d_in, d_out)?;
        Ok(self.first_leak(d_in, d_out, tol).is_none())
    }

    /// Block map `φ_ij(X) = [φ(X^{ij})]_{ij}`.
    pub fn restrict_block(
        &self,
        d_in: &Decomposition,
        d_out: &Decomposition,
        i: usize,
        j: usize,
        tol: &Tolerance,
    ) -> Result<MatrixMap, MapError> {
        self.check_decompositions(d_in, d_out)?;
        if i >= d_in.len() || j >= d_in.len() {
            return Err(MapError::BadDecomposition(format!("block ({i},{j}) out of range")));
        }
        if let Some((r, s)) = self.first_leak(d_in, d_out, tol) {
            return Err(MapError::NotGeneralizedSchur { r, s });
        }
        let (oi, oj) = (d_in.offsets()[i], d_in.offsets()[j]);
        let (pi, pj) = (d_out.offsets()[i], d_out.offsets()[j]);
        let in_shape = (d_in.sizes()[i], d_in.sizes()[j]);
        let out_shape = (d_out.sizes()[i], d_out.sizes()[j]);
        Ok(MatrixMap::from_fn(in_shape, out_shape, |x| {
            let mut big = CMatrix::zeros(self.in_shape.0, self.in_shape.1);
            big.set_block(oi, oj, x);
            let img = self.apply(&big).expect("shape checked");
            img.submatrix(pi, pj, out_shape.0, out_shape.1)
        }))
    }

    /// Generalized Schur map whose `(r, s)` block map is `blocks[r][s]` (`None` = zero).
    pub fn assemble_blocks(
        d_in: &Decomposition,
        d_out: &Decomposition,
        blocks: &[Vec<Option<&MatrixMap>>],
    ) -> Result<MatrixMap, MapError> {
        let k = d_in.len();
        if d_out.len() != k || blocks.len() != k || blocks.iter().any(|row| row.len() != k) {
            return Err(MapError::BadDecomposition("block grid does not match decompositions".into()));
        }
        for (r, row) in blocks.iter().enumerate() {
            for (s, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    let want_in = (d_in.sizes()[r], d_in.sizes()[s]);
                    let want_out = (d_out.sizes()[r], d_out.sizes()[s]);
                    if b.in_shape != want_in || b.out_shape != want_out {
                        return Err(MapError::DimensionMismatch(format!(
                            "block ({r},{s}) is {:?}->{:?}, expected {:?}->{:?}",
                            b.in_shape, b.out_shape, want_in, want_out
                        )));
                    }
                }
            }
        }
        let (n, m) = (d_in.total(), d_out.total());
        let (oin, oout) = (d_in.offsets(), d_out.offsets());
        let mut choi = CMatrix::zeros(n * m, n * m);
        for a in 0..n {
            for b in 0..n {
                let (r, s) = (d_in.block_of(a), d_in.block_of(b));
                let Some(map) = blocks[r][s] else { continue };
                let img = map.image_of_unit(a - oin[r], b - oin[s]);
                choi.set_block(a * m + oout[r], b * m + oout[s], &img);
            }
        }
        Ok(MatrixMap { in_shape: (n, n), out_shape: (m, m), choi })
    }
}

/// Outcome of the block-zero lemma check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixZeroesReport {
    /// `max_{i≠j} |f_i φ(e_j) f_i|`.
    pub hypothesis_residual: f64,
    /// Largest violation of `f_i φ(e_i a e_j) f_j = φ(e_i a e_j) = f_i φ(a) f_j` over matrix units `a`.
    pub conclusion_violation: f64,
}

fn check_projection_family(ps: &[CMatrix], n: usize, tol: &Tolerance, side: &str) -> Result<(), MapError> {
    if ps.iter().any(|p| p.shape() != (n, n)) {
        return Err(MapError::BadProjections(format!("{side} projections must be {n}x{n}")));
    }
    let mut sum = CMatrix::zeros(n, n);
    for (i, p) in ps.iter().enumerate() {
        if !(p * p).approx_eq(p, tol.eps_eq) || p.hermitian_deviation() > tol.eps_eq {
            return Err(MapError::BadProjections(format!("{side} element {i} is not an orthogonal projection")));
        }
        for (j, q) in ps.iter().enumerate().skip(i + 1) {
            if (p * q).max_abs() > tol.eps_eq {
                return Err(MapError::BadProjections(format!("{side} elements {i} and {j} are not orthogonal")));
            }
        }
        sum = &sum + p;
    }
    if !sum.approx_eq(&CMatrix::identity(n), tol.eps_eq) {
        return Err(MapError::BadProjections(format!("{side} projections do not sum to the identity")));
    }
    Ok(())
}

/// Checks the block-zero lemma for a contractive CP map: if `f_i φ(e_j) f_i = 0`
/// for all `i ≠ j`, then `f_i φ(e_i a e_j) f_j = φ(e_i a e_j) = f_i φ(a) f_j`.
pub fn check_matrixzeroes_property(
    phi: &MatrixMap,
    in_projections: &[CMatrix],
    out_projections: &[CMatrix],
    tol: &Tolerance,
) -> Result<MatrixZeroesReport, MapError> {
    let (n, m) = (phi.n_in(), phi.n_out());
    if !phi.is_square_algebra() {
        return Err(MapError::DimensionMismatch("lemma applies to maps between square algebras".into()));
    }
    if in_projections.len() != out_projections.len() {
        return Err(MapError::BadProjections("families must have equal length".into()));
    }
    check_projection_family(in_projections, n, tol, "input")?;
    check_projection_family(out_projections, m, tol, "output")?;
    let cp = phi.is_completely_positive(tol)?;
    if !cp.verdict {
        return Err(MapError::NotCompletelyPositive { min_eig: cp.min_eig });
    }
    let norm = phi.apply(&CMatrix::identity(n))?.operator_norm();
    if norm > 1.0 + tol.eps_eq {
        return Err(MapError::NotContractive { norm });
    }

    let mut hypothesis_residual: f64 = 0.0;
    for (i, f) in out_projections.iter().enumerate() {
        for (j, e) in in_projections.iter().enumerate() {
            if i == j {
                continue;
            }
            let v = (&(f * &phi.apply(e)?) * f).max_abs();
            if v > tol.eps_eq * (1.0 + phi.choi.max_abs()) {
                return Err(MapError::HypothesisFails { i, j, value: v });
            }
            hypothesis_residual = hypothesis_residual.max(v);
        }
    }

    let mut conclusion_violation: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            let a = CMatrix::unit(n, n, k, l);
            let pa = phi.apply(&a)?;
            for (ei, fi) in in_projections.iter().zip(out_projections) {
                for (ej, fj) in in_projections.iter().zip(out_projections) {
                    let img = phi.apply(&(&(ei * &a) * ej))?;
                    let compressed = &(fi * &img) * fj;
                    let from_a = &(fi * &pa) * fj;
                    conclusion_violation = conclusion_violation
                        .max(compressed.max_abs_diff(&img))
                        .max(img.max_abs_diff(&from_a));
                }
            }
        }
    }
    Ok(MatrixZeroesReport { hypothesis_residual, conclusion_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::c64;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn one() -> C64 {
        c64(1.0, 0.0)
    }

    #[test]
    fn apply_examples() {
        let a = CMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(MatrixMap::identity(2).apply(&a).unwrap(), a);

        let phi = MatrixMap::rank_one_state(&CMatrix::from_real_diag(&[0.5, 0.5])).unwrap();
        let img = phi.apply(&CMatrix::from_real_diag(&[2.0, 0.0])).unwrap();
        assert!(img.approx_eq(&CMatrix::identity(2), 1e-15));

        let t = MatrixMap::transpose_map(2);
        assert_eq!(t.apply(&CMatrix::unit(2, 2, 0, 1)).unwrap(), CMatrix::unit(2, 2, 1, 0));
        assert!(matches!(t.apply(&CMatrix::identity(3)), Err(MapError::DimensionMismatch(_))));
    }

    #[test]
    fn cp_examples() {
        // Choi of the identity is n times the maximally entangled projector.
        let v = MatrixMap::identity(2).is_completely_positive(&tol()).unwrap();
        assert!(v.verdict && v.min_eig.abs() < 1e-14 && (v.spectral_radius - 2.0).abs() < 1e-14);

        // Choi of the transpose is the swap.
        let v = MatrixMap::transpose_map(2).is_completely_positive(&tol()).unwrap();
        assert!(!v.verdict && (v.min_eig + 1.0).abs() < 1e-14);

        let omega = CMatrix::from_real_diag(&[2.0 / 3.0, 1.0 / 3.0]);
        let phi = MatrixMap::rank_one_state(&omega).unwrap();
        let expected = crate::numcore::kron(&omega.transpose(), &CMatrix::identity(2));
        assert!(phi.choi().approx_eq(&expected, 1e-15));
        assert!(phi.is_completely_positive(&tol()).unwrap().verdict);
    }

    #[test]
    fn compose_examples() {
        let phi = MatrixMap::rank_one_state(&CMatrix::from_real_diag(&[0.7, 0.3])).unwrap();
        assert!(MatrixMap::identity(2).compose(&phi).unwrap().approx_eq(&phi, 1e-15));
        assert!(phi.compose(&phi).unwrap().approx_eq(&phi, 1e-15));
        assert!(matches!(phi.compose(&MatrixMap::identity(3)), Err(MapError::DimensionMismatch(_))));
    }

    #[test]
    fn adjoint_is_involution_and_matches_definition() {
        let omega = CMatrix::from_real_diag(&[0.6, 0.4]);
        let x = CMatrix::from_diag(&[one(), c64(0.0, 1.0)]);
        let lam = c64(1.0, 0.0) / c64(1.0, 2.0);
        let gamma = MatrixMap::from_fn((2, 2), (2, 2), |a| x.scale(lam * (&(&x.adjoint() * a) * &omega).trace()));
        let star = gamma.adjoint();
        assert!(star.adjoint().approx_eq(&gamma, 1e-15));
        let c = CMatrix::from_fn(2, 2, |i, j| c64(i as f64 + 0.5, j as f64 - 0.25));
        let lhs = star.apply(&c).unwrap();
        let rhs = gamma.apply(&c.adjoint()).unwrap().adjoint();
        assert!(lhs.approx_eq(&rhs, 1e-14));
    }

    #[test]
    fn rectangular_adjoint_shapes() {
        let q = CMatrix::from_real(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let g = MatrixMap::schur(&q);
        let s = g.adjoint();
        assert_eq!(s.in_shape(), (3, 2));
        assert_eq!(s.schur_coefficients(&tol()).unwrap(), q.adjoint());
    }

    #[test]
    fn conjugation_examples() {
        let omega = CMatrix::from_real_diag(&[2.0 / 3.0, 1.0 / 3.0]);
        let phi = MatrixMap::rank_one_state(&omega).unwrap();
        assert!(phi.conjugate_by_unitary(&CMatrix::identity(2), &tol()).unwrap().approx_eq(&phi, 1e-15));

        let mut rng = crate::random::seeded(7);
        let u = crate::random::random_unitary(&mut rng, 2);
        let conj = phi.conjugate_by_unitary(&u, &tol()).unwrap();
        let omega2 = &(&u.adjoint() * &omega) * &u;
        assert!(conj.approx_eq(&MatrixMap::rank_one_state(&omega2).unwrap(), 1e-13));

        let q = CMatrix::from_fn(3, 3, |i, j| c64((i * 3 + j) as f64, 0.5 * i as f64));
        let perm = CMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let permuted = MatrixMap::schur(&q).conjugate_by_unitary(&perm, &tol()).unwrap();
        let q2 = permuted.schur_coefficients(&tol()).unwrap();
        // U* φ(U A U*) U relabels basis vector k as σ(k) where U e_k = e_σ(k).
        let sigma = |k: usize| (0..3).find(|&r| perm[(r, k)].re == 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q2[(i, j)], q[(sigma(i), sigma(j))]);
            }
        }

        assert!(matches!(
            phi.conjugate_by_unitary(&CMatrix::from_real_diag(&[1.0, 0.5]), &tol()),
            Err(MapError::NotUnitary)
        ));
    }

    #[test]
    fn schur_examples() {
        assert!(MatrixMap::schur(&CMatrix::ones(3, 3)).approx_eq(&MatrixMap::identity(3), 0.0));
        let q = CMatrix::from_real(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let s = MatrixMap::schur(&q);
        assert!(s.is_completely_positive(&tol()).unwrap().verdict);
        assert_eq!(s.schur_coefficients(&tol()).unwrap(), q);

        let omega = CMatrix::from_real(2, 2, &[0.5, 0.25, 0.25, 0.5]);
        let phi = MatrixMap::rank_one_state(&omega).unwrap();
        assert!(matches!(phi.schur_coefficients(&tol()), Err(MapError::NotSchur { .. })));
    }

    #[test]
    fn generalized_schur_examples() {
        let q = CMatrix::from_real(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let d = Decomposition::singletons(3);
        assert!(MatrixMap::schur(&q).is_generalized_schur(&d, &d, &tol()).unwrap());

        let omega = CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let phi = MatrixMap::rank_one_state(&omega).unwrap();
        let d2 = Decomposition::singletons(2);
        assert!(!phi.is_generalized_schur(&d2, &d2, &tol()).unwrap());
        assert!(matches!(
            phi.restrict_block(&d2, &d2, 0, 1, &tol()),
            Err(MapError::NotGeneralizedSchur { .. })
        ));
        assert!(matches!(
            phi.is_generalized_schur(&Decomposition::new(vec![1, 2]).unwrap(), &d2, &tol()),
            Err(MapError::BadDecomposition(_))
        ));
        assert!(Decomposition::new(vec![2, 0]).is_err());
    }

    #[test]
    fn identity_blocks_are_identities() {
        let d = Decomposition::new(vec![2, 1]).unwrap();
        let id = MatrixMap::identity(3);
        for i in 0..2 {
            for j in 0..2 {
                let b = id.restrict_block(&d, &d, i, j, &tol()).unwrap();
                let shape = (d.sizes()[i], d.sizes()[j]);
                assert!(b.approx_eq(&MatrixMap::rect_identity(shape), 0.0));
            }
        }
    }

    #[test]
    fn lambda_schur_block_is_entrywise_multiplier() {
        let lam = [0.7, -0.2, -0.5];
        let q = CMatrix::from_fn(3, 3, |j, k| one() / c64(1.0, lam[j] - lam[k]));
        let d = Decomposition::new(vec![2, 1]).unwrap();
        let b = MatrixMap::schur(&q).restrict_block(&d, &d, 0, 1, &tol()).unwrap();
        let coeffs = b.schur_coefficients(&tol()).unwrap();
        assert_eq!(coeffs.shape(), (2, 1));
        assert!((coeffs[(0, 0)] - one() / c64(1.0, lam[0] - lam[2])).norm() < 1e-15);
        assert!((coeffs[(1, 0)] - one() / c64(1.0, lam[1] - lam[2])).norm() < 1e-15);
    }

    #[test]
    fn assemble_and_restrict_round_trip() {
        let phi = MatrixMap::rank_one_state(&CMatrix::from_real_diag(&[0.6, 0.4])).unwrap();
        let psi = MatrixMap::identity(1);
        let gamma = MatrixMap::schur(&CMatrix::from_real(2, 1, &[0.5, -0.25]));
        let gstar = gamma.adjoint();
        let d = Decomposition::new(vec![2, 1]).unwrap();
        let theta =
            MatrixMap::assemble_blocks(&d, &d, &[vec![Some(&phi), Some(&gamma)], vec![Some(&gstar), Some(&psi)]]).unwrap();
        assert!(theta.is_generalized_schur(&d, &d, &tol()).unwrap());
        assert!(theta.restrict_block(&d, &d, 0, 1, &tol()).unwrap().approx_eq(&gamma, 1e-15));
        assert!(theta.restrict_block(&d, &d, 0, 0, &tol()).unwrap().approx_eq(&phi, 1e-15));
        assert!(theta.restrict_block(&d, &d, 1, 0, &tol()).unwrap().approx_eq(&gstar, 1e-15));
    }

    #[test]
    fn matrixzeroes_diagonal_schur() {
        let s = MatrixMap::schur(&CMatrix::from_real(2, 2, &[1.0, 0.3, 0.3, 1.0]));
        let p = vec![CMatrix::unit(2, 2, 0, 0), CMatrix::unit(2, 2, 1, 1)];
        let r = check_matrixzeroes_property(&s, &p, &p, &tol()).unwrap();
        assert!(r.conclusion_violation < 1e-15);
    }

    #[test]
    fn matrixzeroes_rank_one_fails_hypothesis() {
        let phi = MatrixMap::rank_one_state(&CMatrix::from_real_diag(&[0.5, 0.5])).unwrap();
        let p = vec![CMatrix::unit(2, 2, 0, 0), CMatrix::unit(2, 2, 1, 1)];
        match check_matrixzeroes_property(&phi, &p, &p, &tol()) {
            Err(MapError::HypothesisFails { i: 0, j: 1, value }) => assert!((value - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrixzeroes_rejects_non_contractive_and_bad_projections() {
        let s = MatrixMap::identity(2).scale(c64(2.0, 0.0));
        let p = vec![CMatrix::unit(2, 2, 0, 0), CMatrix::unit(2, 2, 1, 1)];
        assert!(matches!(check_matrixzeroes_property(&s, &p, &p, &tol()), Err(MapError::NotContractive { .. })));
        let bad = vec![CMatrix::unit(2, 2, 0, 0), CMatrix::unit(2, 2, 0, 0)];
        assert!(matches!(
            check_matrixzeroes_property(&MatrixMap::identity(2), &bad, &bad, &tol()),
            Err(MapError::BadProjections(_))
        ));
    }
}
