//! Corners between maps on matrix algebras: 2x2 and 3x3 block assembly,
//! q-corner certification, the rank-one normal form and its hyper-maximality
//! test, the three-unitary positivity lemma, and the group-law check for
//! rank-one gauge corners.

use serde::Serialize;
use thiserror::Error;

use crate::cpmaps::{Decomposition, MapError, MatrixMap};
use crate::gauge::{GaugeElement, State};
use crate::numcore::{c64, is_psd, is_unitary, CMatrix, NumError, PsdVerdict, Tolerance, C64};
use crate::qpos::{certify_numeric, certify_q_positive, lambda_schur_coefficients, q_resolvent, PsdCertificate, QposError, TGrid};

/// Largest `n` for which 3x3 block maps on `M_{3n}` are assembled.
pub const MAX_GAUGE_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CornerError {
    #[error("X does not intertwine the densities (residual {residual:.3e})")]
    NotCommuting { residual: f64 },
    #[error("{0} is not unitary")]
    NotUnitary(&'static str),
    #[error("kernel block E is not a contraction (norm {norm:.6})")]
    NotContraction { norm: f64 },
    #[error("size {n} exceeds the limit {MAX_GAUGE_DIM} for 3x3 block maps")]
    TooLarge { n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Qpos(#[from] QposError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// `φ` on `M_n`, `ψ` on `M_{n'}` and `γ` on the `n x n'` rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSpec {
    pub phi: MatrixMap,
    pub psi: MatrixMap,
    pub gamma: MatrixMap,
}

impl CornerSpec {
    pub fn new(phi: MatrixMap, psi: MatrixMap, gamma: MatrixMap) -> Result<Self, CornerError> {
        let (n, m) = (phi.in_shape(), psi.in_shape());
        if !phi.is_endomorphism() || !psi.is_endomorphism() || n.0 != n.1 || m.0 != m.1 {
            return Err(CornerError::DimensionMismatch("φ and ψ must act on square matrix algebras".into()));
        }
        let rect = (n.0, m.0);
        if gamma.in_shape() != rect || gamma.out_shape() != rect {
            return Err(CornerError::DimensionMismatch(format!(
                "γ is {:?}->{:?}, expected {rect:?}->{rect:?}",
                gamma.in_shape(),
                gamma.out_shape()
            )));
        }
        Ok(CornerSpec { phi, psi, gamma })
    }

    /// The same pair with the corner replaced by `γ*`, from `ψ` to `φ`.
    pub fn flipped(&self) -> CornerSpec {
        CornerSpec { phi: self.psi.clone(), psi: self.phi.clone(), gamma: self.gamma.adjoint() }
    }
}

/// `Θ((A_ij)) = (φ(A₁₁), γ(A₁₂); γ*(A₂₁), ψ(A₂₂))`.
pub fn assemble_2x2(spec: &CornerSpec) -> Result<MatrixMap, CornerError> {
    let d = Decomposition::new(vec![spec.phi.n_in(), spec.psi.n_in()])?;
    let gs = spec.gamma.adjoint();
    Ok(MatrixMap::assemble_blocks(
        &d,
        &d,
        &[vec![Some(&spec.phi), Some(&spec.gamma)], vec![Some(&gs), Some(&spec.psi)]],
    )?)
}

pub fn is_corner(spec: &CornerSpec, tol: &Tolerance) -> Result<PsdVerdict, CornerError> {
    Ok(assemble_2x2(spec)?.is_completely_positive(tol)?)
}

pub fn is_q_corner(spec: &CornerSpec, grid: &TGrid, tol: &Tolerance) -> Result<PsdCertificate, CornerError> {
    Ok(certify_q_positive(&assemble_2x2(spec)?, grid, tol)?)
}

/// `γ(A) = λ tr(X* A Ω') X` on `M_{n,n'}`, where `Ω` (on `M_n`) and `Ω'` (on
/// `M_{n'}`) are the densities of `φ` and `ψ` and `X` intertwines them.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneCornerParams {
    pub lambda: C64,
    pub big_x: CMatrix,
    pub omega: State,
    pub omega_out: State,
}

impl RankOneCornerParams {
    /// `{x, X}` form: `λ = 1/(1+ix)`, `φ = ψ`.
    pub fn from_gauge(state: &State, x: f64, big_x: CMatrix) -> Self {
        RankOneCornerParams { lambda: lambda_of(x), big_x, omega: state.clone(), omega_out: state.clone() }
    }

    pub fn from_element(state: &State, g: &GaugeElement) -> Self {
        Self::from_gauge(state, g.x(), g.unitary().clone())
    }

    pub fn with_lambda(mut self, lambda: C64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn phi(&self) -> MatrixMap {
        self.omega.rank_one_map()
    }

    pub fn psi(&self) -> MatrixMap {
        self.omega_out.rank_one_map()
    }
}

/// `1/(1+ix)`.
pub fn lambda_of(x: f64) -> C64 {
    c64(1.0, 0.0) / c64(1.0, x)
}

/// `V` (support) and `E` (kernel) blocks of `X` in the eigenbases of the two densities.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub v: CMatrix,
    pub e: CMatrix,
    /// Size of the off-block part of `X` in these bases.
    pub cross_residual: f64,
}

/// Columns of the eigenbasis in non-increasing eigenvalue order: support first, kernel last.
fn support_first_basis(s: &State) -> CMatrix {
    let b = s.eigenbasis();
    let n = s.n();
    CMatrix::from_fn(n, n, |i, k| b[(i, n - 1 - k)])
}

pub fn normal_form(p: &RankOneCornerParams, tol: &Tolerance) -> Result<NormalForm, CornerError> {
    let (n, m) = (p.omega.n(), p.omega_out.n());
    if p.big_x.shape() != (n, m) {
        return Err(CornerError::DimensionMismatch(format!("X is {:?}, expected {:?}", p.big_x.shape(), (n, m))));
    }
    let residual = (&(p.omega.omega() * &p.big_x) - &(&p.big_x * p.omega_out.omega())).max_abs();
    if residual > tol.eps_eq {
        return Err(CornerError::NotCommuting { residual });
    }
    let (ui, uo) = (support_first_basis(&p.omega), support_first_basis(&p.omega_out));
    let xt = &(&ui.adjoint() * &p.big_x) * &uo;
    let (k, k2) = (p.omega.support_rank(), p.omega_out.support_rank());
    if k != k2 {
        return Err(CornerError::NotCommuting { residual: f64::INFINITY });
    }
    let v = xt.submatrix(0, 0, k, k);
    let e = xt.submatrix(k, k, n - k, m - k);
    let mut cross = 0.0f64;
    for i in 0..n {
        for j in 0..m {
            if (i < k) != (j < k) {
                cross = cross.max(xt[(i, j)].norm());
            }
        }
    }
    Ok(NormalForm { v, e, cross_residual: cross })
}

fn validate_rank_one(p: &RankOneCornerParams, tol: &Tolerance) -> Result<NormalForm, CornerError> {
    let nf = normal_form(p, tol)?;
    if !is_unitary(&nf.v, tol) {
        return Err(CornerError::NotUnitary("V"));
    }
    let norm = nf.e.operator_norm();
    if norm > 1.0 + tol.eps_eq {
        return Err(CornerError::NotContraction { norm });
    }
    Ok(nf)
}

pub fn build_rank_one_qcorner(p: &RankOneCornerParams, tol: &Tolerance) -> Result<MatrixMap, CornerError> {
    validate_rank_one(p, tol)?;
    Ok(rank_one_corner_map(p.lambda, &p.big_x, p.omega_out.omega()))
}

/// `A ↦ λ tr(X* A Ω') X` with no validation.
pub fn rank_one_corner_map(lambda: C64, big_x: &CMatrix, omega_out: &CMatrix) -> MatrixMap {
    let shape = big_x.shape();
    let xs = big_x.adjoint();
    MatrixMap::from_fn(shape, shape, |a| big_x.scale(lambda * (&(&xs * a) * omega_out).trace()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypermaxReport {
    pub verdict: bool,
    /// One entry per failed condition.
    pub reasons: Vec<String>,
    pub lambda_abs_sq: f64,
    pub lambda_re: f64,
}

/// Hyper-maximality of a rank-one q-corner from its normal form: `n = n'`,
/// `0 < |λ|² = Re λ`, `E` unitary.
pub fn is_hypermax_rank_one(p: &RankOneCornerParams, tol: &Tolerance) -> Result<HypermaxReport, CornerError> {
    let nf = normal_form(p, tol)?;
    let mut reasons = Vec::new();
    let (a2, re) = (p.lambda.norm_sqr(), p.lambda.re);
    if !is_unitary(&nf.v, tol) {
        reasons.push("V not unitary (not a q-corner)".to_string());
    }
    if p.omega.n() != p.omega_out.n() {
        reasons.push(format!("n != n' ({} vs {})", p.omega.n(), p.omega_out.n()));
    }
    let scale = 1.0 + p.lambda.norm();
    if a2 > re + tol.eps_eq * scale {
        reasons.push("|λ|² > Re λ (not a q-corner)".to_string());
    } else if a2 < re - tol.eps_eq * scale {
        reasons.push("|λ|² < Re λ strictly".to_string());
    }
    if a2 <= tol.eps_eq {
        reasons.push("λ = 0".to_string());
    }
    if !is_unitary(&nf.e, tol) {
        reasons.push("E not unitary".to_string());
    }
    Ok(HypermaxReport { verdict: reasons.is_empty(), reasons, lambda_abs_sq: a2, lambda_re: re })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct App216Report {
    pub is_positive: bool,
    pub min_eig: f64,
    /// `‖Z - XY‖_max`.
    pub residual: f64,
    pub z_equals_xy: bool,
    pub theorem_agrees: bool,
}

/// `T = [[I, Y, X*], [Y*, I, Z*], [X, Z, I]]`.
pub fn app216_matrix(x: &CMatrix, y: &CMatrix, z: &CMatrix) -> CMatrix {
    let n = x.rows();
    let id = CMatrix::identity(n);
    let mut t = CMatrix::zeros(3 * n, 3 * n);
    let blocks = [[&id, y, &x.adjoint()], [&y.adjoint(), &id, &z.adjoint()], [x, z, &id]];
    for (r, row) in blocks.iter().enumerate() {
        for (c, b) in row.iter().enumerate() {
            t.set_block(r * n, c * n, b);
        }
    }
    t
}

pub fn check_app216(x: &CMatrix, y: &CMatrix, z: &CMatrix, tol: &Tolerance) -> Result<App216Report, CornerError> {
    if x.shape() != y.shape() || x.shape() != z.shape() || !x.is_square() {
        return Err(CornerError::DimensionMismatch("X, Y, Z must be square of one size".into()));
    }
    if !is_unitary(x, tol) {
        return Err(CornerError::NotUnitary("X"));
    }
    if !is_unitary(y, tol) {
        return Err(CornerError::NotUnitary("Y"));
    }
    let v = is_psd(&app216_matrix(x, y, z), tol)?;
    let residual = z.max_abs_diff(&(x * y));
    let z_equals_xy = residual <= tol.eps_eq;
    Ok(App216Report {
        is_positive: v.verdict,
        min_eig: v.min_eig,
        residual,
        z_equals_xy,
        theorem_agrees: v.verdict == z_equals_xy,
    })
}

/// `λ = ((x-y)/3, (x+2y)/3, (-2x-y)/3)`.
pub fn sigma_lambda(x: f64, y: f64) -> [f64; 3] {
    [(x - y) / 3.0, (x + 2.0 * y) / 3.0, (-2.0 * x - y) / 3.0]
}

/// The λ-Schur map `σ` on `M_3` and `N_t = σ(I+tσ)⁻¹(ones)`.
pub fn sigma_map_and_nt(x: f64, y: f64, t: f64) -> Result<(MatrixMap, CMatrix), CornerError> {
    let sigma = MatrixMap::schur(&lambda_schur_coefficients(&sigma_lambda(x, y)));
    let nt = q_resolvent(&sigma, t)?.apply(&CMatrix::ones(3, 3))?;
    Ok((sigma, nt))
}

/// Closed form of `N_t`.
pub fn nt_closed_form(x: f64, y: f64, t: f64) -> CMatrix {
    let one = c64(1.0, 0.0);
    let d = one / (1.0 + t);
    let a = one / c64(1.0 + t, -y);
    let b = one / c64(1.0 + t, x);
    let c = one / c64(1.0 + t, x + y);
    CMatrix::from_rows(vec![vec![d, a, b], vec![a.conj(), d, c], vec![b.conj(), c.conj(), d]]).expect("3x3")
}

/// The 3x3 block map on `M_{3n}`:
/// `(φ, γ_h, γ_g*; γ_h*, φ, γ_z*; γ_g, γ_z, φ)` with `γ_z = γ_{x+y, Z}`.
pub fn gauge_theta(state: &State, g: &GaugeElement, h: &GaugeElement, z: &CMatrix) -> Result<MatrixMap, CornerError> {
    let n = state.n();
    if n > MAX_GAUGE_DIM {
        return Err(CornerError::TooLarge { n });
    }
    let omega = state.omega();
    let phi = state.rank_one_map();
    let gg = rank_one_corner_map(lambda_of(g.x()), g.unitary(), omega);
    let gh = rank_one_corner_map(lambda_of(h.x()), h.unitary(), omega);
    let gz = rank_one_corner_map(lambda_of(g.x() + h.x()), z, omega);
    let (ggs, ghs, gzs) = (gg.adjoint(), gh.adjoint(), gz.adjoint());
    let d = Decomposition::new(vec![n, n, n])?;
    Ok(MatrixMap::assemble_blocks(
        &d,
        &d,
        &[
            vec![Some(&phi), Some(&gh), Some(&ggs)],
            vec![Some(&ghs), Some(&phi), Some(&gzs)],
            vec![Some(&gg), Some(&gz), Some(&phi)],
        ],
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeCompositionReport {
    /// q-positivity of the full 3x3 block map.
    pub certificate: PsdCertificate,
    /// PSD of `N_t` at each grid point.
    pub fast_path: PsdCertificate,
    /// Grid points where the two paths disagree.
    pub disagreements: Vec<f64>,
}

impl GaugeCompositionReport {
    pub fn verdict(&self) -> bool {
        self.certificate.verdict
    }

    pub fn paths_agree(&self) -> bool {
        self.disagreements.is_empty() && self.certificate.verdict == self.fast_path.verdict
    }
}

pub fn verify_gauge_composition(
    state: &State,
    g: &GaugeElement,
    h: &GaugeElement,
    grid: &TGrid,
    tol: &Tolerance,
) -> Result<GaugeCompositionReport, CornerError> {
    let z = g.unitary() * h.unitary();
    verify_gauge_composition_with(state, g, h, &z, grid, tol)
}

/// As [`verify_gauge_composition`] with `Z` in place of `XY` in the composite corner.
pub fn verify_gauge_composition_with(
    state: &State,
    g: &GaugeElement,
    h: &GaugeElement,
    z: &CMatrix,
    grid: &TGrid,
    tol: &Tolerance,
) -> Result<GaugeCompositionReport, CornerError> {
    for (name, el) in [("g", g), ("h", h)] {
        if el.omega().max_abs_diff(state.omega()) > 1e-12 {
            return Err(CornerError::DimensionMismatch(format!("{name} lives over a different state")));
        }
    }
    if z.shape() != g.unitary().shape() || !is_unitary(z, tol) {
        return Err(CornerError::NotUnitary("Z"));
    }
    let residual = z.commutator(state.omega())?.max_abs();
    if residual > tol.eps_eq {
        return Err(CornerError::NotCommuting { residual });
    }
    let theta = gauge_theta(state, g, h, z)?;
    let certificate = certify_numeric(&theta, grid, tol)?;

    let (x, y) = (g.x(), h.x());
    let pts = grid
        .points()
        .iter()
        .map(|&t| {
            let v = is_psd(&nt_closed_form(x, y, t), tol)?;
            Ok((t, Some((v.min_eig, v.verdict))))
        })
        .collect::<Result<Vec<_>, NumError>>()?;
    let fast_path = PsdCertificate::from_points(crate::qpos::CertMode::ExactSchur, pts, Vec::new());
    let disagreements = grid
        .points()
        .iter()
        .enumerate()
        .filter(|&(i, _)| certificate.passed[i] != fast_path.passed[i])
        .map(|(_, &t)| t)
        .collect();
    Ok(GaugeCompositionReport { certificate, fast_path, disagreements })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn diag(p: &[f64]) -> State {
        State::from_diag(p, &tol()).unwrap()
    }

    fn small_grid() -> TGrid {
        TGrid::log(1e-2, 1e2, 9).unwrap()
    }

    #[test]
    fn assemble_examples() {
        let t = tol();
        let phi = MatrixMap::identity(2);
        let psi = MatrixMap::transpose_map(1);
        let spec = CornerSpec::new(phi.clone(), psi.clone(), MatrixMap::zero((2, 1), (2, 1))).unwrap();
        let theta = assemble_2x2(&spec).unwrap();
        let d = Decomposition::new(vec![2, 1]).unwrap();
        assert!(theta.is_generalized_schur(&d, &d, &t).unwrap());
        assert!(theta.restrict_block(&d, &d, 0, 0, &t).unwrap().approx_eq(&phi, 0.0));
        assert!(theta.restrict_block(&d, &d, 0, 1, &t).unwrap().approx_eq(&MatrixMap::zero((2, 1), (2, 1)), 0.0));

        let one = MatrixMap::identity(1);
        let spec = CornerSpec::new(one.clone(), one.clone(), one).unwrap();
        assert!(assemble_2x2(&spec).unwrap().approx_eq(&MatrixMap::identity(2), 0.0));

        let s = diag(&[0.5, 0.5]);
        let p = RankOneCornerParams::from_gauge(&s, 0.0, CMatrix::identity(2));
        let spec = CornerSpec::new(p.phi(), p.psi(), build_rank_one_qcorner(&p, &t).unwrap()).unwrap();
        assert!(assemble_2x2(&spec).unwrap().is_unital(&t));
    }

    #[test]
    fn corner_examples() {
        let t = tol();
        let s = diag(&[0.6, 0.4]);
        let phi = s.rank_one_map();
        let zero = CornerSpec::new(phi.clone(), phi.clone(), MatrixMap::zero((2, 2), (2, 2))).unwrap();
        assert!(is_corner(&zero, &t).unwrap().verdict);

        let p = RankOneCornerParams::from_gauge(&s, 1.0, CMatrix::identity(2)).with_lambda(c64(0.3, 0.2));
        let spec = CornerSpec::new(phi.clone(), phi.clone(), build_rank_one_qcorner(&p, &t).unwrap()).unwrap();
        assert!(is_corner(&spec, &t).unwrap().verdict);

        let p = p.with_lambda(c64(2.0, 0.0));
        let spec = CornerSpec::new(phi.clone(), phi, build_rank_one_qcorner(&p, &t).unwrap()).unwrap();
        let v = is_corner(&spec, &t).unwrap();
        assert!(!v.verdict && v.min_eig < -1e-3);
    }

    #[test]
    fn rank_one_builder_examples() {
        let t = tol();
        let one = diag(&[1.0]);
        let p = RankOneCornerParams::from_gauge(&one, 0.0, CMatrix::identity(1));
        assert!(build_rank_one_qcorner(&p, &t).unwrap().approx_eq(&MatrixMap::identity(1), 1e-15));

        let s = diag(&[0.7, 0.2, 0.1]);
        let p = RankOneCornerParams::from_gauge(&s, 0.0, CMatrix::identity(3));
        assert!(build_rank_one_qcorner(&p, &t).unwrap().approx_eq(&s.rank_one_map(), 1e-15));

        let l = lambda_of(2.0);
        assert!((l - c64(1.0, 0.0) / c64(1.0, 2.0)).norm() < 1e-16);
        assert!((l.norm_sqr() - 0.2).abs() < 1e-15 && (l.re - 0.2).abs() < 1e-15);

        let swap = CMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let p = RankOneCornerParams::from_gauge(&s, 0.0, swap);
        assert!(matches!(build_rank_one_qcorner(&p, &t), Err(CornerError::NotCommuting { .. })));
    }

    #[test]
    fn q_corner_examples() {
        let t = tol();
        let grid = TGrid::default();
        let s = diag(&[0.5, 0.5]);
        let p = RankOneCornerParams::from_gauge(&s, 1.0, CMatrix::identity(2));
        let spec = CornerSpec::new(p.phi(), p.psi(), build_rank_one_qcorner(&p, &t).unwrap()).unwrap();
        assert!(is_q_corner(&spec, &grid, &t).unwrap().verdict);
        assert!(is_hypermax_rank_one(&p, &t).unwrap().verdict);

        // λ = ½ with a kernel block E = 0
        let s = diag(&[0.5, 0.5, 0.0]);
        let p = RankOneCornerParams::from_gauge(&s, 0.0, CMatrix::from_real_diag(&[1.0, 1.0, 0.0]))
            .with_lambda(c64(0.5, 0.0));
        let spec = CornerSpec::new(p.phi(), p.psi(), build_rank_one_qcorner(&p, &t).unwrap()).unwrap();
        assert!(is_q_corner(&spec, &grid, &t).unwrap().verdict);
        let r = is_hypermax_rank_one(&p, &t).unwrap();
        assert!(!r.verdict);
        assert!(r.reasons.iter().any(|s| s == "|λ|² < Re λ strictly"));
        assert!(r.reasons.iter().any(|s| s == "E not unitary"));

        let s1 = diag(&[2.0 / 3.0, 1.0 / 3.0]);
        let s2 = diag(&[0.5, 0.5]);
        let candidate = rank_one_corner_map(c64(1.0, 0.0), &CMatrix::identity(2), s1.omega());
        let spec = CornerSpec::new(s1.rank_one_map(), s2.rank_one_map(), candidate).unwrap();
        assert!(!is_q_corner(&spec, &grid, &t).unwrap().verdict);
    }

    #[test]
    fn hypermax_kernel_example() {
        let t = tol();
        let s = diag(&[0.5, 0.5, 0.0]);
        let x = CMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let r = is_hypermax_rank_one(&RankOneCornerParams::from_gauge(&s, 3.0, x), &t).unwrap();
        assert_eq!(r.reasons, vec!["E not unitary".to_string()]);
        let x = CMatrix::from_diag(&[c64(1.0, 0.0), c64(0.0, 1.0), c64(-1.0, 0.0)]);
        assert!(is_hypermax_rank_one(&RankOneCornerParams::from_gauge(&s, 3.0, x), &t).unwrap().verdict);
    }

    #[test]
    fn app216_examples() {
        let t = tol();
        let one = CMatrix::identity(1);
        let r = check_app216(&one, &one, &one, &t).unwrap();
        assert!(r.is_positive && r.z_equals_xy && r.theorem_agrees);
        let r = check_app216(&one, &one, &one.scale_real(-1.0), &t).unwrap();
        assert!(!r.is_positive && !r.z_equals_xy && r.theorem_agrees);
        assert!(matches!(check_app216(&one.scale_real(2.0), &one, &one, &t), Err(CornerError::NotUnitary("X"))));
    }

    #[test]
    fn sigma_examples() {
        let (_, n0) = sigma_map_and_nt(0.0, 0.0, 0.0).unwrap();
        assert!(n0.approx_eq(&CMatrix::ones(3, 3), 1e-15));
        let (_, n) = sigma_map_and_nt(1.0, 0.0, 0.0).unwrap();
        assert!((n[(0, 2)] - c64(1.0, 0.0) / c64(1.0, 1.0)).norm() < 1e-15);
        for &(x, y, tt) in &[(0.3, -1.2, 0.0), (2.0, 5.0, 0.7), (-4.0, 1.0, 30.0)] {
            let (_, n) = sigma_map_and_nt(x, y, tt).unwrap();
            assert!(n.approx_eq(&nt_closed_form(x, y, tt), 1e-13));
        }
    }

    #[test]
    fn gauge_composition_examples() {
        let t = tol();
        let s = diag(&[0.5, 0.5]);
        let e = GaugeElement::identity(&s);
        let r = verify_gauge_composition(&s, &e, &e, &small_grid(), &t).unwrap();
        assert!(r.verdict() && r.paths_agree());

        let g = GaugeElement::new(&s, 1.0, CMatrix::from_real_diag(&[1.0, -1.0]), &t).unwrap();
        let h = GaugeElement::new(&s, 2.0, CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]), &t).unwrap();
        let r = verify_gauge_composition(&s, &g, &h, &small_grid(), &t).unwrap();
        assert!(r.verdict() && r.paths_agree());

        // diag(1,-1) and the swap anticommute, so YX = -XY is the same class; use diag(1,i).
        let g = GaugeElement::new(&s, 1.0, CMatrix::from_diag(&[c64(1.0, 0.0), c64(0.0, 1.0)]), &t).unwrap();
        let yx = h.unitary() * g.unitary();
        let r = verify_gauge_composition_with(&s, &g, &h, &yx, &small_grid(), &t).unwrap();
        assert!(!r.verdict());
        assert!(r.fast_path.verdict);
    }

    #[test]
    fn flipped_corner_is_adjoint_patterned() {
        let t = tol();
        let s = diag(&[0.6, 0.4]);
        let p = RankOneCornerParams::from_gauge(&s, -2.0, CMatrix::from_real_diag(&[1.0, -1.0]));
        let spec = CornerSpec::new(p.phi(), p.psi(), build_rank_one_qcorner(&p, &t).unwrap()).unwrap();
        let a = is_corner(&spec, &t).unwrap();
        let b = is_corner(&spec.flipped(), &t).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert!((a.min_eig - b.min_eig).abs() < 1e-12);
    }
}
