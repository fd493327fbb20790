//! States, the group `G_ρ = ℝ × (U_ρ/𝕋)` with law `{x,X}·{y,Y} = {x+y, XY}`,
//! gauge-group descriptors and equivalence decisions for rank-one and
//! invertible q-pure boundary data.

use serde::Serialize;
use thiserror::Error;

use crate::cpmaps::MatrixMap;
use crate::numcore::{c64, cluster_eigenvalues, hermitian_eig, is_unitary, rank, CMatrix, NumError, Tolerance, C64};
use crate::qpos::recover_lambda;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error("not a state: {0}")]
    NotAState(String),
    #[error("X does not commute with Ω (residual {residual:.3e})")]
    NotCommuting { residual: f64 },
    #[error("X is not unitary")]
    NotUnitary,
    #[error("gauge elements live over different states")]
    MixedStates,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// One eigenvalue cluster of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// A density matrix with its diagonalization and clustered spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    omega: CMatrix,
    /// Ascending eigenvalues.
    spectrum: Vec<f64>,
    /// Columns are eigenvectors matching `spectrum`.
    basis: CMatrix,
    /// Ascending clusters; a cluster with value ≤ eps_cluster is the kernel.
    clusters: Vec<Cluster>,
    eps_cluster: f64,
}

impl State {
    pub fn new(omega: CMatrix, tol: &Tolerance) -> Result<Self, GaugeError> {
        if !omega.is_square() || omega.rows() == 0 {
            return Err(GaugeError::NotAState(format!("density must be square and nonempty, got {:?}", omega.shape())));
        }
        let e = match hermitian_eig(&omega, tol) {
            Ok(e) => e,
            Err(NumError::NotHermitian { deviation }) => {
                return Err(GaugeError::NotAState(format!("density is not Hermitian (deviation {deviation:.3e})")))
            }
            Err(e) => return Err(e.into()),
        };
        let tr = omega.trace();
        if (tr.re - 1.0).abs() > tol.eps_eq * omega.rows() as f64 || tr.im.abs() > tol.eps_eq {
            return Err(GaugeError::NotAState(format!("trace is {:.12}, expected 1", tr.re)));
        }
        if e.values[0] < -tol.eps_psd {
            return Err(GaugeError::NotAState(format!("negative eigenvalue {:.3e}", e.values[0])));
        }
        let clusters = cluster_eigenvalues(&e.values, tol.eps_cluster)
            .into_iter()
            .map(|(value, multiplicity)| Cluster { value, multiplicity })
            .collect();
        Ok(State { omega, spectrum: e.values, basis: e.vectors, clusters, eps_cluster: tol.eps_cluster })
    }

    pub fn from_diag(p: &[f64], tol: &Tolerance) -> Result<Self, GaugeError> {
        Self::new(CMatrix::from_real_diag(p), tol)
    }

    pub fn n(&self) -> usize {
        self.omega.rows()
    }

    pub fn omega(&self) -> &CMatrix {
        &self.omega
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Spectrum in non-increasing order.
    pub fn spectrum_desc(&self) -> Vec<f64> {
        self.spectrum.iter().rev().copied().collect()
    }

    pub fn eigenbasis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn kernel_dim(&self) -> usize {
        self.clusters.iter().filter(|c| c.value <= self.eps_cluster).map(|c| c.multiplicity).sum()
    }

    pub fn support_rank(&self) -> usize {
        self.n() - self.kernel_dim()
    }

    pub fn is_faithful(&self) -> bool {
        self.kernel_dim() == 0
    }

    /// The rank-one unital map `A ↦ tr(AΩ) I`.
    pub fn rank_one_map(&self) -> MatrixMap {
        MatrixMap::rank_one_state(&self.omega).expect("density is square")
    }

    /// Extracts `Ω` from a map of the form `A ↦ tr(AΩ) I`, using `φ(e_ij) = Ω_ji I`.
    pub fn from_rank_one_map(phi: &MatrixMap, tol: &Tolerance) -> Option<State> {
        if !phi.is_endomorphism() || !phi.is_square_algebra() {
            return None;
        }
        let n = phi.n_in();
        let omega = CMatrix::from_fn(n, n, |j, i| phi.image_of_unit(i, j)[(0, 0)]);
        let candidate = MatrixMap::rank_one_state(&omega).ok()?;
        if !candidate.approx_eq(phi, tol.eps_eq) {
            return None;
        }
        State::new(omega, tol).ok()
    }

    fn commutation_residual(&self, x: &CMatrix) -> f64 {
        (&(x * &self.omega) - &(&self.omega * x)).max_abs()
    }
}

/// `{x, X}` with `X` a unitary commuting with the state's density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement {
    x: f64,
    big_x: CMatrix,
    omega: CMatrix,
}

const SAME_STATE_EPS: f64 = 1e-12;

impl GaugeElement {
    pub fn new(state: &State, x: f64, big_x: CMatrix, tol: &Tolerance) -> Result<Self, GaugeError> {
        if big_x.shape() != state.omega.shape() {
            return Err(GaugeError::NotAState(format!("X is {:?}, state is {}x{}", big_x.shape(), state.n(), state.n())));
        }
        if !x.is_finite() {
            return Err(GaugeError::NotAState("x must be finite".into()));
        }
        if !is_unitary(&big_x, tol) {
            return Err(GaugeError::NotUnitary);
        }
        let residual = state.commutation_residual(&big_x);
        if residual > tol.eps_eq {
            return Err(GaugeError::NotCommuting { residual });
        }
        Ok(GaugeElement { x, big_x, omega: state.omega.clone() })
    }

    pub fn identity(state: &State) -> Self {
        GaugeElement { x: 0.0, big_x: CMatrix::identity(state.n()), omega: state.omega.clone() }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.big_x
    }

    pub fn omega(&self) -> &CMatrix {
        &self.omega
    }

    /// `{-x, X*}`.
    pub fn inverse(&self) -> Self {
        GaugeElement { x: -self.x, big_x: self.big_x.adjoint(), omega: self.omega.clone() }
    }

    fn same_state(&self, other: &GaugeElement) -> Result<(), GaugeError> {
        if self.omega.shape() != other.omega.shape() || self.omega.max_abs_diff(&other.omega) > SAME_STATE_EPS {
            return Err(GaugeError::MixedStates);
        }
        Ok(())
    }
}

/// `{x, X}·{y, Y} = {x+y, XY}`.
pub fn gauge_mul(g: &GaugeElement, h: &GaugeElement) -> Result<GaugeElement, GaugeError> {
    g.same_state(h)?;
    Ok(GaugeElement { x: g.x + h.x, big_x: &g.big_x * &h.big_x, omega: g.omega.clone() })
}

/// Index of the largest-modulus entry, first in row-major order among near-ties.
fn pivot_index(m: &CMatrix) -> usize {
    let max = m.max_abs();
    m.as_slice().iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap_or(0)
}

fn unit_phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        c64(1.0, 0.0)
    } else {
        z / r
    }
}

/// `x = y` and `X = cY` for some unimodular `c`.
pub fn gauge_eq(g: &GaugeElement, h: &GaugeElement, tol: &Tolerance) -> Result<bool, GaugeError> {
    g.same_state(h)?;
    if (g.x - h.x).abs() > tol.eps_eq * (1.0 + g.x.abs().max(h.x.abs())) {
        return Ok(false);
    }
    let k = pivot_index(&h.big_x);
    let c = unit_phase(g.big_x.as_slice()[k] / h.big_x.as_slice()[k]);
    Ok(g.big_x.approx_eq(&h.big_x.scale(c), tol.eps_eq))
}

/// Representative of the phase class whose largest-modulus entry is real positive.
pub fn gauge_canonical(g: &GaugeElement) -> GaugeElement {
    let k = pivot_index(&g.big_x);
    let c = unit_phase(g.big_x.as_slice()[k]).conj();
    let mut big_x = g.big_x.scale(c);
    let idx = (k / big_x.cols(), k % big_x.cols());
    big_x[idx] = c64(big_x[idx].norm(), 0.0);
    GaugeElement { x: g.x, big_x, omega: g.omega.clone() }
}

/// Block structure of `U_ρ` and the dimensions of `U_ρ` and the gauge group `ℝ × ℝ × (U_ρ/𝕋)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeDescriptor {
    /// Multiplicities of the distinct positive eigenvalues, largest eigenvalue first.
    pub multiplicities: Vec<usize>,
    /// Dimension of the kernel of Ω.
    pub kernel_multiplicity: usize,
    /// Eigenvalue of each positive block, same order as `multiplicities`.
    pub eigenvalues: Vec<f64>,
    pub dim_u_rho: usize,
    pub dim_gauge: usize,
    /// Real dimension of `{X anti-Hermitian : [X, Ω] = 0}` by independent elimination.
    pub oracle_dim_u_rho: usize,
    pub oracle_agrees: bool,
}

impl GaugeDescriptor {
    /// All multiplicities, kernel last when present.
    pub fn all_multiplicities(&self) -> Vec<usize> {
        let mut m = self.multiplicities.clone();
        if self.kernel_multiplicity > 0 {
            m.push(self.kernel_multiplicity);
        }
        m
    }
}

/// Real dimension of the commutant of `Ω` inside the anti-Hermitian matrices
/// (the Lie algebra of `U_ρ`), as the nullity of `X ↦ [X, Ω]` on a real basis.
pub fn commutant_dimension(omega: &CMatrix, threshold: f64) -> usize {
    let n = omega.rows();
    let mut basis = Vec::with_capacity(n * n);
    for j in 0..n {
        basis.push(CMatrix::unit(n, n, j, j).scale(c64(0.0, 1.0)));
        for k in (j + 1)..n {
            let e = CMatrix::unit(n, n, j, k);
            let f = CMatrix::unit(n, n, k, j);
            basis.push(&e - &f);
            basis.push((&e + &f).scale(c64(0.0, 1.0)));
        }
    }
    let mut sys = CMatrix::zeros(2 * n * n, n * n);
    for (col, b) in basis.iter().enumerate() {
        let c = b.commutator(omega).expect("square");
        for (r, z) in c.as_slice().iter().enumerate() {
            sys[(2 * r, col)] = c64(z.re, 0.0);
            sys[(2 * r + 1, col)] = c64(z.im, 0.0);
        }
    }
    n * n - rank(&sys, threshold)
}

pub fn describe_gauge_group(state: &State, tol: &Tolerance) -> GaugeDescriptor {
    let positive: Vec<&Cluster> = state.clusters.iter().rev().filter(|c| c.value > tol.eps_cluster).collect();
    let multiplicities: Vec<usize> = positive.iter().map(|c| c.multiplicity).collect();
    let eigenvalues = positive.iter().map(|c| c.value).collect();
    let kernel_multiplicity = state.n() - multiplicities.iter().sum::<usize>();
    let dim_u_rho = multiplicities.iter().map(|m| m * m).sum::<usize>() + kernel_multiplicity * kernel_multiplicity;
    let oracle_dim_u_rho = commutant_dimension(&state.omega, tol.eps_cluster);
    GaugeDescriptor {
        multiplicities,
        kernel_multiplicity,
        eigenvalues,
        dim_u_rho,
        dim_gauge: 2 + dim_u_rho - 1,
        oracle_dim_u_rho,
        oracle_agrees: oracle_dim_u_rho == dim_u_rho,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOneRelation {
    /// Conjugate, hence also cocycle conjugate.
    Conjugate,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankOneEquivalence {
    pub relation: RankOneRelation,
    /// Non-increasing spectra of both densities.
    pub spectrum_1: Vec<f64>,
    pub spectrum_2: Vec<f64>,
    /// Largest eigenvalue mismatch; infinite when sizes differ.
    pub max_deviation: f64,
    /// Unitary `W` with `Ω₂ = W Ω₁ W*` when conjugate.
    #[serde(skip)]
    pub intertwiner: Option<CMatrix>,
}

pub fn decide_rank_one_equivalence(s1: &State, s2: &State, tol: &Tolerance) -> RankOneEquivalence {
    let (a, b) = (s1.spectrum_desc(), s2.spectrum_desc());
    let max_deviation = if a.len() == b.len() {
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let conjugate = max_deviation <= tol.eps_cluster;
    let intertwiner = conjugate.then(|| &s2.basis * &s1.basis.adjoint());
    RankOneEquivalence {
        relation: if conjugate { RankOneRelation::Conjugate } else { RankOneRelation::Neither },
        spectrum_1: a,
        spectrum_2: b,
        max_deviation,
        intertwiner,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightOnlyDecision {
    CocycleConjugateToWeightOnly,
    NotCocycleConjugate,
    Undecided,
}

/// Rank-one family: support rank above one rules out cocycle conjugacy to the
/// weight-only double; `M_1` is the weight-only double itself.
pub fn decide_vs_weight_only(state: &State) -> WeightOnlyDecision {
    if state.support_rank() > 1 {
        WeightOnlyDecision::NotCocycleConjugate
    } else if state.n() == 1 {
        WeightOnlyDecision::CocycleConjugateToWeightOnly
    } else {
        WeightOnlyDecision::Undecided
    }
}

/// Map overload: rank-one maps go through their state, canonical λ-Schur maps
/// are cocycle conjugate to the weight-only double, anything else is undecided.
pub fn decide_vs_weight_only_map(phi: &MatrixMap, tol: &Tolerance) -> WeightOnlyDecision {
    if let Some(state) = State::from_rank_one_map(phi, tol) {
        return decide_vs_weight_only(&state);
    }
    if recover_lambda(phi, tol).is_ok() {
        return WeightOnlyDecision::CocycleConjugateToWeightOnly;
    }
    WeightOnlyDecision::Undecided
}
