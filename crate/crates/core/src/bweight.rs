//! Rank-one Powers weights `ν(A) = (g, A g)` with `g = (1-e^{-x})^{-1/2} f`,
//! `‖f‖₂ = 1`, on `L²(0,∞)`; `Λ` is multiplication by `e^{-x}` and the
//! truncation `ν_t` restricts to `(t, ∞)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corners::{assemble_2x2, rank_one_corner_map, CornerError, CornerSpec};
use crate::cpmaps::{MapError, MatrixMap};
use crate::gauge::State;
use crate::numcore::{c64, is_psd, CMatrix, NumError, PsdVerdict, Tolerance, C64};
use crate::qpos::{q_resolvent, CertMode, PsdCertificate, QposError, TGrid};
use crate::quadrature::{integrate_pieces, EPS_QUAD};
use crate::random::gaussian;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("moments diverge at t = {t} for a type II weight")]
    QuadratureDivergent { t: f64 },
    #[error("quadrature did not reach tolerance (error estimate {error:.3e})")]
    QuadratureFailed { error: f64 },
    #[error("type classification is inconclusive")]
    Inconclusive,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Qpos(#[from] QposError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Corner(#[from] CornerError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// `1 - e^{-x}` without cancellation.
fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `Ein(x) = Σ_{k≥1} (-1)^{k+1} x^k / (k k!)`, for `0 ≤ x ≤ 1`.
fn ein(x: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 0.0);
    for k in 1..60 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += if k % 2 == 1 { add } else { -add };
        if add < 1e-18 {
            break;
        }
    }
    sum
}

/// Piecewise-linear real samples, zero outside `[xs[0], xs[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<C64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<C64>) -> Result<Self, WeightError> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(WeightError::InvalidWeight("need at least two samples and equal lengths".into()));
        }
        if xs[0] < 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(WeightError::InvalidWeight("sample points must be finite, >= 0, strictly increasing".into()));
        }
        if ys.iter().any(|y| !y.re.is_finite() || !y.im.is_finite()) {
            return Err(WeightError::InvalidWeight("sample values must be finite".into()));
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[C64] {
        &self.ys
    }

    pub fn eval(&self, x: f64) -> C64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return c64(0.0, 0.0);
        }
        let k = self.xs.partition_point(|&p| p <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let s = (x - x0) / (x1 - x0);
        self.ys[k - 1] * (1.0 - s) + self.ys[k] * s
    }

    /// `∫ |y|²` in closed form.
    pub fn norm_sq(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0].norm_sqr() + (y[0].conj() * y[1]).re + y[1].norm_sqr()) / 3.0)
            .sum()
    }

    fn scaled(&self, s: f64) -> Self {
        PiecewiseLinear { xs: self.xs.clone(), ys: self.ys.iter().map(|y| y * s).collect() }
    }
}

/// The shipped families; all normalized so `ν(I - Λ) = ‖f‖² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum PowersWeight {
    /// `f = (b-a)^{-1/2} χ_(a,b)`.
    Indicator { a: f64, b: f64 },
    /// `g = c x^{-1/2} χ_(0,1)` with `c² = 1/Ein(1)`; `f = (1-e^{-x})^{1/2} g`.
    InvSqrt,
    /// `f = e^{-x/2}`.
    Exponential,
    /// Sampled `f`, linearly interpolated and normalized on construction.
    Grid(PiecewiseLinear),
}

impl PowersWeight {
    pub fn indicator(a: f64, b: f64) -> Result<Self, WeightError> {
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(WeightError::InvalidWeight(format!("indicator needs 0 <= a < b < ∞, got ({a}, {b})")));
        }
        Ok(PowersWeight::Indicator { a, b })
    }

    pub fn grid(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self, WeightError> {
        let p = PiecewiseLinear::new(xs, fs.into_iter().map(|f| c64(f, 0.0)).collect())?;
        let n2 = p.norm_sq();
        if !(n2 > 0.0) {
            return Err(WeightError::InvalidWeight("samples have zero norm".into()));
        }
        Ok(PowersWeight::Grid(p.scaled(1.0 / n2.sqrt())))
    }

    fn inv_sqrt_c2() -> f64 {
        1.0 / ein(1.0)
    }

    /// Form function `f`.
    pub fn f(&self, x: f64) -> f64 {
        match self {
            PowersWeight::Grid(p) => p.eval(x).re,
            PowersWeight::InvSqrt => self.g(x) * one_minus_exp(x).sqrt(),
            PowersWeight::Exponential => (-0.5 * x).exp(),
            &PowersWeight::Indicator { a, b } => {
                if x > a && x < b {
                    1.0 / (b - a).sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    /// `g = (1-e^{-x})^{-1/2} f`, so that `ν(A) = (g, A g)`.
    pub fn g(&self, x: f64) -> f64 {
        match self {
            PowersWeight::InvSqrt => {
                if x > 0.0 && x < 1.0 {
                    (Self::inv_sqrt_c2() / x).sqrt()
                } else {
                    0.0
                }
            }
            _ if x <= 0.0 => 0.0,
            _ => self.f(x) / one_minus_exp(x).sqrt(),
        }
    }

    /// Natural break points of `f`, ending in `+∞` for unbounded support.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            &PowersWeight::Indicator { a, b } => vec![a, b],
            PowersWeight::InvSqrt => vec![0.0, 1.0],
            PowersWeight::Exponential => vec![0.0, f64::INFINITY],
            PowersWeight::Grid(p) => p.xs.clone(),
        }
    }

    /// `∫|f|²` by quadrature (closed form for grids).
    pub fn norm_sq(&self) -> f64 {
        match self {
            PowersWeight::Grid(p) => p.norm_sq(),
            _ => {
                let f = |x: f64| c64(self.f(x).powi(2), 0.0);
                integrate_pieces(&f, &clip_breaks(&self.breaks(), 0.0, None), EPS_QUAD).value.re
            }
        }
    }
}

/// Break points restricted to `[t, hi]`, cutting an infinite tail where `e^{-x}` is negligible.
fn clip_breaks(breaks: &[f64], t: f64, extra: Option<&[f64]>) -> Vec<f64> {
    let hi = *breaks.last().expect("nonempty");
    let hi = if hi.is_finite() { hi } else { t.max(breaks[breaks.len() - 2]) + 60.0 };
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    pts.push(hi);
    if let Some(e) = extra {
        pts.extend_from_slice(e);
    }
    pts.push(t);
    pts.retain(|&x| x >= t && x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightMoments {
    pub t: f64,
    pub nu_i: f64,
    pub nu_lambda: f64,
    /// `ν_t(I) - ν_t(Λ) = ∫_t^∞ |f|²`.
    pub tail_mass: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightType {
    TypeI,
    TypeII,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMethod {
    ClosedForm,
    Extrapolation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightClass {
    pub kind: WeightType,
    pub method: ClassMethod,
    /// `ν_t` moments at `t = 10^{-1}, …, 10^{-6}`.
    pub moments: Vec<WeightMoments>,
    /// Ratio of the last two increments of `ν_t(I)` along the decade sequence.
    pub increment_ratio: Option<f64>,
}

fn closed_type(nu: &PowersWeight) -> Option<WeightType> {
    match nu {
        &PowersWeight::Indicator { a, .. } => Some(if a == 0.0 { WeightType::TypeII } else { WeightType::TypeI }),
        PowersWeight::InvSqrt | PowersWeight::Exponential => Some(WeightType::TypeII),
        PowersWeight::Grid(_) => None,
    }
}

fn raw_moments(nu: &PowersWeight, t: f64) -> Result<WeightMoments, WeightError> {
    let m = match nu {
        &PowersWeight::Indicator { a, b } => {
            let lo = t.max(a);
            if lo >= b {
                WeightMoments { t, nu_i: 0.0, nu_lambda: 0.0, tail_mass: 0.0, error: 0.0 }
            } else {
                let w = b - a;
                // antiderivatives ln(e^x - 1) and ln(1 - e^{-x})
                let nu_i = (b.exp_m1().ln() - lo.exp_m1().ln()) / w;
                let nu_lambda = (one_minus_exp(b).ln() - one_minus_exp(lo).ln()) / w;
                WeightMoments { t, nu_i, nu_lambda, tail_mass: (b - lo) / w, error: 0.0 }
            }
        }
        PowersWeight::InvSqrt => {
            let c2 = PowersWeight::inv_sqrt_c2();
            if t >= 1.0 {
                WeightMoments { t, nu_i: 0.0, nu_lambda: 0.0, tail_mass: 0.0, error: 0.0 }
            } else {
                let nu_i = -c2 * t.ln();
                // ∫_t^1 e^{-x}/x dx = -ln t - Ein(1) + Ein(t)
                let nu_lambda = c2 * (-t.ln() - ein(1.0) + ein(t));
                WeightMoments { t, nu_i, nu_lambda, tail_mass: c2 * (ein(1.0) - ein(t)), error: 0.0 }
            }
        }
        PowersWeight::Exponential => {
            let nu_i = -one_minus_exp(t).ln();
            let e = (-t).exp();
            WeightMoments { t, nu_i, nu_lambda: nu_i - e, tail_mass: e, error: 0.0 }
        }
        PowersWeight::Grid(p) => {
            let pts = clip_breaks(&p.xs, t, None);
            let fi = |x: f64| c64(p.eval(x).norm_sqr() / one_minus_exp(x), 0.0);
            let fl = |x: f64| c64(p.eval(x).norm_sqr() * (-x).exp() / one_minus_exp(x), 0.0);
            let fm = |x: f64| c64(p.eval(x).norm_sqr(), 0.0);
            let (i, l, m) = (
                integrate_pieces(&fi, &pts, EPS_QUAD),
                integrate_pieces(&fl, &pts, EPS_QUAD),
                integrate_pieces(&fm, &pts, EPS_QUAD),
            );
            if !(i.converged && l.converged) {
                return Err(WeightError::QuadratureFailed { error: i.error.max(l.error) });
            }
            WeightMoments { t, nu_i: i.value.re, nu_lambda: l.value.re, tail_mass: m.value.re, error: i.error + l.error }
        }
    };
    Ok(m)
}

/// `ν_t(I)` and `ν_t(Λ)`; `t = 0` is allowed only for type I weights.
pub fn weight_moments(nu: &PowersWeight, t: f64) -> Result<WeightMoments, WeightError> {
    if !t.is_finite() || t < 0.0 {
        return Err(WeightError::InvalidParameter(format!("t must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        match classify_weight(nu).kind {
            WeightType::TypeII => return Err(WeightError::QuadratureDivergent { t }),
            WeightType::Inconclusive => return Err(WeightError::Inconclusive),
            WeightType::TypeI => {}
        }
    }
    raw_moments(nu, t)
}

const DECADES: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

pub fn classify_weight(nu: &PowersWeight) -> WeightClass {
    let moments: Vec<WeightMoments> = DECADES.iter().filter_map(|&t| raw_moments(nu, t).ok()).collect();
    let inc: Vec<f64> = moments.windows(2).map(|w| w[1].nu_i - w[0].nu_i).collect();
    let increment_ratio = match inc.as_slice() {
        [.., a, b] if *a > 0.0 => Some(b / a),
        _ => None,
    };
    if let Some(kind) = closed_type(nu) {
        return WeightClass { kind, method: ClassMethod::ClosedForm, moments, increment_ratio };
    }
    let scale = 1.0 + moments.last().map_or(0.0, |m| m.nu_i);
    let kind = if moments.len() < DECADES.len() {
        WeightType::Inconclusive
    } else if inc.last().is_some_and(|&d| d <= 1e-13 * scale) {
        WeightType::TypeI
    } else {
        match increment_ratio {
            Some(r) if r >= 0.9 => WeightType::TypeII,
            Some(r) if r <= 0.5 => WeightType::TypeI,
            _ => WeightType::Inconclusive,
        }
    };
    WeightClass { kind, method: ClassMethod::Extrapolation, moments, increment_ratio }
}

/// `(g_t, u) = ∫_t^∞ g u` (`g` is real, inner products are conjugate-linear on the left).
pub fn truncated_inner(nu: &PowersWeight, t: f64, u: &PiecewiseLinear) -> Result<C64, WeightError> {
    let pts = clip_breaks(&nu.breaks(), t, Some(&u.xs));
    let lo = u.xs[0];
    let hi = *u.xs.last().expect("nonempty");
    let pts: Vec<f64> = pts.into_iter().filter(|&x| x >= lo.max(t) && x <= hi).collect();
    let f = |x: f64| u.eval(x) * nu.g(x);
    let r = integrate_pieces(&f, &pts, EPS_QUAD);
    if !r.converged {
        return Err(WeightError::QuadratureFailed { error: r.error });
    }
    Ok(r.value)
}

/// One matrix entry of a test operator on `C^n ⊗ L²(0,∞)`:
/// `id·I + lam·Λ + Σ c_k |u_k⟩⟨v_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEntry {
    pub id: C64,
    pub lam: C64,
    pub kernels: Vec<(C64, PiecewiseLinear, PiecewiseLinear)>,
}

impl KernelEntry {
    pub fn scalar(id: C64) -> Self {
        KernelEntry { id, lam: c64(0.0, 0.0), kernels: Vec::new() }
    }

    fn scaled(&self, s: C64) -> Self {
        KernelEntry {
            id: self.id * s,
            lam: self.lam * s,
            kernels: self.kernels.iter().map(|(c, u, v)| (c * s, u.clone(), v.clone())).collect(),
        }
    }

    fn accumulate(&mut self, other: &KernelEntry) {
        self.id += other.id;
        self.lam += other.lam;
        self.kernels.extend(other.kernels.iter().cloned());
    }

    /// `ν_t(entry) = id·ν_t(I) + lam·ν_t(Λ) + Σ c (g_t, u)(v, g_t)`.
    pub fn truncated_value(&self, nu: &PowersWeight, m: &WeightMoments) -> Result<C64, WeightError> {
        let mut z = self.id * m.nu_i + self.lam * m.nu_lambda;
        for (c, u, v) in &self.kernels {
            z += c * truncated_inner(nu, m.t, u)? * truncated_inner(nu, m.t, v)?.conj();
        }
        Ok(z)
    }
}

/// Finite-rank test operator `B = (B_ij)` in `M_n(B(L²(0,∞)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOperator {
    n: usize,
    entries: Vec<KernelEntry>,
}

impl TestOperator {
    pub fn new(n: usize, entries: Vec<KernelEntry>) -> Result<Self, WeightError> {
        if entries.len() != n * n {
            return Err(WeightError::InvalidParameter(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        Ok(TestOperator { n, entries })
    }

    /// `M ⊗ I`.
    pub fn from_matrix(m: &CMatrix) -> Self {
        TestOperator { n: m.rows(), entries: m.as_slice().iter().map(|&z| KernelEntry::scalar(z)).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &KernelEntry {
        &self.entries[i * self.n + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut KernelEntry {
        &mut self.entries[i * self.n + j]
    }

    /// `(u ⊗ 1) B (u* ⊗ 1)`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut e = KernelEntry::scalar(c64(0.0, 0.0));
                for k in 0..n {
                    for l in 0..n {
                        let s = u[(i, k)] * u[(j, l)].conj();
                        if s.norm() > 0.0 {
                            e.accumulate(&self.entry(k, l).scaled(s));
                        }
                    }
                }
                entries.push(e);
            }
        }
        TestOperator { n, entries }
    }

    /// `Ω_{ν_t}(B) = (ν_t(B_ij))`.
    pub fn truncate(&self, nu: &PowersWeight, m: &WeightMoments) -> Result<CMatrix, WeightError> {
        let vals = self.entries.iter().map(|e| e.truncated_value(nu, m)).collect::<Result<Vec<_>, _>>()?;
        Ok(CMatrix::new(self.n, self.n, vals)?)
    }
}

/// Random rank-one kernels on a coarse grid over `(0, 4)` plus scalar parts.
pub fn random_test_operator<R: Rng + ?Sized>(rng: &mut R, n: usize, kernels: usize) -> TestOperator {
    let xs: Vec<f64> = (0..=16).map(|k| 0.25 * k as f64).collect();
    let sample = |rng: &mut R| {
        let ys = xs.iter().map(|_| c64(gaussian(rng), gaussian(rng))).collect();
        PiecewiseLinear::new(xs.clone(), ys).expect("valid grid")
    };
    let entries = (0..n * n)
        .map(|_| {
            let mut e = KernelEntry {
                id: c64(gaussian(rng), gaussian(rng)),
                lam: c64(gaussian(rng), gaussian(rng)),
                kernels: Vec::new(),
            };
            for _ in 0..kernels {
                let c = c64(gaussian(rng), gaussian(rng));
                let (u, v) = (sample(rng), sample(rng));
                e.kernels.push((c, u, v));
            }
            e
        })
        .collect();
    TestOperator { n, entries }
}

fn positive_t(t: f64) -> Result<(), WeightError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(WeightError::InvalidParameter(format!("t must be finite and > 0, got {t}")));
    }
    Ok(())
}

/// `π_t(B) = φ(I + ν_t(Λ)φ)⁻¹(Ω_{ν_t}(B))`.
pub fn boundary_rep_double(phi: &MatrixMap, nu: &PowersWeight, t: f64, b: &TestOperator) -> Result<CMatrix, WeightError> {
    positive_t(t)?;
    if phi.in_shape() != (b.n, b.n) || !phi.is_endomorphism() {
        return Err(WeightError::InvalidParameter(format!("map acts on {:?}, test operator is {}x{}", phi.in_shape(), b.n, b.n)));
    }
    let m = weight_moments(nu, t)?;
    let omega = b.truncate(nu, &m)?;
    Ok(q_resolvent(phi, m.nu_lambda)?.apply(&omega)?)
}

/// `‖π_t^{(φ_U,ν)}(B) - u* π_t^{(φ,ν)}((u⊗1)B(u*⊗1)) u‖_max`.
pub fn conjugation_covariance_check(
    phi: &MatrixMap,
    u: &CMatrix,
    nu: &PowersWeight,
    t: f64,
    b: &TestOperator,
    tol: &Tolerance,
) -> Result<f64, WeightError> {
    let phi_u = phi.conjugate_by_unitary(u, tol)?;
    let lhs = boundary_rep_double(&phi_u, nu, t, b)?;
    let inner = boundary_rep_double(phi, nu, t, &b.conjugate(u))?;
    let rhs = &(&u.adjoint() * &inner) * u;
    Ok(lhs.max_abs_diff(&rhs))
}

/// Symbolic value of `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    Finite(f64),
    Infinite,
}

impl std::fmt::Display for Kappa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kappa::Finite(v) => write!(f, "{v}"),
            Kappa::Infinite => write!(f, "inf"),
        }
    }
}

/// `κ(u) = sup_t Re(1-u) ν_t(Λ)` for scalar `u` with `|u| ≤ 1`.
pub fn kappa_scalar(nu: &PowersWeight, u: C64, grid: &TGrid, tol: &Tolerance) -> Result<Kappa, WeightError> {
    if u.norm() > 1.0 + tol.eps_eq {
        return Err(WeightError::InvalidParameter(format!("|u| = {} exceeds 1", u.norm())));
    }
    let re = 1.0 - u.re;
    if (u - c64(1.0, 0.0)).norm() <= tol.eps_eq {
        return Ok(Kappa::Finite(0.0));
    }
    let class = classify_weight(nu);
    match class.kind {
        WeightType::Inconclusive => Err(WeightError::Inconclusive),
        WeightType::TypeII => Ok(Kappa::Infinite),
        WeightType::TypeI => {
            let mut sup = 0.0f64;
            for &t in grid.points() {
                sup = sup.max(re * weight_moments(nu, t)?.nu_lambda);
            }
            Ok(Kappa::Finite(sup))
        }
    }
}

/// Grid points at which truncated moments exist: `t = 0` only for type I.
fn moment_points(nu: &PowersWeight, grid: &TGrid) -> Vec<f64> {
    let include_zero = classify_weight(nu).kind == WeightType::TypeI;
    grid.points().iter().copied().filter(|&t| t > 0.0 || include_zero).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightCornerReport {
    pub certificate: PsdCertificate,
    pub hypermax: bool,
}

/// `γ = ν/(1+x)` as a q-corner from `ν` to itself, via the per-`t` 2x2 coefficient matrix.
pub fn weight_qcorner_check(nu: &PowersWeight, x: C64, grid: &TGrid, tol: &Tolerance) -> Result<WeightCornerReport, WeightError> {
    let pts = moment_points(nu, grid);
    let one = c64(1.0, 0.0);
    let rows = pts
        .par_iter()
        .map(|&t| {
            let s = weight_moments(nu, t)?.nu_lambda;
            let d = one / (1.0 + s);
            let denom = one + x + s;
            // At the pole the off-diagonal is unbounded: no PSD completion.
            if denom.norm() <= tol.eps_eq {
                return Ok((t, Some((f64::NEG_INFINITY, false))));
            }
            let off = one / denom;
            let m = CMatrix::from_rows(vec![vec![d, off], vec![off.conj(), d]])?;
            let v = is_psd(&m, tol)?;
            Ok((t, Some((v.min_eig, v.verdict))))
        })
        .collect::<Result<Vec<_>, WeightError>>()?;
    let mut notes = Vec::new();
    if pts.first() != grid.points().first() {
        notes.push("t = 0 omitted: truncated moments are unbounded".into());
    }
    let certificate = PsdCertificate::from_points(CertMode::ExactSchur, rows, notes);
    let hypermax = certificate.verdict && x.re.abs() <= tol.eps_eq;
    Ok(WeightCornerReport { certificate, hypermax })
}

/// A Powers weight multiplied by a positive constant.
#[derive(Debug, Clone, Copy)]
pub struct ScaledWeight<'a> {
    pub weight: &'a PowersWeight,
    pub scale: f64,
}

impl<'a> From<&'a PowersWeight> for ScaledWeight<'a> {
    fn from(weight: &'a PowersWeight) -> Self {
        ScaledWeight { weight, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinationReport {
    pub verdict: bool,
    pub grid: Vec<f64>,
    /// `1 - |(g,h)|² / ((g,g)(h,h))` per grid point.
    pub proportionality_residual: Vec<f64>,
    /// `a (g,g) - b (h,h)` per grid point.
    pub scalar_margin: Vec<f64>,
    pub passed: Vec<bool>,
}

/// `∫_t^∞ g_ν g_η`.
fn cross_moment(nu: &PowersWeight, eta: &PowersWeight, t: f64) -> Result<f64, WeightError> {
    let end = |w: &PowersWeight| *w.breaks().last().expect("nonempty");
    let hi = end(nu).min(end(eta));
    let hi = if hi.is_finite() { hi } else { t.max(1.0) + 60.0 };
    let mut pts: Vec<f64> = nu.breaks().into_iter().chain(eta.breaks()).chain([t, hi]).filter(|&x| x >= t && x <= hi).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let f = |x: f64| c64(nu.g(x) * eta.g(x), 0.0);
    let r = integrate_pieces(&f, &pts, EPS_QUAD);
    if !r.converged {
        return Err(WeightError::QuadratureFailed { error: r.error });
    }
    Ok(r.value.re)
}

/// `ν ≥_q η`: positivity of `ν_t/(1+ν_t(Λ)) - η_t/(1+η_t(Λ))` for every grid `t`.
pub fn weight_q_subordinate<'a>(
    nu: impl Into<ScaledWeight<'a>>,
    eta: impl Into<ScaledWeight<'a>>,
    grid: &TGrid,
    tol: &Tolerance,
) -> Result<SubordinationReport, WeightError> {
    let (nu, eta) = (nu.into(), eta.into());
    if !(nu.scale > 0.0 && eta.scale > 0.0) {
        return Err(WeightError::InvalidParameter("scales must be positive".into()));
    }
    let mut pts = moment_points(nu.weight, grid);
    let eta_pts = moment_points(eta.weight, grid);
    pts.retain(|t| eta_pts.contains(t));
    let rows = pts
        .par_iter()
        .map(|&t| {
            let (mn, me) = (weight_moments(nu.weight, t)?, weight_moments(eta.weight, t)?);
            let gg = nu.scale * mn.nu_i;
            let hh = eta.scale * me.nu_i;
            let gh = (nu.scale * eta.scale).sqrt() * cross_moment(nu.weight, eta.weight, t)?;
            let a = 1.0 / (1.0 + nu.scale * mn.nu_lambda);
            let b = 1.0 / (1.0 + eta.scale * me.nu_lambda);
            let residual = if gg > 0.0 && hh > 0.0 { (1.0 - gh * gh / (gg * hh)).max(0.0) } else { 0.0 };
            let margin = a * gg - b * hh;
            let ok = hh == 0.0 || (residual <= tol.eps_eq && margin >= -tol.eps_psd * (1.0 + a * gg));
            Ok((residual, margin, ok))
        })
        .collect::<Result<Vec<_>, WeightError>>()?;
    Ok(SubordinationReport {
        verdict: rows.iter().all(|r| r.2),
        grid: pts,
        proportionality_residual: rows.iter().map(|r| r.0).collect(),
        scalar_margin: rows.iter().map(|r| r.1).collect(),
        passed: rows.iter().map(|r| r.2).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleRepPoint {
    pub t: f64,
    /// `‖blockwise assembly - resolvent of Θ‖_max` on the Choi matrices.
    pub assembly_residual: f64,
    pub min_choi_eig: f64,
    pub completely_positive: bool,
}

/// The 2x2 generalized boundary representation of `(Θ, ν)` with
/// `Θ = (φ, γ_{x,X}; γ*, φ)`: blockwise resolvents against the full resolvent
/// of `Θ`, and complete positivity, at each positive grid `t`.
pub fn double_boundary_rep_check(
    state: &State,
    x: f64,
    big_x: &CMatrix,
    nu: &PowersWeight,
    grid: &TGrid,
    tol: &Tolerance,
) -> Result<Vec<DoubleRepPoint>, WeightError> {
    let phi = state.rank_one_map();
    let gamma = rank_one_corner_map(crate::corners::lambda_of(x), big_x, state.omega());
    let theta = assemble_2x2(&CornerSpec::new(phi.clone(), phi.clone(), gamma.clone())?)?;
    grid.positive()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&t| {
            let s = weight_moments(nu, t)?.nu_lambda;
            let (rp, rg) = (q_resolvent(&phi, s)?, q_resolvent(&gamma, s)?);
            let blocks = assemble_2x2(&CornerSpec::new(rp.clone(), rp, rg)?)?;
            let full = q_resolvent(&theta, s)?;
            let PsdVerdict { verdict, min_eig, .. } = full.is_completely_positive(tol)?;
            Ok(DoubleRepPoint {
                t,
                assembly_residual: blocks.choi().max_abs_diff(full.choi()),
                min_choi_eig: min_eig,
                completely_positive: verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_unitary, seeded};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn chi01() -> PowersWeight {
        PowersWeight::indicator(0.0, 1.0).unwrap()
    }

    #[test]
    fn indicator_closed_forms() {
        let m = weight_moments(&chi01(), 0.5).unwrap();
        let e = 1f64.exp();
        assert!((m.nu_lambda - ((1.0 - 1.0 / e) / (1.0 - (-0.5f64).exp())).ln()).abs() < 1e-14);
        assert!((m.nu_i - ((e - 1.0) / (0.5f64.exp() - 1.0)).ln()).abs() < 1e-14);
        assert!((m.nu_lambda - 0.474077).abs() < 1e-6 && (m.nu_i - 0.974077).abs() < 1e-6);
        assert!((m.nu_i - m.nu_lambda - 0.5).abs() < 1e-12);
    }

    #[test]
    fn families_are_normalized() {
        for w in [chi01(), PowersWeight::indicator(1.0, 2.0).unwrap(), PowersWeight::InvSqrt, PowersWeight::Exponential] {
            assert!((w.norm_sq() - 1.0).abs() < 1e-9, "{w:?}: {}", w.norm_sq());
        }
        let g = PowersWeight::grid(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert!((g.norm_sq() - 1.0).abs() < 1e-14);
        assert!((ein(1.0) - 0.796_599_599_297_053_1).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        // Compare each closed form against the grid family sampled finely on the same f.
        for w in [PowersWeight::InvSqrt, PowersWeight::Exponential, PowersWeight::indicator(0.3, 1.7).unwrap()] {
            for &t in &[0.05, 0.5, 2.0] {
                let m = weight_moments(&w, t).unwrap();
                let gi = |x: f64| c64(w.g(x).powi(2), 0.0);
                let gl = |x: f64| c64(w.g(x).powi(2) * (-x).exp(), 0.0);
                let pts = clip_breaks(&w.breaks(), t, None);
                let (qi, ql) = (integrate_pieces(&gi, &pts, 1e-12), integrate_pieces(&gl, &pts, 1e-12));
                assert!((m.nu_i - qi.value.re).abs() < 1e-9 * (1.0 + m.nu_i), "{w:?} t={t}");
                assert!((m.nu_lambda - ql.value.re).abs() < 1e-9 * (1.0 + m.nu_i), "{w:?} t={t}");
            }
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_weight(&chi01()).kind, WeightType::TypeII);
        assert_eq!(classify_weight(&PowersWeight::indicator(1.0, 2.0).unwrap()).kind, WeightType::TypeI);
        assert_eq!(classify_weight(&PowersWeight::InvSqrt).kind, WeightType::TypeII);
        let g = PowersWeight::grid(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 0.0]).unwrap();
        let c = classify_weight(&g);
        assert_eq!((c.kind, c.method), (WeightType::TypeII, ClassMethod::Extrapolation));
        let g = PowersWeight::grid(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(classify_weight(&g).kind, WeightType::TypeI);
        let g = PowersWeight::grid(vec![0.5, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(classify_weight(&g).kind, WeightType::TypeI);
        assert!(matches!(weight_moments(&chi01(), 0.0), Err(WeightError::QuadratureDivergent { .. })));
        assert!(weight_moments(&PowersWeight::indicator(1.0, 2.0).unwrap(), 0.0).is_ok());
    }

    #[test]
    fn boundary_rep_examples() {
        let b = TestOperator::from_matrix(&CMatrix::identity(1));
        let p = boundary_rep_double(&MatrixMap::identity(1), &chi01(), 0.5, &b).unwrap();
        assert!((p[(0, 0)].re - 0.974077 / 1.474077).abs() < 1e-6);
        assert!((p[(0, 0)].re - 0.660805).abs() < 1e-6);

        let zero = TestOperator::from_matrix(&CMatrix::zeros(2, 2));
        let phi = MatrixMap::rank_one_state(&CMatrix::from_real_diag(&[0.7, 0.3])).unwrap();
        assert!(boundary_rep_double(&phi, &chi01(), 0.5, &zero).unwrap().max_abs() == 0.0);

        let mut rng = seeded(11);
        let b = random_test_operator(&mut rng, 2, 2);
        let m = weight_moments(&chi01(), 0.3).unwrap();
        let om = b.truncate(&chi01(), &m).unwrap();
        let rho = (&om * &CMatrix::from_real_diag(&[0.7, 0.3])).trace();
        let want = CMatrix::identity(2).scale(rho / (1.0 + m.nu_lambda));
        assert!(boundary_rep_double(&phi, &chi01(), 0.3, &b).unwrap().approx_eq(&want, 1e-12));
    }

    #[test]
    fn kernel_values_match_direct_integration() {
        let nu = chi01();
        let u = PiecewiseLinear::new(vec![0.0, 2.0], vec![c64(1.0, 0.0), c64(1.0, 0.0)]).unwrap();
        // (g_t, 1) on (0,1) with g = 1/sqrt(1-e^{-x}): compare with a fine grid weight's g
        let v = truncated_inner(&nu, 0.25, &u).unwrap();
        let direct = integrate_pieces(&|x: f64| c64(1.0 / one_minus_exp(x).sqrt(), 0.0), &[0.25, 1.0], 1e-13);
        assert!((v - direct.value).norm() < 1e-10);
    }

    #[test]
    fn kappa_examples() {
        let (g, t) = (TGrid::default(), tol());
        assert_eq!(kappa_scalar(&chi01(), c64(1.0, 0.0), &g, &t).unwrap(), Kappa::Finite(0.0));
        assert_eq!(kappa_scalar(&chi01(), c64(-1.0, 0.0), &g, &t).unwrap(), Kappa::Infinite);
        let w = PowersWeight::indicator(1.0, 2.0).unwrap();
        let k = kappa_scalar(&w, c64(-1.0, 0.0), &g, &t).unwrap();
        let nl0 = weight_moments(&w, 0.0).unwrap().nu_lambda;
        assert_eq!(k, Kappa::Finite(2.0 * nl0));
        assert!(kappa_scalar(&w, c64(2.0, 0.0), &g, &t).is_err());
    }

    #[test]
    fn weight_qcorner_examples() {
        let (g, t) = (TGrid::default(), tol());
        let r = weight_qcorner_check(&chi01(), c64(0.0, 0.0), &g, &t).unwrap();
        assert!(r.certificate.verdict && r.hypermax);
        let r = weight_qcorner_check(&chi01(), c64(1.0, 0.0), &g, &t).unwrap();
        assert!(r.certificate.verdict && !r.hypermax);
        let r = weight_qcorner_check(&chi01(), c64(-0.1, 0.0), &g, &t).unwrap();
        assert!(!r.certificate.verdict);
        let r = weight_qcorner_check(&chi01(), c64(-0.1, 1.0), &g, &t).unwrap();
        assert!(!r.certificate.verdict && r.certificate.passed.iter().any(|&p| p));
        assert!(!r.certificate.passed[0]);
        // 1 + x + ν_t(Λ) vanishes once the tail is empty.
        let r = weight_qcorner_check(&chi01(), c64(-1.0, 0.0), &g, &t).unwrap();
        assert!(!r.certificate.verdict && r.certificate.worst() == f64::NEG_INFINITY);
    }

    #[test]
    fn subordination_examples() {
        let (g, t) = (TGrid::default(), tol());
        let nu = chi01();
        assert!(weight_q_subordinate(&nu, &nu, &g, &t).unwrap().verdict);
        let half = ScaledWeight { weight: &nu, scale: 0.5 };
        assert!(weight_q_subordinate(&nu, half, &g, &t).unwrap().verdict);
        let double = ScaledWeight { weight: &nu, scale: 2.0 };
        assert!(!weight_q_subordinate(&nu, double, &g, &t).unwrap().verdict);
        let wide = PowersWeight::indicator(0.0, 2.0).unwrap();
        let r = weight_q_subordinate(&nu, &wide, &g, &t).unwrap();
        assert!(!r.verdict);
        assert!(r.proportionality_residual[0] > 1e-3);
    }

    #[test]
    fn covariance_examples() {
        let t = tol();
        let mut rng = seeded(5);
        let phi = MatrixMap::rank_one_state(&CMatrix::from_real_diag(&[0.6, 0.4])).unwrap();
        let b = random_test_operator(&mut rng, 2, 1);
        let r = conjugation_covariance_check(&phi, &CMatrix::identity(2), &chi01(), 0.5, &b, &t).unwrap();
        assert!(r < 1e-14);
        let u = random_unitary(&mut rng, 2);
        assert!(conjugation_covariance_check(&phi, &u, &chi01(), 0.5, &b, &t).unwrap() <= 1e-8);

        let q = crate::qpos::lambda_schur_coefficients(&[0.5, -0.5]);
        let schur = MatrixMap::schur(&q);
        let d = CMatrix::from_diag(&[c64(0.0, 1.0), c64(0.6, 0.8)]);
        assert!(conjugation_covariance_check(&schur, &d, &chi01(), 0.2, &b, &t).unwrap() <= 1e-8);
        assert!(schur.conjugate_by_unitary(&d, &t).unwrap().schur_coefficients(&t).is_ok());
    }

    #[test]
    fn double_rep_examples() {
        let t = tol();
        let s = State::from_diag(&[0.6, 0.4], &t).unwrap();
        let x = CMatrix::from_real_diag(&[1.0, -1.0]);
        let pts = double_boundary_rep_check(&s, 0.7, &x, &chi01(), &TGrid::log(1e-2, 1e2, 7).unwrap(), &t).unwrap();
        assert_eq!(pts.len(), 7);
        for p in pts {
            assert!(p.assembly_residual < 1e-12 && p.completely_positive, "{p:?}");
        }
    }
}
