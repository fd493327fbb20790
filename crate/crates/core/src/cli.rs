//! `qcorner-lab` command-line front end.
//!
//! Exit codes: 0 affirmative, 1 negative, 2 usage or input error,
//! 3 numerically inconclusive.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bweight::{
    classify_weight, conjugation_covariance_check, boundary_rep_double, kappa_scalar, random_test_operator,
    weight_moments, weight_q_subordinate, weight_qcorner_check, PowersWeight, ScaledWeight, TestOperator, WeightError,
    WeightType,
};
use crate::corners::{
    build_rank_one_qcorner, check_app216, is_hypermax_rank_one, is_q_corner, verify_gauge_composition_with,
    CornerError, CornerSpec, RankOneCornerParams,
};
use crate::cpmaps::{MapError, MatrixMap};
use crate::document::{parse_document, Document, SchemaError};
use crate::gauge::{
    decide_rank_one_equivalence, decide_vs_weight_only, decide_vs_weight_only_map, describe_gauge_group, gauge_canonical,
    gauge_mul, GaugeError, RankOneRelation, State, WeightOnlyDecision,
};
use crate::numcore::{c64, CMatrix, NumError, Tolerance, C64};
use crate::qpos::{
    build_lambda_schur, certify_q_positive, is_q_pure_rank_one, map_spectrum, q_dominates, recover_lambda, QposError,
    TGrid,
};
use crate::random::seeded;

#[derive(Debug, Parser)]
#[command(name = "qcorner-lab", version, about = "q-positive maps, q-corners, gauge groups and Powers weights")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Grid `t0:t1:count:log` or `t0:t1:count:linear`; 0 is always prepended.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<TGrid>,
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    #[arg(long, global = true)]
    tol_eq: Option<f64>,
    /// Emit the full report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Complete positivity.
    #[command(subcommand)]
    Cp(CpCmd),
    /// q-positivity, q-domination and map spectra.
    #[command(subcommand)]
    Qpos(QposCmd),
    /// q-purity tests.
    #[command(subcommand)]
    Qpure(QpureCmd),
    /// λ-Schur maps.
    #[command(subcommand)]
    Schur(SchurCmd),
    /// Corners and q-corners.
    #[command(subcommand)]
    Corner(CornerCmd),
    /// Gauge groups of rank-one doubles.
    #[command(subcommand)]
    Gauge(GaugeCmd),
    /// Conjugacy decisions.
    #[command(subcommand)]
    Conjugacy(ConjugacyCmd),
    /// Powers weights.
    #[command(subcommand)]
    Weight(WeightCmd),
    /// Conjugation covariance of boundary representations.
    #[command(subcommand)]
    Covariance(CovarianceCmd),
}

#[derive(Debug, Subcommand)]
enum CpCmd {
    Check { map: PathBuf },
}

#[derive(Debug, Subcommand)]
enum QposCmd {
    Check { map: PathBuf },
    /// `phi ≥_q psi`.
    Dominates { phi: PathBuf, psi: PathBuf },
    Spectrum { map: PathBuf },
}

#[derive(Debug, Subcommand)]
enum QpureCmd {
    /// Rank-one map or state: q-pure iff faithful.
    RankOne { input: PathBuf },
    /// Recognize a canonical invertible λ-Schur map.
    Invertible { map: PathBuf },
}

#[derive(Debug, Subcommand)]
enum SchurCmd {
    RecoverLambda { map: PathBuf },
    /// Emit the λ-Schur map for comma-separated λ.
    BuildLambda {
        #[arg(allow_hyphen_values = true)]
        lambda: String,
    },
}

#[derive(Debug, Args)]
struct RankOneArgs {
    /// Gauge element `{x, X}` over Ω.
    element: PathBuf,
    /// Override λ as `re,im`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    lambda: Option<C64>,
    /// Density of ψ when it differs from Ω (X must then be `n x n'`).
    #[arg(long)]
    omega_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CornerCmd {
    /// Candidate corner `(phi, gamma; gamma*, psi)`.
    Check { phi: PathBuf, psi: PathBuf, gamma: PathBuf },
    BuildRankOne(RankOneArgs),
    Hypermax(RankOneArgs),
    /// Positivity of `[[I,Y,X*],[Y*,I,Z*],[X,Z,I]]`; Z defaults to XY.
    App216 { x: PathBuf, y: PathBuf, z: Option<PathBuf> },
}

#[derive(Debug, Subcommand)]
enum GaugeCmd {
    Describe { state: PathBuf },
    Mul {
        g: PathBuf,
        h: PathBuf,
        /// Emit the phase-normalized representative.
        #[arg(long)]
        canonical: bool,
    },
    ComposeVerify {
        g: PathBuf,
        h: PathBuf,
        /// Use YX in place of XY.
        #[arg(long)]
        swap: bool,
    },
}

#[derive(Debug, Subcommand)]
enum ConjugacyCmd {
    RankOne { s1: PathBuf, s2: PathBuf },
    /// State or map against the weight-only double.
    VsWeightOnly { input: PathBuf },
}

#[derive(Debug, Args)]
struct TArg {
    #[arg(long, default_value_t = 0.5)]
    t: f64,
}

#[derive(Debug, Args)]
struct TestOperatorArgs {
    /// Matrix M giving B = M ⊗ I; random with --seed otherwise.
    #[arg(long)]
    b: Option<PathBuf>,
    /// Rank-one kernels per entry of a random B.
    #[arg(long, default_value_t = 1)]
    kernels: usize,
}

#[derive(Debug, Subcommand)]
enum WeightCmd {
    Analyze { weight: PathBuf },
    Moments {
        weight: PathBuf,
        #[command(flatten)]
        t: TArg,
    },
    /// Boundary representation π_t(B) of the double (φ, ν).
    Brep {
        map: PathBuf,
        weight: PathBuf,
        #[command(flatten)]
        t: TArg,
        #[command(flatten)]
        b: TestOperatorArgs,
    },
    Kappa {
        weight: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        u: C64,
    },
    /// γ = ν/(1+x) as a q-corner from ν to itself.
    Qcorner {
        weight: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        x: C64,
    },
    /// `a·nu ≥_q b·eta`.
    Subordinate {
        nu: PathBuf,
        eta: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        nu_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_scale: f64,
    },
}

#[derive(Debug, Subcommand)]
enum CovarianceCmd {
    Check {
        map: PathBuf,
        weight: PathBuf,
        /// Unitary matrix u.
        #[arg(long)]
        unitary: PathBuf,
        #[command(flatten)]
        t: TArg,
        #[command(flatten)]
        b: TestOperatorArgs,
        #[arg(long, default_value_t = 1e-8)]
        max_residual: f64,
    },
}

fn parse_grid(s: &str) -> Result<TGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("expected t0:t1:count:log|linear, got {s:?}"));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    let (t0, t1) = (num(parts[0])?, num(parts[1])?);
    let count = parts[2].parse::<usize>().map_err(|e| format!("{:?}: {e}", parts[2]))?;
    match parts[3] {
        "log" => TGrid::log(t0, t1, count),
        "linear" | "lin" => TGrid::linear(t0, t1, count),
        other => return Err(format!("unknown spacing {other:?}")),
    }
    .map_err(|e| e.to_string())
}

/// `re` or `re,im`.
fn parse_complex(s: &str) -> Result<C64, String> {
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    match s.split_once(',') {
        Some((re, im)) => Ok(c64(num(re)?, num(im)?)),
        None => Ok(c64(num(s)?, 0.0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    fn code(self) -> i32 {
        match self {
            Verdict::Yes => 0,
            Verdict::No => 1,
            Verdict::Inconclusive => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Yes => "affirmative",
            Verdict::No => "negative",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

enum Output {
    Report { verdict: Verdict, rows: Vec<(String, String)>, report: Value },
    /// A document for later use as input; printed as canonical JSON in both modes.
    Document(Document),
}

fn report<T: Serialize>(verdict: Verdict, rows: Vec<(String, String)>, r: &T) -> Result<Output, CliError> {
    let report = serde_json::to_value(r).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(Output::Report { verdict, rows, report })
}

fn row(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{x:.6e}")
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

fn fmt_list<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    format!("[{}]", xs.iter().map(f).collect::<Vec<_>>().join(", "))
}

#[derive(Debug)]
enum CliError {
    Schema(SchemaError),
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn json(&self) -> Value {
        match self {
            CliError::Schema(e) => json!({"error": {"code": "schema", "pointer": e.pointer, "message": e.message}}),
            CliError::Input(m) => json!({"error": {"code": "input", "message": m}}),
            CliError::Numerical(m) => json!({"error": {"code": "numerical", "message": m}}),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Schema(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerically inconclusive: {m}"),
        }
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e)
    }
}

fn num_is_numerical(e: &NumError) -> bool {
    matches!(e, NumError::NoConvergence { .. } | NumError::Singular { .. })
}

fn map_is_numerical(e: &MapError) -> bool {
    matches!(e, MapError::Num(n) if num_is_numerical(n))
}

fn qpos_is_numerical(e: &QposError) -> bool {
    match e {
        QposError::SingularResolvent { .. } | QposError::NotCanonical(_) => true,
        QposError::Map(m) => map_is_numerical(m),
        QposError::Num(n) => num_is_numerical(n),
        _ => false,
    }
}

fn corner_is_numerical(e: &CornerError) -> bool {
    match e {
        CornerError::Map(m) => map_is_numerical(m),
        CornerError::Qpos(q) => qpos_is_numerical(q),
        CornerError::Num(n) => num_is_numerical(n),
        _ => false,
    }
}

fn weight_is_numerical(e: &WeightError) -> bool {
    match e {
        WeightError::QuadratureDivergent { .. } | WeightError::QuadratureFailed { .. } | WeightError::Inconclusive => true,
        WeightError::Qpos(q) => qpos_is_numerical(q),
        WeightError::Map(m) => map_is_numerical(m),
        WeightError::Corner(c) => corner_is_numerical(c),
        WeightError::Num(n) => num_is_numerical(n),
        _ => false,
    }
}

fn gauge_is_numerical(e: &GaugeError) -> bool {
    matches!(e, GaugeError::Num(n) if num_is_numerical(n))
}

macro_rules! lib_error {
    ($($t:ty => $f:ident),* $(,)?) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                if $f(&e) {
                    CliError::Numerical(e.to_string())
                } else {
                    CliError::Input(e.to_string())
                }
            }
        }
    )*};
}

lib_error!(
    NumError => num_is_numerical,
    MapError => map_is_numerical,
    QposError => qpos_is_numerical,
    CornerError => corner_is_numerical,
    WeightError => weight_is_numerical,
    GaugeError => gauge_is_numerical,
);

fn load_document(p: &PathBuf) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))?;
    Ok(parse_document(&text)?)
}

struct Ctx {
    grid: TGrid,
    tol: Tolerance,
    seed: u64,
}

impl Ctx {
    /// A state document stands for its rank-one map `A ↦ tr(AΩ)I`.
    fn map(&self, p: &PathBuf) -> Result<MatrixMap, CliError> {
        let doc = load_document(p)?;
        if doc.kind() == "state" {
            return Ok(doc.to_state(&self.tol)?.rank_one_map());
        }
        Ok(doc.to_map(&self.tol)?)
    }

    fn state(&self, p: &PathBuf) -> Result<State, CliError> {
        Ok(load_document(p)?.to_state(&self.tol)?)
    }

    fn matrix(&self, p: &PathBuf) -> Result<CMatrix, CliError> {
        Ok(load_document(p)?.to_matrix()?)
    }

    fn weight(&self, p: &PathBuf) -> Result<PowersWeight, CliError> {
        Ok(load_document(p)?.to_weight()?)
    }

    fn test_operator(&self, args: &TestOperatorArgs, n: usize) -> Result<TestOperator, CliError> {
        match &args.b {
            Some(p) => {
                let m = self.matrix(p)?;
                if m.shape() != (n, n) {
                    return Err(CliError::Input(format!("B must be {n}x{n}, got {:?}", m.shape())));
                }
                Ok(TestOperator::from_matrix(&m))
            }
            None => Ok(random_test_operator(&mut seeded(self.seed), n, args.kernels)),
        }
    }

    fn rank_one_params(&self, a: &RankOneArgs) -> Result<RankOneCornerParams, CliError> {
        let doc = load_document(&a.element)?;
        let mut p = match &a.omega_out {
            None => {
                let (s, g) = doc.to_gauge_element(&self.tol)?;
                RankOneCornerParams::from_element(&s, &g)
            }
            Some(out) => {
                // X intertwines two different densities, so it is not a gauge element over one state.
                let Document::GaugeElement(ge) = &doc else {
                    return Err(SchemaError { pointer: "/kind".into(), message: "expected \"gauge_element\"".into() }.into());
                };
                let omega = State::new(crate::document::rows_to_matrix(&ge.omega, "/omega")?, &self.tol)?;
                RankOneCornerParams {
                    lambda: crate::corners::lambda_of(ge.x),
                    big_x: crate::document::rows_to_matrix(&ge.big_x, "/X")?,
                    omega,
                    omega_out: self.state(out)?,
                }
            }
        };
        if let Some(l) = a.lambda {
            p = p.with_lambda(l);
        }
        Ok(p)
    }
}

fn certificate_rows(c: &crate::qpos::PsdCertificate) -> Vec<(String, String)> {
    let mut rows = vec![
        row("verdict", c.verdict),
        row("mode", serde_json::to_value(c.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()),
        row("grid points", c.grid.len()),
        row("worst min eigenvalue", fmt_f(c.worst())),
    ];
    if let Some(t) = c.first_failure() {
        rows.push(row("first failure at t", fmt_f(t)));
    }
    if !c.skipped.is_empty() {
        rows.push(row("skipped t", fmt_list(&c.skipped, |t| fmt_f(*t))));
    }
    for n in &c.notes {
        rows.push(row("note", n));
    }
    rows
}

fn execute(cmd: &Command, ctx: &Ctx) -> Result<Output, CliError> {
    let tol = &ctx.tol;
    let grid = &ctx.grid;
    match cmd {
        Command::Cp(CpCmd::Check { map }) => {
            let v = ctx.map(map)?.is_completely_positive(tol)?;
            let r = json!({"verdict": v.verdict, "min_eig": v.min_eig, "spectral_radius": v.spectral_radius});
            report(
                Verdict::from_bool(v.verdict),
                vec![row("completely positive", v.verdict), row("min Choi eigenvalue", fmt_f(v.min_eig))],
                &r,
            )
        }
        Command::Qpos(QposCmd::Check { map }) => {
            let c = certify_q_positive(&ctx.map(map)?, grid, tol)?;
            report(Verdict::from_bool(c.verdict), certificate_rows(&c), &c)
        }
        Command::Qpos(QposCmd::Dominates { phi, psi }) => {
            let c = q_dominates(&ctx.map(phi)?, &ctx.map(psi)?, grid, tol)?;
            report(Verdict::from_bool(c.verdict), certificate_rows(&c), &c)
        }
        Command::Qpos(QposCmd::Spectrum { map }) => {
            let s = map_spectrum(&ctx.map(map)?, tol)?;
            report(
                Verdict::from_bool(!s.touches_negative_axis),
                vec![
                    row("eigenvalues", fmt_list(&s.eigenvalues, |z| fmt_c(*z))),
                    row("touches negative axis", s.touches_negative_axis),
                ],
                &s,
            )
        }
        Command::Qpure(QpureCmd::RankOne { input }) => {
            let doc = load_document(input)?;
            let state = match doc.kind() {
                "state" => doc.to_state(tol)?,
                _ => State::from_rank_one_map(&doc.to_map(tol)?, tol)
                    .ok_or_else(|| CliError::Input("map is not of the form A ↦ tr(AΩ)I".into()))?,
            };
            let q = is_q_pure_rank_one(&state);
            let r = json!({"q_pure": q, "spectrum": state.spectrum_desc(), "kernel_dim": state.kernel_dim()});
            report(Verdict::from_bool(q), vec![row("q-pure", q), row("kernel dimension", state.kernel_dim())], &r)
        }
        Command::Qpure(QpureCmd::Invertible { map }) | Command::Schur(SchurCmd::RecoverLambda { map }) => {
            let lambda = recover_lambda(&ctx.map(map)?, tol)?;
            let r = json!({"canonical": true, "lambda": lambda});
            report(Verdict::Yes, vec![row("canonical λ-Schur", true), row("λ", fmt_list(&lambda, |x| fmt_f(*x)))], &r)
        }
        Command::Schur(SchurCmd::BuildLambda { lambda }) => {
            let l = lambda
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| CliError::Input(format!("λ entry {p:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Output::Document(Document::from_map(&build_lambda_schur(&l, tol)?)))
        }
        Command::Corner(CornerCmd::Check { phi, psi, gamma }) => {
            let spec = CornerSpec::new(ctx.map(phi)?, ctx.map(psi)?, ctx.map(gamma)?)?;
            let c = is_q_corner(&spec, grid, tol)?;
            report(Verdict::from_bool(c.verdict), certificate_rows(&c), &c)
        }
        Command::Corner(CornerCmd::BuildRankOne(a)) => {
            let p = ctx.rank_one_params(a)?;
            Ok(Output::Document(Document::from_map(&build_rank_one_qcorner(&p, tol)?)))
        }
        Command::Corner(CornerCmd::Hypermax(a)) => {
            let r = is_hypermax_rank_one(&ctx.rank_one_params(a)?, tol)?;
            let mut rows = vec![row("hyper-maximal", r.verdict), row("|λ|²", fmt_f(r.lambda_abs_sq)), row("Re λ", fmt_f(r.lambda_re))];
            rows.extend(r.reasons.iter().map(|s| row("reason", s)));
            report(Verdict::from_bool(r.verdict), rows, &r)
        }
        Command::Corner(CornerCmd::App216 { x, y, z }) => {
            let (x, y) = (ctx.matrix(x)?, ctx.matrix(y)?);
            let z = match z {
                Some(p) => ctx.matrix(p)?,
                None => &x * &y,
            };
            let r = check_app216(&x, &y, &z, tol)?;
            let verdict = if r.theorem_agrees { Verdict::from_bool(r.is_positive) } else { Verdict::Inconclusive };
            report(
                verdict,
                vec![
                    row("positive", r.is_positive),
                    row("min eigenvalue", fmt_f(r.min_eig)),
                    row("|Z - XY|", fmt_f(r.residual)),
                    row("agrees with Z = XY test", r.theorem_agrees),
                ],
                &r,
            )
        }
        Command::Gauge(GaugeCmd::Describe { state }) => {
            let d = describe_gauge_group(&ctx.state(state)?, tol);
            let verdict = if d.oracle_agrees { Verdict::Yes } else { Verdict::Inconclusive };
            report(
                verdict,
                vec![
                    row("blocks m", fmt_list(&d.multiplicities, |m| m.to_string())),
                    row("kernel multiplicity", d.kernel_multiplicity),
                    row("dim U_rho", d.dim_u_rho),
                    row("dim_gauge", d.dim_gauge),
                    row("commutant oracle", d.oracle_dim_u_rho),
                ],
                &d,
            )
        }
        Command::Gauge(GaugeCmd::Mul { g, h, canonical }) => {
            let (_, g) = load_document(g)?.to_gauge_element(tol)?;
            let (_, h) = load_document(h)?.to_gauge_element(tol)?;
            let mut p = gauge_mul(&g, &h)?;
            if *canonical {
                p = gauge_canonical(&p);
            }
            Ok(Output::Document(Document::from_gauge_element(&p)))
        }
        Command::Gauge(GaugeCmd::ComposeVerify { g, h, swap }) => {
            let (s, g) = load_document(g)?.to_gauge_element(tol)?;
            let (_, h) = load_document(h)?.to_gauge_element(tol)?;
            let z = if *swap { h.unitary() * g.unitary() } else { g.unitary() * h.unitary() };
            let r = verify_gauge_composition_with(&s, &g, &h, &z, grid, tol)?;
            let mut rows = certificate_rows(&r.certificate);
            rows.push(row("fast path verdict", r.fast_path.verdict));
            rows.push(row("paths agree", r.paths_agree()));
            report(Verdict::from_bool(r.verdict()), rows, &r)
        }
        Command::Conjugacy(ConjugacyCmd::RankOne { s1, s2 }) => {
            let r = decide_rank_one_equivalence(&ctx.state(s1)?, &ctx.state(s2)?, tol);
            let label = match r.relation {
                RankOneRelation::Conjugate => "conjugate",
                RankOneRelation::Neither => "neither",
            };
            report(
                Verdict::from_bool(r.relation == RankOneRelation::Conjugate),
                vec![row("relation", label), row("max spectral deviation", fmt_f(r.max_deviation))],
                &r,
            )
        }
        Command::Conjugacy(ConjugacyCmd::VsWeightOnly { input }) => {
            let doc = load_document(input)?;
            let d = match doc.kind() {
                "state" => decide_vs_weight_only(&doc.to_state(tol)?),
                _ => decide_vs_weight_only_map(&doc.to_map(tol)?, tol),
            };
            let (verdict, label) = match d {
                WeightOnlyDecision::CocycleConjugateToWeightOnly => (Verdict::Yes, "cocycle_conjugate_to_weight_only"),
                WeightOnlyDecision::NotCocycleConjugate => (Verdict::No, "not_cocycle_conjugate"),
                WeightOnlyDecision::Undecided => (Verdict::Inconclusive, "undecided"),
            };
            report(verdict, vec![row("decision", label)], &json!({"decision": d}))
        }
        Command::Weight(WeightCmd::Analyze { weight }) => {
            let c = classify_weight(&ctx.weight(weight)?);
            let (verdict, label) = match c.kind {
                WeightType::TypeI => (Verdict::Yes, "type_I"),
                WeightType::TypeII => (Verdict::Yes, "type_II"),
                WeightType::Inconclusive => (Verdict::Inconclusive, "inconclusive"),
            };
            let mut rows = vec![row("type", label), row("method", format!("{:?}", c.method))];
            if let Some(r) = c.increment_ratio {
                rows.push(row("increment ratio", fmt_f(r)));
            }
            report(verdict, rows, &c)
        }
        Command::Weight(WeightCmd::Moments { weight, t }) => {
            let m = weight_moments(&ctx.weight(weight)?, t.t)?;
            report(
                Verdict::Yes,
                vec![row("t", fmt_f(m.t)), row("nu_t(I)", fmt_f(m.nu_i)), row("nu_t(Lambda)", fmt_f(m.nu_lambda))],
                &m,
            )
        }
        Command::Weight(WeightCmd::Brep { map, weight, t, b }) => {
            let phi = ctx.map(map)?;
            let b = ctx.test_operator(b, phi.n_in())?;
            let pi = boundary_rep_double(&phi, &ctx.weight(weight)?, t.t, &b)?;
            let r = json!({"t": t.t, "value": crate::document::matrix_to_rows(&pi)});
            let rows = (0..pi.rows()).map(|i| row(&format!("row {i}"), fmt_list(pi.row(i), |z| fmt_c(*z)))).collect();
            report(Verdict::Yes, rows, &r)
        }
        Command::Weight(WeightCmd::Kappa { weight, u }) => {
            let k = kappa_scalar(&ctx.weight(weight)?, *u, grid, tol)?;
            report(Verdict::Yes, vec![row("kappa", k)], &json!({"u": [u.re, u.im], "kappa": k.to_string()}))
        }
        Command::Weight(WeightCmd::Qcorner { weight, x }) => {
            let r = weight_qcorner_check(&ctx.weight(weight)?, *x, grid, tol)?;
            let mut rows = certificate_rows(&r.certificate);
            rows.push(row("hyper-maximal", r.hypermax));
            report(Verdict::from_bool(r.certificate.verdict), rows, &r)
        }
        Command::Weight(WeightCmd::Subordinate { nu, eta, nu_scale, eta_scale }) => {
            let (nu, eta) = (ctx.weight(nu)?, ctx.weight(eta)?);
            let r = weight_q_subordinate(
                ScaledWeight { weight: &nu, scale: *nu_scale },
                ScaledWeight { weight: &eta, scale: *eta_scale },
                grid,
                tol,
            )?;
            let worst = r.scalar_margin.iter().copied().fold(f64::INFINITY, f64::min);
            let res = r.proportionality_residual.iter().copied().fold(0.0, f64::max);
            report(
                Verdict::from_bool(r.verdict),
                vec![
                    row("subordinate", r.verdict),
                    row("grid points", r.grid.len()),
                    row("max proportionality residual", fmt_f(res)),
                    row("min scalar margin", fmt_f(worst)),
                ],
                &r,
            )
        }
        Command::Covariance(CovarianceCmd::Check { map, weight, unitary, t, b, max_residual }) => {
            let phi = ctx.map(map)?;
            let b = ctx.test_operator(b, phi.n_in())?;
            let res = conjugation_covariance_check(&phi, &ctx.matrix(unitary)?, &ctx.weight(weight)?, t.t, &b, tol)?;
            let ok = res <= *max_residual;
            report(
                Verdict::from_bool(ok),
                vec![row("residual", fmt_f(res)), row("bound", fmt_f(*max_residual))],
                &json!({"t": t.t, "residual": res, "bound": max_residual, "passed": ok}),
            )
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Cp(_) => "cp",
        Command::Qpos(_) => "qpos",
        Command::Qpure(_) => "qpure",
        Command::Schur(_) => "schur",
        Command::Corner(_) => "corner",
        Command::Gauge(_) => "gauge",
        Command::Conjugacy(_) => "conjugacy",
        Command::Weight(_) => "weight",
        Command::Covariance(_) => "covariance",
    }
}

fn table(rows: &[(String, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<w$}  {v}");
    }
    s
}

fn configure_threads() {
    if let Some(n) = std::env::var("QCL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Fails harmlessly if the global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs the CLI, writing to the given streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    configure_threads();
    let json_mode = cli.opts.json;
    let fail = |e: CliError, err: &mut dyn std::io::Write| {
        let _ = if json_mode {
            writeln!(err, "{}", crate::document::to_canonical_json(&e.json()))
        } else {
            writeln!(err, "error: {e}")
        };
        e.code()
    };
    let tol = {
        let d = Tolerance::default();
        match Tolerance::new(cli.opts.tol_psd.unwrap_or(d.eps_psd), cli.opts.tol_eq.unwrap_or(d.eps_eq), d.eps_cluster) {
            Ok(t) => t,
            Err(e) => return fail(CliError::Input(e.to_string()), err),
        }
    };
    let ctx = Ctx { grid: cli.opts.grid.clone().unwrap_or_default(), tol, seed: cli.opts.seed };
    match execute(&cli.cmd, &ctx) {
        Ok(Output::Document(d)) => {
            let _ = writeln!(out, "{}", d.to_canonical_json());
            0
        }
        Ok(Output::Report { verdict, rows, report }) => {
            if json_mode {
                let v = json!({"command": command_name(&cli.cmd), "outcome": verdict.label(), "exit_code": verdict.code(), "report": report});
                let _ = writeln!(out, "{}", crate::document::to_canonical_json(&v));
            } else {
                let _ = write!(out, "{}", table(&rows));
            }
            verdict.code()
        }
        Err(e) => fail(e, err),
    }
}

/// Runs the CLI on the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
