//! Operator-splitting solver for the lifted relaxations and the recession
//! certificate searches.
//!
//! Every feasible `Y` satisfies `<Ahat, Y> = 0` with `Ahat = WW'` PSD, so
//! `YW = 0` and `Y` lives on the face `{V G V' : G psd}` where the columns of
//! `V` span the nullspace of `W'`. The solver works on that face directly,
//! which removes the constraint that otherwise breaks strict feasibility.
//! The splitting is consensus ADMM with the affine set as one block and the
//! face-restricted PSD cone and the sign pattern as the other.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{QpError, Result};
use crate::instance::{QpInstance, FEAS_TOL};
use crate::lift::{constraint_factor, lifted_constraint, lifted_objective, ConeKind, LiftedPoint};
use crate::numerics::{frob_dot, nullspace_basis, project_psd_unit_trace, sym_eigen, sym_pinv, symmetrize_in_place, RANK_TOL};
use crate::analysis::recession_polytope;
use crate::oracle::{basic_solutions, OracleOptions};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Initial penalty; adapted by residual balancing.
    pub penalty: f64,
    /// Objective value, relative to the objective scale, below which the
    /// iteration is treated as diverging.
    pub unbounded_threshold: f64,
    /// Rates of trace-normalized certificates must be below `-tol_cert`.
    pub tol_cert: f64,
    pub over_relaxation: f64,
    /// Infeasibility is declared after `stall_windows` consecutive windows
    /// of `stall_window` iterations without improving the best residual by
    /// the factor `stall_factor`.
    pub stall_window: usize,
    pub stall_windows: usize,
    pub stall_factor: f64,
    pub oracle: OracleOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            penalty: 1.0,
            unbounded_threshold: -1e12,
            tol_cert: 1e-6,
            over_relaxation: 1.6,
            stall_window: 5000,
            stall_windows: 3,
            stall_factor: 0.9,
            oracle: OracleOptions::from_env(),
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        let positive = [self.tol_primal, self.tol_dual, self.penalty, self.tol_cert, self.over_relaxation, self.stall_factor];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.unbounded_threshold < 0.0) || self.max_iterations == 0 {
            return Err(QpError::InvalidDimension("solver options must be positive (unbounded threshold negative)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelaxationStatus {
    Optimal,
    Unbounded,
    Infeasible,
    MaxIter,
}

impl RelaxationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "OPTIMAL",
            Self::Unbounded => "UNBOUNDED",
            Self::Infeasible => "INFEASIBLE",
            Self::MaxIter => "MAX_ITER",
        }
    }
}

impl std::fmt::Display for RelaxationStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A nonzero cone matrix `D` with `D00 = 0`, `<Ahat, D> = 0` and
/// `trace(D) = 1`. Adding multiples of `D` to any feasible lifted point keeps
/// it feasible (pins included, since row 0 of `D` vanishes), so a negative
/// rate proves the relaxation unbounded below.
#[derive(Debug, Clone, Serialize)]
pub struct RecessionCertificate {
    #[serde(serialize_with = "crate::report::serialize_matrix")]
    pub d: DMatrix<f64>,
    /// `<Qhat, D>`.
    pub objective_rate: f64,
    pub trace_norm: f64,
}

impl RecessionCertificate {
    fn from_block(inst: &QpInstance, block: &DMatrix<f64>) -> Self {
        let n = inst.n();
        let mut d = DMatrix::zeros(n + 1, n + 1);
        d.view_mut((1, 1), (n, n)).copy_from(block);
        symmetrize_in_place(&mut d);
        let trace = d.trace();
        Self {
            objective_rate: frob_dot(&lifted_objective(inst), &d),
            trace_norm: trace,
            d,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateCheck {
    pub in_cone: bool,
    pub corner_zero: bool,
    pub constraint_zero: bool,
    pub trace_one: bool,
    pub rate: f64,
    pub cone_violation: f64,
    pub constraint_value: f64,
    pub tolerance: f64,
}

impl CertificateCheck {
    /// `D` is a valid recession direction of the lifted feasible set.
    pub fn valid(&self) -> bool {
        self.in_cone && self.corner_zero && self.constraint_zero && self.trace_one
    }
}

/// Re-verifies a certificate from the raw instance data.
pub fn verify_certificate(inst: &QpInstance, cone: ConeKind, d: &DMatrix<f64>, tol: f64) -> Result<CertificateCheck> {
    let dim = inst.n() + 1;
    if d.shape() != (dim, dim) {
        return Err(QpError::DimensionMismatch(format!("certificate must be {dim}x{dim}")));
    }
    let eig = sym_eigen(d)?;
    let mut violation = (-eig.values[0]).max(0.0);
    for i in 0..dim {
        for j in 0..dim {
            if cone.entry_nonneg(i, j) {
                violation = violation.max(-d[(i, j)]);
            }
        }
    }
    let ahat = lifted_constraint(inst);
    let constraint_value = frob_dot(&ahat, d);
    Ok(CertificateCheck {
        in_cone: violation <= tol,
        corner_zero: d[(0, 0)].abs() <= tol,
        constraint_zero: constraint_value.abs() <= tol * (1.0 + ahat.amax()),
        trace_one: (d.trace() - 1.0).abs() <= tol,
        rate: frob_dot(&lifted_objective(inst), d),
        cone_violation: violation,
        constraint_value,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateMode {
    Objective,
    Feasibility,
}

impl std::str::FromStr for CertificateMode {
    type Err = QpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "objective" => Ok(Self::Objective),
            "feasibility" => Ok(Self::Feasibility),
            other => Err(QpError::Parse(format!("unknown certificate mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Found {
        certificate: RecessionCertificate,
        iterations: usize,
    },
    /// No certificate exists (proven) or none was found before the search
    /// stalled; `reason` says which.
    None { reason: String, iterations: usize },
    Inconclusive { iterations: usize, residual: f64 },
}

impl CertificateOutcome {
    pub fn certificate(&self) -> Option<&RecessionCertificate> {
        match self {
            Self::Found { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Found { .. } => "found",
            Self::None { .. } => "none",
            Self::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationResult {
    pub status: RelaxationStatus,
    /// `l_K` or `l_K(x)`; `-inf` when unbounded, `+inf` when infeasible.
    pub value: f64,
    #[serde(serialize_with = "crate::report::serialize_opt_point")]
    pub point: Option<LiftedPoint>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub certificate: Option<RecessionCertificate>,
    pub certificate_search: String,
    pub cone: ConeKind,
}

impl RelaxationResult {
    fn terminal(status: RelaxationStatus, value: f64, cone: ConeKind, search: &str) -> Self {
        Self {
            status,
            value,
            point: None,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            certificate: None,
            certificate_search: search.into(),
            cone,
        }
    }
}

/// Per-(instance, cone) data shared by unpinned and pinned solves: the
/// feasibility decision, the objective-mode certificate and the face basis.
#[derive(Debug, Clone)]
pub struct RelaxationContext<'a> {
    inst: &'a QpInstance,
    cone: ConeKind,
    opts: SolveOptions,
    feasible: bool,
    certificate: CertificateOutcome,
    face: DMatrix<f64>,
    qhat: DMatrix<f64>,
    /// Coordinates used by some recession direction of the feasible set.
    recession_support: Vec<bool>,
}

impl<'a> RelaxationContext<'a> {
    pub fn new(inst: &'a QpInstance, cone: ConeKind, opts: &SolveOptions) -> Result<Self> {
        opts.validate()?;
        let n = inst.n();
        if n > opts.oracle.enum_cap {
            return Err(QpError::DeskScaleLimit { n, cap: opts.oracle.enum_cap });
        }
        let feasible = !basic_solutions(inst.a(), inst.b()).is_empty();
        let certificate = if feasible {
            recession_certificate_search(inst, cone, CertificateMode::Objective, opts)?
        } else {
            CertificateOutcome::None {
                reason: "feasible set is empty".into(),
                iterations: 0,
            }
        };
        let w = constraint_factor(inst);
        let face = nullspace_basis(&w.transpose(), RANK_TOL);
        let (ra, rb) = recession_polytope(inst);
        let mut recession_support = vec![false; n];
        for d in basic_solutions(&ra, &rb) {
            for (j, v) in d.iter().enumerate() {
                recession_support[j] |= *v > FEAS_TOL;
            }
        }
        Ok(Self {
            inst,
            cone,
            opts: *opts,
            feasible,
            certificate,
            face,
            qhat: lifted_objective(inst),
            recession_support,
        })
    }

    pub fn certificate_outcome(&self) -> &CertificateOutcome {
        &self.certificate
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// `l_K`.
    pub fn solve(&self) -> Result<RelaxationResult> {
        self.run(None)
    }

    /// `l_K(x)` for a feasible `x`.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<RelaxationResult> {
        self.inst.check_len(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("pinned point"));
        }
        if !self.inst.is_feasible_within(x, FEAS_TOL) {
            return Err(QpError::PointInfeasible {
                residual: self.inst.infeasibility(x),
            });
        }
        self.run(Some(x))
    }

    fn run(&self, pin: Option<&DVector<f64>>) -> Result<RelaxationResult> {
        let search = self.certificate.label();
        if !self.feasible {
            return Ok(RelaxationResult::terminal(RelaxationStatus::Infeasible, f64::INFINITY, self.cone, search));
        }
        if let Some(cert) = self.certificate.certificate() {
            if cert.objective_rate < -self.opts.tol_cert {
                let mut res = RelaxationResult::terminal(RelaxationStatus::Unbounded, f64::NEG_INFINITY, self.cone, search);
                res.certificate = Some(cert.clone());
                return Ok(res);
            }
        }
        let projector = match pin {
            Some(x) => FaceProjector::new(&self.pinned_face(x), pin)?,
            None => FaceProjector::new(&self.face, None)?,
        };
        let out = consensus_admm(&self.qhat, &projector, self.cone, &self.opts)?;
        let value = frob_dot(&self.qhat, &out.x);
        let mut result = RelaxationResult {
            status: if out.converged {
                RelaxationStatus::Optimal
            } else {
                RelaxationStatus::MaxIter
            },
            value,
            point: None,
            primal_residual: out.primal,
            dual_residual: out.dual,
            iterations: out.iterations,
            certificate: None,
            certificate_search: search.into(),
            cone: self.cone,
        };
        if out.diverged {
            if let Some(cert) = self.certificate_from_divergence(&out.x)? {
                result.status = RelaxationStatus::Unbounded;
                result.value = f64::NEG_INFINITY;
                result.certificate = Some(cert);
                return Ok(result);
            }
            result.status = RelaxationStatus::MaxIter;
        }
        result.point = Some(LiftedPoint { y: out.x });
        Ok(result)
    }

    /// Over the DNN cone, `X A'y = x (b'y)` with `X >= 0` forces row `j` of
    /// `X` to vanish when `x_j = 0` and no recession direction uses `j`, so
    /// those rows are dropped from the face.
    fn pinned_face(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let rows: Vec<usize> = (0..x.len())
            .filter(|&j| self.cone == ConeKind::Dnn && x[j] <= 0.0 && !self.recession_support[j])
            .map(|j| j + 1)
            .collect();
        if rows.is_empty() {
            return self.face.clone();
        }
        let keep = nullspace_basis(&self.face.select_rows(rows.iter()), RANK_TOL);
        &self.face * keep
    }

    /// Far out along a divergent iteration the lower-right block, normalized,
    /// approximates a recession direction.
    fn certificate_from_divergence(&self, x: &DMatrix<f64>) -> Result<Option<RecessionCertificate>> {
        let n = self.inst.n();
        let block = x.view((1, 1), (n, n)).into_owned();
        let trace = block.trace();
        if !(trace > 0.0) {
            return Ok(None);
        }
        let cert = RecessionCertificate::from_block(self.inst, &(block / trace));
        let check = verify_certificate(self.inst, self.cone, &cert.d, 1e-6)?;
        Ok((check.valid() && cert.objective_rate < -self.opts.tol_cert).then_some(cert))
    }
}

/// Solves `P(K)`.
pub fn solve_relaxation(inst: &QpInstance, cone: ConeKind, opts: &SolveOptions) -> Result<RelaxationResult> {
    RelaxationContext::new(inst, cone, opts)?.solve()
}

/// Solves `P(K, x)`, the underestimator at a feasible `x`.
pub fn evaluate_underestimator(
    inst: &QpInstance,
    cone: ConeKind,
    x: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<RelaxationResult> {
    inst.check_len(x)?;
    if !inst.is_feasible_within(x, FEAS_TOL) {
        return Err(QpError::PointInfeasible {
            residual: inst.infeasibility(x),
        });
    }
    RelaxationContext::new(inst, cone, opts)?.evaluate(x)
}

/// Projector onto `{V S V' : <E_k, V S V'> = h_k}` where the `E_k` fix the
/// corner entry and the optional pins.
struct FaceProjector {
    v: DMatrix<f64>,
    constraints: Vec<DMatrix<f64>>,
    rhs: DVector<f64>,
    gram_pinv: DMatrix<f64>,
}

impl FaceProjector {
    fn new(v: &DMatrix<f64>, pin: Option<&DVector<f64>>) -> Result<Self> {
        let row0 = v.row(0).transpose();
        let mut constraints = vec![&row0 * row0.transpose()];
        let mut rhs = vec![1.0];
        if let Some(x) = pin {
            for j in 0..x.len() {
                let rowj = v.row(j + 1).transpose();
                let mut f = &row0 * rowj.transpose();
                f = (&f + f.transpose()) * 0.5;
                constraints.push(f);
                rhs.push(x[j]);
            }
        }
        let k = constraints.len();
        let gram = DMatrix::from_fn(k, k, |i, j| frob_dot(&constraints[i], &constraints[j]));
        let gram_pinv = sym_pinv(&gram, 1e-12)?;
        Ok(Self {
            v: v.clone(),
            constraints,
            rhs: DVector::from_vec(rhs),
            gram_pinv,
        })
    }

    fn reduce(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.v.transpose() * m * &self.v
    }

    fn lift(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = &self.v * s * self.v.transpose();
        symmetrize_in_place(&mut y);
        y
    }

    fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.project(m, true)
    }

    /// Projection onto the subspace parallel to the affine set.
    fn tangent(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.project(m, false)
    }

    fn project(&self, m: &DMatrix<f64>, affine: bool) -> DMatrix<f64> {
        let mut s = self.reduce(m);
        let resid = DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .zip(self.rhs.iter())
                .map(|(f, h)| frob_dot(f, &s) - if affine { *h } else { 0.0 }),
        );
        let mu = &self.gram_pinv * resid;
        for (f, w) in self.constraints.iter().zip(mu.iter()) {
            s -= f * *w;
        }
        self.lift(&s)
    }

    /// Projection onto `{V G V' : G psd}`.
    fn project_face_psd(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let s = self.reduce(m);
        let eig = sym_eigen(&s)?;
        Ok(self.lift(&eig.reassemble(|v| v.max(0.0))))
    }
}

fn project_pattern(m: &DMatrix<f64>, cone: ConeKind) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if cone.entry_nonneg(i, j) && out[(i, j)] < 0.0 {
                out[(i, j)] = 0.0;
            }
        }
    }
    out
}

struct AdmmOutcome {
    x: DMatrix<f64>,
    iterations: usize,
    primal: f64,
    dual: f64,
    converged: bool,
    diverged: bool,
}

const ADAPT_EVERY: usize = 50;
const ADAPT_RATIO: f64 = 3.0;
const ADAPT_UNTIL: usize = 10_000;
const CERT_ADAPT_RATIO: f64 = 10.0;

fn consensus_admm(
    qhat: &DMatrix<f64>,
    face: &FaceProjector,
    cone: ConeKind,
    opts: &SolveOptions,
) -> Result<AdmmOutcome> {
    let dim = qhat.nrows();
    let obj_scale = qhat.amax().max(1.0);
    let c = qhat / obj_scale;
    let alpha = opts.over_relaxation;
    let mut rho = opts.penalty;

    let mut z1 = DMatrix::zeros(dim, dim);
    let mut z2 = DMatrix::zeros(dim, dim);
    let mut u1 = DMatrix::zeros(dim, dim);
    let mut u2 = DMatrix::zeros(dim, dim);
    let mut x = face.apply(&z1);
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for it in 1..=opts.max_iterations {
        let target = ((&z1 - &u1) + (&z2 - &u2)) * 0.5 - &c * (0.5 / rho);
        x = face.apply(&target);
        let xh1 = &x * alpha + &z1 * (1.0 - alpha);
        let xh2 = &x * alpha + &z2 * (1.0 - alpha);
        let z1_new = face.project_face_psd(&(&xh1 + &u1))?;
        let z2_new = project_pattern(&(&xh2 + &u2), cone);
        u1 += &xh1 - &z1_new;
        u2 += &xh2 - &z2_new;

        primal = (&x - &z1_new).norm().max((&x - &z2_new).norm());
        dual = rho * face.tangent(&(&z1_new - &z1 + &z2_new - &z2)).norm();
        z1 = z1_new;
        z2 = z2_new;

        let x_scale = 1.0 + x.norm().max(z1.norm()).max(z2.norm());
        let u_scale = 1.0 + rho * (&u1 + &u2).norm();
        // Each u_i lies in the polar cone with <u_i, z_i> = 0, so the
        // duality gap reduces to rho <u1 + u2, x>.
        if primal <= opts.tol_primal * x_scale
            && dual <= opts.tol_dual * u_scale
            && rho * frob_dot(&(&u1 + &u2), &x).abs() <= opts.tol_primal * (1.0 + frob_dot(&c, &x).abs())
        {
            return Ok(AdmmOutcome {
                x,
                iterations: it,
                primal,
                dual,
                converged: true,
                diverged: false,
            });
        }
        if it % ADAPT_EVERY == 0 {
            let value = frob_dot(&c, &x);
            if !value.is_finite() || value < opts.unbounded_threshold {
                return Ok(AdmmOutcome {
                    x,
                    iterations: it,
                    primal,
                    dual,
                    converged: false,
                    diverged: true,
                });
            }
            // Past the warm-up phase the penalty may only change at doubling
            // checkpoints, so it changes finitely often.
            let checkpoint = it % ADAPT_UNTIL == 0 && (it / ADAPT_UNTIL).is_power_of_two();
            if it <= ADAPT_UNTIL || checkpoint {
                // Balance the normalized residuals.
                let r = ((primal / x_scale) / (dual / u_scale).max(f64::MIN_POSITIVE)).sqrt().clamp(1e-3, 1e3);
                if r * r > ADAPT_RATIO || r * r < 1.0 / ADAPT_RATIO {
                    rho *= r;
                    u1 /= r;
                    u2 /= r;
                }
            }
        }
    }
    Ok(AdmmOutcome {
        x,
        iterations: opts.max_iterations,
        primal,
        dual,
        converged: false,
        diverged: false,
    })
}

/// Searches for a recession certificate of the lifted feasible set.
///
/// A certificate has a zero row 0 (PSD with `D00 = 0`), so it is
/// `diag(0, N G N')` with `N` a basis of the nullspace of `A`, `G` psd and
/// `trace(G) = 1`. For the PSD0 cone the remaining sign constraints are void
/// and the objective-mode optimum is the smallest eigenvalue of `N'QN`. For
/// DNN the entrywise sign constraint is handled by ADMM; in objective mode a
/// DNN certificate requires a nonzero `d >= 0` with `Ad = 0` (any nonzero
/// column of a DNN certificate is one), which is decided exactly first.
pub fn recession_certificate_search(
    inst: &QpInstance,
    cone: ConeKind,
    mode: CertificateMode,
    opts: &SolveOptions,
) -> Result<CertificateOutcome> {
    opts.validate()?;
    let basis = nullspace_basis(inst.a(), RANK_TOL);
    if basis.ncols() == 0 {
        return Ok(CertificateOutcome::None {
            reason: "nullspace of A is trivial".into(),
            iterations: 0,
        });
    }
    match cone {
        ConeKind::Psd0 => {
            let reduced = basis.transpose() * inst.q() * &basis;
            let eig = sym_eigen(&reduced)?;
            let v = &basis * eig.vectors.column(0);
            let cert = RecessionCertificate::from_block(inst, &(&v * v.transpose()));
            if mode == CertificateMode::Objective && !(cert.objective_rate < -opts.tol_cert) {
                return Ok(CertificateOutcome::None {
                    reason: format!("minimum rate {:.3e} is not below -{:.1e}", cert.objective_rate, opts.tol_cert),
                    iterations: 0,
                });
            }
            Ok(CertificateOutcome::Found {
                certificate: cert,
                iterations: 0,
            })
        }
        ConeKind::Dnn => {
            if mode == CertificateMode::Objective {
                let n = inst.n();
                if n > opts.oracle.enum_cap {
                    return Err(QpError::DeskScaleLimit { n, cap: opts.oracle.enum_cap });
                }
                let mut a = DMatrix::zeros(inst.m() + 1, n);
                a.view_mut((0, 0), (inst.m(), n)).copy_from(inst.a());
                a.row_mut(inst.m()).fill(1.0);
                let mut b = DVector::zeros(inst.m() + 1);
                b[inst.m()] = 1.0;
                if basic_solutions(&a, &b).is_empty() {
                    return Ok(CertificateOutcome::None {
                        reason: "recession cone of the feasible set is trivial".into(),
                        iterations: 0,
                    });
                }
            }
            dnn_certificate_admm(inst, &basis, mode, opts)
        }
    }
}

fn dnn_certificate_admm(
    inst: &QpInstance,
    basis: &DMatrix<f64>,
    mode: CertificateMode,
    opts: &SolveOptions,
) -> Result<CertificateOutcome> {
    let n = inst.n();
    let q_scale = inst.q().amax().max(1.0);
    let c = match mode {
        CertificateMode::Objective => inst.q() / q_scale,
        CertificateMode::Feasibility => DMatrix::zeros(n, n),
    };
    let project_x = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let g = project_psd_unit_trace(&(basis.transpose() * m * basis))?;
        let mut x = basis * g * basis.transpose();
        symmetrize_in_place(&mut x);
        Ok(x)
    };
    let alpha = opts.over_relaxation;
    let mut rho = opts.penalty;
    let mut z = DMatrix::zeros(n, n);
    let mut u = DMatrix::zeros(n, n);
    let mut best = f64::INFINITY;
    let mut window_start_best = f64::INFINITY;
    let mut stalled = 0;
    let mut primal = f64::INFINITY;

    for it in 1..=opts.max_iterations {
        let x = project_x(&(&z - &u - &c / rho))?;
        let xh = &x * alpha + &z * (1.0 - alpha);
        let z_new = (&xh + &u).map(|v| v.max(0.0));
        u += &xh - &z_new;
        primal = (&x - &z_new).norm();
        let dual = rho * (&z_new - &z).norm();
        z = z_new;

        match mode {
            CertificateMode::Feasibility => {
                if primal <= opts.tol_primal {
                    let cert = RecessionCertificate::from_block(inst, &x);
                    return Ok(CertificateOutcome::Found {
                        certificate: cert,
                        iterations: it,
                    });
                }
                best = best.min(primal);
                if it % opts.stall_window.max(1) == 0 {
                    if best > opts.stall_factor * window_start_best {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    window_start_best = best;
                    if stalled >= opts.stall_windows {
                        return Ok(CertificateOutcome::None {
                            reason: format!("residual stalled at {best:.3e}"),
                            iterations: it,
                        });
                    }
                }
            }
            CertificateMode::Objective => {
                if primal <= opts.tol_primal && dual <= opts.tol_dual * (1.0 + rho * u.norm()) {
                    let cert = RecessionCertificate::from_block(inst, &x);
                    if cert.objective_rate < -opts.tol_cert {
                        return Ok(CertificateOutcome::Found {
                            certificate: cert,
                            iterations: it,
                        });
                    }
                    return Ok(CertificateOutcome::None {
                        reason: format!("minimum rate {:.3e} is not below -{:.1e}", cert.objective_rate, opts.tol_cert),
                        iterations: it,
                    });
                }
            }
        }
        if it % ADAPT_EVERY == 0 {
            if primal > CERT_ADAPT_RATIO * dual {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > CERT_ADAPT_RATIO * primal {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    Ok(CertificateOutcome::Inconclusive {
        iterations: opts.max_iterations,
        residual: primal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::validate_lifted_point;

    fn simplex(q: &[f64; 4]) -> QpInstance {
        QpInstance::from_rows(
            "simplex",
            &[vec![q[0], q[1]], vec![q[2], q[3]]],
            &[0.0, 0.0],
            &[vec![1.0, 1.0]],
            &[1.0],
        )
        .unwrap()
    }

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn convex_simplex_value() {
        let inst = simplex(&[1.0, 0.0, 0.0, 1.0]);
        for cone in ConeKind::ALL {
            let r = solve_relaxation(&inst, cone, &opts()).unwrap();
            assert_eq!(r.status, RelaxationStatus::Optimal);
            assert!((r.value - 0.5).abs() < 1e-5, "{cone}: {}", r.value);
            let point = r.point.unwrap();
            let rep = validate_lifted_point(&inst, &point, cone, 1e-6).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
        }
    }

    #[test]
    fn bilinear_simplex_value() {
        let inst = simplex(&[0.0, 1.0, 1.0, 0.0]);
        let r = solve_relaxation(&inst, ConeKind::Dnn, &opts()).unwrap();
        assert_eq!(r.status, RelaxationStatus::Optimal);
        assert!(r.value.abs() < 1e-5, "{}", r.value);
    }

    #[test]
    fn bilinear_midpoint_envelope() {
        let inst = simplex(&[0.0, 1.0, 1.0, 0.0]);
        let x = DVector::from_vec(vec![0.5, 0.5]);
        let r = evaluate_underestimator(&inst, ConeKind::Dnn, &x, &opts()).unwrap();
        assert_eq!(r.status, RelaxationStatus::Optimal);
        assert!(r.value.abs() < 1e-5, "{}", r.value);
        let y = r.point.unwrap();
        assert!((y.x() - &x).amax() < 1e-9);
    }

    #[test]
    fn convex_underestimator_is_exact() {
        let inst = simplex(&[1.0, 0.0, 0.0, 1.0]);
        let x = DVector::from_vec(vec![0.3, 0.7]);
        let r = evaluate_underestimator(&inst, ConeKind::Psd0, &x, &opts()).unwrap();
        assert!((r.value - inst.objective(&x).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn zero_coordinates_drop_rows_at_a_vertex() {
        let inst = QpInstance::from_rows(
            "simplex3",
            &[vec![0.0, 1.0, -1.0], vec![1.0, 0.0, 2.0], vec![-1.0, 2.0, 0.0]],
            &[0.0, 0.0, 0.0],
            &[vec![1.0, 1.0, 1.0]],
            &[1.0],
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.0, 0.4, 0.6]);
        let r = evaluate_underestimator(&inst, ConeKind::Dnn, &x, &opts()).unwrap();
        assert_eq!(r.status, RelaxationStatus::Optimal);
        let y = r.point.unwrap();
        assert!(y.y.row(1).amax() < 1e-12, "{}", y.y);
        assert!(r.value <= inst.objective(&x).unwrap() + 1e-6);
    }

    #[test]
    fn recession_coordinates_keep_their_rows() {
        let inst = QpInstance::from_rows("ray", &[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], &[vec![1.0, -1.0]], &[0.0]).unwrap();
        let ctx = RelaxationContext::new(&inst, ConeKind::Dnn, &opts()).unwrap();
        let x = DVector::zeros(2);
        assert_eq!(ctx.pinned_face(&x).ncols(), ctx.face.ncols());
    }

    #[test]
    fn infeasible_pin_rejected() {
        let inst = simplex(&[1.0, 0.0, 0.0, 1.0]);
        let x = DVector::from_vec(vec![0.3, 0.3]);
        assert!(matches!(
            evaluate_underestimator(&inst, ConeKind::Dnn, &x, &opts()),
            Err(QpError::PointInfeasible { .. })
        ));
    }

    #[test]
    fn infeasible_instance_short_circuits() {
        let inst = QpInstance::from_rows("inf", &[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], &[vec![1.0, 1.0]], &[-1.0]).unwrap();
        for cone in ConeKind::ALL {
            let r = solve_relaxation(&inst, cone, &opts()).unwrap();
            assert_eq!(r.status, RelaxationStatus::Infeasible);
            assert_eq!(r.iterations, 0);
        }
    }

    #[test]
    fn bounded_simplex_has_no_feasibility_certificate() {
        let inst = simplex(&[1.0, 0.0, 0.0, 1.0]);
        let o = recession_certificate_search(&inst, ConeKind::Dnn, CertificateMode::Feasibility, &opts()).unwrap();
        assert!(matches!(o, CertificateOutcome::None { .. }), "{o:?}");
    }

    #[test]
    fn negative_nullspace_curvature_gives_psd0_certificate() {
        let inst = QpInstance::from_rows(
            "neg",
            &[vec![0.0, -1.0], vec![-1.0, 0.0]],
            &[0.0, 0.0],
            &[vec![1.0, -1.0]],
            &[0.0],
        )
        .unwrap();
        let o = recession_certificate_search(&inst, ConeKind::Psd0, CertificateMode::Objective, &opts()).unwrap();
        let cert = o.certificate().expect("certificate").clone();
        // D = diag(0, dd') with d = (1, 1) / sqrt(2): rate = d'Qd = -1.
        assert!((cert.objective_rate + 1.0).abs() < 1e-12);
        assert!((cert.d[(1, 1)] - 0.5).abs() < 1e-12 && (cert.d[(1, 2)] - 0.5).abs() < 1e-12);
        let check = verify_certificate(&inst, ConeKind::Psd0, &cert.d, 1e-9).unwrap();
        assert!(check.valid());
        let r = solve_relaxation(&inst, ConeKind::Psd0, &opts()).unwrap();
        assert_eq!(r.status, RelaxationStatus::Unbounded);
        assert_eq!(r.value, f64::NEG_INFINITY);
    }

    #[test]
    fn dnn_certificate_on_negative_ray() {
        let inst = QpInstance::from_rows(
            "neg",
            &[vec![0.0, -1.0], vec![-1.0, 0.0]],
            &[0.0, 0.0],
            &[vec![1.0, -1.0]],
            &[0.0],
        )
        .unwrap();
        let o = recession_certificate_search(&inst, ConeKind::Dnn, CertificateMode::Objective, &opts()).unwrap();
        let cert = o.certificate().expect("certificate").clone();
        assert!((cert.objective_rate + 1.0).abs() < 1e-5);
        assert!(verify_certificate(&inst, ConeKind::Dnn, &cert.d, 1e-6).unwrap().valid());
    }
}
