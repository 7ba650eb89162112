//! Comparison report across analyses, relaxations and the oracle, plus the
//! serde helpers used for vectors and matrices.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::analysis::{
    analyze_recession_cone, check_copositivity_desk_scale, check_psd_on_nullspace, fmt_sig12, CopositivityReport,
    NullspaceCurvatureReport, RecessionReport,
};
use crate::conic::{solve_relaxation, verify_certificate, RelaxationResult, RelaxationStatus, SolveOptions};
use crate::error::{QpError, Result};
use crate::instance::QpInstance;
use crate::lift::{ConeKind, LiftedPoint};
use crate::oracle::{global_solve, OracleResult, OracleStatus};

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::String(fmt_sig12(v))
    }
}

pub(crate) fn serialize_vector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v.iter() {
        seq.serialize_element(&finite_or_null(*x))?;
    }
    seq.end()
}

#[derive(Serialize)]
struct VecRef<'a>(#[serde(serialize_with = "serialize_vector")] &'a DVector<f64>);

pub(crate) fn serialize_vectors<S: Serializer>(v: &[DVector<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&VecRef(x))?;
    }
    seq.end()
}

pub(crate) fn serialize_opt_vector<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => serialize_vector(x, s),
        None => s.serialize_none(),
    }
}

pub(crate) fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

pub(crate) fn serialize_opt_point<S: Serializer>(p: &Option<LiftedPoint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match p {
        Some(p) => serialize_matrix(&p.y, s),
        None => s.serialize_none(),
    }
}

/// One cross-check between computed quantities. `pass` is `None` when the
/// check does not apply to the instance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub claim: String,
    pub pass: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationSummary {
    pub cone: ConeKind,
    pub status: RelaxationStatus,
    pub value: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub certificate_search: String,
    pub certificate_rate: Option<f64>,
    pub certificate_valid: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Section<T> {
    Done { result: T },
    Skipped { reason: String },
}

impl<T> Section<T> {
    pub fn get(&self) -> Option<&T> {
        match self {
            Section::Done { result } => Some(result),
            Section::Skipped { .. } => None,
        }
    }

    fn from_result(r: Result<T>) -> Result<Self> {
        match r {
            Ok(result) => Ok(Section::Done { result }),
            Err(e @ QpError::DeskScaleLimit { .. }) => Ok(Section::Skipped { reason: e.to_string() }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub tolerance: f64,
    pub recession: Section<RecessionReport>,
    pub nullspace: NullspaceCurvatureReport,
    pub copositivity: Section<CopositivityReport>,
    pub relaxations: Vec<RelaxationSummary>,
    #[serde(skip)]
    pub relaxation_results: Vec<RelaxationResult>,
    pub oracle: Section<OracleResult>,
    pub checks: Vec<Check>,
}

fn summarize(inst: &QpInstance, r: &RelaxationResult, tol: f64) -> Result<RelaxationSummary> {
    let (rate, valid) = match &r.certificate {
        Some(c) => (Some(c.objective_rate), Some(verify_certificate(inst, r.cone, &c.d, tol.max(1e-6))?.valid())),
        None => (None, None),
    };
    Ok(RelaxationSummary {
        cone: r.cone,
        status: r.status,
        value: r.value,
        iterations: r.iterations,
        primal_residual: r.primal_residual,
        certificate_search: r.certificate_search.clone(),
        certificate_rate: rate,
        certificate_valid: valid,
    })
}

/// Runs every analysis, both relaxations and the oracle, and cross-checks
/// the results.
pub fn compare_report(inst: &QpInstance, opts: &SolveOptions) -> Result<Report> {
    let tol = opts.tol_primal;
    let check_tol = |v: f64| 10.0 * tol * (1.0 + v.abs());
    let recession = Section::from_result(analyze_recession_cone(inst, &opts.oracle))?;
    let nullspace = check_psd_on_nullspace(inst, 1e-9)?;
    let copositivity = Section::from_result(check_copositivity_desk_scale(inst.q(), &opts.oracle))?;
    let mut results = Vec::new();
    for cone in ConeKind::ALL {
        results.push(solve_relaxation(inst, cone, opts)?);
    }
    let relaxations = results.iter().map(|r| summarize(inst, r, tol)).collect::<Result<Vec<_>>>()?;
    let oracle = Section::from_result(global_solve(inst, &opts.oracle))?;

    let mut checks = Vec::new();
    let dnn = &results[0];
    let psd0 = &results[1];
    let finite = |r: &RelaxationResult| r.status == RelaxationStatus::Optimal;

    if let Some(o) = oracle.get() {
        for r in &results {
            let applies = finite(r) && o.value.is_finite();
            checks.push(Check {
                claim: format!("{} relaxation value is a lower bound on the optimum", r.cone),
                pass: applies.then(|| r.value <= o.value + check_tol(o.value)),
                detail: format!(
                    "l_K = {}, l* = {}, tol = {:.1e}",
                    fmt_sig12(r.value),
                    fmt_sig12(o.value),
                    check_tol(o.value)
                ),
            });
        }
        let infeasible = o.value == f64::INFINITY;
        checks.push(Check {
            claim: "empty feasible set makes both relaxations infeasible".into(),
            pass: infeasible.then(|| results.iter().all(|r| r.status == RelaxationStatus::Infeasible)),
            detail: format!("oracle value {}", fmt_sig12(o.value)),
        });
        let exact = nullspace.holds && o.value.is_finite();
        checks.push(Check {
            claim: "Q psd on the nullspace of A makes both relaxations exact".into(),
            pass: exact.then(|| results.iter().all(|r| finite(r) && (r.value - o.value).abs() <= check_tol(o.value))),
            detail: format!(
                "DNN {}, PSD0 {}, l* {}",
                fmt_sig12(dnn.value),
                fmt_sig12(psd0.value),
                fmt_sig12(o.value)
            ),
        });
        checks.push(Check {
            claim: "oracle optimum is certified".into(),
            pass: Some(o.status == OracleStatus::Certified),
            detail: format!("{:?}", o.status),
        });
    }
    checks.push(Check {
        claim: "PSD0 value is at most the DNN value".into(),
        pass: (finite(dnn) && finite(psd0)).then(|| psd0.value <= dnn.value + check_tol(dnn.value)),
        detail: format!("PSD0 {}, DNN {}", fmt_sig12(psd0.value), fmt_sig12(dnn.value)),
    });
    let feasible = !results.iter().any(|r| r.status == RelaxationStatus::Infeasible);
    checks.push(Check {
        claim: "negative curvature on the nullspace of A makes the PSD0 relaxation unbounded".into(),
        pass: (!nullspace.holds && feasible).then(|| psd0.status == RelaxationStatus::Unbounded),
        detail: format!("min eigenvalue on nullspace {}", fmt_sig12(nullspace.min_eigenvalue)),
    });
    if let Some(rec) = recession.get() {
        checks.push(Check {
            claim: "negative-curvature recession direction makes the DNN relaxation unbounded".into(),
            pass: (rec.neg_direction.is_some() && feasible).then(|| dnn.status == RelaxationStatus::Unbounded),
            detail: format!("min recession curvature {}", rec.min_curvature.map_or("n/a".into(), fmt_sig12)),
        });
    }
    for s in &relaxations {
        checks.push(Check {
            claim: format!("{} unboundedness verdict carries a verifiable certificate", s.cone),
            pass: (s.status == RelaxationStatus::Unbounded).then(|| s.certificate_valid == Some(true)),
            detail: format!("rate {}", s.certificate_rate.map_or("n/a".into(), fmt_sig12)),
        });
    }

    Ok(Report {
        name: inst.name().to_string(),
        n: inst.n(),
        m: inst.m(),
        tolerance: tol,
        recession,
        nullspace,
        copositivity,
        relaxations,
        relaxation_results: results,
        oracle,
        checks,
    })
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_sig12(*x)).collect();
    format!("[{}]", parts.join(", "))
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "instance {} (n = {}, m = {}), solver tolerance {:.1e}", self.name, self.n, self.m, self.tolerance);
        let _ = writeln!(s, "\nstructure");
        match &self.recession {
            Section::Done { result } => {
                let _ = writeln!(
                    s,
                    "  recession cone nontrivial: {}; min curvature: {}; tol {:.1e}",
                    result.l_nontrivial,
                    result.min_curvature.map_or("n/a".into(), fmt_sig12),
                    result.tolerance
                );
            }
            Section::Skipped { reason } => {
                let _ = writeln!(s, "  recession analysis skipped: {reason}");
            }
        }
        let _ = writeln!(
            s,
            "  Q psd on nullspace of A: {} (min eigenvalue {}, tol {:.1e})",
            self.nullspace.holds,
            fmt_sig12(self.nullspace.min_eigenvalue),
            self.nullspace.tolerance
        );
        match &self.copositivity {
            Section::Done { result } => {
                let _ = writeln!(
                    s,
                    "  Q copositive: {} (simplex minimum {}, tol {:.1e})",
                    result.copositive,
                    fmt_sig12(result.min_value),
                    result.tolerance
                );
            }
            Section::Skipped { reason } => {
                let _ = writeln!(s, "  copositivity skipped: {reason}");
            }
        }
        let _ = writeln!(s, "\nrelaxations");
        for r in &self.relaxations {
            let _ = write!(
                s,
                "  {:<5} {:<10} value {:<20} iterations {:<7} residual {:.2e}",
                r.cone.to_string(),
                r.status.as_str(),
                fmt_sig12(r.value),
                r.iterations,
                r.primal_residual
            );
            if let Some(rate) = r.certificate_rate {
                let _ = write!(s, "  certificate rate {} (valid: {})", fmt_sig12(rate), r.certificate_valid.unwrap_or(false));
            }
            let _ = writeln!(s, "  [certificate search: {}]", r.certificate_search);
        }
        let _ = writeln!(s, "\noracle");
        match &self.oracle {
            Section::Done { result } => {
                let _ = writeln!(
                    s,
                    "  l* = {} ({:?}, attained: {}, faces explored: {})",
                    fmt_sig12(result.value),
                    result.status,
                    result.attained,
                    result.faces_explored
                );
                if let Some(f) = &result.finiteness {
                    let _ = writeln!(s, "  finiteness: {}", serde_json::to_string(f).unwrap_or_default());
                }
                for x in result.minimizers.iter().take(5) {
                    let _ = writeln!(s, "  minimizer {}", fmt_vec(x));
                }
            }
            Section::Skipped { reason } => {
                let _ = writeln!(s, "  skipped: {reason}");
            }
        }
        let _ = writeln!(s, "\nchecks");
        for c in &self.checks {
            let mark = match c.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "n/a ",
            };
            let _ = writeln!(s, "  [{mark}] {} ({})", c.claim, c.detail);
        }
        s
    }
}
