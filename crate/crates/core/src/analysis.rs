//! Structural condition checkers: curvature on the nullspace of `A`,
//! recession-cone curvature, unboundedness below, desk-scale copositivity and
//! envelope sampling.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::conic::{evaluate_underestimator, RelaxationStatus, SolveOptions};
use crate::error::{QpError, Result};
use crate::instance::QpInstance;
use crate::lift::ConeKind;
use crate::numerics::{nullspace_basis, sym_eigen, RANK_TOL};
use crate::oracle::{basic_solutions, enumerate_vertices, minimize_quad_over_polytope, OracleOptions};

/// Whether `Q` is PSD on the nullspace of `A`.
#[derive(Debug, Clone, Serialize)]
pub struct NullspaceCurvatureReport {
    pub holds: bool,
    /// Smallest eigenvalue of `N'QN`; `+inf` for a trivial nullspace.
    pub min_eigenvalue: f64,
    pub nullspace_dim: usize,
    /// `d` with `Ad = 0`, `|d| = 1` and `d'Qd < 0`.
    #[serde(serialize_with = "crate::report::serialize_opt_vector")]
    pub witness: Option<DVector<f64>>,
    pub tolerance: f64,
}

pub fn check_psd_on_nullspace(inst: &QpInstance, tol: f64) -> Result<NullspaceCurvatureReport> {
    let basis = nullspace_basis(inst.a(), RANK_TOL);
    let r = basis.ncols();
    if r == 0 {
        return Ok(NullspaceCurvatureReport {
            holds: true,
            min_eigenvalue: f64::INFINITY,
            nullspace_dim: 0,
            witness: None,
            tolerance: tol,
        });
    }
    let reduced = basis.transpose() * inst.q() * &basis;
    let eig = sym_eigen(&reduced)?;
    let lam = eig.values[0];
    let holds = lam >= -tol * (1.0 + inst.q().norm());
    let witness = (!holds).then(|| &basis * eig.vectors.column(0));
    Ok(NullspaceCurvatureReport {
        holds,
        min_eigenvalue: lam,
        nullspace_dim: r,
        witness,
        tolerance: tol,
    })
}

/// Curvature of `d'Qd` over the recession cone `L = {Ad = 0, d >= 0}`,
/// normalized by `e'd = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct RecessionReport {
    /// `L != {0}`.
    pub l_nontrivial: bool,
    /// Minimum of `d'Qd` over `L` with `e'd = 1`; `None` when `L = {0}`.
    pub min_curvature: Option<f64>,
    /// Negative-curvature recession direction, present iff
    /// `min_curvature < -tol`.
    #[serde(serialize_with = "crate::report::serialize_opt_vector")]
    pub neg_direction: Option<DVector<f64>>,
    /// Sampled zero-curvature recession directions.
    #[serde(serialize_with = "crate::report::serialize_vectors")]
    pub zero_directions: Vec<DVector<f64>>,
    /// Extreme rays of `L`, normalized by `e'd = 1`.
    #[serde(skip)]
    pub extreme_rays: Vec<DVector<f64>>,
    pub tolerance: f64,
}

pub(crate) fn recession_polytope(inst: &QpInstance) -> (DMatrix<f64>, DVector<f64>) {
    let (n, m) = (inst.n(), inst.m());
    let mut a = DMatrix::zeros(m + 1, n);
    a.view_mut((0, 0), (m, n)).copy_from(inst.a());
    a.row_mut(m).fill(1.0);
    let mut b = DVector::zeros(m + 1);
    b[m] = 1.0;
    (a, b)
}

pub fn analyze_recession_cone(inst: &QpInstance, opts: &OracleOptions) -> Result<RecessionReport> {
    let n = inst.n();
    if n > opts.enum_cap {
        return Err(QpError::DeskScaleLimit { n, cap: opts.enum_cap });
    }
    let (a, b) = recession_polytope(inst);
    let rays = basic_solutions(&a, &b);
    if rays.is_empty() {
        return Ok(RecessionReport {
            l_nontrivial: false,
            min_curvature: None,
            neg_direction: None,
            zero_directions: Vec::new(),
            extreme_rays: Vec::new(),
            tolerance: opts.tol,
        });
    }
    let res = minimize_quad_over_polytope(inst.q(), &DVector::zeros(n), &a, &b, None, opts)?;
    let min_curv = res.value;
    let scale = 1.0 + inst.q().amax();
    let neg_direction = (min_curv < -opts.tol * scale).then(|| res.minimizers[0].clone());

    let curvature = |d: &DVector<f64>| (d.transpose() * inst.q() * d)[(0, 0)];
    let mut zero_directions: Vec<DVector<f64>> = Vec::new();
    let mut push = |d: &DVector<f64>| {
        if curvature(d).abs() <= opts.tol * scale && !zero_directions.iter().any(|z| (z - d).amax() <= 1e-8) {
            zero_directions.push(d.clone());
        }
    };
    for d in rays.iter().chain(res.minimizers.iter()) {
        push(d);
    }

    Ok(RecessionReport {
        l_nontrivial: true,
        min_curvature: Some(min_curv),
        neg_direction,
        zero_directions,
        extreme_rays: rays,
        tolerance: opts.tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnboundednessStatus {
    /// A recession direction of negative curvature exists.
    #[serde(rename = "UNBOUNDED_CASE1")]
    Case1,
    /// A zero-curvature recession direction along which the objective
    /// decreases linearly from some feasible point.
    #[serde(rename = "UNBOUNDED_CASE2")]
    Case2,
    #[serde(rename = "NOT_DETECTED")]
    NotDetected,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnboundednessVerdict {
    pub status: UnboundednessStatus,
    #[serde(serialize_with = "crate::report::serialize_opt_vector")]
    pub direction: Option<DVector<f64>>,
    /// Feasible point with `(Qx + c)'d < 0`, for the second case.
    #[serde(serialize_with = "crate::report::serialize_opt_vector")]
    pub point: Option<DVector<f64>>,
    /// `d'Qd` for the first case, `(Qx + c)'d` for the second.
    pub rate: Option<f64>,
}

impl UnboundednessVerdict {
    pub fn not_detected() -> Self {
        Self {
            status: UnboundednessStatus::NotDetected,
            direction: None,
            point: None,
            rate: None,
        }
    }
}

/// Sound but incomplete test for unboundedness below.
///
/// The second case is only checked along the zero-curvature directions found
/// by the recession analysis. An empty feasible set yields `NotDetected`.
pub fn detect_unbounded(inst: &QpInstance, opts: &OracleOptions) -> Result<UnboundednessVerdict> {
    let vertices = enumerate_vertices(inst, opts)?;
    if vertices.is_empty() {
        return Ok(UnboundednessVerdict::not_detected());
    }
    let recession = analyze_recession_cone(inst, opts)?;
    detect_unbounded_with(inst, &recession, &vertices, opts)
}

pub(crate) fn detect_unbounded_with(
    inst: &QpInstance,
    recession: &RecessionReport,
    vertices: &[DVector<f64>],
    opts: &OracleOptions,
) -> Result<UnboundednessVerdict> {
    if let Some(d) = &recession.neg_direction {
        let rate = (d.transpose() * inst.q() * d)[(0, 0)];
        return Ok(UnboundednessVerdict {
            status: UnboundednessStatus::Case1,
            direction: Some(d.clone()),
            point: None,
            rate: Some(rate),
        });
    }
    let scale = 1.0 + inst.q().amax() + inst.c().amax();
    for d in &recession.zero_directions {
        // (Qx + c)'d is linear in x; over S it is minimized at a vertex
        // unless it decreases along some extreme ray.
        let qd = inst.q() * d;
        let cd = inst.c().dot(d);
        let slope = |x: &DVector<f64>| qd.dot(x) + cd;
        let mut best: Option<(f64, DVector<f64>)> = None;
        for v in vertices {
            let s = slope(v);
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                best = Some((s, v.clone()));
            }
        }
        if let Some(r) = recession.extreme_rays.iter().find(|r| qd.dot(r) < -opts.tol * scale) {
            let (s0, v0) = best.clone().expect("vertices nonempty");
            let t = ((s0.max(0.0) + 1.0) / -qd.dot(r)).max(0.0);
            let x = v0 + r * t;
            best = Some((slope(&x), x));
        }
        if let Some((s, x)) = best {
            if s < -opts.tol * scale {
                return Ok(UnboundednessVerdict {
                    status: UnboundednessStatus::Case2,
                    direction: Some(d.clone()),
                    point: Some(x),
                    rate: Some(s),
                });
            }
        }
    }
    Ok(UnboundednessVerdict::not_detected())
}

/// Why the optimal value of an instance is known to be finite.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinitenessCertificate {
    BoundedFeasibleSet,
    /// `d'Qd > 0` on every nonzero recession direction.
    PositiveRecessionCurvature { min_curvature: f64 },
    /// `Q` copositive and `c >= 0`, so `q >= 0` on the nonnegative orthant.
    CopositiveWithNonnegativeLinear { simplex_min: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct CopositivityReport {
    /// Minimum of `x'Qx` over the standard simplex.
    pub min_value: f64,
    #[serde(serialize_with = "crate::report::serialize_vector")]
    pub minimizer: DVector<f64>,
    pub copositive: bool,
    pub tolerance: f64,
}

/// Exact simplex minimum of `x'Qx` by face enumeration.
pub fn check_copositivity_desk_scale(q: &DMatrix<f64>, opts: &OracleOptions) -> Result<CopositivityReport> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(QpError::DimensionMismatch("Q must be square".into()));
    }
    let a = DMatrix::from_element(1, n, 1.0);
    let b = DVector::from_element(1, 1.0);
    let res = minimize_quad_over_polytope(q, &DVector::zeros(n), &a, &b, None, opts)?;
    Ok(CopositivityReport {
        min_value: res.value,
        minimizer: res.minimizers[0].clone(),
        copositive: res.value >= -opts.tol * (1.0 + q.amax()),
        tolerance: opts.tol,
    })
}

/// One sample of the underestimator along a segment.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub q: f64,
    /// `l_K(x(t))`; `-inf` when unbounded, `NaN` when unavailable.
    pub lk: f64,
    pub status: RelaxationStatus,
}

/// Evaluates `q` and `l_K` at `k` equally spaced points of `[from, to]`.
pub fn sample_envelope(
    inst: &QpInstance,
    cone: ConeKind,
    from: &DVector<f64>,
    to: &DVector<f64>,
    k: usize,
    opts: &SolveOptions,
) -> Result<Vec<EnvelopeRow>> {
    inst.check_len(from)?;
    inst.check_len(to)?;
    for x in [from, to] {
        if !inst.is_feasible(x) {
            return Err(QpError::PointInfeasible {
                residual: inst.infeasibility(x),
            });
        }
    }
    if k == 0 {
        return Err(QpError::InvalidDimension("sample count must be positive".into()));
    }
    let ts: Vec<f64> = (0..k)
        .map(|i| if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 })
        .collect();
    ts.par_iter()
        .map(|&t| {
            let x = from * (1.0 - t) + to * t;
            let q = inst.objective_unchecked(&x);
            let res = evaluate_underestimator(inst, cone, &x, opts)?;
            Ok(EnvelopeRow {
                t,
                q,
                lk: match res.status {
                    RelaxationStatus::Optimal => res.value,
                    RelaxationStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::NAN,
                },
                status: res.status,
            })
        })
        .collect()
}

/// Formats a float with 12 significant digits.
pub fn fmt_sig12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..12).contains(&exp) {
        let s = format!("{:.11e}", v);
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = trim_zeros(mant);
        return format!("{mant}e{e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes rows as CSV with header `t,q,lK,status`.
pub fn write_envelope_csv<W: Write>(rows: &[EnvelopeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| QpError::Parse(e.to_string());
    w.write_record(["t", "q", "lK", "status"]).map_err(io)?;
    for r in rows {
        w.write_record([fmt_sig12(r.t), fmt_sig12(r.q), fmt_sig12(r.lk), r.status.as_str().to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| QpError::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}
