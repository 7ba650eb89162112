//! Exact ground truth at desk scale.
//!
//! Global minimization of a quadratic over `{Ax = b, l <= x <= u}` by
//! enumerating every face: a global minimizer sits in the relative interior
//! of some face, where it is a stationary point of the objective restricted
//! to the face's affine hull and the restricted Hessian is PSD. Solving that
//! stationarity system on every face and keeping the candidates that lie on
//! their face therefore finds the minimum whenever it is attained.
//!
//! Also provides basic-solution enumeration and the first/second-order
//! local-minimizer test.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SVD};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, FinitenessCertificate, RecessionReport, UnboundednessStatus, UnboundednessVerdict};
use crate::error::{QpError, Result};
use crate::instance::{index_sets, IndexSets, QpInstance, FEAS_TOL};
use crate::numerics::{min_eigenvalue, nullspace_basis, numerical_rank, RANK_TOL};

/// Default cap on the number of variables for enumeration.
pub const DEFAULT_ENUM_CAP: usize = 16;

/// Environment variable overriding [`DEFAULT_ENUM_CAP`].
pub const ENUM_CAP_ENV: &str = "QPRELAX_ENUM_CAP";

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Maximum number of variables handled by enumeration.
    pub enum_cap: usize,
    /// Tolerance for curvature, bound and sign decisions.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            enum_cap: DEFAULT_ENUM_CAP,
            tol: 1e-9,
        }
    }
}

impl OracleOptions {
    /// Defaults with the cap taken from `QPRELAX_ENUM_CAP` when set.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        if let Some(cap) = std::env::var(ENUM_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            opts.enum_cap = cap;
        }
        opts
    }

    fn check_cap(&self, n: usize) -> Result<()> {
        if n > self.enum_cap {
            return Err(QpError::DeskScaleLimit { n, cap: self.enum_cap });
        }
        Ok(())
    }
}

/// Whether the reported optimal value is backed by a proof of finiteness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OracleStatus {
    Certified,
    /// The feasible set is unbounded, no unboundedness witness was found and
    /// finiteness could not be proven either.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// Optimal value; `+inf` when infeasible, `-inf` when unbounded below.
    pub value: f64,
    /// Sampled optimal solutions.
    #[serde(serialize_with = "crate::report::serialize_vectors")]
    pub minimizers: Vec<DVector<f64>>,
    pub attained: bool,
    pub faces_explored: usize,
    pub status: OracleStatus,
    pub finiteness: Option<FinitenessCertificate>,
    pub unboundedness: Option<UnboundednessVerdict>,
}

impl OracleResult {
    fn infeasible(faces_explored: usize) -> Self {
        Self {
            value: f64::INFINITY,
            minimizers: Vec::new(),
            attained: false,
            faces_explored,
            status: OracleStatus::Certified,
            finiteness: None,
            unboundedness: None,
        }
    }
}

/// Variable bounds `lower <= x <= upper`; `upper` entries may be `+inf`.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Bounds {
    pub fn nonnegative(n: usize) -> Self {
        Self {
            lower: DVector::zeros(n),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    fn states(&self, j: usize) -> usize {
        if self.upper[j].is_finite() {
            3
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Lower,
    Free,
    Upper,
}

/// Stationary point found on one face.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub x: DVector<f64>,
    pub value: f64,
}

/// All basic feasible solutions of `{Ax = b, x >= 0}`, deduplicated.
pub fn enumerate_vertices(inst: &QpInstance, opts: &OracleOptions) -> Result<Vec<DVector<f64>>> {
    opts.check_cap(inst.n())?;
    Ok(basic_solutions(inst.a(), inst.b()))
}

/// Basic feasible solutions of `{Ax = b, x >= 0}` for arbitrary data.
pub(crate) fn basic_solutions(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = a.ncols();
    let rank = numerical_rank(a, RANK_TOL);
    let b_scale = 1.0 + b.amax();
    let mut found: Vec<DVector<f64>> = Vec::new();

    let mut consider = |cols: &[usize]| {
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]);
        if !cols.is_empty() && numerical_rank(&sub, RANK_TOL) < cols.len() {
            return;
        }
        let mut x = DVector::zeros(n);
        if !cols.is_empty() {
            let svd = SVD::new(sub.clone(), true, true);
            let eps = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
            let Ok(xb) = svd.solve(b, eps) else { return };
            for (k, &j) in cols.iter().enumerate() {
                x[j] = xb[k];
            }
        }
        let resid = (a * &x - b).amax();
        if resid > 1e-9 * b_scale * (1.0 + x.amax()) {
            return;
        }
        if x.iter().any(|v| *v < -1e-10 * (1.0 + x.amax())) {
            return;
        }
        x.iter_mut().for_each(|v| {
            if *v < 0.0 {
                *v = 0.0
            }
        });
        if !found.iter().any(|f| (f - &x).amax() <= 1e-8 * (1.0 + x.amax())) {
            found.push(x);
        }
    };

    for_each_subset(n, rank, &mut consider);
    found
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        if k == 0 {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in (i + 1)..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

/// Global minimum of `x'Qx + 2c'x` over `{Ax = b, bounds}` (default bounds:
/// `x >= 0`) by face enumeration.
///
/// Exact when the minimum is attained. Callers working on unbounded
/// polyhedra must rule out unboundedness below first; [`global_solve`] does.
pub fn minimize_quad_over_polytope(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    bounds: Option<&Bounds>,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let n = c.len();
    opts.check_cap(n)?;
    let default_bounds;
    let bounds = match bounds {
        Some(bd) => bd,
        None => {
            default_bounds = Bounds::nonnegative(n);
            &default_bounds
        }
    };
    let (candidates, explored) = face_candidates(q, c, a, b, bounds, opts)?;
    let mut result = summarize(candidates, explored, q, c);
    if result.attained {
        result.status = OracleStatus::Certified;
    }
    Ok(result)
}

fn summarize(candidates: Vec<Candidate>, explored: usize, q: &DMatrix<f64>, c: &DVector<f64>) -> OracleResult {
    if candidates.is_empty() {
        return OracleResult::infeasible(explored);
    }
    let value = candidates.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let scale = 1.0 + value.abs() + q.amax() + c.amax();
    let mut minimizers: Vec<DVector<f64>> = Vec::new();
    for cand in candidates.iter().filter(|c| c.value <= value + 1e-9 * scale) {
        if !minimizers.iter().any(|m| (m - &cand.x).amax() <= 1e-8 * (1.0 + cand.x.amax())) {
            minimizers.push(cand.x.clone());
        }
    }
    OracleResult {
        value,
        minimizers,
        attained: true,
        faces_explored: explored,
        status: OracleStatus::Certified,
        finiteness: None,
        unboundedness: None,
    }
}

/// Stationary points with PSD restricted Hessian on every face, plus the
/// number of faces examined.
pub(crate) fn face_candidates(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    bounds: &Bounds,
    opts: &OracleOptions,
) -> Result<(Vec<Candidate>, usize)> {
    let n = c.len();
    if q.shape() != (n, n) || a.ncols() != n || a.nrows() != b.len() || bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(QpError::DimensionMismatch("face enumeration data".into()));
    }
    let radices: Vec<usize> = (0..n).map(|j| bounds.states(j)).collect();
    let total = radices.iter().try_fold(1usize, |acc, r| acc.checked_mul(*r));
    let limit = 1usize.checked_shl(opts.enum_cap as u32).unwrap_or(usize::MAX);
    let total = match total {
        Some(t) if t <= limit => t,
        _ => return Err(QpError::DeskScaleLimit { n, cap: opts.enum_cap }),
    };

    let q_scale = 1.0 + q.amax();
    let candidates: Vec<Candidate> = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let mut rest = code;
            let states: Vec<VarState> = radices
                .iter()
                .map(|&r| {
                    let s = rest % r;
                    rest /= r;
                    match s {
                        0 => VarState::Lower,
                        1 => VarState::Free,
                        _ => VarState::Upper,
                    }
                })
                .collect();
            face_stationary_point(q, c, a, b, bounds, &states, q_scale, opts.tol)
        })
        .collect();
    Ok((candidates, total))
}

#[allow(clippy::too_many_arguments)]
fn face_stationary_point(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    bounds: &Bounds,
    states: &[VarState],
    q_scale: f64,
    tol: f64,
) -> Option<Candidate> {
    let n = c.len();
    let m = a.nrows();
    let free: Vec<usize> = (0..n).filter(|&j| states[j] == VarState::Free).collect();
    let mut x = DVector::zeros(n);
    for j in 0..n {
        match states[j] {
            VarState::Lower => x[j] = bounds.lower[j],
            VarState::Upper => x[j] = bounds.upper[j],
            VarState::Free => {}
        }
    }
    let b_scale = 1.0 + b.amax() + a.amax() * (1.0 + x.amax());
    let k = free.len();
    if k > 0 {
        // Stationarity on the face's affine hull:
        // [Q_FF A_F'; A_F 0] [x_F; nu] = [-(c_F + Q_F,fixed x_fixed); b - A_fixed x_fixed]
        let fixed_q = q * &x;
        let fixed_a = a * &x;
        let dim = k + m;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                kkt[(r, s)] = q[(i, j)];
            }
            for row in 0..m {
                kkt[(r, k + row)] = a[(row, i)];
                kkt[(k + row, r)] = a[(row, i)];
            }
            rhs[r] = -(c[i] + fixed_q[i]);
        }
        for row in 0..m {
            rhs[k + row] = b[row] - fixed_a[row];
        }
        let svd = SVD::new(kkt.clone(), true, true);
        let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        let sol = svd.solve(&rhs, eps).ok()?;
        let resid = (&kkt * &sol - &rhs).amax();
        if resid > 1e-9 * (1.0 + rhs.amax()) * (1.0 + sol.amax()) {
            return None;
        }
        for (r, &j) in free.iter().enumerate() {
            x[j] = sol[r];
        }
        let bound_tol = 1e-9 * (1.0 + x.amax());
        for &j in &free {
            if x[j] < bounds.lower[j] - bound_tol || x[j] > bounds.upper[j] + bound_tol {
                return None;
            }
        }
        let a_free = DMatrix::from_fn(m, k, |i, j| a[(i, free[j])]);
        let basis = nullspace_basis(&a_free, RANK_TOL);
        if basis.ncols() > 0 {
            let q_free = DMatrix::from_fn(k, k, |i, j| q[(free[i], free[j])]);
            let reduced = basis.transpose() * q_free * &basis;
            let lam = min_eigenvalue(&reduced).ok()?;
            if lam < -tol * q_scale {
                return None;
            }
        }
        for &j in &free {
            x[j] = x[j].clamp(bounds.lower[j], bounds.upper[j]);
        }
    }
    if (a * &x - b).amax() > 1e-9 * b_scale {
        return None;
    }
    let value = (x.transpose() * q * &x)[(0, 0)] + 2.0 * c.dot(&x);
    Some(Candidate { x, value })
}

/// Global optimum of the instance.
///
/// Infeasible instances report `+inf`. On unbounded feasible sets the
/// recession analysis runs first; a witness of unboundedness yields `-inf`,
/// and otherwise the enumerated value is reported as certified only when
/// finiteness is proven (no zero-curvature recession direction, or a
/// copositive `Q` with `c >= 0`).
pub fn global_solve(inst: &QpInstance, opts: &OracleOptions) -> Result<OracleResult> {
    let vertices = enumerate_vertices(inst, opts)?;
    if vertices.is_empty() {
        return Ok(OracleResult::infeasible(0));
    }
    let recession = analysis::analyze_recession_cone(inst, opts)?;
    let finiteness = if !recession.l_nontrivial {
        Some(FinitenessCertificate::BoundedFeasibleSet)
    } else {
        let verdict = analysis::detect_unbounded_with(inst, &recession, &vertices, opts)?;
        if verdict.status != UnboundednessStatus::NotDetected {
            return Ok(OracleResult {
                value: f64::NEG_INFINITY,
                minimizers: Vec::new(),
                attained: false,
                faces_explored: 0,
                status: OracleStatus::Certified,
                finiteness: None,
                unboundedness: Some(verdict),
            });
        }
        finiteness_on_unbounded_set(inst, &recession, opts)?
    };

    let mut result = minimize_quad_over_polytope(inst.q(), inst.c(), inst.a(), inst.b(), None, opts)?;
    // Basic solutions are candidates too; the enumeration already contains
    // them, but they are cheap to re-check.
    let scale = 1e-9 * (1.0 + result.value.abs() + inst.q().amax() + inst.c().amax());
    for v in &vertices {
        let qv = inst.objective_unchecked(v);
        if qv < result.value - scale {
            result.value = qv;
            result.minimizers = vec![v.clone()];
        } else if qv <= result.value + scale && !result.minimizers.iter().any(|m| (m - v).amax() <= 1e-8 * (1.0 + v.amax())) {
            result.minimizers.push(v.clone());
        }
    }
    result.status = if finiteness.is_some() {
        OracleStatus::Certified
    } else {
        OracleStatus::Inconclusive
    };
    result.finiteness = finiteness;
    if recession.l_nontrivial {
        result.unboundedness = Some(UnboundednessVerdict::not_detected());
    }
    Ok(result)
}

fn finiteness_on_unbounded_set(
    inst: &QpInstance,
    recession: &RecessionReport,
    opts: &OracleOptions,
) -> Result<Option<FinitenessCertificate>> {
    let scale = 1.0 + inst.q().amax();
    if let Some(min_curv) = recession.min_curvature {
        if min_curv > opts.tol * scale * 10.0 {
            return Ok(Some(FinitenessCertificate::PositiveRecessionCurvature { min_curvature: min_curv }));
        }
    }
    if inst.c().iter().all(|v| *v >= 0.0) {
        let cop = analysis::check_copositivity_desk_scale(inst.q(), opts)?;
        if cop.copositive {
            return Ok(Some(FinitenessCertificate::CopositiveWithNonnegativeLinear {
                simplex_min: cop.min_value,
            }));
        }
    }
    Ok(None)
}

/// Multipliers for `Qx + c - A'y - s = 0`, `s >= 0`, `x_j s_j = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct KktCertificate {
    #[serde(serialize_with = "crate::report::serialize_vector")]
    pub y: DVector<f64>,
    #[serde(serialize_with = "crate::report::serialize_vector")]
    pub s: DVector<f64>,
    pub stationarity_residual: f64,
    pub min_multiplier: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalMinVerdict {
    pub is_local_min: bool,
    pub kkt: Option<KktCertificate>,
    /// Minimum of `d'Qd` over the critical cone intersected with `[-1, 1]^n`.
    pub second_order_min: f64,
    pub index_sets: IndexSets,
}

/// First- and second-order test for local minimality of a feasible point.
pub fn verify_local_minimizer(
    inst: &QpInstance,
    x: &DVector<f64>,
    tol: f64,
    opts: &OracleOptions,
) -> Result<LocalMinVerdict> {
    verify_local_minimizer_in_box(inst, x, tol, 1.0, opts)
}

/// As [`verify_local_minimizer`] with the critical cone cut by
/// `[-radius, radius]^n`.
pub fn verify_local_minimizer_in_box(
    inst: &QpInstance,
    x: &DVector<f64>,
    tol: f64,
    radius: f64,
    opts: &OracleOptions,
) -> Result<LocalMinVerdict> {
    inst.check_len(x)?;
    opts.check_cap(inst.n())?;
    let feas_tol = tol.max(FEAS_TOL);
    if !inst.is_feasible_within(x, feas_tol) {
        return Err(QpError::PointInfeasible {
            residual: inst.infeasibility(x),
        });
    }
    let n = inst.n();
    let m = inst.m();
    let clipped = x.map(|v| v.max(0.0));
    let sets = index_sets(&clipped, tol)?;
    let g = inst.half_gradient(&clipped);
    let g_scale = 1.0 + g.amax();

    // Unknowns (y, s_Z): A'y + sum_{j in Z} s_j e_j = g.
    let nz = sets.zero.len();
    let mut sys = DMatrix::zeros(n, m + nz);
    sys.view_mut((0, 0), (n, m)).copy_from(&inst.a().transpose());
    for (k, &j) in sets.zero.iter().enumerate() {
        sys[(j, m + k)] = 1.0;
    }
    let svd = SVD::new(sys.clone(), true, true);
    let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let kkt = svd.solve(&g, eps).ok().and_then(|sol| {
        let y = sol.rows(0, m).into_owned();
        let mut s = DVector::zeros(n);
        for (k, &j) in sets.zero.iter().enumerate() {
            s[j] = sol[m + k];
        }
        let resid = (&g - inst.a().transpose() * &y - &s).amax();
        let min_multiplier = s.iter().copied().fold(f64::INFINITY, f64::min);
        let complementarity = clipped.iter().zip(s.iter()).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
        let ok = resid <= tol * g_scale && min_multiplier >= -tol * g_scale && complementarity <= tol * g_scale;
        ok.then_some(KktCertificate {
            y,
            s,
            stationarity_residual: resid,
            min_multiplier,
            complementarity,
        })
    });

    // Critical cone: A d = 0, g'd = 0, d_Z >= 0; compactified by the box.
    let mut rows: Vec<DVector<f64>> = (0..m).map(|i| inst.a().row(i).transpose()).collect();
    let g_norm = g.norm();
    if g_norm > tol * g_scale {
        rows.push(&g / g_norm);
    }
    let cone_a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let cone_b = DVector::zeros(rows.len());
    let mut lower = DVector::from_element(n, -radius);
    for &j in &sets.zero {
        lower[j] = 0.0;
    }
    let bounds = Bounds {
        lower,
        upper: DVector::from_element(n, radius),
    };
    let (cands, _) = face_candidates(inst.q(), &DVector::zeros(n), &cone_a, &cone_b, &bounds, opts)?;
    let second_order_min = cands.iter().map(|c| c.value).fold(0.0_f64, f64::min);
    let q_scale = 1.0 + inst.q().amax();
    let is_local_min = kkt.is_some() && second_order_min >= -tol * q_scale * radius * radius;

    Ok(LocalMinVerdict {
        is_local_min,
        kkt,
        second_order_min,
        index_sets: sets,
    })
}

/// Vertices that pass the local-minimizer test, keyed by position in the
/// vertex list.
pub fn local_minimizing_vertices(
    inst: &QpInstance,
    tol: f64,
    opts: &OracleOptions,
) -> Result<Vec<DVector<f64>>> {
    let vertices = enumerate_vertices(inst, opts)?;
    let mut seen: HashMap<usize, ()> = HashMap::new();
    let mut out = Vec::new();
    for (i, v) in vertices.into_iter().enumerate() {
        if verify_local_minimizer(inst, &v, tol, opts)?.is_local_min && seen.insert(i, ()).is_none() {
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex(q: &[&[f64]]) -> QpInstance {
        let n = q.len();
        let rows: Vec<Vec<f64>> = q.iter().map(|r| r.to_vec()).collect();
        QpInstance::from_rows("simplex", &rows, &vec![0.0; n], &[vec![1.0; n]], &[1.0]).unwrap()
    }

    fn opts() -> OracleOptions {
        OracleOptions::default()
    }

    #[test]
    fn simplex_vertices() {
        let inst = simplex(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let mut v = enumerate_vertices(&inst, &opts()).unwrap();
        v.sort_by(|a, b| b.iamax().cmp(&a.iamax()).reverse());
        assert_eq!(v.len(), 3);
        for (j, vert) in v.iter().enumerate() {
            assert_eq!(vert, &DVector::from_fn(3, |i, _| if i == j { 1.0 } else { 0.0 }));
        }
    }

    #[test]
    fn infeasible_system_has_no_vertices() {
        let inst = QpInstance::from_rows("inf", &vec![vec![0.0; 3]; 3], &[0.0; 3], &[vec![1.0; 3]], &[-1.0]).unwrap();
        assert!(enumerate_vertices(&inst, &opts()).unwrap().is_empty());
    }

    #[test]
    fn horn_has_single_column_vertex() {
        let (inst, _) = crate::generators::horn_instance();
        let v = enumerate_vertices(&inst, &opts()).unwrap();
        let target = DVector::from_vec(vec![0.0, 9.0 / 8.0, 0.0, 0.0, 0.0]);
        assert!(v.iter().any(|x| (x - &target).amax() < 1e-12));
        for x in &v {
            assert!(inst.is_feasible(x));
        }
    }

    #[test]
    fn convex_simplex_minimum() {
        let inst = simplex(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = global_solve(&inst, &opts()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert_eq!(r.minimizers.len(), 1);
        assert!((r.minimizers[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn concave_simplex_minimum_at_vertices() {
        let inst = simplex(&[&[-1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, -1.0]]);
        let r = global_solve(&inst, &opts()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        assert_eq!(r.minimizers.len(), 3);
    }

    #[test]
    fn bilinear_simplex_minimum() {
        let inst = simplex(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = global_solve(&inst, &opts()).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert_eq!(r.minimizers.len(), 2);
    }

    #[test]
    fn infeasible_global_value() {
        let inst = QpInstance::from_rows("inf", &[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], &[vec![1.0, 1.0]], &[-1.0]).unwrap();
        let r = global_solve(&inst, &opts()).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert!(!r.attained);
    }

    #[test]
    fn negative_curvature_ray_is_unbounded() {
        let inst = QpInstance::from_rows("ray", &[vec![-1.0, 0.0], vec![0.0, -1.0]], &[0.0, 0.0], &[vec![1.0, -1.0]], &[1.0]).unwrap();
        let r = global_solve(&inst, &opts()).unwrap();
        assert_eq!(r.value, f64::NEG_INFINITY);
        let verdict = r.unboundedness.unwrap();
        assert_eq!(verdict.status, UnboundednessStatus::Case1);
        let d = verdict.direction.unwrap();
        assert!((d[0] - d[1]).abs() < 1e-12 && d[0] > 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let o = OracleOptions { enum_cap: 2, tol: 1e-9 };
        let inst = simplex(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(matches!(global_solve(&inst, &o), Err(QpError::DeskScaleLimit { n: 3, cap: 2 })));
    }

    #[test]
    fn local_min_at_bilinear_vertex() {
        let inst = simplex(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let v = verify_local_minimizer(&inst, &DVector::from_vec(vec![1.0, 0.0]), 1e-9, &opts()).unwrap();
        assert!(v.is_local_min);
        let kkt = v.kkt.unwrap();
        assert!(kkt.y[0].abs() < 1e-12);
        assert!(kkt.s[0].abs() < 1e-12 && (kkt.s[1] - 1.0).abs() < 1e-12);
        assert!(v.second_order_min.abs() < 1e-12);
    }

    #[test]
    fn convex_interior_minimum_is_local_min() {
        let inst = simplex(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let v = verify_local_minimizer(&inst, &DVector::from_vec(vec![0.5, 0.5]), 1e-9, &opts()).unwrap();
        assert!(v.is_local_min);
    }

    #[test]
    fn concave_midpoint_fails_second_order() {
        let inst = simplex(&[&[-1.0, 0.0], &[0.0, -1.0]]);
        let v = verify_local_minimizer(&inst, &DVector::from_vec(vec![0.5, 0.5]), 1e-9, &opts()).unwrap();
        assert!(!v.is_local_min);
        let kkt = v.kkt.expect("first-order conditions hold");
        assert!((kkt.y[0] + 0.5).abs() < 1e-12);
        assert!(kkt.s.amax() < 1e-12);
        // d = (1, -1) lies in the critical cone with d'Qd = -2.
        assert!((v.second_order_min + 2.0).abs() < 1e-9);
    }

    #[test]
    fn local_min_requires_feasible_point() {
        let inst = simplex(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let err = verify_local_minimizer(&inst, &DVector::from_vec(vec![0.5, 0.7]), 1e-9, &opts()).unwrap_err();
        assert!(matches!(err, QpError::PointInfeasible { .. }));
    }
}
