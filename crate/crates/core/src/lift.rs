//! Lifting of an instance to the `(n+1)x(n+1)` matrix space and the checks
//! that characterize feasible lifted points.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};
use crate::instance::{rows_of, QpInstance, FEAS_TOL};
use crate::numerics::{frob_dot, min_eigenvalue};

/// Cone of the lifted problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeKind {
    /// Doubly nonnegative: PSD and entrywise nonnegative.
    Dnn,
    /// PSD with nonnegative row/column 0.
    Psd0,
}

impl ConeKind {
    pub const ALL: [ConeKind; 2] = [ConeKind::Dnn, ConeKind::Psd0];

    pub fn as_str(self) -> &'static str {
        match self {
            ConeKind::Dnn => "dnn",
            ConeKind::Psd0 => "psd0",
        }
    }

    /// Whether entry `(i, j)` is sign-constrained in this cone.
    pub(crate) fn entry_nonneg(self, i: usize, j: usize) -> bool {
        match self {
            ConeKind::Dnn => true,
            ConeKind::Psd0 => i == 0 || j == 0,
        }
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConeKind {
    type Err = QpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dnn" => Ok(ConeKind::Dnn),
            "psd0" | "p" => Ok(ConeKind::Psd0),
            other => Err(QpError::Parse(format!("unknown cone '{other}' (expected dnn or psd0)"))),
        }
    }
}

/// Objective and constraint matrices of the lifted problem
/// `min <Qhat, Y>  s.t.  <Ahat, Y> = 0, Y00 = 1, Y in K`.
#[derive(Debug, Clone)]
pub struct LiftedProblem {
    pub qhat: DMatrix<f64>,
    pub ahat: DMatrix<f64>,
    pub cone: ConeKind,
    pub n: usize,
}

/// `Qhat = [0 c'; c Q]`, `Ahat = [b'; -A'][b'; -A']'`.
pub fn lift_instance(inst: &QpInstance, cone: ConeKind) -> LiftedProblem {
    LiftedProblem {
        qhat: lifted_objective(inst),
        ahat: lifted_constraint(inst),
        cone,
        n: inst.n(),
    }
}

pub(crate) fn lifted_objective(inst: &QpInstance) -> DMatrix<f64> {
    let n = inst.n();
    let mut qhat = DMatrix::zeros(n + 1, n + 1);
    qhat.view_mut((1, 1), (n, n)).copy_from(inst.q());
    for j in 0..n {
        qhat[(0, j + 1)] = inst.c()[j];
        qhat[(j + 1, 0)] = inst.c()[j];
    }
    qhat
}

/// The `(n+1) x m` factor `W = [b'; -A']` with `Ahat = W W'`.
pub(crate) fn constraint_factor(inst: &QpInstance) -> DMatrix<f64> {
    let (n, m) = (inst.n(), inst.m());
    let mut w = DMatrix::zeros(n + 1, m);
    for i in 0..m {
        w[(0, i)] = inst.b()[i];
        for j in 0..n {
            w[(j + 1, i)] = -inst.a()[(i, j)];
        }
    }
    w
}

pub(crate) fn lifted_constraint(inst: &QpInstance) -> DMatrix<f64> {
    let w = constraint_factor(inst);
    &w * w.transpose()
}

/// `[1; x][1; x]'`.
pub fn rank_one_lift(x: &DVector<f64>) -> DMatrix<f64> {
    let v = homogenize(x);
    &v * v.transpose()
}

pub(crate) fn homogenize(x: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(x.len() + 1);
    v[0] = 1.0;
    v.rows_mut(1, x.len()).copy_from(x);
    v
}

/// A symmetric `(n+1)x(n+1)` matrix in the lifted space.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub y: DMatrix<f64>,
}

impl LiftedPoint {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if y.nrows() != y.ncols() || y.nrows() < 2 {
            return Err(QpError::DimensionMismatch(format!(
                "lifted point must be square with at least 2 rows, got {}x{}",
                y.nrows(),
                y.ncols()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("lifted point"));
        }
        Ok(Self { y })
    }

    pub fn rank_one(x: &DVector<f64>) -> Self {
        Self { y: rank_one_lift(x) }
    }

    pub fn n(&self) -> usize {
        self.y.nrows() - 1
    }

    /// Row 0 without its leading entry.
    pub fn x(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_iterator(n, (1..=n).map(|j| self.y[(0, j)]))
    }

    /// The lower-right `n x n` block.
    pub fn big_x(&self) -> DMatrix<f64> {
        let n = self.n();
        self.y.view((1, 1), (n, n)).into_owned()
    }

    /// `X - x x'`.
    pub fn delta(&self) -> DMatrix<f64> {
        let x = self.x();
        self.big_x() - &x * x.transpose()
    }

    /// Norm of the rows of `X - x x'` indexed by `rows`.
    pub fn zero_block_residual(&self, rows: &[usize]) -> f64 {
        let delta = self.delta();
        rows.iter()
            .map(|&i| delta.row(i).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_file(&self) -> LiftedPointFile {
        LiftedPointFile {
            n: self.n(),
            y: rows_of(&self.y),
        }
    }
}

/// JSON export of a lifted point; mirrors the instance layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedPointFile {
    pub n: usize,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<f64>>,
}

/// Outcome of checking a lifted point against the feasible-set
/// characterization.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// `Y00 = 1`.
    pub corner_is_one: bool,
    /// `x = Y[0][1:]` satisfies `Ax = b`, `x >= 0`.
    pub x_feasible: bool,
    /// `X - x x'` is PSD.
    pub delta_psd: bool,
    /// Columns of `X - x x'` lie in the nullspace of `A`.
    pub delta_in_nullspace: bool,
    /// `Y` belongs to the requested cone.
    pub in_cone: bool,
    pub tolerance: f64,
    pub corner_error: f64,
    pub x_infeasibility: f64,
    pub delta_min_eigenvalue: f64,
    pub a_delta_norm: f64,
    pub cone_violation: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.corner_is_one && self.x_feasible && self.delta_psd && self.delta_in_nullspace && self.in_cone
    }
}

/// Checks `Y` against the decomposition `Y = [1 x'; x xx' + D]` with `x`
/// feasible, `D` PSD and `AD = 0`, plus membership of `Y` in `cone`.
/// Tolerances are relative to `1 + |Y|_max`.
pub fn validate_lifted_point(
    inst: &QpInstance,
    point: &LiftedPoint,
    cone: ConeKind,
    tol: f64,
) -> Result<ValidationReport> {
    if point.n() != inst.n() {
        return Err(QpError::DimensionMismatch(format!(
            "lifted point has n = {} but instance has n = {}",
            point.n(),
            inst.n()
        )));
    }
    let y = &point.y;
    let scale = 1.0 + y.amax();
    let x = point.x();
    let delta = point.delta();

    let corner_error = (y[(0, 0)] - 1.0).abs();
    let x_infeasibility = inst.infeasibility(&x);
    let delta_min_eigenvalue = min_eigenvalue(&delta)?;
    let a_delta_norm = (inst.a() * &delta).norm();
    let a_scale = 1.0 + inst.a().amax();

    let psd_violation = (-min_eigenvalue(y)?).max(0.0);
    let sign_violation = (0..y.nrows())
        .flat_map(|i| (0..y.ncols()).map(move |j| (i, j)))
        .filter(|&(i, j)| cone.entry_nonneg(i, j))
        .map(|(i, j)| (-y[(i, j)]).max(0.0))
        .fold(0.0, f64::max);
    let cone_violation = psd_violation.max(sign_violation);

    Ok(ValidationReport {
        corner_is_one: corner_error <= tol,
        x_feasible: x_infeasibility <= tol * scale,
        delta_psd: delta_min_eigenvalue >= -tol * scale,
        delta_in_nullspace: a_delta_norm <= tol * scale * a_scale,
        in_cone: cone_violation <= tol * scale,
        tolerance: tol,
        corner_error,
        x_infeasibility,
        delta_min_eigenvalue,
        a_delta_norm,
        cone_violation,
    })
}

/// Convex combination of feasible points plus recession rays.
#[derive(Debug, Clone)]
pub struct MixtureCertificate {
    pub weights: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub rays: Vec<DVector<f64>>,
}

/// Assembles `sum_j w_j [1; x_j][1; x_j]' + sum_k [0; d_k][0; d_k]'`.
pub fn construct_lifted_from_mixture(inst: &QpInstance, mix: &MixtureCertificate) -> Result<LiftedPoint> {
    let n = inst.n();
    if mix.weights.len() != mix.points.len() {
        return Err(QpError::WeightsNotSimplex(format!(
            "{} weights for {} points",
            mix.weights.len(),
            mix.points.len()
        )));
    }
    if mix.points.is_empty() {
        return Err(QpError::WeightsNotSimplex("no points".into()));
    }
    if let Some((i, w)) = mix.weights.iter().enumerate().find(|(_, w)| !(**w >= -FEAS_TOL)) {
        return Err(QpError::WeightsNotSimplex(format!("weight {i} is {w}")));
    }
    let total: f64 = mix.weights.iter().sum();
    if (total - 1.0).abs() > FEAS_TOL * mix.weights.len() as f64 {
        return Err(QpError::WeightsNotSimplex(format!("weights sum to {total}")));
    }
    for (i, p) in mix.points.iter().enumerate() {
        inst.check_len(p)?;
        if !inst.is_feasible(p) {
            return Err(QpError::InfeasibleMixturePoint {
                index: i,
                residual: inst.infeasibility(p),
            });
        }
    }
    for (i, d) in mix.rays.iter().enumerate() {
        inst.check_len(d)?;
        if let Some((j, v)) = d.iter().enumerate().find(|(_, v)| **v < -FEAS_TOL) {
            return Err(QpError::RayNotInRecessionCone {
                index: i,
                reason: format!("component {j} is {v}"),
            });
        }
        if !inst.is_recession_direction(d, FEAS_TOL) {
            return Err(QpError::RayNotInRecessionCone {
                index: i,
                reason: format!("|Ad|_inf = {:e}", (inst.a() * d).amax()),
            });
        }
    }

    let mut y = DMatrix::zeros(n + 1, n + 1);
    for (w, p) in mix.weights.iter().zip(&mix.points) {
        y += rank_one_lift(p) * *w;
    }
    for d in &mix.rays {
        let mut v = DVector::zeros(n + 1);
        v.rows_mut(1, n).copy_from(d);
        y += &v * v.transpose();
    }
    LiftedPoint::new(y)
}

/// `<Qhat, Y>`.
pub fn lifted_objective_value(lp: &LiftedProblem, point: &LiftedPoint) -> f64 {
    frob_dot(&lp.qhat, &point.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::horn_instance;

    fn simplex(n: usize, q: DMatrix<f64>) -> QpInstance {
        QpInstance::new(
            "simplex",
            q,
            DVector::zeros(n),
            DMatrix::from_element(1, n, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn horn_lift_layout() {
        let (inst, _) = horn_instance();
        let lp = lift_instance(&inst, ConeKind::Dnn);
        assert_eq!(lp.qhat[(0, 0)], 0.0);
        for j in 1..=5 {
            assert_eq!(lp.qhat[(0, j)], 1.0);
        }
        assert_eq!(lp.ahat[(0, 0)], 81.0);
        assert!(min_eigenvalue(&lp.ahat).unwrap() >= -1e-10 * lp.ahat.amax());
    }

    #[test]
    fn zero_rhs_gives_zero_corner_row() {
        let inst = QpInstance::from_rows("z", &[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], &[vec![1.0, -1.0]], &[0.0]).unwrap();
        let lp = lift_instance(&inst, ConeKind::Psd0);
        for j in 0..3 {
            assert_eq!(lp.ahat[(0, j)], 0.0);
        }
    }

    #[test]
    fn rank_one_lift_validates_in_both_cones() {
        let (inst, _) = horn_instance();
        let x = DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        let point = LiftedPoint::rank_one(&x);
        for cone in ConeKind::ALL {
            let rep = validate_lifted_point(&inst, &point, cone, 1e-9).unwrap();
            assert!(rep.all_pass(), "{cone}: {rep:?}");
        }
        assert!(point.delta().amax() < 1e-15);
    }

    #[test]
    fn infeasible_row_zero_fails_feasibility_check() {
        let (inst, _) = horn_instance();
        let x = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0, 1.0]);
        let rep = validate_lifted_point(&inst, &LiftedPoint::rank_one(&x), ConeKind::Dnn, 1e-9).unwrap();
        assert!(rep.corner_is_one);
        assert!(!rep.x_feasible);
    }

    #[test]
    fn horn_outer_product_directions_give_a_valid_lift() {
        // The three directions listed with the Horn data all lie in null(A),
        // so adding the sum of their outer products keeps the point feasible
        // for the lifted problem over PSD0.
        let (inst, _) = horn_instance();
        let x = DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        let dirs = [
            [1.0, 1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 4.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, -1.0, -1.0],
        ];
        let mut y = rank_one_lift(&x);
        for d in dirs {
            let mut v = DVector::zeros(6);
            v.rows_mut(1, 5).copy_from_slice(&d);
            y += &v * v.transpose();
        }
        let rep = validate_lifted_point(&inst, &LiftedPoint::new(y).unwrap(), ConeKind::Dnn, 1e-9).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn printed_horn_certificate_is_not_in_the_nullspace() {
        let (inst, d) = horn_instance();
        let x = DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        let mut y = rank_one_lift(&x);
        let mut block = y.view_mut((1, 1), (5, 5));
        block += d.map(|v| v as f64);
        let rep = validate_lifted_point(&inst, &LiftedPoint::new(y).unwrap(), ConeKind::Dnn, 1e-9).unwrap();
        assert!(rep.delta_psd);
        assert!(!rep.delta_in_nullspace);
    }

    #[test]
    fn lifted_objective_matches_direct_evaluation() {
        let (inst, _) = horn_instance();
        let lp = lift_instance(&inst, ConeKind::Dnn);
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5, 4.0]);
        let lifted = lifted_objective_value(&lp, &LiftedPoint::rank_one(&x));
        assert!((lifted - inst.objective(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixture_single_point() {
        let inst = simplex(3, DMatrix::identity(3, 3));
        let x = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let mix = MixtureCertificate {
            weights: vec![1.0],
            points: vec![x.clone()],
            rays: vec![],
        };
        let p = construct_lifted_from_mixture(&inst, &mix).unwrap();
        assert_eq!(p.y, rank_one_lift(&x));
    }

    #[test]
    fn mixture_midpoint_of_vertices() {
        let inst = simplex(2, DMatrix::identity(2, 2));
        let mix = MixtureCertificate {
            weights: vec![0.5, 0.5],
            points: vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])],
            rays: vec![],
        };
        let p = construct_lifted_from_mixture(&inst, &mix).unwrap();
        assert_eq!(p.x(), DVector::from_vec(vec![0.5, 0.5]));
        let rep = validate_lifted_point(&inst, &p, ConeKind::Dnn, 1e-9).unwrap();
        assert!(rep.all_pass());
    }

    #[test]
    fn mixture_rejects_signed_ray() {
        let (inst, _) = horn_instance();
        let x = DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        let mix = MixtureCertificate {
            weights: vec![1.0],
            points: vec![x],
            rays: vec![
                DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0, 1.0]),
                DVector::from_vec(vec![0.0, 1.0, 4.0, 1.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0, 0.0, -1.0, -1.0]),
            ],
        };
        let err = construct_lifted_from_mixture(&inst, &mix).unwrap_err();
        assert!(matches!(err, QpError::RayNotInRecessionCone { index: 2, .. }));
    }

    #[test]
    fn mixture_rejects_bad_weights_and_points() {
        let inst = simplex(2, DMatrix::identity(2, 2));
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let mix = MixtureCertificate {
            weights: vec![0.7, 0.7],
            points: vec![e1.clone(), e1.clone()],
            rays: vec![],
        };
        assert!(matches!(
            construct_lifted_from_mixture(&inst, &mix),
            Err(QpError::WeightsNotSimplex(_))
        ));
        let mix = MixtureCertificate {
            weights: vec![1.0],
            points: vec![DVector::from_vec(vec![2.0, 0.0])],
            rays: vec![],
        };
        assert!(matches!(
            construct_lifted_from_mixture(&inst, &mix),
            Err(QpError::InfeasibleMixturePoint { index: 0, .. })
        ));
    }
}
