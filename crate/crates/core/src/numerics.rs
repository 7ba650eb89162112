//! Dense symmetric linear algebra: spectral decomposition, nullspaces, cone
//! projections and the affine projector for the lifted constraint rows.
//!
//! All matrices here are small (a few dozen rows at most), so everything is
//! dense and recomputed on demand.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{QpError, Result};

/// Relative singular-value threshold used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// Spectral decomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: DVector<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn min_value(&self) -> f64 {
        self.values.get(0).copied().unwrap_or(0.0)
    }

    /// `V diag(f(values)) V'`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let k = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..k {
            let w = f(self.values[j]);
            scaled.column_mut(j).scale_mut(w);
        }
        let mut out = scaled * self.vectors.transpose();
        symmetrize_in_place(&mut out);
        out
    }
}

/// Full eigendecomposition of a symmetric matrix. Only the lower triangle
/// is read.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(QpError::NonFinite("matrix passed to sym_eigen"));
    }
    if m.nrows() != m.ncols() {
        return Err(QpError::DimensionMismatch(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let k = m.nrows();
    if k == 0 {
        return Ok(EigenDecomposition {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(k, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
/// `rel * |lambda|_max` in magnitude are treated as zero.
pub(crate) fn sym_pinv(m: &DMatrix<f64>, rel: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let cut = rel * eig.values.amax();
    Ok(eig.reassemble(|v| if v.abs() > cut { 1.0 / v } else { 0.0 }))
}

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigen(m)?.min_value())
}

/// Orthonormal basis (as columns) of the nullspace of `a`. Rank is decided
/// by singular values above `tol * sigma_max`.
pub fn nullspace_basis(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad with zero rows so the SVD returns a full set of right singular
    // vectors; zero rows do not change the nullspace.
    let rows = m.max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma_max = svd.singular_values.max();
    let threshold = if sigma_max > 0.0 { tol * sigma_max } else { 0.0 };
    let null_rows: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| sigma_max == 0.0 || svd.singular_values[i] <= threshold)
        .collect();
    let mut basis = DMatrix::zeros(n, null_rows.len());
    for (col, &i) in null_rows.iter().enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    basis
}

/// Numerical rank with the same threshold rule as [`nullspace_basis`].
pub fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * max).count()
}

/// Cones handled by [`project_cone`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeProjection {
    /// Positive semidefinite matrices.
    Psd,
    /// Entrywise nonnegative matrices.
    Nonneg,
    /// Nonnegativity on row and column 0 only.
    Row0Nonneg,
}

/// Frobenius-nearest point of the cone.
pub fn project_cone(m: &DMatrix<f64>, cone: ConeProjection) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(QpError::NonFinite("matrix passed to project_cone"));
    }
    Ok(match cone {
        ConeProjection::Psd => project_psd(m)?,
        ConeProjection::Nonneg => m.map(|v| v.max(0.0)),
        ConeProjection::Row0Nonneg => {
            let mut out = m.clone();
            for j in 0..m.ncols() {
                out[(0, j)] = out[(0, j)].max(0.0);
                out[(j, 0)] = out[(j, 0)].max(0.0);
            }
            out
        }
    })
}

pub(crate) fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    Ok(eig.reassemble(|v| v.max(0.0)))
}

/// Projection onto `{G psd, trace(G) = 1}`: eigenvalues are projected onto
/// the probability simplex.
pub(crate) fn project_psd_unit_trace(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let shift = simplex_shift(eig.values.as_slice(), 1.0);
    Ok(eig.reassemble(|v| (v - shift).max(0.0)))
}

/// The scalar `t` such that `sum max(v_i - t, 0) = total`.
pub(crate) fn simplex_shift(values: &[f64], total: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = (sorted.iter().sum::<f64>() - total) / sorted.len() as f64;
    for (i, v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - total) / (i + 1) as f64;
        if i + 1 == sorted.len() || sorted[i + 1] <= t {
            shift = t;
            break;
        }
    }
    shift
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Frobenius inner product.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Frobenius projector onto the affine set of symmetric matrices
/// `{Y : <Ahat, Y> = 0, Y00 = 1}`, optionally also pinning row 0 to
/// `(1, x)`.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    dim: usize,
    constraints: Vec<DMatrix<f64>>,
    rhs: DVector<f64>,
    gram_pinv: DMatrix<f64>,
    degenerate: bool,
}

impl AffineProjector {
    /// `ahat` is the `(n+1)x(n+1)` constraint matrix of the lifted problem.
    pub fn new(ahat: &DMatrix<f64>, pin: Option<&DVector<f64>>) -> Result<Self> {
        let dim = ahat.nrows();
        if let Some(x) = pin {
            if x.len() + 1 != dim {
                return Err(QpError::DimensionMismatch(format!(
                    "pin has length {} but the lifted dimension is {dim}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(QpError::NonFinite("pinned point"));
            }
        }
        let mut constraints = vec![ahat.clone()];
        let mut rhs = vec![0.0];
        let mut e00 = DMatrix::zeros(dim, dim);
        e00[(0, 0)] = 1.0;
        constraints.push(e00);
        rhs.push(1.0);
        if let Some(x) = pin {
            for j in 0..x.len() {
                let mut e = DMatrix::zeros(dim, dim);
                e[(0, j + 1)] = 0.5;
                e[(j + 1, 0)] = 0.5;
                constraints.push(e);
                rhs.push(x[j]);
            }
        }
        let k = constraints.len();
        let gram = DMatrix::from_fn(k, k, |i, j| frob_dot(&constraints[i], &constraints[j]));
        let sv = gram.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        let degenerate = max == 0.0 || min <= 1e-12 * max;
        if degenerate {
            log::warn!("affine projector: constraint Gram matrix is numerically singular; using least-norm correction");
        }
        let gram_pinv = sym_pinv(&gram, 1e-12)?;
        Ok(Self {
            dim,
            constraints,
            rhs: DVector::from_vec(rhs),
            gram_pinv,
            degenerate,
        })
    }

    /// True when the constraint rows were linearly dependent.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let resid = DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .zip(self.rhs.iter())
                .map(|(g, h)| frob_dot(g, m) - h),
        );
        let mu = &self.gram_pinv * resid;
        let mut out = m.clone();
        for (g, w) in self.constraints.iter().zip(mu.iter()) {
            out -= g * *w;
        }
        symmetrize_in_place(&mut out);
        out
    }

    /// Largest absolute constraint violation of `m`.
    pub fn violation(&self, m: &DMatrix<f64>) -> f64 {
        self.constraints
            .iter()
            .zip(self.rhs.iter())
            .map(|(g, h)| (frob_dot(g, m) - h).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&DMatrix::identity(3, 3)).unwrap();
        assert_abs_diff_eq!(e.values, DVector::from_element(3, 1.0), epsilon = 1e-14);

        let e = sym_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 5.0]))).unwrap();
        assert_abs_diff_eq!(e.values, DVector::from_vec(vec![-2.0, 5.0]), epsilon = 1e-14);

        let e = sym_eigen(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(e.values, DVector::from_vec(vec![-1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn eigen_rejects_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(sym_eigen(&m), Err(QpError::NonFinite(_))));
    }

    #[test]
    fn nullspace_examples() {
        let n = nullspace_basis(&DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), RANK_TOL);
        assert_eq!(n.ncols(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(n[(0, 0)].abs(), s, epsilon = 1e-14);
        assert_abs_diff_eq!(n[(0, 0)] + n[(1, 0)], 0.0, epsilon = 1e-14);

        let n = nullspace_basis(&DMatrix::identity(4, 4), RANK_TOL);
        assert_eq!(n.ncols(), 0);

        let horn_a = DMatrix::from_row_slice(1, 5, &[-12.0, 8.0, -3.0, 4.0, 4.0]);
        let n = nullspace_basis(&horn_a, RANK_TOL);
        assert_eq!(n.ncols(), 4);
        assert!((&horn_a * &n).norm() < 1e-12);
        assert_abs_diff_eq!(n.transpose() * &n, DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn nullspace_of_zero_matrix_is_everything() {
        let n = nullspace_basis(&DMatrix::zeros(2, 3), RANK_TOL);
        assert_eq!(n.ncols(), 3);
    }

    #[test]
    fn cone_projection_examples() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0]));
        let p = project_cone(&m, ConeProjection::Psd).unwrap();
        assert_abs_diff_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0])), epsilon = 1e-14);

        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, -3.0, 1.0]);
        let p = project_cone(&m, ConeProjection::Nonneg).unwrap();
        assert_eq!(p, DMatrix::identity(2, 2));

        let mut m = DMatrix::from_element(3, 3, 1.0);
        m[(0, 2)] = -5.0;
        m[(2, 0)] = -5.0;
        m[(1, 2)] = -5.0;
        m[(2, 1)] = -5.0;
        let p = project_cone(&m, ConeProjection::Row0Nonneg).unwrap();
        assert_eq!(p[(0, 2)], 0.0);
        assert_eq!(p[(2, 0)], 0.0);
        assert_eq!(p[(1, 2)], -5.0);
    }

    #[test]
    fn unit_trace_projection() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 0.5]));
        let p = project_psd_unit_trace(&m).unwrap();
        assert_abs_diff_eq!(p.trace(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[(0, 0)], 1.0, epsilon = 1e-14);

        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5, 0.5]));
        let p = project_psd_unit_trace(&m).unwrap();
        assert_abs_diff_eq!(p[(2, 2)], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn affine_projector_forces_corner() {
        let ahat = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0]);
        let proj = AffineProjector::new(&ahat, None).unwrap();
        let y = proj.apply(&DMatrix::zeros(3, 3));
        assert_abs_diff_eq!(y[(0, 0)], 1.0, epsilon = 1e-12);
        assert!(proj.violation(&y) < 1e-12);
        let again = proj.apply(&y);
        assert_abs_diff_eq!(again, y, epsilon = 1e-12);
    }

    #[test]
    fn affine_projector_pin_dimension_checked() {
        let ahat = DMatrix::zeros(3, 3);
        let err = AffineProjector::new(&ahat, Some(&DVector::zeros(3))).unwrap_err();
        assert!(matches!(err, QpError::DimensionMismatch(_)));
    }
}
