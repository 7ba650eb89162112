//! Problem data for `min x'Qx + 2c'x  s.t.  Ax = b, x >= 0` and the plain
//! evaluations on it: objective, feasibility, recession membership and the
//! positive/zero index split of a point.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};

/// Relative feasibility tolerance: `|Ax - b|_inf <= FEAS_TOL * (1 + |b|_inf)`
/// and `x >= -FEAS_TOL`.
pub const FEAS_TOL: f64 = 1e-8;

/// A quadratic program in standard equality form.
#[derive(Debug, Clone, PartialEq)]
pub struct QpInstance {
    name: String,
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    warnings: Vec<String>,
}

/// Options applied while validating raw data.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Replace `Q` by `(Q + Q')/2` instead of rejecting an asymmetric `Q`.
    pub symmetrize: bool,
}

impl QpInstance {
    /// Builds a validated instance. `Q` must be exactly symmetric.
    pub fn new(
        name: impl Into<String>,
        q: DMatrix<f64>,
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        Self::with_options(name, q, c, a, b, LoadOptions::default())
    }

    pub fn with_options(
        name: impl Into<String>,
        q: DMatrix<f64>,
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        opts: LoadOptions,
    ) -> Result<Self> {
        let n = c.len();
        let m = b.len();
        if n == 0 {
            return Err(QpError::DimensionMismatch("n must be positive".into()));
        }
        if m == 0 {
            return Err(QpError::DimensionMismatch("m must be positive".into()));
        }
        if q.nrows() != n || q.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "Q is {}x{} but c has length {n}",
                q.nrows(),
                q.ncols()
            )));
        }
        if a.nrows() != m || a.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "A is {}x{} but expected {m}x{n} (b has length {m}, c has length {n})",
                a.nrows(),
                a.ncols()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("Q"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("c"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("A"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("b"));
        }

        let mut q = q;
        let mut warnings = Vec::new();
        if let Some((row, col)) = first_asymmetry(&q) {
            if !opts.symmetrize {
                return Err(QpError::AsymmetricQ {
                    row,
                    col,
                    upper: q[(row, col)],
                    lower: q[(col, row)],
                });
            }
            q = (&q + q.transpose()) * 0.5;
            warnings.push(format!(
                "Q was not symmetric (first at [{row}][{col}]); replaced by (Q + Q^T)/2"
            ));
        }

        Ok(Self {
            name: name.into(),
            q,
            c,
            a,
            b,
            warnings,
        })
    }

    /// Builds an instance from row-major nested vectors.
    pub fn from_rows(
        name: impl Into<String>,
        q: &[Vec<f64>],
        c: &[f64],
        a: &[Vec<f64>],
        b: &[f64],
    ) -> Result<Self> {
        let n = c.len();
        let q = matrix_from_rows(q, n, "Q")?;
        let a = matrix_from_rows(a, n, "A")?;
        Self::new(
            name,
            q,
            DVector::from_column_slice(c),
            a,
            DVector::from_column_slice(b),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Warnings attached during validation (e.g. symmetrization).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Largest absolute entry over all data, floored at 1.
    pub fn scale(&self) -> f64 {
        let m = [&self.q, &self.a]
            .iter()
            .flat_map(|mat| mat.iter())
            .chain(self.c.iter())
            .chain(self.b.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        m.max(1.0)
    }

    /// `x'Qx + 2c'x`.
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_len(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("x"));
        }
        Ok(self.objective_unchecked(x))
    }

    pub(crate) fn objective_unchecked(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.q * x)[(0, 0)] + 2.0 * self.c.dot(x)
    }

    /// `Qx + c`, half the objective gradient.
    pub fn half_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }

    /// `|Ax - b|_inf`.
    pub fn equality_residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).amax()
    }

    /// Combined infeasibility measure: the larger of the scaled equality
    /// residual and the most negative component.
    pub fn infeasibility(&self, x: &DVector<f64>) -> f64 {
        let eq = self.equality_residual(x) / (1.0 + self.b.amax());
        let neg = x.iter().fold(0.0_f64, |acc, v| acc.max(-v));
        eq.max(neg)
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        self.is_feasible_within(x, FEAS_TOL)
    }

    pub fn is_feasible_within(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.n() && self.infeasibility(x) <= tol
    }

    /// Membership of `d` in the recession cone `{Ad = 0, d >= 0}`, with the
    /// equality residual measured relative to `1 + |A|_max * |d|_inf`.
    pub fn is_recession_direction(&self, d: &DVector<f64>, tol: f64) -> bool {
        if d.len() != self.n() {
            return false;
        }
        let scale = 1.0 + self.a.amax() * d.amax();
        (&self.a * d).amax() <= tol * scale && d.iter().all(|v| *v >= -tol)
    }

    pub(crate) fn check_len(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n() {
            return Err(QpError::DimensionMismatch(format!(
                "vector has length {} but n = {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Reads an instance file (see [`InstanceFile`]).
    pub fn load(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| QpError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, opts)
    }

    pub fn from_json(text: &str, opts: LoadOptions) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| QpError::Parse(e.to_string()))?;
        file.into_instance(opts)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            name: self.name.clone(),
            n: self.n(),
            m: self.m(),
            q: rows_of(&self.q),
            c: self.c.iter().copied().collect(),
            a: rows_of(&self.a),
            b: self.b.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| QpError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// On-disk JSON layout of an instance. Matrices are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl InstanceFile {
    pub fn into_instance(self, opts: LoadOptions) -> Result<QpInstance> {
        let (n, m) = (self.n, self.m);
        if self.c.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "c has length {} but n = {n}",
                self.c.len()
            )));
        }
        if self.b.len() != m {
            return Err(QpError::DimensionMismatch(format!(
                "b has length {} but m = {m}",
                self.b.len()
            )));
        }
        if self.q.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "Q has {} rows but n = {n}",
                self.q.len()
            )));
        }
        if self.a.len() != m {
            return Err(QpError::DimensionMismatch(format!(
                "A has {} rows but m = {m}",
                self.a.len()
            )));
        }
        let q = matrix_from_rows(&self.q, n, "Q")?;
        let a = matrix_from_rows(&self.a, n, "A")?;
        QpInstance::with_options(
            self.name,
            q,
            DVector::from_vec(self.c),
            a,
            DVector::from_vec(self.b),
            opts,
        )
    }
}

/// Reads a bare JSON array of numbers, the format used for points passed
/// on the command line.
pub fn load_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| QpError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let v: Vec<f64> = serde_json::from_str(&text).map_err(|e| QpError::Parse(e.to_string()))?;
    Ok(DVector::from_vec(v))
}

/// Split of `{0..n-1}` into strictly positive and (numerically) zero
/// components. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSets {
    pub positive: Vec<usize>,
    pub zero: Vec<usize>,
    pub tolerance: f64,
}

/// Classifies the components of a nonnegative point: `x_j > tol` is
/// positive, everything else is zero.
pub fn index_sets(x: &DVector<f64>, tol: f64) -> Result<IndexSets> {
    let mut positive = Vec::new();
    let mut zero = Vec::new();
    for (j, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(QpError::NonFinite("x"));
        }
        if v < -tol {
            return Err(QpError::NegativeComponent { index: j, value: v });
        }
        if v > tol {
            positive.push(j);
        } else {
            zero.push(j);
        }
    }
    Ok(IndexSets {
        positive,
        zero,
        tolerance: tol,
    })
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(QpError::DimensionMismatch(format!(
                "{what} row {i} has length {} but expected {ncols}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn first_asymmetry(q: &DMatrix<f64>) -> Option<(usize, usize)> {
    let n = q.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if q[(i, j)] != q[(j, i)] {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex2(q: [[f64; 2]; 2]) -> QpInstance {
        QpInstance::from_rows(
            "s2",
            &[q[0].to_vec(), q[1].to_vec()],
            &[0.0, 0.0],
            &[vec![1.0, 1.0]],
            &[1.0],
        )
        .unwrap()
    }

    #[test]
    fn objective_identity_midpoint() {
        let inst = simplex2([[1.0, 0.0], [0.0, 1.0]]);
        let v = inst.objective(&DVector::from_vec(vec![0.5, 0.5])).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn objective_rejects_wrong_length() {
        let inst = simplex2([[1.0, 0.0], [0.0, 1.0]]);
        let err = inst.objective(&DVector::zeros(3)).unwrap_err();
        assert!(matches!(err, QpError::DimensionMismatch(_)));
    }

    #[test]
    fn asymmetric_q_is_rejected_unless_symmetrized() {
        let text = r#"{"name":"asym","n":3,"m":1,
            "Q":[[1,0,0],[0,1,1],[0,0,1]],"c":[0,0,0],"A":[[1,1,1]],"b":[1]}"#;
        let err = QpInstance::from_json(text, LoadOptions::default()).unwrap_err();
        assert!(matches!(err, QpError::AsymmetricQ { row: 1, col: 2, .. }));

        let inst = QpInstance::from_json(text, LoadOptions { symmetrize: true }).unwrap();
        assert_eq!(inst.q()[(1, 2)], 0.5);
        assert_eq!(inst.q()[(2, 1)], 0.5);
        assert_eq!(inst.warnings().len(), 1);
    }

    #[test]
    fn mismatched_b_is_rejected() {
        let text = r#"{"name":"bad","n":3,"m":2,
            "Q":[[1,0,0],[0,1,0],[0,0,1]],"c":[0,0,0],"A":[[1,1,1],[1,0,0]],"b":[1]}"#;
        let err = QpInstance::from_json(text, LoadOptions::default()).unwrap_err();
        assert!(matches!(err, QpError::DimensionMismatch(_)));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = QpInstance::from_json("{\"name\": 3", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, QpError::Parse(_)));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let err = QpInstance::new(
            "nan",
            DMatrix::from_element(1, 1, f64::NAN),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, QpError::NonFinite("Q")));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let inst = QpInstance::from_rows(
            "rt",
            &[vec![0.1, -1.0 / 3.0], vec![-1.0 / 3.0, 2.5e-7]],
            &[1e300, -0.0],
            &[vec![3.0, std::f64::consts::PI]],
            &[7.25],
        )
        .unwrap();
        let back = QpInstance::from_json(&inst.to_json(), LoadOptions::default()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn index_sets_examples() {
        let s = index_sets(&DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 0.0]), 1e-9).unwrap();
        assert_eq!(s.positive, vec![1, 2, 3]);
        assert_eq!(s.zero, vec![0, 4]);

        let s = index_sets(&DVector::zeros(4), 1e-9).unwrap();
        assert!(s.positive.is_empty());
        assert_eq!(s.zero, vec![0, 1, 2, 3]);

        let s = index_sets(&DVector::from_vec(vec![1e-12, 1.0]), 1e-9).unwrap();
        assert_eq!(s.positive, vec![1]);
        assert_eq!(s.zero, vec![0]);
    }

    #[test]
    fn index_sets_reject_negative() {
        let err = index_sets(&DVector::from_vec(vec![1.0, -1e-3]), 1e-9).unwrap_err();
        assert!(matches!(err, QpError::NegativeComponent { index: 1, .. }));
    }

    #[test]
    fn feasibility_is_scaled() {
        let inst = simplex2([[1.0, 0.0], [0.0, 1.0]]);
        assert!(inst.is_feasible(&DVector::from_vec(vec![0.5, 0.5 + 1e-9])));
        assert!(!inst.is_feasible(&DVector::from_vec(vec![0.5, 0.6])));
        assert!(!inst.is_feasible(&DVector::from_vec(vec![1.1, -0.1])));
    }
}
