//! Instance generators: the Horn instance, the Horn block family with
//! certified copositive tails, and seeded random families.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`, drawing integers with `gen_range` over the fixed
//! ranges documented on each generator.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::analyze_recession_cone;
use crate::error::{QpError, Result};
use crate::instance::QpInstance;
use crate::numerics::{min_eigenvalue, nullspace_basis, sym_eigen, RANK_TOL};
use crate::oracle::{basic_solutions, OracleOptions};

/// The 5x5 Horn matrix.
pub const HORN_Q: [[i64; 5]; 5] = [
    [1, -1, 1, 1, -1],
    [-1, 1, -1, 1, 1],
    [1, -1, 1, -1, 1],
    [1, 1, -1, 1, -1],
    [-1, 1, 1, -1, 1],
];
pub const HORN_C: [i64; 5] = [1, 1, 1, 1, 1];
pub const HORN_A: [i64; 5] = [-12, 8, -3, 4, 4];
pub const HORN_B: i64 = 9;
/// The certificate matrix printed with the Horn instance.
pub const HORN_D: [[i64; 5]; 5] = [
    [7, 4, 0, 0, 4],
    [4, 7, 4, 0, 0],
    [0, 4, 7, 4, 0],
    [0, 0, 4, 7, 4],
    [4, 0, 0, 4, 7],
];
/// The feasible point printed with the Horn instance.
pub const HORN_POINT: [i64; 5] = [0, 1, 1, 1, 0];

/// Integer data of an instance, kept alongside the floating-point copy for
/// exact checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegerData {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<i64>>,
    pub c: Vec<i64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
}

impl IntegerData {
    pub fn to_instance(&self, name: &str) -> Result<QpInstance> {
        let f = |rows: &[Vec<i64>]| -> Vec<Vec<f64>> { rows.iter().map(|r| r.iter().map(|v| *v as f64).collect()).collect() };
        let c: Vec<f64> = self.c.iter().map(|v| *v as f64).collect();
        let b: Vec<f64> = self.b.iter().map(|v| *v as f64).collect();
        QpInstance::from_rows(name, &f(&self.q), &c, &f(&self.a), &b)
    }

    /// `(<Q, D>, <A'A, D>)` in exact integer arithmetic.
    pub fn certificate_products(&self, d: &[Vec<i64>]) -> (i64, i64) {
        let n = self.c.len();
        let mut qd = 0;
        let mut aad = 0;
        for i in 0..n {
            for j in 0..n {
                qd += self.q[i][j] * d[i][j];
                let ata: i64 = self.a.iter().map(|row| row[i] * row[j]).sum();
                aad += ata * d[i][j];
            }
        }
        (qd, aad)
    }

    /// `A D` in exact integer arithmetic.
    pub fn a_times(&self, d: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let n = self.c.len();
        self.a
            .iter()
            .map(|row| (0..n).map(|j| (0..n).map(|k| row[k] * d[k][j]).sum()).collect())
            .collect()
    }
}

pub fn horn_integer_data() -> IntegerData {
    IntegerData {
        q: HORN_Q.iter().map(|r| r.to_vec()).collect(),
        c: HORN_C.to_vec(),
        a: vec![HORN_A.to_vec()],
        b: vec![HORN_B],
    }
}

pub fn horn_certificate() -> Vec<Vec<i64>> {
    HORN_D.iter().map(|r| r.to_vec()).collect()
}

/// The Horn instance and its printed certificate matrix.
pub fn horn_instance() -> (QpInstance, DMatrix<i64>) {
    let inst = horn_integer_data().to_instance("horn5").expect("Horn data is consistent");
    let d = DMatrix::from_fn(5, 5, |i, j| HORN_D[i][j]);
    (inst, d)
}

/// An instance with its metadata side-file content.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: QpInstance,
    pub metadata: Value,
    pub integer: Option<IntegerData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TailMode {
    /// `M = W'W + N` with `N` entrywise nonnegative.
    PsdPlusNonneg,
}

/// Parameters of the Horn block family. Entries are drawn uniformly from the
/// inclusive integer ranges.
#[derive(Debug, Clone, Serialize)]
pub struct HornFamilyParams {
    pub n: usize,
    pub seed: u64,
    pub tail_mode: TailMode,
    pub b_range: (i64, i64),
    pub w_range: (i64, i64),
    pub nonneg_range: (i64, i64),
    pub f_range: (i64, i64),
    pub f_cap_range: (i64, i64),
}

impl HornFamilyParams {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            tail_mode: TailMode::PsdPlusNonneg,
            b_range: (0, 2),
            w_range: (-2, 2),
            nonneg_range: (0, 2),
            f_range: (0, 2),
            f_cap_range: (-3, 3),
        }
    }
}

/// Explicit tail blocks: `Q = [Qh B; B' W'W + N]`, `c = [e; f]`,
/// `A = [Ah F]`.
#[derive(Debug, Clone)]
pub struct HornTail {
    pub b: DMatrix<i64>,
    pub w: DMatrix<i64>,
    pub nonneg: DMatrix<i64>,
    pub f: DVector<i64>,
    pub f_cap: DVector<i64>,
}

impl HornTail {
    fn k(&self) -> usize {
        self.f.len()
    }

    fn check(&self) -> Result<()> {
        let k = self.k();
        let shapes_ok = self.b.shape() == (5, k)
            && self.w.ncols() == k
            && self.nonneg.shape() == (k, k)
            && self.f_cap.len() == k;
        if !shapes_ok {
            return Err(QpError::DimensionMismatch("Horn tail blocks".into()));
        }
        if self.b.iter().any(|v| *v < 0) || self.f.iter().any(|v| *v < 0) || self.nonneg.iter().any(|v| *v < 0) {
            return Err(QpError::InvalidDimension("B, f and N must be nonnegative".into()));
        }
        if self.nonneg != self.nonneg.transpose() {
            return Err(QpError::InvalidDimension("N must be symmetric".into()));
        }
        Ok(())
    }
}

/// Horn family member with tail drawn from `params`.
pub fn horn_family(params: &HornFamilyParams) -> Result<GeneratedInstance> {
    if params.n < 5 {
        return Err(QpError::InvalidDimension(format!("Horn family needs n >= 5, got {}", params.n)));
    }
    let k = params.n - 5;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut draw = |range: (i64, i64)| rng.gen_range(range.0..=range.1);
    let b = DMatrix::from_fn(5, k, |_, _| draw(params.b_range));
    let w = DMatrix::from_fn(k, k, |_, _| draw(params.w_range));
    let mut nonneg = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = draw(params.nonneg_range);
            nonneg[(i, j)] = v;
            nonneg[(j, i)] = v;
        }
    }
    let f = DVector::from_fn(k, |_, _| draw(params.f_range));
    let f_cap = DVector::from_fn(k, |_, _| draw(params.f_cap_range));
    let tail = HornTail { b, w, nonneg, f, f_cap };
    let mut out = horn_family_with_tail(&tail)?;
    out.instance = out.instance.renamed(format!("horn-family-n{}-s{}", params.n, params.seed));
    if let Value::Object(map) = &mut out.metadata {
        map.insert("seed".into(), json!(params.seed));
        map.insert("params".into(), serde_json::to_value(params).expect("serializable"));
    }
    Ok(out)
}

/// Horn family member with explicit tail blocks.
pub fn horn_family_with_tail(tail: &HornTail) -> Result<GeneratedInstance> {
    tail.check()?;
    let k = tail.k();
    let n = 5 + k;
    let m_block = tail.w.transpose() * &tail.w + &tail.nonneg;
    let mut q = vec![vec![0i64; n]; n];
    for i in 0..5 {
        for j in 0..5 {
            q[i][j] = HORN_Q[i][j];
        }
        for j in 0..k {
            q[i][5 + j] = tail.b[(i, j)];
            q[5 + j][i] = tail.b[(i, j)];
        }
    }
    for i in 0..k {
        for j in 0..k {
            q[5 + i][5 + j] = m_block[(i, j)];
        }
    }
    let mut c = HORN_C.to_vec();
    c.extend(tail.f.iter());
    let mut a = HORN_A.to_vec();
    a.extend(tail.f_cap.iter());
    let data = IntegerData {
        q,
        c,
        a: vec![a],
        b: vec![HORN_B],
    };
    let embedded = embedded_certificate(n);
    let (qd, aad) = data.certificate_products(&embedded);
    let instance = data.to_instance(&format!("horn-family-n{n}"))?;
    let metadata = json!({
        "kind": "horn-family",
        "n": n,
        "m": 1,
        "prng": PRNG_NAME,
        "tail_mode": TailMode::PsdPlusNonneg,
        "tail": {
            "W": rows_i64(&tail.w),
            "N": rows_i64(&tail.nonneg),
        },
        "certificate": {
            "D": embedded,
            "Q_dot_D": qd,
            "AtA_dot_D": aad,
        },
    });
    Ok(GeneratedInstance {
        instance,
        metadata,
        integer: Some(data),
    })
}

/// `diag(D, 0)` padded to `n x n`.
pub fn embedded_certificate(n: usize) -> Vec<Vec<i64>> {
    let mut d = vec![vec![0i64; n]; n];
    for i in 0..5.min(n) {
        for j in 0..5.min(n) {
            d[i][j] = HORN_D[i][j];
        }
    }
    d
}

pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

fn rows_i64(m: &DMatrix<i64>) -> Vec<Vec<i64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn rows_f64(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RandomKind {
    /// Polytope with a strictly positive normalization row; `Q` indefinite.
    Bounded,
    /// Bounded, with `Q` indefinite but PSD on the nullspace of `A`.
    ConvexOnNullspace,
    /// Unbounded feasible set with `d'Qd > 0` on every recession direction.
    UnboundedSafe,
    /// First row positive with negative right-hand side.
    Infeasible,
}

impl RandomKind {
    pub const ALL: [RandomKind; 4] = [Self::Bounded, Self::ConvexOnNullspace, Self::UnboundedSafe, Self::Infeasible];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::ConvexOnNullspace => "convex-on-nullspace",
            Self::UnboundedSafe => "unbounded-safe",
            Self::Infeasible => "infeasible",
        }
    }
}

impl FromStr for RandomKind {
    type Err = QpError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == key)
            .ok_or_else(|| QpError::Parse(format!("unknown instance kind '{s}'")))
    }
}

const MAX_ATTEMPTS: usize = 500;

/// Seeded random instance of the given kind.
///
/// Integer ranges: interior point entries 1..=3, normalization row 1..=3,
/// other constraint entries -3..=3, `Q` entries -5..=5 (-3..=3 for the
/// unbounded kind), nullspace Gram factor and `T` entries -2..=2.
pub fn random_instance(kind: RandomKind, n: usize, m: usize, seed: u64) -> Result<GeneratedInstance> {
    if n == 0 || m == 0 {
        return Err(QpError::InvalidDimension("n and m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = format!("{}-n{n}-m{m}-s{seed}", kind.as_str());
    let mut last_reason = String::new();
    for attempt in 1..=MAX_ATTEMPTS {
        let made = match kind {
            RandomKind::Bounded => gen_bounded(&mut rng, n, m),
            RandomKind::ConvexOnNullspace => gen_convex_on_nullspace(&mut rng, n, m),
            RandomKind::UnboundedSafe => gen_unbounded_safe(&mut rng, n, m),
            RandomKind::Infeasible => gen_infeasible(&mut rng, n, m),
        };
        match made {
            Ok((instance, integer, certificate)) => {
                let metadata = json!({
                    "kind": kind.as_str(),
                    "seed": seed,
                    "n": n,
                    "m": m,
                    "prng": PRNG_NAME,
                    "attempts": attempt,
                    "certificate": certificate,
                });
                return Ok(GeneratedInstance {
                    instance: instance.renamed(name),
                    metadata,
                    integer,
                });
            }
            Err(reason) => last_reason = reason,
        }
    }
    Err(QpError::GenerationFailed {
        seed,
        attempts: MAX_ATTEMPTS,
        reason: last_reason,
    })
}

type Attempt = std::result::Result<(QpInstance, Option<IntegerData>, Value), String>;

#[allow(clippy::needless_range_loop)]
fn sym_int(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut q = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(lo..=hi);
            q[i][j] = v;
            q[j][i] = v;
        }
    }
    q
}

fn int_matrix(rows: &[Vec<i64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows.first().map_or(0, |r| r.len()), |i, j| rows[i][j] as f64)
}

/// Constraint rows with `A x0 = b` for a random interior point `x0 >= 1`.
/// The first row is strictly positive when `normalize` is set.
fn interior_system(rng: &mut ChaCha8Rng, n: usize, m: usize, normalize: bool) -> (Vec<Vec<i64>>, Vec<i64>, Vec<i64>) {
    let x0: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
    let a: Vec<Vec<i64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|_| if i == 0 && normalize { rng.gen_range(1..=3) } else { rng.gen_range(-3..=3) })
                .collect()
        })
        .collect();
    let b = a.iter().map(|row| row.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
    (a, b, x0)
}

fn is_indefinite(q: &DMatrix<f64>) -> bool {
    sym_eigen(q).map(|e| e.values[0] < -1e-6 && e.values[e.values.len() - 1] > 1e-6).unwrap_or(false)
}

fn gen_bounded(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Attempt {
    let (a, b, x0) = interior_system(rng, n, m, true);
    let q = sym_int(rng, n, -5, 5);
    if n > 1 && !is_indefinite(&int_matrix(&q)) {
        return Err("Q is not indefinite".into());
    }
    let data = IntegerData { q, c: (0..n).map(|_| rng.gen_range(-3..=3)).collect(), a, b };
    let inst = data.to_instance("bounded").map_err(|e| e.to_string())?;
    Ok((inst, Some(data), json!({ "normalization_row": 0, "interior_point": x0 })))
}

fn gen_convex_on_nullspace(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Attempt {
    let (a_int, b_int, x0) = interior_system(rng, n, m, true);
    let a = int_matrix(&a_int);
    let basis = nullspace_basis(&a, RANK_TOL);
    let r = basis.ncols();
    if r == 0 {
        return Err("nullspace of A is trivial".into());
    }
    let g = DMatrix::from_fn(r, r, |_, _| rng.gen_range(-2..=2) as f64);
    let t = int_matrix(&sym_int(rng, m, -2, 2));
    if min_eigenvalue(&t).map_or(true, |v| v > -1e-6) {
        return Err("T has no negative eigenvalue".into());
    }
    let mut q = &basis * g.transpose() * &g * basis.transpose() + a.transpose() * &t * &a;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (q[(i, j)] + q[(j, i)]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    if !is_indefinite(&q) {
        return Err("Q is not indefinite".into());
    }
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let b: Vec<f64> = b_int.iter().map(|v| *v as f64).collect();
    let inst = QpInstance::from_rows("convex-on-nullspace", &rows_f64(&q), &c, &rows_f64(&a), &b).map_err(|e| e.to_string())?;
    let reduced = min_eigenvalue(&(basis.transpose() * inst.q() * &basis)).map_err(|e| e.to_string())?;
    Ok((
        inst,
        None,
        json!({
            "normalization_row": 0,
            "interior_point": x0,
            "T": rows_f64(&t),
            "nullspace_min_eigenvalue": reduced,
        }),
    ))
}

fn gen_unbounded_safe(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Attempt {
    if n < 2 {
        return Err("unbounded kind needs n >= 2".into());
    }
    let x0: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
    // Rows summing to zero keep e in the recession cone.
    let a: Vec<Vec<i64>> = (0..m)
        .map(|_| {
            let mut row: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(-3..=3)).collect();
            row.push(-row.iter().sum::<i64>());
            row
        })
        .collect();
    let b = a.iter().map(|row| row.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
    let q = sym_int(rng, n, -3, 3);
    let data = IntegerData { q, c: (0..n).map(|_| rng.gen_range(-3..=3)).collect(), a, b };
    let inst = data.to_instance("unbounded-safe").map_err(|e| e.to_string())?;
    let opts = OracleOptions::default();
    let rec = analyze_recession_cone(&inst, &opts).map_err(|e| e.to_string())?;
    let min_curv = rec.min_curvature.ok_or("recession cone is trivial")?;
    if !(min_curv > 1e-6) {
        return Err(format!("minimum recession curvature {min_curv:.3e} is not positive"));
    }
    Ok((
        inst,
        Some(data),
        json!({
            "recession_direction": vec![1; n],
            "interior_point": x0,
            "min_recession_curvature": min_curv,
        }),
    ))
}

fn gen_infeasible(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Attempt {
    let mut a: Vec<Vec<i64>> = Vec::with_capacity(m);
    let mut b: Vec<i64> = Vec::with_capacity(m);
    a.push((0..n).map(|_| rng.gen_range(1..=3)).collect());
    b.push(-rng.gen_range(1..=3));
    for _ in 1..m {
        a.push((0..n).map(|_| rng.gen_range(-3..=3)).collect());
        b.push(rng.gen_range(-3..=3));
    }
    let q = sym_int(rng, n, -5, 5);
    let data = IntegerData { q, c: (0..n).map(|_| rng.gen_range(-3..=3)).collect(), a, b };
    let inst = data.to_instance("infeasible").map_err(|e| e.to_string())?;
    let mut y = vec![0i64; m];
    y[0] = 1;
    Ok((
        inst,
        Some(data.clone()),
        json!({
            "farkas_y": y,
            "yA": data.a[0],
            "yb": data.b[0],
        }),
    ))
}

/// Random feasible points: convex combinations of vertices plus nonnegative
/// multiples of extreme rays (when the feasible set is unbounded).
pub fn sample_feasible_points(inst: &QpInstance, k: usize, seed: u64) -> Vec<DVector<f64>> {
    let vertices = basic_solutions(inst.a(), inst.b());
    if vertices.is_empty() {
        return Vec::new();
    }
    let (n, m) = (inst.n(), inst.m());
    let mut ra = DMatrix::zeros(m + 1, n);
    ra.view_mut((0, 0), (m, n)).copy_from(inst.a());
    ra.row_mut(m).fill(1.0);
    let mut rb = DVector::zeros(m + 1);
    rb[m] = 1.0;
    let rays = basic_solutions(&ra, &rb);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            let w: Vec<f64> = vertices.iter().map(|_| -rng.gen_range(1e-12_f64..1.0).ln()).collect();
            let total: f64 = w.iter().sum();
            let mut x = DVector::zeros(n);
            for (v, wi) in vertices.iter().zip(&w) {
                x += v * (wi / total);
            }
            for r in &rays {
                x += r * rng.gen_range(0.0..2.0);
            }
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{check_copositivity_desk_scale, check_psd_on_nullspace};

    #[test]
    fn horn_data_matches_example() {
        let (inst, d) = horn_instance();
        assert_eq!(inst.q()[(0, 1)], -1.0);
        assert_eq!(inst.q()[(0, 3)], 1.0);
        assert_eq!(d.row(0).iter().copied().collect::<Vec<_>>(), vec![7, 4, 0, 0, 4]);
        let data = horn_integer_data();
        let (qd, _) = data.certificate_products(&horn_certificate());
        assert_eq!(qd, -5);
    }

    #[test]
    fn horn_point_objective() {
        let (inst, _) = horn_instance();
        let x = DVector::from_iterator(5, HORN_POINT.iter().map(|v| *v as f64));
        assert_eq!(inst.objective(&x).unwrap(), 7.0);
        assert!(inst.is_feasible(&x));
    }

    #[test]
    fn printed_certificate_is_not_in_nullspace() {
        let data = horn_integer_data();
        let ad = data.a_times(&horn_certificate());
        assert_eq!(ad, vec![vec![-36, -4, 27, 32, -4]]);
        let (_, aad) = data.certificate_products(&horn_certificate());
        assert_eq!(aad, 431);
    }

    #[test]
    fn family_n5_is_horn() {
        let g = horn_family(&HornFamilyParams::new(5, 3)).unwrap();
        assert_eq!(g.integer.unwrap(), horn_integer_data());
    }

    #[test]
    fn family_rejects_small_n() {
        assert!(matches!(horn_family(&HornFamilyParams::new(4, 0)), Err(QpError::InvalidDimension(_))));
    }

    #[test]
    fn family_explicit_tail() {
        let tail = HornTail {
            b: DMatrix::zeros(5, 1),
            w: DMatrix::from_element(1, 1, 1),
            nonneg: DMatrix::zeros(1, 1),
            f: DVector::zeros(1),
            f_cap: DVector::zeros(1),
        };
        let g = horn_family_with_tail(&tail).unwrap();
        let data = g.integer.unwrap();
        assert_eq!(data.q[5][5], 1);
        assert_eq!(data.certificate_products(&embedded_certificate(6)).0, -5);
    }

    #[test]
    fn family_is_deterministic_and_structured() {
        for n in 6..=8 {
            for seed in 0..3 {
                let a = horn_family(&HornFamilyParams::new(n, seed)).unwrap();
                let b = horn_family(&HornFamilyParams::new(n, seed)).unwrap();
                assert_eq!(a.integer, b.integer);
                let data = a.integer.unwrap();
                assert!(data.c.iter().all(|v| *v >= 0));
                assert_eq!(data.certificate_products(&embedded_certificate(n)).0, -5);
                let tail = DMatrix::from_fn(n - 5, n - 5, |i, j| data.q[5 + i][5 + j] as f64);
                assert!(min_eigenvalue(&(&tail - DMatrix::from_fn(n - 5, n - 5, |i, j| {
                    a.metadata["tail"]["N"][i][j].as_i64().unwrap() as f64
                })))
                .unwrap() > -1e-9);
            }
        }
    }

    #[test]
    fn bounded_kind_example() {
        let g = random_instance(RandomKind::Bounded, 3, 1, 7).unwrap();
        assert!(!basic_solutions(g.instance.a(), g.instance.b()).is_empty());
        let rec = analyze_recession_cone(&g.instance, &OracleOptions::default()).unwrap();
        assert!(!rec.l_nontrivial);
    }

    #[test]
    fn convex_kind_example() {
        let g = random_instance(RandomKind::ConvexOnNullspace, 4, 2, 3).unwrap();
        assert!(check_psd_on_nullspace(&g.instance, 1e-9).unwrap().holds);
        assert!(is_indefinite(g.instance.q()));
    }

    #[test]
    fn infeasible_kind_example() {
        let g = random_instance(RandomKind::Infeasible, 3, 2, 5).unwrap();
        assert!(basic_solutions(g.instance.a(), g.instance.b()).is_empty());
        let y = &g.metadata["certificate"];
        assert!(y["yA"].as_array().unwrap().iter().all(|v| v.as_i64().unwrap() > 0));
        assert!(y["yb"].as_i64().unwrap() < 0);
    }

    #[test]
    fn unbounded_kind_example() {
        let g = random_instance(RandomKind::UnboundedSafe, 4, 2, 1).unwrap();
        let rec = analyze_recession_cone(&g.instance, &OracleOptions::default()).unwrap();
        assert!(rec.l_nontrivial);
        assert!(rec.min_curvature.unwrap() > 0.0);
    }

    #[test]
    fn kinds_parse() {
        for k in RandomKind::ALL {
            assert_eq!(k.as_str().parse::<RandomKind>().unwrap(), k);
        }
        assert_eq!("CONVEX_ON_NULLSPACE".parse::<RandomKind>().unwrap(), RandomKind::ConvexOnNullspace);
    }

    #[test]
    fn samples_are_feasible() {
        let g = random_instance(RandomKind::UnboundedSafe, 3, 1, 2).unwrap();
        for x in sample_feasible_points(&g.instance, 20, 9) {
            assert!(g.instance.is_feasible(&x));
        }
    }

    #[test]
    fn horn_head_copositive() {
        let (inst, _) = horn_instance();
        assert!(check_copositivity_desk_scale(inst.q(), &OracleOptions::default()).unwrap().copositive);
    }
}
