#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use qprelax::generators::horn_integer_data;
use qprelax::QpInstance;

/// Horn matrix with `A = (cos(4 pi j / 5))_j`, `b = 1`, `c = e`: the
/// circulant `D` with unit diagonal and `1/phi` on cyclic neighbours is a
/// DNN recession direction with `<Q, D> < 0`, while `l*` is finite.
pub fn golden_instance() -> QpInstance {
    let data = horn_integer_data();
    let q = data.to_instance("horn").unwrap().q().clone();
    let a = DMatrix::from_fn(1, 5, |_, j| (4.0 * PI * j as f64 / 5.0).cos());
    QpInstance::new("golden", q, DVector::from_element(5, 1.0), a, DVector::from_element(1, 1.0)).unwrap()
}

pub fn golden_direction() -> DMatrix<f64> {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut d = DMatrix::zeros(6, 6);
    for i in 0..5 {
        d[(i + 1, i + 1)] = 0.2;
        d[(i + 1, (i + 1) % 5 + 1)] = 0.2 / phi;
        d[((i + 1) % 5 + 1, i + 1)] = 0.2 / phi;
    }
    d
}

/// Unbounded feasible sets with `L_inf` empty and a known optimum.
pub fn unbounded_envelope_fixtures() -> Vec<(QpInstance, f64)> {
    let build = |name: &str, q: &[&[f64]], c: &[f64], a: &[f64], b: f64| {
        let rows: Vec<Vec<f64>> = q.iter().map(|r| r.to_vec()).collect();
        QpInstance::from_rows(name, &rows, c, &[a.to_vec()], &[b]).unwrap()
    };
    vec![
        // x = (t, t): q = 2t^2 - 4t, minimum -2 at t = 1.
        (build("ray-convex", &[&[1.0, 0.0], &[0.0, 1.0]], &[-1.0, -1.0], &[1.0, -1.0], 0.0), -2.0),
        // x = (1 + t, t): q = 2t(1 + t), minimum 0 at t = 0.
        (build("ray-bilinear", &[&[0.0, 1.0], &[1.0, 0.0]], &[0.0, 0.0], &[1.0, -1.0], 1.0), 0.0),
        // x = (1 + t, t): q = 2t^2 + 2t - 1, minimum -1 at t = 0; Q itself is
        // indefinite but d'Qd = 2 on the recession ray d = (1, 1).
        (build("ray-indefinite", &[&[-1.0, 2.0], &[2.0, -1.0]], &[0.0, 0.0], &[1.0, -1.0], 1.0), -1.0),
        // x3 = x1 + x2 + 1: q = 2 x1 x2 + 1, minimum 1 on the two axes; the
        // recession cone is two-dimensional with d'Qd = 2 d1 d2 >= 0.
        (
            build(
                "cone-bilinear",
                &[&[-1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 1.0]],
                &[-1.0, -1.0, 0.0],
                &[1.0, 1.0, -1.0],
                -1.0,
            ),
            1.0,
        ),
        // Same feasible set: q = 2 x1 x2 + 4 x1 + 1, minimum 1 on x1 = 0.
        (
            build(
                "cone-bilinear-shifted",
                &[&[-1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 1.0]],
                &[1.0, -1.0, 0.0],
                &[1.0, 1.0, -1.0],
                -1.0,
            ),
            1.0,
        ),
    ]
}
