//! Independent check of the TF atom against the dimensionless TF ODE
//! `χ'' = χ^(3/2) / √x`, `χ(0) = 1`, integrated by RK4 in `t = √x` from the
//! known initial slope. With the default constants `φ(r) = (Z/r) χ(r/b)`,
//! `b = (3π/4)^(2/3) / 2 · Z^(-1/3)`.

use atomtf::tf::tf_atomic_solve;
use atomtf::{ModelConstants, RadialGrid};
use std::f64::consts::PI;

const SLOPE: f64 = -1.588_071_022_611_375_3;

/// Samples of χ on x = t² for t on a uniform mesh.
fn chi_table(t_max: f64, dt: f64) -> Vec<(f64, f64)> {
    let rhs = |t: f64, y: [f64; 2]| [2.0 * t * y[1], 2.0 * y[0].max(0.0).powf(1.5)];
    let mut y = [1.0, SLOPE];
    let mut t = 0.0;
    let mut out = vec![(0.0, 1.0)];
    while t < t_max {
        let k1 = rhs(t, y);
        let k2 = rhs(t + dt / 2.0, [y[0] + dt / 2.0 * k1[0], y[1] + dt / 2.0 * k1[1]]);
        let k3 = rhs(t + dt / 2.0, [y[0] + dt / 2.0 * k2[0], y[1] + dt / 2.0 * k2[1]]);
        let k4 = rhs(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for j in 0..2 {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        t += dt;
        out.push((t * t, y[0]));
    }
    out
}

fn chi_at(table: &[(f64, f64)], x: f64) -> f64 {
    let i = table.partition_point(|p| p.0 < x).max(1);
    let (x0, y0) = table[i - 1];
    let (x1, y1) = table[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[test]
fn atom_potential_matches_ode() {
    let table = chi_table(3.5, 2e-5);
    for z in [1.0, 30.0] {
        let c = ModelConstants::atomic(z, z).unwrap();
        let sol = tf_atomic_solve(&c, &RadialGrid::tf_default(z).unwrap()).unwrap();
        let b = (3.0 * PI / 4.0).powf(2.0 / 3.0) / 2.0 * z.powf(-1.0 / 3.0);
        let mut worst: f64 = 0.0;
        for (&r, &phi) in sol.phi_tf.grid().nodes().iter().zip(sol.phi_tf.values()) {
            let x = r / b;
            if (1e-3..=8.0).contains(&x) {
                let expect = z / r * chi_at(&table, x);
                worst = worst.max((phi - expect).abs() / expect);
            }
        }
        assert!(worst < 1e-6, "Z = {z}: worst relative deviation {worst}");
    }
}

/// The decay of `1 − φ r^4 / A` over `r Z^(1/3) ∈ [3, 30]` is a property of the
/// exact profile; the solver must reproduce the ODE's slope there.
#[test]
fn sommerfeld_window_slope_matches_ode() {
    let table = chi_table(6.0, 2e-5);
    let c = ModelConstants::atomic(1.0, 1.0).unwrap();
    let b = (3.0 * PI / 4.0).powf(2.0 / 3.0) / 2.0;
    let a = c.a_tf();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..=200 {
        let r = 3.0 * 10f64.powf(f64::from(i) / 200.0);
        let phi = chi_at(&table, r / b) / r;
        xs.push(r.ln());
        ys.push((1.0 - phi * r.powi(4) / a).ln());
    }
    let oracle = atomtf::linalg::fit_line(&xs, &ys).unwrap().slope;
    let sol = tf_atomic_solve(&c, &RadialGrid::tf_default(1.0).unwrap()).unwrap();
    let solved = sol.sommerfeld_decay_fit(&c, (3.0, 30.0)).unwrap().slope;
    assert!((oracle - solved).abs() < 0.01);
}
