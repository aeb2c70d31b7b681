use atomtf::coulomb::partial_newton_potential;
use atomtf::tf::*;
use atomtf::{ModelConstants, RadialFunction, RadialGrid, Tail};

fn solve(z: f64) -> (ModelConstants, TfAtomicSolution) {
    let c = ModelConstants::atomic(z, z).unwrap();
    let g = RadialGrid::tf_default(z).unwrap();
    let s = tf_atomic_solve(&c, &g).unwrap();
    (c, s)
}

fn coulomb(z: f64) -> RadialFunction {
    let g = RadialGrid::tf_default(z).unwrap();
    RadialFunction::from_fn(g, |r| z / r).unwrap().with_tail(Tail::Power(1.0)).unwrap()
}

#[test]
fn neutral_mass_multiplier_and_equation() {
    for z in [1.0, 10.0, 100.0] {
        let (c, s) = solve(z);
        let m = s.rho_tf.integrate().unwrap();
        assert!((m - z).abs() / z <= 1e-6, "Z={z}: mass {m}");
        assert_eq!(s.mu, 0.0);
        let phi_max = s.phi_tf.values().iter().cloned().fold(0.0, f64::max);
        let res = tf_equation_residual(&s.rho_tf, &s.phi_tf, 0.0, c.c_tf, 0);
        assert!(res <= 1e-6 * phi_max);
        assert!(s.phi_tf.values().iter().all(|v| *v > 0.0));
    }
}

#[test]
fn pointwise_envelopes() {
    let (c, s) = solve(100.0);
    let a = c.a_tf();
    let rho_cap = (3.0 * a / (5.0 * c.c_tf)).powf(1.5);
    for ((r, phi), rho) in s.phi_tf.grid().nodes().iter().zip(s.phi_tf.values()).zip(s.rho_tf.values()) {
        assert!(*phi <= a * r.powi(-4) * (1.0 + 1e-6));
        assert!(*rho <= rho_cap * r.powi(-6) * (1.0 + 1e-6));
    }
    let env = s.sommerfeld(100f64.cbrt().recip(), &c).unwrap();
    assert!(env.a_r >= -1.0);
    assert!(env.ratio_profile.values().iter().all(|v| *v <= 1.0 + 1e-6));
}

#[test]
fn energy_and_density_scale() {
    let (_, one) = solve(1.0);
    let e1 = one.energy;
    // The Thomas-Fermi constant of this functional, -0.7687 in these units.
    assert!((e1 + 0.768745).abs() < 1e-5);
    for z in [8.0, 10.0, 27.0] {
        let (_, s) = solve(z);
        let scaled = s.energy / z.powf(7.0 / 3.0);
        assert!((scaled - e1).abs() <= 1e-4 * e1.abs(), "Z={z}: {scaled} vs {e1}");
        if z == 10.0 {
            continue;
        }
        let k = z.cbrt();
        let g1 = one.rho_tf.grid();
        let mut checked = 0;
        for (r, rho) in s.rho_tf.grid().nodes().iter().zip(s.rho_tf.values()) {
            let x = k * r;
            if x < g1.r_min() || x > g1.r_max() {
                continue;
            }
            let want = z * z * one.rho_tf.eval(x);
            assert!((rho - want).abs() <= 1e-4 * want, "Z={z}, r={r}: {rho} vs {want}");
            checked += 1;
        }
        assert!(checked > 3000);
    }
}

#[test]
fn half_and_double_budget() {
    let z = 10.0;
    let c = ModelConstants::atomic(z, z).unwrap();
    let v = coulomb(z);
    let half = tf_general_solve(&v, z / 2.0, &c, TfSettings::default()).unwrap();
    assert!(half.mu > 0.0);
    assert!((half.attained_mass - z / 2.0).abs() <= 1e-6 * z);
    assert!(half.attained_mass <= half.mass_budget * (1.0 + 1e-8));
    let res = tf_equation_residual(&half.rho, &half.phi, half.mu, c.c_tf, 0);
    let phi_max = half.phi.values().iter().cloned().fold(0.0, f64::max);
    assert!(res <= 1e-6 * phi_max);
    // Attained mass never increases with μ along the bisection.
    let mut hist = half.history.clone();
    hist.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    for w in hist.windows(2) {
        assert!(w[1].mass <= w[0].mass * (1.0 + 1e-12));
    }
    let double = tf_general_solve(&v, 2.0 * z, &c, TfSettings::default()).unwrap();
    assert_eq!(double.mu, 0.0);
    assert!((double.attained_mass - z).abs() <= 1e-6 * z);
}

#[test]
fn exterior_problem_recovers_the_restriction() {
    let z = 10.0;
    let (c, s) = solve(z);
    let grid = s.rho_tf.grid().clone();
    for target in [0.3, 1.0] {
        // Cut exactly at a node so the budget and the support agree.
        let r_cut = grid.nodes()[grid.first_node_at_or_above(target)];
        let inner = partial_newton_potential(&s.rho_tf, r_cut).unwrap();
        let phi = RadialFunction::new(
            grid.clone(),
            grid.nodes().iter().zip(inner.values()).map(|(x, v)| z / x - v).collect(),
        )
        .unwrap()
        .with_tail(Tail::Power(1.0))
        .unwrap();
        let budget = s.rho_tf.integrate().unwrap() - s.rho_tf.mass_within(r_cut).unwrap();
        let ext = tf_exterior_solve(&phi, r_cut, budget, &c, TfSettings::default()).unwrap();
        let b = grid.first_node_at_or_above(r_cut);
        assert!(ext.rho_r.values()[..b].iter().all(|v| *v == 0.0));
        let restricted: Vec<f64> = s.rho_tf.values().iter().enumerate().map(|(i, v)| if i < b { 0.0 } else { *v }).collect();
        let diff = RadialFunction::new(
            grid.clone(),
            ext.rho_r.values().iter().zip(&restricted).map(|(a, b)| (a - b).abs()).collect(),
        )
        .unwrap()
        .with_jumps(ext.rho_r.jumps().to_vec())
        .unwrap();
        let l1 = diff.integrate().unwrap();
        assert!(l1 <= 1e-4 * budget, "r_cut={r_cut}: L1 {l1}, budget {budget}");
        let res = tf_equation_residual(&ext.rho_r, &ext.phi_r, ext.mu_r, c.c_tf, b);
        assert!(res <= 1e-6 * ext.phi_r.values()[b..].iter().cloned().fold(0.0, f64::max));

        // Away from the cut the envelope constants shrink monotonically.
        let mut last = (f64::INFINITY, f64::INFINITY);
        for x in [1.5, 3.0, 6.0, 12.0, 24.0] {
            let env = ext.sommerfeld(x * r_cut, &c).unwrap();
            assert!(env.a_r.abs() <= last.0 && env.big_a_r.abs() <= last.1);
            last = (env.a_r.abs(), env.big_a_r.abs());
        }
    }
    let zero = tf_exterior_solve(&coulomb(z), 1.0, 0.0, &c, TfSettings::default()).unwrap();
    assert!(zero.rho_r.values().iter().all(|v| *v == 0.0));
}

#[test]
fn solution_is_a_local_minimum() {
    let z = 10.0;
    let (c, s) = solve(z);
    let grid = s.rho_tf.grid().clone();
    for centre in [0.01f64, 0.3, 3.0] {
        let bump: Vec<f64> = grid.nodes().iter().map(|r| (-(r / centre).ln().powi(2)).exp()).collect();
        let weighted = |w: &[f64]| {
            RadialFunction::new(grid.clone(), s.rho_tf.values().iter().zip(w).map(|(a, b)| a * b).collect())
                .unwrap()
                .integrate()
                .unwrap()
        };
        let mean = weighted(&bump) / s.rho_tf.integrate().unwrap();
        for sign in [-1.0, 1.0] {
            let values = s
                .rho_tf
                .values()
                .iter()
                .zip(&bump)
                .map(|(rho, b)| rho * (1.0 + sign * 0.01 * (b - mean)))
                .collect();
            let moved = RadialFunction::new(grid.clone(), values).unwrap().with_tail(s.rho_tf.tail()).unwrap();
            let e = tf_energy_coulomb(&moved, z, c.c_tf).unwrap();
            assert!(e >= s.energy - 1e-8 * s.energy.abs(), "centre {centre}: {e} < {}", s.energy);
        }
    }
}
