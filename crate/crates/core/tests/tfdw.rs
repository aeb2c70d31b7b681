use atomtf::coulomb::coulomb_norm;
use atomtf::tf::{tf_atomic_solve, tf_energy_coulomb, tf_general_solve, TfSettings};
use atomtf::tfdw::*;
use atomtf::{ModelConstants, RadialFunction, RadialGrid, Tail};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn weighted_dot(g: &Arc<RadialGrid>, a: &[f64], b: &[f64]) -> f64 {
    g.weights().iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

/// Worst relative mismatch between the gradient and central differences over
/// `count` random directions orthogonal to ψ.
fn worst_fd_mismatch(psi: &RadialFunction, c: &ModelConstants, rng: &mut ChaCha8Rng, count: usize, relative: bool) -> f64 {
    let grid = psi.grid().clone();
    let grad = tfdw_gradient(psi, c).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..count {
        // Smooth random bumps in log r, made orthogonal to ψ.
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.05f64..3.0).ln(), rng.gen_range(0.2..0.8)))
            .collect();
        let mut eta: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|r| bumps.iter().map(|(a, c, w)| a * (-((r.ln() - c) / w).powi(2)).exp()).sum())
            .collect();
        let t = weighted_dot(&grid, &eta, psi.values()) / weighted_dot(&grid, psi.values(), psi.values());
        for (e, p) in eta.iter_mut().zip(psi.values()) {
            *e -= t * p;
        }
        let h = 1e-5;
        let shifted = |s: f64| {
            let v = psi.values().iter().zip(&eta).map(|(p, e)| p + s * e).collect();
            tfdw_energy(&RadialFunction::new(grid.clone(), v).unwrap(), c).unwrap().total
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        let an = weighted_dot(&grid, grad.values(), &eta);
        // Near a minimizer the pairing itself vanishes; measure against the
        // Cauchy-Schwarz scale instead so roundoff in E does not dominate.
        let scale = if relative {
            an.abs()
        } else {
            (weighted_dot(&grid, grad.values(), grad.values()) * weighted_dot(&grid, &eta, &eta)).sqrt()
        };
        worst = worst.max((an - fd).abs() / scale);
    }
    worst
}

#[test]
fn gradient_matches_central_differences() {
    let grid = RadialGrid::new(1e-5, 30.0, 800).unwrap();
    let c = ModelConstants::atomic(2.0, 2.0).unwrap();
    let psi = default_initial_psi(&c, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let worst = worst_fd_mismatch(&psi, &c, &mut rng, 5, true);
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn gradient_stays_consistent_along_a_long_flow() {
    // An ion with more electrons than charge flows for a long time; check
    // every hundredth iterate.
    let grid = RadialGrid::new(1e-5, 60.0, 800).unwrap();
    let c = ModelConstants::atomic(2.0, 3.0).unwrap();
    let chunk = FlowConfig {
        max_iter: 100,
        ..FlowConfig::default()
    };
    let mut psi = default_initial_psi(&c, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..4 {
        let worst = worst_fd_mismatch(&psi, &c, &mut rng, 2, false);
        assert!(worst <= 1e-5, "{worst}");
        let sol = tfdw_flow(&c, &grid, &chunk, Some(&psi)).unwrap();
        if sol.converged || sol.stalled {
            break;
        }
        psi = sol.psi;
    }
}

#[test]
fn terms_of_exponential_density() {
    let grid = RadialGrid::new(1e-6, 80.0, 12000).unwrap();
    let c = ModelConstants::atomic(1.0, 1.0).unwrap();
    let psi = RadialFunction::from_fn(grid, |r| ((-r).exp() / (8.0 * PI)).sqrt()).unwrap();
    let e = tfdw_energy(&psi, &c).unwrap();
    // ∫ r² e^{-kr} dr = 2/k³.
    let norm = |s: f64| 4.0 * PI * (8.0 * PI).powf(-s) * 2.0 / s.powi(3);
    let want = [
        (e.kinetic, c.c_tf * norm(5.0 / 3.0)),
        (e.nuclear, -0.5),
        (e.hartree, 5.0 / 32.0),
        (e.gradient, c.c_w / 4.0),
        (e.exchange, -c.c_d * norm(4.0 / 3.0)),
    ];
    for (got, w) in want {
        assert!((got - w).abs() <= 1e-6 * w.abs(), "{got} vs {w}");
    }
    let sum: f64 = want.iter().map(|p| p.0).sum();
    assert!((e.total - sum).abs() <= 1e-14);
}

#[test]
fn reduces_to_thomas_fermi() {
    let z = 4.0;
    let grid = RadialGrid::new(1e-6, 200.0, 3000).unwrap();
    let base = ModelConstants::atomic(z, z).unwrap();
    let c = base.with_coefficients(base.c_tf, 0.0, 0.0).unwrap();
    let tf = tf_atomic_solve(&c, &grid).unwrap();
    let rho = tf.rho_tf.clone().with_tail(Tail::Truncated).unwrap();
    let psi = RadialFunction::new(grid.clone(), rho.values().iter().map(|v| v.sqrt()).collect()).unwrap();
    let e = tfdw_energy(&psi, &c).unwrap().total;
    let e_tf = tf_energy_coulomb(&rho, z, c.c_tf).unwrap();
    assert!((e - e_tf).abs() <= 1e-8 * e_tf.abs(), "{e} vs {e_tf}");

    // Without the gradient and exchange terms the flow finds the TF minimizer.
    let n = 3.0;
    let c = c.with_charge(z, n).unwrap();
    let sol = tfdw_flow(&c, &grid, &FlowConfig::default(), None).unwrap();
    let v = RadialFunction::from_fn(grid.clone(), |r| z / r).unwrap().with_tail(Tail::Power(1.0)).unwrap();
    let general = tf_general_solve(&v, n, &c, TfSettings::default()).unwrap();
    let diff: Vec<f64> = sol.rho0.values().iter().zip(general.rho.values()).map(|(a, b)| (a - b).abs()).collect();
    let l1 = RadialFunction::new(grid, diff).unwrap().integrate().unwrap();
    assert!(l1 <= 1e-4 * n, "L1 {l1}");
}

#[test]
fn flow_invariants_and_bound_atom() {
    let (z, n) = (5.0, 5.0);
    let c = ModelConstants::atomic(z, n).unwrap();
    let grid = RadialGrid::atomic_default(z, n).unwrap();
    let config = FlowConfig::default();
    let sol = tfdw_flow(&c, &grid, &config, None).unwrap();
    for w in sol.energy_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(sol.max_mass_drift <= 1e-10);
    assert!((sol.rho0.integrate().unwrap() - n).abs() <= 1e-8 * n);
    assert_eq!(bound_state_test(&sol, &config).unwrap(), BoundState::Bound);
    if sol.converged {
        assert!(sol.residual <= config.tol_residual);
    }

    // Adding mass never raises the ground state energy.
    let more = c.with_charge(z, 5.5).unwrap();
    let heavier = tfdw_flow(&more, &grid, &config, Some(&sol.psi)).unwrap();
    assert!(heavier.energy <= sol.energy + 1e-8, "{} > {}", heavier.energy, sol.energy);
}

#[test]
fn neutral_cloud_escapes() {
    let c = ModelConstants::atomic(0.0, 100.0).unwrap();
    let grid = RadialGrid::atomic_default(0.0, 100.0).unwrap();
    // Early on the cloud is a compact, still expanding shell: never bound.
    let early = FlowConfig {
        max_iter: 2000,
        extra_steps: 1,
        ..FlowConfig::default()
    };
    let sol = tfdw_flow(&c, &grid, &early, None).unwrap();
    assert!(!sol.converged && !sol.stalled);
    assert_ne!(bound_state_test(&sol, &early).unwrap(), BoundState::Bound);
    let config = FlowConfig::default();
    let sol = tfdw_flow(&c, &grid, &config, Some(&sol.psi)).unwrap();
    assert_eq!(bound_state_test(&sol, &config).unwrap(), BoundState::Unbound);
}

#[test]
fn hartree_energy_scales_like_the_atom() {
    let mut ratios = Vec::new();
    for z in [2.0, 5.0, 10.0] {
        let c = ModelConstants::atomic(z, z).unwrap();
        let grid = RadialGrid::atomic_default(z, z).unwrap();
        let sol = tfdw_flow(&c, &grid, &FlowConfig::default(), None).unwrap();
        ratios.push(coulomb_norm(&sol.rho0).unwrap() / (z.powf(7.0 / 3.0) + z));
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max <= 2.0 * min, "{ratios:?}");
}
