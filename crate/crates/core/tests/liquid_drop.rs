use atomtf::coulomb::{coulomb_norm, coulomb_pairing};
use atomtf::drop::*;
use atomtf::linalg::fit_line;
use atomtf::{RadialFunction, RadialGrid};
use proptest::prelude::*;
use std::f64::consts::PI;

// a N^(2/3) + b N^(5/3) with the constants written out independently.
fn neutral_ball(n: f64) -> f64 {
    let a = (36.0 * PI).powf(1.0 / 3.0);
    let b = 3.0 / 5.0 * (4.0 * PI / 3.0).powf(1.0 / 3.0);
    a * n.powf(2.0 / 3.0) + b * n.powf(5.0 / 3.0)
}

#[test]
fn neutral_equal_split_threshold() {
    // Root of e(N) = 2 e(N/2), found by bisection on the closed form.
    let g = |n: f64| 2.0 * neutral_ball(n / 2.0) - neutral_ball(n);
    let (mut lo, mut hi) = (1.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let closed = equal_split_threshold_neutral();
    assert!((closed - lo).abs() < 1e-12 * lo);
    assert!((closed - 3.5120719195966).abs() < 1e-10);
    let t = fission_threshold(0.0, SplitFamily::Equal).unwrap();
    assert!((t.n_star - closed).abs() <= 1e-6 * closed);
}

#[test]
fn small_drops_bind_large_drops_split() {
    assert!(binding_test(1.0, 0.0, 0.5).unwrap());
    let n = 10.0 * equal_split_threshold_neutral();
    assert!(!binding_test(n, 0.0, n / 2.0).unwrap());
    let m = binding_margin(2.0, 0.0, 1e-9);
    assert!(m > 0.0 && m < 1e-4);
    assert!(binding_test(2.0, 0.0, 0.0).is_err());
}

#[test]
fn ball_terms_match_quadrature() {
    for (r, z) in [(1.0, 0.0), (0.7, 3.0), (2.5, 10.0)] {
        let e = drop_energy(&DropConfig::new(vec![(0.0, r)], z).unwrap()).unwrap();
        let q = 4.0 * PI * r * r * r / 3.0;
        assert!((e.surface - 4.0 * PI * r * r).abs() < 1e-12 * e.surface);
        // ∫_0^R 4πs² / s ds by the midpoint rule.
        let k = 20000;
        let h = r / k as f64;
        let att: f64 = (0..k).map(|i| 4.0 * PI * (i as f64 + 0.5) * h * h).sum();
        assert!((e.attraction + z * att).abs() <= 1e-6 * (z * att).max(1e-300));
        assert!((e.repulsion - 0.6 * q * q / r).abs() < 1e-8 * e.repulsion);
    }
}

#[test]
fn repulsion_expansion_matches_direct_norm() {
    // D(χ_a − χ_b) = D(χ_a) + D(χ_b) − ∬ χ_a χ_b / |x − y| on a common grid.
    let g = RadialGrid::with_knots(1e-7, 2.0, 8000, &[1.3]).unwrap();
    let a = RadialFunction::indicator(g.clone(), &[(0.0, 2.0)]).unwrap();
    let b = RadialFunction::indicator(g, &[(0.0, 1.3)]).unwrap();
    let direct = coulomb_norm(&a.add_scaled(-1.0, &b).unwrap()).unwrap();
    let expanded = coulomb_norm(&a).unwrap() + coulomb_norm(&b).unwrap() - coulomb_pairing(&a, &b).unwrap();
    assert!((direct - expanded).abs() < 1e-8 * direct);
    let annulus = drop_energy(&DropConfig::new(vec![(1.3, 2.0)], 0.0).unwrap()).unwrap();
    assert!((annulus.repulsion - direct).abs() < 1e-8 * direct);
    // Nested radial quadrature value of the annulus self-energy.
    assert!((annulus.repulsion - 164.223_848_049_420_1).abs() < 1e-8 * direct);
}

#[test]
fn scanned_family_never_exceeds_equal_split() {
    for z in [0.0, 1.0, 10.0, 100.0] {
        let eq = fission_threshold(z, SplitFamily::Equal).unwrap();
        let sc = fission_threshold(z, SplitFamily::Scanned).unwrap();
        assert!(sc.n_star <= eq.n_star + 1e-3, "Z={z}: {} vs {}", sc.n_star, eq.n_star);
    }
}

#[test]
fn excess_grows_like_cube_root() {
    let zs = [10.0, 100.0, 1000.0, 10000.0];
    let (mut x, mut y) = (vec![], vec![]);
    for z in zs {
        let t = fission_threshold(z, SplitFamily::Scanned).unwrap();
        assert!(t.n_star > z);
        x.push(z.ln());
        y.push((t.n_star - z).ln());
    }
    let fit = fit_line(&x, &y).unwrap();
    assert!((0.23..=0.43).contains(&fit.slope), "slope {}", fit.slope);
}

proptest! {
    #[test]
    fn dilation_scales_surface_and_repulsion(
        a in 0.0f64..1.0, w1 in 0.1f64..1.0, gap in 0.05f64..1.0, w2 in 0.1f64..1.0, lambda in 0.3f64..3.0,
    ) {
        let shells = vec![(a, a + w1), (a + w1 + gap, a + w1 + gap + w2)];
        let c = DropConfig::new(shells, 0.0).unwrap();
        let e = drop_energy(&c).unwrap();
        let d = drop_energy(&c.dilated(lambda).unwrap()).unwrap();
        prop_assert!((d.surface - lambda.powi(2) * e.surface).abs() <= 1e-12 * d.surface);
        prop_assert!((d.repulsion - lambda.powi(5) * e.repulsion).abs() <= 1e-8 * d.repulsion);
        prop_assert!(e.surface >= isoperimetric_surface(c.volume()) - 1e-8);
        prop_assert!(e.repulsion >= 0.0);
    }

    #[test]
    fn split_side_is_additive(n in 0.5f64..50.0, frac in 0.01f64..0.99, z in 0.0f64..20.0) {
        let m = frac * n;
        let stay = drop_energy(&DropConfig::ball(n - m, z).unwrap()).unwrap().total;
        let gone = drop_energy(&DropConfig::ball(m, 0.0).unwrap()).unwrap().total;
        let whole = drop_energy(&DropConfig::ball(n, z).unwrap()).unwrap().total;
        let margin = binding_margin(n, z, m);
        let split = ball_energy(n - m, z) + ball_energy(m, 0.0);
        prop_assert!((margin - (split - ball_energy(n, z))).abs() <= 1e-12 * split.abs().max(1.0));
        prop_assert!((split - (stay + gone)).abs() <= 1e-8 * (stay.abs() + gone.abs()));
        prop_assert!((margin - (stay + gone - whole)).abs() <= 1e-8 * (stay.abs() + gone.abs() + whole.abs()));
    }
}
