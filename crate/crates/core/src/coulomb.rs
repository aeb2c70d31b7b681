//! Newton potentials of radial charges, the Coulomb norm `D(f)` and the
//! Coulomb inequalities used by the screening analysis.
//!
//! For a radial charge `f` the potential is `V(r) = M(r)/r + ∫_r^∞ 4πs f(s) ds`
//! where `M(r)` is the charge inside radius `r`. Both pieces are accumulated
//! from the same cell integrals that [`RadialFunction::integrate`] uses, so
//! `r V(r)` reproduces the total charge exactly outside the support.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::grid::{gradient_energy, kahan_sum, CellRules, Jump, RadialFunction, Tail, TailTerms};

/// Running sums behind a Newton potential, one entry per node.
pub(crate) struct PotentialParts {
    /// Charge of the cells below node `i`.
    pub(crate) inner_mass: Vec<f64>,
    /// Charge of the cells at and above node `i`, tail included.
    pub(crate) outer_mass: Vec<f64>,
    /// `∫_{r_i}^∞ 4πs f(s) ds`, tail included.
    pub(crate) outer_moment: Vec<f64>,
    pub(crate) total: f64,
    pub(crate) tail_mass: f64,
    pub(crate) tail_moment: f64,
}

impl PotentialParts {
    pub(crate) fn compute(nodes: &[f64], rules: &CellRules, f: &[f64], tail: &TailTerms) -> Result<Self> {
        let n = nodes.len();
        let tail_mass = tail.mass()?;
        let tail_moment = tail.first_moment()?;
        let mut inner_mass = vec![0.0; n];
        let mut outer_mass = vec![0.0; n];
        let mut outer_moment = vec![0.0; n];
        let (mut acc, mut comp) = (0.0f64, 0.0f64);
        for c in 0..n - 1 {
            let y = rules.cell_mass(c, f) - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            inner_mass[c + 1] = acc;
        }
        outer_mass[n - 1] = tail_mass;
        outer_moment[n - 1] = tail_moment;
        let (mut cm, mut cu) = (0.0f64, 0.0f64);
        for c in (0..n - 1).rev() {
            let y = rules.cell_mass(c, f) - cm;
            let t = outer_mass[c + 1] + y;
            cm = (t - outer_mass[c + 1]) - y;
            outer_mass[c] = t;
            let y = rules.cell_moment(c, f) - cu;
            let t = outer_moment[c + 1] + y;
            cu = (t - outer_moment[c + 1]) - y;
            outer_moment[c] = t;
        }
        let total = outer_mass[0];
        Ok(Self {
            inner_mass,
            outer_mass,
            outer_moment,
            total,
            tail_mass,
            tail_moment,
        })
    }

    pub(crate) fn potential(&self, nodes: &[f64]) -> Vec<f64> {
        nodes
            .iter()
            .enumerate()
            .map(|(i, &r)| self.inner_mass[i] / r + self.outer_moment[i])
            .collect()
    }
}

/// Potential of `f` at the nodes, with `f` extended by `tail`.
pub(crate) fn apply(nodes: &[f64], rules: &CellRules, f: &[f64], tail: &TailTerms) -> Result<Vec<f64>> {
    Ok(PotentialParts::compute(nodes, rules, f, tail)?.potential(nodes))
}

/// Transpose of the node-to-node potential map (no tail), in O(n).
pub(crate) fn apply_adjoint(nodes: &[f64], rules: &CellRules, y: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    // V_i = Σ_{c<i} m_c / r_i + Σ_{c≥i} u_c, so Σ_i y_i V_i = Σ_c m_c P_c + u_c Q_c.
    let mut p = vec![0.0; n - 1];
    let mut acc = 0.0;
    for c in (0..n - 1).rev() {
        acc += y[c + 1] / nodes[c + 1];
        p[c] = acc;
    }
    let mut out = vec![0.0; n];
    let mut q = 0.0;
    for c in 0..n - 1 {
        q += y[c];
        let s = rules.start[c];
        for k in 0..rules.len[c] {
            out[s + k] += rules.mass[c][k] * p[c] + rules.moment[c][k] * q;
        }
    }
    out
}

/// `(f * |x|^-1)(r)` on the grid of `f`.
pub fn newton_potential(rho: &RadialFunction) -> Result<RadialFunction> {
    let grid = rho.grid();
    let parts = PotentialParts::compute(grid.nodes(), &rho.rules(), rho.values(), &rho.tail_terms())?;
    RadialFunction::new(grid.clone(), parts.potential(grid.nodes()))?.with_tail(Tail::Power(1.0))
}

/// Potential generated by the part of `rho` inside the closed ball of radius
/// `r_cut`. A cut below the first node gives zero; a cut beyond `r_max`
/// includes the tail up to `r_cut`.
pub fn partial_newton_potential(rho: &RadialFunction, r_cut: f64) -> Result<RadialFunction> {
    if !(r_cut > 0.0) {
        return param(format!("cut radius must be positive, got {r_cut}"));
    }
    let grid = rho.grid().clone();
    let nodes = grid.nodes();
    let n = nodes.len();
    if r_cut < grid.r_min() {
        return RadialFunction::zeros(grid).with_tail(Tail::Power(1.0));
    }
    let rules = rho.rules();
    let f = rho.values();
    let tail = rho.tail_terms();
    let mut values = vec![0.0; n];
    if r_cut >= grid.r_max() {
        let parts = PotentialParts::compute(nodes, &rules, f, &tail)?;
        let tail_moment = if r_cut.is_infinite() || tail.is_zero() {
            parts.tail_moment
        } else {
            parts.tail_moment - tail.first_moment_from(r_cut)?
        };
        for i in 0..n {
            let grid_outer = parts.outer_moment[i] - parts.tail_moment;
            values[i] = parts.inner_mass[i] / nodes[i] + grid_outer + tail_moment;
        }
        return RadialFunction::new(grid, values)?.with_tail(Tail::Power(1.0));
    }
    let c = grid.cell_of(r_cut).expect("inside grid");
    let part_mass = rules.partial(nodes, c, nodes[c], r_cut, f, 2);
    let part_moment = rules.partial(nodes, c, nodes[c], r_cut, f, 1);
    let mut inner = vec![0.0; c + 1];
    for k in 0..c {
        inner[k + 1] = inner[k] + rules.cell_mass(k, f);
    }
    let cut_mass = inner[c] + part_mass;
    let mut moment = part_moment;
    for i in (0..n).rev() {
        if i > c {
            values[i] = cut_mass / nodes[i];
            continue;
        }
        if i < c {
            moment += rules.cell_moment(i, f);
        }
        values[i] = inner[i] / nodes[i] + moment;
    }
    // A node sitting exactly on the cut belongs to the interior.
    if c + 1 < n && nodes[c + 1] <= r_cut {
        values[c + 1] = cut_mass / nodes[c + 1];
    }
    RadialFunction::new(grid, values)?.with_tail(Tail::Power(1.0))
}

/// Potential at an arbitrary radius.
/// Value at `x` of the potential of `rho` restricted to the closed ball of
/// radius `r_cut`, without interpolation: `M(r_cut)/x` outside the cut and
/// `M(x)/x + ∫_x^{r_cut} 4πs ρ(s) ds` inside.
pub fn partial_potential_at(rho: &RadialFunction, r_cut: f64, x: f64) -> Result<f64> {
    let grid = rho.grid();
    if !(r_cut > 0.0 && x > 0.0) {
        return param("cut radius and evaluation point must be positive");
    }
    if r_cut > grid.r_max() || x > grid.r_max() {
        return param(format!("radii must lie within the grid (r_max = {})", grid.r_max()));
    }
    let cut_mass = rho.mass_within(r_cut)?;
    if x >= r_cut {
        return Ok(cut_mass / x);
    }
    let x_eff = x.max(grid.r_min());
    let inner = rho.mass_within(x_eff)?;
    let moment = rho.first_moment_within(r_cut)? - rho.first_moment_within(x_eff)?;
    Ok(inner / x_eff + moment)
}

pub fn potential_at(rho: &RadialFunction, x: f64) -> Result<f64> {
    let grid = rho.grid();
    if !(x > 0.0) {
        return param(format!("radius must be positive, got {x}"));
    }
    let tail = rho.tail_terms();
    let total_grid = rho.mass_within(grid.r_max())?;
    let moment_grid = rho.first_moment_within(grid.r_max())?;
    if x > grid.r_max() {
        let m = total_grid + tail.mass_until(x)?;
        return Ok(m / x + tail.first_moment_from(x)?);
    }
    let x = x.max(grid.r_min());
    let inner = rho.mass_within(x)?;
    let outer = moment_grid - rho.first_moment_within(x)? + tail.first_moment()?;
    Ok(inner / x + outer)
}

/// `D(f) = (1/2) ∫ f (f * |x|^-1)`, tail included.
pub fn coulomb_norm(f: &RadialFunction) -> Result<f64> {
    let grid = f.grid();
    let nodes = grid.nodes();
    let rules = f.rules();
    let tail = f.tail_terms();
    let parts = PotentialParts::compute(nodes, &rules, f.values(), &tail)?;
    let v = parts.potential(nodes);
    let fv: Vec<f64> = f.values().iter().zip(&v).map(|(a, b)| a * b).collect();
    let grid_part = kahan_sum((0..rules.cells()).map(|c| rules.cell_mass(c, &fv)));
    let grid_mass = parts.total - parts.tail_mass;
    let tail_part = if tail.is_zero() {
        0.0
    } else {
        grid_mass * parts.tail_moment + 2.0 * tail.self_energy()?
    };
    Ok(0.5 * (grid_part + tail_part))
}

/// `∫ f (g * |x|^-1)` for two functions on one grid (tails ignored).
pub fn coulomb_pairing(f: &RadialFunction, g: &RadialFunction) -> Result<f64> {
    if !f.grid().same_as(g.grid()) {
        return param("functions live on different grids");
    }
    let v = newton_potential(g)?;
    let prod: Vec<f64> = f.values().iter().zip(v.values()).map(|(a, b)| a * b).collect();
    // The potential has a curvature kink wherever g jumps; keep stencils off it.
    RadialFunction::new(f.grid().clone(), prod)?
        .with_jumps(merged_jumps(f, g))?
        .integrate()
}

fn merged_jumps(f: &RadialFunction, g: &RadialFunction) -> Vec<Jump> {
    let mut jumps = f.jumps().to_vec();
    for j in g.jumps() {
        if !jumps.iter().any(|k| k.node == j.node) {
            jumps.push(*j);
        }
    }
    jumps
}

/// Both sides of one Coulomb inequality, without its unknown constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoulombEstimateReport {
    pub lhs: f64,
    pub rhs_without_constant: f64,
    pub implied_constant: f64,
    /// Set when `lhs = rhs = 0` and the constant is reported as 0.
    pub degenerate: bool,
}

impl CoulombEstimateReport {
    fn new(lhs: f64, rhs: f64) -> Result<Self> {
        if !(lhs.is_finite() && rhs.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "non-finite Coulomb estimate ({lhs}, {rhs})"
            )));
        }
        let degenerate = rhs == 0.0;
        let implied_constant = if degenerate {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        };
        Ok(Self {
            lhs,
            rhs_without_constant: rhs,
            implied_constant,
            degenerate,
        })
    }
}

/// The two Coulomb estimates at `|x| = x`:
/// `(f * |.|^-1)(x) ≤ C ||f||_{5/3}^{5/7} D(f)^{1/7}` and
/// `∫_{|y|<|x|} f(y)/|x-y| dy ≤ C ||f||_{5/3}^{5/6} (|x| D(f))^{1/12}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoulombEstimates {
    pub potential: CoulombEstimateReport,
    pub interior: CoulombEstimateReport,
}

pub fn check_coulomb_inequalities(f: &RadialFunction, x: f64) -> Result<CoulombEstimates> {
    let norm = f.lp_norm(5.0 / 3.0)?;
    let d = coulomb_norm(f)?.max(0.0);
    let lhs1 = potential_at(f, x)?.abs();
    let rhs1 = norm.powf(5.0 / 7.0) * d.powf(1.0 / 7.0);
    let inner = if x > f.grid().r_max() {
        f.integrate()?
    } else {
        f.mass_within(x)?
    };
    let lhs2 = (inner / x).abs();
    let rhs2 = norm.powf(5.0 / 6.0) * (x * d).powf(1.0 / 12.0);
    Ok(CoulombEstimates {
        potential: CoulombEstimateReport::new(lhs1, rhs1)?,
        interior: CoulombEstimateReport::new(lhs2, rhs2)?,
    })
}

/// `|∫ f g| ≤ (2π)^(-1/2) ||∇f||_2 D(g)^(1/2)`; returns `(lhs, rhs)`.
pub fn fefferman_seco(f: &RadialFunction, g: &RadialFunction) -> Result<(f64, f64)> {
    if !f.grid().same_as(g.grid()) {
        return param("functions live on different grids");
    }
    let prod: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    let lhs = RadialFunction::new(f.grid().clone(), prod)?
        .with_jumps(merged_jumps(f, g))?
        .integrate()?
        .abs();
    let rhs = (gradient_energy(f)? * coulomb_norm(g)?.max(0.0)).sqrt() / (2.0 * PI).sqrt();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{RadialGrid, FOUR_PI};

    fn unit_ball(n: usize, r_max: f64) -> RadialFunction {
        let g = RadialGrid::with_knots(1e-6, r_max, n, &[1.0]).unwrap();
        RadialFunction::indicator(g, &[(0.0, 1.0)])
            .unwrap()
            .scaled(3.0 / FOUR_PI)
    }

    #[test]
    fn ball_potential() {
        let ball = unit_ball(1200, 5.0);
        let v = newton_potential(&ball).unwrap();
        for (&r, &val) in ball.grid().nodes().iter().zip(v.values()) {
            let exact = if r >= 1.0 { 1.0 / r } else { (3.0 - r * r) / 2.0 };
            assert!((val - exact).abs() < 1e-8 * exact, "r={r}");
        }
    }

    #[test]
    fn zero_charge() {
        let g = RadialGrid::new(1e-3, 10.0, 64).unwrap();
        let z = RadialFunction::zeros(g);
        assert!(newton_potential(&z).unwrap().values().iter().all(|v| *v == 0.0));
        assert_eq!(coulomb_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn partial_cut_of_ball() {
        let ball = unit_ball(1200, 5.0);
        let p = partial_newton_potential(&ball, 0.5).unwrap();
        assert!((p.eval(1.0) - 0.125).abs() < 1e-8);
        let full = newton_potential(&ball).unwrap();
        let inf = partial_newton_potential(&ball, f64::INFINITY).unwrap();
        for (a, b) in inf.values().iter().zip(full.values()) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
        let empty = partial_newton_potential(&ball, 1e-9).unwrap();
        assert!(empty.values().iter().all(|v| *v == 0.0));
        assert!(partial_newton_potential(&ball, 0.0).is_err());
    }

    #[test]
    fn ball_self_energy() {
        let ball = unit_ball(1200, 1.0);
        let d = coulomb_norm(&ball).unwrap();
        assert!((d - 0.6).abs() < 1e-6 * 0.6);
    }

    #[test]
    fn degenerate_estimate_reports_zero() {
        let g = RadialGrid::new(1e-3, 10.0, 64).unwrap();
        let est = check_coulomb_inequalities(&RadialFunction::zeros(g), 1.0).unwrap();
        assert_eq!(est.potential.implied_constant, 0.0);
        assert!(est.potential.degenerate);
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let g = RadialGrid::new(0.01, 10.0, 20).unwrap();
        let rules = g.rules();
        let n = g.len();
        let zero_tail = Tail::Truncated.terms(0.0, g.r_max());
        let mut dense = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = apply(g.nodes(), rules, &e, &zero_tail).unwrap();
            for i in 0..n {
                dense[i][j] = col[i];
            }
        }
        let y: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 1.5).collect();
        let adj = apply_adjoint(g.nodes(), rules, &y);
        for j in 0..n {
            let expect: f64 = (0..n).map(|i| dense[i][j] * y[i]).sum();
            assert!((adj[j] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }
}
