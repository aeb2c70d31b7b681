//! The TFDW functional on radial densities and its minimization at fixed mass.
//!
//! The flow runs on `ψ = √ρ`. Each step is a preconditioned, projected descent
//! step (Polak-Ribière conjugate directions by default) with Armijo
//! backtracking, followed by the multiplicative renormalization
//! `ψ ← ψ √(N / ∫ψ²)`. Energy differences between iterates are accumulated
//! term by term from node-wise differences, so descent stays measurable long
//! after `E(ψ_new) − E(ψ)` would be lost to cancellation.

use serde::Serialize;
use std::sync::Arc;

use crate::constants::ModelConstants;
use crate::coulomb::{apply, apply_adjoint, coulomb_norm};
use crate::error::{param, Error, Result};
use crate::grid::{gradient_energy, head_term, kahan_sum, RadialFunction, RadialGrid, Tail};
use crate::linalg::{fit_line, Tridiagonal};
use crate::tf::tf_atomic_solve;

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Initial trial step of every line search.
    pub step: f64,
    pub max_iter: usize,
    /// Target for `sqrt(g·P⁻¹g / N)`, the projected gradient in the
    /// preconditioner's dual norm.
    pub tol_residual: f64,
    /// Stall guard: stop (unconverged) once 50 consecutive accepted steps
    /// together lower the energy by less than `tol_energy · |E|`.
    pub tol_energy: f64,
    pub backtracking: f64,
    pub armijo: f64,
    /// Radius of the bound-state box; `None` means `r_max / 2`.
    pub r_box: Option<f64>,
    /// Mass tolerance of the bound-state test; `None` means `1e-3 N`.
    pub delta_bound: Option<f64>,
    /// Extra flow steps used to confirm that escaping mass persists.
    pub extra_steps: usize,
    /// Conjugate (PR+) directions instead of plain preconditioned descent.
    pub conjugate: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iter: 20000,
            tol_residual: 1e-8,
            tol_energy: 1e-15,
            backtracking: 0.5,
            armijo: 1e-4,
            r_box: None,
            delta_bound: None,
            extra_steps: 500,
            conjugate: true,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.step, self.tol_residual, self.tol_energy, self.armijo]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.max_iter == 0 {
            return param("flow step, tolerances and iteration limit must be positive");
        }
        if !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return param(format!("backtracking factor must lie in (0,1), got {}", self.backtracking));
        }
        if !(self.armijo < 1.0) {
            return param("Armijo constant must be below 1");
        }
        if matches!(self.r_box, Some(r) if !(r > 0.0)) || matches!(self.delta_bound, Some(d) if !(d > 0.0)) {
            return param("bound-test radius and mass tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundState {
    Bound,
    Unbound,
    Inconclusive,
}

/// Signed contributions: `total = kinetic + nuclear + hartree + gradient + exchange`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TfdwEnergy {
    pub kinetic: f64,
    pub nuclear: f64,
    pub hartree: f64,
    pub gradient: f64,
    pub exchange: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct TfdwSolution {
    pub constants: ModelConstants,
    pub psi: RadialFunction,
    pub rho0: RadialFunction,
    pub energy: f64,
    pub terms: TfdwEnergy,
    pub mu: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// The stall guard stopped the flow: the energy no longer moves.
    pub stalled: bool,
    pub bound_flag: Option<BoundState>,
    /// Energy after every accepted step, starting with the initial state.
    pub energy_history: Vec<f64>,
    /// Largest `|∫ψ² − N| / N` over all iterates.
    pub max_mass_drift: f64,
}

fn density_of(psi: &RadialFunction) -> Result<RadialFunction> {
    let tail = match psi.tail() {
        Tail::Power(p) => Tail::Power(2.0 * p),
        Tail::Truncated => Tail::Truncated,
        Tail::Sommerfeld { .. } => return param("a Sommerfeld tail describes a density, not its root"),
    };
    RadialFunction::density(psi.grid().clone(), psi.values().iter().map(|v| v * v).collect())?
        .with_jumps(psi.jumps().to_vec())?
        .with_tail(tail)
}

/// All five terms of the functional for `ρ = ψ²`. Below the first node `ρ` is
/// continued by a power law fitted to the innermost samples.
pub fn tfdw_energy(psi: &RadialFunction, constants: &ModelConstants) -> Result<TfdwEnergy> {
    let rho = density_of(psi)?;
    let head = |s: f64, k: i32| head_term(&rho, s, k);
    let kinetic = constants.c_tf * (rho.integrate_power(5.0 / 3.0)? + head(5.0 / 3.0, 2));
    let nuclear = -constants.z * (rho.first_moment_total()? + head(1.0, 1));
    let hartree = coulomb_norm(&rho)?;
    let gradient = if constants.c_w == 0.0 {
        0.0
    } else {
        constants.c_w * gradient_energy(psi)?
    };
    let exchange = if constants.c_d == 0.0 {
        0.0
    } else {
        -constants.c_d * (rho.integrate_power(4.0 / 3.0)? + head(4.0 / 3.0, 2))
    };
    Ok(TfdwEnergy {
        kinetic,
        nuclear,
        hartree,
        gradient,
        exchange,
        total: kinetic + nuclear + hartree + gradient + exchange,
    })
}

/// The `L²(4πr² dr)` gradient of the functional in `ψ` (no mass constraint):
/// `⟨g, η⟩ = d/dt E(ψ + tη)` at `t = 0` for the discrete energy.
pub fn tfdw_gradient(psi: &RadialFunction, constants: &ModelConstants) -> Result<RadialFunction> {
    if !psi.jumps().is_empty() || !psi.tail().is_truncated() {
        return param("the gradient is defined for continuous, truncated ψ");
    }
    let model = Model::new(psi.grid().clone(), *constants);
    let state = model.state(psi.values().to_vec());
    let g = model.gradient(&state);
    let values = g.iter().zip(&model.w).map(|(a, b)| a / b).collect();
    RadialFunction::new(psi.grid().clone(), values)
}

/// Discrete functional on a fixed grid with truncated tails.
struct Model {
    grid: Arc<RadialGrid>,
    c: ModelConstants,
    w: Vec<f64>,
    w1: Vec<f64>,
    /// `vol_c / Δr_c²`: the gradient energy is `Σ_c a_c (ψ_{c+1} − ψ_c)²`.
    a: Vec<f64>,
}

struct State {
    psi: Vec<f64>,
    rho: Vec<f64>,
    /// Newton potential of `ρ` at the nodes.
    pot: Vec<f64>,
}

impl Model {
    fn new(grid: Arc<RadialGrid>, c: ModelConstants) -> Self {
        let n = grid.len();
        let w = grid.weights().to_vec();
        let w1 = grid.rules().moment_weights(n);
        let r = grid.nodes();
        let a = (0..n - 1)
            .map(|k| grid.cell_volumes()[k] / (r[k + 1] - r[k]).powi(2))
            .collect();
        Self { grid, c, w, w1, a }
    }

    fn potential(&self, rho: &[f64]) -> Vec<f64> {
        let none = Tail::Truncated.terms(0.0, self.grid.r_max());
        apply(self.grid.nodes(), self.grid.rules(), rho, &none).expect("truncated tail")
    }

    fn state(&self, psi: Vec<f64>) -> State {
        let rho: Vec<f64> = psi.iter().map(|v| v * v).collect();
        let pot = self.potential(&rho);
        State { psi, rho, pot }
    }

    fn mass(&self, psi: &[f64]) -> f64 {
        kahan_sum(psi.iter().zip(&self.w).map(|(p, w)| w * p * p))
    }

    fn energy(&self, s: &State) -> f64 {
        let c = &self.c;
        let per_node = (0..s.psi.len()).map(|i| {
            let rho = s.rho[i];
            self.w[i]
                * (c.c_tf * rho.powf(5.0 / 3.0) - c.c_d * rho.powf(4.0 / 3.0) + 0.5 * rho * s.pot[i])
                - c.z * self.w1[i] * rho
        });
        let grad = (0..self.a.len()).map(|k| {
            let d = s.psi[k + 1] - s.psi[k];
            c.c_w * self.a[k] * d * d
        });
        kahan_sum(per_node.chain(grad))
    }

    /// `E(new) − E(old)` from node-wise differences.
    fn delta(&self, old: &State, new: &State) -> f64 {
        let c = &self.c;
        let n = old.psi.len();
        let drho: Vec<f64> = (0..n)
            .map(|i| (new.psi[i] - old.psi[i]) * (new.psi[i] + old.psi[i]))
            .collect();
        let kd = self.potential(&drho);
        let local = (0..n).map(|i| {
            let p = old.rho[i];
            let kin = c.c_tf * pow_diff(p, drho[i], 5.0 / 3.0);
            let exc = -c.c_d * pow_diff(p, drho[i], 4.0 / 3.0);
            let hartree = 0.5 * (drho[i] * new.pot[i] + p * kd[i]);
            self.w[i] * (kin + exc + hartree) - c.z * self.w1[i] * drho[i]
        });
        let grad = (0..self.a.len()).map(|k| {
            let d0 = old.psi[k + 1] - old.psi[k];
            let d1 = new.psi[k + 1] - new.psi[k];
            c.c_w * self.a[k] * (d1 - d0) * (d1 + d0)
        });
        kahan_sum(local.chain(grad))
    }

    /// `∂E/∂ψ_i` for the discrete energy.
    fn gradient(&self, s: &State) -> Vec<f64> {
        let c = &self.c;
        let n = s.psi.len();
        let wrho: Vec<f64> = s.rho.iter().zip(&self.w).map(|(r, w)| r * w).collect();
        let adj = apply_adjoint(self.grid.nodes(), self.grid.rules(), &wrho);
        let mut g: Vec<f64> = (0..n)
            .map(|i| {
                let p = s.psi[i];
                let rho = s.rho[i];
                let local = (10.0 / 3.0) * c.c_tf * rho.powf(2.0 / 3.0) - (8.0 / 3.0) * c.c_d * rho.powf(1.0 / 3.0);
                p * (self.w[i] * local - 2.0 * c.z * self.w1[i] + self.w[i] * s.pot[i] + adj[i])
            })
            .collect();
        for k in 0..self.a.len() {
            let d = 2.0 * c.c_w * self.a[k] * (s.psi[k + 1] - s.psi[k]);
            g[k + 1] += d;
            g[k] -= d;
        }
        g
    }

    fn preconditioner(&self, s: &State, mu: f64) -> Tridiagonal {
        let c = &self.c;
        let r = self.grid.nodes();
        let n = r.len();
        let mut diag: Vec<f64> = (0..n)
            .map(|i| {
                let rho = s.rho[i];
                let v = (5.0 / 3.0) * c.c_tf * rho.powf(2.0 / 3.0) - (4.0 / 3.0) * c.c_d * rho.powf(1.0 / 3.0)
                    - c.z / r[i]
                    + s.pot[i]
                    - mu;
                // Curvature of c ψ^(10/3) beyond its share in v; dominant near
                // the nucleus when there is no gradient term to stiffen it.
                let local = (40.0 / 9.0) * c.c_tf * rho.powf(2.0 / 3.0);
                self.w[i] * (2.0 * v.abs() + local + 1.0)
            })
            .collect();
        let mut off = vec![0.0; n - 1];
        for k in 0..n - 1 {
            let t = 2.0 * c.c_w * self.a[k];
            diag[k] += t;
            diag[k + 1] += t;
            off[k] = -t;
        }
        Tridiagonal { diag, off }
    }

    fn normalized(&self, mut psi: Vec<f64>) -> Vec<f64> {
        let m = self.mass(&psi);
        let s = (self.c.n / m).sqrt();
        for v in &mut psi {
            *v = (*v * s).abs();
        }
        psi
    }

    /// Remove the component along `ψ` (in the weighted inner product).
    fn project(&self, psi: &[f64], v: &mut [f64]) {
        let num = kahan_sum(v.iter().zip(psi).zip(&self.w).map(|((a, b), w)| a * b * w));
        let den = kahan_sum(psi.iter().zip(&self.w).map(|(b, w)| b * b * w));
        let t = num / den;
        for (a, b) in v.iter_mut().zip(psi) {
            *a -= t * b;
        }
    }
}

/// `(p + dp)^s − p^s` without cancellation when `dp` is small. `dp` must be
/// the exact difference (not recomputed from a rounded `p + dp`).
fn pow_diff(p: f64, dp: f64, s: f64) -> f64 {
    if dp == 0.0 {
        return 0.0;
    }
    if p <= 0.0 {
        return (p + dp).max(0.0).powf(s);
    }
    let l = (dp / p).max(-1.0).ln_1p();
    p.powf(s) * (s * l).exp_m1()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    kahan_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Default starting point: the TF atom of charge `Z` (its `r^-3/2` core capped
/// at `r = 1/(2Z)`), or an exponential cloud when `Z = 0`, scaled to mass `N`.
pub fn default_initial_psi(constants: &ModelConstants, grid: &Arc<RadialGrid>) -> Result<RadialFunction> {
    let z = constants.z;
    let values: Vec<f64> = if z > 0.0 {
        let tf = tf_atomic_solve(&constants.with_charge(z, z)?, grid)?;
        let cap = 0.5 / z;
        let cap_value = tf.rho_tf.eval(cap);
        tf.rho_tf
            .values()
            .iter()
            .zip(grid.nodes())
            .map(|(rho, r)| if *r < cap { cap_value } else { *rho })
            .collect()
    } else {
        let s = constants.n.cbrt();
        grid.nodes().iter().map(|r| (-r / s).exp()).collect()
    };
    let psi: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let model = Model::new(grid.clone(), *constants);
    RadialFunction::new(grid.clone(), model.normalized(psi))
}

const STALL_WINDOW: usize = 50;

/// Runs the flow and always returns the last iterate; `converged` records
/// whether the residual tolerance was met.
pub fn tfdw_flow(
    constants: &ModelConstants,
    grid: &Arc<RadialGrid>,
    config: &FlowConfig,
    init: Option<&RadialFunction>,
) -> Result<TfdwSolution> {
    config.validate()?;
    let model = Model::new(grid.clone(), *constants);
    let start = match init {
        Some(f) if f.grid().same_as(grid) => f.values().to_vec(),
        Some(f) => f.resample(grid.clone())?.into_values(),
        None => default_initial_psi(constants, grid)?.into_values(),
    };
    if start.iter().any(|v| !v.is_finite()) || start.iter().all(|v| *v == 0.0) {
        return param("initial ψ must be finite and not identically zero");
    }
    let n_target = constants.n;
    let mut state = model.state(model.normalized(start));
    let mut energy = model.energy(&state);
    let mut history = vec![energy];
    let mut max_drift = (model.mass(&state.psi) - n_target).abs() / n_target;
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None; // (z, gp, d)
    let mut converged = false;
    let mut stalled = false;
    let mut residual = f64::INFINITY;
    let mut mu = 0.0;
    let mut iterations = 0;
    while iterations < config.max_iter {
        let g = model.gradient(&state);
        let lambda = dot(&g, &state.psi) / dot(&state.psi.iter().zip(&model.w).map(|(p, w)| p * w).collect::<Vec<_>>(), &state.psi);
        mu = 0.5 * lambda;
        let gp: Vec<f64> = g
            .iter()
            .zip(&state.psi)
            .zip(&model.w)
            .map(|((gi, p), w)| gi - lambda * w * p)
            .collect();
        let pre = model.preconditioner(&state, mu);
        let mut z = pre.solve(&gp);
        model.project(&state.psi, &mut z);
        let dual = dot(&gp, &z).max(0.0);
        residual = (dual / n_target).sqrt();
        if residual <= config.tol_residual {
            converged = true;
            break;
        }
        let mut d: Vec<f64> = z.iter().map(|v| -v).collect();
        let mut conjugate_used = false;
        if config.conjugate {
            if let Some((z_old, gp_old, d_old)) = &prev {
                let den = dot(z_old, gp_old);
                let num = dot(&z, &gp) - dot(&z, gp_old);
                let beta = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
                if beta > 0.0 {
                    let mut cand: Vec<f64> = d.iter().zip(d_old).map(|(a, b)| a + beta * b).collect();
                    model.project(&state.psi, &mut cand);
                    if dot(&gp, &cand) < -1e-3 * dual {
                        d = cand;
                        conjugate_used = true;
                    }
                }
            }
        }
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if !conjugate_used {
                    break;
                }
                d = z.iter().map(|v| -v).collect();
                conjugate_used = false;
            }
            let slope = dot(&gp, &d);
            let mut alpha = config.step;
            while alpha > 1e-16 {
                let trial: Vec<f64> = state.psi.iter().zip(&d).map(|(p, di)| p + alpha * di).collect();
                let trial = model.state(model.normalized(trial));
                let de = model.delta(&state, &trial);
                if de <= config.armijo * alpha * slope {
                    accepted = Some((trial, de));
                    break;
                }
                alpha *= config.backtracking;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((trial, de)) = accepted else {
            log::debug!("tfdw flow: line search failed at iteration {iterations}, residual {residual:.3e}");
            break;
        };
        iterations += 1;
        energy += de;
        history.push(energy);
        max_drift = max_drift.max((model.mass(&trial.psi) - n_target).abs() / n_target);
        prev = Some((z, gp, d));
        state = trial;
        let k = history.len();
        if k > STALL_WINDOW && history[k - 1 - STALL_WINDOW] - energy <= config.tol_energy * energy.abs() {
            log::debug!("tfdw flow: energy stalled at iteration {iterations}, residual {residual:.3e}");
            stalled = true;
            break;
        }
    }
    log::debug!(
        "tfdw flow Z={} N={}: {iterations} steps, residual {residual:.3e}, converged {converged}",
        constants.z,
        constants.n
    );
    let psi = RadialFunction::new(grid.clone(), state.psi)?;
    let rho0 = density_of(&psi)?;
    let terms = tfdw_energy(&psi, constants)?;
    Ok(TfdwSolution {
        constants: *constants,
        psi,
        rho0,
        energy: terms.total,
        terms,
        mu,
        iterations,
        residual,
        converged,
        stalled,
        bound_flag: None,
        energy_history: history,
        max_mass_drift: max_drift,
    })
}

/// Minimizer of the TFDW functional at mass `N`; a convergence error if the
/// residual tolerance is not reached within `max_iter` steps.
pub fn tfdw_minimize(
    constants: &ModelConstants,
    grid: &Arc<RadialGrid>,
    config: &FlowConfig,
    init: Option<&RadialFunction>,
) -> Result<TfdwSolution> {
    let sol = tfdw_flow(constants, grid, config, init)?;
    if !sol.converged {
        return Err(Error::Convergence {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    Ok(sol)
}

/// Mass outside radius `r`.
fn mass_beyond(rho: &RadialFunction, r: f64) -> Result<f64> {
    Ok(rho.integrate()? - rho.mass_within(r)?)
}

/// Numerical proxy for the existence of a minimizer. Bound: the flow came to
/// rest, all but `δ` of the mass sits inside `R_box` and the density decays at
/// least like `r^-4` beyond it. Unbound: more than `δ` sits in the outer third of the grid and
/// stays there after `extra_steps` more flow steps. Anything else is
/// inconclusive.
pub fn bound_state_test(solution: &TfdwSolution, config: &FlowConfig) -> Result<BoundState> {
    let grid = solution.psi.grid();
    let n = solution.constants.n;
    let r_max = grid.r_max();
    let r_box = config.r_box.unwrap_or(r_max / 2.0).min(r_max);
    let delta = config.delta_bound.unwrap_or(1e-3 * n);
    let rho = &solution.rho0;
    let inner = rho.mass_within(r_box)?;
    // A cloud still expanding has a steep front too; only a resting state counts.
    let at_rest = solution.converged || solution.stalled;
    if at_rest && inner >= n - delta && decays(rho, r_box) {
        return Ok(BoundState::Bound);
    }
    let outer_edge = 2.0 * r_max / 3.0;
    if mass_beyond(rho, outer_edge)? > delta {
        let more = FlowConfig {
            max_iter: config.extra_steps.max(1),
            tol_residual: f64::MIN_POSITIVE,
            ..config.clone()
        };
        let next = tfdw_flow(&solution.constants, grid, &more, Some(&solution.psi))?;
        if mass_beyond(&next.rho0, outer_edge)? > delta {
            return Ok(BoundState::Unbound);
        }
    }
    Ok(BoundState::Inconclusive)
}

fn decays(rho: &RadialFunction, r_box: f64) -> bool {
    if rho.last_value() == 0.0 {
        return true;
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&r, &v) in rho.grid().nodes().iter().zip(rho.values()) {
        if r >= r_box && v > 0.0 {
            x.push(r.ln());
            y.push(v.ln());
        }
    }
    match fit_line(&x, &y) {
        Ok(fit) => fit.slope <= -4.0,
        Err(_) => true,
    }
}

impl TfdwSolution {
    pub fn with_bound_flag(mut self, config: &FlowConfig) -> Result<Self> {
        self.bound_flag = Some(bound_state_test(&self, config)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_psi_has_zero_energy_and_gradient() {
        let g = RadialGrid::new(1e-4, 20.0, 200).unwrap();
        let c = ModelConstants::atomic(2.0, 2.0).unwrap();
        let psi = RadialFunction::zeros(g);
        assert_eq!(tfdw_energy(&psi, &c).unwrap().total, 0.0);
        assert!(tfdw_gradient(&psi, &c).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pow_diff_is_accurate() {
        let p: f64 = 0.7;
        let exact = p.powf(5.0 / 3.0) * (5.0 / 3.0) * 1e-12;
        assert!((pow_diff(p, p * 1e-12, 5.0 / 3.0) - exact).abs() < 1e-9 * exact);
        assert_eq!(pow_diff(0.0, 8.0, 1.0 / 3.0), 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let bad = FlowConfig {
            backtracking: 1.0,
            ..FlowConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
