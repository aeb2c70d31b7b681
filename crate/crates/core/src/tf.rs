//! Thomas-Fermi minimizers: the neutral atom, the general external potential
//! with a mass budget, and the exterior problem with a support constraint.
//!
//! The TF equation `(5c/3) ρ^(2/3) = [φ − μ]_+`, `φ = V − ρ * |x|^-1`, is solved
//! for `φ` by Newton's method. The residual `F(φ) = φ − V + K ρ(φ)` has the
//! Jacobian `I + K diag(ρ'(φ))`, inverted with GMRES. The chemical potential
//! comes from bisection on the attained mass, which is monotone in `μ`.
//!
//! For Coulomb external potentials `V = Q/r` the screened potential is
//! evaluated as `(Q − M_tot)/r + M_out(r)/r − U_out(r)`. This avoids the
//! cancellation between `Q/r` and the electronic potential far from the
//! nucleus, where `φ ~ A r^-4` is many orders of magnitude below `Q/r`.

use serde::Serialize;
use std::sync::Arc;

use crate::constants::ModelConstants;
use crate::coulomb::{coulomb_norm, PotentialParts};
use crate::error::{param, Error, Result};
use crate::grid::{head_term, CellRules, Jump, RadialFunction, RadialGrid, Side, Tail};
use crate::linalg::{fit_line, gmres, LineFit};

/// Numerical controls shared by all TF solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TfSettings {
    /// Max over nodes of `|F_i|` relative to the size of the terms in `φ_i`.
    pub tol: f64,
    /// Largest allowed change of the attained mass between accepted iterates,
    /// relative to the mass.
    pub mass_drift: f64,
    pub max_newton: usize,
    /// Relative tolerance on the attained mass in the `μ` bisection.
    pub mass_tol: f64,
    pub max_bisection: usize,
}

impl Default for TfSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            mass_drift: 1e-10,
            max_newton: 100,
            mass_tol: 1e-8,
            max_bisection: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TfAtomicSolution {
    pub rho_tf: RadialFunction,
    pub phi_tf: RadialFunction,
    pub mu: f64,
    pub energy: f64,
    pub mass: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// One evaluation in the `μ` bisection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BisectionStep {
    pub mu: f64,
    pub mass: f64,
}

#[derive(Clone, Debug)]
pub struct TfGeneralSolution {
    pub rho: RadialFunction,
    pub phi: RadialFunction,
    pub mu: f64,
    pub mass_budget: f64,
    pub attained_mass: f64,
    pub energy: f64,
    pub history: Vec<BisectionStep>,
}

#[derive(Clone, Debug)]
pub struct ExteriorTfSolution {
    pub r_cut: f64,
    pub v_r: RadialFunction,
    pub rho_r: RadialFunction,
    pub phi_r: RadialFunction,
    pub mu_r: f64,
    pub attained_mass: f64,
    pub history: Vec<BisectionStep>,
}

#[derive(Clone, Debug)]
enum External {
    Coulomb(f64),
    Sampled(Vec<f64>),
}

struct Problem<'a> {
    grid: &'a Arc<RadialGrid>,
    rules: CellRules,
    external: External,
    support: usize,
    k: f64,
    amplitude: f64,
    settings: TfSettings,
}

struct Eval {
    rho: Vec<f64>,
    tail: Tail,
    phi_of_rho: Vec<f64>,
    scale: Vec<f64>,
    residual: Vec<f64>,
    rel: f64,
    mass: f64,
}

struct FixedMu {
    phi: Vec<f64>,
    eval: Eval,
    iterations: usize,
}

impl<'a> Problem<'a> {
    fn new(
        grid: &'a Arc<RadialGrid>,
        external: External,
        support: usize,
        constants: &ModelConstants,
        settings: TfSettings,
    ) -> Result<Self> {
        let jumps = if support > 0 && support < grid.len() - 1 {
            vec![Jump {
                node: support,
                side: Side::Right,
            }]
        } else {
            Vec::new()
        };
        Ok(Self {
            grid,
            rules: CellRules::build(grid.nodes(), &jumps)?,
            external,
            support,
            k: constants.density_factor(),
            amplitude: constants.sommerfeld_density_amplitude(),
            settings,
        })
    }

    fn jumps(&self) -> Vec<Jump> {
        if self.support > 0 && self.support < self.grid.len() - 1 {
            vec![Jump {
                node: self.support,
                side: Side::Right,
            }]
        } else {
            Vec::new()
        }
    }

    fn external_at(&self, i: usize) -> f64 {
        if i < self.support {
            return 0.0;
        }
        match &self.external {
            External::Coulomb(q) => q / self.grid.nodes()[i],
            External::Sampled(v) => v[i],
        }
    }

    fn initial_phi(&self, a_tf: f64) -> Vec<f64> {
        let nodes = self.grid.nodes();
        (0..nodes.len())
            .map(|i| {
                let v = self.external_at(i);
                if i < self.support {
                    0.0
                } else {
                    v.min(a_tf * nodes[i].powi(-4))
                }
            })
            .collect()
    }

    fn evaluate(&self, phi: &[f64], mu: f64) -> Result<Eval> {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let rho: Vec<f64> = (0..n)
            .map(|i| {
                if i < self.support {
                    0.0
                } else {
                    self.k * (phi[i] - mu).max(0.0).powf(1.5)
                }
            })
            .collect();
        let last = rho[n - 1];
        let tail = if mu == 0.0 && last > 0.0 {
            Tail::Sommerfeld {
                amplitude: self.amplitude,
            }
        } else {
            Tail::Truncated
        };
        let parts = PotentialParts::compute(nodes, &self.rules, &rho, &tail.terms(last, self.grid.r_max()))?;
        let mut phi_of_rho = vec![0.0; n];
        let mut scale = vec![0.0; n];
        // Rounding floor of each residual entry: the charges entering it are
        // only known to a few ulps of their own size.
        let mut floor = vec![0.0; n];
        for i in 0..n {
            let r = nodes[i];
            let (val, size, charge) = match (&self.external, i < self.support) {
                (_, true) => (-parts.outer_moment[i], parts.outer_moment[i].abs(), 0.0),
                (External::Coulomb(q), false) => {
                    let net = (q - parts.total) / r;
                    let out = parts.outer_mass[i] / r;
                    let size = net.abs() + out.abs() + parts.outer_moment[i].abs();
                    (net + out - parts.outer_moment[i], size, (q.abs() + parts.total.abs()) / r)
                }
                (External::Sampled(v), false) => {
                    let k = parts.inner_mass[i] / r + parts.outer_moment[i];
                    (v[i] - k, v[i].abs() + k.abs(), v[i].abs() + k.abs())
                }
            };
            phi_of_rho[i] = val;
            scale[i] = size.max(phi[i].abs());
            floor[i] = 64.0 * f64::EPSILON * charge;
        }
        let residual: Vec<f64> = phi.iter().zip(&phi_of_rho).map(|(a, b)| a - b).collect();
        let rel = (0..n)
            .map(|i| {
                let f = (residual[i].abs() - floor[i]).max(0.0);
                if scale[i] > 0.0 {
                    f / scale[i]
                } else {
                    f
                }
            })
            .fold(0.0, f64::max);
        Ok(Eval {
            rho,
            tail,
            phi_of_rho,
            scale,
            residual,
            rel,
            mass: parts.total,
        })
    }

    fn jacobian_apply(&self, d: &[f64], tail: Tail, v: &[f64]) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let dv: Vec<f64> = d.iter().zip(v).map(|(a, b)| a * b).collect();
        let last = dv[dv.len() - 1];
        let terms = tail.linearized().terms(last, self.grid.r_max());
        let parts = PotentialParts::compute(nodes, &self.rules, &dv, &terms)
            .expect("linearized tail decays fast enough");
        let k = parts.potential(nodes);
        v.iter().zip(&k).map(|(a, b)| a + b).collect()
    }

    fn solve_fixed_mu(&self, mu: f64, mut phi: Vec<f64>) -> Result<FixedMu> {
        let n = phi.len();
        let mut eval = self.evaluate(&phi, mu)?;
        let mut last_mass = f64::NAN;
        for it in 0..self.settings.max_newton {
            let drift_ok = (eval.mass - last_mass).abs() <= self.settings.mass_drift * eval.mass.max(1e-300);
            if eval.rel <= self.settings.tol && (drift_ok || eval.mass == 0.0) {
                return Ok(FixedMu {
                    phi,
                    eval,
                    iterations: it,
                });
            }
            let d: Vec<f64> = (0..n)
                .map(|i| {
                    if i >= self.support && phi[i] > mu {
                        1.5 * self.k * (phi[i] - mu).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            // Work in variables scaled by the local size of φ so the Krylov
            // solve sees every node with comparable weight.
            let s: Vec<f64> = eval.scale.iter().map(|v| if *v > 0.0 { *v } else { 1.0 }).collect();
            let rhs: Vec<f64> = eval.residual.iter().zip(&s).map(|(f, si)| -f / si).collect();
            let tail = eval.tail;
            let op = |y: &[f64]| {
                let x: Vec<f64> = y.iter().zip(&s).map(|(a, b)| a * b).collect();
                let jx = self.jacobian_apply(&d, tail, &x);
                jx.iter().zip(&s).map(|(a, b)| a / b).collect()
            };
            let (y, _) = gmres(op, &rhs, 1e-11, 80, 8);
            let step: Vec<f64> = y.iter().zip(&s).map(|(a, b)| a * b).collect();
            // Merit: the scaled 2-norm that the Newton step decreases, with
            // the scaling frozen at the current iterate.
            let merit = |f: &[f64]| f.iter().zip(&s).map(|(a, b)| (a / b).powi(2)).sum::<f64>();
            let current = merit(&eval.residual);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = phi.iter().zip(&step).map(|(p, st)| p + alpha * st).collect();
                let ev = self.evaluate(&trial, mu)?;
                if merit(&ev.residual) < current || ev.rel < eval.rel {
                    last_mass = eval.mass;
                    phi = trial;
                    eval = ev;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // No further decrease possible: accept if already at rounding level.
                if eval.rel <= 1e3 * self.settings.tol {
                    return Ok(FixedMu {
                        phi,
                        eval,
                        iterations: it,
                    });
                }
                return Err(Error::Convergence {
                    iterations: it,
                    residual: eval.rel,
                });
            }
        }
        Err(Error::Convergence {
            iterations: self.settings.max_newton,
            residual: eval.rel,
        })
    }

    fn functions(&self, sol: &FixedMu) -> Result<(RadialFunction, RadialFunction)> {
        let grid = self.grid.clone();
        let rho = RadialFunction::density(grid.clone(), sol.eval.rho.clone())?
            .with_jumps(self.jumps())?
            .with_tail(sol.eval.tail)?;
        let phi = RadialFunction::new(grid, sol.eval.phi_of_rho.clone())?.with_tail(Tail::Power(4.0))?;
        Ok((rho, phi))
    }

    /// Outer bisection on `μ`; returns the final fixed-`μ` state.
    fn solve_with_budget(&self, m: f64, a_tf: f64) -> Result<(f64, FixedMu, Vec<BisectionStep>)> {
        let mut history = Vec::new();
        let zero = self.solve_fixed_mu(0.0, self.initial_phi(a_tf))?;
        history.push(BisectionStep {
            mu: 0.0,
            mass: zero.eval.mass,
        });
        if zero.eval.mass <= m * (1.0 + self.settings.mass_tol) {
            return Ok((0.0, zero, history));
        }
        let v_max = (self.support..self.grid.len())
            .map(|i| self.external_at(i))
            .fold(0.0, f64::max);
        let mut hi = v_max;
        let mut lo = 0.0;
        let mut best = (0.0, zero);
        let mut steps = 0;
        // Bring the upper end down geometrically before bisecting.
        let mut mu = hi;
        loop {
            mu /= 8.0;
            steps += 1;
            let sol = self.solve_fixed_mu(mu, best.1.phi.clone())?;
            history.push(BisectionStep {
                mu,
                mass: sol.eval.mass,
            });
            let mass = sol.eval.mass;
            best = (mu, sol);
            if (mass - m).abs() <= self.settings.mass_tol * m {
                return Ok((best.0, best.1, history));
            }
            if mass > m {
                lo = mu;
                break;
            }
            hi = mu;
            if steps >= self.settings.max_bisection {
                break;
            }
        }
        while steps < self.settings.max_bisection {
            steps += 1;
            let mid = if lo > 0.0 && hi / lo > 2.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            let sol = self.solve_fixed_mu(mid, best.1.phi.clone())?;
            history.push(BisectionStep {
                mu: mid,
                mass: sol.eval.mass,
            });
            let mass = sol.eval.mass;
            best = (mid, sol);
            if (mass - m).abs() <= self.settings.mass_tol * m || hi - lo <= 1e-15 * hi {
                return Ok((best.0, best.1, history));
            }
            if mass > m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let residual = (best.1.eval.mass - m).abs() / m;
        Err(Error::Convergence {
            iterations: steps,
            residual,
        })
    }
}

/// `c ∫ρ^(5/3) − ∫Vρ + D(ρ)` with `V = charge/r` on the support of `ρ`.
///
/// Below the first node the density is continued by a fitted power law
/// (`r^-3/2` for TF atoms); the kinetic and attraction integrands behave like
/// `r^-1/2` there, so the head is not negligible.
pub fn tf_energy_coulomb(rho: &RadialFunction, charge: f64, c_tf: f64) -> Result<f64> {
    let kinetic = rho.integrate_power(5.0 / 3.0)? + head_term(rho, 5.0 / 3.0, 2);
    let attraction = charge * (rho.first_moment_total()? + head_term(rho, 1.0, 1));
    Ok(c_tf * kinetic - attraction + coulomb_norm(rho)?)
}

fn tf_energy_sampled(rho: &RadialFunction, v: &[f64], c_tf: f64) -> Result<f64> {
    let kinetic = rho.integrate_power(5.0 / 3.0)?;
    let vr: Vec<f64> = rho.values().iter().zip(v).map(|(a, b)| a * b).collect();
    let attraction = RadialFunction::new(rho.grid().clone(), vr)?
        .with_jumps(rho.jumps().to_vec())?
        .integrate()?;
    Ok(c_tf * kinetic - attraction + coulomb_norm(rho)?)
}

/// Neutral TF atom: `μ = 0`, `∫ρ = Z`.
pub fn tf_atomic_solve(constants: &ModelConstants, grid: &Arc<RadialGrid>) -> Result<TfAtomicSolution> {
    tf_atomic_solve_with(constants, grid, TfSettings::default())
}

pub fn tf_atomic_solve_with(
    constants: &ModelConstants,
    grid: &Arc<RadialGrid>,
    settings: TfSettings,
) -> Result<TfAtomicSolution> {
    let z = constants.z;
    if !(z > 0.0) {
        return param(format!("the TF atom needs Z > 0, got {z}"));
    }
    let problem = Problem::new(grid, External::Coulomb(z), 0, constants, settings)?;
    let sol = problem.solve_fixed_mu(0.0, problem.initial_phi(constants.a_tf()))?;
    let (rho, phi) = problem.functions(&sol)?;
    let energy = tf_energy_coulomb(&rho, z, constants.c_tf)?;
    log::debug!(
        "tf atom Z={z}: {} Newton steps, residual {:.3e}, mass {}",
        sol.iterations,
        sol.eval.rel,
        sol.eval.mass
    );
    Ok(TfAtomicSolution {
        rho_tf: rho,
        phi_tf: phi,
        mu: 0.0,
        energy,
        mass: sol.eval.mass,
        iterations: sol.iterations,
        residual: sol.eval.rel,
    })
}

/// TF minimizer for the external potential `v` with `∫ρ ≤ m`.
pub fn tf_general_solve(
    v: &RadialFunction,
    m: f64,
    constants: &ModelConstants,
    settings: TfSettings,
) -> Result<TfGeneralSolution> {
    if !(m > 0.0) {
        return param(format!("mass budget must be positive, got {m}"));
    }
    if !v.jumps().is_empty() {
        return param("external potential must be continuous");
    }
    let vanishes = match v.tail() {
        Tail::Power(p) => p >= 1.0,
        Tail::Sommerfeld { .. } => true,
        Tail::Truncated => v.last_value() == 0.0,
    };
    if !vanishes {
        return param("external potential must vanish at infinity (tail exponent at least 1)");
    }
    let grid = v.grid();
    let external = coulomb_charge(v.values(), grid.nodes(), 0)
        .map(External::Coulomb)
        .unwrap_or_else(|| External::Sampled(v.values().to_vec()));
    let problem = Problem::new(grid, external.clone(), 0, constants, settings)?;
    if v.values().iter().all(|x| *x <= 0.0) {
        let zero = RadialFunction::zeros(grid.clone());
        return Ok(TfGeneralSolution {
            rho: zero,
            phi: v.clone(),
            mu: 0.0,
            mass_budget: m,
            attained_mass: 0.0,
            energy: 0.0,
            history: vec![BisectionStep { mu: 0.0, mass: 0.0 }],
        });
    }
    let (mu, sol, history) = problem.solve_with_budget(m, constants.a_tf())?;
    let (rho, phi) = problem.functions(&sol)?;
    let energy = match &external {
        External::Coulomb(q) => tf_energy_coulomb(&rho, *q, constants.c_tf)?,
        External::Sampled(vals) => tf_energy_sampled(&rho, vals, constants.c_tf)?,
    };
    Ok(TfGeneralSolution {
        rho,
        phi,
        mu,
        mass_budget: m,
        attained_mass: sol.eval.mass,
        energy,
        history,
    })
}

/// TF minimizer over densities supported in `r ≥ r_cut` for the external
/// potential `χ_{r ≥ r_cut} φ_screened`. The support starts at the first node
/// at or above `r_cut`.
pub fn tf_exterior_solve(
    phi_screened: &RadialFunction,
    r_cut: f64,
    mass_budget: f64,
    constants: &ModelConstants,
    settings: TfSettings,
) -> Result<ExteriorTfSolution> {
    let grid = phi_screened.grid();
    if !(r_cut > 0.0) || r_cut > grid.r_max() {
        return param(format!("cut radius {r_cut} outside the grid"));
    }
    if !(mass_budget >= 0.0) {
        return param(format!("mass budget must be nonnegative, got {mass_budget}"));
    }
    let b = grid.first_node_at_or_above(r_cut);
    if b >= grid.len() - 1 {
        return param("cut radius leaves no room for an exterior density");
    }
    let n = grid.len();
    let mut v_vals = vec![0.0; n];
    v_vals[b..].copy_from_slice(&phi_screened.values()[b..]);
    let jumps = if b > 0 {
        vec![Jump {
            node: b,
            side: Side::Right,
        }]
    } else {
        Vec::new()
    };
    let v_r = RadialFunction::new(grid.clone(), v_vals.clone())?
        .with_jumps(jumps.clone())?
        .with_tail(Tail::Power(1.0))?;
    let zero = || -> Result<ExteriorTfSolution> {
        let phi_r = crate::coulomb::newton_potential(&RadialFunction::zeros(grid.clone()))?;
        Ok(ExteriorTfSolution {
            r_cut,
            v_r: v_r.clone(),
            rho_r: RadialFunction::zeros(grid.clone()),
            phi_r: v_r.clone().add_scaled(1.0, &phi_r)?,
            mu_r: 0.0,
            attained_mass: 0.0,
            history: vec![BisectionStep { mu: 0.0, mass: 0.0 }],
        })
    };
    if mass_budget == 0.0 || v_vals[b..].iter().all(|x| *x <= 0.0) {
        return zero();
    }
    let external = coulomb_charge(&v_vals, grid.nodes(), b)
        .map(External::Coulomb)
        .unwrap_or(External::Sampled(v_vals));
    let problem = Problem::new(grid, external, b, constants, settings)?;
    let (mu, sol, history) = problem.solve_with_budget(mass_budget, constants.a_tf())?;
    let (rho_r, phi_r) = problem.functions(&sol)?;
    Ok(ExteriorTfSolution {
        r_cut,
        v_r,
        rho_r,
        phi_r,
        mu_r: mu,
        attained_mass: sol.eval.mass,
        history,
    })
}

/// `Q` when `r v(r)` is constant (to 1e-10) on the nodes from `start` on.
fn coulomb_charge(v: &[f64], nodes: &[f64], start: usize) -> Option<f64> {
    let q = v[start] * nodes[start];
    if q == 0.0 {
        return None;
    }
    let ok = (start..v.len()).all(|i| (v[i] * nodes[i] - q).abs() <= 1e-10 * q.abs());
    ok.then_some(q)
}

/// Two-sided Sommerfeld bounds for a TF potential beyond radius `r`.
#[derive(Clone, Debug)]
pub struct SommerfeldEnvelope {
    pub r: f64,
    pub a_r: f64,
    pub big_a_r: f64,
    pub zeta: f64,
    /// `φ(x) / (A |x|^-4)` at every node.
    pub ratio_profile: RadialFunction,
    /// Largest violation of either bound over nodes `≥ r` (negative when the
    /// envelope holds strictly).
    pub worst_violation: f64,
}

/// Slack allowed on the ratio when checking the envelope.
pub const SOMMERFELD_SLACK: f64 = 1e-6;

pub fn sommerfeld_check(phi: &RadialFunction, r: f64, constants: &ModelConstants) -> Result<SommerfeldEnvelope> {
    let grid = phi.grid();
    if !(r >= grid.r_min() && r <= grid.r_max()) {
        return param(format!("radius {r} outside the grid"));
    }
    let a = constants.a_tf();
    let zeta = constants.zeta();
    let ratio_profile = phi.map(|x, v| v * x.powi(4) / a)?;
    let q = phi.eval(r) * r.powi(4) / a;
    if !(q > 0.0) {
        return Err(Error::InvariantViolation(format!(
            "potential is not positive at r = {r}"
        )));
    }
    let a_r = q.powf(-0.5) - 1.0;
    let big_a_r = q - 1.0;
    let start = grid.first_node_at_or_above(r);
    let mut worst = f64::NEG_INFINITY;
    for i in start..grid.len() {
        let x = grid.nodes()[i];
        let t = (r / x).powf(zeta);
        let lower = (1.0 + a_r * t).powi(-2);
        let upper = 1.0 + big_a_r * t;
        let ratio = ratio_profile.values()[i];
        let v = (lower - ratio).max(ratio - upper);
        if v > worst {
            worst = v;
        }
        if v > SOMMERFELD_SLACK {
            return Err(Error::InvariantViolation(format!(
                "Sommerfeld envelope fails at r = {x}: ratio {ratio}, bounds [{lower}, {upper}]"
            )));
        }
    }
    Ok(SommerfeldEnvelope {
        r,
        a_r,
        big_a_r,
        zeta,
        ratio_profile,
        worst_violation: worst,
    })
}

impl TfAtomicSolution {
    pub fn sommerfeld(&self, r: f64, constants: &ModelConstants) -> Result<SommerfeldEnvelope> {
        sommerfeld_check(&self.phi_tf, r, constants)
    }

    /// Least-squares slope of `log(1 − ratio)` against `log(r Z^(1/3))` over
    /// the nodes with `r Z^(1/3)` inside `window`.
    pub fn sommerfeld_decay_fit(&self, constants: &ModelConstants, window: (f64, f64)) -> Result<LineFit> {
        let scale = constants.z.cbrt();
        let a = constants.a_tf();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (&r, &phi) in self.phi_tf.grid().nodes().iter().zip(self.phi_tf.values()) {
            let x = r * scale;
            if x >= window.0 && x <= window.1 {
                let gap = 1.0 - phi * r.powi(4) / a;
                if gap > 0.0 {
                    xs.push(x.ln());
                    ys.push(gap.ln());
                }
            }
        }
        if xs.len() < 8 {
            return Err(Error::Fit(format!("only {} usable points in the window", xs.len())));
        }
        fit_line(&xs, &ys)
    }
}

impl ExteriorTfSolution {
    pub fn sommerfeld(&self, r: f64, constants: &ModelConstants) -> Result<SommerfeldEnvelope> {
        sommerfeld_check(&self.phi_r, r, constants)
    }
}

/// Max over nodes of `|(5c/3) ρ^(2/3) − [φ − μ]_+|` for nodes in the support.
pub fn tf_equation_residual(rho: &RadialFunction, phi: &RadialFunction, mu: f64, c_tf: f64, support_start: usize) -> f64 {
    rho.values()
        .iter()
        .zip(phi.values())
        .skip(support_start)
        .map(|(r, p)| ((5.0 * c_tf / 3.0) * r.powf(2.0 / 3.0) - (p - mu).max(0.0)).abs())
        .fold(0.0, f64::max)
}
