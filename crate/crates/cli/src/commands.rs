use atomtf::analysis::{
    compare_screened, harmonic_majorant_check, interior_mass_identity, ionization_scan, radius_of_atom, ScanSettings,
};
use atomtf::drop::{equal_split_threshold_neutral, fission_threshold};
use atomtf::linalg::fit_line;
use atomtf::tf::tf_atomic_solve;
use atomtf::tfdw::{bound_state_test, tfdw_flow, BoundState, TfdwSolution};
use atomtf::RadialGrid;

use crate::config::RunConfig;
use crate::table::{Cell, Table};
use crate::CliError;

/// How a command finished once its table is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    Violation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 3,
            Status::Violation => 4,
        }
    }

    fn worst(self, other: Status) -> Status {
        if self.exit_code() >= other.exit_code() {
            self
        } else {
            other
        }
    }
}

pub struct Outcome {
    pub table: Table,
    pub status: Status,
}

pub const DEFAULT_IONIZATION_Z: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
pub const DEFAULT_DROP_Z: [f64; 5] = [0.0, 10.0, 100.0, 1000.0, 10000.0];

pub fn tf(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (z, _) = cfg.single_atom()?;
    let c = cfg.constants(z, z)?;
    let grid = cfg.grid_or(|| RadialGrid::tf_default(z))?;
    let sol = tf_atomic_solve(&c, &grid)?;
    let mut t = Table::new(&["r", "rho_tf", "phi_tf"]);
    for ((r, rho), phi) in grid.nodes().iter().zip(sol.rho_tf.values()).zip(sol.phi_tf.values()) {
        t.push(vec![(*r).into(), (*rho).into(), (*phi).into()]);
    }
    t.note("Z", z);
    t.note("mass", sol.rho_tf.integrate()?);
    t.note("mu", sol.mu);
    t.note("energy", sol.energy);
    t.note("energy_per_z73", sol.energy / z.powf(7.0 / 3.0));
    t.note("iterations", sol.iterations);
    t.note("residual", sol.residual);
    Ok(Outcome {
        table: t,
        status: Status::Ok,
    })
}

fn flow_status(sol: &TfdwSolution) -> Status {
    if sol.converged || sol.stalled {
        Status::Ok
    } else {
        Status::NotConverged
    }
}

fn solve_atom(cfg: &RunConfig, z: f64, n: f64) -> Result<TfdwSolution, CliError> {
    let c = cfg.constants(z, n)?;
    let grid = cfg.grid_or(|| RadialGrid::atomic_default(z, n))?;
    Ok(tfdw_flow(&c, &grid, &cfg.flow, None)?)
}

fn bound_label(b: BoundState) -> &'static str {
    match b {
        BoundState::Bound => "bound",
        BoundState::Unbound => "unbound",
        BoundState::Inconclusive => "inconclusive",
    }
}

pub fn tfdw(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (z, n) = cfg.single_atom()?;
    let sol = solve_atom(cfg, z, n)?;
    let bound = bound_state_test(&sol, &cfg.flow)?;
    let mut t = Table::new(&["r", "psi", "rho0"]);
    for ((r, p), rho) in sol.psi.grid().nodes().iter().zip(sol.psi.values()).zip(sol.rho0.values()) {
        t.push(vec![(*r).into(), (*p).into(), (*rho).into()]);
    }
    t.note("Z", z);
    t.note("N", n);
    t.note("energy", sol.energy);
    t.note("kinetic", sol.terms.kinetic);
    t.note("nuclear", sol.terms.nuclear);
    t.note("hartree", sol.terms.hartree);
    t.note("gradient", sol.terms.gradient);
    t.note("exchange", sol.terms.exchange);
    t.note("mu", sol.mu);
    t.note("iterations", sol.iterations);
    t.note("residual", sol.residual);
    t.note("converged", sol.converged);
    t.note("stalled", sol.stalled);
    t.note("max_mass_drift", sol.max_mass_drift);
    t.note("bound", bound_label(bound));
    Ok(Outcome {
        status: flow_status(&sol),
        table: t,
    })
}

pub fn screen(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (z, n) = cfg.single_atom()?;
    let sol = solve_atom(cfg, z, n)?;
    let tf = tf_atomic_solve(&cfg.constants(z, z)?, &RadialGrid::tf_default(z)?)?;
    let pair = compare_screened(&sol, &tf, cfg.d_fit)?;
    let mut t = Table::new(&["r", "phi", "phi_tf", "diff"]);
    for i in 0..pair.r_values.len() {
        t.push(vec![
            pair.r_values[i].into(),
            pair.phi_diag[i].into(),
            pair.phi_tf_diag[i].into(),
            pair.diff[i].into(),
        ]);
    }
    let mut status = flow_status(&sol);
    t.note("Z", z);
    t.note("N", n);
    t.note("fit_lo", pair.fit_window.0);
    t.note("fit_hi", pair.fit_window.1);
    t.note("fit_points", pair.fit.points);
    t.note("slope", pair.fit.slope);
    t.note("intercept", pair.fit.intercept);
    t.note("slope_above_minus_4", pair.fit.slope > -4.0);
    t.note("small_r_constant", pair.small_r_constant(z, z.powf(-1.0 / 3.0)));
    let radii = if cfg.r.is_empty() { vec![1.0] } else { cfg.r.clone() };
    for r in radii {
        let (lhs, rhs) = interior_mass_identity(&tf.rho_tf, &sol.rho0, z, r)?;
        let scale = tf.rho_tf.mass_within(r)? + sol.rho0.mass_within(r)?;
        let ok = (lhs - rhs).abs() <= 1e-8 * scale.max(f64::MIN_POSITIVE);
        t.note(&format!("identity_lhs@{r}"), lhs);
        t.note(&format!("identity_rhs@{r}"), rhs);
        t.note(&format!("identity_ok@{r}"), ok);
        if !ok {
            status = status.worst(Status::Violation);
        }
    }
    let r0 = z.powf(-1.0 / 3.0);
    for (name, rho) in [("tf", &tf.rho_tf), ("tfdw", &sol.rho0)] {
        let h = harmonic_majorant_check(rho, z, r0)?;
        t.note(&format!("harmonic_{name}"), h.holds);
        if !h.holds {
            status = status.worst(Status::Violation);
        }
    }
    Ok(Outcome { table: t, status })
}

pub fn radius(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (z, n) = cfg.single_atom()?;
    if cfg.kappa.is_empty() {
        return Err(CliError::Config("radius needs --kappa".into()));
    }
    let sol = solve_atom(cfg, z, n)?;
    let mut kappas = cfg.kappa.clone();
    kappas.sort_by(f64::total_cmp);
    let mut t = Table::new(&["kappa", "radius", "ratio"]);
    let mut monotone = true;
    let mut last = f64::INFINITY;
    for k in kappas {
        let r = radius_of_atom(&sol, k)?;
        monotone &= r.radius <= last;
        last = r.radius;
        t.push(vec![k.into(), r.radius.into(), r.ratio.into()]);
    }
    t.note("Z", z);
    t.note("N", n);
    t.note("b_tf", sol.constants.b_tf());
    t.note("monotone", monotone);
    let status = if monotone { flow_status(&sol) } else { Status::Violation };
    Ok(Outcome { table: t, status })
}

pub fn ionize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let zs = if cfg.z.is_empty() {
        DEFAULT_IONIZATION_Z.to_vec()
    } else {
        cfg.z.clone()
    };
    let settings = ScanSettings {
        scan_step: cfg.scan_step,
        flow: cfg.flow.clone(),
        jobs: cfg.jobs,
    };
    let curve = ionization_scan(&zs, &cfg.constants(1.0, 1.0)?, &settings)?;
    let mut t = Table::new(&["Z", "Nc", "N_above", "excess", "coarse_bound", "error"]);
    let mut ok = curve.coarse_bound_check.iter();
    let mut status = Status::Ok;
    for p in &curve.points {
        let coarse: Cell = match &p.error {
            None => (*ok.next().expect("one check per scanned Z")).into(),
            Some(_) => "".into(),
        };
        if p.error.is_some() {
            status = Status::NotConverged;
        }
        t.push(vec![
            p.z.into(),
            p.nc.into(),
            p.n_above.into(),
            (p.nc - p.z).into(),
            coarse,
            p.error.clone().unwrap_or_default().into(),
        ]);
    }
    t.note("scan_step", cfg.scan_step);
    t.note("excess_slope", curve.excess_fit.map_or(f64::NAN, |f| f.slope));
    t.note("c_fit", curve.c_fit);
    t.note(
        "nc_at_least_z",
        curve.points.iter().filter(|p| p.error.is_none()).all(|p| p.nc >= p.z),
    );
    Ok(Outcome { table: t, status })
}

pub fn drop(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let zs = if cfg.z.is_empty() { DEFAULT_DROP_Z.to_vec() } else { cfg.z.clone() };
    let family = cfg.split_family.into();
    let mut t = Table::new(&["Z", "n_star", "excess", "best_split", "best_margin", "bisection_steps"]);
    let (mut xs, mut ys) = (vec![], vec![]);
    for z in zs {
        let th = fission_threshold(z, family)?;
        if z > 0.0 && th.n_star > z {
            xs.push(z.ln());
            ys.push((th.n_star - z).ln());
        }
        t.push(vec![
            z.into(),
            th.n_star.into(),
            (th.n_star - z).into(),
            th.best_split.into(),
            th.best_margin.into(),
            th.bisection_steps.into(),
        ]);
    }
    t.note("family", format!("{:?}", cfg.split_family).to_lowercase());
    // Only concentric shells are searched: a probe of the threshold, not the
    // threshold of the unrestricted problem.
    t.note("configurations", "concentric shells");
    t.note("equal_split_neutral_closed_form", equal_split_threshold_neutral());
    t.note(
        "excess_log_slope",
        if xs.len() >= 2 { fit_line(&xs, &ys)?.slope } else { f64::NAN },
    );
    Ok(Outcome {
        table: t,
        status: Status::Ok,
    })
}
