//! A quick, seeded invariant suite across all modules.

use std::f64::consts::PI;

use atomtf::analysis::{harmonic_majorant_check, interior_mass_identity};
use atomtf::coulomb::{coulomb_norm, coulomb_pairing, fefferman_seco};
use atomtf::drop::{ball_energy, drop_energy, DropConfig};
use atomtf::tf::tf_atomic_solve;
use atomtf::tfdw::{bound_state_test, tfdw_flow, BoundState, FlowConfig};
use atomtf::{ModelConstants, RadialFunction, RadialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::{Outcome, Status};
use crate::table::Table;
use crate::CliError;

struct Suite {
    table: Table,
    failed: bool,
}

impl Suite {
    /// Records `value <= tolerance`.
    fn check(&mut self, module: &str, name: &str, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        self.failed |= !pass;
        self.table
            .push(vec![module.into(), name.into(), value.into(), tolerance.into(), pass.into()]);
    }
}

fn bump(rng: &mut ChaCha8Rng, g: &std::sync::Arc<RadialGrid>) -> Result<RadialFunction, CliError> {
    let (a, c, w) = (rng.gen_range(0.1..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.3..1.5));
    Ok(RadialFunction::from_fn(g.clone(), |r| {
        let x = (r - c) / w;
        if x.abs() < 1.0 {
            a * (1.0 - x * x).powi(3)
        } else {
            0.0
        }
    })?)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn verify(seed: u64) -> Result<Outcome, CliError> {
    let mut s = Suite {
        table: Table::new(&["module", "check", "value", "tolerance", "pass"]),
        failed: false,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = RadialGrid::new(1e-5, 10.0, 1200)?;

    // radial_core
    let r: f64 = rng.gen_range(0.5..5.0);
    let cube = RadialFunction::from_fn(g.clone(), |x| x)?;
    let want = PI * r.powi(4);
    s.check("radial_core", "mass_within(r) of r", rel(cube.mass_within(r)?, want), 1e-8);

    // coulomb
    let f = bump(&mut rng, &g)?;
    let h = bump(&mut rng, &g)?;
    let (dfh, dhf) = (coulomb_pairing(&f, &h)?, coulomb_pairing(&h, &f)?);
    s.check("coulomb", "pairing symmetry", rel(dfh, dhf), 1e-6);
    let (df, dh) = (coulomb_norm(&f)?, coulomb_norm(&h)?);
    // The pairing carries no 1/2, the norm does.
    s.check("coulomb", "Cauchy-Schwarz excess", (0.25 * dfh * dfh) / (df * dh) - 1.0, 1e-10);
    s.check("coulomb", "norm negativity", -df.min(dh), 0.0);
    let (lhs, rhs) = fefferman_seco(&f, &h)?;
    s.check("coulomb", "gradient pairing excess", lhs / rhs - 1.0, 1e-8);

    // tf
    let z = 10.0;
    let tf = tf_atomic_solve(&ModelConstants::atomic(z, z)?, &RadialGrid::tf_default(z)?)?;
    s.check("tf", "neutral mass", rel(tf.rho_tf.integrate()?, z), 1e-6);
    s.check("tf", "mu", tf.mu.abs(), 1e-10);

    // tfdw
    let (z, n) = (2.0, 2.0);
    let config = FlowConfig::default();
    let sol = tfdw_flow(&ModelConstants::atomic(z, n)?, &RadialGrid::atomic_default(z, n)?, &config, None)?;
    let rises = sol.energy_history.windows(2).filter(|w| w[1] > w[0]).count();
    s.check("tfdw", "energy increases", rises as f64, 0.0);
    s.check("tfdw", "mass drift", sol.max_mass_drift, 1e-10);
    let bound = bound_state_test(&sol, &config)? == BoundState::Bound;
    s.check("tfdw", "neutral helium bound", if bound { 0.0 } else { 1.0 }, 0.0);

    // analysis
    let zz = rng.gen_range(0.0..10.0);
    let (lhs, rhs) = interior_mass_identity(&f, &h, zz, r)?;
    let scale = f.mass_within(r)? + h.mass_within(r)?;
    s.check("analysis", "interior mass identity", (lhs - rhs).abs() / scale, 1e-8);
    let hm = harmonic_majorant_check(&f, zz, r)?;
    let excess = (hm.max_value - hm.value_at_r) / hm.value_at_r.abs().max(zz).max(f64::MIN_POSITIVE);
    s.check("analysis", "harmonic majorant excess", excess, 1e-8);

    // liquid_drop
    let v = rng.gen_range(0.5..20.0);
    let zd = rng.gen_range(0.0..v);
    let e = drop_energy(&DropConfig::ball(v, zd)?)?;
    s.check("liquid_drop", "ball against closed form", rel(e.total, ball_energy(v, zd)), 1e-8);

    let status = if s.failed { Status::Violation } else { Status::Ok };
    s.table.note("seed", seed as usize);
    s.table.note("all_pass", !s.failed);
    Ok(Outcome { table: s.table, status })
}
