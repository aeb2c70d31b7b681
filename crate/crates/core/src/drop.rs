//! Liquid drop model with a point background charge, restricted to finite
//! unions of concentric shells.

use serde::Serialize;
use std::f64::consts::PI;

use crate::coulomb::coulomb_norm;
use crate::error::{param, Error, Result};
use crate::grid::{shell_volume, RadialFunction, RadialGrid};

/// Disjoint, ordered shells `[a_k, b_k]` (a ball when `a_k = 0`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DropConfig {
    shells: Vec<(f64, f64)>,
    volume: f64,
    pub z: f64,
}

impl DropConfig {
    pub fn new(mut shells: Vec<(f64, f64)>, z: f64) -> Result<Self> {
        if !(z >= 0.0 && z.is_finite()) {
            return param(format!("background charge must be nonnegative, got {z}"));
        }
        shells.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(a, b) in &shells {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return param(format!("invalid shell [{a}, {b}]"));
            }
        }
        for w in shells.windows(2) {
            if w[1].0 < w[0].1 {
                return param(format!("shells [{}, {}] and [{}, {}] overlap", w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
        let volume = shells.iter().map(|&(a, b)| shell_volume(a, b)).sum();
        Ok(Self { shells, volume, z })
    }

    /// Ball of the given volume centred at the background charge.
    pub fn ball(volume: f64, z: f64) -> Result<Self> {
        if volume == 0.0 {
            return Self::new(vec![], z);
        }
        if !(volume > 0.0) {
            return param(format!("volume must be nonnegative, got {volume}"));
        }
        Self::new(vec![(0.0, ball_radius(volume))], z)
    }

    pub fn shells(&self) -> &[(f64, f64)] {
        &self.shells
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Same shells scaled by `lambda`.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(self.shells.iter().map(|&(a, b)| (lambda * a, lambda * b)).collect(), self.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DropEnergy {
    pub surface: f64,
    pub attraction: f64,
    pub repulsion: f64,
    pub total: f64,
}

pub fn ball_radius(volume: f64) -> f64 {
    (3.0 * volume / (4.0 * PI)).cbrt()
}

/// `(36π)^(1/3) N^(2/3)`: surface of the ball of volume `N`.
pub fn isoperimetric_surface(volume: f64) -> f64 {
    (36.0 * PI).cbrt() * volume.powf(2.0 / 3.0)
}

/// Energy terms of a shell configuration. The repulsion is the Coulomb norm
/// of the indicator on a grid with a node at every shell edge.
pub fn drop_energy(config: &DropConfig) -> Result<DropEnergy> {
    if config.shells.is_empty() {
        return Ok(DropEnergy {
            surface: 0.0,
            attraction: 0.0,
            repulsion: 0.0,
            total: 0.0,
        });
    }
    // Touching shells share a face that is not part of the boundary.
    let surface = merge_touching(&config.shells)
        .iter()
        .map(|&(a, b)| 4.0 * PI * (a * a + b * b))
        .sum();
    let attraction = -config.z * 2.0 * PI * config.shells.iter().map(|&(a, b)| b * b - a * a).sum::<f64>();
    let repulsion = repulsion(&config.shells)?;
    Ok(DropEnergy {
        surface,
        attraction,
        repulsion,
        total: surface + attraction + repulsion,
    })
}

fn repulsion(shells: &[(f64, f64)]) -> Result<f64> {
    let merged = merge_touching(shells);
    let r_max = merged[merged.len() - 1].1;
    let knots: Vec<f64> = merged
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|&x| x > 0.0 && x < r_max)
        .collect();
    let first = merged[0].0;
    // An inner hole needs no nodes: start the grid at its edge.
    let r_min = if first > 0.0 { first } else { 1e-7 * r_max };
    let n = 400 * knots.len() + 2000;
    let grid = RadialGrid::with_knots(r_min, r_max, n, &knots)?;
    let chi = RadialFunction::indicator(grid, &merged)?;
    coulomb_norm(&chi)
}

fn merge_touching(shells: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(shells.len());
    for &(a, b) in shells {
        match out.last_mut() {
            Some(last) if last.1 == a => last.1 = b,
            _ => out.push((a, b)),
        }
    }
    out
}

/// Closed-form energy of the ball of volume `v` around charge `z`:
/// `4πR² − 2πZR² + (3/5) v²/R`.
pub fn ball_energy(v: f64, z: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let r = ball_radius(v);
    4.0 * PI * r * r - 2.0 * PI * z * r * r + 0.6 * v * v / r
}

/// Binding margin `E_Z(ball N−m) + E_0(ball m) − E_Z(ball N)`; the escaped
/// piece sits at infinity and feels no background.
pub fn binding_margin(n: f64, z: f64, m: f64) -> f64 {
    ball_energy(n - m, z) + ball_energy(m, 0.0) - ball_energy(n, z)
}

/// True iff splitting off a ball of volume `m` to infinity does not lower
/// the energy.
pub fn binding_test(n: f64, z: f64, m: f64) -> Result<bool> {
    if !(m > 0.0 && m < n) {
        return param(format!("split mass must lie in (0, {n}), got {m}"));
    }
    Ok(binding_margin(n, z, m) >= 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SplitFamily {
    /// `m = N/2` only.
    Equal,
    /// `m ∈ {N/16, …, 8N/16}`, log-spaced absolute pieces and a golden
    /// section refinement around the best grid point.
    Scanned,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FissionThreshold {
    pub z: f64,
    pub n_star: f64,
    /// Split of smallest margin just above the threshold.
    pub best_split: f64,
    pub best_margin: f64,
    pub bisection_steps: usize,
}

/// Smallest margin over the split family, with the minimizing `m`.
fn worst_split(n: f64, z: f64, family: SplitFamily) -> (f64, f64) {
    let mut best = (f64::INFINITY, n / 2.0);
    let consider = |m: f64, best: &mut (f64, f64)| {
        if m > 0.0 && m < n {
            let g = binding_margin(n, z, m);
            if g < best.0 {
                *best = (g, m);
            }
        }
    };
    match family {
        SplitFamily::Equal => consider(n / 2.0, &mut best),
        SplitFamily::Scanned => {
            let mut ms: Vec<f64> = (1..=8).map(|k| k as f64 * n / 16.0).collect();
            // Small pieces matter once Z is large: the ball family then
            // prefers to shed O(1) volume, far below N/16.
            let (lo, hi) = (1e-3_f64, n / 2.0);
            if hi > lo {
                let steps = 64;
                ms.extend((0..=steps).map(|k| lo * (hi / lo).powf(k as f64 / steps as f64)));
            }
            ms.sort_by(f64::total_cmp);
            for &m in &ms {
                consider(m, &mut best);
            }
            let i = ms.iter().position(|&m| m == best.1).unwrap_or(0);
            let a = ms[i.saturating_sub(1)];
            let b = ms[(i + 1).min(ms.len() - 1)].min(n * (1.0 - 1e-12));
            let m = golden_min(|m| binding_margin(n, z, m), a, b);
            consider(m, &mut best);
        }
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-12 * b.abs() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Largest volume whose ball is stable against every split of the family,
/// by bisection to `1e-6` relative (tightened to `1e-12` here so oracles can
/// compare at `1e-6`).
pub fn fission_threshold(z: f64, family: SplitFamily) -> Result<FissionThreshold> {
    if !(z >= 0.0 && z.is_finite()) {
        return param(format!("Z must be nonnegative, got {z}"));
    }
    let stable = |n: f64| worst_split(n, z, family).0 >= 0.0;
    let mut lo = z.max(1e-3);
    let mut steps = 0;
    while !stable(lo) {
        lo /= 2.0;
        steps += 1;
        if lo < 1e-12 {
            return Err(Error::Fit(format!("no stable ball found for Z = {z}")));
        }
    }
    let mut hi = 2.0 * lo + 16.0;
    while stable(hi) {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if hi > 1e300 {
            return Err(Error::Fit(format!("no unstable ball found for Z = {z}")));
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let (best_margin, best_split) = worst_split(hi, z, family);
    Ok(FissionThreshold {
        z,
        n_star: lo,
        best_split,
        best_margin,
        bisection_steps: steps,
    })
}

/// Equal-split threshold at `Z = 0`: `a(2^(1/3) − 1) / (b(1 − 2^(-2/3)))`.
pub fn equal_split_threshold_neutral() -> f64 {
    let a = (36.0 * PI).cbrt();
    let b = 0.6 * (4.0 * PI / 3.0).cbrt();
    a * (2f64.cbrt() - 1.0) / (b * (1.0 - 2f64.powf(-2.0 / 3.0)))
}
