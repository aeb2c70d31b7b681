//! Logarithmic radial grids, product quadrature and sampled radial functions.
//!
//! Every integral `∫ f(r) 4πr² dr` is evaluated cell by cell. On a cell the
//! samples are replaced by the Lagrange cubic through the nodes `j-1..=j+2`
//! (shifted to stay inside a smooth segment) and that cubic is integrated
//! exactly against `4πr²` or `4πr` with three-point Gauss-Legendre. Shell
//! volumes and polynomials up to degree three come out exact to rounding.
//!
//! Functions may declare jumps at nodes. A stencil never reaches across a
//! jump, so indicators of balls and shells integrate exactly as well.

use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::constants::zeta;
use crate::error::{param, Error, Result};

pub(crate) const FOUR_PI: f64 = 4.0 * PI;

const GL3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Which side of a jump owns the sample stored at the jump node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// A discontinuity located exactly at a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Jump {
    pub node: usize,
    pub side: Side,
}

/// Behaviour of a function beyond `r_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// Zero beyond the last node (or the domain simply ends there).
    Truncated,
    /// `f(r) = f(r_max) (r / r_max)^-p`.
    Power(f64),
    /// `f(r) = a r^-6 + c r^(-6-zeta)` with `c` fixed by continuity at `r_max`:
    /// the first two terms of the asymptotic TF density.
    Sommerfeld { amplitude: f64 },
}

impl Tail {
    pub(crate) fn terms(&self, f_end: f64, r_end: f64) -> TailTerms {
        let mut t = TailTerms {
            coef: [0.0; 2],
            exponent: [0.0; 2],
            r_end,
        };
        if f_end == 0.0 {
            return t;
        }
        match *self {
            Tail::Truncated => {}
            Tail::Power(p) => {
                t.coef[0] = f_end;
                t.exponent[0] = p;
            }
            Tail::Sommerfeld { amplitude } => {
                let lead = amplitude * r_end.powi(-6);
                t.coef = [lead, f_end - lead];
                t.exponent = [6.0, 6.0 + zeta()];
            }
        }
        t
    }

    /// The tail of a first-order perturbation: for the Sommerfeld closure the
    /// universal leading term is fixed and only the correction moves.
    pub(crate) fn linearized(&self) -> Tail {
        match *self {
            Tail::Sommerfeld { .. } => Tail::Power(6.0 + zeta()),
            other => other,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, Tail::Truncated)
    }
}

/// `f(r) = Σ coef_j (r / r_end)^-exponent_j` for `r > r_end`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TailTerms {
    pub(crate) coef: [f64; 2],
    pub(crate) exponent: [f64; 2],
    pub(crate) r_end: f64,
}

impl TailTerms {
    pub(crate) fn is_zero(&self) -> bool {
        self.coef == [0.0; 2]
    }

    fn require(&self, k: f64) -> Result<()> {
        for j in 0..2 {
            if self.coef[j] != 0.0 && self.exponent[j] <= k {
                return Err(Error::DivergentTail {
                    exponent: self.exponent[j],
                    required: k,
                });
            }
        }
        Ok(())
    }

    /// `∫_R^∞ f(r) r^k dr`.
    pub(crate) fn moment(&self, k: f64) -> Result<f64> {
        self.require(k + 1.0)?;
        let r = self.r_end;
        let mut s = 0.0;
        for j in 0..2 {
            if self.coef[j] != 0.0 {
                s += self.coef[j] * r.powf(k + 1.0) / (self.exponent[j] - k - 1.0);
            }
        }
        Ok(s)
    }

    pub(crate) fn mass(&self) -> Result<f64> {
        Ok(FOUR_PI * self.moment(2.0)?)
    }

    pub(crate) fn first_moment(&self) -> Result<f64> {
        Ok(FOUR_PI * self.moment(1.0)?)
    }

    /// Coulomb self-energy of the tail alone.
    pub(crate) fn self_energy(&self) -> Result<f64> {
        self.require(3.0)?;
        let r5 = self.r_end.powi(5);
        let mut s = 0.0;
        for j in 0..2 {
            for l in 0..2 {
                let (cj, cl) = (self.coef[j], self.coef[l]);
                if cj != 0.0 && cl != 0.0 {
                    let (pj, pl) = (self.exponent[j], self.exponent[l]);
                    s += cj * cl / ((pj - 2.0) * (pj + pl - 5.0));
                }
            }
        }
        Ok(16.0 * PI * PI * r5 * s)
    }

    pub(crate) fn value_at(&self, r: f64) -> f64 {
        let x = r / self.r_end;
        (0..2)
            .filter(|&j| self.coef[j] != 0.0)
            .map(|j| self.coef[j] * x.powf(-self.exponent[j]))
            .sum()
    }

    /// Tail mass between `r_end` and `r`.
    pub(crate) fn mass_until(&self, r: f64) -> Result<f64> {
        self.require(3.0)?;
        let x = r / self.r_end;
        let r3 = self.r_end.powi(3);
        let mut s = 0.0;
        for j in 0..2 {
            if self.coef[j] != 0.0 {
                let p = self.exponent[j];
                s += self.coef[j] * (1.0 - x.powf(3.0 - p)) / (p - 3.0);
            }
        }
        Ok(FOUR_PI * r3 * s)
    }

    /// `∫_r^∞ f(s) 4πs ds` for `r ≥ r_end`.
    pub(crate) fn first_moment_from(&self, r: f64) -> Result<f64> {
        self.require(2.0)?;
        let x = r / self.r_end;
        let r2 = self.r_end * self.r_end;
        let mut s = 0.0;
        for j in 0..2 {
            if self.coef[j] != 0.0 {
                let p = self.exponent[j];
                s += self.coef[j] * x.powf(2.0 - p) / (p - 2.0);
            }
        }
        Ok(FOUR_PI * r2 * s)
    }

    /// Single power law approximating `|f|^s` beyond `r_end`, built from the
    /// local decay exponent at `r_end` (exact for a pure power tail).
    pub(crate) fn powered(&self, s: f64) -> TailTerms {
        let total = self.coef[0] + self.coef[1];
        let mut t = TailTerms {
            coef: [0.0; 2],
            exponent: [0.0; 2],
            r_end: self.r_end,
        };
        if total != 0.0 {
            let p = (self.coef[0] * self.exponent[0] + self.coef[1] * self.exponent[1]) / total;
            t.coef[0] = total.abs().powf(s);
            t.exponent[0] = s * p;
        }
        t
    }
}

fn lagrange_basis(xs: &[f64], t: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for k in 0..xs.len() {
        let mut l = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if j != k {
                l *= (t - xj) / (xs[k] - xj);
            }
        }
        out[k] = l;
    }
    out
}

/// Per-cell product quadrature coefficients.
#[derive(Clone, Debug)]
pub(crate) struct CellRules {
    pub(crate) start: Vec<usize>,
    pub(crate) len: Vec<usize>,
    /// `∫_cell L_k(r) 4πr² dr` for each stencil node `k`.
    pub(crate) mass: Vec<[f64; 4]>,
    /// `∫_cell L_k(r) 4πr dr`.
    pub(crate) moment: Vec<[f64; 4]>,
}

impl CellRules {
    pub(crate) fn build(nodes: &[f64], jumps: &[Jump]) -> Result<Self> {
        let n = nodes.len();
        let cells = n - 1;
        let mut lo = vec![0usize; cells];
        let mut hi = vec![n - 1; cells];
        let mut seen: Vec<usize> = Vec::with_capacity(jumps.len());
        for jump in jumps {
            let b = jump.node;
            if b == 0 || b >= n - 1 {
                return param(format!("jump at node {b} must be interior"));
            }
            if seen.contains(&b) {
                return param(format!("duplicate jump at node {b}"));
            }
            seen.push(b);
            let (left_hi, right_lo) = match jump.side {
                Side::Left => (b, b + 1),
                Side::Right => (b - 1, b),
            };
            for h in hi.iter_mut().take(b) {
                *h = (*h).min(left_hi);
            }
            for l in lo.iter_mut().skip(b) {
                *l = (*l).max(right_lo);
            }
        }

        let mut rules = CellRules {
            start: Vec::with_capacity(cells),
            len: Vec::with_capacity(cells),
            mass: Vec::with_capacity(cells),
            moment: Vec::with_capacity(cells),
        };
        for c in 0..cells {
            if hi[c] < lo[c] {
                return param(format!("cell {c} lies in a segment without nodes"));
            }
            let count = hi[c] - lo[c] + 1;
            let m = count.min(4);
            let start = (c as isize - 1).clamp(lo[c] as isize, (hi[c] + 1 - m) as isize) as usize;
            let xs = &nodes[start..start + m];
            let (a, b) = (nodes[c], nodes[c + 1]);
            let (mass, moment) = weighted_basis_integrals(xs, a, b);
            rules.start.push(start);
            rules.len.push(m);
            rules.mass.push(mass);
            rules.moment.push(moment);
        }
        Ok(rules)
    }

    pub(crate) fn cells(&self) -> usize {
        self.start.len()
    }

    #[inline]
    fn dot(&self, coef: &[f64; 4], c: usize, f: &[f64]) -> f64 {
        let s = self.start[c];
        let mut acc = 0.0;
        for k in 0..self.len[c] {
            acc += coef[k] * f[s + k];
        }
        acc
    }

    #[inline]
    pub(crate) fn cell_mass(&self, c: usize, f: &[f64]) -> f64 {
        self.dot(&self.mass[c], c, f)
    }

    #[inline]
    pub(crate) fn cell_moment(&self, c: usize, f: &[f64]) -> f64 {
        self.dot(&self.moment[c], c, f)
    }

    pub(crate) fn weights(&self, n: usize) -> Vec<f64> {
        self.gather(n, &self.mass)
    }

    /// Node weights for `∫ f 4πr dr`.
    pub(crate) fn moment_weights(&self, n: usize) -> Vec<f64> {
        self.gather(n, &self.moment)
    }

    fn gather(&self, n: usize, coef: &[[f64; 4]]) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for (c, cell) in coef.iter().enumerate().take(self.cells()) {
            let s = self.start[c];
            for k in 0..self.len[c] {
                w[s + k] += cell[k];
            }
        }
        w
    }

    /// `∫_a^b p(r) 4πr^power dr` where `p` is the cubic of cell `c`.
    pub(crate) fn partial(&self, nodes: &[f64], c: usize, a: f64, b: f64, f: &[f64], power: i32) -> f64 {
        let s = self.start[c];
        let m = self.len[c];
        let xs = &nodes[s..s + m];
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        let mut acc = 0.0;
        for g in 0..3 {
            let t = mid + half * GL3_X[g];
            let l = lagrange_basis(xs, t);
            let mut v = 0.0;
            for k in 0..m {
                v += l[k] * f[s + k];
            }
            acc += GL3_W[g] * v * t.powi(power);
        }
        FOUR_PI * half * acc
    }

    pub(crate) fn interpolate(&self, nodes: &[f64], c: usize, t: f64, f: &[f64]) -> f64 {
        let s = self.start[c];
        let m = self.len[c];
        let l = lagrange_basis(&nodes[s..s + m], t);
        (0..m).map(|k| l[k] * f[s + k]).sum()
    }
}

fn weighted_basis_integrals(xs: &[f64], a: f64, b: f64) -> ([f64; 4], [f64; 4]) {
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    let mut mass = [0.0; 4];
    let mut moment = [0.0; 4];
    for g in 0..3 {
        let t = mid + half * GL3_X[g];
        let l = lagrange_basis(xs, t);
        let w = FOUR_PI * half * GL3_W[g];
        for k in 0..xs.len() {
            mass[k] += w * t * t * l[k];
            moment[k] += w * t * l[k];
        }
    }
    (mass, moment)
}

/// Exact volume of the shell `a ≤ r ≤ b`.
pub fn shell_volume(a: f64, b: f64) -> f64 {
    FOUR_PI / 3.0 * (b - a) * (a * a + a * b + b * b)
}

/// Radial mesh with logarithmic spacing (optionally with inserted knots).
#[derive(Debug)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rules: CellRules,
    volumes: Vec<f64>,
}

impl RadialGrid {
    /// Log-spaced grid of `n` nodes between `r_min` and `r_max`.
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Arc<Self>> {
        Self::with_knots(r_min, r_max, n, &[])
    }

    /// Log-spaced grid where each knot replaces its nearest interior node, so
    /// the knots become nodes exactly.
    pub fn with_knots(r_min: f64, r_max: f64, n: usize, knots: &[f64]) -> Result<Arc<Self>> {
        if !(r_min.is_finite() && r_max.is_finite()) || r_min <= 0.0 || r_max <= r_min {
            return param(format!("grid bounds must satisfy 0 < r_min < r_max, got [{r_min}, {r_max}]"));
        }
        if n < 16 {
            return param(format!("grid needs at least 16 nodes, got {n}"));
        }
        let h = (r_max / r_min).ln() / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| r_min * (i as f64 * h).exp()).collect();
        nodes[0] = r_min;
        nodes[n - 1] = r_max;
        let mut taken = vec![false; n];
        for &k in knots {
            if !k.is_finite() || k <= r_min || k >= r_max {
                continue;
            }
            let mut j = ((k / r_min).ln() / h).round() as usize;
            j = j.clamp(1, n - 2);
            if taken[j] {
                return param(format!("knot {k} collides with another knot; increase n"));
            }
            taken[j] = true;
            nodes[j] = k;
        }
        Self::from_nodes(nodes)
    }

    /// Defaults for an atom: `r_min = 1e-6 max(1,Z)^(-1/3)`,
    /// `r_max = 60 max(1, N - Z + 1)`, 4000 nodes.
    pub fn atomic_default(z: f64, n_electrons: f64) -> Result<Arc<Self>> {
        let r_min = 1e-6 * z.max(1.0).powf(-1.0 / 3.0);
        let r_max = 60.0 * (n_electrons - z + 1.0).max(1.0);
        Self::new(r_min, r_max, 4000)
    }

    /// Grid for Thomas-Fermi solves: the `r^-6` tail needs room, so the outer
    /// edge sits at `1e4`.
    pub fn tf_default(z: f64) -> Result<Arc<Self>> {
        let r_min = 1e-6 * z.max(1.0).powf(-1.0 / 3.0);
        Self::new(r_min, 1e4, 4000)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Arc<Self>> {
        if nodes.len() < 16 {
            return param(format!("grid needs at least 16 nodes, got {}", nodes.len()));
        }
        if !nodes.iter().all(|r| r.is_finite() && *r > 0.0) {
            return param("grid nodes must be finite and positive");
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return param("grid nodes must be strictly increasing");
        }
        let rules = CellRules::build(&nodes, &[])?;
        let weights = rules.weights(nodes.len());
        let volumes = nodes.windows(2).map(|w| shell_volume(w[0], w[1])).collect();
        Ok(Arc::new(Self {
            nodes,
            weights,
            rules,
            volumes,
        }))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Exact volume of each cell.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub(crate) fn rules(&self) -> &CellRules {
        &self.rules
    }

    /// Cell `c` with `nodes[c] ≤ r ≤ nodes[c+1]`, or `None` outside the grid.
    pub fn cell_of(&self, r: f64) -> Option<usize> {
        if !(r >= self.r_min() && r <= self.r_max()) {
            return None;
        }
        let i = self.nodes.partition_point(|&x| x <= r);
        Some(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    /// Index of the node equal to `r` up to a relative `1e-12`.
    pub fn node_index(&self, r: f64) -> Option<usize> {
        let i = self.nodes.partition_point(|&x| x < r * (1.0 - 1e-12));
        (i < self.nodes.len() && (self.nodes[i] - r).abs() <= 1e-12 * r).then_some(i)
    }

    /// First node `≥ r` (up to a relative `1e-12`).
    pub fn first_node_at_or_above(&self, r: f64) -> usize {
        self.nodes.partition_point(|&x| x < r * (1.0 - 1e-12))
    }

    pub(crate) fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || self.nodes == other.nodes
    }
}

/// Values sampled on a grid, with optional tail model and jumps.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    tail: Tail,
    jumps: Vec<Jump>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return param(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return param(format!("non-finite value at node {i}"));
        }
        Ok(Self {
            grid,
            values,
            tail: Tail::Truncated,
            jumps: Vec::new(),
        })
    }

    /// Like [`RadialFunction::new`] but also requires nonnegative values.
    pub fn density(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| *v < 0.0) {
            return param(format!("density is negative at node {i}"));
        }
        Self::new(grid, values)
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            tail: Tail::Truncated,
            jumps: Vec::new(),
        }
    }

    /// Indicator of a union of shells `[a, b]`. Every endpoint inside the grid
    /// must be a node; endpoints at or below `r_min` (above `r_max`) are clipped.
    pub fn indicator(grid: Arc<RadialGrid>, shells: &[(f64, f64)]) -> Result<Self> {
        let n = grid.len();
        let mut values = vec![0.0; n];
        let mut jumps = Vec::new();
        for &(a, b) in shells {
            if !(a < b) {
                return param(format!("empty shell [{a}, {b}]"));
            }
            if b < grid.r_min() || a > grid.r_max() {
                continue;
            }
            let ia = if a <= grid.r_min() {
                0
            } else {
                grid.node_index(a)
                    .ok_or_else(|| Error::Parameter(format!("shell edge {a} is not a grid node")))?
            };
            let ib = if b >= grid.r_max() {
                n - 1
            } else {
                grid.node_index(b)
                    .ok_or_else(|| Error::Parameter(format!("shell edge {b} is not a grid node")))?
            };
            for v in &mut values[ia..=ib] {
                *v = 1.0;
            }
            if ia > 0 {
                jumps.push(Jump {
                    node: ia,
                    side: Side::Right,
                });
            }
            if ib < n - 1 {
                jumps.push(Jump {
                    node: ib,
                    side: Side::Left,
                });
            }
        }
        Self::new(grid, values)?.with_jumps(jumps)
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        match tail {
            Tail::Power(p) if !p.is_finite() => return param("tail exponent must be finite"),
            Tail::Sommerfeld { amplitude } if !amplitude.is_finite() => {
                return param("tail amplitude must be finite")
            }
            _ => {}
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn with_jumps(mut self, mut jumps: Vec<Jump>) -> Result<Self> {
        jumps.sort_by_key(|j| j.node);
        CellRules::build(self.grid.nodes(), &jumps)?;
        self.jumps = jumps;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub(crate) fn tail_terms(&self) -> TailTerms {
        self.tail.terms(self.last_value(), self.grid.r_max())
    }

    pub(crate) fn rules(&self) -> Cow<'_, CellRules> {
        if self.jumps.is_empty() {
            Cow::Borrowed(self.grid.rules())
        } else {
            Cow::Owned(
                CellRules::build(self.grid.nodes(), &self.jumps)
                    .expect("jumps were validated on construction"),
            )
        }
    }

    /// New function on the same grid with values `f(r, value)`; keeps jumps,
    /// drops the tail.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r, v))
            .collect();
        Self::new(self.grid.clone(), values)?.with_jumps(self.jumps.clone())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// `self + s * other` on a shared grid. Jumps are merged; the tail is the
    /// slower decaying of the two power laws.
    pub fn add_scaled(&self, s: f64, other: &RadialFunction) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return param("functions live on different grids");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        let mut jumps = self.jumps.clone();
        for j in &other.jumps {
            if !jumps.iter().any(|k| k.node == j.node) {
                jumps.push(*j);
            }
        }
        let tail = merge_tails(self.tail, other.tail);
        Self::new(self.grid.clone(), values)?
            .with_jumps(jumps)?
            .with_tail(tail)
    }

    /// Value at an arbitrary radius via the cell cubic; the tail model beyond
    /// `r_max`; the first sample below `r_min`.
    pub fn eval(&self, r: f64) -> f64 {
        let grid = &self.grid;
        if r <= grid.r_min() {
            return self.values[0];
        }
        if r > grid.r_max() {
            return self.tail_terms().value_at(r);
        }
        if let Some(i) = grid.node_index(r) {
            return self.values[i];
        }
        let c = grid.cell_of(r).expect("inside grid");
        self.rules().interpolate(grid.nodes(), c, r, &self.values)
    }

    /// Resample onto another grid by cubic interpolation.
    pub fn resample(&self, grid: Arc<RadialGrid>) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| self.eval(r)).collect();
        Self::new(grid, values)?.with_tail(self.tail)
    }

    /// `∫ f 4πr² dr` over the grid plus the tail beyond `r_max`.
    pub fn integrate(&self) -> Result<f64> {
        let rules = self.rules();
        let grid_part = kahan_sum((0..rules.cells()).map(|c| rules.cell_mass(c, &self.values)));
        Ok(grid_part + self.tail_terms().mass()?)
    }

    /// `∫_{r_min}^{r} f 4πs² ds` for `r` within the grid.
    pub fn mass_within(&self, r: f64) -> Result<f64> {
        self.partial_integral(r, 2)
    }

    /// `∫_{r_min}^{r} f 4πs ds` for `r` within the grid.
    pub fn first_moment_within(&self, r: f64) -> Result<f64> {
        self.partial_integral(r, 1)
    }

    fn partial_integral(&self, r: f64, power: i32) -> Result<f64> {
        let grid = &self.grid;
        if r <= grid.r_min() {
            return Ok(0.0);
        }
        if r > grid.r_max() {
            return param(format!("radius {r} beyond r_max {}", grid.r_max()));
        }
        let rules = self.rules();
        let c = grid.cell_of(r).expect("inside grid");
        let whole = (0..c).map(|k| {
            if power == 2 {
                rules.cell_mass(k, &self.values)
            } else {
                rules.cell_moment(k, &self.values)
            }
        });
        let part = rules.partial(grid.nodes(), c, grid.nodes()[c], r, &self.values, power);
        Ok(kahan_sum(whole) + part)
    }

    /// `∫ |f|^p 4πr² dr`, tail included.
    pub fn integrate_power(&self, p: f64) -> Result<f64> {
        if p <= 0.0 {
            return param("Lp exponent must be positive");
        }
        let powered = self.map(|_, v| v.abs().powf(p))?;
        let grid_part = {
            let rules = powered.rules();
            kahan_sum((0..rules.cells()).map(|c| rules.cell_mass(c, &powered.values)))
        };
        let tail = self.tail_terms().powered(p).mass()?;
        Ok(grid_part + tail)
    }

    /// `(∫ |f|^p 4πr² dr)^(1/p)`, tail included.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.integrate_power(p)?.powf(1.0 / p))
    }

    /// `∫ f 4πr dr` over the grid and tail, i.e. `∫ f(x)/|x| dx`.
    pub fn first_moment_total(&self) -> Result<f64> {
        let rules = self.rules();
        let grid_part = kahan_sum((0..rules.cells()).map(|c| rules.cell_moment(c, &self.values)));
        Ok(grid_part + self.tail_terms().first_moment()?)
    }
}

fn merge_tails(a: Tail, b: Tail) -> Tail {
    let exponent = |t: Tail| match t {
        Tail::Truncated => None,
        Tail::Power(p) => Some(p),
        Tail::Sommerfeld { .. } => Some(6.0),
    };
    match (exponent(a), exponent(b)) {
        (None, None) => Tail::Truncated,
        (Some(p), None) | (None, Some(p)) => Tail::Power(p),
        (Some(p), Some(q)) => Tail::Power(p.min(q)),
    }
}

/// `∫ (dψ/dr)² 4πr² dr` with compact differences: on each cell the slope is
/// `(ψ_{c+1} − ψ_c)/Δr` and the weight is the exact shell volume.
pub fn gradient_energy(psi: &RadialFunction) -> Result<f64> {
    let grid = psi.grid();
    if grid.len() < 3 {
        return param("gradient energy needs at least 3 nodes");
    }
    if !psi.jumps().is_empty() {
        return param("gradient energy of a discontinuous function");
    }
    let g = compact_gradient_energy(grid, psi.values());
    let tail = match psi.tail() {
        Tail::Truncated => 0.0,
        tail => {
            let t = tail.terms(psi.last_value(), grid.r_max());
            if t.is_zero() {
                0.0
            } else {
                let q = {
                    let total = t.coef[0] + t.coef[1];
                    (t.coef[0] * t.exponent[0] + t.coef[1] * t.exponent[1]) / total
                };
                if q <= 0.5 {
                    return Err(Error::DivergentTail {
                        exponent: q,
                        required: 0.5,
                    });
                }
                let v = psi.last_value();
                FOUR_PI * q * q * v * v * grid.r_max() / (2.0 * q - 1.0)
            }
        }
    };
    Ok(g + tail)
}

pub(crate) fn compact_gradient_energy(grid: &RadialGrid, psi: &[f64]) -> f64 {
    let r = grid.nodes();
    let vol = grid.cell_volumes();
    kahan_sum((0..r.len() - 1).map(|c| {
        let d = (psi[c + 1] - psi[c]) / (r[c + 1] - r[c]);
        vol[c] * d * d
    }))
}

/// `∫_0^{r_0} f 4π r^k dr` for the power law through the first two samples.
/// Accounts for the part of a singular density below the first node; zero when
/// the samples are not positive or the law is not integrable at the origin.
pub(crate) fn head_integral(r: [f64; 2], f: [f64; 2], k: i32) -> f64 {
    if !(f[0] > 0.0 && f[1] > 0.0) {
        return 0.0;
    }
    let q = -(f[1] / f[0]).ln() / (r[1] / r[0]).ln();
    let e = f64::from(k) + 1.0 - q;
    if e <= 0.0 {
        return 0.0;
    }
    FOUR_PI * f[0] * r[0].powi(k + 1) / e
}

/// `∫_0^{r_min} f^s 4π r^k dr` for a nonnegative `f`. The exponent is fitted
/// between the first node and the one near `4 r_min`: adjacent nodes are too
/// close for a stable slope.
pub(crate) fn head_term(f: &RadialFunction, s: f64, k: i32) -> f64 {
    let nodes = f.grid().nodes();
    let j = nodes.partition_point(|r| *r < 4.0 * nodes[0]).clamp(1, nodes.len() - 1);
    let v = f.values();
    head_integral([nodes[0], nodes[j]], [v[0].powf(s), v[j].powf(s)], k)
}

pub(crate) fn kahan_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
