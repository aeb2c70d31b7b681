use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{param, Result};

/// Exponent of the first correction to the Sommerfeld profile.
pub fn zeta() -> f64 {
    (73f64.sqrt() - 7.0) / 2.0
}

/// `A = (5c)^3 / (3 pi^2)`, the coefficient of the universal `A r^-4` potential.
pub fn a_tf(c_tf: f64) -> f64 {
    (5.0 * c_tf).powi(3) / (3.0 * PI * PI)
}

/// `B = 5c (4 / (3 pi^2))^(1/3)`, the radius coefficient.
pub fn b_tf(c_tf: f64) -> f64 {
    5.0 * c_tf * (4.0 / (3.0 * PI * PI)).cbrt()
}

/// Coefficients of the functional together with the charge and electron number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub c_tf: f64,
    pub c_w: f64,
    pub c_d: f64,
    pub z: f64,
    pub n: f64,
    a_tf: f64,
    b_tf: f64,
    zeta: f64,
}

impl ModelConstants {
    /// Hartree-unit coefficients: `c_tf = (3/10)(3 pi^2)^(2/3)`,
    /// `c_w = 1/2` (the `(1/8) |grad rho|^2 / rho` form) and
    /// `c_d = (3/4)(3/pi)^(1/3)`.
    pub fn atomic(z: f64, n: f64) -> Result<Self> {
        Self::new(
            0.3 * (3.0 * PI * PI).powf(2.0 / 3.0),
            0.5,
            0.75 * (3.0 / PI).cbrt(),
            z,
            n,
        )
    }

    pub fn new(c_tf: f64, c_w: f64, c_d: f64, z: f64, n: f64) -> Result<Self> {
        let finite = [c_tf, c_w, c_d, z, n].iter().all(|v| v.is_finite());
        if !finite {
            return param("model constants must be finite");
        }
        if c_tf <= 0.0 {
            return param(format!("c_tf must be positive, got {c_tf}"));
        }
        if c_w < 0.0 || c_d < 0.0 {
            return param("c_w and c_d must be nonnegative");
        }
        if z < 0.0 {
            return param(format!("Z must be nonnegative, got {z}"));
        }
        if n <= 0.0 {
            return param(format!("N must be positive, got {n}"));
        }
        Ok(Self {
            c_tf,
            c_w,
            c_d,
            z,
            n,
            a_tf: a_tf(c_tf),
            b_tf: b_tf(c_tf),
            zeta: zeta(),
        })
    }

    pub fn with_charge(self, z: f64, n: f64) -> Result<Self> {
        Self::new(self.c_tf, self.c_w, self.c_d, z, n)
    }

    pub fn with_coefficients(self, c_tf: f64, c_w: f64, c_d: f64) -> Result<Self> {
        Self::new(c_tf, c_w, c_d, self.z, self.n)
    }

    pub fn a_tf(&self) -> f64 {
        self.a_tf
    }

    pub fn b_tf(&self) -> f64 {
        self.b_tf
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `(3 / (5c))^(3/2)`: maps `[phi - mu]_+^(3/2)` to the TF density.
    pub fn density_factor(&self) -> f64 {
        (3.0 / (5.0 * self.c_tf)).powf(1.5)
    }

    /// Amplitude of the universal density tail `(3A / (5c))^(3/2) r^-6`.
    pub fn sommerfeld_density_amplitude(&self) -> f64 {
        (3.0 * self.a_tf / (5.0 * self.c_tf)).powf(1.5)
    }

    /// True when the derived coefficients match a fresh recomputation bit for bit.
    pub fn derived_consistent(&self) -> bool {
        self.a_tf == a_tf(self.c_tf) && self.b_tf == b_tf(self.c_tf) && self.zeta == zeta()
    }
}
