//! Problem parameters and the derived exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The (N, alpha, m) triple that fixes a family of radial solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub dimension: u32,
    pub alpha: f64,
    pub nodal_zones: u32,
}

/// A single problem instance: the family plus the power p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dimension: u32,
    pub alpha: f64,
    pub nodal_zones: u32,
    pub power: f64,
}

impl BaseParams {
    pub fn new(dimension: u32, alpha: f64, nodal_zones: u32) -> Result<Self> {
        let b = BaseParams { dimension, alpha, nodal_zones };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {}", self.dimension)));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if self.nodal_zones < 1 {
            return Err(Error::InvalidArgument("nodal zone count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_power(&self, power: f64) -> Result<ProblemParams> {
        ProblemParams::new(self.dimension, self.alpha, self.nodal_zones, power)
    }

    /// M = 2(N + alpha)/(2 + alpha).
    pub fn fictitious_dimension(&self) -> f64 {
        2.0 * (self.dimension as f64 + self.alpha) / (2.0 + self.alpha)
    }

    /// p_alpha; infinite for N = 2.
    pub fn critical_exponent(&self) -> f64 {
        if self.dimension == 2 {
            f64::INFINITY
        } else {
            let n = self.dimension as f64;
            (n + 2.0 + 2.0 * self.alpha) / (n - 2.0)
        }
    }

    /// (N - 2)/(2 + alpha), the order beta_m of the last Bessel function.
    pub fn bessel_base(&self) -> f64 {
        (self.dimension as f64 - 2.0) / (2.0 + self.alpha)
    }

    /// -(2N - 2 + alpha)/(2 + alpha), the limit of nu_i as p -> p_alpha (N >= 3).
    pub fn critical_level(&self) -> f64 {
        -(2.0 * self.dimension as f64 - 2.0 + self.alpha) / (2.0 + self.alpha)
    }

    /// (2/(2+alpha))^2 j (N - 2 + j): minus the j-th angular level.
    pub fn angular_level(&self, j: u32) -> f64 {
        let s = 2.0 / (2.0 + self.alpha);
        s * s * j as f64 * (self.dimension as f64 - 2.0 + j as f64)
    }
}

impl ProblemParams {
    pub fn new(dimension: u32, alpha: f64, nodal_zones: u32, power: f64) -> Result<Self> {
        let p = ProblemParams { dimension, alpha, nodal_zones, power };
        p.validate()?;
        Ok(p)
    }

    pub fn base(&self) -> BaseParams {
        BaseParams { dimension: self.dimension, alpha: self.alpha, nodal_zones: self.nodal_zones }
    }

    pub fn validate(&self) -> Result<()> {
        self.base().validate()?;
        let pa = self.base().critical_exponent();
        if !self.power.is_finite() || self.power <= 1.0 || self.power >= pa {
            return Err(Error::InvalidArgument(format!(
                "power must lie in (1, {pa}), got {}",
                self.power
            )));
        }
        Ok(())
    }

    pub fn fictitious_dimension(&self) -> f64 {
        self.base().fictitious_dimension()
    }

    pub fn critical_exponent(&self) -> f64 {
        self.base().critical_exponent()
    }
}
