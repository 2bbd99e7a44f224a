//! Physical and chemical constants of the sulphation model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model constants: reaction rate, initial calcite, affine porosity
/// `phi(c) = phi0 + phi1 * c`, horizon and the density cap.
///
/// `lambda = 0` is accepted: it switches off both the reaction and the
/// advection and is the reduction used throughout the test-suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub c0: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub horizon: f64,
    pub s_cap: f64,
    pub phi_bar: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            c0: 1.0,
            phi0: 0.5,
            phi1: 0.3,
            horizon: 1.0,
            s_cap: 1.0,
            phi_bar: 1.0,
        }
    }
}

impl ModelParams {
    pub fn new(lambda: f64, c0: f64, phi0: f64, phi1: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            lambda,
            c0,
            phi0,
            phi1,
            horizon,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    /// Every broken invariant as `(field, message)`, in a fixed order.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let finite = [
            ("lambda", self.lambda),
            ("c0", self.c0),
            ("phi0", self.phi0),
            ("phi1", self.phi1),
            ("horizon", self.horizon),
            ("s_cap", self.s_cap),
            ("phi_bar", self.phi_bar),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                out.push((name, format!("must be finite, got {v}")));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.lambda < 0.0 {
            out.push(("lambda", format!("reaction rate must be >= 0, got {}", self.lambda)));
        }
        if self.c0 <= 0.0 {
            out.push(("c0", format!("initial calcite must be > 0, got {}", self.c0)));
        }
        if self.horizon <= 0.0 {
            out.push(("horizon", format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.s_cap > 0.0 && self.s_cap <= 1.0) {
            out.push(("s_cap", format!("density cap must lie in (0, 1], got {}", self.s_cap)));
        }
        if self.phi_bar <= 0.0 {
            out.push(("phi_bar", format!("porosity ceiling must be > 0, got {}", self.phi_bar)));
        }
        let hi = self.phi0 + self.phi1 * self.c0;
        if self.phi0 <= 0.0 {
            out.push((
                "phi0",
                format!("porosity invariant: phi0 must be > 0, got {}", self.phi0),
            ));
        } else if self.phi0 >= self.phi_bar {
            out.push((
                "phi0",
                format!(
                    "porosity invariant: phi0 = {} must be < phi_bar = {}",
                    self.phi0, self.phi_bar
                ),
            ));
        }
        if hi <= 0.0 {
            out.push((
                "phi1",
                format!("porosity invariant: phi0 + phi1*c0 must be > 0, got {hi}"),
            ));
        } else if hi >= self.phi_bar {
            out.push((
                "phi1",
                format!(
                    "porosity invariant: phi0 + phi1*c0 = {hi} must be < phi_bar = {}",
                    self.phi_bar
                ),
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((name, reason)) => Err(Error::param(name, reason)),
        }
    }

    #[inline]
    pub fn porosity(&self, c: f64) -> f64 {
        self.phi0 + self.phi1 * c
    }

    /// Smallest porosity over the admissible calcite range `[0, c0]`.
    pub fn porosity_min(&self) -> f64 {
        self.phi0.min(self.phi0 + self.phi1 * self.c0)
    }

    pub fn porosity_max(&self) -> f64 {
        self.phi0.max(self.phi0 + self.phi1 * self.c0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ModelParams::default().validate().unwrap();
    }

    #[test]
    fn zero_base_porosity_names_the_invariant() {
        let p = ModelParams {
            phi0: 0.0,
            ..ModelParams::default()
        };
        let v = p.violations();
        assert_eq!(v[0].0, "phi0");
        assert!(v[0].1.contains("porosity invariant"));
    }

    #[test]
    fn negative_slope_must_keep_porosity_positive() {
        let p = ModelParams {
            phi0: 0.2,
            phi1: -0.3,
            ..ModelParams::default()
        };
        assert!(p.violations().iter().any(|(f, _)| *f == "phi1"));
        let ok = ModelParams {
            phi0: 0.4,
            phi1: -0.3,
            ..ModelParams::default()
        };
        assert!(ok.validate().is_ok());
        assert!((ok.porosity_min() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn porosity_ceiling_enforced() {
        let p = ModelParams {
            phi0: 0.5,
            phi1: 0.6,
            ..ModelParams::default()
        };
        assert!(p.violations().iter().any(|(f, _)| *f == "phi1"));
    }

    #[test]
    fn negative_rate_rejected_zero_accepted() {
        assert!(ModelParams::new(-1.0, 1.0, 0.5, 0.1, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.5, 0.1, 1.0).is_ok());
    }
}
