use crate::error::{Error, Result};

/// Uniform discretisation `t_k = k dt`, `k = 0..=n_steps`, of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// `n_steps = 0` is allowed and denotes the single point `t = 0`.
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be > 0, got {horizon}")));
        }
        Ok(Self { horizon, n_steps })
    }

    /// Grid with step as close to `dt` as divides the horizon.
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        Self::new(horizon, (horizon / dt).round().max(1.0) as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.horizon / self.n_steps as f64
        }
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Index of the grid point at or left of `t`.
    pub fn step_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::domain(
                "time lookup",
                format!("t = {t} outside [0, {}]", self.horizon),
            ));
        }
        if self.n_steps == 0 {
            return Ok(0);
        }
        let x = t / self.dt();
        // tolerate representation error on grid points
        let k = (x + 1e-9).floor() as usize;
        Ok(k.min(self.n_steps))
    }

    /// Index of the grid point equal to `t`, or an error if `t` is off-grid.
    pub fn exact_step(&self, t: f64) -> Result<usize> {
        let k = self.step_at(t)?;
        let dt = self.dt().max(f64::MIN_POSITIVE);
        if ((self.time(k) - t) / dt).abs() > 1e-6 {
            return Err(Error::domain(
                "time lookup",
                format!("t = {t} is not a grid point (dt = {})", self.dt()),
            ));
        }
        Ok(k)
    }

    /// The sub-grid `[0, t_k]`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n_steps {
            return Err(Error::domain(
                "truncate",
                format!("cut step {k} outside 1..={}", self.n_steps),
            ));
        }
        Ok(Self {
            horizon: self.time(k),
            n_steps: k,
        })
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps
            && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon.max(other.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_lookup() {
        let g = TimeGrid::new(1.0, 1000).unwrap();
        assert!((g.dt() - 1e-3).abs() < 1e-18);
        assert_eq!(g.time(1000), 1.0);
        assert_eq!(g.step_at(0.5).unwrap(), 500);
        assert_eq!(g.step_at(0.50049).unwrap(), 500);
        assert_eq!(g.step_at(1.0).unwrap(), 1000);
        assert!(g.step_at(1.01).is_err());
        assert!(g.step_at(-0.1).is_err());
        assert!(g.exact_step(0.0005).is_err());
        assert_eq!(g.truncated(500).unwrap().horizon(), 0.5);
    }
}
