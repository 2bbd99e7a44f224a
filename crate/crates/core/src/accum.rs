use crate::params::ModelParams;

/// Running path functionals carried by one particle (or one frozen path).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAccumulators {
    /// integral of the field along the path
    pub hist: f64,
    /// integral of the field gradient along the path
    pub grad_hist: f64,
    /// integral of `exp(-lambda * hist)`
    pub kill: f64,
    /// `exp(-lambda c0 kill)`
    pub weight: f64,
}

impl Default for PathAccumulators {
    fn default() -> Self {
        Self {
            hist: 0.0,
            grad_hist: 0.0,
            kill: 0.0,
            weight: 1.0,
        }
    }
}

impl PathAccumulators {
    /// Left-endpoint update over one step of length `dt`, given the field
    /// value and gradient read at the start of the step. `kill` uses the
    /// pre-update `hist`.
    #[inline]
    pub fn advance(&mut self, p: &ModelParams, u: f64, g: f64, dt: f64) {
        self.kill += (-p.lambda * self.hist).exp() * dt;
        self.hist += u * dt;
        self.grad_hist += g * dt;
        self.weight = (-p.lambda * p.c0 * self.kill).exp();
    }
}
