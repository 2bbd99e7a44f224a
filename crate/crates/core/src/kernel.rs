//! Smooth mollifier used to regularise the calcite ODE and to turn the
//! weighted particle measure into a field.
//!
//! The only family is a Gaussian of bandwidth `eps`, truncated at
//! `r_cut = 6 eps`, shifted down by its value at the cut so that it stays
//! continuous and nonnegative, and renormalised to unit mass:
//!
//! ```text
//! K(y) = (g(y) - g(r_cut)) / Z      for |y| <= r_cut, 0 otherwise
//! Z    = erf(r_cut / (eps sqrt 2)) - 2 r_cut g(r_cut)
//! ```
//!
//! where `g` is the centred normal density with standard deviation `eps`.
//! All four mollifier constants are computed once, at construction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation radius in units of the bandwidth.
pub const CUT_RATIO: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    eps: f64,
    r_cut: f64,
    // K(y) = amp * exp(-y^2 * inv_two_var) - floor
    amp: f64,
    inv_two_var: f64,
    floor: f64,
    sup: f64,
    lipschitz: f64,
    grad_sup: f64,
    fourier_l1: f64,
}

impl KernelSpec {
    pub fn gaussian(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::param("eps", format!("bandwidth must be > 0, got {eps}")));
        }
        let r_cut = CUT_RATIO * eps;
        let g = |y: f64| (-(y * y) / (2.0 * eps * eps)).exp() / (eps * (2.0 * PI).sqrt());
        let g_cut = g(r_cut);
        let mass = libm::erf(CUT_RATIO / 2f64.sqrt()) - 2.0 * r_cut * g_cut;
        let amp = 1.0 / (eps * (2.0 * PI).sqrt() * mass);
        let floor = g_cut / mass;
        let sup = amp - floor;
        // |g'| peaks at |y| = eps
        let grad_sup = g(eps) / eps / mass;
        Ok(Self {
            family: KernelFamily::Gaussian,
            eps,
            r_cut,
            amp,
            inv_two_var: 1.0 / (2.0 * eps * eps),
            floor,
            sup,
            lipschitz: grad_sup,
            grad_sup,
            // closed form for the untruncated Gaussian, widened for the
            // truncation ripple (relative size below 1e-7)
            fourier_l1: (2.0 * PI).sqrt() / eps * (1.0 + 1e-6),
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    /// `M_K`: sup of |K|.
    pub fn sup_bound(&self) -> f64 {
        self.sup
    }

    /// `L_K`: Lipschitz constant of K.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `M_K'`: sup of |K'|.
    pub fn grad_bound(&self) -> f64 {
        self.grad_sup
    }

    /// `F_K`: bound on the L1 norm of the Fourier transform.
    pub fn fourier_l1(&self) -> f64 {
        self.fourier_l1
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        if y.abs() > self.r_cut {
            return 0.0;
        }
        (self.amp * (-(y * y) * self.inv_two_var).exp() - self.floor).max(0.0)
    }

    #[inline]
    pub fn grad(&self, y: f64) -> f64 {
        if y.abs() > self.r_cut {
            return 0.0;
        }
        -2.0 * y * self.inv_two_var * self.amp * (-(y * y) * self.inv_two_var).exp()
    }

    /// `(K(y), K'(y))` sharing one exponential.
    #[inline]
    pub fn eval_with_grad(&self, y: f64) -> (f64, f64) {
        if y.abs() > self.r_cut {
            return (0.0, 0.0);
        }
        let e = self.amp * (-(y * y) * self.inv_two_var).exp();
        ((e - self.floor).max(0.0), -2.0 * y * self.inv_two_var * e)
    }
}
