//! Initial densities `rho_0`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitSpec {
    Gaussian { mean: f64, sigma: f64 },
    /// raised cosine `(1 + cos(pi (x - mean) / half_width)) / (2 half_width)`
    Bump { mean: f64, half_width: f64 },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Gaussian {
            mean: 0.0,
            sigma: 1.0,
        }
    }
}

impl InitSpec {
    pub fn violations(&self, s_cap: f64) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let (mean, scale, name) = match *self {
            InitSpec::Gaussian { mean, sigma } => (mean, sigma, "sigma"),
            InitSpec::Bump { mean, half_width } => (mean, half_width, "half_width"),
        };
        if !mean.is_finite() {
            out.push(("mean", format!("must be finite, got {mean}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            out.push((name, format!("must be > 0, got {scale}")));
            return out;
        }
        if self.sup_density() > s_cap {
            out.push((
                name,
                format!(
                    "initial density peak {:.6} exceeds the density cap {s_cap}",
                    self.sup_density()
                ),
            ));
        }
        out
    }

    pub fn validate(&self, s_cap: f64) -> Result<()> {
        match self.violations(s_cap).into_iter().next() {
            None => Ok(()),
            Some((name, reason)) => Err(Error::param(name, reason)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InitSpec::Gaussian { mean, .. } | InitSpec::Bump { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InitSpec::Gaussian { sigma, .. } => sigma * sigma,
            InitSpec::Bump { half_width, .. } => half_width * half_width * (1.0 / 3.0 - 2.0 / (PI * PI)),
        }
    }

    /// Half-width of the region that carries essentially all the mass,
    /// measured from the mean (six standard deviations for the Gaussian).
    pub fn reach(&self) -> f64 {
        match *self {
            InitSpec::Gaussian { sigma, .. } => 6.0 * sigma,
            InitSpec::Bump { half_width, .. } => half_width,
        }
    }

    pub fn sup_density(&self) -> f64 {
        match *self {
            InitSpec::Gaussian { sigma, .. } => 1.0 / (sigma * (2.0 * PI).sqrt()),
            InitSpec::Bump { half_width, .. } => 1.0 / half_width,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            InitSpec::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            InitSpec::Bump { mean, half_width } => {
                let z = (x - mean) / half_width;
                if z.abs() > 1.0 {
                    0.0
                } else {
                    (1.0 + (PI * z).cos()) / (2.0 * half_width)
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InitSpec::Gaussian { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            }
            InitSpec::Bump { mean, half_width } => loop {
                let z = 2.0 * rng.random::<f64>() - 1.0;
                if rng.random::<f64>() < 0.5 * (1.0 + (PI * z).cos()) {
                    break mean + half_width * z;
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn densities_integrate_to_one() {
        for spec in [
            InitSpec::Gaussian { mean: 0.3, sigma: 0.8 },
            InitSpec::Bump { mean: -1.0, half_width: 2.0 },
        ] {
            let h = 1e-3;
            let s: f64 = (-10_000..=10_000).map(|i| spec.density(i as f64 * h)).sum::<f64>() * h;
            assert!((s - 1.0).abs() < 1e-6, "{spec:?}: {s}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let narrow = InitSpec::Gaussian { mean: 0.0, sigma: 0.1 };
        assert!(narrow.validate(1.0).is_err());
        assert!(InitSpec::default().validate(1.0).is_ok());
        assert!(InitSpec::Bump { mean: 0.0, half_width: 0.5 }.validate(1.0).is_err());
    }

    #[test]
    fn bump_sample_moments() {
        let spec = InitSpec::Bump { mean: 1.0, half_width: 2.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 50_000;
        let xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 4.0 * (spec.variance() / n as f64).sqrt());
        assert!((v - spec.variance()).abs() < 0.03 * spec.variance());
        assert!(xs.iter().all(|x| (x - 1.0).abs() <= 2.0));
    }
}
