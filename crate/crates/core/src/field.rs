//! Weighted kernel mixtures `u(t_k, y) = (1/N) sum_j w_j K(y - x_j)`.
//!
//! Atoms of a slice are kept sorted by `(position, weight)`. That order is
//! the canonical summation order: the windowed evaluation only skips atoms
//! whose kernel value is exactly zero, so it is bit-identical to summing
//! every atom, and permuting the input atoms cannot change the result.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernel::KernelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlice {
    centers: Vec<f64>,
    weights: Vec<f64>,
    norm: f64,
}

impl FieldSlice {
    /// Slice normalised by the number of atoms.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        let n = atoms.len();
        Self::from_atoms(&mut atoms, n)
    }

    /// Slice with an explicit normalisation count `n_norm`.
    pub fn with_norm(atoms: impl IntoIterator<Item = (f64, f64)>, n_norm: usize) -> Self {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        Self::from_atoms(&mut atoms, n_norm)
    }

    fn from_atoms(atoms: &mut [(f64, f64)], n_norm: usize) -> Self {
        atoms.sort_unstable_by(|a, b| match a.0.total_cmp(&b.0) {
            Ordering::Equal => a.1.total_cmp(&b.1),
            o => o,
        });
        Self {
            centers: atoms.iter().map(|a| a.0).collect(),
            weights: atoms.iter().map(|a| a.1).collect(),
            norm: n_norm.max(1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `(u, grad u)` at `y`.
    #[inline]
    pub fn eval(&self, k: &KernelSpec, y: f64) -> (f64, f64) {
        // slightly wider than r_cut so no atom with a nonzero kernel is missed
        let reach = k.r_cut() * (1.0 + 1e-12);
        let lo = self.centers.partition_point(|&x| x < y - reach);
        let hi = self.centers.partition_point(|&x| x <= y + reach);
        self.sum_range(k, y, lo, hi)
    }

    /// Reference evaluation over every atom.
    pub fn eval_brute(&self, k: &KernelSpec, y: f64) -> (f64, f64) {
        self.sum_range(k, y, 0, self.centers.len())
    }

    #[inline]
    fn sum_range(&self, k: &KernelSpec, y: f64, lo: usize, hi: usize) -> (f64, f64) {
        let mut s = 0.0;
        let mut gs = 0.0;
        for j in lo..hi {
            let (kv, kg) = k.eval_with_grad(y - self.centers[j]);
            s += self.weights[j] * kv;
            gs += self.weights[j] * kg;
        }
        (s / self.norm, gs / self.norm)
    }
}

/// Time-indexed field, piecewise constant in time (left endpoint).
#[derive(Debug, Clone, PartialEq)]
pub struct FKField {
    grid: TimeGrid,
    kernel: KernelSpec,
    slices: Vec<FieldSlice>,
}

impl FKField {
    pub fn new(grid: TimeGrid, kernel: KernelSpec, slices: Vec<FieldSlice>) -> Result<Self> {
        if slices.len() != grid.n_points() {
            return Err(Error::Mismatch(format!(
                "{} slices for a grid of {} points",
                slices.len(),
                grid.n_points()
            )));
        }
        Ok(Self {
            grid,
            kernel,
            slices,
        })
    }

    /// The identically-zero field.
    pub fn zero(grid: TimeGrid, kernel: KernelSpec) -> Self {
        let slices = (0..grid.n_points()).map(|_| FieldSlice::new([])).collect();
        Self {
            grid,
            kernel,
            slices,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn slices(&self) -> &[FieldSlice] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &FieldSlice {
        &self.slices[k]
    }

    /// `(u, grad u)` at grid step `k`.
    #[inline]
    pub fn eval_step(&self, k: usize, y: f64) -> (f64, f64) {
        self.slices[k].eval(&self.kernel, y)
    }

    /// `(u(t, y), grad u(t, y))`, left-endpoint in time.
    pub fn field_eval(&self, t: f64, y: f64) -> Result<(f64, f64)> {
        let k = self.grid.step_at(t)?;
        Ok(self.eval_step(k, y))
    }

    /// Field restricted to the first `k + 1` grid points.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        let grid = self.grid.truncated(k)?;
        Ok(Self {
            grid,
            kernel: self.kernel,
            slices: self.slices[..=k].to_vec(),
        })
    }

    /// Profile of `(u, grad u)` at step `k` over `ys`.
    pub fn profile(&self, k: usize, ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
        ys.iter().map(|&y| self.eval_step(k, y)).unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        let g = TimeGrid::new(1.0, 4).unwrap();
        let slices = (0..5).map(|_| FieldSlice::new([(0.0, 1.0)])).collect();
        let f = FKField::new(g, k, slices).unwrap();
        let (u, du) = f.field_eval(0.3, 0.0).unwrap();
        assert_eq!(u, k.eval(0.0));
        assert_eq!(du, 0.0);
        assert_eq!(f.field_eval(1.0, 40.0).unwrap(), (0.0, 0.0));
        assert!(f.field_eval(1.5, 0.0).is_err());
    }

    #[test]
    fn windowed_equals_brute_bitwise() {
        let k = KernelSpec::gaussian(0.2).unwrap();
        let atoms: Vec<(f64, f64)> = (0..500)
            .map(|i| {
                let x = ((i * 7919) % 1000) as f64 / 100.0 - 5.0;
                (x, 0.5 + 0.5 * ((i as f64) * 0.37).cos().abs())
            })
            .collect();
        let s = FieldSlice::new(atoms);
        for i in 0..400 {
            let y = -6.0 + i as f64 * 0.03;
            assert_eq!(s.eval(&k, y), s.eval_brute(&k, y));
        }
    }

    #[test]
    fn permutation_invariant() {
        let atoms = vec![(0.1, 0.9), (-0.4, 0.3), (0.1, 0.2), (1.3, 1.0)];
        let mut rev = atoms.clone();
        rev.reverse();
        let a = FieldSlice::new(atoms);
        let b = FieldSlice::new(rev);
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let k = KernelSpec::gaussian(0.3).unwrap();
        let s = FieldSlice::new([(0.0, 1.0), (0.25, 0.6), (-0.7, 0.8), (1.1, 0.4)]);
        let h = 1e-5;
        for i in 0..300 {
            let y = -2.0 + i as f64 * 0.013;
            let fd = (s.eval(&k, y + h).0 - s.eval(&k, y - h).0) / (2.0 * h);
            assert!((fd - s.eval(&k, y).1).abs() < 1e-6);
        }
    }
}
