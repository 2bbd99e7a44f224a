use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// A set of sampled paths on a shared time grid, stored path-major.
///
/// Used both as the frozen ensemble of the fixed-point solver and as the
/// empirical path measure handed to the metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    n_paths: usize,
    data: Vec<f64>,
}

impl PathEnsemble {
    pub fn from_flat(grid: TimeGrid, n_paths: usize, data: Vec<f64>) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::param("paths", "need at least one path"));
        }
        if data.len() != n_paths * grid.n_points() {
            return Err(Error::Mismatch(format!(
                "{} values for {n_paths} paths of {} points",
                data.len(),
                grid.n_points()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("paths", format!("non-finite position {v}")));
        }
        Ok(Self {
            grid,
            n_paths,
            data,
        })
    }

    pub fn from_paths(grid: TimeGrid, paths: &[Vec<f64>]) -> Result<Self> {
        let data: Vec<f64> = paths.iter().flat_map(|p| p.iter().copied()).collect();
        if paths.iter().any(|p| p.len() != grid.n_points()) {
            return Err(Error::Mismatch("ragged path lengths".into()));
        }
        Self::from_flat(grid, paths.len(), data)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    #[inline]
    pub fn position(&self, p: usize, k: usize) -> f64 {
        self.data[p * self.grid.n_points() + k]
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.n_points();
        &self.data[p * n..(p + 1) * n]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.n_points())
    }

    /// Restriction of every path to `[0, t_k]`.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        let grid = self.grid.truncated(k)?;
        let data = self.paths().flat_map(|p| p[..=k].iter().copied()).collect();
        Ok(Self {
            grid,
            n_paths: self.n_paths,
            data,
        })
    }
}
