//! Particle and fixed-point solvers for a path-dependent McKean-Feynman-Kac
//! model of reactive transport, plus a finite-volume reference solver.

pub mod accum;
pub mod error;
pub mod field;
pub mod fk;
pub mod grid;
pub mod init;
pub mod kernel;
pub mod killing;
pub mod metrics;
pub mod noise;
pub mod params;
pub mod particles;
pub mod paths;
pub mod pde;
pub mod verify;

pub use accum::PathAccumulators;
pub use error::{Error, Result};
pub use field::{FKField, FieldSlice};
pub use fk::{fk_solve, restrict_and_resolve, FkOptions, PicardReport};
pub use grid::TimeGrid;
pub use init::InitSpec;
pub use kernel::KernelSpec;
pub use noise::NoiseSource;
pub use params::ModelParams;
pub use paths::PathEnsemble;
