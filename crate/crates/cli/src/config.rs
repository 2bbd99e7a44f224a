//! Run configuration: one TOML file with a section per engine, dotted-key
//! overrides from the command line, and validation that reports every
//! problem at once.

use std::fmt;
use std::path::{Path, PathBuf};

use mkfk_core::fk::{FkOptions, Quadrature};
use mkfk_core::grid::TimeGrid;
use mkfk_core::init::InitSpec;
use mkfk_core::kernel::KernelSpec;
use mkfk_core::params::ModelParams;
use mkfk_core::particles::{Diagnostics, SimConfig};
use mkfk_core::pde::{required_half_width, PdeConfig, PdeMode, SpatialGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelSection,
    pub kernel: KernelSection,
    pub time: TimeSection,
    pub init: InitSpec,
    pub particles: ParticleSection,
    pub diagnostics: DiagnosticsSection,
    pub fk: FkSection,
    pub pde: PdeSection,
    pub chaos: ChaosSection,
    pub d2: D2Section,
    pub compare: CompareSection,
    pub weak: WeakSection,
    pub reduction: ReductionSection,
    pub invariants: InvariantsSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            model: ModelSection::default(),
            kernel: KernelSection::default(),
            time: TimeSection::default(),
            init: InitSpec::default(),
            particles: ParticleSection::default(),
            diagnostics: DiagnosticsSection::default(),
            fk: FkSection::default(),
            pde: PdeSection::default(),
            chaos: ChaosSection::default(),
            d2: D2Section::default(),
            compare: CompareSection::default(),
            weak: WeakSection::default(),
            reduction: ReductionSection::default(),
            invariants: InvariantsSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub lambda: f64,
    pub c0: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub phi_bar: f64,
    pub s_cap: f64,
    pub horizon: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            lambda: p.lambda,
            c0: p.c0,
            phi0: p.phi0,
            phi1: p.phi1,
            phi_bar: p.phi_bar,
            s_cap: p.s_cap,
            horizon: p.horizon,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            lambda: self.lambda,
            c0: self.c0,
            phi0: self.phi0,
            phi1: self.phi1,
            horizon: self.horizon,
            s_cap: self.s_cap,
            phi_bar: self.phi_bar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub family: mkfk_core::kernel::KernelFamily,
    pub eps: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            family: Default::default(),
            eps: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleSection {
    pub n: usize,
    pub store_paths: bool,
}

impl Default for ParticleSection {
    fn default() -> Self {
        Self {
            n: 1000,
            store_paths: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub y_min: f64,
    pub y_max: f64,
    pub points: usize,
    /// snapshot stride in steps; 0 keeps the final step only
    pub every: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            y_min: -6.0,
            y_max: 6.0,
            points: 241,
            every: 100,
        }
    }
}

impl DiagnosticsSection {
    pub fn build(&self) -> Diagnostics {
        Diagnostics::uniform(self.y_min, self.y_max, self.points, self.every)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathSource {
    /// Brownian paths from 0
    #[default]
    Brownian,
    /// paths of an interacting particle run
    Particles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FkSection {
    pub tol: f64,
    pub max_iter: usize,
    pub quadrature: Quadrature,
    pub source: PathSource,
    /// number of Brownian paths when `source = "brownian"`
    pub paths: usize,
}

impl Default for FkSection {
    fn default() -> Self {
        let o = FkOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            quadrature: o.quadrature,
            source: PathSource::Brownian,
            paths: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeSection {
    pub mode: PdeMode,
    pub h: f64,
    pub dt: f64,
    /// half-width `L` of `[-L, L]`; 0 picks the smallest admissible value
    pub half_width: f64,
    /// snapshot stride in steps; 0 keeps initial and final states only
    pub snapshot_every: usize,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            mode: PdeMode::Nonlocal,
            h: 0.02,
            dt: 1e-4,
            half_width: 0.0,
            snapshot_every: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosSection {
    pub ns: Vec<usize>,
    pub n_ref: usize,
    pub replicas: usize,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for ChaosSection {
    fn default() -> Self {
        Self {
            ns: vec![50, 100, 200, 400, 800],
            n_ref: 4000,
            replicas: 8,
            slope_min: -1.4,
            slope_max: -0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D2Section {
    pub ns: Vec<usize>,
    pub replicas: usize,
    /// size of the reference path sample
    pub reference: usize,
    /// size of the interacting run that provides the frozen field
    pub field_particles: usize,
}

impl Default for D2Section {
    fn default() -> Self {
        Self {
            ns: vec![16, 64, 256],
            replicas: 200,
            reference: 10_000,
            field_particles: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub ns: Vec<usize>,
    /// bound on the terminal relative L2 error at the largest N
    pub tolerance: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            ns: vec![500, 2000, 4000],
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakSection {
    pub dts: Vec<f64>,
    pub ns: Vec<usize>,
    pub replicas: usize,
    /// largest allowed ratio between fitted constants across resolutions
    pub max_spread: f64,
}

impl Default for WeakSection {
    fn default() -> Self {
        Self {
            dts: vec![2e-3, 1e-3, 5e-4],
            ns: vec![1000, 2000, 4000],
            replicas: 16,
            max_spread: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionSection {
    /// run the zero-rate heat-equation reduction inside `invariants`
    pub enabled: bool,
    pub n: usize,
    pub horizon: f64,
    pub dt: f64,
    /// bound on the particle relative L2 error
    pub particle_tolerance: f64,
    /// bound on the finite-volume relative L2 error
    pub pde_tolerance: f64,
}

impl Default for ReductionSection {
    fn default() -> Self {
        Self {
            enabled: false,
            n: 4000,
            horizon: 0.5,
            dt: 5e-3,
            particle_tolerance: 0.05,
            pde_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvariantsSection {
    /// kernel samples for the mollifier certificate
    pub samples: usize,
    /// random accumulator pairs for the killing and drift lemmas
    pub pairs: usize,
    /// Brownian paths for the fixed-point probe
    pub paths: usize,
    /// time steps of the scalar fixed-point oracle
    pub oracle_steps: usize,
    /// run the spatial convergence study of the finite-volume solver
    pub convergence: bool,
}

impl Default for InvariantsSection {
    fn default() -> Self {
        Self {
            samples: 100_000,
            pairs: 10_000,
            paths: 32,
            oracle_steps: 1000,
            convergence: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// also write full particle paths as `paths.bin`
    pub paths_binary: bool,
    /// write the particle field of `simulate` as `field.csv`
    pub field: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            paths_binary: false,
            field: false,
        }
    }
}

/// One broken rule, located by its dotted key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("bad override `{0}`: expected dotted.key=value")]
    Override(String),
    #[error("{} invalid setting(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

impl RunConfig {
    /// Parse TOML text, apply `key=value` overrides, validate.
    pub fn from_toml_str(text: &str, origin: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = RunConfig::deserialize(table).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        let v = cfg.violations();
        if v.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded. The output
    /// directory is left out: it does not change any result.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::from(".");
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn params(&self) -> ModelParams {
        self.model.params()
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::gaussian(self.kernel.eps).expect("validated bandwidth")
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::with_step(self.model.horizon, self.time.dt).expect("validated step")
    }

    pub fn fk_options(&self) -> FkOptions {
        FkOptions {
            tol: self.fk.tol,
            max_iter: self.fk.max_iter,
            quadrature: self.fk.quadrature,
            ..Default::default()
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut c = SimConfig::new(
            self.params(),
            self.kernel(),
            self.time_grid(),
            self.particles.n,
            self.seed,
        );
        c.init = self.init;
        c.store_paths = self.particles.store_paths || self.output.paths_binary;
        c.diagnostics = self.diagnostics.build();
        c
    }

    /// Half-width actually used by the finite-volume solver.
    pub fn pde_half_width(&self) -> f64 {
        if self.pde.half_width > 0.0 {
            self.pde.half_width
        } else {
            let need = required_half_width(&self.init, self.model.horizon, self.kernel.eps);
            // whole number of cells
            (need / self.pde.h).ceil() * self.pde.h
        }
    }

    pub fn pde_config(&self) -> PdeConfig {
        PdeConfig {
            grid: SpatialGrid::with_spacing(self.pde_half_width(), self.pde.h).expect("validated grid"),
            time: TimeGrid::with_step(self.model.horizon, self.pde.dt).expect("validated step"),
            mode: self.pde.mode,
            kernel: Some(self.kernel()),
            params: self.params(),
            snapshot_every: self.pde.snapshot_every,
        }
    }

    /// Every violated rule, with dotted paths.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |path: &str, message: String| {
            out.push(Violation {
                path: path.to_string(),
                message,
            })
        };
        let p = self.params();
        for (name, msg) in p.violations() {
            bad(&format!("model.{name}"), msg);
        }
        if !(self.kernel.eps.is_finite() && self.kernel.eps > 0.0) {
            bad("kernel.eps", format!("bandwidth must be > 0, got {}", self.kernel.eps));
        }
        positive(&mut bad, "time.dt", self.time.dt);
        if self.model.horizon > 0.0 && self.time.dt > self.model.horizon {
            bad("time.dt", format!("step {} exceeds the horizon {}", self.time.dt, self.model.horizon));
        }
        for (name, msg) in self.init.violations(self.model.s_cap) {
            bad(&format!("init.{name}"), msg);
        }
        if self.particles.n == 0 {
            bad("particles.n", "need at least one particle".into());
        }
        if !(self.diagnostics.y_min < self.diagnostics.y_max) {
            bad(
                "diagnostics.y_max",
                format!("must exceed y_min = {}", self.diagnostics.y_min),
            );
        }
        if self.diagnostics.points < 2 {
            bad("diagnostics.points", "need at least 2 points".into());
        }
        positive(&mut bad, "fk.tol", self.fk.tol);
        if self.fk.max_iter == 0 {
            bad("fk.max_iter", "must be >= 1".into());
        }
        if self.fk.paths == 0 {
            bad("fk.paths", "must be >= 1".into());
        }
        positive(&mut bad, "pde.h", self.pde.h);
        positive(&mut bad, "pde.dt", self.pde.dt);
        if self.pde.half_width < 0.0 || !self.pde.half_width.is_finite() {
            bad("pde.half_width", format!("must be >= 0, got {}", self.pde.half_width));
        } else if self.pde.half_width > 0.0 && self.kernel.eps > 0.0 {
            let need = required_half_width(&self.init, self.model.horizon, self.kernel.eps);
            if self.pde.half_width < need {
                bad(
                    "pde.half_width",
                    format!("{} is below the boundary rule |mean| + 6 sqrt(var0 + 2T) + 6 eps = {need:.4}", self.pde.half_width),
                );
            }
        }
        if self.pde.h > 0.0 && self.pde_half_width() / self.pde.h < 1.5 {
            bad("pde.h", format!("cell width {} leaves fewer than 3 cells", self.pde.h));
        }
        if self.chaos.ns.is_empty() {
            bad("chaos.ns", "need at least one particle count".into());
        } else {
            if self.chaos.ns.len() < 4 {
                bad("chaos.ns", format!("need at least 4 sizes for a slope fit, got {}", self.chaos.ns.len()));
            }
            let lo = *self.chaos.ns.iter().min().unwrap();
            let hi = *self.chaos.ns.iter().max().unwrap();
            if lo == 0 {
                bad("chaos.ns", "particle counts must be >= 1".into());
            } else if (hi as f64) < 10.0 * lo as f64 {
                bad("chaos.ns", format!("sizes {lo}..{hi} span less than a decade"));
            }
            if self.chaos.n_ref <= hi {
                bad(
                    "chaos.n_ref",
                    format!("reference size {} must exceed the largest study size {hi}", self.chaos.n_ref),
                );
            }
        }
        if self.chaos.replicas == 0 {
            bad("chaos.replicas", "must be >= 1".into());
        }
        if !(self.chaos.slope_min < self.chaos.slope_max) {
            bad("chaos.slope_max", "must exceed slope_min".into());
        }
        if self.d2.ns.is_empty() || self.d2.ns.contains(&0) {
            bad("d2.ns", "need positive particle counts".into());
        } else {
            let hi = *self.d2.ns.iter().max().unwrap();
            if self.d2.reference <= hi {
                bad(
                    "d2.reference",
                    format!("reference size {} must exceed the largest sample size {hi}", self.d2.reference),
                );
            }
        }
        if self.d2.replicas < mkfk_core::metrics::MIN_D2_REPLICAS {
            bad(
                "d2.replicas",
                format!(
                    "need at least {} replicas, got {}",
                    mkfk_core::metrics::MIN_D2_REPLICAS,
                    self.d2.replicas
                ),
            );
        }
        if self.d2.field_particles == 0 {
            bad("d2.field_particles", "must be >= 1".into());
        }
        if self.compare.ns.is_empty() || self.compare.ns.contains(&0) {
            bad("compare.ns", "need positive particle counts".into());
        }
        positive(&mut bad, "compare.tolerance", self.compare.tolerance);
        if self.weak.dts.len() != self.weak.ns.len() {
            bad(
                "weak.ns",
                format!("{} sizes for {} steps", self.weak.ns.len(), self.weak.dts.len()),
            );
        }
        if self.weak.dts.len() < 2 {
            bad("weak.dts", "need at least two resolutions".into());
        }
        for (i, dt) in self.weak.dts.iter().enumerate() {
            if !(dt.is_finite() && *dt > 0.0 && *dt <= self.model.horizon / 3.0) {
                bad(&format!("weak.dts[{i}]"), format!("need 0 < dt <= T/3, got {dt}"));
            }
        }
        if self.weak.ns.contains(&0) {
            bad("weak.ns", "particle counts must be >= 1".into());
        }
        if self.weak.replicas == 0 {
            bad("weak.replicas", "must be >= 1".into());
        }
        if !(self.weak.max_spread >= 1.0) {
            bad("weak.max_spread", format!("must be >= 1, got {}", self.weak.max_spread));
        }
        if self.reduction.n == 0 {
            bad("reduction.n", "must be >= 1".into());
        }
        positive(&mut bad, "reduction.horizon", self.reduction.horizon);
        positive(&mut bad, "reduction.dt", self.reduction.dt);
        for (path, n) in [
            ("invariants.samples", self.invariants.samples),
            ("invariants.pairs", self.invariants.pairs),
            ("invariants.paths", self.invariants.paths),
            ("invariants.oracle_steps", self.invariants.oracle_steps),
        ] {
            if n == 0 {
                bad(path, "must be >= 1".into());
            }
        }
        if self.output.dir.as_os_str().is_empty() {
            bad("output.dir", "must not be empty".into());
        }
        out
    }
}

fn positive(bad: &mut impl FnMut(&str, String), path: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        bad(path, format!("must be > 0, got {v}"));
    }
}

/// Set `a.b.c = value` in a TOML table. The value is read as TOML and
/// falls back to a plain string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.is_empty()) {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(ConfigError::Override(format!("{spec} ({part} is not a section)"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("", "<empty>", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        let again = RunConfig::from_toml_str(&c.to_toml(), "<printed>", &[]).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = RunConfig::from_toml_str(
            "[model]\nlambda = 2.0\n",
            "<t>",
            &["model.lambda=0.5".into(), "chaos.ns=[10,20,40,100]".into(), "output.dir=elsewhere".into()],
        )
        .unwrap();
        assert_eq!(c.model.lambda, 0.5);
        assert_eq!(c.chaos.ns, vec![10, 20, 40, 100]);
        assert_eq!(c.output.dir, PathBuf::from("elsewhere"));
        assert!(RunConfig::from_toml_str("", "<t>", &["novalue".into()]).is_err());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = RunConfig::from_toml_str("[model]\nlambda = = 1\n", "cfg.toml", &[]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("cfg.toml") && msg.contains("line 2"), "{msg}");
        let e = RunConfig::from_toml_str("[model]\nlamda = 1\n", "cfg.toml", &[]).unwrap_err();
        assert!(e.to_string().contains("lamda"), "{e}");
    }

    #[test]
    fn all_violations_are_reported() {
        let e = RunConfig::from_toml_str(
            "[model]\nphi0 = 0.0\n[chaos]\nns = [200]\nn_ref = 100\n",
            "<t>",
            &[],
        )
        .unwrap_err();
        let ConfigError::Invalid(v) = e else { panic!("{e}") };
        let paths: Vec<&str> = v.iter().map(|x| x.path.as_str()).collect();
        assert!(paths.contains(&"model.phi0"));
        assert!(v.iter().any(|x| x.path == "model.phi0" && x.message.contains("porosity invariant")));
        assert!(paths.contains(&"chaos.n_ref"));
        assert!(paths.contains(&"chaos.ns"));
    }

    #[test]
    fn boundary_rule_is_checked() {
        let e = RunConfig::from_toml_str("[pde]\nhalf_width = 3.0\n", "<t>", &[]).unwrap_err();
        assert!(e.to_string().contains("pde.half_width"));
        let c = RunConfig::default();
        let need = required_half_width(&c.init, c.model.horizon, c.kernel.eps);
        assert!(c.pde_half_width() >= need);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), c.hash());
    }
}
