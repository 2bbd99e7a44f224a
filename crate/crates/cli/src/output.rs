//! Output files. Every file a run writes goes through `OutputDir`, which
//! records it for the manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mkfk_core::field::{FKField, FieldSlice};
use mkfk_core::grid::TimeGrid;
use mkfk_core::kernel::KernelSpec;
use mkfk_core::particles::PathStore;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A CSV table held as already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub command: Vec<String>,
    pub subcommand: String,
    pub artifacts: Vec<Artifact>,
    pub versions: Versions,
    pub timestamp_unix: u64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub mkfk: String,
}

pub const MANIFEST: &str = "manifest.json";
pub const FAILED_MARKER: &str = "FAILED";

pub struct OutputDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

fn sha_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        // a stale marker or manifest from an earlier run would be an orphan
        for stale in [MANIFEST, FAILED_MARKER] {
            let p = root.join(stale);
            if p.exists() {
                fs::remove_file(p)?;
            }
        }
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes)?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_table(&mut self, t: &Table) -> io::Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&t.header)?;
        for r in &t.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write_bytes(&format!("{}.csv", t.name), &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn mark_failed(&mut self, reason: &str) -> io::Result<()> {
        self.write_bytes(FAILED_MARKER, format!("{reason}\n").as_bytes())?;
        Ok(())
    }

    /// Write `manifest.json` listing every file written so far.
    pub fn finish(self, config_hash: &str, seed: u64, command: Vec<String>, subcommand: &str, status: &str) -> io::Result<Manifest> {
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let m = Manifest {
            config_hash: config_hash.to_string(),
            seed,
            command,
            subcommand: subcommand.to_string(),
            artifacts: self.artifacts,
            versions: Versions {
                mkfk: env!("CARGO_PKG_VERSION").to_string(),
            },
            timestamp_unix,
            status: status.to_string(),
        };
        let mut bytes = serde_json::to_vec_pretty(&m)?;
        bytes.push(b'\n');
        fs::write(self.root.join(MANIFEST), bytes)?;
        Ok(m)
    }
}

/// Field as `step, center, weight` rows; the normalisation of each slice
/// is its atom count.
pub fn field_table(name: &str, field: &FKField) -> Table {
    let mut t = Table::new(name, &["step", "center", "weight"]);
    for (k, s) in field.slices().iter().enumerate() {
        for (x, w) in s.centers().iter().zip(s.weights()) {
            t.push(vec![k.to_string(), num(*x), num(*w)]);
        }
    }
    t
}

#[derive(Debug, thiserror::Error)]
pub enum FieldFileError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("{0}")]
    Core(#[from] mkfk_core::Error),
}

/// Read a field written by `field_table` back onto `grid`.
pub fn read_field(path: &Path, grid: TimeGrid, kernel: KernelSpec) -> Result<FKField, FieldFileError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["step", "center", "weight"] {
        return Err(FieldFileError::Row {
            row: 1,
            message: format!("expected header step,center,weight, got {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut atoms: Vec<Vec<(f64, f64)>> = vec![Vec::new(); grid.n_points()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |m: String| FieldFileError::Row { row, message: m };
        let step: usize = rec[0].parse().map_err(|e| bad(format!("step: {e}")))?;
        let x: f64 = rec[1].parse().map_err(|e| bad(format!("center: {e}")))?;
        let w: f64 = rec[2].parse().map_err(|e| bad(format!("weight: {e}")))?;
        if step >= atoms.len() {
            return Err(bad(format!("step {step} beyond the {} grid points", atoms.len())));
        }
        atoms[step].push((x, w));
    }
    let slices = atoms.into_iter().map(FieldSlice::new).collect();
    Ok(FKField::new(grid, kernel, slices)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct PathDumpHeader {
    pub format: &'static str,
    /// `[n_points, n_particles, n_fields]`
    pub shape: [usize; 3],
    pub fields: [&'static str; 2],
    pub layout: &'static str,
    pub dtype: &'static str,
    pub dt: f64,
    pub seed: u64,
    pub config_hash: String,
}

/// `paths.bin`: one JSON header line, then little-endian `f64` values
/// ordered by step, then particle, then field (`x`, `weight`).
pub fn path_dump(store: &PathStore, seed: u64, config_hash: &str) -> Vec<u8> {
    let np = store.n_steps_recorded();
    let header = PathDumpHeader {
        format: "mkfk-paths-1",
        shape: [np, store.n, 2],
        fields: ["x", "weight"],
        layout: "step-major",
        dtype: "f64le",
        dt: store.grid.dt(),
        seed,
        config_hash: config_hash.to_string(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serialises");
    out.push(b'\n');
    out.reserve(np * store.n * 16);
    for k in 0..np {
        for (x, w) in store.positions(k).iter().zip(store.weights(k)) {
            out.write_all(&x.to_le_bytes()).unwrap();
            out.write_all(&w.to_le_bytes()).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn field_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = TimeGrid::new(1.0, 2).unwrap();
        let k = KernelSpec::gaussian(0.3).unwrap();
        let s = |o: f64| FieldSlice::new([(o, 0.9), (o + 0.1, 0.7 / 3.0)]);
        let f = FKField::new(g, k, vec![s(0.0), s(0.2), s(-0.4)]).unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let p = out.write_table(&field_table("field", &f)).unwrap();
        assert_eq!(read_field(&p, g, k).unwrap(), f);
        assert_eq!(out.artifacts().len(), 1);
        let m = out.finish("h", 1, vec![], "test", "ok").unwrap();
        assert_eq!(m.artifacts[0].path, "field.csv");
    }
}
