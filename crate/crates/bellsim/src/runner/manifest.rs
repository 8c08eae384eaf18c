//! Run manifests and artifact files.
//!
//! Every run ends by atomically writing `manifest.json`: config echo, code
//! version, per-snapshot diagnostics, named pass/fail checks, wall-clock
//! timing, and a content-hashed inventory of every file the run emitted.
//! The inventory is the reproducibility contract — identical config and
//! seed must reproduce identical artifact bytes, hence identical hashes —
//! while the timing field is explicitly outside it.
//!
//! Formats: JSON with struct-order keys for reports, CSV with
//! `#`-prefixed header lines for bulk numerics.  Floats are written in
//! shortest round-trip form so emitted precision is full precision.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dirac::IdentityCheck;
use crate::qed::EnergyLedger;
use crate::Result;

use super::config::{ExperimentKind, RunConfig};

/// Code version baked into every manifest.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the config/manifest schema itself.
pub const FORMAT_VERSION: u32 = 1;

/// Overall outcome of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// All embedded checks passed.
    Pass,
    /// The experiment completed but at least one check failed.
    Fail,
    /// The experiment aborted; see `error`.
    Error,
}

/// One named pass/fail criterion with the measured value and its threshold.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Pass iff `value ≤ threshold`.
    pub fn bounded(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckRecord {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Record an externally decided outcome, keeping the diagnostic value.
    pub fn decided(name: impl Into<String>, value: f64, threshold: f64, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            value,
            threshold,
            pass,
        }
    }
}

impl From<&IdentityCheck> for CheckRecord {
    fn from(c: &IdentityCheck) -> Self {
        CheckRecord {
            name: c.name.clone(),
            value: c.residual,
            threshold: c.tolerance,
            pass: c.pass,
        }
    }
}

/// Diagnostics captured at one snapshot step.
#[derive(Clone, Debug, Serialize)]
pub struct SnapshotRecord {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    /// Continuity residual across the step that landed on this snapshot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisymmetry: Option<f64>,
    /// Free-evolution energy expectation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Split energy ledger of a photon-coupled run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<EnergyLedger>,
    /// Photon-sector probabilities (per-sector norms squared).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector_probabilities: Option<Vec<f64>>,
    /// Density CSV emitted at this snapshot, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_file: Option<String>,
}

impl SnapshotRecord {
    pub fn new(step: usize, time: f64, norm: f64) -> Self {
        SnapshotRecord {
            step,
            time,
            norm,
            continuity_residual: None,
            antisymmetry: None,
            energy: None,
            ledger: None,
            sector_probabilities: None,
            density_file: None,
        }
    }
}

/// Ensemble-level diagnostics of a trajectory run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectoryStats {
    pub samples: usize,
    pub node_events: u64,
    pub max_speed: f64,
}

/// One emitted file: path relative to the output directory, size, SHA-256.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// The complete record of one run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: ExperimentKind,
    pub code_version: String,
    pub format_version: u32,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<SnapshotRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryStats>,
    pub inventory: Vec<FileRecord>,
    /// Wall-clock duration; the one field outside the reproducibility
    /// contract.
    pub elapsed_seconds: f64,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        RunManifest {
            experiment: config.experiment,
            code_version: CODE_VERSION.to_string(),
            format_version: FORMAT_VERSION,
            status: RunStatus::Error,
            error: None,
            config: config.clone(),
            checks: Vec::new(),
            snapshots: Vec::new(),
            trajectories: None,
            inventory: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Writes artifacts under one output directory and remembers what it wrote,
/// so the manifest inventory covers exactly the files of this run — never
/// stale leftovers.
pub struct Emitter {
    out: PathBuf,
    written: Vec<String>,
}

impl Emitter {
    /// Create (if needed) the output directory.
    pub fn new(out: impl Into<PathBuf>) -> Result<Self> {
        let out = out.into();
        fs::create_dir_all(&out)?;
        Ok(Emitter {
            out,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.out
    }

    fn register(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    /// Serialize as pretty JSON (struct-order keys) with a trailing newline.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| crate::Error::Internal(format!("JSON serialization failed: {e}")))?;
        text.push('\n');
        fs::write(self.out.join(name), text)?;
        self.register(name);
        Ok(())
    }

    /// Write a CSV file: `#`-prefixed header lines, then comma-joined rows.
    pub fn write_csv<'r>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl Iterator<Item = &'r [f64]>,
    ) -> Result<()> {
        let mut text = String::new();
        for line in header {
            writeln!(text, "# {line}").expect("string write");
        }
        for row in rows {
            let mut first = true;
            for v in row {
                if !first {
                    text.push(',');
                }
                write_float(&mut text, *v);
                first = false;
            }
            text.push('\n');
        }
        fs::write(self.out.join(name), text)?;
        self.register(name);
        Ok(())
    }

    /// Hash every file written so far, sorted by path.
    pub fn inventory(&self) -> Result<Vec<FileRecord>> {
        let mut names = self.written.clone();
        names.sort();
        names.dedup();
        let mut records = Vec::with_capacity(names.len());
        for name in names {
            let bytes = fs::read(self.out.join(&name))?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            let digest = hasher.finalize();
            let mut hex = String::with_capacity(64);
            for b in digest {
                write!(hex, "{b:02x}").expect("string write");
            }
            records.push(FileRecord {
                path: name,
                bytes: bytes.len() as u64,
                sha256: hex,
            });
        }
        Ok(records)
    }

    /// Write the manifest atomically: temp file in the same directory, then
    /// rename over the final name.
    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<()> {
        let final_path = self.out.join("manifest.json");
        let tmp_path = self.out.join("manifest.json.tmp");
        let mut text = serde_json::to_string_pretty(manifest)
            .map_err(|e| crate::Error::Internal(format!("JSON serialization failed: {e}")))?;
        text.push('\n');
        let mut file = fs::File::create(&tmp_path)?;
        file.write_all(text.as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp_path, &final_path)?;
        Ok(())
    }
}

/// Shortest round-trip float formatting; integral values keep a `.0` so
/// every column stays typed as a float, and exponent form kicks in only
/// where Rust's shortest form uses it.
fn write_float(text: &mut String, v: f64) {
    if v == v.trunc() && v.abs() < 1e15 {
        write!(text, "{v:.1}").expect("string write");
    } else {
        write!(text, "{v}").expect("string write");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_gets_hash_prefixed_headers_and_roundtrip_floats() {
        let dir = tempfile::tempdir().unwrap();
        let mut emitter = Emitter::new(dir.path()).unwrap();
        let rows: Vec<Vec<f64>> = vec![vec![0.0, 0.1], vec![1.0, 0.125]];
        emitter
            .write_csv(
                "data.csv",
                &["t [1/m], x [1/m]"],
                rows.iter().map(|r| r.as_slice()),
            )
            .unwrap();
        let text = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
        assert_eq!(text, "# t [1/m], x [1/m]\n0.0,0.1\n1.0,0.125\n");
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            for field in line.split(',') {
                let back: f64 = field.parse().unwrap();
                let again = format!("{back}");
                assert!(field.contains(&again) || field == again || back.to_string() == again);
            }
        }
    }

    #[test]
    fn inventory_hashes_match_file_contents() {
        let dir = tempfile::tempdir().unwrap();
        let mut emitter = Emitter::new(dir.path()).unwrap();
        emitter
            .write_json("report.json", &serde_json::json!({"ok": true}))
            .unwrap();
        let inv = emitter.inventory().unwrap();
        assert_eq!(inv.len(), 1);
        assert_eq!(inv[0].path, "report.json");
        let bytes = std::fs::read(dir.path().join("report.json")).unwrap();
        assert_eq!(inv[0].bytes, bytes.len() as u64);
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let expect: String = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(inv[0].sha256, expect);
    }

    #[test]
    fn manifest_lands_atomically_without_a_temp_leftover() {
        let dir = tempfile::tempdir().unwrap();
        let emitter = Emitter::new(dir.path()).unwrap();
        let config = RunConfig::bare(ExperimentKind::CheckAlgebra);
        let mut manifest = RunManifest::new(&config);
        manifest.status = RunStatus::Pass;
        emitter.write_manifest(&manifest).unwrap();
        assert!(dir.path().join("manifest.json").exists());
        assert!(!dir.path().join("manifest.json.tmp").exists());
        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(parsed["status"], "pass");
        assert_eq!(parsed["format_version"], 1);
    }
}
