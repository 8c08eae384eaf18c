//! Configuration, orchestration and persistence: the layer that turns the
//! numerical modules into reproducible experiments.
//!
//! A JSON [`RunConfig`] fully determines a run — physics, grid, stepping,
//! sampling, tolerances — and [`run`] executes it, writing headered-CSV
//! numerics, JSON reports, and finally an atomic `manifest.json` carrying
//! a config echo, named pass/fail checks, per-snapshot diagnostics, and a
//! SHA-256 inventory of every emitted file.  Fixing config and seed fixes
//! every artifact byte (walltime in the manifest is the documented
//! exception), so two runs can be compared by hash alone.
//!
//! Experiments: `check-algebra` (matrix identities), `fock-verify`
//! (second-quantised operator theorems), `evolve` (free configuration-space
//! evolution), `trajectories` (guided ensemble plus equivariance report),
//! and `qed` (photon-coupled evolution with sector norms and an energy
//! ledger).

pub mod config;
pub mod experiments;
pub mod manifest;

pub use config::{
    load_config, ExperimentKind, FockSection, GridSection, IntegratorSection, PhysicsSection,
    RunConfig, SamplingSection, ToleranceSection,
};
pub use experiments::{resolve_output_dir, run};
pub use manifest::{
    CheckRecord, Emitter, FileRecord, RunManifest, RunStatus, SnapshotRecord, TrajectoryStats,
    CODE_VERSION, FORMAT_VERSION,
};
