//! Run-configuration schema: a JSON file fully determines an experiment.
//!
//! Parsing and validation are separate passes so that error messages can
//! name the offending field either way: type errors carry the JSON path
//! from the deserializer, constraint errors carry a dotted field path from
//! the validator.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evolve::{PacketSpec, DEFAULT_MEMORY_BUDGET_MB};
use crate::guidance::DEFAULT_NODE_EPS;
use crate::Result;

/// Which experiment a config drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Matrix-identity suite; needs no further sections.
    CheckAlgebra,
    /// Second-quantised operator theorems at small mode count.
    FockVerify,
    /// Free configuration-space evolution with density snapshots.
    Evolve,
    /// Guided trajectory ensemble plus equivariance report.
    Trajectories,
    /// Photon-coupled evolution with energy ledger and sector norms.
    Qed,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CheckAlgebra => "check-algebra",
            ExperimentKind::FockVerify => "fock-verify",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Trajectories => "trajectories",
            ExperimentKind::Qed => "qed",
        }
    }
}

/// Periodic box: `d` axes, `N` points per axis, side length `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

/// Physical parameters: mass, fermion count, and the optional photon sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub m: f64,
    pub omega: usize,
    /// Coupling charge; zero decouples the photon register exactly.
    #[serde(default)]
    pub e: f64,
    /// Nonzero momentum indices of the radiation modes kept in the register.
    #[serde(default)]
    pub photon_modes: Vec<i64>,
    /// Occupation cutoff per mode (required when `photon_modes` is set).
    #[serde(default)]
    pub n_max: usize,
    /// Initial photon occupation per mode; defaults to the vacuum.
    #[serde(default)]
    pub initial_occupation: Vec<usize>,
}

/// Time stepping: step size, step count, and how often to emit snapshots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub steps: usize,
    /// Emit a snapshot every this many steps; `0` means final state only.
    #[serde(default)]
    pub snapshot_stride: usize,
}

impl IntegratorSection {
    /// Effective stride: `0` collapses to "final step only".
    pub fn stride(&self) -> usize {
        if self.snapshot_stride == 0 {
            self.steps
        } else {
            self.snapshot_stride
        }
    }
}

fn default_velocity_scale() -> f64 {
    1.0
}

/// Trajectory ensemble parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    /// Ensemble size.
    #[serde(rename = "M")]
    pub samples: usize,
    pub seed: u64,
    /// Multiplier on the guidance velocity; `1` is the physical law, other
    /// values are deliberate-mistake controls expected to break
    /// equivariance.
    #[serde(default = "default_velocity_scale")]
    pub velocity_scale: f64,
}

/// Parameters for the operator-identity experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    /// Momentum cutoff: indices `−modes..=modes` for both spins and energy
    /// signs.
    pub modes: usize,
    pub mass: f64,
    pub length: f64,
}

/// Numerical thresholds; every field has a sensible default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    /// Density floor below which a configuration counts as a node.
    pub node_eps: f64,
    /// Per-run bound on `|‖ψ‖ − 1|`; also the per-step abort threshold.
    pub norm_drift: f64,
    /// Multiple of the resampling-baseline 95th percentile that the
    /// ensemble statistics must stay under.
    pub equivariance_factor: f64,
    /// Fresh-sample draws used to calibrate the equivariance baseline.
    pub baseline_reps: usize,
    /// Relative drift allowed in the total energy of a coupled run.
    pub energy_drift: f64,
    /// Bound on the antisymmetry deviation for multi-fermion runs.
    pub antisymmetry_drift: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            node_eps: DEFAULT_NODE_EPS,
            norm_drift: 1e-6,
            equivariance_factor: 1.5,
            baseline_reps: 100,
            energy_drift: 1e-8,
            antisymmetry_drift: 1e-8,
        }
    }
}

fn default_budget() -> usize {
    DEFAULT_MEMORY_BUDGET_MB
}

/// A complete experiment description.
///
/// Sections irrelevant to the chosen experiment may be omitted; validation
/// enforces presence of the required ones.  The output directory is
/// resolution-time state (flag or environment can override it), so it is
/// excluded from the manifest's config echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physics: Option<PhysicsSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub packets: Vec<PacketSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<FockSection>,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: usize,
}

impl RunConfig {
    /// A config carrying nothing but the experiment kind, for experiments
    /// whose parameters arrive as CLI flags.
    pub fn bare(experiment: ExperimentKind) -> Self {
        RunConfig {
            experiment,
            grid: None,
            physics: None,
            packets: Vec::new(),
            integrator: None,
            sampling: None,
            fock: None,
            tolerances: ToleranceSection::default(),
            output_dir: None,
            memory_budget_mb: DEFAULT_MEMORY_BUDGET_MB,
        }
    }

    fn grid(&self) -> Result<&GridSection> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::config("grid", "section required for this experiment"))
    }

    fn physics(&self) -> Result<&PhysicsSection> {
        self.physics
            .as_ref()
            .ok_or_else(|| Error::config("physics", "section required for this experiment"))
    }

    fn integrator(&self) -> Result<&IntegratorSection> {
        self.integrator
            .as_ref()
            .ok_or_else(|| Error::config("integrator", "section required for this experiment"))
    }

    pub(crate) fn sampling_section(&self) -> Result<&SamplingSection> {
        self.sampling
            .as_ref()
            .ok_or_else(|| Error::config("sampling", "section required for this experiment"))
    }

    pub(crate) fn fock_section(&self) -> Result<&FockSection> {
        self.fock
            .as_ref()
            .ok_or_else(|| Error::config("fock", "section required for this experiment"))
    }

    /// Structural validation: every constraint violation names its field.
    pub fn validate(&self) -> Result<()> {
        let dynamic = matches!(
            self.experiment,
            ExperimentKind::Evolve | ExperimentKind::Trajectories | ExperimentKind::Qed
        );
        if dynamic {
            self.validate_grid()?;
            self.validate_physics()?;
            self.validate_packets()?;
            self.validate_integrator()?;
        }
        if self.experiment == ExperimentKind::Trajectories {
            self.validate_sampling()?;
        }
        if self.experiment == ExperimentKind::Qed {
            self.validate_photons()?;
        }
        if self.experiment == ExperimentKind::FockVerify {
            self.validate_fock()?;
        }
        self.validate_tolerances()?;
        if self.memory_budget_mb == 0 {
            return Err(Error::config("memory_budget_mb", "must be positive"));
        }
        Ok(())
    }

    fn validate_grid(&self) -> Result<()> {
        let g = self.grid()?;
        if !(1..=3).contains(&g.d) {
            return Err(Error::config(
                "grid.d",
                format!("dimension must be 1, 2 or 3 (got {})", g.d),
            ));
        }
        if g.points < 2 || !g.points.is_power_of_two() {
            return Err(Error::config(
                "grid.N",
                format!("points per axis must be a power of two ≥ 2 (got {})", g.points),
            ));
        }
        if !g.length.is_finite() || g.length <= 0.0 {
            return Err(Error::config(
                "grid.L",
                format!("box length must be positive and finite (got {})", g.length),
            ));
        }
        Ok(())
    }

    fn validate_physics(&self) -> Result<()> {
        let p = self.physics()?;
        if !p.m.is_finite() || p.m <= 0.0 {
            return Err(Error::config(
                "physics.m",
                format!("mass must be positive and finite (got {})", p.m),
            ));
        }
        if p.omega == 0 {
            return Err(Error::config("physics.omega", "at least one fermion required"));
        }
        if !p.e.is_finite() {
            return Err(Error::config(
                "physics.e",
                format!("charge must be finite (got {})", p.e),
            ));
        }
        Ok(())
    }

    fn validate_packets(&self) -> Result<()> {
        let omega = self.physics()?.omega;
        if self.packets.len() != omega {
            return Err(Error::config(
                "packets",
                format!(
                    "need exactly one packet per fermion: physics.omega = {omega} but {} packets given",
                    self.packets.len()
                ),
            ));
        }
        Ok(())
    }

    fn validate_integrator(&self) -> Result<()> {
        let i = self.integrator()?;
        if !i.dt.is_finite() || i.dt <= 0.0 {
            return Err(Error::config(
                "integrator.dt",
                format!("step size must be positive and finite (got {})", i.dt),
            ));
        }
        if i.steps == 0 {
            return Err(Error::config("integrator.steps", "at least one step required"));
        }
        Ok(())
    }

    fn validate_sampling(&self) -> Result<()> {
        let s = self.sampling_section()?;
        if s.samples == 0 {
            return Err(Error::config("sampling.M", "ensemble must be non-empty"));
        }
        if !s.velocity_scale.is_finite() || s.velocity_scale <= 0.0 {
            return Err(Error::config(
                "sampling.velocity_scale",
                format!("must be positive and finite (got {})", s.velocity_scale),
            ));
        }
        Ok(())
    }

    fn validate_photons(&self) -> Result<()> {
        let p = self.physics()?;
        if p.photon_modes.is_empty() {
            return Err(Error::config(
                "physics.photon_modes",
                "the photon-coupled experiment needs at least one radiation mode",
            ));
        }
        if p.n_max == 0 {
            return Err(Error::config(
                "physics.n_max",
                "occupation cutoff must be at least 1",
            ));
        }
        if !p.initial_occupation.is_empty() {
            if p.initial_occupation.len() != p.photon_modes.len() {
                return Err(Error::config(
                    "physics.initial_occupation",
                    format!(
                        "needs one entry per mode ({} modes, {} entries)",
                        p.photon_modes.len(),
                        p.initial_occupation.len()
                    ),
                ));
            }
            if let Some(&n) = p.initial_occupation.iter().find(|&&n| n > p.n_max) {
                return Err(Error::config(
                    "physics.initial_occupation",
                    format!("occupation {n} exceeds n_max = {}", p.n_max),
                ));
            }
        }
        Ok(())
    }

    fn validate_fock(&self) -> Result<()> {
        let f = self.fock_section()?;
        if !f.mass.is_finite() || f.mass <= 0.0 {
            return Err(Error::config(
                "fock.mass",
                format!("mass must be positive and finite (got {})", f.mass),
            ));
        }
        if !f.length.is_finite() || f.length <= 0.0 {
            return Err(Error::config(
                "fock.length",
                format!("box length must be positive and finite (got {})", f.length),
            ));
        }
        Ok(())
    }

    fn validate_tolerances(&self) -> Result<()> {
        let t = &self.tolerances;
        let positive: [(&str, f64); 4] = [
            ("tolerances.node_eps", t.node_eps),
            ("tolerances.norm_drift", t.norm_drift),
            ("tolerances.energy_drift", t.energy_drift),
            ("tolerances.antisymmetry_drift", t.antisymmetry_drift),
        ];
        for (path, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::config(
                    path,
                    format!("must be positive and finite (got {value})"),
                ));
            }
        }
        if !t.equivariance_factor.is_finite() || t.equivariance_factor < 1.0 {
            return Err(Error::config(
                "tolerances.equivariance_factor",
                format!("must be ≥ 1 (got {})", t.equivariance_factor),
            ));
        }
        if t.baseline_reps < 20 {
            return Err(Error::config(
                "tolerances.baseline_reps",
                format!("needs ≥ 20 draws for a stable percentile (got {})", t.baseline_reps),
            ));
        }
        Ok(())
    }

    /// Photon-register state index for the configured initial occupation.
    pub(crate) fn initial_photon_state(&self) -> usize {
        let Some(p) = self.physics.as_ref() else {
            return 0;
        };
        let base = p.n_max + 1;
        p.initial_occupation
            .iter()
            .rev()
            .fold(0, |acc, &n| acc * base + n)
    }
}

/// Read and validate a config file; errors name the file and, where
/// possible, the offending field.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
        file: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config: RunConfig =
        serde_path_to_error::deserialize(de).map_err(|e| Error::ConfigParse {
            file: path.to_path_buf(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })?;
    config.validate()?;
    Ok(config)
}
