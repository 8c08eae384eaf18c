//! Deterministic trajectories guided by the configuration amplitude.
//!
//! The amplitude never collapses; what moves is a point in configuration
//! space, pushed along the velocity field `v = j/ρ` built from the fermion
//! density and currents.  This module turns that law into machinery:
//!
//! * [`velocity_field`] converts an amplitude snapshot into a bounded,
//!   node-masked [`VelocityField`] with multilinear interpolation between
//!   grid cells;
//! * [`sample_initial`] draws an ensemble of configurations from `|Ψ|²`
//!   and [`advance_ensemble`] integrates them with classical RK4 over the
//!   three stage fields of a step ([`VelocityStages`]);
//! * [`GuidedEvolution`] interleaves amplitude half-steps with trajectory
//!   steps so the stage fields are exact snapshots, not extrapolations;
//! * [`equivariance_test`] checks the defining property — an ensemble
//!   prepared from `|Ψ(t₀)|²` must still be `|Ψ(t)|²`-distributed later —
//!   against self-calibrated Kolmogorov–Smirnov and chi-squared thresholds.
//!
//! Everything is deterministic given the master seed: members own fixed
//! counter-based RNG streams, so ensembles are byte-reproducible across
//! runs and thread counts.

pub mod ensemble;
pub mod equivariance;
pub mod velocity;

pub use ensemble::{advance_ensemble, sample_initial, GuidedEvolution, TrajectoryEnsemble};
pub use equivariance::{equivariance_test, EquivarianceReport, MIN_EQUIVARIANCE_SAMPLES};
pub use velocity::{velocity_field, VelocityField, VelocityStages, DEFAULT_NODE_EPS};
