//! A numerical laboratory for a deterministic pilot-wave treatment of the
//! lattice Dirac field.
//!
//! The crate is organised in layers:
//!
//! - [`dirac`] — the Dirac matrix algebra and closed-form plane-wave spinors
//!   on which everything else is built.
//! - [`fock`] — a small second-quantised sector: Jordan-Wigner ladder
//!   operators, the free Hamiltonian and its conserved charges, field
//!   operators on a spatial grid, and the fermion-number non-conservation
//!   check for localised densities.
//! - [`evolve`] — first-quantised configuration-space wave functions for a
//!   fixed number of fermions, evolved exactly with a spectral split-step
//!   propagator, together with densities, currents and the discrete
//!   continuity residual.
//! - [`guidance`] — the velocity field `v = j / ρ`, trajectory ensembles
//!   integrated through it, and the equivariance test that compares an
//!   evolved ensemble against the evolved density.
//! - [`qed`] — the same machinery with a truncated photon register coupled
//!   through the Dirac alpha matrices (velocity gauge, Coulomb-gauge
//!   transverse field).
//! - [`runner`] — run configurations, output files and manifests behind the
//!   `bellsim` command-line interface.
//!
//! Conventions used throughout: natural units `ħ = c = 1`, metric signature
//! `(+,−,−,−)`, a periodic box of side `L` with `N` points per axis, and
//! wavenumbers `2πn/L` with `n ∈ [−N/2, N/2)`.

pub mod dirac;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod grid;
pub mod guidance;
pub mod numeric;
pub mod qed;
pub mod runner;

pub use error::Error;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Guide chapters, wired in so every fenced Rust block in `book/src/`
/// compiles and runs against the current API under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/getting-started.md")]
    mod getting_started {}
    #[doc = include_str!("../../../book/src/dirac-algebra.md")]
    mod dirac_algebra {}
    #[doc = include_str!("../../../book/src/fock-space.md")]
    mod fock_space {}
    #[doc = include_str!("../../../book/src/wave-evolution.md")]
    mod wave_evolution {}
    #[doc = include_str!("../../../book/src/guided-trajectories.md")]
    mod guided_trajectories {}
    #[doc = include_str!("../../../book/src/photon-register.md")]
    mod photon_register {}
    #[doc = include_str!("../../../book/src/runs-and-manifests.md")]
    mod runs_and_manifests {}
}
