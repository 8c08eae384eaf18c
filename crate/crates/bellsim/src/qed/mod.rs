//! Photon-coupled extension of the free fermion model.
//!
//! The fermion configuration space is unchanged; what grows is the wave
//! function's index set.  A register of box-quantised radiation modes —
//! each a harmonic ladder truncated at `n_max` quanta — multiplies the
//! spinor tensor, and the state becomes one fermion amplitude per photon
//! occupation tuple γ, stored γ-major so every sector reuses the free
//! evolution kernels verbatim.
//!
//! The coupling is minimal: `W(X) = e Σ_k α¹_(k) A(x_k)` with `A` the mode
//! expansion of the transverse potential evaluated at each fermion's
//! position.  Because `W` acts pointwise in configuration space it
//! exponentiates cell by cell, and because it is hermitian the γ-summed
//! density `ρ(X) = Σ_γ |Ψ_γ(X)|²` still obeys the continuity equation that
//! the guidance law is built on: photons redistribute amplitude between
//! sectors without creating or destroying it at any point.  Trajectories
//! therefore follow the same velocity formula as in the free theory, with
//! ρ and j summed over sectors.
//!
//! The module provides the basis builder ([`build_photon_basis`]), the
//! sectored amplitude ([`QedAmplitude`]), γ-summed observables
//! ([`qed_density`], [`qed_velocity`], [`energy_ledger`]), the symmetric
//! split-step propagator ([`QedPropagator`]), the coupled guided evolution
//! ([`QedGuidedEvolution`]), and a cutoff sensitivity check
//! ([`truncation_audit`]).

pub mod amplitude;
pub mod photon;
pub mod stepper;

pub use amplitude::{
    energy_ledger, qed_continuity_residual, qed_currents, qed_density, qed_density_currents,
    qed_velocity, truncation_audit, EnergyLedger, QedAmplitude, TruncationAudit,
};
pub use photon::{build_photon_basis, PhotonBasis, PhotonMode, MAX_PHOTON_STATES};
pub use stepper::{QedGuidedEvolution, QedPropagator};
