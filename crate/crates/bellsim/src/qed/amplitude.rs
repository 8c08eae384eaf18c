//! Photon-dressed configuration amplitudes and their summed observables.
//!
//! The coupled state is a stack of fermion configuration tensors, one per
//! photon occupation state: `Ψ^γ_{a_1..a_ω}(X)`.  All fermionic observables
//! trace over γ — the density is `ρ = Σ_γ Ψ^{γ*}Ψ^γ`, the currents sandwich
//! α per fermion slot and sum over γ, and the guidance law divides as in
//! the free theory.  The interaction never enters the current explicitly;
//! its effect arrives only through the state, which is why the continuity
//! equation keeps its free form after the γ sum.

use num_complex::Complex64;

use super::photon::{coupling_matrix, PhotonBasis};
use crate::error::Error;
use crate::evolve::fields::{
    continuity_residual_fields, currents_flat, density_flat,
};
use crate::evolve::step::free_energy_rayleigh;
use crate::evolve::{antisymmetry_deviation_flat, ConfigAmplitude, CurrentField, DensityField};
use crate::grid::GridSpec;
use crate::guidance::velocity::velocity_from_fields;
use crate::guidance::VelocityField;
use crate::numeric;
use crate::Result;

/// Dense photon-dressed amplitude, flat layout `(γ·4^ω + A)·C^ω + c`: each
/// photon sector is one full fermion configuration tensor.
#[derive(Clone, Debug)]
pub struct QedAmplitude {
    grid: GridSpec,
    omega: usize,
    mass: f64,
    charge: f64,
    time: f64,
    basis: PhotonBasis,
    data: Vec<Complex64>,
}

impl QedAmplitude {
    /// Dress a fermion amplitude with a superposition of photon occupation
    /// states: `Σ_s w_s |s⟩ ⊗ Ψ_fermion`, normalised.
    pub fn from_superposition(
        basis: &PhotonBasis,
        weights: &[(usize, Complex64)],
        fermion: &ConfigAmplitude,
        charge: f64,
        budget_mb: usize,
    ) -> Result<Self> {
        if !charge.is_finite() {
            return Err(Error::invalid("charge", "must be finite", charge));
        }
        if weights.is_empty() {
            return Err(Error::invalid(
                "photon weights",
                "at least one occupation state is required",
                "[]",
            ));
        }
        for &(state, _) in weights {
            if state >= basis.dim() {
                return Err(Error::invalid(
                    "photon state",
                    "occupation state outside the truncated basis",
                    state,
                ));
            }
        }
        let sector_len = fermion.data().len();
        let len = basis.dim() * sector_len;
        let needed_mb = (len * std::mem::size_of::<Complex64>()) as f64 / (1 << 20) as f64;
        if needed_mb > budget_mb as f64 {
            return Err(Error::MemoryBudget {
                needed_mb,
                budget_mb,
            });
        }
        let mut data = vec![Complex64::ZERO; len];
        for &(state, w) in weights {
            for (dst, src) in data[state * sector_len..(state + 1) * sector_len]
                .iter_mut()
                .zip(fermion.data())
            {
                *dst += w * src;
            }
        }
        let mut psi = QedAmplitude {
            grid: *fermion.grid(),
            omega: fermion.omega(),
            mass: fermion.mass(),
            charge,
            time: fermion.time(),
            basis: basis.clone(),
            data,
        };
        if psi.normalize() < 1e-6 {
            return Err(Error::invalid(
                "photon weights",
                "superposition weights cancel to a null state",
                "norm < 1e-6",
            ));
        }
        Ok(psi)
    }

    /// Dress a fermion amplitude with a single photon occupation state.
    pub fn from_product(
        basis: &PhotonBasis,
        state: usize,
        fermion: &ConfigAmplitude,
        charge: f64,
        budget_mb: usize,
    ) -> Result<Self> {
        Self::from_superposition(basis, &[(state, Complex64::ONE)], fermion, charge, budget_mb)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn basis(&self) -> &PhotonBasis {
        &self.basis
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.time += dt;
    }

    /// Entries of one photon sector, in fermion `(A, X)` layout.
    pub fn sector(&self, state: usize) -> &[Complex64] {
        let len = self.sector_len();
        &self.data[state * len..(state + 1) * len]
    }

    fn sector_len(&self) -> usize {
        self.data.len() / self.basis.dim()
    }

    /// Integration measure of one configuration cell, `h^(dω)`.
    pub fn cell_measure(&self) -> f64 {
        self.grid
            .spacing()
            .powi((self.grid.dim() * self.omega) as i32)
    }

    /// `‖Ψ‖² = Σ_γ Σ_X Σ_A |Ψ^γ|² h^(dω)`.
    pub fn norm_sqr(&self) -> f64 {
        numeric::norm_sqr(&self.data) * self.cell_measure()
    }

    /// Scale to unit norm; returns the norm before scaling.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let s = Complex64::new(1.0 / norm, 0.0);
            for z in &mut self.data {
                *z *= s;
            }
        }
        norm
    }

    /// Weight `‖Ψ^γ‖²/‖Ψ‖²` of every photon sector.
    pub fn sector_probabilities(&self) -> Vec<f64> {
        let len = self.sector_len();
        let total = numeric::norm_sqr(&self.data);
        (0..self.basis.dim())
            .map(|s| numeric::norm_sqr(&self.data[s * len..(s + 1) * len]) / total)
            .collect()
    }

    /// Expected total photon number `⟨Σ_m n_m⟩`.
    pub fn photon_number(&self) -> f64 {
        self.sector_probabilities()
            .iter()
            .enumerate()
            .map(|(s, p)| self.basis.total_occupation(s) as f64 * p)
            .sum()
    }

    /// Worst antisymmetry violation across photon sectors.
    pub fn antisymmetry_deviation(&self) -> f64 {
        antisymmetry_deviation_flat(&self.data, &self.grid, self.omega)
    }
}

/// γ-summed density `ρ(X) = Σ_γ Σ_a |Ψ^γ_a(X)|²`.
pub fn qed_density(psi: &QedAmplitude) -> DensityField {
    density_flat(&psi.data, &psi.grid, psi.omega)
}

/// γ-summed currents `j_k(X) = Σ_γ Ψ^{γ†} α_(k) Ψ^γ`.
pub fn qed_currents(psi: &QedAmplitude) -> CurrentField {
    currents_flat(&psi.data, &psi.grid, psi.omega)
}

pub fn qed_density_currents(psi: &QedAmplitude) -> (DensityField, CurrentField) {
    (qed_density(psi), qed_currents(psi))
}

/// Guidance velocity of the dressed state: the free law applied to the
/// γ-summed density and currents.
pub fn qed_velocity(psi: &QedAmplitude, node_eps: f64) -> VelocityField {
    velocity_from_fields(&qed_density(psi), &qed_currents(psi), node_eps)
}

/// Continuity residual on γ-summed fields for two consecutive snapshots —
/// the photon terms cancel pointwise in the γ sum, so this converges at the
/// same second order as the free theory.
pub fn qed_continuity_residual(prev: &QedAmplitude, next: &QedAmplitude) -> f64 {
    assert_eq!(prev.grid, next.grid, "snapshots from different grids");
    assert_eq!(prev.omega, next.omega);
    assert_eq!(prev.basis, next.basis, "snapshots from different photon bases");
    let dt = next.time - prev.time;
    continuity_residual_fields(
        &qed_density(prev),
        &qed_currents(prev),
        &qed_density(next),
        &qed_currents(next),
        dt,
    )
}

/// The three pieces of `⟨H⟩` for a dressed state.  Their sum is conserved
/// by the coupled evolution up to the splitting error.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct EnergyLedger {
    /// `⟨Σ_k α·p_k + mβ⟩`, γ-summed.
    pub fermion: f64,
    /// `⟨Σ_m n_m ω_m⟩`.
    pub photon: f64,
    /// `⟨e Σ_k α¹_(k) A(x_k)⟩`.
    pub interaction: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.fermion + self.photon + self.interaction
    }
}

/// Evaluate all three energy expectations on the current state.
pub fn energy_ledger(psi: &QedAmplitude) -> EnergyLedger {
    let fermion = free_energy_rayleigh(&psi.data, &psi.grid, psi.mass, psi.omega);
    let norm = numeric::norm_sqr(&psi.data);
    let photon = psi
        .sector_probabilities()
        .iter()
        .enumerate()
        .map(|(s, p)| psi.basis.state_energy(s) * p)
        .sum();
    let config_cells = psi.grid.cells().pow(psi.omega as u32);
    let dim = psi.data.len() / config_cells;
    let mut interaction = numeric::CompensatedSum::new();
    let mut column = vec![Complex64::ZERO; dim];
    for c in 0..config_cells {
        let w = coupling_matrix(&psi.basis, psi.charge, &psi.grid, psi.omega, c);
        for (i, slot) in column.iter_mut().enumerate() {
            *slot = psi.data[i * config_cells + c];
        }
        for (i, zi) in column.iter().enumerate() {
            let mut wz = Complex64::ZERO;
            for (j, zj) in column.iter().enumerate() {
                wz += w[(i, j)] * zj;
            }
            interaction.add((zi.conj() * wz).re);
        }
    }
    EnergyLedger {
        fermion,
        photon,
        interaction: interaction.value() / norm,
    }
}

/// Outcome of re-running an observable set with a deeper photon cutoff.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TruncationAudit {
    /// `max_X |ρ_a − ρ_b| / max ρ_a`.
    pub density_sup: f64,
    /// `|⟨n⟩_a − ⟨n⟩_b|`.
    pub photon_number_delta: f64,
    /// `|⟨H⟩_a − ⟨H⟩_b| / |⟨H⟩_a|`.
    pub energy_delta: f64,
    pub tolerance: f64,
    /// All three deltas within tolerance: the cutoff is deep enough.
    pub within: bool,
}

/// Compare two identically-prepared runs that differ only in `n_max`.  A
/// result is trustworthy only when deepening the cutoff does not move it.
pub fn truncation_audit(a: &QedAmplitude, b: &QedAmplitude, tolerance: f64) -> TruncationAudit {
    assert_eq!(a.grid, b.grid, "audit runs must share the grid");
    assert_eq!(a.omega, b.omega);
    assert_eq!(a.charge, b.charge, "audit runs must share the charge");
    assert_eq!(
        a.basis.modes(),
        b.basis.modes(),
        "audit runs must share the mode set"
    );
    let rho_a = qed_density(a);
    let rho_b = qed_density(b);
    let density_sup = rho_a
        .values()
        .iter()
        .zip(rho_b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / rho_a.max();
    let photon_number_delta = (a.photon_number() - b.photon_number()).abs();
    let ea = energy_ledger(a).total();
    let eb = energy_ledger(b).total();
    let energy_delta = (ea - eb).abs() / ea.abs();
    TruncationAudit {
        density_sup,
        photon_number_delta,
        energy_delta,
        tolerance,
        within: density_sup <= tolerance
            && photon_number_delta <= tolerance
            && energy_delta <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{EnergySign, Spin};
    use crate::evolve::{density, init_amplitude, PacketSpec, DEFAULT_MEMORY_BUDGET_MB};
    use crate::guidance::{velocity_field, DEFAULT_NODE_EPS};
    use crate::qed::photon::build_photon_basis;

    fn packet(grid: GridSpec) -> ConfigAmplitude {
        let spec = PacketSpec {
            center: [16.0, 0.0, 0.0],
            width: 2.0,
            momentum: [1.0, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Up,
        };
        init_amplitude(grid, 1.0, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap()
    }

    #[test]
    fn product_state_reproduces_free_density_and_velocity() {
        let grid = GridSpec::new(1, 64, 32.0).unwrap();
        let fermion = packet(grid);
        let basis = build_photon_basis(&[1], 2, &grid).unwrap();
        let psi =
            QedAmplitude::from_product(&basis, 1, &fermion, 0.4, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let rho_free = density(&fermion);
        let rho = qed_density(&psi);
        let dev = rho
            .values()
            .iter()
            .zip(rho_free.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-13 * rho_free.max(), "density deviation {dev:e}");
        let v_free = velocity_field(&fermion, DEFAULT_NODE_EPS);
        let v = qed_velocity(&psi, DEFAULT_NODE_EPS);
        for (a, b) in v.component(0, 0).iter().zip(v_free.component(0, 0)) {
            assert!((a - b).abs() <= 1e-13);
        }
        assert!((qed_density(&psi).total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_superposition_with_common_factor_keeps_fermion_observables() {
        let grid = GridSpec::new(1, 64, 32.0).unwrap();
        let fermion = packet(grid);
        let basis = build_photon_basis(&[1], 2, &grid).unwrap();
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = QedAmplitude::from_superposition(
            &basis,
            &[(0, w), (2, w * Complex64::i())],
            &fermion,
            0.4,
            DEFAULT_MEMORY_BUDGET_MB,
        )
        .unwrap();
        // Orthonormal photon states: the cross terms vanish and the common
        // fermion factor carries all position dependence.
        let rho_free = density(&fermion);
        let rho = qed_density(&psi);
        let dev = rho
            .values()
            .iter()
            .zip(rho_free.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-13 * rho_free.max());
        let v_free = velocity_field(&fermion, DEFAULT_NODE_EPS);
        let v = qed_velocity(&psi, DEFAULT_NODE_EPS);
        for (a, b) in v.component(0, 0).iter().zip(v_free.component(0, 0)) {
            assert!((a - b).abs() <= 1e-13);
        }
        // Photon bookkeeping: half the weight at 0 quanta, half at 2.
        let probs = psi.sector_probabilities();
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert!((probs[2] - 0.5).abs() < 1e-12);
        assert!((psi.photon_number() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_ledger_is_purely_fermionic_plus_photon() {
        let grid = GridSpec::new(1, 64, 32.0).unwrap();
        let fermion = packet(grid);
        let basis = build_photon_basis(&[1], 1, &grid).unwrap();
        let psi =
            QedAmplitude::from_product(&basis, 1, &fermion, 0.8, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let ledger = energy_ledger(&psi);
        // ⟨γ|A|γ⟩ = 0 for any occupation state, so the interaction vanishes
        // on a product state even at nonzero charge.
        assert!(ledger.interaction.abs() < 1e-12);
        let omega_ph = 2.0 * std::f64::consts::PI / 32.0;
        assert!((ledger.photon - omega_ph).abs() < 1e-12);
        let nominal = 2.0f64.sqrt();
        assert!((ledger.fermion - nominal).abs() < 0.05 * nominal);
    }

    #[test]
    fn rejects_malformed_dressings() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let spec = PacketSpec {
            center: [8.0, 0.0, 0.0],
            width: 1.0,
            momentum: [0.0, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Up,
        };
        let fermion = init_amplitude(grid, 1.0, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let basis = build_photon_basis(&[1], 1, &grid).unwrap();
        assert!(QedAmplitude::from_product(&basis, 2, &fermion, 0.1, 4096).is_err());
        assert!(QedAmplitude::from_superposition(&basis, &[], &fermion, 0.1, 4096).is_err());
        assert!(QedAmplitude::from_product(&basis, 0, &fermion, f64::NAN, 4096).is_err());
        assert!(matches!(
            QedAmplitude::from_product(&basis, 0, &fermion, 0.1, 0),
            Err(Error::MemoryBudget { .. })
        ));
        let cancel = QedAmplitude::from_superposition(
            &basis,
            &[(0, Complex64::ONE), (0, -Complex64::ONE)],
            &fermion,
            0.1,
            4096,
        );
        assert!(cancel.is_err());
    }
}
