//! Configuration-space amplitudes for ω Dirac fermions and their free
//! evolution.
//!
//! The wave function of ω fermions is a complex tensor
//! `Ψ_{a_1..a_ω}(x_1, .., x_ω)` carrying one 4-component spinor index and one
//! grid position per fermion.  It is antisymmetric under simultaneous
//! exchange `(a_i, x_i) ↔ (a_j, x_j)` and evolves under the sum of
//! one-particle Dirac generators `h_k = α·p_k + mβ`.  Because the `h_k` act
//! on distinct slots they commute, so the split evolution applied here —
//! diagonalise each slot in momentum space and advance it by the closed-form
//! 4×4 propagator — is exact in time; only the spatial discretisation
//! approximates the continuum.
//!
//! Submodules: [`packets`] builds antisymmetrised Gaussian wave packets,
//! [`step`] advances the amplitude, [`fields`] extracts the density ρ and the
//! per-fermion currents j_k that feed the guidance law.

pub mod fields;
pub mod packets;
pub(crate) mod spectral;
pub mod step;

pub use fields::{continuity_residual, currents, density, CurrentField, DensityField};
pub use packets::{init_amplitude, plane_wave, PacketSpec};
pub use step::{energy_expectation, FreePropagator};

use num_complex::Complex64;

use crate::error::Error;
use crate::grid::GridSpec;
use crate::numeric;
use crate::Result;

/// Default cap on the dense configuration tensor, in MiB.
pub const DEFAULT_MEMORY_BUDGET_MB: usize = 4096;

/// Dense amplitude over `(a_1..a_ω) × (x_1..x_ω)`.
///
/// Flat layout: `index = A·C^ω + c` with spinor block `A = Σ_j a_j 4^j`,
/// configuration cell `c = Σ_j c_j C^j`, `C` the number of grid cells and
/// `c_j` the per-fermion cell (axis 0 fastest within a cell).  Slot `j`'s
/// indices therefore sit at strides `4^j` (spinor) and `C^j` (position).
#[derive(Clone, Debug)]
pub struct ConfigAmplitude {
    grid: GridSpec,
    omega: usize,
    mass: f64,
    time: f64,
    data: Vec<Complex64>,
}

impl ConfigAmplitude {
    /// Zero amplitude for `omega` fermions.  Refuses more than three fermions
    /// and tensors beyond `budget_mb` (the dense storage grows as
    /// `(4N^d)^ω`).
    pub fn zeros(grid: GridSpec, omega: usize, mass: f64, budget_mb: usize) -> Result<Self> {
        if !(1..=3).contains(&omega) {
            return Err(Error::invalid(
                "fermion count",
                "dense configuration tensors support 1 to 3 fermions",
                omega,
            ));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid("mass", "must be finite and > 0", mass));
        }
        let len = 4usize.pow(omega as u32) * grid.cells().pow(omega as u32);
        let needed_mb = (len * std::mem::size_of::<Complex64>()) as f64 / (1 << 20) as f64;
        if needed_mb > budget_mb as f64 {
            return Err(Error::MemoryBudget {
                needed_mb,
                budget_mb,
            });
        }
        Ok(ConfigAmplitude {
            grid,
            omega,
            mass,
            time: 0.0,
            data: vec![Complex64::ZERO; len],
        })
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

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Number of configuration cells `C^ω`.
    pub fn config_cells(&self) -> usize {
        self.grid.cells().pow(self.omega as u32)
    }

    /// Number of spinor blocks `4^ω`.
    pub fn spinor_blocks(&self) -> usize {
        4usize.pow(self.omega as u32)
    }

    /// Integration measure of one configuration cell, `h^(dω)`.
    pub fn cell_measure(&self) -> f64 {
        self.grid
            .spacing()
            .powi((self.grid.dim() * self.omega) as i32)
    }

    /// Flat index from per-fermion spinor indices and cell indices.
    pub fn index(&self, spinors: &[usize], cells: &[usize]) -> usize {
        debug_assert_eq!(spinors.len(), self.omega);
        debug_assert_eq!(cells.len(), self.omega);
        let c_count = self.grid.cells();
        let mut a = 0;
        let mut c = 0;
        for j in (0..self.omega).rev() {
            debug_assert!(spinors[j] < 4 && cells[j] < c_count);
            a = a * 4 + spinors[j];
            c = c * c_count + cells[j];
        }
        a * self.config_cells() + c
    }

    /// `‖Ψ‖² = Σ_X Σ_a |Ψ|² h^(dω)`.
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

    /// `⟨self|other⟩` with the grid measure.
    pub fn inner(&self, other: &ConfigAmplitude) -> Complex64 {
        assert_eq!(self.data.len(), other.data.len());
        let mut re = numeric::CompensatedSum::new();
        let mut im = numeric::CompensatedSum::new();
        for (a, b) in self.data.iter().zip(&other.data) {
            let z = a.conj() * b;
            re.add(z.re);
            im.add(z.im);
        }
        Complex64::new(re.value(), im.value()) * self.cell_measure()
    }

    /// Largest `|Ψ|` over all entries.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Worst violation of `Ψ(.. z_i .. z_j ..) = −Ψ(.. z_j .. z_i ..)` over
    /// all transpositions and entries, relative to the largest amplitude.
    /// Zero for a single fermion.
    pub fn antisymmetry_deviation(&self) -> f64 {
        antisymmetry_deviation_flat(&self.data, &self.grid, self.omega)
    }

    /// Project onto the antisymmetric subspace:
    /// `Ψ ← (1/ω!) Σ_σ sgn(σ) Ψ∘σ`.
    pub fn antisymmetrize(&mut self) {
        if self.omega < 2 {
            return;
        }
        let perms = signed_permutations(self.omega);
        let inv_fact = 1.0 / perms.len() as f64;
        let old = self.data.clone();
        let mut a_digits = vec![0usize; self.omega];
        let mut c_digits = vec![0usize; self.omega];
        let mut a_perm = vec![0usize; self.omega];
        let mut c_perm = vec![0usize; self.omega];
        for idx in 0..self.data.len() {
            self.decompose(idx, &mut a_digits, &mut c_digits);
            let mut sum = Complex64::ZERO;
            for (perm, sign) in &perms {
                for (slot, &src) in perm.iter().enumerate() {
                    a_perm[slot] = a_digits[src];
                    c_perm[slot] = c_digits[src];
                }
                sum += old[self.index(&a_perm, &c_perm)] * *sign;
            }
            self.data[idx] = sum * inv_fact;
        }
    }

    fn decompose(&self, idx: usize, spinors: &mut [usize], cells: &mut [usize]) {
        let c_count = self.grid.cells();
        let mut a = idx / self.config_cells();
        let mut c = idx % self.config_cells();
        for j in 0..self.omega {
            spinors[j] = a % 4;
            a /= 4;
            cells[j] = c % c_count;
            c /= c_count;
        }
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.time += dt;
    }
}

/// Worst antisymmetry violation of a flat `(sectors.., spinor, X)` tensor,
/// relative to its largest entry.  Fermion exchange acts within a sector, so
/// each leading-sector block must be antisymmetric on its own.
pub(crate) fn antisymmetry_deviation_flat(
    data: &[Complex64],
    grid: &GridSpec,
    omega: usize,
) -> f64 {
    let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if omega < 2 || scale == 0.0 {
        return 0.0;
    }
    let cells = grid.cells();
    let config_cells = cells.pow(omega as u32);
    let sector_len = 4usize.pow(omega as u32) * config_cells;
    let mut a_digits = vec![0usize; omega];
    let mut c_digits = vec![0usize; omega];
    let mut worst = 0.0f64;
    for sector in data.chunks_exact(sector_len) {
        for i in 0..omega {
            for j in i + 1..omega {
                for idx in 0..sector_len {
                    let mut a = idx / config_cells;
                    let mut c = idx % config_cells;
                    for digit in 0..omega {
                        a_digits[digit] = a % 4;
                        a /= 4;
                        c_digits[digit] = c % cells;
                        c /= cells;
                    }
                    a_digits.swap(i, j);
                    c_digits.swap(i, j);
                    let mut sa = 0;
                    let mut sc = 0;
                    for digit in (0..omega).rev() {
                        sa = sa * 4 + a_digits[digit];
                        sc = sc * cells + c_digits[digit];
                    }
                    let dev = (sector[sa * config_cells + sc] + sector[idx]).norm();
                    worst = worst.max(dev);
                }
            }
        }
    }
    worst / scale
}

/// All permutations of `0..n` with their signs, via Heap's algorithm.
fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut counters = vec![0usize; n];
    out.push((items.clone(), sign));
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(counters[i], i);
            }
            sign = -sign;
            out.push((items.clone(), sign));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_oversized_and_invalid_tensors() {
        let grid = GridSpec::new(1, 8, 1.0).unwrap();
        assert!(matches!(
            ConfigAmplitude::zeros(grid, 0, 1.0, 64),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ConfigAmplitude::zeros(grid, 4, 1.0, 1 << 20),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ConfigAmplitude::zeros(grid, 1, -1.0, 64),
            Err(Error::InvalidParameter { .. })
        ));
        // 4^3·(64)^3 entries ≈ 256 MiB exceeds a 64 MiB budget.
        let big = GridSpec::new(1, 64, 1.0).unwrap();
        assert!(matches!(
            ConfigAmplitude::zeros(big, 3, 1.0, 64),
            Err(Error::MemoryBudget { .. })
        ));
    }

    #[test]
    fn permutations_carry_correct_signs() {
        let perms = signed_permutations(3);
        assert_eq!(perms.len(), 6);
        let total: f64 = perms.iter().map(|(_, s)| s).sum();
        assert_eq!(total, 0.0);
        for (p, s) in &perms {
            // Parity from explicit inversion count.
            let mut inversions = 0;
            for i in 0..3 {
                for j in i + 1..3 {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let expect = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(*s, expect, "{p:?}");
        }
    }

    #[test]
    fn antisymmetrize_then_deviation_is_zero() {
        let grid = GridSpec::new(1, 8, 4.0).unwrap();
        let mut psi = ConfigAmplitude::zeros(grid, 2, 1.0, 64).unwrap();
        // Arbitrary smooth deterministic filler.
        for (i, z) in psi.data.iter_mut().enumerate() {
            let x = i as f64;
            *z = Complex64::new((0.1 * x).sin(), (0.07 * x).cos());
        }
        assert!(psi.antisymmetry_deviation() > 0.1);
        psi.antisymmetrize();
        assert!(psi.antisymmetry_deviation() < 1e-12);
        // Idempotent: projecting twice changes nothing.
        let before = psi.data.clone();
        psi.antisymmetrize();
        for (a, b) in psi.data.iter().zip(&before) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn index_layout_strides() {
        let grid = GridSpec::new(1, 8, 4.0).unwrap();
        let psi = ConfigAmplitude::zeros(grid, 2, 1.0, 64).unwrap();
        assert_eq!(psi.index(&[0, 0], &[0, 0]), 0);
        assert_eq!(psi.index(&[1, 0], &[0, 0]), 64);
        assert_eq!(psi.index(&[0, 1], &[0, 0]), 4 * 64);
        assert_eq!(psi.index(&[0, 0], &[1, 0]), 1);
        assert_eq!(psi.index(&[0, 0], &[0, 1]), 8);
        assert_eq!(psi.index(&[3, 3], &[7, 7]), 16 * 64 - 1);
    }

    #[test]
    fn norm_and_normalize() {
        let grid = GridSpec::new(1, 8, 4.0).unwrap();
        let mut psi = ConfigAmplitude::zeros(grid, 1, 1.0, 64).unwrap();
        psi.data[3] = Complex64::new(2.0, 0.0);
        // Single entry: ‖Ψ‖² = 4·h = 2.
        assert!((psi.norm_sqr() - 2.0).abs() < 1e-15);
        let previous = psi.normalize();
        assert!((previous - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
    }
}
