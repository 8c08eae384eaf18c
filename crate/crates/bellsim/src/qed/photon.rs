//! Truncated photon occupation basis and the radiation field's matrix
//! elements.
//!
//! The radiation field is box-quantized in Coulomb gauge: a handful of
//! discrete wave vectors `k_m = 2πn_m/L`, each carrying a harmonic ladder
//! truncated at `n_max` quanta.  The basis `{|γ⟩}` is the set of occupation
//! tuples, the free photon energy is the diagonal `Σ_m n_m ω_m` (zero-point
//! dropped — it is a global phase), and the vector potential at a point is
//!
//! `A(x) = Σ_m (2 ω_m V)^{−1/2} (a_m e^{i k_m x} + a_m† e^{−i k_m x})`,
//!
//! hermitian at every `x` and tridiagonal in each mode's occupation.  In
//! one spatial dimension a single polarization component couples to the
//! fermions through α¹; the scalar potential vanishes in this gauge.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dirac::build_dirac_set;
use crate::error::Error;
use crate::grid::GridSpec;
use crate::Result;

/// Cap on the photon-sector dimension `(n_max+1)^modes`.
pub const MAX_PHOTON_STATES: usize = 1024;

/// One box mode of the radiation field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonMode {
    /// Integer mode number `n`; the wave vector is `2πn/L`.
    pub index: i64,
    pub wavenumber: f64,
    /// `ω = |k|` for a massless field.
    pub frequency: f64,
}

/// Occupation basis of a finite set of photon modes with matrix elements of
/// the free photon energy and the field `A(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonBasis {
    modes: Vec<PhotonMode>,
    n_max: usize,
    dim: usize,
    volume: f64,
    energies: Vec<f64>,
}

/// Build the occupation basis for the given integer mode numbers on a
/// one-dimensional grid.  Occupations run `0..=n_max` per mode; states are
/// indexed with mode 0 as the fastest digit.
pub fn build_photon_basis(
    mode_indices: &[i64],
    n_max: usize,
    grid: &GridSpec,
) -> Result<PhotonBasis> {
    if grid.dim() != 1 {
        return Err(Error::invalid(
            "grid dimension",
            "the photon coupling is realised for one spatial dimension",
            grid.dim(),
        ));
    }
    if n_max == 0 {
        return Err(Error::invalid(
            "n_max",
            "at least one photon per mode is needed",
            n_max,
        ));
    }
    if mode_indices.is_empty() {
        return Err(Error::invalid(
            "photon modes",
            "at least one mode is required",
            "[]",
        ));
    }
    let half = grid.points() as i64 / 2;
    let mut modes = Vec::with_capacity(mode_indices.len());
    for (m, &n) in mode_indices.iter().enumerate() {
        if n == 0 {
            return Err(Error::invalid(
                "photon modes",
                "the zero mode has no frequency and cannot be box-normalised",
                n,
            ));
        }
        if !(-half..half).contains(&n) {
            return Err(Error::invalid(
                "photon modes",
                "mode number must be representable on the grid (−N/2 ≤ n < N/2)",
                n,
            ));
        }
        if mode_indices[..m].contains(&n) {
            return Err(Error::invalid(
                "photon modes",
                "mode numbers must be distinct",
                n,
            ));
        }
        let wavenumber = 2.0 * std::f64::consts::PI * n as f64 / grid.length();
        modes.push(PhotonMode {
            index: n,
            wavenumber,
            frequency: wavenumber.abs(),
        });
    }
    let dim = (n_max + 1)
        .checked_pow(modes.len() as u32)
        .filter(|&d| d <= MAX_PHOTON_STATES)
        .ok_or_else(|| {
            Error::invalid(
                "photon basis",
                "occupation basis exceeds the dimension cap",
                format!("({})^{} > {MAX_PHOTON_STATES}", n_max + 1, modes.len()),
            )
        })?;
    let mut basis = PhotonBasis {
        modes,
        n_max,
        dim,
        volume: grid.length(),
        energies: Vec::new(),
    };
    basis.energies = (0..dim)
        .map(|state| {
            (0..basis.modes.len())
                .map(|m| basis.occupation(state, m) as f64 * basis.modes[m].frequency)
                .sum()
        })
        .collect();
    Ok(basis)
}

impl PhotonBasis {
    /// Number of occupation states `(n_max+1)^modes`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn modes(&self) -> &[PhotonMode] {
        &self.modes
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Occupation of `mode` in basis state `state`.
    pub fn occupation(&self, state: usize, mode: usize) -> usize {
        (state / (self.n_max + 1).pow(mode as u32)) % (self.n_max + 1)
    }

    /// Total quanta in basis state `state`.
    pub fn total_occupation(&self, state: usize) -> usize {
        (0..self.modes.len()).map(|m| self.occupation(state, m)).sum()
    }

    /// Free photon energy of basis state `state`, `Σ_m n_m ω_m`.
    pub fn state_energy(&self, state: usize) -> f64 {
        self.energies[state]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Annihilation operator of one mode on the truncated basis:
    /// `⟨γ−1_m|a_m|γ⟩ = √n_m`.
    pub fn lowering(&self, mode: usize) -> DMatrix<Complex64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        let step = (self.n_max + 1).pow(mode as u32);
        for state in 0..self.dim {
            let n = self.occupation(state, mode);
            if n > 0 {
                a[(state - step, state)] = Complex64::new((n as f64).sqrt(), 0.0);
            }
        }
        a
    }

    /// The field `A(x)`: hermitian, tridiagonal in each mode's occupation,
    /// with box-normalised coefficients `(2 ω_m V)^{−1/2}`.
    pub fn field_matrix(&self, x: f64) -> DMatrix<Complex64> {
        let mut a = self.field_matrix_lowering(x);
        let adjoint = a.adjoint();
        a += adjoint;
        a
    }

    /// Only the photon-absorbing half `Σ_m c_m a_m e^{ik_m x}` — deliberately
    /// non-hermitian, used as the negative control for the continuity checks.
    pub(crate) fn field_matrix_lowering(&self, x: f64) -> DMatrix<Complex64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for (m, mode) in self.modes.iter().enumerate() {
            let coeff = 1.0 / (2.0 * mode.frequency * self.volume).sqrt();
            let phase = Complex64::from_polar(coeff, mode.wavenumber * x);
            a += self.lowering(m) * phase;
        }
        a
    }
}

/// Interaction matrix at one configuration cell: `e Σ_j α¹_(j) ⊗ A(x_j)` on
/// the `(γ, a_1..a_ω)` indices, flattened as `γ·4^ω + A`.  Hermitian because
/// `A(x)` and α¹ are.
pub(crate) fn coupling_matrix(
    basis: &PhotonBasis,
    charge: f64,
    grid: &GridSpec,
    omega: usize,
    cell: usize,
) -> DMatrix<Complex64> {
    coupling_with(basis, charge, grid, omega, cell, |x| basis.field_matrix(x))
}

/// Same contraction with the lowering-only field — the negative control.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn coupling_matrix_lowering(
    basis: &PhotonBasis,
    charge: f64,
    grid: &GridSpec,
    omega: usize,
    cell: usize,
) -> DMatrix<Complex64> {
    coupling_with(basis, charge, grid, omega, cell, |x| {
        basis.field_matrix_lowering(x)
    })
}

fn coupling_with(
    basis: &PhotonBasis,
    charge: f64,
    grid: &GridSpec,
    omega: usize,
    cell: usize,
    field: impl Fn(f64) -> DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let alpha = build_dirac_set().alpha[0];
    let g = basis.dim();
    let spinors = 4usize.pow(omega as u32);
    let cells = grid.cells();
    let mut w = DMatrix::zeros(g * spinors, g * spinors);
    let mut rest = cell;
    for j in 0..omega {
        let a_x = field(grid.coordinate(rest % cells));
        rest /= cells;
        let lo = 4usize.pow(j as u32);
        let hi = spinors / (4 * lo);
        for a_hi in 0..hi {
            for a_lo in 0..lo {
                for bp in 0..4 {
                    for bq in 0..4 {
                        let al = alpha[(bp, bq)];
                        if al == Complex64::ZERO {
                            continue;
                        }
                        let ap = (a_hi * 4 + bp) * lo + a_lo;
                        let aq = (a_hi * 4 + bq) * lo + a_lo;
                        for gp in 0..g {
                            for gq in 0..g {
                                let f = a_x[(gp, gq)];
                                if f != Complex64::ZERO {
                                    w[(gp * spinors + ap, gq * spinors + aq)] +=
                                        al * f * charge;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    w
}
