//! Conserved charges of the free Dirac field on the truncated mode set.
//!
//! Every observable here is a sum of per-mode number operators and is
//! therefore diagonal in the occupation basis:
//!
//! - `H_D = Σ E_p (c†c − ζ†ζ)` — free Hamiltonian;
//! - `F = Σ (c†c + ζ†ζ)` — fermion number (electrons of both energy signs);
//! - `N = Σ (c†c + d†d)` — particle number in the electron/positron picture;
//!   with `d†d = 1 − ζ†ζ` per mode this is `Σ c†c − Σ ζ†ζ + C`, where the
//!   constant `C` (infinite in the untruncated theory) equals the number of
//!   `ζ` modes here and is retained exactly;
//! - `P = Σ p (c†c + ζ†ζ)` — momentum;
//! - `J = Σ p (c†c − ζ†ζ)` — the velocity-weighted current charge, which is
//!   the momentum carried with the sign of the energy.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FockOperator, ModeSet};
use crate::dirac::EnergySign;

/// Which conserved charge to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableKind {
    DiracHamiltonian,
    FermionNumber,
    ParticleNumber,
    Momentum,
    Current,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 5] = [
        ObservableKind::DiracHamiltonian,
        ObservableKind::FermionNumber,
        ObservableKind::ParticleNumber,
        ObservableKind::Momentum,
        ObservableKind::Current,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::DiracHamiltonian => "H_D",
            ObservableKind::FermionNumber => "F",
            ObservableKind::ParticleNumber => "N",
            ObservableKind::Momentum => "P",
            ObservableKind::Current => "J",
        }
    }
}

/// Per-mode coefficient and additive constant defining an observable.
fn coefficients(kind: ObservableKind, modes: &ModeSet) -> (Vec<f64>, f64) {
    let coeffs = modes
        .labels()
        .iter()
        .map(|label| {
            let p = modes.momentum_value(label.momentum_index);
            let e = modes.mode_energy(label.momentum_index);
            let sign = label.sign.signum();
            match kind {
                ObservableKind::DiracHamiltonian => sign * e,
                ObservableKind::FermionNumber => 1.0,
                ObservableKind::ParticleNumber => sign,
                ObservableKind::Momentum => p,
                ObservableKind::Current => sign * p,
            }
        })
        .collect();
    let constant = match kind {
        ObservableKind::ParticleNumber => modes
            .labels()
            .iter()
            .filter(|l| l.sign == EnergySign::Negative)
            .count() as f64,
        _ => 0.0,
    };
    (coeffs, constant)
}

/// Assemble one of the conserved charges as a diagonal sparse operator.
pub fn assemble_observable(kind: ObservableKind, modes: &ModeSet) -> FockOperator {
    let (coeffs, constant) = coefficients(kind, modes);
    let dim = modes.dim();
    let mut diag = vec![constant; dim];
    for (idx, d) in diag.iter_mut().enumerate() {
        for (mode, coeff) in coeffs.iter().enumerate() {
            if idx >> mode & 1 == 1 {
                *d += coeff;
            }
        }
    }
    FockOperator::from_diagonal(&diag)
}

/// Eigenvalue of a diagonal observable on one occupation basis state.
pub fn diagonal_eigenvalue(kind: ObservableKind, modes: &ModeSet, basis_idx: usize) -> f64 {
    let (coeffs, constant) = coefficients(kind, modes);
    let mut v = constant;
    for (mode, coeff) in coeffs.iter().enumerate() {
        if basis_idx >> mode & 1 == 1 {
            v += coeff;
        }
    }
    v
}

/// Basis indices spanning the eigenspace `N = n` of the particle number.
pub fn particle_number_sector(modes: &ModeSet, n: f64) -> Vec<usize> {
    (0..modes.dim())
        .filter(|&idx| (diagonal_eigenvalue(ObservableKind::ParticleNumber, modes, idx) - n).abs() < 1e-9)
        .collect()
}

/// Dense `exp(−i H_D t)` computed through the eigendecomposition of the dense
/// Hamiltonian — deliberately *not* using the known diagonal structure, so
/// block-diagonality in the fermion-number sectors is a real check on the
/// eigensolver path rather than a restatement of the construction.
pub fn dirac_evolution_dense(modes: &ModeSet, t: f64) -> DMatrix<Complex64> {
    let h = assemble_observable(ObservableKind::DiracHamiltonian, modes).to_dense();
    crate::numeric::expm_i_hermitian(&h, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::Spin;
    use approx::assert_relative_eq;

    fn binomial(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        let mut acc = 1usize;
        for i in 0..k.min(n - k) {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn observables_are_hermitian_with_integer_counting_spectra() {
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        for kind in ObservableKind::ALL {
            let op = assemble_observable(kind, &modes);
            assert_eq!(op.hermiticity_deviation(), 0.0, "{}", kind.name());
        }
        // F and N eigenvalues are integers on every basis state.
        for idx in 0..modes.dim() {
            for kind in [ObservableKind::FermionNumber, ObservableKind::ParticleNumber] {
                let v = diagonal_eigenvalue(kind, &modes, idx);
                assert_relative_eq!(v, v.round(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fermion_number_spectrum_has_binomial_multiplicities() {
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        let m = modes.mode_count();
        let mut multiplicity = vec![0usize; m + 1];
        for idx in 0..modes.dim() {
            let f = diagonal_eigenvalue(ObservableKind::FermionNumber, &modes, idx).round();
            multiplicity[f as usize] += 1;
        }
        for (k, &count) in multiplicity.iter().enumerate() {
            assert_eq!(count, binomial(m, k), "F = {k}");
        }
    }

    #[test]
    fn one_electron_array_eigenvalues() {
        // The negative-energy one-electron state ζ†_s(p)|0_D⟩ carries
        // H_D = −E_p, F = 1, P = p, J = −p, and N = C − 1 (occupying a ζ mode
        // removes one positron hole; C = 6 ζ-modes at n_max = 1).
        let modes = ModeSet::symmetric(1, 1.0, 6.0).unwrap();
        let n = 1i64;
        let p = modes.momentum_value(n);
        let e = modes.mode_energy(n);
        let mode = modes.mode_index(EnergySign::Negative, n, Spin::Up).unwrap();
        let state = 1usize << mode;

        let cases = [
            (ObservableKind::DiracHamiltonian, -e),
            (ObservableKind::FermionNumber, 1.0),
            (ObservableKind::Momentum, p),
            (ObservableKind::Current, -p),
            // C = 6 ζ-modes: ζ† reduces d†d occupation by one → N = 6 − 1 + 0.
            (ObservableKind::ParticleNumber, 5.0),
        ];
        for (kind, want) in cases {
            assert_relative_eq!(
                diagonal_eigenvalue(kind, &modes, state),
                want,
                epsilon = 1e-12
            );
        }

        // And the positive-energy state c†_s(p)|0_D⟩.
        let mode_c = modes.mode_index(EnergySign::Positive, n, Spin::Up).unwrap();
        let state_c = 1usize << mode_c;
        assert_relative_eq!(
            diagonal_eigenvalue(ObservableKind::DiracHamiltonian, &modes, state_c),
            e,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            diagonal_eigenvalue(ObservableKind::Current, &modes, state_c),
            p,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hamiltonian_commutes_with_fermion_and_particle_number() {
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        let h = assemble_observable(ObservableKind::DiracHamiltonian, &modes);
        let f = assemble_observable(ObservableKind::FermionNumber, &modes);
        let n = assemble_observable(ObservableKind::ParticleNumber, &modes);
        assert!(h.commutator(&f).is_zero());
        // The free Hamiltonian also conserves the particle number exactly:
        // both are sums of mode occupations.  Number non-conservation only
        // appears for spatially localised densities (see the appendix module).
        assert!(h.commutator(&n).is_zero());
    }

    #[test]
    fn evolution_preserves_fermion_number_sectors() {
        // exp(−iH_D t) from a dense eigendecomposition must be block-diagonal
        // across F-eigenspaces.
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        let u = dirac_evolution_dense(&modes, 0.37);
        let dim = modes.dim();
        // Unitarity of the eigensolver route.
        let dev = (&u * u.adjoint() - DMatrix::<Complex64>::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-10, "unitarity deviation {dev}");

        let f_of: Vec<f64> = (0..dim)
            .map(|i| diagonal_eigenvalue(ObservableKind::FermionNumber, &modes, i))
            .collect();
        let mut cross = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                if (f_of[r] - f_of[c]).abs() > 0.5 {
                    cross = cross.max(u[(r, c)].norm());
                }
            }
        }
        assert!(cross <= 1e-10, "superselection leakage {cross}");
    }

    #[test]
    fn particle_number_sector_dimensions() {
        // M = 8 has C = 4 ζ-modes, so N = #c − #ζ + 4.  N = 2 needs
        // (#c, #ζ) ∈ {(0,2), (1,3), (2,4)}:
        // C(4,0)C(4,2) + C(4,1)C(4,3) + C(4,2)C(4,4) = 6 + 16 + 6 = 28.
        // N = 0 forces (#c, #ζ) = (0, 4): exactly the filled sea.
        // N = 4 means #c = #ζ: Σ_k C(4,k)² = 70.
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        assert_eq!(particle_number_sector(&modes, 2.0).len(), 28);
        assert_eq!(
            particle_number_sector(&modes, 0.0),
            vec![modes.electron_positron_vacuum()]
        );
        assert_eq!(particle_number_sector(&modes, 4.0).len(), 70);
    }
}
