//! Exact second quantisation on a truncated mode set.
//!
//! Modes are single-particle plane waves labelled by energy sign
//! (`c`-type positive, `ζ`-type negative), a discrete momentum `p = 2πn/L`
//! from a finite list closed under negation, and spin `s ∈ {1,2}`.  Ladder
//! operators are realised on the `2^M`-dimensional occupation basis with
//! Jordan-Wigner sign strings, which makes every anticommutation relation an
//! exact statement about small integer matrices.
//!
//! Two vacua appear throughout: `|0_D⟩` (all modes empty, annihilated by
//! every `c` and `ζ`) and `|0⟩` (every negative-energy mode filled — the
//! filled sea, annihilated by every `c` and every positron operator
//! `d_s(p) = ζ†_s(−p)`).

pub mod appendix;
pub mod field;
pub mod observables;
pub mod sparse;
pub mod verify;

use num_complex::Complex64;
use serde::Serialize;

use crate::dirac::{EnergySign, Spin};
use crate::error::Error;
use crate::Result;
pub use sparse::FockOperator;
pub use verify::{verify_fock_algebra, AppendixSummary, FockReport};

/// Hard cap on fermionic modes: `2^14 = 16384` basis states.
pub const MAX_MODES: usize = 14;

/// Annihilator for `mode` out of `n_modes`, with the Jordan-Wigner sign
/// string over lower-numbered modes:
/// `a_i |…n_i=1…⟩ = (−1)^{Σ_{j<i} n_j} |…n_i=0…⟩`.
pub fn jordan_wigner_annihilator(n_modes: usize, mode: usize) -> FockOperator {
    assert!(mode < n_modes && n_modes <= MAX_MODES);
    let dim = 1usize << n_modes;
    let bit = 1usize << mode;
    let string_mask = bit - 1;
    let mut triplets = Vec::with_capacity(dim / 2);
    for input in 0..dim {
        if input & bit != 0 {
            let sign = if (input & string_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            triplets.push((input ^ bit, input, Complex64::new(sign, 0.0)));
        }
    }
    FockOperator::from_triplets(dim, triplets)
}

/// One fermionic mode label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ModeLabel {
    pub sign: EnergySign,
    /// Momentum index `n`, giving `p = 2πn/L`.
    pub momentum_index: i64,
    pub spin: Spin,
}

/// A finite set of plane-wave modes with its ladder operators prebuilt.
#[derive(Clone, Debug)]
pub struct ModeSet {
    mass: f64,
    length: f64,
    momentum_indices: Vec<i64>,
    labels: Vec<ModeLabel>,
    annihilators: Vec<FockOperator>,
    creators: Vec<FockOperator>,
}

impl ModeSet {
    /// The symmetric momentum list `n ∈ {−n_max, …, n_max}` (both spins,
    /// both energy signs): `M = 4(2n_max + 1)` modes.
    pub fn symmetric(n_max: usize, mass: f64, length: f64) -> Result<Self> {
        let indices: Vec<i64> = (-(n_max as i64)..=n_max as i64).collect();
        Self::from_momentum_indices(indices, mass, length)
    }

    /// Build from an explicit momentum-index list, which must be duplicate-free
    /// and closed under negation so that the pairing `p ↔ −p` used by the
    /// `v`-spinors and `d`-operators stays inside the truncation.
    pub fn from_momentum_indices(
        mut momentum_indices: Vec<i64>,
        mass: f64,
        length: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid("mass", "must be finite and > 0", mass));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid("box length", "must be finite and > 0", length));
        }
        if momentum_indices.is_empty() {
            return Err(Error::invalid(
                "momentum list",
                "must contain at least one momentum",
                "[]",
            ));
        }
        momentum_indices.sort_unstable();
        momentum_indices.dedup();
        for &n in &momentum_indices {
            if momentum_indices.binary_search(&-n).is_err() {
                return Err(Error::invalid(
                    "momentum list",
                    "must be closed under negation",
                    n,
                ));
            }
        }
        let m_count = 4 * momentum_indices.len();
        if m_count > MAX_MODES {
            return Err(Error::ModeGuard {
                required: m_count,
                limit: MAX_MODES,
            });
        }

        // Jordan-Wigner order: energy sign (positive first), then momentum
        // ascending, then spin.
        let mut labels = Vec::with_capacity(m_count);
        for sign in [EnergySign::Positive, EnergySign::Negative] {
            for &n in &momentum_indices {
                for spin in Spin::BOTH {
                    labels.push(ModeLabel {
                        sign,
                        momentum_index: n,
                        spin,
                    });
                }
            }
        }

        let annihilators: Vec<FockOperator> = (0..m_count)
            .map(|i| jordan_wigner_annihilator(m_count, i))
            .collect();
        let creators: Vec<FockOperator> = annihilators.iter().map(FockOperator::adjoint).collect();

        Ok(ModeSet {
            mass,
            length,
            momentum_indices,
            labels,
            annihilators,
            creators,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Box length; in this one-dimensional reduction it is also the
    /// quantisation volume `V`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mode_count(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.labels.len()
    }

    pub fn momentum_indices(&self) -> &[i64] {
        &self.momentum_indices
    }

    /// `p = 2πn/L`.
    pub fn momentum_value(&self, n: i64) -> f64 {
        2.0 * std::f64::consts::PI * n as f64 / self.length
    }

    /// Dispersion `E_p` for momentum index `n` (momentum along the x-axis).
    pub fn mode_energy(&self, n: i64) -> f64 {
        crate::dirac::energy([self.momentum_value(n), 0.0, 0.0], self.mass)
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    /// Position of a mode in the Jordan-Wigner order.
    pub fn mode_index(&self, sign: EnergySign, n: i64, spin: Spin) -> Option<usize> {
        let mom_pos = self.momentum_indices.binary_search(&n).ok()?;
        let sign_rank = match sign {
            EnergySign::Positive => 0,
            EnergySign::Negative => 1,
        };
        Some(sign_rank * 2 * self.momentum_indices.len() + 2 * mom_pos + spin.index())
    }

    pub fn annihilator(&self, mode: usize) -> &FockOperator {
        &self.annihilators[mode]
    }

    pub fn creator(&self, mode: usize) -> &FockOperator {
        &self.creators[mode]
    }

    /// `c_s(p)` with `p = 2πn/L`.
    pub fn c_annihilator(&self, n: i64, spin: Spin) -> Option<&FockOperator> {
        Some(&self.annihilators[self.mode_index(EnergySign::Positive, n, spin)?])
    }

    pub fn c_creator(&self, n: i64, spin: Spin) -> Option<&FockOperator> {
        Some(&self.creators[self.mode_index(EnergySign::Positive, n, spin)?])
    }

    /// `ζ_s(p)`.
    pub fn zeta_annihilator(&self, n: i64, spin: Spin) -> Option<&FockOperator> {
        Some(&self.annihilators[self.mode_index(EnergySign::Negative, n, spin)?])
    }

    pub fn zeta_creator(&self, n: i64, spin: Spin) -> Option<&FockOperator> {
        Some(&self.creators[self.mode_index(EnergySign::Negative, n, spin)?])
    }

    /// Positron annihilator `d_s(p) = ζ†_s(−p)`.
    pub fn d_annihilator(&self, n: i64, spin: Spin) -> Option<&FockOperator> {
        self.zeta_creator(-n, spin)
    }

    /// Positron creator `d†_s(p) = ζ_s(−p)`.
    pub fn d_creator(&self, n: i64, spin: Spin) -> Option<&FockOperator> {
        self.zeta_annihilator(-n, spin)
    }

    /// Occupation of `mode` in basis state `idx`.
    pub fn occupied(&self, idx: usize, mode: usize) -> bool {
        idx >> mode & 1 == 1
    }

    /// Basis index of `|0_D⟩`, the state annihilated by every `c` and `ζ`.
    pub fn fermion_number_vacuum(&self) -> usize {
        0
    }

    /// Basis index of `|0⟩`, the filled sea: every negative-energy mode
    /// occupied, annihilated by every `c` and every `d`.
    pub fn electron_positron_vacuum(&self) -> usize {
        let mut idx = 0usize;
        for (i, label) in self.labels.iter().enumerate() {
            if label.sign == EnergySign::Negative {
                idx |= 1 << i;
            }
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_mode_car_and_nilpotency() {
        let a0 = jordan_wigner_annihilator(2, 0);
        let a1 = jordan_wigner_annihilator(2, 1);
        let id = FockOperator::identity(4);
        assert!(a0.anticommutator(&a0.adjoint()).sub(&id).is_zero());
        assert!(a1.anticommutator(&a1.adjoint()).sub(&id).is_zero());
        assert!(a0.mul(&a0).is_zero());
        assert!(a0.anticommutator(&a1).is_zero());
        assert!(a0.anticommutator(&a1.adjoint()).is_zero());
    }

    /// Dense Kronecker-product oracle: a_i = I^{⊗(M−1−i)} ⊗ σ⁻ ⊗ σ_z^{⊗i}
    /// with the last factor acting on the fastest (lowest) bit.
    fn dense_jw_oracle(n_modes: usize, mode: usize) -> DMatrix<Complex64> {
        let sigma_minus = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let sigma_z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let id2 = DMatrix::<Complex64>::identity(2, 2);
        let mut out = DMatrix::<Complex64>::identity(1, 1);
        for j in (0..n_modes).rev() {
            let factor = if j == mode {
                &sigma_minus
            } else if j < mode {
                &sigma_z
            } else {
                &id2
            };
            out = out.kronecker(factor);
        }
        out
    }

    #[test]
    fn jordan_wigner_matches_dense_kronecker_oracle() {
        for mode in 0..4 {
            let sparse = jordan_wigner_annihilator(4, mode).to_dense();
            let dense = dense_jw_oracle(4, mode);
            assert_eq!(
                (&sparse - &dense).iter().map(|z| z.norm()).fold(0.0, f64::max),
                0.0,
                "mode {mode}"
            );
        }
    }

    #[test]
    fn distant_mode_pair_anticommutes_exactly() {
        // Modes 0 and 3 of four: the sign string makes this exact.
        let a0 = jordan_wigner_annihilator(4, 0);
        let c3 = jordan_wigner_annihilator(4, 3).adjoint();
        assert!(a0.anticommutator(&c3).is_zero());
    }

    #[test]
    fn full_car_at_eight_modes() {
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        assert_eq!(modes.mode_count(), 8);
        let id = FockOperator::identity(modes.dim());
        for i in 0..8 {
            for j in 0..8 {
                let aa = modes.annihilator(i).anticommutator(modes.annihilator(j));
                assert!(aa.is_zero(), "{{a_{i}, a_{j}}} != 0");
                let ac = modes.annihilator(i).anticommutator(modes.creator(j));
                if i == j {
                    assert!(ac.sub(&id).is_zero(), "{{a_{i}, a†_{i}}} != 1");
                } else {
                    assert!(ac.is_zero(), "{{a_{i}, a†_{j}}} != 0");
                }
            }
        }
    }

    #[test]
    fn mode_ordering_is_sign_momentum_spin() {
        let modes = ModeSet::symmetric(1, 1.0, 6.0).unwrap();
        assert_eq!(modes.mode_count(), 12);
        let l = modes.labels();
        assert_eq!(
            l[0],
            ModeLabel {
                sign: EnergySign::Positive,
                momentum_index: -1,
                spin: Spin::Up
            }
        );
        assert_eq!(
            l[1],
            ModeLabel {
                sign: EnergySign::Positive,
                momentum_index: -1,
                spin: Spin::Down
            }
        );
        assert_eq!(l[5].momentum_index, 1);
        assert_eq!(l[6].sign, EnergySign::Negative);
        for (i, label) in l.iter().enumerate() {
            assert_eq!(
                modes.mode_index(label.sign, label.momentum_index, label.spin),
                Some(i)
            );
        }
    }

    #[test]
    fn guards_and_closure() {
        assert!(matches!(
            ModeSet::symmetric(2, 1.0, 6.0),
            Err(Error::ModeGuard { required: 20, .. })
        ));
        assert!(ModeSet::from_momentum_indices(vec![1], 1.0, 6.0).is_err());
        assert!(ModeSet::from_momentum_indices(vec![], 1.0, 6.0).is_err());
        assert!(ModeSet::from_momentum_indices(vec![0], 0.0, 6.0).is_err());
        assert!(ModeSet::from_momentum_indices(vec![0], 1.0, -1.0).is_err());
        // Duplicates collapse rather than error.
        let m = ModeSet::from_momentum_indices(vec![0, 0], 1.0, 6.0).unwrap();
        assert_eq!(m.mode_count(), 4);
    }

    #[test]
    fn positron_relabelling_satisfies_car() {
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        let id = FockOperator::identity(modes.dim());
        for s in Spin::BOTH {
            for &n in &[-1i64, 1] {
                let d = modes.d_annihilator(n, s).unwrap();
                let d_dag = modes.d_creator(n, s).unwrap();
                assert!(d.anticommutator(d_dag).sub(&id).is_zero());
                assert!(d.anticommutator(d).is_zero());
            }
        }
        // d and c anticommute.
        let d = modes.d_annihilator(1, Spin::Up).unwrap();
        let c_dag = modes.c_creator(1, Spin::Up).unwrap();
        assert!(d.anticommutator(c_dag).is_zero());
    }

    #[test]
    fn vacua() {
        let modes = ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap();
        let sea = modes.electron_positron_vacuum();
        // Negative modes occupy Jordan-Wigner positions 4..8.
        assert_eq!(sea, 0b1111_0000);
        // |0⟩ is annihilated by every c and d.
        for s in Spin::BOTH {
            for &n in &[-1i64, 1] {
                assert!(modes
                    .c_annihilator(n, s)
                    .unwrap()
                    .apply_basis_state(sea)
                    .is_empty());
                assert!(modes
                    .d_annihilator(n, s)
                    .unwrap()
                    .apply_basis_state(sea)
                    .is_empty());
            }
        }
        // |0_D⟩ is annihilated by every c and ζ.
        let v = modes.fermion_number_vacuum();
        for i in 0..modes.mode_count() {
            assert!(modes.annihilator(i).apply_basis_state(v).is_empty());
        }
    }
}
