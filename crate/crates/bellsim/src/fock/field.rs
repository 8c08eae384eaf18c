//! Field operators on a spatial grid over the truncated mode set.
//!
//! The annihilation field is assembled from the mode expansion
//!
//! ```text
//! ψ_a(x) = Σ_{s,p} √(m/E_p) e^{ipx} [ u_{s,a}(p) c_s(p) + v_{s,a}(−p) ζ_s(p) ]
//! ```
//!
//! with box-normalised spinors (`u†u = E/(Vm)`), so each mode contributes
//! weight `1/V` and the anticommutator reproduces the truncated delta
//!
//! ```text
//! {ψ_a(x), ψ†_b(y)} = δ_ab Δ_L(x−y),   Δ_L(r) = (1/V) Σ_p e^{ipr},
//! ```
//!
//! the exact restriction of the continuum delta to the mode set.  The grid
//! must resolve all momentum differences (`n_grid > 2·max|n|`) so that
//! discrete integrals like `Σ_x h ψ†ψ(x) = F` hold exactly rather than up to
//! aliasing.
//!
//! The Newton-Wigner (particle) density is built the same way from the
//! electron/positron operators: `n(x) = Σ_s [C†_s C_s + D†_s D_s](x)` with
//! `C_s(x) = (1/√V) Σ_p c_s(p) e^{ipx}` and `D_s` the analogue for
//! `d_s(p) = ζ†_s(−p)`.

use num_complex::Complex64;

use super::{FockOperator, ModeSet};
use crate::dirac::{spinor_u, spinor_v, EnergySign, Spin};
use crate::error::Error;
use crate::numeric::csum;
use crate::Result;

/// The four spinor components of `ψ(x)` at every grid point, prebuilt.
pub struct FieldSet<'a> {
    modes: &'a ModeSet,
    n_grid: usize,
    /// `psi[x][a]` = annihilation operator for spinor component `a` at `x`.
    psi: Vec<[FockOperator; 4]>,
}

impl<'a> FieldSet<'a> {
    /// Smallest convenient grid resolving every momentum difference.
    pub fn default_grid(modes: &ModeSet) -> usize {
        let n_abs = modes
            .momentum_indices()
            .iter()
            .map(|n| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        (2 * n_abs + 2).max(8)
    }

    pub fn build(modes: &'a ModeSet, n_grid: usize) -> Result<Self> {
        let n_abs = modes
            .momentum_indices()
            .iter()
            .map(|n| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        if n_grid <= 2 * n_abs {
            return Err(Error::invalid(
                "field grid",
                "must exceed twice the largest momentum index (aliasing)",
                n_grid,
            ));
        }
        let dim = modes.dim();
        let volume = modes.length();
        let mass = modes.mass();
        let mut psi = Vec::with_capacity(n_grid);
        for i in 0..n_grid {
            let x = i as f64 * volume / n_grid as f64;
            let mut comps: [FockOperator; 4] = std::array::from_fn(|_| FockOperator::zeros(dim));
            for (mode, label) in modes.labels().iter().enumerate() {
                let p = modes.momentum_value(label.momentum_index);
                let e = modes.mode_energy(label.momentum_index);
                let spinor = match label.sign {
                    EnergySign::Positive => spinor_u(label.spin, [p, 0.0, 0.0], mass, volume)?,
                    EnergySign::Negative => spinor_v(label.spin, [-p, 0.0, 0.0], mass, volume)?,
                };
                let phase = Complex64::from_polar((mass / e).sqrt(), p * x);
                for (a, comp) in comps.iter_mut().enumerate() {
                    let w = phase * spinor[a];
                    if w != Complex64::new(0.0, 0.0) {
                        *comp = comp.add_scaled(w, modes.annihilator(mode));
                    }
                }
            }
            psi.push(comps);
        }
        Ok(FieldSet {
            modes,
            n_grid,
            psi,
        })
    }

    pub fn modes(&self) -> &ModeSet {
        self.modes
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    /// Grid spacing `h = L / n_grid`.
    pub fn spacing(&self) -> f64 {
        self.modes.length() / self.n_grid as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Grid index of coordinate `x`, or an off-grid error.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let h = self.spacing();
        let l = self.modes.length();
        let wrapped = crate::numeric::wrap_periodic(x, l);
        let i = (wrapped / h).round() as usize % self.n_grid;
        if (wrapped - i as f64 * h).abs() > 1e-9 * h && (wrapped - l).abs() > 1e-9 * h {
            return Err(Error::OffGrid {
                x,
                spacing: h,
                length: l,
            });
        }
        Ok(i)
    }

    pub fn psi(&self, x_idx: usize, a: usize) -> &FockOperator {
        &self.psi[x_idx][a]
    }

    /// Fermion-number density `ψ†ψ(x) = Σ_a ψ†_a(x) ψ_a(x)`.
    pub fn density(&self, x_idx: usize) -> FockOperator {
        let mut acc = FockOperator::zeros(self.modes.dim());
        for a in 0..4 {
            let psi = &self.psi[x_idx][a];
            acc = acc.add(&psi.adjoint().mul(psi));
        }
        acc
    }

    /// As [`Self::density`], addressed by coordinate; errors off-grid.
    pub fn density_at(&self, x: f64) -> Result<FockOperator> {
        Ok(self.density(self.locate(x)?))
    }

    /// Charge density `Q(x) = −e ψ†ψ(x)`.
    pub fn charge_density(&self, x_idx: usize, e: f64) -> FockOperator {
        self.density(x_idx).scale(Complex64::new(-e, 0.0))
    }

    /// `Σ_x h f(x) ψ†ψ(x)`; pass `f ≡ 1` for the total fermion number.
    pub fn weighted_density(&self, f: &[f64]) -> FockOperator {
        assert_eq!(f.len(), self.n_grid);
        let h = self.spacing();
        let mut acc = FockOperator::zeros(self.modes.dim());
        for (i, &fx) in f.iter().enumerate() {
            if fx != 0.0 {
                acc = acc.add_scaled(Complex64::new(h * fx, 0.0), &self.density(i));
            }
        }
        acc
    }

    /// The truncated delta `Δ_L(r) = (1/V) Σ_p e^{ipr}`; real because the
    /// momentum list is symmetric under negation.
    pub fn truncated_delta(&self, r: f64) -> f64 {
        let v = self.modes.length();
        csum(
            self.modes
                .momentum_indices()
                .iter()
                .map(|&n| (self.modes.momentum_value(n) * r).cos()),
        ) / v
    }

    /// Newton-Wigner particle density `n(x) = Σ_s [C†_s C_s + D†_s D_s](x)`.
    pub fn newton_wigner_density(&self, x_idx: usize) -> FockOperator {
        let x = self.coordinate(x_idx);
        let v = self.modes.length();
        let norm = 1.0 / v.sqrt();
        let dim = self.modes.dim();
        let mut acc = FockOperator::zeros(dim);
        for s in Spin::BOTH {
            let mut c_op = FockOperator::zeros(dim);
            let mut d_op = FockOperator::zeros(dim);
            for &n in self.modes.momentum_indices() {
                let p = self.modes.momentum_value(n);
                let w = Complex64::from_polar(norm, p * x);
                c_op = c_op.add_scaled(w, self.modes.c_annihilator(n, s).expect("mode present"));
                d_op = d_op.add_scaled(w, self.modes.d_annihilator(n, s).expect("mode present"));
            }
            acc = acc.add(&c_op.adjoint().mul(&c_op));
            acc = acc.add(&d_op.adjoint().mul(&d_op));
        }
        acc
    }

    /// `Σ_x h · n(x)`; equals the particle number `N` exactly on the
    /// truncation, including its retained constant, because the operator
    /// product `d†d = ζ ζ† = 1 − ζ†ζ` carries one unit per `ζ`-mode.
    pub fn newton_wigner_total(&self) -> FockOperator {
        let h = self.spacing();
        let mut acc = FockOperator::zeros(self.modes.dim());
        for i in 0..self.n_grid {
            acc = acc.add_scaled(Complex64::new(h, 0.0), &self.newton_wigner_density(i));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::observables::{assemble_observable, ObservableKind};
    use approx::assert_relative_eq;

    fn test_modes() -> ModeSet {
        ModeSet::from_momentum_indices(vec![-1, 1], 1.0, 6.0).unwrap()
    }

    #[test]
    fn grid_guard_rejects_aliasing() {
        let modes = test_modes();
        assert!(FieldSet::build(&modes, 2).is_err());
        assert!(FieldSet::build(&modes, 3).is_ok());
        assert_eq!(FieldSet::default_grid(&modes), 8);
    }

    #[test]
    fn field_anticommutators_reproduce_truncated_delta() {
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let id = FockOperator::identity(modes.dim());
        for x in 0..8 {
            for y in [0usize, 3] {
                let r = fields.coordinate(x) - fields.coordinate(y);
                let delta = fields.truncated_delta(r);
                for a in 0..4 {
                    for b in 0..4 {
                        let ac = fields
                            .psi(x, a)
                            .anticommutator(&fields.psi(y, b).adjoint());
                        let want = if a == b { delta } else { 0.0 };
                        let dev = ac.sub(&id.scale(Complex64::new(want, 0.0))).max_abs_entry();
                        assert!(dev <= 1e-12, "(x={x},y={y},a={a},b={b}): {dev}");

                        // {ψ, ψ} = 0 exactly (annihilators only).
                        assert!(fields.psi(x, a).anticommutator(fields.psi(y, b)).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn density_integrates_to_fermion_number() {
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let f_direct = assemble_observable(ObservableKind::FermionNumber, &modes);
        let total = fields.weighted_density(&[1.0; 8]);
        let dev = total.sub(&f_direct).frobenius_norm();
        assert!(
            dev <= 1e-12 * f_direct.frobenius_norm(),
            "Σ h ψ†ψ ≠ F: {dev}"
        );
    }

    #[test]
    fn density_vacuum_expectations() {
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let vac = modes.fermion_number_vacuum();
        let rho = fields.density(3);
        assert_eq!(rho.entry(vac, vac), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn creating_a_quantum_raises_the_fermion_number() {
        // F (ψ†_b(y) |Φ⟩) = (f_Φ + 1) ψ†_b(y) |Φ⟩ for an F-eigenstate |Φ⟩.
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let f_op = assemble_observable(ObservableKind::FermionNumber, &modes);
        let dim = modes.dim();

        // |Φ⟩ = ψ†_0(x_2) |0_D⟩, an F = 1 state; then apply ψ†_1(y_5).
        let mut phi = vec![Complex64::new(0.0, 0.0); dim];
        phi[modes.fermion_number_vacuum()] = Complex64::new(1.0, 0.0);
        let mut one = vec![Complex64::new(0.0, 0.0); dim];
        fields.psi(2, 0).adjoint().matvec(&phi, &mut one);
        let mut two = vec![Complex64::new(0.0, 0.0); dim];
        fields.psi(5, 1).adjoint().matvec(&one, &mut two);

        let norm: f64 = two.iter().map(|z| z.norm_sqr()).sum();
        assert!(norm > 1e-6, "state vanished");
        let mut f_two = vec![Complex64::new(0.0, 0.0); dim];
        f_op.matvec(&two, &mut f_two);
        for (fz, z) in f_two.iter().zip(two.iter()) {
            assert!((fz - z * Complex64::new(2.0, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn charge_density_matrix_element() {
        // On the normalised one-quantum state ψ†_a(y)|0_D⟩ (norm² = Δ_L(0)),
        // ⟨Q(x)⟩ = −e Δ_L(x−y)² / Δ_L(0).
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let e_charge = 0.30282212;
        let dim = modes.dim();
        let (x_idx, y_idx, a) = (6usize, 2usize, 1usize);

        let mut vac = vec![Complex64::new(0.0, 0.0); dim];
        vac[modes.fermion_number_vacuum()] = Complex64::new(1.0, 0.0);
        let mut state = vec![Complex64::new(0.0, 0.0); dim];
        fields.psi(y_idx, a).adjoint().matvec(&vac, &mut state);

        let q = fields.charge_density(x_idx, e_charge);
        let mut qs = vec![Complex64::new(0.0, 0.0); dim];
        q.matvec(&state, &mut qs);
        let got: Complex64 = state.iter().zip(qs.iter()).map(|(s, t)| s.conj() * t).sum();
        let norm_sqr: f64 = state.iter().map(|z| z.norm_sqr()).sum();

        let delta0 = fields.truncated_delta(0.0);
        let delta = fields.truncated_delta(fields.coordinate(x_idx) - fields.coordinate(y_idx));
        assert_relative_eq!(norm_sqr, delta0, max_relative = 1e-12);
        let want = -e_charge * delta * delta / delta0;
        assert_relative_eq!(got.re / norm_sqr, want, max_relative = 1e-10);
        assert!(got.im.abs() <= 1e-14);
    }

    #[test]
    fn newton_wigner_density_properties() {
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let n_op = assemble_observable(ObservableKind::ParticleNumber, &modes);

        // Pointwise hermitian; vacuum |0⟩ (filled sea) has no particles.
        let sea = modes.electron_positron_vacuum();
        for x in 0..8 {
            let n_x = fields.newton_wigner_density(x);
            assert!(n_x.hermiticity_deviation() <= 1e-12);
            assert!(n_x.entry(sea, sea).norm() <= 1e-13);
            // n(x) commutes with N (it is built from c, d bilinears that
            // preserve each particle count).
            assert!(n_x.commutator(&n_op).max_abs_entry() <= 1e-12);
        }

        // Σ_x h n(x) = N exactly: the product d†d = ζζ† = 1 − ζ†ζ supplies
        // the same retained constant (one per ζ-mode) that N carries.
        let total = fields.newton_wigner_total();
        let dev = total.sub(&n_op).frobenius_norm();
        assert!(dev <= 1e-10 * n_op.frobenius_norm(), "NW total vs N: {dev}");
    }

    #[test]
    fn newton_wigner_and_fermion_densities_do_not_commute() {
        let modes = test_modes();
        let fields = FieldSet::build(&modes, 8).unwrap();
        let mut worst = 0.0f64;
        for x in 0..8 {
            let n_x = fields.newton_wigner_density(x);
            for y in 0..8 {
                let rho_y = fields.density(y);
                worst = worst.max(n_x.commutator(&rho_y).max_abs_entry());
            }
        }
        assert!(worst > 1e-8, "densities unexpectedly commute: {worst}");
    }
}
