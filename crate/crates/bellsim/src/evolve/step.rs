//! Spectral split-step propagator for the free multi-fermion Dirac equation.
//!
//! The generator is `H = Σ_k h_k`, `h_k = α·p_k + mβ` acting on fermion
//! slot k.  The `h_k` commute, so stepping each slot by the closed-form
//! one-particle propagator is exact in time: in momentum space
//! `e^{−ih(q)dt} = cos(E_q dt)·1 − i·dt·sinc(E_q dt)·h(q)` because
//! `h(q)² = E_q²·1`.  All time-stepping error therefore lives in the spatial
//! truncation, and the step is unitary to machine precision — a drifting
//! norm indicates a bug, which the per-step monitor turns into an error.

use nalgebra::Matrix4;
use num_complex::Complex64;

use super::spectral::AxisFft;
use super::ConfigAmplitude;
use crate::dirac::{energy, single_particle_hamiltonian};
use crate::error::Error;
use crate::grid::GridSpec;
use crate::numeric::{sinc, CompensatedSum};
use crate::Result;

/// Exact free propagator for a fixed grid, mass and time step.
pub struct FreePropagator {
    grid: GridSpec,
    mass: f64,
    dt: f64,
    drift_threshold: f64,
    steps_taken: u64,
    fft: AxisFft,
    momentum_u: Vec<Matrix4<Complex64>>,
}

impl FreePropagator {
    pub fn new(grid: GridSpec, mass: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", "must be finite and > 0", dt));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid("mass", "must be finite and > 0", mass));
        }
        let mut momentum_u = Vec::with_capacity(grid.cells());
        let mut idx = vec![0usize; grid.dim()];
        for cell in 0..grid.cells() {
            grid.unravel(cell, &mut idx);
            let mut q = [0.0; 3];
            for axis in 0..grid.dim() {
                q[axis] = grid.wavenumber(idx[axis]);
            }
            let e = energy(q, mass);
            let h = single_particle_hamiltonian(q, mass);
            let u = Matrix4::identity() * Complex64::new((e * dt).cos(), 0.0)
                + h * Complex64::new(0.0, -dt * sinc(e * dt));
            momentum_u.push(u);
        }
        Ok(FreePropagator {
            grid,
            mass,
            dt,
            drift_threshold: 1e-6,
            steps_taken: 0,
            fft: AxisFft::new(grid.points()),
            momentum_u,
        })
    }

    /// Override the per-step norm-drift abort threshold (default `1e−6`).
    pub fn with_drift_threshold(mut self, threshold: f64) -> Self {
        self.drift_threshold = threshold;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// `T_max/200` where `T_max = 2π/E_max` is the period of the fastest
    /// grid mode.  The free step is exact for any `dt`; this default keeps
    /// interleaved trajectory integration well inside its accuracy range.
    pub fn default_dt(grid: &GridSpec, mass: f64) -> f64 {
        let nyquist = std::f64::consts::PI * grid.points() as f64 / grid.length();
        let e_max = (mass * mass + grid.dim() as f64 * nyquist * nyquist).sqrt();
        2.0 * std::f64::consts::PI / e_max / 200.0
    }

    /// Advance by one step of `dt`.  Aborts with an instability error when
    /// the norm moves by more than the drift threshold in a single step.
    pub fn step(&mut self, psi: &mut ConfigAmplitude) -> Result<()> {
        assert_eq!(psi.grid(), &self.grid, "amplitude built for another grid");
        assert_eq!(psi.mass(), self.mass, "amplitude built for another mass");
        let omega = psi.omega();
        let norm_before = psi.norm_sqr().sqrt();
        self.apply_free_kernel(&mut psi.data, omega);
        psi.advance_time(self.dt);
        self.steps_taken += 1;
        let drift = (psi.norm_sqr().sqrt() - norm_before).abs();
        if drift > self.drift_threshold {
            return Err(Error::Instability {
                step: self.steps_taken,
                drift,
                threshold: self.drift_threshold,
            });
        }
        Ok(())
    }

    /// Apply one free step to a flat tensor whose trailing indices follow
    /// the `(spinor, X)` layout of [`ConfigAmplitude`]; any leading sector
    /// index (such as a photon occupation) rides along untouched.
    pub(crate) fn apply_free_kernel(&self, data: &mut [Complex64], omega: usize) {
        for slot in 0..omega {
            let cells_pow_slot = self.grid.cells().pow(slot as u32);
            for axis in 0..self.grid.dim() {
                let stride = self.grid.points().pow(axis as u32) * cells_pow_slot;
                self.fft.transform(data, stride, true);
            }
            apply_slot_matrices(data, &self.grid, omega, slot, &self.momentum_u);
            for axis in 0..self.grid.dim() {
                let stride = self.grid.points().pow(axis as u32) * cells_pow_slot;
                self.fft.transform(data, stride, false);
            }
        }
    }
}

/// Apply a per-momentum-cell 4×4 matrix to the spinor index of one slot.
/// The tensor must already be in momentum space along that slot's axes;
/// leading sectors beyond `4^ω · C^ω` are processed independently.
fn apply_slot_matrices(
    data: &mut [Complex64],
    grid: &GridSpec,
    omega: usize,
    slot: usize,
    matrices: &[Matrix4<Complex64>],
) {
    let cells = grid.cells();
    let config_cells = cells.pow(omega as u32);
    let a_stride = 4usize.pow(slot as u32) * config_cells;
    let slot_cell_stride = cells.pow(slot as u32);
    let lo_count = 4usize.pow(slot as u32);
    let hi_count = 4usize.pow(omega as u32) / (4 * lo_count);
    for sector in data.chunks_exact_mut(4usize.pow(omega as u32) * config_cells) {
        for a_hi in 0..hi_count {
            for a_lo in 0..lo_count {
                let base_a = (a_hi * 4 * lo_count + a_lo) * config_cells;
                for c in 0..config_cells {
                    let u = &matrices[(c / slot_cell_stride) % cells];
                    let base = base_a + c;
                    let x = [
                        sector[base],
                        sector[base + a_stride],
                        sector[base + 2 * a_stride],
                        sector[base + 3 * a_stride],
                    ];
                    for i in 0..4 {
                        sector[base + i * a_stride] = u[(i, 0)] * x[0]
                            + u[(i, 1)] * x[1]
                            + u[(i, 2)] * x[2]
                            + u[(i, 3)] * x[3];
                    }
                }
            }
        }
    }
}

/// `⟨Ψ|H|Ψ⟩/⟨Ψ|Ψ⟩` for the free generator, evaluated in momentum space.
/// Conserved exactly by `FreePropagator::step`.
pub fn energy_expectation(psi: &ConfigAmplitude) -> f64 {
    free_energy_rayleigh(psi.data(), psi.grid(), psi.mass(), psi.omega())
}

/// Rayleigh quotient of the free generator on a flat `(sectors.., spinor, X)`
/// tensor; leading sectors are traced over, so for photon-dressed states this
/// is the γ-summed fermion kinetic energy.
pub(crate) fn free_energy_rayleigh(
    data: &[Complex64],
    grid: &GridSpec,
    mass: f64,
    omega: usize,
) -> f64 {
    let grid = *grid;
    let fft = AxisFft::new(grid.points());
    let mut hat = data.to_vec();
    for slot in 0..omega {
        let cells_pow_slot = grid.cells().pow(slot as u32);
        for axis in 0..grid.dim() {
            let stride = grid.points().pow(axis as u32) * cells_pow_slot;
            fft.transform(&mut hat, stride, true);
        }
    }
    let mut h_cells = Vec::with_capacity(grid.cells());
    let mut idx = vec![0usize; grid.dim()];
    for cell in 0..grid.cells() {
        grid.unravel(cell, &mut idx);
        let mut q = [0.0; 3];
        for axis in 0..grid.dim() {
            q[axis] = grid.wavenumber(idx[axis]);
        }
        h_cells.push(single_particle_hamiltonian(q, mass));
    }
    let mut numerator = CompensatedSum::new();
    let cells = grid.cells();
    let config_cells = cells.pow(omega as u32);
    let blocks = hat.len() / config_cells;
    for slot in 0..omega {
        let a_stride = 4usize.pow(slot as u32) * config_cells;
        let slot_cell_stride = cells.pow(slot as u32);
        let lo_count = 4usize.pow(slot as u32);
        let hi_count = blocks / (4 * lo_count);
        for a_hi in 0..hi_count {
            for a_lo in 0..lo_count {
                let base_a = (a_hi * 4 * lo_count + a_lo) * config_cells;
                for c in 0..config_cells {
                    let h = &h_cells[(c / slot_cell_stride) % cells];
                    let base = base_a + c;
                    let x = [
                        hat[base],
                        hat[base + a_stride],
                        hat[base + 2 * a_stride],
                        hat[base + 3 * a_stride],
                    ];
                    for i in 0..4 {
                        let hx = h[(i, 0)] * x[0]
                            + h[(i, 1)] * x[1]
                            + h[(i, 2)] * x[2]
                            + h[(i, 3)] * x[3];
                        numerator.add((x[i].conj() * hx).re);
                    }
                }
            }
        }
    }
    numerator.value() / crate::numeric::norm_sqr(&hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{EnergySign, Spin};
    use crate::evolve::packets::{init_amplitude, plane_wave, PacketSpec};
    use crate::evolve::{density, DEFAULT_MEMORY_BUDGET_MB};
    use crate::numeric::expm_i_hermitian;
    use nalgebra::DMatrix;

    fn phase_error(psi: &ConfigAmplitude, initial: &ConfigAmplitude, phase: Complex64) -> f64 {
        psi.data
            .iter()
            .zip(&initial.data)
            .map(|(a, b)| (a - phase * b).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn plane_waves_pick_up_pure_energy_phases() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let mass = 1.0;
        let q = 2.0 * std::f64::consts::PI * 3.0 / 16.0;
        let e = (mass * mass + q * q).sqrt();
        for (kind, sign) in [(EnergySign::Positive, -1.0), (EnergySign::Negative, 1.0)] {
            let initial = plane_wave(grid, mass, kind, Spin::Up, &[3]).unwrap();
            let mut psi = initial.clone();
            let mut prop = FreePropagator::new(grid, mass, 0.01).unwrap();
            for _ in 0..100 {
                prop.step(&mut psi).unwrap();
            }
            let phase = Complex64::from_polar(1.0, sign * e * 1.0);
            let err = phase_error(&psi, &initial, phase);
            assert!(err < 1e-10, "{kind:?}: max deviation {err:e}");
            assert!((psi.time() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_fermion_plane_wave_pair_evolves_by_energy_difference() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let mass = 1.0;
        let one = plane_wave(grid, mass, EnergySign::Positive, Spin::Up, &[1]).unwrap();
        let two = plane_wave(grid, mass, EnergySign::Negative, Spin::Down, &[2]).unwrap();
        let mut psi = ConfigAmplitude::zeros(grid, 2, mass, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let cells = grid.cells();
        for a1 in 0..4 {
            for a2 in 0..4 {
                for c1 in 0..cells {
                    for c2 in 0..cells {
                        let idx = psi.index(&[a1, a2], &[c1, c2]);
                        psi.data[idx] = one.data[a1 * cells + c1] * two.data[a2 * cells + c2];
                    }
                }
            }
        }
        psi.antisymmetrize();
        psi.normalize();
        let initial = psi.clone();
        let mut prop = FreePropagator::new(grid, mass, 0.02).unwrap();
        for _ in 0..50 {
            prop.step(&mut psi).unwrap();
        }
        let q = |n: f64| 2.0 * std::f64::consts::PI * n / 16.0;
        let e1 = (1.0 + q(1.0) * q(1.0)).sqrt();
        let e2 = (1.0 + q(2.0) * q(2.0)).sqrt();
        // Positive-branch phase e^{−iE₁T}, negative-branch phase e^{+iE₂T}.
        let phase = Complex64::from_polar(1.0, (-e1 + e2) * 1.0);
        let err = phase_error(&psi, &initial, phase);
        assert!(err < 1e-10, "max deviation {err:e}");
    }

    /// Dense one-particle generator built from first principles: the exact
    /// spectral derivative matrix contracted with α¹, plus mβ.
    fn dense_one_particle_h(grid: &GridSpec, mass: f64) -> DMatrix<Complex64> {
        let n = grid.points();
        let set = crate::dirac::build_dirac_set();
        let beta = set.beta;
        let alpha = set.alpha[0];
        // D[x,y] = (1/N) Σ_k iq_k e^{iq_k(x−y)h}
        let mut deriv = DMatrix::<Complex64>::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                let mut z = Complex64::ZERO;
                for k in 0..n {
                    let qk = grid.wavenumber(k);
                    let arg = qk * (grid.coordinate(x) - grid.coordinate(y));
                    z += Complex64::new(0.0, qk) * Complex64::from_polar(1.0, arg);
                }
                deriv[(x, y)] = z / n as f64;
            }
        }
        let mut h = DMatrix::<Complex64>::zeros(4 * n, 4 * n);
        for a in 0..4 {
            for b in 0..4 {
                for x in 0..n {
                    for y in 0..n {
                        // index = a·N + x to match the packet layout
                        let mut val = alpha[(a, b)] * Complex64::new(0.0, -1.0) * deriv[(x, y)];
                        if x == y {
                            val += beta[(a, b)] * Complex64::new(mass, 0.0);
                        }
                        h[(a * n + x, b * n + y)] = val;
                    }
                }
            }
        }
        h
    }

    #[test]
    fn two_fermion_step_matches_dense_tensor_product_oracle() {
        let grid = GridSpec::new(1, 8, 4.0).unwrap();
        let mass = 1.3;
        let t_final = 0.4;
        let mut psi = ConfigAmplitude::zeros(grid, 2, mass, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        for (i, z) in psi.data.iter_mut().enumerate() {
            let x = i as f64;
            *z = Complex64::new((0.17 * x).sin() + 0.2, (0.05 * x).cos());
        }
        psi.antisymmetrize();
        psi.normalize();
        let initial = psi.clone();

        // Oracle: U₁ ⊗ U₁ with U₁ = exp(−i h_dense T) on 4N = 32 dimensions.
        let u1 = expm_i_hermitian(&dense_one_particle_h(&grid, mass), t_final);
        let n = grid.points();
        let dim1 = 4 * n;
        let flat = |a: usize, c: usize| a * n + c;
        let mut oracle = initial.data.clone();
        // Apply U₁ to slot 0, then slot 1.
        let mut next = vec![Complex64::ZERO; oracle.len()];
        for a2 in 0..4 {
            for c2 in 0..n {
                for i1 in 0..dim1 {
                    let mut z = Complex64::ZERO;
                    for b1 in 0..4 {
                        for y1 in 0..n {
                            z += u1[(i1, flat(b1, y1))]
                                * oracle[initial.index(&[b1, a2], &[y1, c2])];
                        }
                    }
                    next[initial.index(&[i1 / n, a2], &[i1 % n, c2])] = z;
                }
            }
        }
        oracle = next.clone();
        for a1 in 0..4 {
            for c1 in 0..n {
                for i2 in 0..dim1 {
                    let mut z = Complex64::ZERO;
                    for b2 in 0..4 {
                        for y2 in 0..n {
                            z += u1[(i2, flat(b2, y2))]
                                * oracle[initial.index(&[a1, b2], &[c1, y2])];
                        }
                    }
                    next[initial.index(&[a1, i2 / n], &[c1, i2 % n])] = z;
                }
            }
        }

        let mut prop = FreePropagator::new(grid, mass, t_final / 16.0).unwrap();
        for _ in 0..16 {
            prop.step(&mut psi).unwrap();
        }
        let worst = psi
            .data
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "max deviation from dense oracle {worst:e}");
    }

    #[test]
    fn packet_centroid_moves_at_group_velocity() {
        let grid = GridSpec::new(1, 256, 64.0).unwrap();
        let mass = 1.0;
        let q0 = 1.5;
        let spec = PacketSpec {
            center: [16.0, 0.0, 0.0],
            width: 3.0,
            momentum: [q0, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Up,
        };
        let mut psi = init_amplitude(grid, mass, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let start = density(&psi).centroid()[0];
        let dt = FreePropagator::default_dt(&grid, mass);
        let mut prop = FreePropagator::new(grid, mass, dt).unwrap();
        let steps = (10.0 / dt).round() as usize;
        for _ in 0..steps {
            prop.step(&mut psi).unwrap();
        }
        let expect = q0 / (mass * mass + q0 * q0).sqrt();
        let measured = (density(&psi).centroid()[0] - start) / psi.time();
        assert!(
            (measured - expect).abs() < 0.02 * expect,
            "group velocity {measured} vs {expect}"
        );
    }

    #[test]
    fn energy_expectation_is_conserved_and_close_to_nominal() {
        let grid = GridSpec::new(1, 64, 32.0).unwrap();
        let mass = 1.0;
        let spec = PacketSpec {
            center: [16.0, 0.0, 0.0],
            width: 3.0,
            momentum: [1.0, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Down,
        };
        let mut psi = init_amplitude(grid, mass, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let before = energy_expectation(&psi);
        // Nominal packet energy up to O(σ_q²) spread corrections.
        let nominal = (1.0 + 1.0f64).sqrt();
        assert!((before - nominal).abs() < 0.05 * nominal);
        let mut prop = FreePropagator::new(grid, mass, 0.05).unwrap();
        for _ in 0..100 {
            prop.step(&mut psi).unwrap();
        }
        let after = energy_expectation(&psi);
        assert!(
            (after - before).abs() <= 1e-10 * before.abs(),
            "energy drifted from {before} to {after}"
        );
    }

    #[test]
    fn unitarity_and_antisymmetry_hold_over_many_steps() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let mass = 1.0;
        let specs = [
            PacketSpec {
                center: [5.0, 0.0, 0.0],
                width: 1.0,
                momentum: [1.0, 0.0, 0.0],
                kind: EnergySign::Positive,
                spin: Spin::Up,
            },
            PacketSpec {
                center: [11.0, 0.0, 0.0],
                width: 1.0,
                momentum: [-0.5, 0.0, 0.0],
                kind: EnergySign::Negative,
                spin: Spin::Down,
            },
        ];
        let mut psi = init_amplitude(grid, mass, &specs, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let mut prop = FreePropagator::new(grid, mass, 0.01).unwrap();
        for _ in 0..200 {
            prop.step(&mut psi).unwrap();
        }
        assert!((psi.norm_sqr().sqrt() - 1.0).abs() < 1e-12);
        assert!(psi.antisymmetry_deviation() < 1e-12);
        assert_eq!(prop.steps_taken(), 200);
    }

    #[test]
    fn norm_monitor_trips_on_absurd_threshold() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let spec = PacketSpec {
            center: [8.0, 0.0, 0.0],
            width: 1.0,
            momentum: [1.0, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Up,
        };
        let mut psi = init_amplitude(grid, 1.0, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let mut prop = FreePropagator::new(grid, 1.0, 0.01)
            .unwrap()
            .with_drift_threshold(1e-19);
        let mut tripped = false;
        for _ in 0..50 {
            match prop.step(&mut psi) {
                Ok(()) => {}
                Err(Error::Instability {
                    drift, threshold, ..
                }) => {
                    assert!(drift > threshold);
                    tripped = true;
                    break;
                }
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
        assert!(tripped, "roundoff drift never exceeded 1e−19");
    }

    #[test]
    fn rejects_bad_step_parameters() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        assert!(FreePropagator::new(grid, 1.0, 0.0).is_err());
        assert!(FreePropagator::new(grid, 1.0, f64::NAN).is_err());
        assert!(FreePropagator::new(grid, -1.0, 0.1).is_err());
        let dt = FreePropagator::default_dt(&grid, 1.0);
        assert!(dt > 0.0 && dt < 0.1);
    }
}
