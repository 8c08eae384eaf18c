//! Split-step propagator for the photon-coupled evolution.
//!
//! The generator has three parts: the free fermion sum `Σ_k h_k` (diagonal
//! in γ), the photon energy `H_Γ` (diagonal in everything), and the local
//! coupling `W(X) = e Σ_k α¹_(k) A(x_k)` which mixes photon sectors and
//! spinors but is pointwise in X.  The first two commute, so one step is
//! the symmetric composition
//!
//! `U(Δ) = U_0(Δ/2) · e^{−iΔW} · U_0(Δ/2)`,  `U_0 = e^{−iΔ(H_D+H_Γ)/2}`,
//!
//! second-order accurate and exactly unitary: the free half uses the
//! closed-form momentum-space kernel, the γ phases are scalars, and the
//! coupling exponentials are precomputed per configuration cell by exact
//! diagonalisation of the small hermitian `(γ, spinors)` matrix.  At zero
//! charge the coupling factor is skipped and the step degenerates to the
//! free evolution times photon phases — a regression anchor, not an
//! approximation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::amplitude::{qed_velocity, QedAmplitude};
use super::photon::{coupling_matrix, PhotonBasis};
use crate::error::Error;
use crate::evolve::FreePropagator;
use crate::grid::GridSpec;
use crate::guidance::{advance_ensemble, TrajectoryEnsemble, VelocityField, VelocityStages};
use crate::numeric::expm_i_hermitian;
use crate::Result;

/// Strang propagator for a fixed grid, fermion count, charge and photon
/// basis.
pub struct QedPropagator {
    grid: GridSpec,
    mass: f64,
    omega: usize,
    charge: f64,
    dt: f64,
    basis: PhotonBasis,
    free_half: FreePropagator,
    phase_half: Vec<Complex64>,
    coupling_u: Vec<DMatrix<Complex64>>,
    drift_threshold: f64,
    steps_taken: u64,
}

impl QedPropagator {
    pub fn new(
        grid: GridSpec,
        mass: f64,
        omega: usize,
        charge: f64,
        basis: &PhotonBasis,
        dt: f64,
    ) -> Result<Self> {
        if !charge.is_finite() {
            return Err(Error::invalid("charge", "must be finite", charge));
        }
        let free_half = FreePropagator::new(grid, mass, dt / 2.0)?;
        let phase_half = basis
            .energies()
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * dt / 2.0))
            .collect();
        let config_cells = grid.cells().pow(omega as u32);
        let coupling_u = if charge != 0.0 {
            (0..config_cells)
                .into_par_iter()
                .map(|c| expm_i_hermitian(&coupling_matrix(basis, charge, &grid, omega, c), dt))
                .collect()
        } else {
            Vec::new()
        };
        Ok(QedPropagator {
            grid,
            mass,
            omega,
            charge,
            dt,
            basis: basis.clone(),
            free_half,
            phase_half,
            coupling_u,
            drift_threshold: 1e-6,
            steps_taken: 0,
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

    /// Swap in arbitrary per-cell coupling factors — the hook that lets the
    /// negative-control tests break hermiticity deliberately.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn override_coupling(&mut self, matrices: Vec<DMatrix<Complex64>>) {
        assert_eq!(matrices.len(), self.grid.cells().pow(self.omega as u32));
        self.coupling_u = matrices;
    }

    /// Advance by one step of `dt`, aborting on norm drift beyond the
    /// threshold.
    pub fn step(&mut self, psi: &mut QedAmplitude) -> Result<()> {
        assert_eq!(psi.grid(), &self.grid, "amplitude built for another grid");
        assert_eq!(psi.mass(), self.mass, "amplitude built for another mass");
        assert_eq!(psi.omega(), self.omega, "amplitude has a different fermion count");
        assert_eq!(psi.basis(), &self.basis, "amplitude uses a different photon basis");
        assert_eq!(psi.charge(), self.charge, "amplitude carries a different charge");
        let norm_before = psi.norm_sqr().sqrt();
        self.half_kernel(psi);
        if !self.coupling_u.is_empty() {
            self.apply_coupling(psi);
        }
        self.half_kernel(psi);
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

    /// `e^{−i(H_D+H_Γ)dt/2}`: free kernel on every sector, then one phase
    /// per sector.
    fn half_kernel(&self, psi: &mut QedAmplitude) {
        let omega = self.omega;
        let data = psi.data_mut();
        let sector_len = data.len() / self.phase_half.len();
        self.free_half.apply_free_kernel(data, omega);
        for (chunk, &p) in data.chunks_exact_mut(sector_len).zip(&self.phase_half) {
            if p != Complex64::ONE {
                for z in chunk {
                    *z *= p;
                }
            }
        }
    }

    /// `e^{−iΔW(X)}` applied cell by cell: gather the `(γ, A)` column of
    /// each configuration cell, multiply by the cached exponential, scatter
    /// back.
    fn apply_coupling(&self, psi: &mut QedAmplitude) {
        let config_cells = self.grid.cells().pow(self.omega as u32);
        let data = psi.data_mut();
        let dim = data.len() / config_cells;
        let mut columns = vec![Complex64::ZERO; data.len()];
        for i in 0..dim {
            for c in 0..config_cells {
                columns[c * dim + i] = data[i * config_cells + c];
            }
        }
        columns
            .par_chunks_mut(dim)
            .enumerate()
            .for_each_init(
                || vec![Complex64::ZERO; dim],
                |scratch, (c, column)| {
                    let u = &self.coupling_u[c];
                    for (i, out) in scratch.iter_mut().enumerate() {
                        let mut acc = Complex64::ZERO;
                        for (j, z) in column.iter().enumerate() {
                            acc += u[(i, j)] * z;
                        }
                        *out = acc;
                    }
                    column.copy_from_slice(scratch);
                },
            );
        for i in 0..dim {
            for c in 0..config_cells {
                data[i * config_cells + c] = columns[c * dim + i];
            }
        }
    }
}

/// Photon-coupled amplitude evolution interleaved with trajectory
/// integration, mirroring the free guided driver: the amplitude advances in
/// half-steps so velocity snapshots exist at every integrator stage time.
pub struct QedGuidedEvolution {
    psi: QedAmplitude,
    half: QedPropagator,
    dt: f64,
    node_eps: f64,
    current: VelocityField,
}

impl QedGuidedEvolution {
    pub fn new(psi: QedAmplitude, dt: f64, node_eps: f64) -> Result<Self> {
        let half = QedPropagator::new(
            *psi.grid(),
            psi.mass(),
            psi.omega(),
            psi.charge(),
            psi.basis(),
            dt / 2.0,
        )?;
        let current = qed_velocity(&psi, node_eps);
        Ok(QedGuidedEvolution {
            psi,
            half,
            dt,
            node_eps,
            current,
        })
    }

    pub fn psi(&self) -> &QedAmplitude {
        &self.psi
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Current-time velocity field (start stage of the next step).
    pub fn velocity(&self) -> &VelocityField {
        &self.current
    }

    /// Advance amplitude and ensemble together by one step of `dt`.
    pub fn step(&mut self, ens: &mut TrajectoryEnsemble) -> Result<()> {
        self.half.step(&mut self.psi)?;
        let mid = qed_velocity(&self.psi, self.node_eps);
        self.half.step(&mut self.psi)?;
        let end = qed_velocity(&self.psi, self.node_eps);
        let stages = VelocityStages {
            start: std::mem::replace(&mut self.current, end.clone()),
            mid,
            end,
        };
        advance_ensemble(ens, &stages, self.dt);
        Ok(())
    }
}
