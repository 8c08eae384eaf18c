//! The deterministic velocity law `v_k = j_k/ρ` on the configuration grid.
//!
//! Wherever the density is above a relative floor, the guiding velocity is
//! the ratio of current to density; `|j_k| ≤ ρ` makes every fermion's speed
//! at most 1.  Cells below the floor (nodes) are masked: the law is
//! undefined there, and the integrator substitutes each sample's last valid
//! velocity.  Division roundoff can push a speed a hair above 1; such cells
//! are projected back onto the unit ball and counted, while anything beyond
//! `1 + 1e−12` would mean inconsistent fields and trips an assertion.

use crate::evolve::{currents, density, ConfigAmplitude, CurrentField, DensityField};
use crate::grid::GridSpec;
use crate::numeric::wrap_periodic;

/// Hard floor on relative density below which the velocity law is masked.
pub const DEFAULT_NODE_EPS: f64 = 1e-12;

/// Per-fermion guiding velocities on the configuration grid, with a validity
/// mask over nodes.
#[derive(Clone, Debug)]
pub struct VelocityField {
    grid: GridSpec,
    omega: usize,
    components: Vec<Vec<f64>>,
    valid: Vec<bool>,
    projected: usize,
}

impl VelocityField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    /// Number of configuration axes `ω·d`.
    pub fn axes(&self) -> usize {
        self.omega * self.grid.dim()
    }

    /// Component along `axis` of fermion `slot`'s velocity.
    pub fn component(&self, slot: usize, axis: usize) -> &[f64] {
        &self.components[slot * self.grid.dim() + axis]
    }

    /// True where the density was above the node floor.
    pub fn is_valid(&self, cell: usize) -> bool {
        self.valid[cell]
    }

    pub fn masked_cells(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    /// Cells whose speed was projected back to 1 after roundoff.
    pub fn projected_cells(&self) -> usize {
        self.projected
    }

    /// Largest per-fermion speed over valid cells; ≤ 1 by construction.
    pub fn max_speed(&self) -> f64 {
        let d = self.grid.dim();
        let mut worst = 0.0f64;
        for (c, ok) in self.valid.iter().enumerate() {
            if !ok {
                continue;
            }
            for slot in 0..self.omega {
                let mut s2 = 0.0;
                for axis in 0..d {
                    let v = self.components[slot * d + axis][c];
                    s2 += v * v;
                }
                worst = worst.max(s2.sqrt());
            }
        }
        worst
    }

    /// Uniformly rescale all velocities — a deliberate corruption used as
    /// the negative control in equivariance testing.
    pub fn scaled(&self, factor: f64) -> VelocityField {
        let mut out = self.clone();
        for comp in &mut out.components {
            for v in comp {
                *v *= factor;
            }
        }
        out
    }

    /// Multilinear interpolation at the configuration point `y` (length
    /// `ω·d`, any real coordinates; wrapped periodically).  Writes the
    /// velocity into `out` and returns the largest per-fermion speed, or
    /// `None` if any corner cell of the surrounding hypercube is masked.
    pub fn interpolate(&self, y: &[f64], out: &mut [f64]) -> Option<f64> {
        let d = self.grid.dim();
        let axes = self.axes();
        assert_eq!(y.len(), axes);
        assert_eq!(out.len(), axes);
        let n = self.grid.points();
        let h = self.grid.spacing();
        let mut base = [0usize; 9];
        let mut frac = [0.0f64; 9];
        let mut stride = [0usize; 9];
        for k in 0..axes {
            let t = wrap_periodic(y[k], self.grid.length()) / h;
            let i = t.floor() as usize;
            base[k] = i % n;
            frac[k] = t - i as f64;
            stride[k] = n.pow((k % d) as u32) * self.grid.cells().pow((k / d) as u32);
        }
        out.fill(0.0);
        for corner in 0..(1usize << axes) {
            let mut cell = 0;
            let mut weight = 1.0;
            for k in 0..axes {
                if corner & (1 << k) != 0 {
                    cell += ((base[k] + 1) % n) * stride[k];
                    weight *= frac[k];
                } else {
                    cell += base[k] * stride[k];
                    weight *= 1.0 - frac[k];
                }
            }
            if !self.valid[cell] {
                out.fill(0.0);
                return None;
            }
            for k in 0..axes {
                out[k] += weight * self.components[k][cell];
            }
        }
        let mut worst = 0.0f64;
        for slot in 0..self.omega {
            let mut s2 = 0.0;
            for axis in 0..d {
                let v = out[slot * d + axis];
                s2 += v * v;
            }
            worst = worst.max(s2.sqrt());
        }
        Some(worst)
    }
}

/// Build the velocity field of an amplitude: `v_k = j_k/ρ` where
/// `ρ ≥ node_eps·max ρ`, masked elsewhere.
pub fn velocity_field(psi: &ConfigAmplitude, node_eps: f64) -> VelocityField {
    velocity_from_fields(&density(psi), &currents(psi), node_eps)
}

/// The same law from precomputed density and currents (e.g. photon-summed).
pub(crate) fn velocity_from_fields(
    rho: &DensityField,
    cur: &CurrentField,
    node_eps: f64,
) -> VelocityField {
    let grid = *rho.grid();
    let d = grid.dim();
    let omega = rho.omega();
    let floor = node_eps * rho.max();
    let cells = rho.values().len();
    let mut components = vec![vec![0.0; cells]; omega * d];
    let mut valid = vec![false; cells];
    let mut projected = 0usize;
    for (c, &r) in rho.values().iter().enumerate() {
        if !(r >= floor) || r == 0.0 {
            continue;
        }
        valid[c] = true;
        for slot in 0..omega {
            let mut s2 = 0.0;
            for axis in 0..d {
                let v = cur.component(slot, axis)[c] / r;
                components[slot * d + axis][c] = v;
                s2 += v * v;
            }
            let speed = s2.sqrt();
            assert!(
                speed <= 1.0 + 1e-12,
                "speed bound violated: |j|/ρ = {speed} at cell {c} — density and currents are inconsistent"
            );
            if speed > 1.0 {
                for axis in 0..d {
                    components[slot * d + axis][c] /= speed;
                }
                projected += 1;
            }
        }
    }
    VelocityField {
        grid,
        omega,
        components,
        valid,
        projected,
    }
}

/// Velocity fields at the three stage times of one trajectory step:
/// `t`, `t+Δ/2` and `t+Δ`.
pub struct VelocityStages {
    pub start: VelocityField,
    pub mid: VelocityField,
    pub end: VelocityField,
}
