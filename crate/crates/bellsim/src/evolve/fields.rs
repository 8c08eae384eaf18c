//! Density and guiding currents of a configuration amplitude.
//!
//! The density `ρ(X) = Σ_a |Ψ_a(X)|²` is the probability to find the
//! fermion configuration at `X`; each fermion carries a current
//! `j_k(X) = Ψ† α_(k) Ψ` obtained by sandwiching that slot's spinor index
//! with the α matrices.  Because α has unit spectral radius,
//! `|j_k(X)| ≤ ρ(X)` pointwise — the origin of the luminal speed bound on
//! the guidance law.  Together they satisfy the continuity equation
//! `∂_t ρ + Σ_k ∇_k·j_k = 0`, which [`continuity_residual`] checks on pairs
//! of snapshots.

use num_complex::Complex64;

use super::spectral::AxisFft;
use super::ConfigAmplitude;
use crate::dirac::build_dirac_set;
use crate::grid::GridSpec;
use crate::numeric::CompensatedSum;

/// `ρ(X) ≥ 0` over configuration cells, flat layout as in
/// [`ConfigAmplitude`].
#[derive(Clone, Debug)]
pub struct DensityField {
    grid: GridSpec,
    omega: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Integration measure of one configuration cell, `h^(dω)`.
    pub fn cell_measure(&self) -> f64 {
        self.grid.spacing().powi((self.grid.dim() * self.omega) as i32)
    }

    /// `Σ_X ρ(X) h^(dω)`; 1 for a normalised amplitude.
    pub fn total(&self) -> f64 {
        let mut sum = CompensatedSum::new();
        for &v in &self.values {
            sum.add(v);
        }
        sum.value() * self.cell_measure()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Mean position per configuration axis (axis `k = slot·d + ax`), taken
    /// over unwrapped box coordinates — meaningful while the mass of ρ stays
    /// away from the periodic seam.
    pub fn centroid(&self) -> Vec<f64> {
        let axes = self.omega * self.grid.dim();
        let mut sums = vec![CompensatedSum::new(); axes];
        let mut weight = CompensatedSum::new();
        for (c, &v) in self.values.iter().enumerate() {
            weight.add(v);
            for k in 0..axes {
                sums[k].add(v * self.grid.coordinate(self.axis_index(c, k)));
            }
        }
        sums.iter().map(|s| s.value() / weight.value()).collect()
    }

    /// One-fermion marginal: `σ(x_slot) = Σ_rest ρ(X) h^(d(ω−1))`, a density
    /// over that fermion's `d`-dimensional cells.
    pub fn marginal(&self, slot: usize) -> Vec<f64> {
        assert!(slot < self.omega);
        let cells = self.grid.cells();
        let stride = cells.pow(slot as u32);
        let mut out = vec![0.0; cells];
        for (c, &v) in self.values.iter().enumerate() {
            out[(c / stride) % cells] += v;
        }
        let measure = self
            .grid
            .spacing()
            .powi((self.grid.dim() * (self.omega - 1)) as i32);
        for v in &mut out {
            *v *= measure;
        }
        out
    }

    /// One-dimensional marginal along configuration axis `k`, a density over
    /// that axis's `N` points (all other axes integrated out).
    pub fn axis_marginal(&self, axis: usize) -> Vec<f64> {
        let axes = self.omega * self.grid.dim();
        assert!(axis < axes);
        let mut out = vec![0.0; self.grid.points()];
        for (c, &v) in self.values.iter().enumerate() {
            out[self.axis_index(c, axis)] += v;
        }
        let measure = self
            .grid
            .spacing()
            .powi((self.grid.dim() * self.omega) as i32 - 1);
        for v in &mut out {
            *v *= measure;
        }
        out
    }

    /// Per-axis grid index of configuration cell `c` along global axis `k`.
    pub(crate) fn axis_index(&self, c: usize, k: usize) -> usize {
        let (slot, ax) = (k / self.grid.dim(), k % self.grid.dim());
        let stride = self.grid.points().pow(ax as u32) * self.grid.cells().pow(slot as u32);
        (c / stride) % self.grid.points()
    }
}

/// Per-fermion current fields `j_k(X)`, one real field per configuration
/// axis, same flat layout as the density.
#[derive(Clone, Debug)]
pub struct CurrentField {
    grid: GridSpec,
    omega: usize,
    components: Vec<Vec<f64>>,
}

impl CurrentField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    /// Component along `axis` of fermion `slot`'s current.
    pub fn component(&self, slot: usize, axis: usize) -> &[f64] {
        &self.components[slot * self.grid.dim() + axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }
}

/// `ρ(X) = Σ_a |Ψ_a(X)|²`.
pub fn density(psi: &ConfigAmplitude) -> DensityField {
    density_flat(psi.data(), psi.grid(), psi.omega())
}

/// Density of a flat `(sectors.., spinor, X)` tensor; any leading sector
/// index (such as a photon occupation) is summed over along with the
/// spinors.
pub(crate) fn density_flat(data: &[Complex64], grid: &GridSpec, omega: usize) -> DensityField {
    let config_cells = grid.cells().pow(omega as u32);
    debug_assert_eq!(data.len() % config_cells, 0);
    let mut values = vec![0.0; config_cells];
    for (i, z) in data.iter().enumerate() {
        values[i % config_cells] += z.norm_sqr();
    }
    DensityField {
        grid: *grid,
        omega,
        values,
    }
}

/// `j_{k,ax}(X) = Σ Ψ* (α^ax)_(slot k) Ψ`.  The quadratic form is hermitian,
/// so the imaginary part cancels pairwise; any sub-roundoff remainder is
/// truncated by taking the real part.
pub fn currents(psi: &ConfigAmplitude) -> CurrentField {
    currents_flat(psi.data(), psi.grid(), psi.omega())
}

/// Currents of a flat `(sectors.., spinor, X)` tensor, leading sectors
/// summed — the α sandwich is diagonal in any index above the spinors.
pub(crate) fn currents_flat(data: &[Complex64], grid: &GridSpec, omega: usize) -> CurrentField {
    let set = build_dirac_set();
    let grid = *grid;
    let config_cells = grid.cells().pow(omega as u32);
    let blocks = data.len() / config_cells;
    let mut components = Vec::with_capacity(omega * grid.dim());
    for slot in 0..omega {
        let a_stride = 4usize.pow(slot as u32) * config_cells;
        let lo_count = 4usize.pow(slot as u32);
        let hi_count = blocks / (4 * lo_count);
        for axis in 0..grid.dim() {
            let alpha = &set.alpha[axis];
            let mut comp = vec![0.0; config_cells];
            for a_hi in 0..hi_count {
                for a_lo in 0..lo_count {
                    let base_a = (a_hi * 4 * lo_count + a_lo) * config_cells;
                    for (c, out) in comp.iter_mut().enumerate() {
                        let base = base_a + c;
                        let x = [
                            data[base],
                            data[base + a_stride],
                            data[base + 2 * a_stride],
                            data[base + 3 * a_stride],
                        ];
                        let mut z = Complex64::ZERO;
                        for i in 0..4 {
                            let ax = alpha[(i, 0)] * x[0]
                                + alpha[(i, 1)] * x[1]
                                + alpha[(i, 2)] * x[2]
                                + alpha[(i, 3)] * x[3];
                            z += x[i].conj() * ax;
                        }
                        *out += z.re;
                    }
                }
            }
            components.push(comp);
        }
    }
    CurrentField {
        grid,
        omega,
        components,
    }
}

/// Worst pointwise violation of the speed-of-light bound:
/// `max_X max_k (|j_k(X)| − ρ(X))`.  Nonpositive up to roundoff.
pub fn max_current_excess(rho: &DensityField, current: &CurrentField) -> f64 {
    let d = rho.grid.dim();
    let mut worst = f64::NEG_INFINITY;
    for (c, &r) in rho.values.iter().enumerate() {
        for slot in 0..rho.omega {
            let mut j2 = 0.0;
            for axis in 0..d {
                let j = current.component(slot, axis)[c];
                j2 += j * j;
            }
            worst = worst.max(j2.sqrt() - r);
        }
    }
    worst
}

/// Spectral derivative of a real field along one configuration axis.  The
/// Nyquist bin is zeroed: it carries no signed wavenumber, and dropping it
/// keeps the derivative of a real field real.
fn spectral_axis_derivative(
    grid: &GridSpec,
    field: &[f64],
    slot: usize,
    axis: usize,
    fft: &AxisFft,
) -> Vec<f64> {
    let n = grid.points();
    let stride = n.pow(axis as u32) * grid.cells().pow(slot as u32);
    let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.transform(&mut buf, stride, true);
    for (i, z) in buf.iter_mut().enumerate() {
        let bin = (i / stride) % n;
        if bin == n / 2 {
            *z = Complex64::ZERO;
        } else {
            *z *= Complex64::new(0.0, grid.wavenumber(bin));
        }
    }
    fft.transform(&mut buf, stride, false);
    buf.into_iter().map(|z| z.re).collect()
}

/// L2 norm of `(ρ₂−ρ₁)/Δt + Σ_k ∇_k·(j₁+j₂)/2` over the configuration grid
/// for two consecutive snapshots.  Vanishes at second order in Δt (and
/// spectrally in h) when the continuity equation holds.
pub fn continuity_residual(prev: &ConfigAmplitude, next: &ConfigAmplitude) -> f64 {
    assert_eq!(prev.grid(), next.grid(), "snapshots from different grids");
    assert_eq!(prev.omega(), next.omega());
    let dt = next.time() - prev.time();
    continuity_residual_fields(
        &density(prev),
        &currents(prev),
        &density(next),
        &currents(next),
        dt,
    )
}

/// The same residual from precomputed density and current snapshots.
pub(crate) fn continuity_residual_fields(
    rho1: &DensityField,
    j1: &CurrentField,
    rho2: &DensityField,
    j2: &CurrentField,
    dt: f64,
) -> f64 {
    assert!(dt > 0.0, "snapshots must be consecutive in time");
    let grid = rho1.grid;
    let mut residual: Vec<f64> = rho1
        .values
        .iter()
        .zip(&rho2.values)
        .map(|(a, b)| (b - a) / dt)
        .collect();
    let fft = AxisFft::new(grid.points());
    for slot in 0..rho1.omega {
        for axis in 0..grid.dim() {
            let avg: Vec<f64> = j1
                .component(slot, axis)
                .iter()
                .zip(j2.component(slot, axis))
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let div = spectral_axis_derivative(&grid, &avg, slot, axis, &fft);
            for (r, d) in residual.iter_mut().zip(div) {
                *r += d;
            }
        }
    }
    let mut sum = CompensatedSum::new();
    for r in residual {
        sum.add(r * r);
    }
    (sum.value() * rho1.cell_measure()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{EnergySign, Spin};
    use crate::evolve::packets::{init_amplitude, plane_wave, PacketSpec};
    use crate::evolve::step::FreePropagator;
    use crate::evolve::DEFAULT_MEMORY_BUDGET_MB;

    #[test]
    fn plane_wave_density_uniform_and_current_is_group_velocity() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let q = 2.0 * std::f64::consts::PI * 2.0 / 16.0;
        let e = (1.0 + q * q).sqrt();
        for (kind, sign) in [(EnergySign::Positive, 1.0), (EnergySign::Negative, -1.0)] {
            let psi = plane_wave(grid, 1.0, kind, Spin::Up, &[2]).unwrap();
            let rho = density(&psi);
            let j = currents(&psi);
            for c in 0..grid.cells() {
                assert!((rho.values()[c] - 1.0 / 16.0).abs() < 1e-14);
                let expect = sign * (q / e) * rho.values()[c];
                assert!(
                    (j.component(0, 0)[c] - expect).abs() < 1e-14,
                    "{kind:?} cell {c}"
                );
            }
        }
    }

    #[test]
    fn rest_frame_spin_up_packet_has_identically_zero_current() {
        let grid = GridSpec::new(1, 64, 32.0).unwrap();
        let spec = PacketSpec {
            center: [16.0, 0.0, 0.0],
            width: 2.0,
            momentum: [0.0, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Up,
        };
        // At q = 0 the positive spin-up eigenspinor is exactly (1,0,0,0) and
        // the envelope is real, so the α sandwich vanishes identically.
        let psi = init_amplitude(grid, 1.0, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let j = currents(&psi);
        let worst = j.component(0, 0).iter().cloned().fold(0.0, f64::max);
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn current_never_exceeds_density() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let specs = [
            PacketSpec {
                center: [5.0, 0.0, 0.0],
                width: 1.0,
                momentum: [1.5, 0.0, 0.0],
                kind: EnergySign::Positive,
                spin: Spin::Up,
            },
            PacketSpec {
                center: [11.0, 0.0, 0.0],
                width: 1.5,
                momentum: [-2.0, 0.0, 0.0],
                kind: EnergySign::Negative,
                spin: Spin::Down,
            },
        ];
        let psi = init_amplitude(grid, 1.0, &specs, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let rho = density(&psi);
        let j = currents(&psi);
        assert!(max_current_excess(&rho, &j) <= 1e-12 * rho.max());
        assert!((rho.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn marginals_integrate_to_one() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
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
                momentum: [0.5, 0.0, 0.0],
                kind: EnergySign::Positive,
                spin: Spin::Down,
            },
        ];
        let psi = init_amplitude(grid, 1.0, &specs, DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let rho = density(&psi);
        let h = grid.spacing();
        for slot in 0..2 {
            let total: f64 = rho.marginal(slot).iter().map(|v| v * h).sum();
            assert!((total - 1.0).abs() < 1e-10, "slot {slot}: {total}");
        }
        for axis in 0..2 {
            let total: f64 = rho.axis_marginal(axis).iter().map(|v| v * h).sum();
            assert!((total - 1.0).abs() < 1e-10, "axis {axis}: {total}");
        }
    }

    #[test]
    fn centroid_matches_packet_center() {
        let grid = GridSpec::new(1, 64, 32.0).unwrap();
        let spec = PacketSpec {
            center: [12.25, 0.0, 0.0],
            width: 1.5,
            momentum: [0.8, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin: Spin::Up,
        };
        let psi = init_amplitude(grid, 1.0, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let centroid = density(&psi).centroid();
        assert_eq!(centroid.len(), 1);
        assert!((centroid[0] - 12.25).abs() < 1e-6);
    }

    #[test]
    fn plane_wave_continuity_residual_is_tiny() {
        let grid = GridSpec::new(1, 32, 16.0).unwrap();
        let prev = plane_wave(grid, 1.0, EnergySign::Positive, Spin::Up, &[3]).unwrap();
        let mut next = prev.clone();
        let mut prop = FreePropagator::new(grid, 1.0, 0.01).unwrap();
        prop.step(&mut next).unwrap();
        assert!(continuity_residual(&prev, &next) < 1e-10);
    }

    #[test]
    fn continuity_residual_refines_at_scheme_order() {
        let run = |points: usize, dt: f64| {
            let grid = GridSpec::new(1, points, 32.0).unwrap();
            let spec = PacketSpec {
                center: [16.0, 0.0, 0.0],
                width: 2.0,
                momentum: [1.0, 0.0, 0.0],
                kind: EnergySign::Positive,
                spin: Spin::Up,
            };
            let prev = init_amplitude(grid, 1.0, &[spec], DEFAULT_MEMORY_BUDGET_MB).unwrap();
            let mut next = prev.clone();
            let mut prop = FreePropagator::new(grid, 1.0, dt).unwrap();
            prop.step(&mut next).unwrap();
            continuity_residual(&prev, &next)
        };
        let coarse = run(64, 2e-2);
        let fine = run(128, 1e-2);
        assert!(
            coarse / fine >= 4.0,
            "refinement gain {} (coarse {coarse:e}, fine {fine:e})",
            coarse / fine
        );
    }
}
