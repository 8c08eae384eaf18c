//! Initial states: Gaussian-windowed plane waves, antisymmetrised.
//!
//! A packet is a plane wave `ŵ_a(q₀) e^{iq₀·x}` — with `ŵ` the unit energy
//! eigenspinor at the nominal wavevector — under a periodically wrapped
//! Gaussian envelope.  Narrow envelopes keep the momentum support close to
//! `q₀`, so the packet is almost a pure energy eigenstate and its centroid
//! moves at the group velocity `±q₀/E_{q₀}`.  Multi-fermion states are
//! Slater-antisymmetrised products of such packets; identical packets
//! annihilate under antisymmetrisation and are rejected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dirac::{energy_eigenspinor, EnergySign, Spin};
use crate::error::Error;
use crate::grid::GridSpec;
use crate::numeric::wrap_periodic;
use crate::Result;

/// One single-particle wave packet.
///
/// `width` is the position-space standard deviation of the packet's density;
/// `momentum` is the nominal spatial wavevector `q₀` (the plane-wave factor
/// is `e^{iq₀·x}` for both energy signs).  Components of `center` and
/// `momentum` beyond the grid dimension must be zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub center: [f64; 3],
    pub width: f64,
    pub momentum: [f64; 3],
    pub kind: EnergySign,
    pub spin: Spin,
}

fn validate_spec(grid: &GridSpec, spec: &PacketSpec) -> Result<()> {
    let h = grid.spacing();
    let l = grid.length();
    if !spec.width.is_finite() || spec.width < h {
        return Err(Error::invalid(
            "packet width",
            "must be at least one grid spacing",
            spec.width,
        ));
    }
    if spec.width > l / 8.0 {
        return Err(Error::invalid(
            "packet width",
            "must not exceed an eighth of the box length (periodic wrap)",
            spec.width,
        ));
    }
    for axis in 0..3 {
        let (c, q) = (spec.center[axis], spec.momentum[axis]);
        if !c.is_finite() || !q.is_finite() {
            return Err(Error::invalid(
                "packet",
                "center and momentum must be finite",
                format!("axis {axis}: center {c}, momentum {q}"),
            ));
        }
        if axis >= grid.dim() && (c != 0.0 || q != 0.0) {
            return Err(Error::invalid(
                "packet",
                "components beyond the grid dimension must be zero",
                format!("axis {axis}: center {c}, momentum {q}"),
            ));
        }
    }
    // Momentum-space std is 1/(2·width); keep three of them inside Nyquist.
    let nyquist = std::f64::consts::PI * grid.points() as f64 / l;
    for axis in 0..grid.dim() {
        if spec.momentum[axis].abs() + 1.5 / spec.width > nyquist {
            return Err(Error::invalid(
                "packet momentum",
                "must fit three momentum standard deviations inside the grid's Nyquist wavenumber",
                spec.momentum[axis],
            ));
        }
    }
    Ok(())
}

/// Evaluate one packet on the grid: a vector of length `4·cells`, laid out
/// `a·cells + c`, normalised to `Σ_x Σ_a |φ|² h^d = 1`.
fn single_packet(grid: &GridSpec, mass: f64, spec: &PacketSpec) -> Result<Vec<Complex64>> {
    validate_spec(grid, spec)?;
    let spinor = energy_eigenspinor(spec.kind, spec.spin, spec.momentum, mass)?;
    let cells = grid.cells();
    let mut out = vec![Complex64::ZERO; 4 * cells];
    let mut idx = vec![0usize; grid.dim()];
    let mut weight = 0.0;
    for c in 0..cells {
        grid.unravel(c, &mut idx);
        let mut d2 = 0.0;
        let mut phase = 0.0;
        for axis in 0..grid.dim() {
            let x = grid.coordinate(idx[axis]);
            let delta = wrap_periodic(x - spec.center[axis] + grid.length() / 2.0, grid.length())
                - grid.length() / 2.0;
            d2 += delta * delta;
            phase += spec.momentum[axis] * x;
        }
        let envelope = (-d2 / (4.0 * spec.width * spec.width)).exp();
        weight += envelope * envelope;
        let factor = Complex64::from_polar(envelope, phase);
        for a in 0..4 {
            out[a * cells + c] = spinor[a] * factor;
        }
    }
    let measure = grid.spacing().powi(grid.dim() as i32);
    let norm = (weight * measure).sqrt();
    for z in &mut out {
        *z /= norm;
    }
    Ok(out)
}

/// Antisymmetrised, normalised product of the given packets.  Time is 0.
///
/// Fails with a degenerate-input error when the packets are (nearly)
/// linearly dependent — in particular when two are identical, since the
/// Slater construction then vanishes.
pub fn init_amplitude(
    grid: GridSpec,
    mass: f64,
    specs: &[PacketSpec],
    budget_mb: usize,
) -> Result<super::ConfigAmplitude> {
    if specs.is_empty() {
        return Err(Error::invalid("packets", "at least one is required", 0));
    }
    let omega = specs.len();
    let mut psi = super::ConfigAmplitude::zeros(grid, omega, mass, budget_mb)?;
    let singles: Vec<Vec<Complex64>> = specs
        .iter()
        .map(|s| single_packet(&grid, mass, s))
        .collect::<Result<_>>()?;
    let cells = grid.cells();
    let config_cells = psi.config_cells();
    let spinor_blocks = psi.spinor_blocks();
    for big_a in 0..spinor_blocks {
        for c in 0..config_cells {
            let (mut a_rest, mut c_rest) = (big_a, c);
            let mut product = Complex64::new(1.0, 0.0);
            for single in singles.iter() {
                let (a_j, c_j) = (a_rest % 4, c_rest % cells);
                product *= single[a_j * cells + c_j];
                a_rest /= 4;
                c_rest /= cells;
            }
            psi.data[big_a * config_cells + c] = product;
        }
    }
    psi.antisymmetrize();
    let norm = psi.normalize();
    // Orthonormal packets give 1/√(ω!); vanishing norm means dependence.
    if norm < 1e-6 {
        return Err(Error::DegeneratePackets { norm });
    }
    Ok(psi)
}

/// Exact single-fermion plane wave at grid momentum `n` (per-axis integer
/// indices in `[−N/2, N/2)`): `Ψ_a(x) = ŵ_a(q) e^{iq·x}/√V`, `q = 2πn/L`.
///
/// Under free evolution this only acquires the phase `e^{−iE_q t}`
/// (positive branch) or `e^{+iE_q t}` (negative branch).
pub fn plane_wave(
    grid: GridSpec,
    mass: f64,
    kind: EnergySign,
    spin: Spin,
    n: &[i64],
) -> Result<super::ConfigAmplitude> {
    if n.len() != grid.dim() {
        return Err(Error::invalid(
            "momentum index",
            "needs one integer per grid axis",
            n.len(),
        ));
    }
    let half = grid.points() as i64 / 2;
    let mut q = [0.0; 3];
    for (axis, &ni) in n.iter().enumerate() {
        if ni < -half || ni >= half {
            return Err(Error::invalid(
                "momentum index",
                "must lie in [-N/2, N/2)",
                ni,
            ));
        }
        q[axis] = 2.0 * std::f64::consts::PI * ni as f64 / grid.length();
    }
    let spinor = energy_eigenspinor(kind, spin, q, mass)?;
    let mut psi = super::ConfigAmplitude::zeros(grid, 1, mass, super::DEFAULT_MEMORY_BUDGET_MB)?;
    let cells = grid.cells();
    let inv_sqrt_v = 1.0 / grid.length().powi(grid.dim() as i32).sqrt();
    let mut idx = vec![0usize; grid.dim()];
    for c in 0..cells {
        grid.unravel(c, &mut idx);
        let phase: f64 = (0..grid.dim())
            .map(|axis| q[axis] * grid.coordinate(idx[axis]))
            .sum();
        let factor = Complex64::from_polar(inv_sqrt_v, phase);
        for a in 0..4 {
            psi.data[a * cells + c] = spinor[a] * factor;
        }
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{density, DEFAULT_MEMORY_BUDGET_MB};

    fn grid() -> GridSpec {
        GridSpec::new(1, 64, 32.0).unwrap()
    }

    fn packet(center: f64, momentum: f64, spin: Spin) -> PacketSpec {
        PacketSpec {
            center: [center, 0.0, 0.0],
            width: 2.0,
            momentum: [momentum, 0.0, 0.0],
            kind: EnergySign::Positive,
            spin,
        }
    }

    #[test]
    fn single_packet_is_normalized_and_gaussian() {
        let g = grid();
        let psi = init_amplitude(
            g,
            1.0,
            &[packet(16.0, 1.0, Spin::Up)],
            DEFAULT_MEMORY_BUDGET_MB,
        )
        .unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(psi.antisymmetry_deviation(), 0.0);
        // Density profile is exactly the Gaussian envelope squared: the
        // spinor has unit norm, so ρ(x)/ρ(center) = exp(−Δ²/(2w²)).
        let rho = density(&psi);
        let peak = g.locate(16.0).unwrap();
        for offset in [1usize, 4, 8] {
            let x = g.coordinate(peak + offset);
            let expect = (-(x - 16.0) * (x - 16.0) / (2.0 * 4.0)).exp();
            let got = rho.values()[peak + offset] / rho.values()[peak];
            assert!(
                (got - expect).abs() < 1e-12,
                "offset {offset}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn identical_packets_are_degenerate() {
        let g = grid();
        let spec = packet(16.0, 1.0, Spin::Up);
        match init_amplitude(g, 1.0, &[spec, spec], DEFAULT_MEMORY_BUDGET_MB) {
            Err(Error::DegeneratePackets { norm }) => assert!(norm < 1e-10),
            other => panic!("expected degenerate packets, got {other:?}"),
        }
    }

    #[test]
    fn orthogonal_pair_marginal_is_symmetrised_sum() {
        let g = grid();
        let a = packet(10.0, 1.0, Spin::Up);
        let b = packet(22.0, -1.0, Spin::Down);
        let pair = init_amplitude(g, 1.0, &[a, b], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        assert!((pair.norm_sqr() - 1.0).abs() < 1e-10);
        assert!(pair.antisymmetry_deviation() < 1e-12);
        let rho_a = density(&init_amplitude(g, 1.0, &[a], DEFAULT_MEMORY_BUDGET_MB).unwrap());
        let rho_b = density(&init_amplitude(g, 1.0, &[b], DEFAULT_MEMORY_BUDGET_MB).unwrap());
        let marginal = density(&pair).marginal(0);
        for c in 0..g.cells() {
            let expect = 0.5 * (rho_a.values()[c] + rho_b.values()[c]);
            assert!(
                (marginal[c] - expect).abs() < 1e-10,
                "cell {c}: {} vs {expect}",
                marginal[c]
            );
        }
    }

    #[test]
    fn same_spin_pair_vanishes_at_coincident_points() {
        let g = grid();
        let a = packet(12.0, 0.5, Spin::Up);
        let b = packet(20.0, 0.5, Spin::Up);
        let pair = init_amplitude(g, 1.0, &[a, b], DEFAULT_MEMORY_BUDGET_MB).unwrap();
        let rho = density(&pair);
        let max = rho.values().iter().cloned().fold(0.0, f64::max);
        for c in 0..g.cells() {
            let diagonal = rho.values()[c * g.cells() + c];
            assert!(diagonal < 1e-24 * max, "cell {c}: {diagonal:e}");
        }
    }

    #[test]
    fn rejects_malformed_specs() {
        let g = grid();
        let mut bad = packet(16.0, 1.0, Spin::Up);
        bad.width = 0.1; // below grid spacing 0.5
        assert!(init_amplitude(g, 1.0, &[bad], 64).is_err());
        let mut wide = packet(16.0, 1.0, Spin::Up);
        wide.width = 10.0; // beyond L/8
        assert!(init_amplitude(g, 1.0, &[wide], 64).is_err());
        let mut fast = packet(16.0, 6.0, Spin::Up);
        fast.width = 2.0; // |q|+1.5/w exceeds Nyquist π·N/L ≈ 6.28
        assert!(init_amplitude(g, 1.0, &[fast], 64).is_err());
        let mut off_axis = packet(16.0, 1.0, Spin::Up);
        off_axis.momentum[2] = 0.3;
        assert!(init_amplitude(g, 1.0, &[off_axis], 64).is_err());
        assert!(plane_wave(g, 1.0, EnergySign::Positive, Spin::Up, &[32]).is_err());
        assert!(plane_wave(g, 1.0, EnergySign::Positive, Spin::Up, &[1, 2]).is_err());
    }
}
