//! Dirac matrix algebra and plane-wave spinors in the Pauli-Dirac
//! representation.
//!
//! Conventions: `β = diag(1,1,−1,−1)`, `α^j` off-diagonal in the Pauli
//! matrices, `γ^0 = β`, `γ^j = βα^j` (so `βγ^j = α^j`), metric signature
//! `(+,−,−,−)`.  The one-particle Hamiltonian is `h(p) = α·p + mβ` with
//! dispersion `E_p = √(|p|² + m²)`.
//!
//! Spinors come in two normalisations:
//!
//! - [`energy_eigenspinor`] returns unit-norm eigenvectors of `h(p)`,
//!   following a branch that is smooth in `p` for `m > 0` (no phase fixing);
//!   this is what grid initialisation wants, where an arbitrary
//!   momentum-dependent phase jump would corrupt a packet.
//! - [`plane_wave_spinor`] returns box-normalised spinors with
//!   `u†u = v†v = E_p/(Vm)` and a deterministic phase (first nonvanishing
//!   component real positive), the form used by the mode expansion of the
//!   second-quantised field.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The Pauli matrices `σ_1, σ_2, σ_3`.
pub fn pauli_matrices() -> [Matrix2<Complex64>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// The fixed 4×4 matrices of the Pauli-Dirac representation.
#[derive(Clone, Debug)]
pub struct DiracSet {
    /// `α^1, α^2, α^3`; hermitian, zero diagonal blocks.
    pub alpha: [Matrix4<Complex64>; 3],
    /// `β = diag(1,1,−1,−1)`.
    pub beta: Matrix4<Complex64>,
    /// `γ^0 = β`, `γ^j = βα^j`.
    pub gamma: [Matrix4<Complex64>; 4],
}

/// Diagonal of the metric tensor, signature `(+,−,−,−)`.
pub const METRIC_DIAG: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Build the Pauli-Dirac representation.  Total: no inputs, cannot fail.
pub fn build_dirac_set() -> DiracSet {
    let sigma = pauli_matrices();
    let mut alpha = [Matrix4::zeros(); 3];
    for j in 0..3 {
        // α^j = [[0, σ_j], [σ_j, 0]]
        for r in 0..2 {
            for c in 0..2 {
                alpha[j][(r, c + 2)] = sigma[j][(r, c)];
                alpha[j][(r + 2, c)] = sigma[j][(r, c)];
            }
        }
    }
    let beta = Matrix4::from_diagonal(&Vector4::new(ONE, ONE, -ONE, -ONE));
    let gamma = [beta, beta * alpha[0], beta * alpha[1], beta * alpha[2]];
    DiracSet { alpha, beta, gamma }
}

/// Relativistic dispersion `E_p = √(|p|² + m²)`.
pub fn energy(p: [f64; 3], m: f64) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + m * m).sqrt()
}

/// One-particle Dirac Hamiltonian `h(p) = α·p + mβ`.
pub fn single_particle_hamiltonian(p: [f64; 3], m: f64) -> Matrix4<Complex64> {
    let set = build_dirac_set();
    hamiltonian_from_set(&set, p, m)
}

/// As [`single_particle_hamiltonian`] but reusing an existing [`DiracSet`].
pub fn hamiltonian_from_set(set: &DiracSet, p: [f64; 3], m: f64) -> Matrix4<Complex64> {
    let mut h = set.beta * Complex64::new(m, 0.0);
    for j in 0..3 {
        h += set.alpha[j] * Complex64::new(p[j], 0.0);
    }
    h
}

/// Sign of the energy eigenvalue a spinor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySign {
    Positive,
    Negative,
}

impl EnergySign {
    pub fn signum(self) -> f64 {
        match self {
            EnergySign::Positive => 1.0,
            EnergySign::Negative => -1.0,
        }
    }
}

/// Spin label `s ∈ {1, 2}` relative to the rest-frame quantisation axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Spin> {
        match i {
            0 => Some(Spin::Up),
            1 => Some(Spin::Down),
            _ => None,
        }
    }

    /// Two-component rest-frame spinor `χ_s`.
    pub fn chi(self) -> Vector2<Complex64> {
        match self {
            Spin::Up => Vector2::new(ONE, ZERO),
            Spin::Down => Vector2::new(ZERO, ONE),
        }
    }
}

fn check_mass(m: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::MasslessSpinor { mass: m });
    }
    Ok(())
}

/// `(σ·p)/(E+m) χ_s`, the lower (or upper) two components shared by all
/// spinor branches.  Smooth in `p` for `m > 0` since `E + m ≥ m`.
fn sigma_p_chi(p: [f64; 3], m: f64, spin: Spin) -> Vector2<Complex64> {
    let e = energy(p, m);
    let sigma = pauli_matrices();
    let mut sp = Matrix2::zeros();
    for j in 0..3 {
        sp += sigma[j] * Complex64::new(p[j], 0.0);
    }
    sp * spin.chi() / Complex64::new(e + m, 0.0)
}

/// Unit-norm eigenvector of `h(p) = α·p + mβ` with eigenvalue `±E_p`,
/// following the branch that is smooth in `p` (no phase convention applied).
///
/// For the negative sign this is the spinor `v_s(−p)` up to normalisation:
/// the plane wave `v_s(q) e^{−iq·x}` has spatial wavevector `−q`.
pub fn energy_eigenspinor(
    kind: EnergySign,
    spin: Spin,
    p: [f64; 3],
    m: f64,
) -> Result<Vector4<Complex64>> {
    check_mass(m)?;
    let e = energy(p, m);
    // ‖(χ; Dχ)‖² = 1 + p²/(E+m)² = 2E/(E+m).
    let scale = Complex64::new(((e + m) / (2.0 * e)).sqrt(), 0.0);
    let chi = spin.chi();
    let lower = sigma_p_chi(p, m, spin);
    Ok(match kind {
        EnergySign::Positive => {
            Vector4::new(chi[0] * scale, chi[1] * scale, lower[0] * scale, lower[1] * scale)
        }
        EnergySign::Negative => Vector4::new(
            -lower[0] * scale,
            -lower[1] * scale,
            chi[0] * scale,
            chi[1] * scale,
        ),
    })
}

/// Box-normalised positive-energy spinor `u_s(p)` with `u†u = E_p/(Vm)`,
/// smooth branch, no phase convention.
pub fn spinor_u(spin: Spin, p: [f64; 3], m: f64, volume: f64) -> Result<Vector4<Complex64>> {
    check_mass(m)?;
    check_volume(volume)?;
    let e = energy(p, m);
    let scale = Complex64::new(((e + m) / (2.0 * volume * m)).sqrt(), 0.0);
    let chi = spin.chi();
    let lower = sigma_p_chi(p, m, spin);
    Ok(Vector4::new(
        chi[0] * scale,
        chi[1] * scale,
        lower[0] * scale,
        lower[1] * scale,
    ))
}

/// Box-normalised negative-energy spinor `v_s(p)` with `v†v = E_p/(Vm)`,
/// smooth branch, no phase convention.  Satisfies
/// `(α·(−p) + mβ) v_s(p) = −E_p v_s(p)`, pairing with the plane wave
/// `e^{−ip·x}, e^{+iE_p t}`.
pub fn spinor_v(spin: Spin, p: [f64; 3], m: f64, volume: f64) -> Result<Vector4<Complex64>> {
    check_mass(m)?;
    check_volume(volume)?;
    let e = energy(p, m);
    let scale = Complex64::new(((e + m) / (2.0 * volume * m)).sqrt(), 0.0);
    let chi = spin.chi();
    let upper = sigma_p_chi(p, m, spin);
    Ok(Vector4::new(
        upper[0] * scale,
        upper[1] * scale,
        chi[0] * scale,
        chi[1] * scale,
    ))
}

fn check_volume(volume: f64) -> Result<()> {
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::invalid("volume", "must be finite and > 0", volume));
    }
    Ok(())
}

/// Rotate a spinor so its first nonvanishing component is real positive.
/// "Nonvanishing" means above `1e−12` of the overall norm, so roundoff in a
/// component that is analytically zero cannot flip the convention.
pub fn fix_phase(v: &mut Vector4<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    for k in 0..4 {
        let z = v[k];
        if z.norm() > 1e-12 * norm {
            let phase = z.conj() / Complex64::new(z.norm(), 0.0);
            for c in v.iter_mut() {
                *c *= phase;
            }
            return;
        }
    }
}

/// A plane-wave spinor together with the labels that determine it.
#[derive(Clone, Debug)]
pub struct PlaneWaveSpinor {
    pub components: Vector4<Complex64>,
    pub kind: EnergySign,
    pub spin: Spin,
    pub momentum: [f64; 3],
    pub mass: f64,
    pub volume: f64,
}

impl PlaneWaveSpinor {
    pub fn energy(&self) -> f64 {
        energy(self.momentum, self.mass)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Box-normalised spinor `u_s(p)` or `v_s(p)` with the deterministic phase
/// convention (first nonvanishing component real positive).
///
/// Rejects `m = 0`: the normalisation `u†u = E/(Vm)` is undefined there.
pub fn plane_wave_spinor(
    kind: EnergySign,
    spin: Spin,
    p: [f64; 3],
    m: f64,
    volume: f64,
) -> Result<PlaneWaveSpinor> {
    let mut components = match kind {
        EnergySign::Positive => spinor_u(spin, p, m, volume)?,
        EnergySign::Negative => spinor_v(spin, p, m, volume)?,
    };
    fix_phase(&mut components);
    Ok(PlaneWaveSpinor {
        components,
        kind,
        spin,
        momentum: p,
        mass: m,
        volume,
    })
}

/// Largest entrywise magnitude of a 4×4 matrix; the residual measure used by
/// the identity checks.
pub fn max_abs(m: &Matrix4<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `{a, b} = ab + ba`.
pub fn anticommutator(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    a * b + b * a
}

/// One named identity-check outcome, consumed by the verification CLI.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        IdentityCheck {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// A witness check: passes when `value` *exceeds* `floor` (used for
    /// quantities that must be non-zero, like the pair-creation norm).
    pub fn at_least(name: impl Into<String>, value: f64, floor: f64) -> Self {
        IdentityCheck {
            name: name.into(),
            residual: value,
            tolerance: floor,
            pass: value >= floor,
        }
    }
}

/// Run every matrix-algebra identity and a deterministic sweep of spinor
/// eigenvalue residuals; the backbone of the `check-algebra` subcommand.
pub fn verify_dirac_algebra() -> Vec<IdentityCheck> {
    let tol = 1e-12;
    let set = build_dirac_set();
    let id = Matrix4::identity();
    let mut checks = Vec::new();

    for j in 0..3 {
        for k in 0..3 {
            let delta = if j == k { 2.0 } else { 0.0 };
            let res = anticommutator(&set.alpha[j], &set.alpha[k]) - id * Complex64::new(delta, 0.0);
            checks.push(IdentityCheck::new(
                format!("{{alpha^{}, alpha^{}}} = 2 delta^jk I", j + 1, k + 1),
                max_abs(&res),
                tol,
            ));
        }
        let res = anticommutator(&set.alpha[j], &set.beta);
        checks.push(IdentityCheck::new(
            format!("{{alpha^{}, beta}} = 0", j + 1),
            max_abs(&res),
            tol,
        ));
        checks.push(IdentityCheck::new(
            format!("alpha^{} hermitian", j + 1),
            max_abs(&(set.alpha[j].adjoint() - set.alpha[j])),
            tol,
        ));
    }
    checks.push(IdentityCheck::new(
        "beta^2 = I",
        max_abs(&(set.beta * set.beta - id)),
        tol,
    ));
    checks.push(IdentityCheck::new(
        "beta hermitian",
        max_abs(&(set.beta.adjoint() - set.beta)),
        tol,
    ));
    for mu in 0..4 {
        for nu in 0..4 {
            let g = if mu == nu { 2.0 * METRIC_DIAG[mu] } else { 0.0 };
            let res = anticommutator(&set.gamma[mu], &set.gamma[nu]) - id * Complex64::new(g, 0.0);
            checks.push(IdentityCheck::new(
                format!("{{gamma^{mu}, gamma^{nu}}} = 2 g^mu_nu I"),
                max_abs(&res),
                tol,
            ));
        }
    }
    for j in 0..3 {
        checks.push(IdentityCheck::new(
            format!("beta gamma^{} = alpha^{}", j + 1, j + 1),
            max_abs(&(set.beta * set.gamma[j + 1] - set.alpha[j])),
            tol,
        ));
    }

    // Deterministic spinor sweep: eigenvalue residual relative to E_p.
    let momenta = [
        [0.0, 0.0, 0.0],
        [0.7, 0.0, 0.0],
        [0.3, -0.4, 1.2],
        [-2.0, 0.5, 0.1],
        [5.0, -3.0, 2.0],
    ];
    let masses = [0.25, 1.0, 4.0];
    let mut worst = 0.0f64;
    for &p in &momenta {
        for &m in &masses {
            let e = energy(p, m);
            let h = hamiltonian_from_set(&set, p, m);
            for kind in [EnergySign::Positive, EnergySign::Negative] {
                for spin in Spin::BOTH {
                    let w = energy_eigenspinor(kind, spin, p, m).expect("m > 0");
                    let res = (h * w - w * Complex64::new(kind.signum() * e, 0.0)).norm() / e;
                    worst = worst.max(res);
                }
            }
        }
    }
    checks.push(IdentityCheck::new(
        "eigenspinor residual sweep / E_p",
        worst,
        tol,
    ));
    checks
}
