//! The operator-identity suite behind `fock-verify`: every algebraic claim
//! about the truncated second-quantised sector, evaluated to a named residual.

use num_complex::Complex64;
use serde::Serialize;

use super::appendix::{gaussian_bump, verify_appendix_commutator, AppendixReport};
use super::field::FieldSet;
use super::observables::{
    assemble_observable, diagonal_eigenvalue, dirac_evolution_dense, ObservableKind,
};
use super::{FockOperator, ModeSet};
use crate::dirac::IdentityCheck;
use crate::Result;

/// Full machine-readable outcome of a verification run.
#[derive(Debug, Serialize)]
pub struct FockReport {
    pub mode_count: usize,
    pub dimension: usize,
    pub momentum_indices: Vec<i64>,
    pub mass: f64,
    pub length: f64,
    pub field_grid: usize,
    pub checks: Vec<IdentityCheck>,
    /// Present when the momentum list admits pair channels (≥ 2 momenta).
    pub pair_commutator: Option<AppendixSummary>,
    pub all_pass: bool,
}

/// Serialisable digest of the dual-route commutator computation.
#[derive(Debug, Serialize)]
pub struct AppendixSummary {
    pub direct_frobenius: f64,
    pub closed_form_frobenius: f64,
    pub relative_mismatch: f64,
    pub two_particle_norm: f64,
    pub paired_element_direct: [f64; 2],
    pub paired_element_closed: [f64; 2],
}

impl From<&AppendixReport> for AppendixSummary {
    fn from(r: &AppendixReport) -> Self {
        AppendixSummary {
            direct_frobenius: r.direct_frobenius,
            closed_form_frobenius: r.closed_form_frobenius,
            relative_mismatch: r.relative_mismatch,
            two_particle_norm: r.two_particle_norm,
            paired_element_direct: [r.paired_element_direct.re, r.paired_element_direct.im],
            paired_element_closed: [r.paired_element_closed.re, r.paired_element_closed.im],
        }
    }
}

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

/// Run every identity on the given mode set.
pub fn verify_fock_algebra(modes: &ModeSet) -> Result<FockReport> {
    let mut checks = Vec::new();
    let m = modes.mode_count();
    let dim = modes.dim();
    let id = FockOperator::identity(dim);

    // Canonical anticommutation relations, all ordered pairs.
    let mut dev_aa = 0.0f64;
    let mut dev_ac = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            dev_aa = dev_aa.max(
                modes
                    .annihilator(i)
                    .anticommutator(modes.annihilator(j))
                    .max_abs_entry(),
            );
            let ac = modes.annihilator(i).anticommutator(modes.creator(j));
            let expect = if i == j { &id } else { &FockOperator::zeros(dim) };
            dev_ac = dev_ac.max(ac.sub(expect).max_abs_entry());
        }
    }
    checks.push(IdentityCheck::new("car: {a_i, a_j} = 0, all pairs", dev_aa, 1e-12));
    checks.push(IdentityCheck::new(
        "car: {a_i, a†_j} = delta_ij, all pairs",
        dev_ac,
        1e-12,
    ));

    // Observables: hermiticity and the conservation commutators.
    let h_d = assemble_observable(ObservableKind::DiracHamiltonian, modes);
    let f_op = assemble_observable(ObservableKind::FermionNumber, modes);
    let n_op = assemble_observable(ObservableKind::ParticleNumber, modes);
    let mut herm = 0.0f64;
    for kind in ObservableKind::ALL {
        herm = herm.max(assemble_observable(kind, modes).hermiticity_deviation());
    }
    checks.push(IdentityCheck::new("observables hermitian", herm, 1e-12));
    checks.push(IdentityCheck::new(
        "[H_D, F] = 0",
        h_d.commutator(&f_op).frobenius_norm(),
        1e-10,
    ));
    checks.push(IdentityCheck::new(
        "[H_D, N] = 0 (free evolution conserves particle number)",
        h_d.commutator(&n_op).frobenius_norm(),
        1e-12,
    ));

    // Fermion-number spectrum: binomial multiplicities.
    let mut multiplicity = vec![0usize; m + 1];
    for idx in 0..dim {
        let f = diagonal_eigenvalue(ObservableKind::FermionNumber, modes, idx).round();
        multiplicity[f as usize] += 1;
    }
    let mismatches = multiplicity
        .iter()
        .enumerate()
        .filter(|&(k, &c)| c != binomial(m, k))
        .count();
    checks.push(IdentityCheck::new(
        "F spectrum = {0..M} with binomial multiplicities",
        mismatches as f64,
        0.5,
    ));

    // Field level.
    let n_grid = FieldSet::default_grid(modes);
    let fields = FieldSet::build(modes, n_grid)?;

    let mut dev_field_car = 0.0f64;
    let mut dev_field_aa = 0.0f64;
    for x in 0..n_grid {
        for y in [0usize, n_grid / 2] {
            let delta = fields.truncated_delta(fields.coordinate(x) - fields.coordinate(y));
            for a in 0..4 {
                for b in 0..4 {
                    let ac = fields.psi(x, a).anticommutator(&fields.psi(y, b).adjoint());
                    let want = if a == b { delta } else { 0.0 };
                    dev_field_car = dev_field_car
                        .max(ac.sub(&id.scale(Complex64::new(want, 0.0))).max_abs_entry());
                    dev_field_aa = dev_field_aa
                        .max(fields.psi(x, a).anticommutator(fields.psi(y, b)).max_abs_entry());
                }
            }
        }
    }
    checks.push(IdentityCheck::new(
        "field car: {psi_a(x), psi†_b(y)} = delta_ab Delta_L(x-y)",
        dev_field_car,
        1e-12,
    ));
    checks.push(IdentityCheck::new(
        "field car: {psi_a(x), psi_b(y)} = 0",
        dev_field_aa,
        1e-12,
    ));

    let total_density = fields.weighted_density(&vec![1.0; n_grid]);
    checks.push(IdentityCheck::new(
        "sum_x h psi†psi(x) = F",
        total_density.sub(&f_op).frobenius_norm() / f_op.frobenius_norm(),
        1e-12,
    ));

    let vac = modes.fermion_number_vacuum();
    let vac_expect = (0..n_grid)
        .map(|x| fields.density(x).entry(vac, vac).norm())
        .fold(0.0, f64::max);
    checks.push(IdentityCheck::new(
        "<0_D| psi†psi(x) |0_D> = 0",
        vac_expect,
        1e-13,
    ));

    // Newton-Wigner density.
    let sea = modes.electron_positron_vacuum();
    let mut nw_commutes_n = 0.0f64;
    let mut nw_sea = 0.0f64;
    for x in 0..n_grid {
        let n_x = fields.newton_wigner_density(x);
        nw_commutes_n = nw_commutes_n.max(n_x.commutator(&n_op).max_abs_entry());
        nw_sea = nw_sea.max(n_x.entry(sea, sea).norm());
    }
    checks.push(IdentityCheck::new(
        "[n_NW(x), N] = 0 pointwise",
        nw_commutes_n,
        1e-12,
    ));
    checks.push(IdentityCheck::new("<0| n_NW(x) |0> = 0", nw_sea, 1e-13));
    checks.push(IdentityCheck::new(
        "sum_x h n_NW(x) = N",
        fields.newton_wigner_total().sub(&n_op).frobenius_norm() / n_op.frobenius_norm(),
        1e-10,
    ));

    // Everything requiring genuine spatial structure needs at least two
    // momenta: with a single momentum all densities are uniform in x and the
    // two density notions trivially commute.
    let mut pair_commutator = None;
    if modes.momentum_indices().len() >= 2 {
        let mut nw_vs_density = 0.0f64;
        for x in 0..n_grid {
            let n_x = fields.newton_wigner_density(x);
            for y in 0..n_grid {
                nw_vs_density =
                    nw_vs_density.max(n_x.commutator(&fields.density(y)).max_abs_entry());
            }
        }
        checks.push(IdentityCheck::at_least(
            "[n_NW(x), psi†psi(y)] != 0 for some x, y",
            nw_vs_density,
            1e-8,
        ));
        let f = gaussian_bump(&fields);
        let report = verify_appendix_commutator(&f, &fields)?;
        checks.push(IdentityCheck::new(
            "pair commutator: direct vs closed-form relative mismatch",
            report.relative_mismatch,
            1e-10,
        ));
        checks.push(IdentityCheck::at_least(
            "pair commutator: two-particle norm for gaussian weight",
            report.two_particle_norm,
            1e-6,
        ));
        let const_report = verify_appendix_commutator(&vec![1.0; n_grid], &fields)?;
        checks.push(IdentityCheck::new(
            "pair commutator: constant weight gives [F, N] = 0",
            const_report.two_particle_norm,
            1e-12,
        ));
        pair_commutator = Some(AppendixSummary::from(&report));
    }

    // Super-selection: evolution from a dense eigendecomposition stays
    // block-diagonal across fermion-number sectors.  Dense work, so run it
    // on the two-momentum set when the current one is bigger.
    let small;
    let eigen_modes = if dim <= 256 {
        modes
    } else {
        small = ModeSet::from_momentum_indices(vec![-1, 1], modes.mass(), modes.length())?;
        &small
    };
    let u = dirac_evolution_dense(eigen_modes, 0.37);
    let f_of: Vec<f64> = (0..eigen_modes.dim())
        .map(|i| diagonal_eigenvalue(ObservableKind::FermionNumber, eigen_modes, i))
        .collect();
    let mut leakage = 0.0f64;
    for r in 0..eigen_modes.dim() {
        for c in 0..eigen_modes.dim() {
            if (f_of[r] - f_of[c]).abs() > 0.5 {
                leakage = leakage.max(u[(r, c)].norm());
            }
        }
    }
    checks.push(IdentityCheck::new(
        "superselection: exp(-i H_D t) block-diagonal in F sectors",
        leakage,
        1e-10,
    ));

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(FockReport {
        mode_count: m,
        dimension: dim,
        momentum_indices: modes.momentum_indices().to_vec(),
        mass: modes.mass(),
        length: modes.length(),
        field_grid: n_grid,
        checks,
        pair_commutator,
        all_pass,
    })
}
