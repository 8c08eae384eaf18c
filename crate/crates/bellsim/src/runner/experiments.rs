//! Experiment drivers: each takes a validated config, produces artifacts
//! through an [`Emitter`], and fills the manifest's snapshots and checks.
//!
//! [`run`] is the single entry point: it dispatches on the experiment kind,
//! turns check outcomes into an overall status, and always writes the
//! manifest — on an abort the status is `error` and the inventory covers
//! whatever was emitted before the failure.

use std::mem;
use std::time::Instant;

use crate::dirac::verify_dirac_algebra;
use crate::evolve::{
    continuity_residual, density, energy_expectation, init_amplitude, ConfigAmplitude,
    DensityField, FreePropagator,
};
use crate::fock::{verify_fock_algebra, ModeSet};
use crate::grid::GridSpec;
use crate::guidance::{
    advance_ensemble, equivariance_test, sample_initial, velocity_field, TrajectoryEnsemble,
    VelocityStages,
};
use crate::qed::{
    build_photon_basis, energy_ledger, qed_continuity_residual, qed_density, QedAmplitude,
    QedPropagator,
};
use crate::Result;

use super::config::{ExperimentKind, RunConfig};
use super::manifest::{
    CheckRecord, Emitter, RunManifest, RunStatus, SnapshotRecord, TrajectoryStats,
};

/// Execute a config end to end and return the manifest that was written to
/// `<output_dir>/manifest.json`.
///
/// The returned manifest's status is `pass` iff every embedded check
/// passed; numerical aborts are captured in the manifest (status `error`)
/// rather than bubbling out, so a manifest is emitted in all cases where
/// the output directory itself is writable.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    config.validate()?;
    let mut emitter = Emitter::new(resolve_output_dir(config))?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(config);
    let outcome = match config.experiment {
        ExperimentKind::CheckAlgebra => check_algebra(&mut emitter, &mut manifest),
        ExperimentKind::FockVerify => fock_verify(config, &mut emitter, &mut manifest),
        ExperimentKind::Evolve => evolve(config, &mut emitter, &mut manifest),
        ExperimentKind::Trajectories => trajectories(config, &mut emitter, &mut manifest),
        ExperimentKind::Qed => qed(config, &mut emitter, &mut manifest),
    };
    manifest.status = match outcome {
        Ok(()) => {
            if manifest.all_pass() {
                RunStatus::Pass
            } else {
                RunStatus::Fail
            }
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            RunStatus::Error
        }
    };
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    manifest.inventory = emitter.inventory()?;
    emitter.write_manifest(&manifest)?;
    Ok(manifest)
}

/// Where a run's artifacts land: the configured directory, or `bellsim-out`.
pub fn resolve_output_dir(config: &RunConfig) -> std::path::PathBuf {
    config
        .output_dir
        .clone()
        .unwrap_or_else(|| std::path::PathBuf::from("bellsim-out"))
}

fn build_grid(config: &RunConfig) -> Result<GridSpec> {
    let g = config.grid.as_ref().expect("validated config has a grid");
    GridSpec::new(g.d, g.points, g.length)
}

fn build_fermion(config: &RunConfig, grid: GridSpec) -> Result<ConfigAmplitude> {
    let p = config.physics.as_ref().expect("validated config has physics");
    init_amplitude(grid, p.m, &config.packets, config.memory_budget_mb)
}

/// Write one density snapshot: a column per configuration axis, then ρ.
fn emit_density(emitter: &mut Emitter, name: &str, rho: &DensityField) -> Result<()> {
    let axes = rho.omega() * rho.grid().dim();
    let mut header = String::new();
    for k in 0..axes {
        header.push_str(&format!("x{k} [length], "));
    }
    header.push_str(&format!("rho [1/length^{axes}]"));
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(rho.values().len());
    for (c, &v) in rho.values().iter().enumerate() {
        let mut row = Vec::with_capacity(axes + 1);
        for k in 0..axes {
            row.push(rho.grid().coordinate(rho.axis_index(c, k)));
        }
        row.push(v);
        rows.push(row);
    }
    emitter.write_csv(name, &[&header], rows.iter().map(|r| r.as_slice()))
}

fn check_algebra(emitter: &mut Emitter, manifest: &mut RunManifest) -> Result<()> {
    let checks = verify_dirac_algebra();
    emitter.write_json("identities.json", &checks)?;
    manifest.checks = checks.iter().map(CheckRecord::from).collect();
    Ok(())
}

fn fock_verify(config: &RunConfig, emitter: &mut Emitter, manifest: &mut RunManifest) -> Result<()> {
    let f = config.fock_section()?;
    let modes = ModeSet::symmetric(f.modes, f.mass, f.length)?;
    let report = verify_fock_algebra(&modes)?;
    emitter.write_json("fock_report.json", &report)?;
    manifest.checks = report.checks.iter().map(CheckRecord::from).collect();
    if let Some(pair) = &report.pair_commutator {
        manifest.checks.push(CheckRecord::decided(
            "pair commutator routes agree",
            pair.relative_mismatch,
            1e-10,
            pair.relative_mismatch <= 1e-10,
        ));
        manifest.checks.push(CheckRecord::decided(
            "pair commutator is nonzero",
            pair.direct_frobenius,
            1e-6,
            pair.direct_frobenius > 1e-6,
        ));
    }
    Ok(())
}

fn evolve(config: &RunConfig, emitter: &mut Emitter, manifest: &mut RunManifest) -> Result<()> {
    let grid = build_grid(config)?;
    let physics = config.physics.as_ref().expect("validated");
    let integ = config.integrator.as_ref().expect("validated");
    let stride = integ.stride();
    let mut psi = build_fermion(config, grid)?;
    let mut prop = FreePropagator::new(grid, physics.m, integ.dt)?;
    let track_antisymmetry = physics.omega >= 2;

    let record_snapshot = |emitter: &mut Emitter,
                               manifest: &mut RunManifest,
                               step: usize,
                               psi: &ConfigAmplitude,
                               residual: Option<f64>|
     -> Result<()> {
        let mut rec = SnapshotRecord::new(step, psi.time(), psi.norm_sqr().sqrt());
        rec.continuity_residual = residual;
        rec.energy = Some(energy_expectation(psi));
        if track_antisymmetry {
            rec.antisymmetry = Some(psi.antisymmetry_deviation());
        }
        let name = format!("density_{step:06}.csv");
        emit_density(emitter, &name, &density(psi))?;
        rec.density_file = Some(name);
        manifest.snapshots.push(rec);
        Ok(())
    };

    record_snapshot(emitter, manifest, 0, &psi, None)?;
    for step in 1..=integ.steps {
        let snapshot = step % stride == 0 || step == integ.steps;
        let prev = snapshot.then(|| psi.clone());
        prop.step(&mut psi)?;
        if let Some(prev) = prev {
            let residual = continuity_residual(&prev, &psi);
            record_snapshot(emitter, manifest, step, &psi, Some(residual))?;
        }
    }

    let rows: Vec<Vec<f64>> = manifest
        .snapshots
        .iter()
        .map(|s| {
            vec![
                s.step as f64,
                s.time,
                s.norm,
                s.continuity_residual.unwrap_or(f64::NAN),
                s.antisymmetry.unwrap_or(f64::NAN),
                s.energy.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    emitter.write_csv(
        "norms.csv",
        &["step, t [1/m], norm, continuity_residual, antisymmetry, energy [m]; NaN where undefined"],
        rows.iter().map(|r| r.as_slice()),
    )?;

    let final_norm = manifest.snapshots.last().expect("at least one snapshot").norm;
    manifest.checks.push(CheckRecord::bounded(
        "norm drift",
        (final_norm - 1.0).abs(),
        config.tolerances.norm_drift,
    ));
    if track_antisymmetry {
        let worst = manifest
            .snapshots
            .iter()
            .filter_map(|s| s.antisymmetry)
            .fold(0.0, f64::max);
        manifest.checks.push(CheckRecord::bounded(
            "antisymmetry drift",
            worst,
            config.tolerances.antisymmetry_drift,
        ));
    }
    Ok(())
}

fn trajectories(config: &RunConfig, emitter: &mut Emitter, manifest: &mut RunManifest) -> Result<()> {
    let grid = build_grid(config)?;
    let physics = config.physics.as_ref().expect("validated");
    let integ = config.integrator.as_ref().expect("validated");
    let sampling = config.sampling_section()?;
    let tol = &config.tolerances;
    let stride = integ.stride();
    let dt = integ.dt;

    let mut psi = build_fermion(config, grid)?;
    let rho0 = density(&psi);
    let mut ens = sample_initial(&rho0, sampling.samples, sampling.seed);
    let axes = ens.axes();

    // The amplitude advances in half-steps so the integrator sees velocity
    // fields at the start, middle and end of each trajectory step; the
    // velocity is scaled only through the configured control factor.
    let mut half = FreePropagator::new(grid, physics.m, dt / 2.0)?;
    let scale = sampling.velocity_scale;
    let mut current = velocity_field(&psi, tol.node_eps).scaled(scale);

    let mut position_rows: Vec<Vec<f64>> = Vec::new();
    let record_positions = |ens: &TrajectoryEnsemble, rows: &mut Vec<Vec<f64>>| {
        for member in 0..ens.len() {
            let mut row = Vec::with_capacity(axes + 2);
            row.push(member as f64);
            row.push(ens.time());
            row.extend_from_slice(ens.position(member));
            rows.push(row);
        }
    };

    record_positions(&ens, &mut position_rows);
    manifest
        .snapshots
        .push(SnapshotRecord::new(0, psi.time(), psi.norm_sqr().sqrt()));
    for step in 1..=integ.steps {
        half.step(&mut psi)?;
        let mid = velocity_field(&psi, tol.node_eps).scaled(scale);
        half.step(&mut psi)?;
        let end = velocity_field(&psi, tol.node_eps).scaled(scale);
        let stages = VelocityStages {
            start: mem::replace(&mut current, end.clone()),
            mid,
            end,
        };
        advance_ensemble(&mut ens, &stages, dt);
        if step % stride == 0 || step == integ.steps {
            record_positions(&ens, &mut position_rows);
            manifest
                .snapshots
                .push(SnapshotRecord::new(step, psi.time(), psi.norm_sqr().sqrt()));
        }
    }

    let mut header = String::from("sample, t [1/m]");
    for k in 0..axes {
        header.push_str(&format!(", x{k} [length]"));
    }
    emitter.write_csv(
        "trajectories.csv",
        &[&header],
        position_rows.iter().map(|r| r.as_slice()),
    )?;

    let rho = density(&psi);
    let report = equivariance_test(
        &ens,
        &rho,
        tol.equivariance_factor,
        tol.baseline_reps,
        sampling.seed,
    )?;
    emitter.write_json("equivariance.json", &report)?;

    manifest.trajectories = Some(TrajectoryStats {
        samples: ens.len(),
        node_events: ens.node_events(),
        max_speed: ens.max_speed_seen(),
    });
    let mut worst: f64 = report.chi_squared / report.chi_squared_threshold;
    for (ks, thr) in report.per_axis_ks.iter().zip(&report.per_axis_threshold) {
        worst = worst.max(ks / thr);
    }
    manifest.checks.push(CheckRecord::decided(
        "equivariance",
        worst,
        1.0,
        report.pass,
    ));
    manifest.checks.push(CheckRecord::bounded(
        "speed bound",
        ens.max_speed_seen(),
        1.0 + 1e-3,
    ));
    let final_norm = psi.norm_sqr().sqrt();
    manifest.checks.push(CheckRecord::bounded(
        "norm drift",
        (final_norm - 1.0).abs(),
        tol.norm_drift,
    ));
    Ok(())
}

fn qed(config: &RunConfig, emitter: &mut Emitter, manifest: &mut RunManifest) -> Result<()> {
    let grid = build_grid(config)?;
    let physics = config.physics.as_ref().expect("validated");
    let integ = config.integrator.as_ref().expect("validated");
    let stride = integ.stride();
    let basis = build_photon_basis(&physics.photon_modes, physics.n_max, &grid)?;
    let fermion = build_fermion(config, grid)?;
    let mut psi = QedAmplitude::from_product(
        &basis,
        config.initial_photon_state(),
        &fermion,
        physics.e,
        config.memory_budget_mb,
    )?;
    let mut prop = QedPropagator::new(grid, physics.m, physics.omega, physics.e, &basis, integ.dt)?
        .with_drift_threshold(config.tolerances.norm_drift);
    let track_antisymmetry = physics.omega >= 2;

    let record_snapshot = |emitter: &mut Emitter,
                               manifest: &mut RunManifest,
                               step: usize,
                               psi: &QedAmplitude,
                               residual: Option<f64>|
     -> Result<()> {
        let mut rec = SnapshotRecord::new(step, psi.time(), psi.norm_sqr().sqrt());
        rec.continuity_residual = residual;
        rec.ledger = Some(energy_ledger(psi));
        rec.sector_probabilities = Some(psi.sector_probabilities());
        if track_antisymmetry {
            rec.antisymmetry = Some(psi.antisymmetry_deviation());
        }
        let name = format!("density_{step:06}.csv");
        emit_density(emitter, &name, &qed_density(psi))?;
        rec.density_file = Some(name);
        manifest.snapshots.push(rec);
        Ok(())
    };

    record_snapshot(emitter, manifest, 0, &psi, None)?;
    for step in 1..=integ.steps {
        let snapshot = step % stride == 0 || step == integ.steps;
        let prev = snapshot.then(|| psi.clone());
        prop.step(&mut psi)?;
        if let Some(prev) = prev {
            let residual = qed_continuity_residual(&prev, &psi);
            record_snapshot(emitter, manifest, step, &psi, Some(residual))?;
        }
    }

    let sectors = basis.dim();
    let mut sector_rows: Vec<Vec<f64>> = Vec::new();
    let mut energy_rows: Vec<Vec<f64>> = Vec::new();
    let mut norm_rows: Vec<Vec<f64>> = Vec::new();
    for s in &manifest.snapshots {
        let probs = s.sector_probabilities.as_ref().expect("recorded");
        let mut row = vec![s.step as f64, s.time];
        row.extend_from_slice(probs);
        sector_rows.push(row);
        let ledger = s.ledger.expect("recorded");
        energy_rows.push(vec![
            s.step as f64,
            s.time,
            ledger.fermion,
            ledger.photon,
            ledger.interaction,
            ledger.total(),
        ]);
        norm_rows.push(vec![
            s.step as f64,
            s.time,
            s.norm,
            s.continuity_residual.unwrap_or(f64::NAN),
        ]);
    }
    let mut sector_header = String::from("step, t [1/m]");
    for g in 0..sectors {
        sector_header.push_str(&format!(", p{g}"));
    }
    sector_header.push_str("  (photon-sector probabilities)");
    emitter.write_csv(
        "sector_norms.csv",
        &[&sector_header],
        sector_rows.iter().map(|r| r.as_slice()),
    )?;
    emitter.write_csv(
        "energy.csv",
        &["step, t [1/m], fermion [m], photon [m], interaction [m], total [m]"],
        energy_rows.iter().map(|r| r.as_slice()),
    )?;
    emitter.write_csv(
        "norms.csv",
        &["step, t [1/m], norm, continuity_residual; NaN where undefined"],
        norm_rows.iter().map(|r| r.as_slice()),
    )?;

    let final_norm = manifest.snapshots.last().expect("at least one").norm;
    manifest.checks.push(CheckRecord::bounded(
        "norm drift",
        (final_norm - 1.0).abs(),
        config.tolerances.norm_drift,
    ));
    let reference = manifest.snapshots[0].ledger.expect("recorded").total();
    if reference.abs() > 0.0 {
        let worst = manifest
            .snapshots
            .iter()
            .map(|s| (s.ledger.expect("recorded").total() - reference).abs() / reference.abs())
            .fold(0.0, f64::max);
        manifest.checks.push(CheckRecord::bounded(
            "energy conservation",
            worst,
            config.tolerances.energy_drift,
        ));
    }
    if track_antisymmetry {
        let worst = manifest
            .snapshots
            .iter()
            .filter_map(|s| s.antisymmetry)
            .fold(0.0, f64::max);
        manifest.checks.push(CheckRecord::bounded(
            "antisymmetry drift",
            worst,
            config.tolerances.antisymmetry_drift,
        ));
    }
    Ok(())
}
