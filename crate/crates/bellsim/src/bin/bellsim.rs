//! Command-line driver: five experiments, JSON configs in, CSV/JSON
//! artifacts and a hashed manifest out.
//!
//! Exit codes: `0` — all embedded checks passed; `1` — the run completed
//! with failing checks or aborted numerically (see the manifest); `2` —
//! the run could not start (bad arguments, unparsable or invalid config,
//! unwritable output directory).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bellsim::runner::{
    self, load_config, ExperimentKind, FockSection, RunConfig, RunManifest, RunStatus,
};
use bellsim::Error;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");
// Keep the advertised schema number in lockstep with the manifest writer.
const _: () = assert!(runner::FORMAT_VERSION == 1);

#[derive(Parser)]
#[command(
    name = "bellsim",
    version = VERSION,
    about = "Pilot-wave laboratory for the lattice Dirac field",
    propagate_version = true
)]
struct Cli {
    /// Output directory (overrides the config's `output_dir`)
    #[arg(long, global = true, env = "BELLSIM_OUT_DIR")]
    out: Option<PathBuf>,

    /// Worker threads for the parallel kernels (default: all cores)
    #[arg(long, global = true, env = "BELLSIM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every Dirac matrix identity and spinor relation
    CheckAlgebra,
    /// Check second-quantised operator theorems on a truncated mode set
    FockVerify {
        /// Momentum cutoff: modes −n..=n for both spins and energy signs
        #[arg(long)]
        modes: usize,
        /// Fermion mass (natural units)
        #[arg(long)]
        mass: f64,
        /// Periodic box length
        #[arg(long)]
        length: f64,
        /// Also print the full report to stdout ("json")
        #[arg(long, value_parser = ["json"])]
        report: Option<String>,
    },
    /// Evolve a configuration-space wave function, emitting density snapshots
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate a guided ensemble through the velocity field and test
    /// that it stays |Ψ|²-distributed
    Trajectories {
        #[arg(long)]
        config: PathBuf,
        /// Override sampling.M from the config
        #[arg(long)]
        samples: Option<usize>,
        /// Override sampling.seed from the config
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Photon-coupled run: sector norms, γ-summed densities, energy ledger
    Qed {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error if a pool already exists (tests, repeat calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match execute(cli.command, cli.out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Check that a loaded config drives the experiment the subcommand names.
fn expect_kind(config: &RunConfig, kind: ExperimentKind) -> Result<(), Error> {
    if config.experiment != kind {
        return Err(Error::Config {
            path: "experiment".into(),
            message: format!(
                "config describes `{}` but the `{}` subcommand was invoked",
                config.experiment.name(),
                kind.name()
            ),
        });
    }
    Ok(())
}

fn execute(command: Command, out: Option<PathBuf>) -> Result<ExitCode, Error> {
    let mut print_report_json = false;
    let mut config = match command {
        Command::CheckAlgebra => RunConfig::bare(ExperimentKind::CheckAlgebra),
        Command::FockVerify {
            modes,
            mass,
            length,
            report,
        } => {
            print_report_json = report.as_deref() == Some("json");
            let mut config = RunConfig::bare(ExperimentKind::FockVerify);
            config.fock = Some(FockSection {
                modes,
                mass,
                length,
            });
            config
        }
        Command::Evolve { config } => {
            let config = load_config(&config)?;
            expect_kind(&config, ExperimentKind::Evolve)?;
            config
        }
        Command::Trajectories {
            config,
            samples,
            seed,
        } => {
            let mut config = load_config(&config)?;
            expect_kind(&config, ExperimentKind::Trajectories)?;
            if samples.is_some() || seed.is_some() {
                let sampling = config.sampling.as_mut().ok_or_else(|| Error::Config {
                    path: "sampling".into(),
                    message: "cannot override samples/seed: config has no sampling section".into(),
                })?;
                if let Some(samples) = samples {
                    sampling.samples = samples;
                }
                if let Some(seed) = seed {
                    sampling.seed = seed;
                }
            }
            config
        }
        Command::Qed { config } => {
            let config = load_config(&config)?;
            expect_kind(&config, ExperimentKind::Qed)?;
            config
        }
    };
    if let Some(out) = out {
        config.output_dir = Some(out);
    }
    let out_dir = runner::resolve_output_dir(&config);
    let manifest = runner::run(&config)?;
    if print_report_json {
        // Machine-readable mode: stdout carries the report alone.
        let report = std::fs::read_to_string(out_dir.join("fock_report.json"))?;
        print!("{report}");
        eprintln!("manifest: {}", out_dir.join("manifest.json").display());
    } else {
        print_summary(&manifest);
        println!("manifest: {}", out_dir.join("manifest.json").display());
    }
    Ok(match manifest.status {
        RunStatus::Pass => ExitCode::SUCCESS,
        RunStatus::Fail | RunStatus::Error => ExitCode::from(1),
    })
}

fn print_summary(manifest: &RunManifest) {
    if !manifest.checks.is_empty() {
        println!("{:<56} {:>13} {:>10} {:>7}", "check", "value", "threshold", "result");
        for check in &manifest.checks {
            println!(
                "{:<56} {:>13.4e} {:>10.1e} {:>7}",
                check.name,
                check.value,
                check.threshold,
                if check.pass { "PASS" } else { "FAIL" }
            );
        }
    }
    if let Some(stats) = &manifest.trajectories {
        println!(
            "ensemble: {} samples, {} node events, max speed {:.6}",
            stats.samples, stats.node_events, stats.max_speed
        );
    }
    match manifest.status {
        RunStatus::Pass => println!("status: pass"),
        RunStatus::Fail => println!("status: FAIL"),
        RunStatus::Error => println!(
            "status: ERROR — {}",
            manifest.error.as_deref().unwrap_or("unknown")
        ),
    }
}
