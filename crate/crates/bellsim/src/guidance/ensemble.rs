//! Trajectory ensembles: Born-rule sampling and deterministic integration.
//!
//! An ensemble is M independent configurations guided by the same velocity
//! field — the deterministic surrogate for repeated experiments.  Initial
//! points are drawn from the discrete density `ρ·h^(dω)` by CDF inversion
//! with uniform jitter inside each cell.  Each member owns a counter-based
//! RNG stream derived from the master seed, so results are independent of
//! thread scheduling and byte-reproducible.  Advancement is classical RK4
//! over velocity snapshots at the step's three stage times, with multilinear
//! interpolation in space; members that wander into a density node keep
//! their last valid velocity for the substep, and every such event is
//! counted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use super::velocity::{velocity_field, VelocityField, VelocityStages};
use crate::evolve::{ConfigAmplitude, DensityField, FreePropagator};
use crate::grid::GridSpec;
use crate::numeric::wrap_periodic;
use crate::Result;

/// M guided configurations plus integrator bookkeeping.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    grid: GridSpec,
    omega: usize,
    seed: u64,
    time: f64,
    /// Wrapped positions, `M·ω·d` flat, member-major.
    positions: Vec<f64>,
    /// Unwrapped companions (no periodic jumps), for ordering diagnostics.
    unwrapped: Vec<f64>,
    /// Last valid interpolated velocity per member, reused inside nodes.
    last_velocity: Vec<f64>,
    node_events: u64,
    max_speed_seen: f64,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len() / self.axes()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of configuration axes `ω·d`.
    pub fn axes(&self) -> usize {
        self.omega * self.grid.dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Wrapped position of one member (length `ω·d`).
    pub fn position(&self, member: usize) -> &[f64] {
        let axes = self.axes();
        &self.positions[member * axes..(member + 1) * axes]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Unwrapped position of one member.
    pub fn unwrapped(&self, member: usize) -> &[f64] {
        let axes = self.axes();
        &self.unwrapped[member * axes..(member + 1) * axes]
    }

    /// Stage evaluations that landed in a masked node region.
    pub fn node_events(&self) -> u64 {
        self.node_events
    }

    /// Largest interpolated speed seen; bounded by 1 up to roundoff.
    pub fn max_speed_seen(&self) -> f64 {
        self.max_speed_seen
    }

    /// Mean wrapped position per axis.
    pub fn centroid(&self) -> Vec<f64> {
        let axes = self.axes();
        let m = self.len() as f64;
        let mut out = vec![0.0; axes];
        for chunk in self.positions.chunks(axes) {
            for (o, &x) in out.iter_mut().zip(chunk) {
                *o += x;
            }
        }
        for o in &mut out {
            *o /= m;
        }
        out
    }
}

/// Draw one configuration from the cumulative density; `cum` is the
/// inclusive prefix sum of `ρ` over flat cells.
fn draw_configuration(
    rho: &DensityField,
    cum: &[f64],
    rng: &mut ChaCha12Rng,
    out: &mut [f64],
) {
    let grid = *rho.grid();
    let total = *cum.last().unwrap();
    let target = rng.random::<f64>() * total;
    let cell = cum.partition_point(|&s| s <= target).min(cum.len() - 1);
    let h = grid.spacing();
    for (k, slot) in out.iter_mut().enumerate() {
        let idx = rho.axis_index(cell, k);
        let jitter = (rng.random::<f64>() - 0.5) * h;
        *slot = wrap_periodic(grid.coordinate(idx) + jitter, grid.length());
    }
}

pub(crate) fn cumulative_density(rho: &DensityField) -> Vec<f64> {
    let mut cum = Vec::with_capacity(rho.values().len());
    let mut acc = 0.0;
    for &v in rho.values() {
        acc += v;
        cum.push(acc);
    }
    cum
}

/// RNG for one sampling stream.  Streams `0..M` feed ensemble members;
/// baseline resampling uses streams offset by 2³².
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample `m` members from `ρ(t₀)`, deterministically in `seed`.
pub fn sample_initial(rho: &DensityField, m: usize, seed: u64) -> TrajectoryEnsemble {
    let axes = rho.omega() * rho.grid().dim();
    let cum = cumulative_density(rho);
    let mut positions = vec![0.0; m * axes];
    positions
        .par_chunks_mut(axes)
        .enumerate()
        .for_each(|(member, chunk)| {
            let mut rng = stream_rng(seed, member as u64);
            draw_configuration(rho, &cum, &mut rng, chunk);
        });
    TrajectoryEnsemble {
        grid: *rho.grid(),
        omega: rho.omega(),
        seed,
        time: 0.0,
        unwrapped: positions.clone(),
        last_velocity: vec![0.0; m * axes],
        positions,
        node_events: 0,
        max_speed_seen: 0.0,
    }
}

/// One RK4 step of length `dt` for every member, using the velocity
/// snapshots at the step's stage times.
pub fn advance_ensemble(ens: &mut TrajectoryEnsemble, stages: &VelocityStages, dt: f64) {
    let axes = ens.axes();
    let length = ens.grid.length();
    let eval = |field: &VelocityField,
                y: &[f64],
                last: &mut [f64],
                events: &mut u64,
                max_speed: &mut f64,
                out: &mut [f64]| {
        let mut wrapped = [0.0f64; 9];
        for k in 0..axes {
            wrapped[k] = wrap_periodic(y[k], length);
        }
        match field.interpolate(&wrapped[..axes], out) {
            Some(speed) => {
                *max_speed = max_speed.max(speed);
                last.copy_from_slice(out);
            }
            None => {
                *events += 1;
                out.copy_from_slice(last);
            }
        }
    };
    let (events, max_speed) = ens
        .positions
        .par_chunks_mut(axes)
        .zip(ens.unwrapped.par_chunks_mut(axes))
        .zip(ens.last_velocity.par_chunks_mut(axes))
        .map(|((pos, unwrapped), last)| {
            let mut events = 0u64;
            let mut max_speed = 0.0f64;
            let mut k1 = [0.0f64; 9];
            let mut k2 = [0.0f64; 9];
            let mut k3 = [0.0f64; 9];
            let mut k4 = [0.0f64; 9];
            let mut probe = [0.0f64; 9];
            eval(&stages.start, unwrapped, last, &mut events, &mut max_speed, &mut k1[..axes]);
            for k in 0..axes {
                probe[k] = unwrapped[k] + 0.5 * dt * k1[k];
            }
            eval(&stages.mid, &probe[..axes], last, &mut events, &mut max_speed, &mut k2[..axes]);
            for k in 0..axes {
                probe[k] = unwrapped[k] + 0.5 * dt * k2[k];
            }
            eval(&stages.mid, &probe[..axes], last, &mut events, &mut max_speed, &mut k3[..axes]);
            for k in 0..axes {
                probe[k] = unwrapped[k] + dt * k3[k];
            }
            eval(&stages.end, &probe[..axes], last, &mut events, &mut max_speed, &mut k4[..axes]);
            for k in 0..axes {
                unwrapped[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
                pos[k] = wrap_periodic(unwrapped[k], length);
            }
            (events, max_speed)
        })
        .reduce(|| (0u64, 0.0f64), |a, b| (a.0 + b.0, a.1.max(b.1)));
    ens.node_events += events;
    ens.max_speed_seen = ens.max_speed_seen.max(max_speed);
    ens.time += dt;
}

/// Amplitude evolution interleaved with trajectory integration: the
/// amplitude advances in half-steps so velocity snapshots exist at every
/// RK4 stage time.
pub struct GuidedEvolution {
    psi: ConfigAmplitude,
    half: FreePropagator,
    dt: f64,
    node_eps: f64,
    current: VelocityField,
}

impl GuidedEvolution {
    pub fn new(psi: ConfigAmplitude, dt: f64, node_eps: f64) -> Result<Self> {
        let half = FreePropagator::new(*psi.grid(), psi.mass(), dt / 2.0)?;
        let current = velocity_field(&psi, node_eps);
        Ok(GuidedEvolution {
            psi,
            half,
            dt,
            node_eps,
            current,
        })
    }

    pub fn psi(&self) -> &ConfigAmplitude {
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
        let mid = velocity_field(&self.psi, self.node_eps);
        self.half.step(&mut self.psi)?;
        let end = velocity_field(&self.psi, self.node_eps);
        let stages = VelocityStages {
            start: std::mem::replace(&mut self.current, end.clone()),
            mid,
            end,
        };
        advance_ensemble(ens, &stages, self.dt);
        Ok(())
    }
}
