//! Statistical check that a guided ensemble still looks |Ψ|²-distributed.
//!
//! Equivariance is the load-bearing property of the guidance law: an
//! ensemble prepared from `|Ψ(t₀)|²` and transported along trajectories
//! must remain `|Ψ(t)|²`-distributed at any later time.  We test this per
//! configuration axis with a Kolmogorov–Smirnov statistic against the
//! exact piecewise-linear CDF of the sampled marginal (density weight per
//! cell, uniform jitter within), plus one joint chi-squared statistic on a
//! coarsened occupancy histogram.  Thresholds are calibrated empirically:
//! fresh ensembles drawn directly from the target density give a null
//! distribution of each statistic, and the test passes when the guided
//! ensemble's statistics stay below `factor` times the null's 95th
//! percentile.  That makes the check self-calibrating — it needs no
//! asymptotic distribution theory and automatically accounts for the
//! discreteness of the sampler.

use rand::Rng;
use rayon::prelude::*;

use super::ensemble::{cumulative_density, stream_rng, TrajectoryEnsemble};
use crate::evolve::DensityField;
use crate::numeric::wrap_periodic;
use crate::{Error, Result};

/// Offset separating baseline RNG streams from member streams.
const BASELINE_STREAM_BASE: u64 = 1 << 32;

/// Minimum ensemble size for the statistics to be meaningful.
pub const MIN_EQUIVARIANCE_SAMPLES: usize = 1000;

/// Outcome of the distribution comparison.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EquivarianceReport {
    pub sample_count: usize,
    /// KS statistic per configuration axis.
    pub per_axis_ks: Vec<f64>,
    /// `factor ×` null 95th percentile, per axis.
    pub per_axis_threshold: Vec<f64>,
    pub chi_squared: f64,
    pub chi_squared_threshold: f64,
    /// Multiplier applied to the null percentile.
    pub factor: f64,
    /// Fresh-sample replications used to calibrate the null.
    pub baseline_reps: usize,
    pub pass: bool,
}

/// Exact CDF of one sampled axis marginal, evaluated at wrapped position
/// `x`.  Sampling lands a draw in cell `i` with probability `p_i` and then
/// jitters uniformly over `[x_i − h/2, x_i + h/2)`; shifting to
/// `y = (x + h/2) mod L` makes cell `i` own exactly `[i·h, (i+1)·h)`, so
/// the CDF is piecewise linear in `y` with slope `p_i/h`.
fn marginal_cdf(weights: &[f64], h: f64, length: f64, x: f64) -> f64 {
    let y = wrap_periodic(x + 0.5 * h, length);
    let i = ((y / h) as usize).min(weights.len() - 1);
    let before: f64 = weights[..i].iter().sum();
    before + weights[i] * (y - i as f64 * h) / h
}

/// KS distance between an empirical sample (any order) and the sampled
/// marginal's exact CDF.
fn ks_statistic(values: &mut [f64], weights: &[f64], h: f64, length: f64) -> f64 {
    let n = values.len() as f64;
    for v in values.iter_mut() {
        *v = wrap_periodic(*v + 0.5 * h, length);
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mut worst = 0.0f64;
    for (rank, &y) in values.iter().enumerate() {
        // Undo the shift: marginal_cdf re-applies it.
        let model = marginal_cdf(weights, h, length, y - 0.5 * h);
        let lo = rank as f64 / n;
        let hi = (rank + 1) as f64 / n;
        worst = worst.max((model - lo).abs()).max((hi - model).abs());
    }
    worst
}

/// Cell weights (probability per cell) of one axis marginal.
fn axis_weights(rho: &DensityField, axis: usize) -> Vec<f64> {
    let marginal = rho.axis_marginal(axis);
    let h = rho.grid().spacing();
    let total: f64 = marginal.iter().sum::<f64>() * h;
    marginal.iter().map(|&v| v * h / total).collect()
}

/// Histogram geometry for the joint chi-squared: per-axis coarsening to at
/// most 256 joint bins, power-of-two so cells nest exactly.
struct JointBins {
    axes: usize,
    bins_per_axis: usize,
    cells_per_bin: usize,
}

impl JointBins {
    fn new(points: usize, axes: usize) -> JointBins {
        let cap = (256f64.powf(1.0 / axes as f64)).floor() as usize;
        let mut bins = 1usize;
        while bins * 2 <= points.min(cap) {
            bins *= 2;
        }
        JointBins {
            axes,
            bins_per_axis: bins,
            cells_per_bin: points / bins,
        }
    }

    fn total(&self) -> usize {
        self.bins_per_axis.pow(self.axes as u32)
    }

    fn bin_of(&self, position: &[f64], h: f64, length: f64) -> usize {
        let mut bin = 0usize;
        let mut stride = 1usize;
        for &x in position {
            let y = wrap_periodic(x + 0.5 * h, length);
            let cell = ((y / h) as usize).min(self.bins_per_axis * self.cells_per_bin - 1);
            bin += (cell / self.cells_per_bin) * stride;
            stride *= self.bins_per_axis;
        }
        bin
    }
}

/// Expected counts per joint bin under the sampled density, from the full
/// configuration-space cell weights.
fn expected_counts(rho: &DensityField, bins: &JointBins, samples: usize) -> Vec<f64> {
    let grid = rho.grid();
    let axes = rho.omega() * grid.dim();
    let measure = rho.cell_measure();
    let total: f64 = rho.values().iter().sum::<f64>() * measure;
    let mut expected = vec![0.0; bins.total()];
    for (c, &v) in rho.values().iter().enumerate() {
        let mut bin = 0usize;
        let mut stride = 1usize;
        for k in 0..axes {
            bin += (rho.axis_index(c, k) / bins.cells_per_bin) * stride;
            stride *= bins.bins_per_axis;
        }
        expected[bin] += v * measure / total * samples as f64;
    }
    expected
}

/// Pearson statistic with sparse-bin pooling: bins expecting fewer than 10
/// counts are merged into one pooled bin so the statistic is stable.
fn chi_squared(observed: &[u64], expected: &[f64]) -> f64 {
    let mut stat = 0.0;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 10.0 {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            let d = o as f64 - e;
            stat += d * d / e;
        }
    }
    if pooled_exp > 0.0 {
        let d = pooled_obs - pooled_exp;
        stat += d * d / pooled_exp;
    }
    stat
}

struct AxisView<'a> {
    positions: &'a [f64],
    axes: usize,
}

impl AxisView<'_> {
    fn column(&self, axis: usize) -> Vec<f64> {
        self.positions
            .iter()
            .skip(axis)
            .step_by(self.axes)
            .copied()
            .collect()
    }
}

fn statistics_of(
    positions: &[f64],
    axes: usize,
    weights: &[Vec<f64>],
    bins: &JointBins,
    expected: &[f64],
    h: f64,
    length: f64,
) -> (Vec<f64>, f64) {
    let view = AxisView { positions, axes };
    let ks: Vec<f64> = (0..axes)
        .map(|k| {
            let mut column = view.column(k);
            ks_statistic(&mut column, &weights[k], h, length)
        })
        .collect();
    let mut observed = vec![0u64; bins.total()];
    for member in positions.chunks(axes) {
        observed[bins.bin_of(member, h, length)] += 1;
    }
    (ks, chi_squared(&observed, expected))
}

/// Compare a transported ensemble against a target density.
///
/// `factor` scales the self-calibrated null 95th-percentile thresholds;
/// `baseline_reps` fresh replications build the null.  Requires at least
/// [`MIN_EQUIVARIANCE_SAMPLES`] members.
pub fn equivariance_test(
    ens: &TrajectoryEnsemble,
    rho: &DensityField,
    factor: f64,
    baseline_reps: usize,
    seed: u64,
) -> Result<EquivarianceReport> {
    let m = ens.len();
    if m < MIN_EQUIVARIANCE_SAMPLES {
        return Err(Error::invalid(
            "samples",
            "equivariance statistics need at least 1000 ensemble members",
            m,
        ));
    }
    if baseline_reps < 20 {
        return Err(Error::invalid(
            "baseline_reps",
            "null calibration needs at least 20 replications",
            baseline_reps,
        ));
    }
    if !(factor.is_finite() && factor >= 1.0) {
        return Err(Error::invalid(
            "factor",
            "threshold multiplier must be finite and at least 1",
            factor,
        ));
    }
    let grid = *rho.grid();
    let axes = rho.omega() * grid.dim();
    if ens.axes() != axes {
        return Err(Error::invalid(
            "ensemble",
            "ensemble and density configuration spaces differ",
            format!("{} vs {} axes", ens.axes(), axes),
        ));
    }
    let h = grid.spacing();
    let length = grid.length();
    let weights: Vec<Vec<f64>> = (0..axes).map(|k| axis_weights(rho, k)).collect();
    let bins = JointBins::new(grid.points(), axes);
    let expected = expected_counts(rho, &bins, m);

    // Null distribution: fresh draws from ρ with dedicated RNG streams.
    let cum = cumulative_density(rho);
    let null: Vec<(Vec<f64>, f64)> = (0..baseline_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, BASELINE_STREAM_BASE + rep as u64);
            let mut positions = vec![0.0; m * axes];
            for chunk in positions.chunks_mut(axes) {
                let total = *cum.last().unwrap();
                let target = rng.random::<f64>() * total;
                let cell = cum.partition_point(|&s| s <= target).min(cum.len() - 1);
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let idx = rho.axis_index(cell, k);
                    let jitter = (rng.random::<f64>() - 0.5) * h;
                    *slot = wrap_periodic(grid.coordinate(idx) + jitter, length);
                }
            }
            statistics_of(&positions, axes, &weights, &bins, &expected, h, length)
        })
        .collect();

    let percentile = |mut samples: Vec<f64>| -> f64 {
        samples.sort_by(|a, b| a.total_cmp(b));
        let rank = ((samples.len() as f64) * 0.95).ceil() as usize - 1;
        samples[rank.min(samples.len() - 1)]
    };
    let per_axis_threshold: Vec<f64> = (0..axes)
        .map(|k| factor * percentile(null.iter().map(|(ks, _)| ks[k]).collect()))
        .collect();
    let chi_squared_threshold = factor * percentile(null.iter().map(|&(_, c)| c).collect());

    let (per_axis_ks, chi) =
        statistics_of(ens.positions(), axes, &weights, &bins, &expected, h, length);
    let pass = per_axis_ks
        .iter()
        .zip(&per_axis_threshold)
        .all(|(s, t)| s <= t)
        && chi <= chi_squared_threshold;
    Ok(EquivarianceReport {
        sample_count: m,
        per_axis_ks,
        per_axis_threshold,
        chi_squared: chi,
        chi_squared_threshold,
        factor,
        baseline_reps,
        pass,
    })
}
