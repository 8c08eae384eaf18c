//! Strided one-dimensional FFTs over flattened configuration tensors.
//!
//! Every tensor in this crate is stored flat with some axis of length `n`
//! appearing at a fixed stride, so a single gather–transform–scatter routine
//! serves the free stepper, the spectral divergence and the photon-dressed
//! stepper alike.  Forward transforms carry no prefactor; inverse transforms
//! carry `1/n`, so the round trip is the identity.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Cached forward/inverse FFT plans for one axis length.
pub(crate) struct AxisFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl AxisFft {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        AxisFft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Transform every length-`n` line lying along the axis with the given
    /// `stride`.  The flat layout must factor as `(outer, axis, inner)` with
    /// `inner` of size `stride`, which holds for any single axis of a
    /// row-major or column-major tensor.
    pub(crate) fn transform(&self, data: &mut [Complex64], stride: usize, forward: bool) {
        let n = self.n;
        let block = n * stride;
        assert_eq!(data.len() % block, 0, "axis does not tile the tensor");
        let plan = if forward { &self.forward } else { &self.inverse };
        let scale = if forward { 1.0 } else { 1.0 / n as f64 };
        data.par_chunks_mut(block).for_each_init(
            || vec![Complex64::ZERO; n],
            |line, chunk| {
                for inner in 0..stride {
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = chunk[inner + k * stride];
                    }
                    plan.process(line);
                    for (k, value) in line.iter().enumerate() {
                        chunk[inner + k * stride] = value * scale;
                    }
                }
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_is_identity() {
        let axis = AxisFft::new(8);
        // Tensor of shape (3, 8, 5) flattened with the middle axis strided.
        let original: Vec<Complex64> = (0..3 * 8 * 5)
            .map(|i| Complex64::new(i as f64, (i * i % 7) as f64))
            .collect();
        let mut data = original.clone();
        axis.transform(&mut data, 5, true);
        axis.transform(&mut data, 5, false);
        for (a, b) in data.iter().zip(&original) {
            assert_relative_eq!(a.re, b.re, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_its_bin() {
        let n = 16;
        let axis = AxisFft::new(n);
        // e^{2πi·3k/n} along the axis must produce a lone spike at bin 3.
        let mut data: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * k as f64 / n as f64))
            .collect();
        axis.transform(&mut data, 1, true);
        for (bin, value) in data.iter().enumerate() {
            let expect = if bin == 3 { n as f64 } else { 0.0 };
            assert!((value.norm() - expect).abs() < 1e-10, "bin {bin}: {value}");
        }
    }
}
