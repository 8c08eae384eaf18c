//! Periodic spatial grids and their momentum duals.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A cubic periodic grid: `d` axes, `N` points per axis, box length `L`,
/// spacing `h = L/N`, wavenumbers `2πn/L` with `n ∈ [−N/2, N/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    length: f64,
}

impl GridSpec {
    /// `dim ∈ {1,2,3}`, `points` a power of two ≥ 8, `length > 0`.
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid("grid dimension", "must be 1, 2 or 3", dim));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::invalid(
                "grid points",
                "must be a power of two >= 8",
                points,
            ));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid("box length", "must be finite and > 0", length));
        }
        Ok(GridSpec {
            dim,
            points,
            length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `h = L/N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Number of spatial cells `N^d`.
    pub fn cells(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Coordinate of point `i` along one axis: `i·h`, `i ∈ [0, N)`.
    pub fn coordinate(&self, i: usize) -> f64 {
        debug_assert!(i < self.points);
        i as f64 * self.spacing()
    }

    /// Signed momentum index for FFT bin `i`: `n ∈ [−N/2, N/2)`.
    pub fn momentum_index(&self, i: usize) -> i64 {
        debug_assert!(i < self.points);
        if i < self.points / 2 {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    /// Wavenumber of FFT bin `i`: `2πn/L`.
    pub fn wavenumber(&self, i: usize) -> f64 {
         2.0 * std::f64::consts::PI * self.momentum_index(i) as f64 / self.length
    }

    /// Decompose a flat cell index into per-axis indices (axis 0 fastest).
    pub fn unravel(&self, cell: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.dim);
        let mut rest = cell;
        for slot in out.iter_mut() {
            *slot = rest % self.points;
            rest /= self.points;
        }
        debug_assert_eq!(rest, 0);
    }

    /// Flatten per-axis indices (axis 0 fastest).
    pub fn ravel(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dim);
        let mut cell = 0;
        for &i in idx.iter().rev() {
            debug_assert!(i < self.points);
            cell = cell * self.points + i;
        }
        cell
    }

    /// Index of the grid point at coordinate `x`, if `x` lies on the grid to
    /// within `1e−9·h`.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let h = self.spacing();
        let wrapped = crate::numeric::wrap_periodic(x, self.length);
        let i = (wrapped / h).round() as usize % self.points;
        if (wrapped - i as f64 * h).abs() > 1e-9 * h && (wrapped - self.length).abs() > 1e-9 * h {
            return Err(Error::OffGrid {
                x,
                spacing: h,
                length: self.length,
            });
        }
        Ok(i)
    }
}
