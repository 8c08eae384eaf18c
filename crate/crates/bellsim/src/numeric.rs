//! Small numerical utilities: compensated reductions, periodic wrapping and
//! matrix exponentials for modest dense matrices.
//!
//! Emitted scalars (norms, totals, residuals) are reduced with Neumaier
//! compensated summation in a fixed serial order so that repeated runs are
//! byte-for-byte reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Streaming Neumaier (improved Kahan) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of `f64`.
pub fn csum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated squared 2-norm of a complex slice.
pub fn norm_sqr(data: &[Complex64]) -> f64 {
    csum(data.iter().map(|z| z.norm_sqr()))
}

/// `sin(x)/x`, continuous at the origin.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Map `x` into `[0, length)`.
#[inline]
pub fn wrap_periodic(x: f64, length: f64) -> f64 {
    let y = x - length * (x / length).floor();
    // `floor` can round such that y == length for x slightly below a multiple.
    if y >= length {
        y - length
    } else {
        y
    }
}

/// `exp(A)` for a general (possibly non-normal) dense complex matrix, by
/// scaling and squaring with a truncated Taylor series.  Intended for small
/// matrices; accuracy is near machine precision for well-scaled inputs.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = a
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
        * n as f64;
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = a.map(|z| z / Complex64::new(2f64.powi(squarings as i32), 0.0));

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=16 {
        term = (&term * &scaled).map(|z| z / Complex64::new(k as f64, 0.0));
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-i t H)` for hermitian `H`, via the spectral decomposition.  The
/// result is exactly unitary up to the accuracy of the eigensolver.
pub fn expm_i_hermitian(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut phases = DMatrix::zeros(n, n);
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        phases[(k, k)] = Complex64::from_polar(1.0, -t * lambda);
    }
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}
