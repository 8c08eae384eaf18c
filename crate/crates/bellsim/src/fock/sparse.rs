//! Hand-rolled sparse complex matrices for the truncated Fock space.
//!
//! Dimensions stay ≤ 2^14, but ladder-operator algebra produces matrices with
//! a few entries per row where dense storage would waste most of the space and
//! all of the time.  Row-major lists of `(column, value)` pairs with a dense
//! scratch accumulator for products cover everything the verification suite
//! needs.  Entries that cancel exactly are dropped, so identities like the
//! canonical anticommutation relations can be checked entry-for-entry.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse complex matrix, row-major, columns sorted within each row.
#[derive(Clone, Debug)]
pub struct FockOperator {
    dim: usize,
    rows: Vec<Vec<(u32, Complex64)>>,
}

impl FockOperator {
    pub fn zeros(dim: usize) -> Self {
        FockOperator {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut rows = Vec::with_capacity(dim);
        for r in 0..dim {
            rows.push(vec![(r as u32, Complex64::new(1.0, 0.0))]);
        }
        FockOperator { dim, rows }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut op = FockOperator::zeros(diag.len());
        for (r, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                op.rows[r].push((r as u32, Complex64::new(d, 0.0)));
            }
        }
        op
    }

    /// Build from unsorted (row, col, value) triplets; duplicate positions sum.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut rows: Vec<Vec<(u32, Complex64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            rows[r].push((c as u32, v));
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != ZERO);
            *row = merged;
        }
        FockOperator { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.rows[r];
        match row.binary_search_by_key(&(c as u32), |&(col, _)| col) {
            Ok(k) => row[k].1,
            Err(_) => ZERO,
        }
    }

    pub fn row(&self, r: usize) -> &[(u32, Complex64)] {
        &self.rows[r]
    }

    pub fn scale(&self, z: Complex64) -> Self {
        if z == ZERO {
            return FockOperator::zeros(self.dim);
        }
        let mut out = self.clone();
        for row in &mut out.rows {
            for e in row.iter_mut() {
                e.1 *= z;
            }
        }
        out
    }

    /// `self + coeff · other`, exact-zero results dropped.
    pub fn add_scaled(&self, coeff: Complex64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut rows = Vec::with_capacity(self.dim);
        for (ra, rb) in self.rows.iter().zip(other.rows.iter()) {
            let mut row = Vec::with_capacity(ra.len() + rb.len());
            let (mut i, mut j) = (0, 0);
            while i < ra.len() || j < rb.len() {
                let ca = ra.get(i).map(|e| e.0).unwrap_or(u32::MAX);
                let cb = rb.get(j).map(|e| e.0).unwrap_or(u32::MAX);
                if ca < cb {
                    row.push(ra[i]);
                    i += 1;
                } else if cb < ca {
                    row.push((cb, coeff * rb[j].1));
                    j += 1;
                } else {
                    let v = ra[i].1 + coeff * rb[j].1;
                    if v != ZERO {
                        row.push((ca, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            rows.push(row);
        }
        FockOperator {
            dim: self.dim,
            rows,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }

    /// Matrix product with a dense scratch accumulator per row.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let dim = self.dim;
        let mut scratch = vec![ZERO; dim];
        let mut touched: Vec<u32> = Vec::new();
        let mut rows = Vec::with_capacity(dim);
        for ra in &self.rows {
            for &(k, va) in ra {
                for &(c, vb) in &other.rows[k as usize] {
                    let slot = &mut scratch[c as usize];
                    if *slot == ZERO {
                        touched.push(c);
                    }
                    *slot += va * vb;
                }
            }
            touched.sort_unstable();
            let mut row = Vec::with_capacity(touched.len());
            for &c in &touched {
                let v = scratch[c as usize];
                scratch[c as usize] = ZERO;
                if v != ZERO {
                    row.push((c, v));
                }
            }
            touched.clear();
            rows.push(row);
        }
        FockOperator { dim, rows }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Vec<(u32, Complex64)>> = vec![Vec::new(); self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                rows[c as usize].push((r as u32, v.conj()));
            }
        }
        // Source rows are scanned in order, so each output row is sorted.
        FockOperator {
            dim: self.dim,
            rows,
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|&(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::numeric::csum(self.rows.iter().flatten().map(|&(_, v)| v.norm_sqr())).sqrt()
    }

    /// Largest entry of `self − self†`; zero iff hermitian.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs_entry()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = ZERO;
            for &(c, v) in row {
                acc += v * x[c as usize];
            }
            y[r] = acc;
        }
    }

    /// Apply to a basis state: returns the (column) vector `A e_i` sparsely.
    pub fn apply_basis_state(&self, i: usize) -> Vec<(usize, Complex64)> {
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if let Ok(k) = row.binary_search_by_key(&(i as u32), |&(c, _)| c) {
                out.push((r, row[k].1));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c as usize)] = v;
            }
        }
        m
    }

    /// Dense copy of the listed columns, in order: the matrix `A P` where `P`
    /// embeds the span of those basis states.
    pub fn columns_dense(&self, cols: &[usize]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, cols.len());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                if let Ok(j) = cols.binary_search(&(c as usize)) {
                    m[(r, j)] = v;
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_matches_dense() {
        let a = FockOperator::from_triplets(
            3,
            [
                (0, 1, c(1.0, 2.0)),
                (1, 2, c(0.0, -1.0)),
                (2, 0, c(3.0, 0.0)),
                (2, 2, c(1.0, 1.0)),
            ],
        );
        let b = FockOperator::from_triplets(
            3,
            [(0, 0, c(2.0, 0.0)), (1, 0, c(0.0, 1.0)), (2, 1, c(1.0, -1.0))],
        );
        let got = a.mul(&b).to_dense();
        let want = a.to_dense() * b.to_dense();
        assert!((got - want).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn adjoint_matches_dense() {
        let a = FockOperator::from_triplets(
            3,
            [(0, 1, c(1.0, 2.0)), (2, 0, c(0.0, -3.0)), (2, 2, c(1.0, 1.0))],
        );
        let got = a.adjoint().to_dense();
        let want = a.to_dense().adjoint();
        assert!((got - want).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn exact_cancellation_drops_entries() {
        let a = FockOperator::from_triplets(2, [(0, 0, c(1.5, 0.0))]);
        let b = a.clone();
        assert!(a.sub(&b).is_zero());
        assert_eq!(a.sub(&b).nnz(), 0);
    }

    #[test]
    fn duplicate_triplets_sum() {
        let a = FockOperator::from_triplets(2, [(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0))]);
        assert!(a.is_zero());
    }

    #[test]
    fn hermiticity_deviation_detects_asymmetry() {
        let h = FockOperator::from_triplets(2, [(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]);
        assert_eq!(h.hermiticity_deviation(), 0.0);
        let broken = FockOperator::from_triplets(2, [(0, 1, c(0.0, 1.0))]);
        assert!(broken.hermiticity_deviation() > 0.9);
    }

    #[test]
    fn columns_dense_selects() {
        let a = FockOperator::identity(4).scale(c(2.0, 0.0));
        let m = a.columns_dense(&[1, 3]);
        assert_eq!(m.ncols(), 2);
        assert_eq!(m[(1, 0)], c(2.0, 0.0));
        assert_eq!(m[(3, 1)], c(2.0, 0.0));
        assert_eq!(m[(0, 0)], ZERO);
    }
}
